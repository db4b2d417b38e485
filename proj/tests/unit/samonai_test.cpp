#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <random>
#include <set>

#include "crlm/samonai.hpp"
#include "oracles/samonai_oracles.hpp"
#include "support.hpp"

using namespace crlm;
using namespace crlm::samonai;
using namespace crlm::oracles;

namespace {

Image2D filled(std::int64_t rows, std::int64_t cols, double v) { return Image2D(rows, cols, v); }

// Segmenter stub: a constant plane chosen from the slice's first pixel.
class PlaneStub final : public Segmenter2D {
 public:
  SegmenterInfo info() const override { return {"stub", true}; }
  LogitMap2D segment(const Image2D& img, std::span<const PromptPoint>) const override {
    return LogitMap2D(img.rows(), img.cols(), img(0, 0) == 0.0 ? 1.0 : -1.0);
  }
};

class EmptyStub final : public Segmenter2D {
 public:
  SegmenterInfo info() const override { return {"empty", true}; }
  LogitMap2D segment(const Image2D& img, std::span<const PromptPoint>) const override {
    return LogitMap2D(img.rows(), img.cols(), -1.0);
  }
};

}  // namespace

TEST(Costs, IntensityExamples) {
  Image2D img(1, 3);
  img(0, 0) = 3, img(0, 1) = 3, img(0, 2) = 3;
  std::vector<Pixel> P{{0, 0}, {0, 1}, {0, 2}};
  EXPECT_EQ(intensity_cost({0, 1}, P, img), 0.0);
  img(0, 0) = 1, img(0, 1) = 2, img(0, 2) = 9;
  EXPECT_EQ(intensity_cost({0, 2}, P, img), 7.0);
  img(0, 0) = 1, img(0, 1) = 3;
  std::vector<Pixel> two{{0, 0}, {0, 1}};
  EXPECT_EQ(intensity_cost({0, 0}, two, img), 1.0);
  EXPECT_THROW(intensity_cost({0, 2}, two, img), InvalidArgument);
}

TEST(Costs, LocationExamples) {
  std::vector<Pixel> one{{3, 4}};
  EXPECT_EQ(location_cost({3, 4}, one), 0.0);
  std::vector<Pixel> two{{0, 0}, {2, 0}};
  EXPECT_EQ(location_cost({0, 0}, two), 1.0);
  std::mt19937_64 rng(3);
  const auto P = random_candidates(rng, 40, 40, 20);
  double r = 0, c = 0;
  for (Pixel p : P) r += static_cast<double>(p.row), c += static_cast<double>(p.col);
  r /= 20, c /= 20;
  for (Pixel p : P) EXPECT_NEAR(location_cost(p, P), std::hypot(p.row - r, p.col - c), 1e-12);
}

TEST(Costs, HomogeneityExamples) {
  EXPECT_EQ(homogeneity_cost({10, 10}, filled(30, 30, 4.0)), 0.0);
  EXPECT_EQ(homogeneity_cost({0, 0}, filled(30, 30, 4.0)), 0.0);
  Image2D board(11, 11);
  for (int r = 0; r < 11; ++r)
    for (int c = 0; c < 11; ++c) board(r, c) = (r + c) % 2 == 0 ? 1.0 : 0.0;
  const double mu = 61.0 / 121.0;
  EXPECT_NEAR(homogeneity_cost({5, 5}, board), std::sqrt(mu * (1 - mu)), 1e-12);
  EXPECT_NEAR(homogeneity_cost({5, 5}, board), 0.499983, 1e-5);
}

TEST(Costs, HomogeneityZeroIffConstantWindow) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    Image2D img = random_image(rng, 15, 15, true);
    const Pixel p{static_cast<std::int64_t>(rng() % 15), static_cast<std::int64_t>(rng() % 15)};
    const double h = homogeneity_cost(p, img, 3);
    std::set<double> vals;
    for (std::int64_t r = p.row - 1; r <= p.row + 1; ++r)
      for (std::int64_t c = p.col - 1; c <= p.col + 1; ++c)
        if (img.contains({r, c})) vals.insert(img(r, c));
    EXPECT_GE(h, 0.0);
    EXPECT_EQ(h == 0.0, vals.size() == 1);
  }
  EXPECT_THROW(homogeneity_cost({0, 0}, filled(3, 3, 0), 4), InvalidArgument);
}

TEST(Costs, TotalCostExamples) {
  const Image2D img = filled(20, 20, 1.0);
  std::vector<Pixel> one{{7, 7}};
  EXPECT_EQ(total_cost({7, 7}, one, img, {}), 0.0);

  // middle candidate: intensity outlier (1), at the centroid (0), and half the
  // window sd of the right-hand candidate (0.5)
  Image2D g(1, 41, 0.0);
  std::vector<Pixel> P{{0, 0}, {0, 20}, {0, 40}};
  g(0, 20) = 10.0;
  const double sd_mid = 10.0 * std::sqrt(10.0) / 11.0;  // one 10 among 11
  g(0, 38) = 2.0 * sd_mid / (std::sqrt(5.0) / 6.0);     // one spike among 6 (clipped window)
  const auto b = evaluate_costs(P, g, {1, 1, 2});
  EXPECT_NEAR(b.homogeneity[1], sd_mid, 1e-12);
  EXPECT_NEAR(b.homogeneity[2], 2 * sd_mid, 1e-12);
  EXPECT_NEAR(b.total[1], 2.0, 1e-12);
  EXPECT_NEAR(total_cost({0, 20}, P, g, {1, 1, 2}), 2.0, 1e-12);
  const auto t = Oracle::totals(P, g, {1, 1, 2});
  for (std::size_t i = 0; i < P.size(); ++i) EXPECT_NEAR(b.total[i], t[i], 1e-12);
}

TEST(Costs, UniformImageReducesToLocation) {
  const Image2D img = filled(30, 30, 2.0);
  std::vector<Pixel> P{{1, 1}, {5, 6}, {9, 2}, {4, 4}, {20, 20}};
  const auto b = evaluate_costs(P, img, {});
  const auto nl = Oracle::norm(b.location);
  for (std::size_t i = 0; i < P.size(); ++i) EXPECT_NEAR(b.total[i], nl[i], 1e-15);
  EXPECT_EQ(select_positive_prompt(P, img, {}), (Pixel{5, 6}));  // centroid (7.8, 6.6)
}

TEST(Costs, DiskCandidatesPickCentre) {
  std::vector<Pixel> disk;
  for (std::int64_t r = 0; r < 31; ++r)
    for (std::int64_t c = 0; c < 31; ++c)
      if ((r - 15) * (r - 15) + (c - 15) * (c - 15) <= 64) disk.push_back({r, c});
  EXPECT_EQ(select_positive_prompt(disk, filled(31, 31, 5.0), {}), (Pixel{15, 15}));
  std::vector<Pixel> one{{3, 2}};
  EXPECT_EQ(select_positive_prompt(one, filled(31, 31, 5.0), {}), (Pixel{3, 2}));
}

TEST(Costs, ArgminMatchesBruteForce) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 100; ++t) {
    const bool quant = t % 3 == 0;  // many exact ties
    const Image2D img = random_image(rng, 32, 32, quant);
    const auto P = random_candidates(rng, 32, 32, 1 + rng() % 50);
    const PromptCostWeights w{static_cast<double>(rng() % 3), static_cast<double>(rng() % 3) + 0.5, 2.0};
    EXPECT_EQ(select_positive_prompt(P, img, w), Oracle::argmin(P, img, w)) << t;
  }
}

TEST(Costs, AffineRescalingInvariance) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ua(0.1, 50.0), ub(-500, 500);
  for (int t = 0; t < 50; ++t) {
    const Image2D img = random_image(rng, 28, 28, false);
    const auto P = random_candidates(rng, 28, 28, 30);
    const double a = ua(rng), b = ub(rng);
    Image2D scaled = img;
    for (double& v : scaled.buffer()) v = a * v + b;
    const auto c0 = evaluate_costs(P, img, {});
    const auto c1 = evaluate_costs(P, scaled, {});
    for (std::size_t i = 0; i < P.size(); ++i) EXPECT_NEAR(c0.total[i], c1.total[i], 1e-9);
    EXPECT_EQ(select_positive_prompt(P, img, {}), select_positive_prompt(P, scaled, {}));
  }
}

TEST(Costs, NegativeSelectionDropsDarkest) {
  // the darkest candidate sits at the centroid and would otherwise win
  Image2D img = filled(1, 40, 50.0);
  std::vector<Pixel> P;
  for (std::int64_t c = 15; c <= 25; ++c) P.push_back({0, c});
  img(0, 20) = 49.0;
  for (int c = 0; c < 40; ++c)
    if (c != 20) img(0, c) = 50.0;
  const Pixel chosen = select_negative_prompt(P, img, {0.0, 1.0, 0.0});
  EXPECT_NE(chosen, (Pixel{0, 20}));
  EXPECT_EQ(select_positive_prompt(P, img, {0.0, 1.0, 0.0}), (Pixel{0, 20}));

  // uniform: point nearest the centroid of the survivors
  const Image2D flat = filled(1, 40, 50.0);
  std::vector<Pixel> survivors(P.begin() + 1, P.end());  // ties drop the first in raster order
  EXPECT_EQ(select_negative_prompt(P, flat, {}), Oracle::argmin(survivors, flat, {}));

  std::vector<Pixel> one{{0, 3}};
  EXPECT_EQ(select_negative_prompt(one, flat, {}), (Pixel{0, 3}));
  EXPECT_THROW(select_negative_prompt({}, flat, {}), InvalidArgument);
}

TEST(Costs, NegativeSelectionMatchesOracle) {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 40; ++t) {
    const Image2D img = random_image(rng, 24, 24, false);
    const auto P = random_candidates(rng, 24, 24, 5 + rng() % 40);
    std::vector<Pixel> sorted = P;
    std::sort(sorted.begin(), sorted.end(), [&](Pixel a, Pixel b) { return img[a] < img[b]; });
    const auto drop = static_cast<std::size_t>(0.10 * static_cast<double>(P.size()));
    std::vector<Pixel> keep(sorted.begin() + static_cast<std::ptrdiff_t>(drop), sorted.end());
    EXPECT_EQ(select_negative_prompt(P, img, {}), Oracle::argmin(keep, img, {}));
  }
}

TEST(Costs, WeightValidation) {
  EXPECT_THROW((PromptCostWeights{-1, 1, 1}.validate()), InvalidArgument);
  EXPECT_THROW((PromptCostWeights{0, 0, 0}.validate()), InvalidArgument);
  PropagationConfig cfg;
  cfg.neighborhood = 4;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.slice_density = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.negative_exclusion_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Lines, AxialDiskGivesChords) {
  const std::int64_t n = 40, z = 7;
  const double r0 = 18, c0 = 21, R = 9.5;
  Mask2D disk(n, n);
  for (std::int64_t r = 0; r < n; ++r)
    for (std::int64_t c = 0; c < n; ++c) disk(r, c) = (r - r0) * (r - r0) + (c - c0) * (c - c0) <= R * R;
  const auto lines = project_lines(disk, {View::axial, z});
  ASSERT_EQ(lines.size(), 2u);
  // coronal slices are indexed by y (the disk row); chord runs along x
  const auto& cor = lines.at(View::coronal);
  EXPECT_EQ(cor.size(), 19u);
  for (const auto& l : cor) {
    const double dy = static_cast<double>(l.host.index) - r0;
    const double half = std::sqrt(R * R - dy * dy);
    EXPECT_EQ(l.start, static_cast<std::int64_t>(std::ceil(c0 - half)));
    EXPECT_EQ(l.end, static_cast<std::int64_t>(std::floor(c0 + half)));
    EXPECT_TRUE(l.along_cols);
    EXPECT_EQ(l.fixed, z);
    for (const auto& v : l.voxels()) {
      EXPECT_EQ(v[2], z);
      EXPECT_EQ(v[1], l.host.index);
    }
  }
  const auto& sag = lines.at(View::sagittal);
  EXPECT_EQ(sag.size(), 19u);
  for (const auto& l : sag)
    for (const auto& v : l.voxels()) {
      EXPECT_EQ(v[0], l.host.index);
      EXPECT_TRUE(disk(v[1], v[0]));
    }
}

TEST(Lines, SinglePixelAndEmpty) {
  Mask2D m(10, 12);
  m(3, 4) = 1;
  const auto lines = project_lines(m, {View::coronal, 5});
  for (View v : {View::axial, View::sagittal}) {
    ASSERT_EQ(lines.at(v).size(), 1u);
    EXPECT_EQ(lines.at(v)[0].length(), 1);
    EXPECT_EQ(lines.at(v)[0].voxels()[0], (Index3{4, 5, 3}));
  }
  const auto none = project_lines(Mask2D(10, 12), {View::coronal, 5});
  for (const auto& [v, ls] : none) EXPECT_TRUE(ls.empty());
}

TEST(Lines, GapSplitsRuns) {
  Mask2D m(5, 10);
  for (int c : {1, 2, 3, 6, 7}) m(2, c) = 1;
  const auto lines = project_lines(m, {View::axial, 0});
  // row 2 is y = 2: the coronal slice y=2 holds two runs along x
  std::vector<std::pair<std::int64_t, std::int64_t>> runs;
  for (const auto& l : lines.at(View::coronal)) runs.push_back({l.start, l.end});
  EXPECT_EQ(runs, (std::vector<std::pair<std::int64_t, std::int64_t>>{{1, 3}, {6, 7}}));
}

TEST(Orthogonal, LongestLineAndTieRule) {
  Volume3D vol(Geometry{{20, 20, 20}, {1, 1, 1}, {0, 0, 0}}, 0.0);
  for (std::int64_t x = 4; x < 10; ++x) vol(x, 5, 3) = vol(x, 7, 3) = 10;
  std::vector<PositiveLine> lines{
      {{View::coronal, 9}, true, 3, 4, 8},
      {{View::coronal, 7}, true, 3, 4, 9},
      {{View::coronal, 5}, true, 3, 4, 9},
      {{View::coronal, 5}, true, 3, 12, 13},
  };
  RegionGrowSegmenter seg;
  const auto out = segment_orthogonal(vol, lines, seg, {});
  EXPECT_EQ(out.address, (SliceAddress{View::coronal, 5}));
  ASSERT_EQ(out.prompts.size(), 2u);
  const Pixel pos = out.prompts[0].position, neg = out.prompts[1].position;
  EXPECT_EQ(pos.row, 3);
  EXPECT_GE(pos.col, 4);
  EXPECT_LE(pos.col, 9);
  EXPECT_EQ(neg.row, 3);
  // every positive run on that line is excluded from the negative candidates
  EXPECT_FALSE(neg.col >= 4 && neg.col <= 9);
  EXPECT_FALSE(neg.col >= 12 && neg.col <= 13);
  for (std::int64_t x = 0; x < 20; ++x) EXPECT_EQ(out.mask(3, x), x >= 4 && x < 10 ? 1 : 0);

  EXPECT_THROW(segment_orthogonal(vol, {}, seg, {}), InvalidArgument);
}

TEST(Orthogonal, SphereEquatorChosen) {
  const Index3 dims{40, 40, 40};
  const Volume3D vol = crlm::testing::noisy_sphere_volume(dims, {20, 19, 21}, 9, 300, 100, 0, 1);
  const PromptPoint p{{19, 20}, Polarity::positive};
  RegionGrowSegmenter seg;
  const SliceAddress axial{View::axial, 21};
  const Mask2D m = binarize(seg.segment(extract_slice(vol, axial), {&p, 1}));
  const auto lines = project_lines(m, axial);
  EXPECT_EQ(segment_orthogonal(vol, lines.at(View::coronal), seg, {}).address.index, 19);
  EXPECT_EQ(segment_orthogonal(vol, lines.at(View::sagittal), seg, {}).address.index, 20);
}

TEST(Propagation, SampledSliceArithmetic) {
  EXPECT_EQ(sampled_slices(0, 8, 3), (std::vector<std::int64_t>{0, 3, 6, 8}));
  const std::vector<std::int64_t> anchors{4, 20};
  EXPECT_EQ(sampled_slices(0, 8, 3, anchors), (std::vector<std::int64_t>{0, 3, 4, 6, 8}));
  EXPECT_EQ(sampled_slices(5, 5, 3), (std::vector<std::int64_t>{5}));
  PropagationConfig cfg;
  EXPECT_EQ(cfg.slice_step(), 3);
  cfg.slice_density = 0.5;
  EXPECT_EQ(cfg.slice_step(), 2);
  cfg.slice_density = 1.0;
  EXPECT_EQ(cfg.slice_step(), 1);
}

namespace {

// Volume whose axial slice z has constant intensity z, with three anchors
// spanning x,y in [2,5] and z in [0,2].
struct StubScene {
  Volume3D vol{Geometry{{8, 8, 3}, {1, 1, 1}, {0, 0, 0}}};
  std::vector<SegmentedSlice> anchors;
  StubScene() {
    for (std::int64_t z = 0; z < 3; ++z)
      for (std::int64_t y = 0; y < 8; ++y)
        for (std::int64_t x = 0; x < 8; ++x) vol(x, y, z) = static_cast<double>(z);
    SegmentedSlice ax{{View::axial, 0}, LogitMap2D(8, 8, 1.0), Mask2D(8, 8), {}};
    for (int r = 2; r <= 5; ++r)
      for (int c = 2; c <= 5; ++c) ax.mask(r, c) = 1;
    SegmentedSlice co{{View::coronal, 3}, LogitMap2D(3, 8, 1.0), Mask2D(3, 8), {}};
    SegmentedSlice sa{{View::sagittal, 3}, LogitMap2D(3, 8, 1.0), Mask2D(3, 8), {}};
    for (int r = 0; r < 3; ++r)
      for (int c = 2; c <= 5; ++c) co.mask(r, c) = sa.mask(r, c) = 1;
    anchors = {ax, co, sa};
  }
};

}  // namespace

TEST(Propagation, InterpolatesBetweenSampledSlices) {
  StubScene s;
  PlaneStub stub;
  PropagationConfig cfg;
  cfg.slice_density = 0.5;
  const Volume3D out = propagate_orientation(s.vol, s.anchors, View::axial, stub, cfg);
  for (std::int64_t z = 0; z < 3; ++z)
    for (std::int64_t y = 0; y < 8; ++y)
      for (std::int64_t x = 0; x < 8; ++x) {
        const bool in_box = x >= 2 && x <= 5 && y >= 2 && y <= 5;
        const double want = !in_box ? -1.0 : (z == 0 ? 1.0 : z == 1 ? 0.0 : -1.0);
        EXPECT_EQ(out(x, y, z), want) << x << "," << y << "," << z;
      }
}

TEST(Propagation, SingleSliceExtent) {
  StubScene s;
  for (auto& a : s.anchors)
    if (a.address.view != View::axial)
      for (int c = 0; c < 8; ++c) a.mask(1, c) = a.mask(2, c) = 0;
  PlaneStub stub;
  const Volume3D out = propagate_orientation(s.vol, s.anchors, View::axial, stub, {});
  for (std::int64_t z = 0; z < 3; ++z) EXPECT_EQ(out(3, 3, z), z == 0 ? 1.0 : -1.0);
  for (auto& a : s.anchors) a.mask = Mask2D(a.mask.rows(), a.mask.cols());
  EXPECT_THROW(propagate_orientation(s.vol, s.anchors, View::axial, stub, {}), InvalidArgument);
}

TEST(Fusion, Examples) {
  const Geometry g{{10, 10, 1}, {1, 1, 1}, {0, 0, 0}};
  Volume3D c(g, 0.7);
  std::vector<Volume3D> same{c, c, c};
  EXPECT_EQ(count_nonzero(fuse_and_binarize(same).mask), 0u);

  Volume3D v(g, 0.0);
  for (std::size_t i : {3u, 40u, 41u, 99u}) v[i] = 10.0;
  std::vector<Volume3D> three{v, v, v};
  const auto r = fuse_and_binarize(three);
  EXPECT_EQ(r.fused, v);
  EXPECT_NEAR(r.mean, 0.4, 1e-12);
  EXPECT_NEAR(r.stddev, std::sqrt(3.84), 1e-12);
  EXPECT_NEAR(r.threshold, 4.319, 1e-3);
  EXPECT_EQ(count_nonzero(r.mask), 4u);
  EXPECT_EQ(r.mask[40], 1);

  std::vector<Volume3D> bad{v, Volume3D(Geometry{{5, 5, 1}, {1, 1, 1}, {0, 0, 0}})};
  EXPECT_THROW(fuse_and_binarize(bad), InvalidArgument);
}

TEST(Fusion, OrderInvariant) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<Volume3D> vols{crlm::testing::random_volume({9, 8, 7}, seed * 3, -3, 3),
                               crlm::testing::random_volume({9, 8, 7}, seed * 3 + 1, -3, 3),
                               crlm::testing::random_volume({9, 8, 7}, seed * 3 + 2, -3, 3)};
    std::vector<int> perm{0, 1, 2};
    const auto ref = fuse_and_binarize(vols);
    while (std::next_permutation(perm.begin(), perm.end())) {
      std::vector<Volume3D> p{vols[perm[0]], vols[perm[1]], vols[perm[2]]};
      const auto r = fuse_and_binarize(p);
      EXPECT_EQ(r.fused, ref.fused);
      EXPECT_EQ(r.mask, ref.mask);
    }
  }
}

TEST(Samonai, SpherePhantom) {
  const Index3 dims{48, 48, 48};
  const Vec3 c{24, 23, 25};
  const Volume3D vol = crlm::testing::noisy_sphere_volume(dims, c, 10, 300, 100, 20, 42);
  const PromptPoint p{{23, 24}, Polarity::positive};
  RegionGrowSegmenter seg;
  const auto res = samonai_segment(vol, {View::axial, 25}, {&p, 1}, seg);
  const double dice = crlm::testing::dice_of(res.mask, crlm::testing::sphere_mask(dims, c, 10));
  EXPECT_GE(dice, 0.90);
  // deterministic
  const auto again = samonai_segment(vol, {View::axial, 25}, {&p, 1}, seg);
  EXPECT_EQ(again.mask, res.mask);
  // threaded run reduces identically
  PropagationConfig cfg;
  cfg.threads = 3;
  EXPECT_EQ(samonai_segment(vol, {View::axial, 25}, {&p, 1}, seg, cfg).mask, res.mask);
}

TEST(Samonai, PromptFromOtherViews) {
  const Index3 dims{40, 40, 40};
  const Vec3 c{20, 18, 21};
  const Volume3D vol = crlm::testing::noisy_sphere_volume(dims, c, 8, 300, 100, 20, 7);
  RegionGrowSegmenter seg;
  const Mask3D truth = crlm::testing::sphere_mask(dims, c, 8);
  // coronal slice y=18 has (row, col) = (z, x); sagittal x=20 has (z, y)
  const PromptPoint pc{{21, 20}, Polarity::positive};
  EXPECT_GE(crlm::testing::dice_of(samonai_segment(vol, {View::coronal, 18}, {&pc, 1}, seg).mask, truth), 0.9);
  const PromptPoint ps{{21, 18}, Polarity::positive};
  EXPECT_GE(crlm::testing::dice_of(samonai_segment(vol, {View::sagittal, 20}, {&ps, 1}, seg).mask, truth), 0.9);
}

TEST(Samonai, ConfinedToPromptedSphere) {
  const Index3 dims{48, 40, 40};
  Volume3D vol = crlm::testing::noisy_sphere_volume(dims, {12, 20, 20}, 7, 300, 100, 15, 3);
  const Mask3D other = crlm::testing::sphere_mask(dims, {34, 20, 20}, 7);
  for (std::size_t i = 0; i < vol.size(); ++i)
    if (other[i]) vol[i] += 200;
  const PromptPoint p{{20, 12}, Polarity::positive};
  RegionGrowSegmenter seg;
  const auto res = samonai_segment(vol, {View::axial, 20}, {&p, 1}, seg);
  EXPECT_GT(count_nonzero(res.mask), 0u);
  for (std::size_t i = 0; i < res.mask.size(); ++i) {
    if (!res.mask[i]) continue;
    EXPECT_EQ(other[i], 0);
    const Index3 v = res.mask.geometry().coords(i);
    EXPECT_TRUE(res.box.contains(v));
  }
}

TEST(Samonai, Errors) {
  const Volume3D vol = crlm::testing::noisy_sphere_volume({20, 20, 20}, {10, 10, 10}, 4, 3, 1, 0, 1);
  const PromptPoint p{{10, 10}, Polarity::positive};
  EmptyStub empty;
  EXPECT_THROW(samonai_segment(vol, {View::axial, 10}, {&p, 1}, empty), NoObjectFound);
  RegionGrowSegmenter seg;
  EXPECT_THROW(samonai_segment(vol, {View::axial, 20}, {&p, 1}, seg), InvalidArgument);
  const PromptPoint n{{10, 10}, Polarity::negative};
  EXPECT_THROW(samonai_segment(vol, {View::axial, 10}, {&n, 1}, seg), InvalidArgument);
  std::stop_source stop;
  stop.request_stop();
  EXPECT_THROW(samonai_segment(vol, {View::axial, 10}, {&p, 1}, seg, {}, stop.get_token()), Canceled);
}
