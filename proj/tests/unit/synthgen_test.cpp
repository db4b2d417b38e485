#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "crlm/survstats/concordance.hpp"
#include "crlm/synthgen.hpp"
#include "crlm/volgrid/components.hpp"

namespace sg = crlm::synthgen;
using crlm::Label;

namespace {

sg::PhantomSpec small_spec() {
  sg::PhantomSpec s;
  s.geometry = crlm::Geometry{{40, 40, 32}, {2, 2, 2}, {0, 0, 0}};
  s.liver = {{36, 40, 32}, {26, 22, 20}, 100, 200};
  s.spleen = {{68, 20, 32}, {6, 6, 10}, 110, 130};
  s.tumors = {{{30, 40, 32}, 6, 40, 60}, {{46, 44, 30}, 4, 40, 60}};
  return s;
}

double censored_fraction(const std::vector<crlm::SurvivalLabel>& l) {
  return static_cast<double>(std::count_if(l.begin(), l.end(), [](const auto& x) { return !x.event; })) /
         static_cast<double>(l.size());
}

}  // namespace

TEST(Phantom, ZeroNoiseIsPiecewiseConstant) {
  const auto s = small_spec();
  const auto ph = sg::generate_phantom(s);
  std::set<double> pre(ph.pre.buffer().begin(), ph.pre.buffer().end());
  EXPECT_EQ(pre, (std::set<double>{0.0, 40.0, 100.0, 110.0}));
  for (std::size_t i = 0; i < ph.pre.size(); ++i) {
    switch (static_cast<Label>(ph.labels[i])) {
      case Label::background: EXPECT_EQ(ph.post[i], 0.0); break;
      case Label::liver: EXPECT_EQ(ph.post[i], 200.0); break;
      case Label::tumor: EXPECT_EQ(ph.post[i], 60.0); break;
      case Label::spleen: EXPECT_EQ(ph.post[i], 130.0); break;
    }
  }
}

TEST(Phantom, LabelsAreAnalyticIndicators) {
  auto s = small_spec();
  s.noise_sd = 5.0;
  s.seed = 9;
  const auto ph = sg::generate_phantom(s);
  const auto& g = s.geometry;
  for (std::size_t i = 0; i < ph.labels.size(); ++i) {
    const auto p = g.physical(g.coords(i));
    auto want = Label::background;
    if (s.liver.contains(p)) want = Label::liver;
    if (s.spleen.contains(p)) want = Label::spleen;
    for (const auto& t : s.tumors)
      if (t.as_ellipsoid().contains(p)) want = Label::tumor;
    ASSERT_EQ(ph.labels[i], static_cast<std::uint8_t>(want));
  }
  const auto lab = crlm::connected_components(crlm::binary_view(ph.labels, Label::tumor));
  EXPECT_EQ(lab.count(), 2u);
}

TEST(Phantom, SeedDeterminism) {
  auto s = small_spec();
  s.noise_sd = 10.0;
  s.seed = 5;
  const auto a = sg::generate_phantom(s), b = sg::generate_phantom(s);
  EXPECT_EQ(a.pre, b.pre);
  EXPECT_EQ(a.post, b.post);
  EXPECT_EQ(a.labels, b.labels);
  s.seed = 6;
  const auto c = sg::generate_phantom(s);
  EXPECT_NE(a.pre, c.pre);
  EXPECT_EQ(a.labels, c.labels);
}

TEST(Phantom, SphereVolumeMatchesAnalytic) {
  sg::PhantomSpec s;
  s.geometry = crlm::Geometry{{96, 96, 96}, {1, 1, 1}, {0, 0, 0}};
  s.liver = {{47.5, 47.5, 47.5}, {45, 45, 45}, 100, 200};
  s.with_spleen = false;
  s.tumors = {{{47.3, 47.6, 47.2}, 20, 40, 60}};
  const auto ph = sg::generate_phantom(s);
  const double v = static_cast<double>(crlm::count_nonzero(crlm::binary_view(ph.labels, Label::tumor)));
  const double want = 4.0 / 3.0 * std::numbers::pi * 20 * 20 * 20;
  EXPECT_NEAR(want, 33510.0, 1.0);
  EXPECT_LT(std::abs(v - want) / want, 0.02);
}

TEST(Phantom, RejectsOverlapsAndOutOfBounds) {
  auto s = small_spec();
  s.tumors.push_back({{33, 40, 32}, 4, 40, 60});
  EXPECT_THROW(sg::generate_phantom(s), crlm::InvalidArgument);
  s = small_spec();
  s.spleen.center = {50, 40, 32};
  EXPECT_THROW(sg::generate_phantom(s), crlm::InvalidArgument);
  s = small_spec();
  s.tumors[0].radius = 0;
  EXPECT_THROW(sg::generate_phantom(s), crlm::InvalidArgument);
  s = small_spec();
  s.liver.semi_axes = {60, 22, 20};
  EXPECT_THROW(sg::generate_phantom(s), crlm::InvalidArgument);
}

TEST(Phantom, PlacedTumorsFitInsideLiver) {
  sg::PhantomSpec s;
  crlm::Rng rng(3);
  s.tumors = sg::place_tumors(s, 4, 3, 8, rng);
  ASSERT_EQ(s.tumors.size(), 4u);
  const auto ph = sg::generate_phantom(s);
  const auto lab = crlm::connected_components(crlm::binary_view(ph.labels, Label::tumor));
  EXPECT_EQ(lab.count(), 4u);
  for (const auto& t : s.tumors) {
    for (int a = 0; a < 3; ++a) {
      auto p = t.center;
      p[a] += t.radius;
      EXPECT_TRUE(s.liver.contains(p));
    }
  }
}

TEST(Cohort, SeedDeterminism) {
  sg::CohortSpec spec;
  spec.n = 40;
  spec.seed = 11;
  const auto a = sg::generate_cohort(spec), b = sg::generate_cohort(spec);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.true_risk, b.true_risk);
  for (std::size_t i = 0; i < a.bags.size(); ++i) EXPECT_EQ(a.bags[i].x, b.bags[i].x);
  EXPECT_EQ(a.bags.front().patient_id, "P001");
  spec.seed = 12;
  EXPECT_NE(sg::generate_cohort(spec).true_risk, a.true_risk);
}

TEST(Cohort, ShapeAndRiskRule) {
  sg::CohortSpec spec;
  spec.n = 60;
  spec.min_tumors = 2;
  spec.max_tumors = 4;
  spec.feature_dim = 5;
  spec.risk_weights = {1.0, -0.5};
  const auto c = sg::generate_cohort(spec);
  ASSERT_EQ(c.bags.size(), 60u);
  for (std::size_t i = 0; i < c.bags.size(); ++i) {
    const auto& b = c.bags[i];
    EXPECT_GE(b.x.rows(), 2);
    EXPECT_LE(b.x.rows(), 4);
    EXPECT_EQ(b.x.cols(), 5);
    EXPECT_EQ(b.volumes_mm3.size(), static_cast<std::size_t>(b.x.rows()));
    double m = -INFINITY;
    for (Eigen::Index r = 0; r < b.x.rows(); ++r) m = std::max(m, b.x(r, 0) - 0.5 * b.x(r, 1));
    EXPECT_DOUBLE_EQ(c.true_risk[i], m);
    EXPECT_GT(c.labels[i].time, 0.0);
  }
}

TEST(Cohort, CensoringHitsTarget) {
  for (double f : {0.0, 0.1, 0.2, 0.5}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      sg::CohortSpec spec;
      spec.n = 200;
      spec.censoring_fraction = f;
      spec.seed = seed;
      EXPECT_NEAR(censored_fraction(sg::generate_cohort(spec).labels), f, 0.05) << f << " " << seed;
    }
  }
  EXPECT_NEAR(censored_fraction(sg::generate_linear_cohort(500, 0.8, 0.3, 4).labels), 0.3, 0.05);
}

TEST(Cohort, NullRiskGivesChanceConcordance) {
  sg::CohortSpec spec;
  spec.n = 1000;
  spec.risk_weights = {0.0};
  spec.seed = 21;
  const auto c = sg::generate_cohort(spec);
  EXPECT_NEAR(crlm::survstats::concordance_index(c.labels, c.true_risk), 0.5, 0.03);
}

TEST(Cohort, StrongRiskGivesHighConcordance) {
  sg::CohortSpec spec;
  spec.n = 300;
  spec.risk_weights = {3.0};
  spec.seed = 21;
  const auto c = sg::generate_cohort(spec);
  EXPECT_GE(crlm::survstats::concordance_index(c.labels, c.true_risk), 0.8);
}

TEST(Cohort, InvalidSpecs) {
  sg::CohortSpec s;
  s.n = 1;
  EXPECT_THROW(sg::generate_cohort(s), crlm::InvalidArgument);
  s = {};
  s.censoring_fraction = 1.0;
  EXPECT_THROW(sg::generate_cohort(s), crlm::InvalidArgument);
  s = {};
  s.risk_weights.assign(20, 1.0);
  EXPECT_THROW(sg::generate_cohort(s), crlm::InvalidArgument);
}

TEST(Phantom, DefaultSpecIsValid) {
  const auto ph = sg::generate_phantom(sg::PhantomSpec{});
  EXPECT_GT(crlm::count_nonzero(crlm::binary_view(ph.labels, Label::liver)), 0u);
  EXPECT_GT(crlm::count_nonzero(crlm::binary_view(ph.labels, Label::spleen)), 0u);
}
