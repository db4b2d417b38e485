#pragma once

// Extends a 2D promptable segmenter to 3D from a single prompted slice.
//
//  1. Segment the prompted slice.
//  2. Project its foreground onto the two orthogonal views as positive lines;
//     in each view segment the slice holding the longest line, prompting with
//     one positive point on the line and one negative point from the rest of
//     the line's in-slice extension.
//  3. The three segmented slices bound the object. For each of the three
//     orientations, sample slices inside that box at the configured density,
//     prompt each with a positive point from the projected lines and a
//     negative point outside the box footprint, and segment them
//     independently. Skipped slices are linearly interpolated.
//  4. Average the three orientation logit volumes and threshold at
//     mean + k * sd of the fused logits.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <map>
#include <exception>
#include <memory>
#include <mutex>
#include <stop_token>
#include <thread>
#include <vector>

#include "crlm/promptseg.hpp"
#include "crlm/samonai/costs.hpp"
#include "crlm/volgrid/components.hpp"

namespace crlm::samonai {

struct PropagationConfig {
  PromptCostWeights weights;
  int neighborhood = kDefaultWindow;
  double negative_exclusion_fraction = 0.10;
  double slice_density = 1.0 / 3.0;
  double threshold_k = 2.0;
  int threads = 1;  // per-slice segmentation workers

  void validate() const {
    weights.validate();
    if (neighborhood < 3 || neighborhood % 2 == 0) throw InvalidArgument("neighborhood must be odd and >= 3");
    if (!(negative_exclusion_fraction >= 0 && negative_exclusion_fraction < 1))
      throw InvalidArgument("negative exclusion fraction must be in [0, 1)");
    if (!(slice_density > 0 && slice_density <= 1)) throw InvalidArgument("slice density must be in (0, 1]");
    if (threads < 1) throw InvalidArgument("threads must be >= 1");
  }

  std::int64_t slice_step() const {
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(1.0 / slice_density - 1e-9)));
  }
};

// A run of foreground positions from a segmented slice, expressed in the
// coordinates of an intersecting slice of another view. The run lies on the
// in-plane line `fixed` (a row when along_cols, else a column).
struct PositiveLine {
  SliceAddress host;
  bool along_cols = true;
  std::int64_t fixed = 0;
  std::int64_t start = 0;  // inclusive
  std::int64_t end = 0;    // inclusive

  std::int64_t length() const { return end - start + 1; }
  Pixel at(std::int64_t v) const { return along_cols ? Pixel{fixed, v} : Pixel{v, fixed}; }
  std::vector<Pixel> points() const {
    std::vector<Pixel> out;
    for (std::int64_t v = start; v <= end; ++v) out.push_back(at(v));
    return out;
  }
  std::vector<Index3> voxels() const {
    std::vector<Index3> out;
    for (std::int64_t v = start; v <= end; ++v) out.push_back(slice_to_voxel(host, at(v)));
    return out;
  }
};

using LinesByView = std::map<View, std::vector<PositiveLine>>;

// Projects the foreground of a segmented slice onto every intersecting slice
// of the two orthogonal views. An empty mask produces no lines.
inline LinesByView project_lines(const Mask2D& mask, SliceAddress host) {
  LinesByView out;
  for (View target : kAllViews) {
    if (target == host.view) continue;
    auto& lines = out[target];
    const auto [tr, tc] = inplane_axes(target);
    const int host_normal = normal_axis(host.view);
    const bool along_cols = (tr == host_normal);
    const int varying_axis = along_cols ? tc : tr;
    std::map<std::int64_t, std::vector<std::int64_t>> by_slice;
    for (std::int64_t r = 0; r < mask.rows(); ++r)
      for (std::int64_t c = 0; c < mask.cols(); ++c) {
        if (!mask(r, c)) continue;
        const Index3 v = slice_to_voxel(host, {r, c});
        by_slice[v[normal_axis(target)]].push_back(v[varying_axis]);
      }
    for (auto& [index, coords] : by_slice) {
      std::sort(coords.begin(), coords.end());
      std::size_t i = 0;
      while (i < coords.size()) {
        std::size_t j = i;
        while (j + 1 < coords.size() && coords[j + 1] == coords[j] + 1) ++j;
        lines.push_back(PositiveLine{{target, index}, along_cols, host.index, coords[i], coords[j]});
        i = j + 1;
      }
    }
  }
  return out;
}

struct SegmentedSlice {
  SliceAddress address;
  LogitMap2D logits;
  Mask2D mask;
  std::vector<PromptPoint> prompts;
};

inline std::size_t count_foreground(const Mask2D& m) {
  return static_cast<std::size_t>(std::count_if(m.buffer().begin(), m.buffer().end(), [](auto v) { return v != 0; }));
}

// Segments the slice that holds the longest projected line of one view.
inline SegmentedSlice segment_orthogonal(const Volume3D& volume, std::span<const PositiveLine> lines,
                                         const Segmenter2D& segmenter, const PropagationConfig& cfg) {
  if (lines.empty()) throw InvalidArgument("segment_orthogonal: no lines for this view");
  const PositiveLine* best = &lines[0];
  for (const auto& l : lines) {
    if (l.host.view != best->host.view) throw InvalidArgument("segment_orthogonal: lines from mixed views");
    if (l.length() > best->length() || (l.length() == best->length() && l.host.index < best->host.index))
      best = &l;
  }
  const Image2D image = extract_slice(volume, best->host);
  const auto positives = best->points();
  const Pixel pos = select_positive_prompt(positives, image, cfg.weights, cfg.neighborhood);

  // negatives: the rest of the in-slice line, minus every positive run on it
  const std::int64_t extent = best->along_cols ? image.cols() : image.rows();
  std::vector<std::uint8_t> on_run(static_cast<std::size_t>(extent), 0);
  for (const auto& l : lines)
    if (l.host == best->host && l.fixed == best->fixed && l.along_cols == best->along_cols)
      for (std::int64_t v = l.start; v <= l.end; ++v) on_run[static_cast<std::size_t>(v)] = 1;
  std::vector<Pixel> negatives;
  for (std::int64_t v = 0; v < extent; ++v)
    if (!on_run[static_cast<std::size_t>(v)]) negatives.push_back(best->at(v));

  SegmentedSlice out{best->host, {}, {}, {{pos, Polarity::positive}}};
  if (!negatives.empty())
    out.prompts.push_back({select_negative_prompt(negatives, image, cfg.weights, cfg.negative_exclusion_fraction,
                                                  cfg.neighborhood),
                           Polarity::negative});
  out.logits = segmenter.segment(image, out.prompts);
  out.mask = binarize(out.logits);
  return out;
}

// Bounding box of the foreground voxels of the segmented anchor slices.
inline BoundingBox anchor_bbox(std::span<const SegmentedSlice> anchors) {
  BoundingBox box;
  for (const auto& a : anchors)
    for (std::int64_t r = 0; r < a.mask.rows(); ++r)
      for (std::int64_t c = 0; c < a.mask.cols(); ++c)
        if (a.mask(r, c)) box.include(slice_to_voxel(a.address, {r, c}));
  return box;
}

// Slice indices segmented along one orientation: every step-th slice of
// [lo, hi] from lo, plus hi and any anchor index inside the range.
inline std::vector<std::int64_t> sampled_slices(std::int64_t lo, std::int64_t hi, std::int64_t step,
                                                std::span<const std::int64_t> anchors = {}) {
  std::vector<std::int64_t> out;
  for (std::int64_t s = lo; s <= hi; s += step) out.push_back(s);
  out.push_back(hi);
  for (auto a : anchors)
    if (a >= lo && a <= hi) out.push_back(a);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace detail {

template <typename Fn>
void run_indexed(std::size_t n, int threads, std::stop_token stop, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) {
      if (stop.stop_requested()) throw Canceled();
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          if (stop.stop_requested()) return;
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
  if (stop.stop_requested()) throw Canceled();
}

}  // namespace detail

// Produces the logit volume for one orientation. Voxels outside the anchor
// bounding box are -1.
inline Volume3D propagate_orientation(const Volume3D& volume, std::span<const SegmentedSlice> anchors, View view,
                                      const Segmenter2D& segmenter, const PropagationConfig& cfg,
                                      std::stop_token stop = {}) {
  cfg.validate();
  const BoundingBox box = anchor_bbox(anchors);
  if (box.empty()) throw InvalidArgument("propagate_orientation: anchors contain no foreground");
  const int axis = normal_axis(view);
  const auto [ra, ca] = inplane_axes(view);

  // positive candidates per slice of this view, from the non-parallel anchors
  std::map<std::int64_t, std::vector<Pixel>> candidates;
  std::vector<std::int64_t> anchor_indices;
  const SegmentedSlice* parallel_anchor = nullptr;
  for (const auto& a : anchors) {
    if (a.address.view == view) {
      parallel_anchor = &a;
      anchor_indices.push_back(a.address.index);
      continue;
    }
    const auto projected = project_lines(a.mask, a.address);
    for (const auto& line : projected.at(view))
      for (const Pixel p : line.points()) candidates[line.host.index].push_back(p);
  }
  for (auto& [k, pts] : candidates) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  }

  const std::int64_t lo = box.lo[axis], hi = box.hi[axis];
  const auto sampled = sampled_slices(lo, hi, cfg.slice_step(), anchor_indices);
  const auto [rows, cols] = slice_shape(volume.geometry(), view);
  std::vector<LogitMap2D> planes(sampled.size());

  detail::run_indexed(sampled.size(), cfg.threads, stop, [&](std::size_t i) {
    const std::int64_t s = sampled[i];
    if (parallel_anchor && parallel_anchor->address.index == s) {
      planes[i] = parallel_anchor->logits;
      return;
    }
    auto it = candidates.find(s);
    if (it == candidates.end() || it->second.empty()) {
      planes[i] = LogitMap2D(rows, cols, -1.0);
      return;
    }
    const Image2D image = extract_slice(volume, {view, s});
    std::vector<PromptPoint> prompts{{select_positive_prompt(it->second, image, cfg.weights, cfg.neighborhood),
                                      Polarity::positive}};
    std::vector<Pixel> outside;
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t c = 0; c < cols; ++c)
        if (r < box.lo[ra] || r > box.hi[ra] || c < box.lo[ca] || c > box.hi[ca]) outside.push_back({r, c});
    if (!outside.empty())
      prompts.push_back({select_negative_prompt(outside, image, cfg.weights, cfg.negative_exclusion_fraction,
                                                cfg.neighborhood),
                         Polarity::negative});
    planes[i] = segmenter.segment(image, prompts);
  });

  Volume3D out(volume.geometry(), -1.0);
  auto write_plane = [&](std::int64_t s, auto&& value_at) {
    for (std::int64_t r = box.lo[ra]; r <= box.hi[ra]; ++r)
      for (std::int64_t c = box.lo[ca]; c <= box.hi[ca]; ++c) {
        const Index3 v = slice_to_voxel({view, s}, {r, c});
        out(v[0], v[1], v[2]) = value_at(r, c);
      }
  };
  for (std::size_t i = 0; i < sampled.size(); ++i) {
    write_plane(sampled[i], [&](std::int64_t r, std::int64_t c) { return planes[i](r, c); });
    if (i + 1 == sampled.size()) break;
    const std::int64_t s0 = sampled[i], s1 = sampled[i + 1];
    for (std::int64_t s = s0 + 1; s < s1; ++s) {
      const double w = static_cast<double>(s - s0) / static_cast<double>(s1 - s0);
      write_plane(s, [&](std::int64_t r, std::int64_t c) { return (1.0 - w) * planes[i](r, c) + w * planes[i + 1](r, c); });
    }
  }
  return out;
}

struct FusionResult {
  Volume3D fused;
  double mean = 0.0;
  double stddev = 0.0;
  double threshold = 0.0;
  Mask3D mask;
};

// Voxelwise mean of the orientation volumes, thresholded strictly above
// mean + k * sd (population statistics over the whole fused volume).
inline FusionResult fuse_and_binarize(std::span<const Volume3D> orientations, double threshold_k = 2.0) {
  if (orientations.empty()) throw InvalidArgument("fuse_and_binarize: no volumes");
  for (const auto& o : orientations)
    if (o.geometry() != orientations[0].geometry()) throw InvalidArgument("fuse_and_binarize: geometry mismatch");
  FusionResult r{Volume3D(orientations[0].geometry()), 0, 0, 0, Mask3D(orientations[0].geometry())};
  std::vector<double> vals(orientations.size());
  const auto n = static_cast<double>(orientations.size());
  for (std::size_t i = 0; i < r.fused.size(); ++i) {
    for (std::size_t k = 0; k < orientations.size(); ++k) vals[k] = orientations[k][i];
    std::sort(vals.begin(), vals.end());  // summation order independent of argument order
    double s = 0.0;
    for (double v : vals) s += v;
    r.fused[i] = s / n;
  }
  double sum = 0.0;
  for (double v : r.fused.buffer()) sum += v;
  r.mean = sum / static_cast<double>(r.fused.size());
  double ss = 0.0;
  for (double v : r.fused.buffer()) ss += (v - r.mean) * (v - r.mean);
  r.stddev = std::sqrt(ss / static_cast<double>(r.fused.size()));
  r.threshold = r.mean + threshold_k * r.stddev;
  for (std::size_t i = 0; i < r.fused.size(); ++i) r.mask[i] = r.fused[i] > r.threshold ? 1 : 0;
  return r;
}

struct SamonaiResult {
  Mask3D mask;
  std::array<SegmentedSlice, 3> anchors;  // initial slice first
  BoundingBox box;
  std::array<Volume3D, 3> orientation_logits;  // axial, coronal, sagittal sweeps
  FusionResult fusion;
};

inline SamonaiResult samonai_segment(const Volume3D& volume, SliceAddress initial,
                                     std::span<const PromptPoint> prompts, const Segmenter2D& segmenter,
                                     const PropagationConfig& cfg = {}, std::stop_token stop = {}) {
  cfg.validate();
  check_address(volume.geometry(), initial);
  const Image2D first = extract_slice(volume, initial);
  validate_prompts(first, prompts);

  SamonaiResult res;
  res.anchors[0].address = initial;
  res.anchors[0].prompts.assign(prompts.begin(), prompts.end());
  res.anchors[0].logits = segmenter.segment(first, prompts);
  res.anchors[0].mask = binarize(res.anchors[0].logits);
  if (count_foreground(res.anchors[0].mask) == 0)
    throw NoObjectFound("initial slice segmentation is empty; no object found");

  const LinesByView lines = project_lines(res.anchors[0].mask, initial);
  std::size_t slot = 1;
  for (View v : kAllViews) {
    if (v == initial.view) continue;
    if (stop.stop_requested()) throw Canceled();
    res.anchors[slot++] = segment_orthogonal(volume, lines.at(v), segmenter, cfg);
  }

  res.box = anchor_bbox(res.anchors);
  for (View v : kAllViews)
    res.orientation_logits[static_cast<std::size_t>(v)] =
        propagate_orientation(volume, res.anchors, v, segmenter, cfg, stop);
  res.fusion = fuse_and_binarize(res.orientation_logits, cfg.threshold_k);
  res.mask = res.fusion.mask;
  return res;
}

}  // namespace crlm::samonai
