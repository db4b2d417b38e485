#pragma once

// Promptable 2D segmenter contract and the deterministic reference segmenter.

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crlm/volgrid/grid.hpp"

namespace crlm {

enum class Polarity : std::uint8_t { negative = 0, positive = 1 };

struct PromptPoint {
  Pixel position;
  Polarity polarity = Polarity::positive;
  friend bool operator==(const PromptPoint&, const PromptPoint&) = default;
};

// Per-pixel foreground score; higher means more likely foreground.
using LogitMap2D = Image2D;

struct SegmenterInfo {
  std::string name;
  bool deterministic = true;
};

class Segmenter2D {
 public:
  virtual ~Segmenter2D() = default;
  virtual SegmenterInfo info() const = 0;
  // Must be safe to call concurrently from several threads.
  virtual LogitMap2D segment(const Image2D& image, std::span<const PromptPoint> prompts) const = 0;
};

inline void validate_prompts(const Image2D& image, std::span<const PromptPoint> prompts) {
  bool any_positive = false;
  for (const auto& p : prompts) {
    if (!image.contains(p.position)) throw InvalidArgument("prompt out of bounds");
    any_positive |= p.polarity == Polarity::positive;
  }
  if (!any_positive) throw InvalidArgument("at least one positive prompt is required");
}

inline Mask2D binarize(const LogitMap2D& logits, double threshold = 0.0) {
  Mask2D m(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.buffer().size(); ++i) m.buffer()[i] = logits.buffer()[i] > threshold ? 1 : 0;
  return m;
}

// Union of the 4-connected regions grown from each seed, accepting pixels
// whose intensity lies within `tolerance` of that seed's intensity.
inline Mask2D grow_region(const Image2D& image, std::span<const Pixel> seeds, double tolerance) {
  Mask2D region(image.rows(), image.cols());
  Mask2D visited(image.rows(), image.cols());
  std::deque<Pixel> queue;
  constexpr std::int64_t dr[4] = {-1, 1, 0, 0};
  constexpr std::int64_t dc[4] = {0, 0, -1, 1};
  for (const Pixel seed : seeds) {
    const double ref = image[seed];
    std::fill(visited.buffer().begin(), visited.buffer().end(), 0);
    visited[seed] = 1;
    queue.push_back(seed);
    while (!queue.empty()) {
      const Pixel p = queue.front();
      queue.pop_front();
      region[p] = 1;
      for (int k = 0; k < 4; ++k) {
        const Pixel q{p.row + dr[k], p.col + dc[k]};
        if (!image.contains(q) || visited[q]) continue;
        visited[q] = 1;
        if (std::abs(image[q] - ref) <= tolerance) queue.push_back(q);
      }
    }
  }
  return region;
}

struct RegionGrowParams {
  // Unset: 0.25 * (max - min) of the image being segmented.
  std::optional<double> tolerance;
  double shrink = 0.5;
  int max_iter = 8;
};

// Grows from the positive prompts; while a negative prompt is swallowed the
// tolerance is multiplied by `shrink`. After `max_iter` attempts the region
// falls back to the positive seed pixels alone. Logits are +1 / -1.
inline LogitMap2D reference_region_grow(const Image2D& image, std::span<const PromptPoint> prompts,
                                        const RegionGrowParams& params = {}) {
  validate_prompts(image, prompts);
  if (params.tolerance && !(*params.tolerance > 0.0)) throw InvalidArgument("region grow: tolerance must be > 0");
  if (!(params.shrink > 0.0 && params.shrink < 1.0)) throw InvalidArgument("region grow: shrink must be in (0, 1)");
  if (params.max_iter < 1) throw InvalidArgument("region grow: max_iter must be >= 1");

  std::vector<Pixel> seeds;
  std::vector<Pixel> negatives;
  for (const auto& p : prompts) (p.polarity == Polarity::positive ? seeds : negatives).push_back(p.position);

  double tau = 0.0;
  if (params.tolerance) {
    tau = *params.tolerance;
  } else {
    const auto [mn, mx] = std::minmax_element(image.buffer().begin(), image.buffer().end());
    tau = 0.25 * (*mx - *mn);
  }

  Mask2D region;
  bool accepted = false;
  for (int iter = 0; iter < params.max_iter; ++iter, tau *= params.shrink) {
    region = grow_region(image, seeds, tau);
    if (std::none_of(negatives.begin(), negatives.end(), [&](Pixel n) { return region[n] != 0; })) {
      accepted = true;
      break;
    }
  }
  if (!accepted) {
    region = Mask2D(image.rows(), image.cols());
    for (const Pixel s : seeds) region[s] = 1;
  }
  LogitMap2D logits(image.rows(), image.cols());
  for (std::size_t i = 0; i < logits.buffer().size(); ++i) logits.buffer()[i] = region.buffer()[i] ? 1.0 : -1.0;
  return logits;
}

class RegionGrowSegmenter final : public Segmenter2D {
 public:
  explicit RegionGrowSegmenter(RegionGrowParams params = {}) : params_(params) {}
  SegmenterInfo info() const override { return {"region-grow", true}; }
  LogitMap2D segment(const Image2D& image, std::span<const PromptPoint> prompts) const override {
    return reference_region_grow(image, prompts, params_);
  }

 private:
  RegionGrowParams params_;
};

// Name -> factory lookup used by configuration and the CLI.
class SegmenterRegistry {
 public:
  using Factory = std::function<std::shared_ptr<const Segmenter2D>()>;

  static SegmenterRegistry& instance() {
    static SegmenterRegistry reg;
    return reg;
  }
  void add(const std::string& name, Factory f) { factories_[name] = std::move(f); }
  std::shared_ptr<const Segmenter2D> create(const std::string& name) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) throw InvalidArgument("unknown segmenter '" + name + "'");
    return it->second();
  }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : factories_) out.push_back(k);
    return out;
  }

 private:
  SegmenterRegistry() {
    add("region-grow", [] { return std::make_shared<RegionGrowSegmenter>(); });
  }
  std::map<std::string, Factory> factories_;
};

inline std::shared_ptr<const Segmenter2D> make_segmenter(const std::string& name) {
  return SegmenterRegistry::instance().create(name);
}

}  // namespace crlm
