#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/volgrid/components.hpp"
#include "crlm/volgrid/grid.hpp"

namespace crlm::evalkit {

// 2|a n b| / (|a| + |b|) over nonzero voxels; two empty masks score 1.
inline double dice(const Mask3D& a, const Mask3D& b) {
  if (a.geometry().dims != b.geometry().dims) throw InvalidArgument("dice: geometry mismatch");
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0, y = b[i] != 0;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

struct DetectionMetrics {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Zero denominators give 0; F1 is 0 when precision and recall are both 0.
inline DetectionMetrics detection_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  DetectionMetrics m{tp, fp, fn};
  m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

struct MatchedPair {
  std::int32_t pred = 0;
  std::int32_t gt = 0;
  double dice = 0.0;
};

struct MatchResult {
  std::vector<MatchedPair> matched;
  std::vector<std::int32_t> false_positives;  // unmatched pred ids
  std::vector<std::int32_t> false_negatives;  // unmatched gt ids
  DetectionMetrics metrics;
};

enum class MatchStrategy { greedy, max_cardinality };

inline constexpr double kMatchDiceThreshold = 0.1;

// Dice of every overlapping (pred, gt) instance pair.
inline std::map<std::pair<std::int32_t, std::int32_t>, double> pairwise_dice(const InstanceLabeling& pred,
                                                                            const InstanceLabeling& gt) {
  if (pred.ids.geometry().dims != gt.ids.geometry().dims) throw InvalidArgument("match: geometry mismatch");
  std::map<std::pair<std::int32_t, std::int32_t>, std::size_t> overlap;
  for (std::size_t i = 0; i < pred.ids.size(); ++i)
    if (pred.ids[i] > 0 && gt.ids[i] > 0) ++overlap[{pred.ids[i], gt.ids[i]}];
  std::map<std::pair<std::int32_t, std::int32_t>, double> out;
  for (const auto& [key, n] : overlap) {
    const double s = static_cast<double>(pred.info(key.first).voxel_count + gt.info(key.second).voxel_count);
    out[key] = 2.0 * static_cast<double>(n) / s;
  }
  return out;
}

namespace detail {

// Kuhn's augmenting paths; preds visited in id order, gts tried in
// descending dice.
inline std::vector<MatchedPair> max_cardinality(const std::vector<MatchedPair>& edges, std::size_t n_pred,
                                                std::size_t n_gt) {
  std::vector<std::vector<MatchedPair>> adj(n_pred + 1);
  for (const auto& e : edges) adj[static_cast<std::size_t>(e.pred)].push_back(e);
  for (auto& a : adj)
    std::stable_sort(a.begin(), a.end(), [](const MatchedPair& x, const MatchedPair& y) { return x.dice > y.dice; });
  std::vector<std::int32_t> gt_owner(n_gt + 1, 0);
  std::vector<char> seen;
  auto augment = [&](auto&& self, std::int32_t u) -> bool {
    for (const auto& e : adj[static_cast<std::size_t>(u)]) {
      if (seen[static_cast<std::size_t>(e.gt)]) continue;
      seen[static_cast<std::size_t>(e.gt)] = 1;
      if (gt_owner[static_cast<std::size_t>(e.gt)] == 0 || self(self, gt_owner[static_cast<std::size_t>(e.gt)])) {
        gt_owner[static_cast<std::size_t>(e.gt)] = u;
        return true;
      }
    }
    return false;
  };
  for (std::size_t u = 1; u <= n_pred; ++u) {
    seen.assign(n_gt + 1, 0);
    augment(augment, static_cast<std::int32_t>(u));
  }
  std::vector<MatchedPair> out;
  for (std::size_t g = 1; g <= n_gt; ++g)
    if (gt_owner[g] != 0)
      for (const auto& e : adj[static_cast<std::size_t>(gt_owner[g])])
        if (e.gt == static_cast<std::int32_t>(g)) out.push_back(e);
  return out;
}

}  // namespace detail

// One-to-one matching over pairs with dice >= 0.1. Greedy accepts pairs in
// descending dice (ties: lower pred id, then lower gt id).
inline MatchResult match_instances(const InstanceLabeling& pred, const InstanceLabeling& gt,
                                   MatchStrategy strategy = MatchStrategy::greedy,
                                   double threshold = kMatchDiceThreshold) {
  std::vector<MatchedPair> edges;
  for (const auto& [key, d] : pairwise_dice(pred, gt))
    if (d >= threshold) edges.push_back({key.first, key.second, d});
  MatchResult r;
  if (strategy == MatchStrategy::greedy) {
    std::stable_sort(edges.begin(), edges.end(), [](const MatchedPair& a, const MatchedPair& b) {
      return std::tie(b.dice, a.pred, a.gt) < std::tie(a.dice, b.pred, b.gt);
    });
    std::vector<char> used_p(pred.count() + 1, 0), used_g(gt.count() + 1, 0);
    for (const auto& e : edges) {
      if (used_p[static_cast<std::size_t>(e.pred)] || used_g[static_cast<std::size_t>(e.gt)]) continue;
      used_p[static_cast<std::size_t>(e.pred)] = used_g[static_cast<std::size_t>(e.gt)] = 1;
      r.matched.push_back(e);
    }
  } else {
    r.matched = detail::max_cardinality(edges, pred.count(), gt.count());
  }
  std::vector<char> mp(pred.count() + 1, 0), mg(gt.count() + 1, 0);
  for (const auto& m : r.matched) {
    mp[static_cast<std::size_t>(m.pred)] = 1;
    mg[static_cast<std::size_t>(m.gt)] = 1;
  }
  for (std::size_t i = 1; i <= pred.count(); ++i)
    if (!mp[i]) r.false_positives.push_back(static_cast<std::int32_t>(i));
  for (std::size_t i = 1; i <= gt.count(); ++i)
    if (!mg[i]) r.false_negatives.push_back(static_cast<std::int32_t>(i));
  r.metrics = detection_metrics(r.matched.size(), r.false_positives.size(), r.false_negatives.size());
  return r;
}

inline MatchResult match_masks(const Mask3D& pred, const Mask3D& gt, MatchStrategy s = MatchStrategy::greedy) {
  return match_instances(connected_components(pred), connected_components(gt), s);
}

struct PostprocessParams {
  double min_volume_mm3 = 100.0;
  double min_liver_fraction = 0.5;  // below this a component counts as extra-hepatic
};

// Drops tumor components that are too small or mostly outside the liver.
// Output is binary.
inline Mask3D postprocess(const Mask3D& tumors, const Mask3D& liver, const PostprocessParams& p = {}) {
  if (tumors.geometry().dims != liver.geometry().dims) throw InvalidArgument("postprocess: geometry mismatch");
  const auto lab = connected_components(tumors);
  std::vector<std::size_t> inside(lab.count() + 1, 0);
  for (std::size_t i = 0; i < tumors.size(); ++i)
    if (lab.ids[i] > 0 && liver[i] != 0) ++inside[static_cast<std::size_t>(lab.ids[i])];
  std::vector<char> keep(lab.count() + 1, 0);
  for (const auto& info : lab.instances) {
    const double frac = static_cast<double>(inside[static_cast<std::size_t>(info.id)]) / static_cast<double>(info.voxel_count);
    keep[static_cast<std::size_t>(info.id)] = info.volume_mm3 >= p.min_volume_mm3 && frac >= p.min_liver_fraction;
  }
  Mask3D out(tumors.geometry());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lab.ids[i] > 0 && keep[static_cast<std::size_t>(lab.ids[i])];
  return out;
}

struct CaseReport {
  std::string case_id;
  std::map<std::string, double> dice;  // per structure
  DetectionMetrics detection;
};

// Per-structure dice of two label masks (liver, tumor, spleen) plus tumor
// detection counts.
inline CaseReport evaluate_case(const std::string& id, const Mask3D& pred_labels, const Mask3D& gt_labels) {
  CaseReport r{id, {}, {}};
  for (auto l : {Label::liver, Label::tumor, Label::spleen})
    r.dice[label_name(l)] = dice(binary_view(pred_labels, l), binary_view(gt_labels, l));
  r.detection = match_masks(binary_view(pred_labels, Label::tumor), binary_view(gt_labels, Label::tumor)).metrics;
  return r;
}

inline void write_report_csv(std::ostream& os, const std::vector<CaseReport>& cases) {
  os << "case_id,dice_liver,dice_tumor,dice_spleen,tp,fp,fn\n" << std::setprecision(10);
  for (const auto& c : cases)
    os << c.case_id << "," << c.dice.at("liver") << "," << c.dice.at("tumor") << "," << c.dice.at("spleen") << ","
       << c.detection.tp << "," << c.detection.fp << "," << c.detection.fn << "\n";
}

inline nlohmann::json summary_json(const std::vector<CaseReport>& cases) {
  std::size_t tp = 0, fp = 0, fn = 0;
  std::map<std::string, double> mean_dice;
  for (const auto& c : cases) {
    tp += c.detection.tp;
    fp += c.detection.fp;
    fn += c.detection.fn;
    for (const auto& [k, v] : c.dice) mean_dice[k] += v / static_cast<double>(cases.size());
  }
  const auto m = detection_metrics(tp, fp, fn);
  return {{"cases", cases.size()},
          {"mean_dice", mean_dice},
          {"detection", {{"tp", tp}, {"fp", fp}, {"fn", fn}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}}}};
}

}  // namespace crlm::evalkit
