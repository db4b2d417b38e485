#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "crlm/survaminn/model.hpp"

namespace crlm::survaminn {

enum class PoolingKind { mean, largest, max, lse };
// Size measure used by "largest" pooling.
enum class LargestBy { volume, diameter };

inline const char* pooling_name(PoolingKind k) {
  switch (k) {
    case PoolingKind::mean: return "mean";
    case PoolingKind::largest: return "largest";
    case PoolingKind::max: return "max";
    case PoolingKind::lse: return "lse";
  }
  return "?";
}

inline PoolingKind parse_pooling(std::string_view s) {
  if (s == "mean") return PoolingKind::mean;
  if (s == "largest") return PoolingKind::largest;
  if (s == "max") return PoolingKind::max;
  if (s == "lse") return PoolingKind::lse;
  throw InvalidArgument("unknown pooling '" + std::string(s) + "' (mean|largest|max|lse)");
}

inline const char* largest_by_name(LargestBy b) { return b == LargestBy::volume ? "volume" : "diameter"; }

inline LargestBy parse_largest_by(std::string_view s) {
  if (s == "volume") return LargestBy::volume;
  if (s == "diameter") return LargestBy::diameter;
  throw InvalidArgument("unknown largest-by '" + std::string(s) + "' (volume|diameter)");
}

inline const std::vector<double>& bag_sizes(const TumorFeatureBag& bag, LargestBy by) {
  return by == LargestBy::volume ? bag.volumes_mm3 : bag.diameters_mm;
}

namespace detail {

inline Eigen::Index largest_index(const Vector& scores, const std::vector<double>* sizes) {
  if (sizes == nullptr || static_cast<Eigen::Index>(sizes->size()) != scores.size())
    throw InvalidArgument("largest pooling needs one size per tumor");
  Eigen::Index best = 0;
  for (Eigen::Index t = 1; t < scores.size(); ++t)
    if ((*sizes)[t] > (*sizes)[best]) best = t;
  return best;
}

}  // namespace detail

// Bag score from tumor scores. `sizes` is only read by largest pooling.
inline double pool(const Vector& scores, PoolingKind kind, const std::vector<double>* sizes = nullptr) {
  if (scores.size() < 1) throw InvalidArgument("pool: empty bag");
  switch (kind) {
    case PoolingKind::mean: return scores.mean();
    case PoolingKind::max: return scores.maxCoeff();
    case PoolingKind::largest: return scores[detail::largest_index(scores, sizes)];
    case PoolingKind::lse: {
      const double m = scores.maxCoeff();
      return m + std::log((scores.array() - m).exp().sum());
    }
  }
  throw InvalidArgument("pool: bad kind");
}

// d pool / d scores. Max and largest route to the first maximizer.
inline Vector pool_gradient(const Vector& scores, PoolingKind kind, const std::vector<double>* sizes = nullptr) {
  if (scores.size() < 1) throw InvalidArgument("pool: empty bag");
  Vector g = Vector::Zero(scores.size());
  switch (kind) {
    case PoolingKind::mean: g.setConstant(1.0 / static_cast<double>(scores.size())); break;
    case PoolingKind::max: {
      Eigen::Index i;
      scores.maxCoeff(&i);
      g[i] = 1.0;
      break;
    }
    case PoolingKind::largest: g[detail::largest_index(scores, sizes)] = 1.0; break;
    case PoolingKind::lse: {
      g = (scores.array() - scores.maxCoeff()).exp();
      g /= g.sum();
      break;
    }
  }
  return g;
}

inline double mse_loss(const Matrix& x, const Matrix& recon) {
  if (x.rows() != recon.rows() || x.cols() != recon.cols()) throw InvalidArgument("mse_loss: shape mismatch");
  if (x.rows() == 0) throw InvalidArgument("mse_loss: empty bag");
  return (x - recon).squaredNorm() / static_cast<double>(x.rows());
}

struct CoxLoss {
  double value = 0.0;
  bool no_events = false;
  Vector gradient;  // d value / d hazards
};

// Negative partial log-likelihood, Breslow ties: everyone with T_q >= T_p
// is at risk at T_p.
inline CoxLoss coxph_loss(const Vector& hazards, const std::vector<SurvivalLabel>& labels) {
  const auto n = static_cast<std::size_t>(hazards.size());
  if (n == 0) throw InvalidArgument("coxph_loss: no patients");
  if (labels.size() != n) throw InvalidArgument("coxph_loss: hazards/labels length mismatch");
  CoxLoss out;
  out.gradient = Vector::Zero(hazards.size());
  if (std::none_of(labels.begin(), labels.end(), [](const SurvivalLabel& l) { return l.event; })) {
    out.no_events = true;
    return out;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return labels[a].time < labels[b].time; });
  const double m = hazards.maxCoeff();
  Vector w = (hazards.array() - m).exp();

  // risk[i] = sum of w over T_q >= T_order[i], shared within tied groups
  std::vector<double> risk(n);
  double acc = 0.0;
  for (std::size_t end = n; end > 0;) {
    std::size_t begin = end - 1;
    while (begin > 0 && labels[order[begin - 1]].time == labels[order[end - 1]].time) --begin;
    for (std::size_t k = begin; k < end; ++k) acc += w[order[k]];
    for (std::size_t k = begin; k < end; ++k) risk[k] = acc;
    end = begin;
  }
  // inv_sum = sum over events with T_i <= T_q of 1/risk_i
  double inv_sum = 0.0;
  for (std::size_t start = 0; start < n;) {
    std::size_t stop = start;
    while (stop < n && labels[order[stop]].time == labels[order[start]].time) ++stop;
    for (std::size_t k = start; k < stop; ++k) {
      const auto p = order[k];
      if (labels[p].event) {
        out.value -= hazards[p] - (m + std::log(risk[k]));
        inv_sum += 1.0 / risk[k];
      }
    }
    for (std::size_t k = start; k < stop; ++k) {
      const auto p = order[k];
      out.gradient[p] = w[p] * inv_sum - (labels[p].event ? 1.0 : 0.0);
    }
    start = stop;
  }
  return out;
}

// alpha = e / (E - 1), so epoch 0 is pure reconstruction and the last
// epoch pure Cox.
inline double loss_weight(int epoch, int total) {
  if (total < 2) throw InvalidArgument("loss schedule needs at least 2 epochs");
  if (epoch < 0 || epoch > total - 1) throw InvalidArgument("epoch out of range");
  return static_cast<double>(epoch) / static_cast<double>(total - 1);
}

inline double total_loss(double mse, double cox, int epoch, int total) {
  const double a = loss_weight(epoch, total);
  return (1.0 - a) * mse + a * cox;
}

}  // namespace crlm::survaminn
