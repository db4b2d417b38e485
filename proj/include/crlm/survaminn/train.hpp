#pragma once

#include <optional>
#include <stop_token>
#include <vector>

#include "crlm/survaminn/losses.hpp"

namespace crlm::survaminn {

struct Sample {
  TumorFeatureBag bag;
  SurvivalLabel label;
};

struct TrainConfig {
  int epochs = 250;
  double lr = 4e-4;
  double weight_decay = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  PoolingKind pooling = PoolingKind::lse;
  LargestBy largest_by = LargestBy::volume;
  bool balanced = true;
  std::uint64_t seed = 0;
  Architecture arch;  // arch.input is taken from the data

  void validate() const {
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (!(lr > 0)) throw InvalidArgument("lr must be > 0");
    if (!(weight_decay >= 0)) throw InvalidArgument("weight decay must be >= 0");
    if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) throw InvalidArgument("Adam betas must be in [0, 1)");
  }
};

// Schedule used by training: e/(E-1), and pure Cox for a one-epoch run.
inline double schedule_alpha(int epoch, int total) { return total < 2 ? 1.0 : loss_weight(epoch, total); }

struct BatchLoss {
  double mse = 0.0;  // mean over patients of per-bag mse
  double cox = 0.0;
  bool no_events = false;
  double total = 0.0;
  Vector hazards;
};

// Loss (1-alpha) mse + alpha cox over a batch and, when `grads` is given,
// its exact gradient. `masks` may be empty (no dropout) or one per sample.
inline BatchLoss batch_loss(const std::vector<const Sample*>& batch, const ModelParams& p, double alpha,
                            PoolingKind pooling, LargestBy largest_by, const std::vector<DropoutMask>& masks = {},
                            ParamGrads* grads = nullptr) {
  if (batch.empty()) throw InvalidArgument("batch_loss: empty batch");
  if (!masks.empty() && masks.size() != batch.size()) throw InvalidArgument("batch_loss: one mask per sample");
  static const DropoutMask kNoMask;
  const auto n = batch.size();
  std::vector<BagForward> fw;
  fw.reserve(n);
  std::vector<SurvivalLabel> labels(n);
  BatchLoss out;
  out.hazards.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = *batch[i];
    validate(s.bag, p.arch.input);
    fw.push_back(forward(s.bag.x, p, masks.empty() ? kNoMask : masks[i]));
    out.mse += mse_loss(s.bag.x, fw.back().recon) / static_cast<double>(n);
    out.hazards[static_cast<Eigen::Index>(i)] = pool(fw.back().scores, pooling, &bag_sizes(s.bag, largest_by));
    labels[i] = s.label;
  }
  const CoxLoss cox = coxph_loss(out.hazards, labels);
  out.cox = cox.value;
  out.no_events = cox.no_events;
  out.total = (1.0 - alpha) * out.mse + alpha * out.cox;
  if (grads != nullptr) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& s = *batch[i];
      const auto t = static_cast<double>(s.bag.x.rows());
      const Matrix d_recon = ((1.0 - alpha) * 2.0 / (static_cast<double>(n) * t)) * (fw[i].recon - s.bag.x);
      const Vector d_scores = (alpha * cox.gradient[static_cast<Eigen::Index>(i)]) *
                              pool_gradient(fw[i].scores, pooling, &bag_sizes(s.bag, largest_by));
      backward(s.bag.x, fw[i], p, masks.empty() ? kNoMask : masks[i], d_recon, d_scores, *grads);
    }
  }
  return out;
}

// Decoupled weight decay: theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta).
class AdamW {
 public:
  AdamW(Eigen::Index n, const TrainConfig& c) : m_(Vector::Zero(n)), v_(Vector::Zero(n)), cfg_(c) {}

  void step(Vector& theta, const Vector& grad) {
    ++t_;
    theta *= 1.0 - cfg_.lr * cfg_.weight_decay;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
    theta.array() -= cfg_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
  }

 private:
  Vector m_, v_;
  TrainConfig cfg_;
  int t_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double alpha = 0.0;
  double mse = 0.0;
  double cox = 0.0;
  double total = 0.0;
  std::size_t sampled = 0;
  bool no_events = false;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
};

// All events plus an equal-size draw from the censored set, or the reverse
// when events are the majority. Indices come back sorted.
inline std::vector<std::size_t> balanced_subsample(const std::vector<Sample>& data, Rng& rng) {
  std::vector<std::size_t> ev, ce;
  for (std::size_t i = 0; i < data.size(); ++i) (data[i].label.event ? ev : ce).push_back(i);
  if (ev.empty() || ce.empty()) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  auto& minority = ev.size() <= ce.size() ? ev : ce;
  auto& majority = ev.size() <= ce.size() ? ce : ev;
  for (std::size_t i = 0; i < minority.size(); ++i)
    std::swap(majority[i], majority[i + rng.below(majority.size() - i)]);
  std::vector<std::size_t> out(minority);
  out.insert(out.end(), majority.begin(), majority.begin() + static_cast<std::ptrdiff_t>(minority.size()));
  std::sort(out.begin(), out.end());
  return out;
}

inline TrainResult train(const std::vector<Sample>& data, const TrainConfig& cfg, std::stop_token stop = {}) {
  cfg.validate();
  if (data.size() < 2) throw InvalidArgument("train: need at least 2 patients");
  if (std::none_of(data.begin(), data.end(), [](const Sample& s) { return s.label.event; }))
    throw InvalidArgument("train: no events in the training data");
  Architecture arch = cfg.arch;
  arch.input = static_cast<int>(data.front().bag.x.cols());
  for (const auto& s : data) {
    validate(s.bag, arch.input);
    validate(s.label);
  }
  Rng rng(cfg.seed);
  TrainResult res{ModelParams::init(arch, rng), {}};
  Vector theta = res.params.flatten();
  AdamW opt(theta.size(), cfg);
  for (int e = 0; e < cfg.epochs; ++e) {
    if (stop.stop_requested()) throw Canceled();
    std::vector<std::size_t> idx;
    if (cfg.balanced) {
      idx = balanced_subsample(data, rng);
    } else {
      idx.resize(data.size());
      std::iota(idx.begin(), idx.end(), 0);
    }
    std::vector<const Sample*> batch;
    std::vector<DropoutMask> masks;
    for (auto i : idx) {
      batch.push_back(&data[i]);
      masks.push_back(DropoutMask::draw(arch, data[i].bag.x.rows(), rng));
    }
    const double alpha = schedule_alpha(e, cfg.epochs);
    ParamGrads g = ParamGrads::zeros_like(res.params);
    const BatchLoss l = batch_loss(batch, res.params, alpha, cfg.pooling, cfg.largest_by, masks, &g);
    opt.step(theta, g.flatten());
    res.params.assign(theta);
    if (!res.params.all_finite()) throw ConvergenceError("train: parameters became non-finite at epoch " + std::to_string(e));
    res.history.push_back({e, alpha, l.mse, l.cox, l.total, idx.size(), l.no_events});
  }
  return res;
}

inline double predict_hazard(const ModelParams& p, const TumorFeatureBag& bag, PoolingKind pooling,
                             LargestBy largest_by = LargestBy::volume) {
  validate(bag, p.arch.input);
  return pool(forward(bag.x, p).scores, pooling, &bag_sizes(bag, largest_by));
}

// Mean of the two phase hazards; a phase without tumors defers to the other.
inline double late_fuse(std::optional<double> pre, std::optional<double> post) {
  if (pre && post) return 0.5 * (*pre + *post);
  if (pre) return *pre;
  if (post) return *post;
  throw InvalidArgument("late_fuse: both phases are empty");
}

}  // namespace crlm::survaminn
