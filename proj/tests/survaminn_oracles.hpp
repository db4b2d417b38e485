#pragma once

// Finite-difference oracle for the survival network, shared by the unit and
// acceptance tests.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "crlm/survaminn.hpp"

namespace crlm::testing {

namespace sv = crlm::survaminn;

inline sv::Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double sd = 1.0) {
  sv::Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal(0.0, sd);
  return m;
}

inline std::vector<sv::Sample> toy_problem(int d, Rng& rng, int patients = 3) {
  std::vector<sv::Sample> out;
  for (int p = 0; p < patients; ++p) {
    sv::Sample s;
    s.bag.patient_id = "T" + std::to_string(p);
    const auto t = static_cast<Eigen::Index>(1 + rng.below(3));
    s.bag.x = random_matrix(t, d, rng);
    for (Eigen::Index k = 0; k < t; ++k) {
      s.bag.volumes_mm3.push_back(rng.uniform(100, 5000));
      s.bag.diameters_mm.push_back(rng.uniform(5, 40));
    }
    s.label = {1.0 + p + rng.uniform(), p != 1};
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<const sv::Sample*> ptrs(const std::vector<sv::Sample>& v) {
  std::vector<const sv::Sample*> out;
  for (const auto& s : v) out.push_back(&s);
  return out;
}

// Sign pattern of every ReLU pre-activation plus the pooling argmaxes, used to
// skip finite-difference probes that straddle a kink.
inline std::vector<char> kink_signature(const std::vector<sv::Sample>& batch, const sv::ModelParams& p,
                                 const std::vector<sv::DropoutMask>& masks) {
  std::vector<char> sig;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto f = sv::forward(batch[i].bag.x, p, masks[i]);
    for (const auto* z : {&f.z1, &f.z2, &f.z3, &f.z5})
      for (Eigen::Index k = 0; k < z->size(); ++k) sig.push_back(z->data()[k] > 0);
    Eigen::Index arg;
    f.scores.maxCoeff(&arg);
    sig.push_back(static_cast<char>(arg));
  }
  return sig;
}

struct GradientCheck {
  double worst_relative_error = 0.0;
  std::size_t probes = 0;
  std::size_t skipped = 0;
};

// Central differences (h = 1e-5) on every parameter at `points` random
// parameter points of a 3-patient problem. Relative error is
// |a - n| / max(|a|, |n|, 1e-5); probes whose +-h step flips a ReLU or a max
// argmax are skipped and counted.
inline GradientCheck gradient_check(sv::PoolingKind pooling, int d, int points, Rng& rng) {
  constexpr double h = 1e-5;
  GradientCheck out;
  for (int point = 0; point < points; ++point) {
    const auto batch = toy_problem(d, rng);
    auto p = sv::ModelParams::init({d}, rng);
    for (auto& l : p.layers) l.b = random_matrix(l.b.size(), 1, rng, 0.1);
    std::vector<sv::DropoutMask> masks;
    for (const auto& s : batch) masks.push_back(sv::DropoutMask::draw(p.arch, s.bag.x.rows(), rng));
    const double alpha = rng.uniform();
    auto g = sv::ParamGrads::zeros_like(p);
    sv::batch_loss(ptrs(batch), p, alpha, pooling, sv::LargestBy::volume, masks, &g);
    const auto analytic = g.flatten();
    const auto theta = p.flatten();
    const auto base_sig = kink_signature(batch, p, masks);
    auto q = p;
    auto loss_at = [&](const sv::Vector& th) {
      q.assign(th);
      return sv::batch_loss(ptrs(batch), q, alpha, pooling, sv::LargestBy::volume, masks).total;
    };
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
      sv::Vector a = theta, b = theta;
      a[k] += h;
      b[k] -= h;
      ++out.probes;
      q.assign(a);
      const bool kink_a = kink_signature(batch, q, masks) != base_sig;
      q.assign(b);
      const bool kink_b = kink_signature(batch, q, masks) != base_sig;
      if (kink_a || kink_b) {
        ++out.skipped;
        continue;
      }
      const double numeric = (loss_at(a) - loss_at(b)) / (2 * h);
      const double err = std::abs(analytic[k] - numeric) / std::max({std::abs(analytic[k]), std::abs(numeric), 1e-5});
      out.worst_relative_error = std::max(out.worst_relative_error, err);
    }
  }
  return out;
}

}  // namespace crlm::testing
