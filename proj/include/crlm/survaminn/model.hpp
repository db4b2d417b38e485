#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crlm/error.hpp"
#include "crlm/radiomics/preprocess.hpp"
#include "crlm/rng.hpp"
#include "crlm/survival.hpp"

namespace crlm::survaminn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using radiomics::Phase;
using crlm::SurvivalLabel;
using crlm::validate;

// One patient's tumors in one phase: rows of `x` are normalized feature
// vectors.
struct TumorFeatureBag {
  std::string patient_id;
  Matrix x;
  std::vector<double> volumes_mm3;
  std::vector<double> diameters_mm;
  Phase phase = Phase::post;

  Eigen::Index size() const { return x.rows(); }
};

inline void validate(const TumorFeatureBag& bag, Eigen::Index input_dim) {
  if (bag.x.rows() < 1) throw InvalidArgument("bag " + bag.patient_id + ": no tumors");
  if (bag.x.cols() != input_dim)
    throw InvalidArgument("bag " + bag.patient_id + ": feature width " + std::to_string(bag.x.cols()) +
                          " != model input " + std::to_string(input_dim));
  if (!bag.x.allFinite()) throw InvalidArgument("bag " + bag.patient_id + ": non-finite features");
}

struct Architecture {
  int input = 0;
  int hidden = 64;
  int code = 32;
  int regressor_hidden = 16;
  double dropout = 0.2;
};

// y = W x + b with W stored out x in.
struct Layer {
  Matrix w;
  Vector b;
};

enum LayerId { kEnc1, kEnc2, kDec1, kDec2, kReg1, kReg2, kLayerCount };
inline constexpr std::array<const char*, kLayerCount> kLayerNames = {"encoder.0", "encoder.1", "decoder.0",
                                                                     "decoder.1", "regressor.0", "regressor.1"};

struct ModelParams {
  Architecture arch;
  std::array<Layer, kLayerCount> layers;

  static std::array<std::pair<int, int>, kLayerCount> shapes(const Architecture& a) {  // (out, in)
    return {{{a.hidden, a.input},
             {a.code, a.hidden},
             {a.hidden, a.code},
             {a.input, a.hidden},
             {a.regressor_hidden, a.code},
             {1, a.regressor_hidden}}};
  }

  static ModelParams zeros(const Architecture& a) {
    if (a.input < 1 || a.hidden < 1 || a.code < 1 || a.regressor_hidden < 1)
      throw InvalidArgument("architecture widths must be >= 1");
    if (!(a.dropout >= 0 && a.dropout < 1)) throw InvalidArgument("dropout must be in [0, 1)");
    ModelParams p{a, {}};
    const auto s = shapes(a);
    for (int l = 0; l < kLayerCount; ++l) {
      p.layers[l].w = Matrix::Zero(s[l].first, s[l].second);
      p.layers[l].b = Vector::Zero(s[l].first);
    }
    return p;
  }

  // Weights uniform in +-1/sqrt(fan_in), biases zero.
  static ModelParams init(const Architecture& a, Rng& rng) {
    ModelParams p = zeros(a);
    for (auto& layer : p.layers) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.w.cols()));
      for (Eigen::Index j = 0; j < layer.w.cols(); ++j)
        for (Eigen::Index i = 0; i < layer.w.rows(); ++i) layer.w(i, j) = rng.uniform(-bound, bound);
    }
    return p;
  }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
  }

  // Layer by layer: weight (column-major), then bias.
  Vector flatten() const {
    Vector out(parameter_count());
    Eigen::Index k = 0;
    for (const auto& l : layers) {
      out.segment(k, l.w.size()) = l.w.reshaped();
      k += l.w.size();
      out.segment(k, l.b.size()) = l.b;
      k += l.b.size();
    }
    return out;
  }

  void assign(const Vector& flat) {
    if (flat.size() != parameter_count()) throw InvalidArgument("parameter vector has wrong length");
    Eigen::Index k = 0;
    for (auto& l : layers) {
      l.w.reshaped() = flat.segment(k, l.w.size());
      k += l.w.size();
      l.b = flat.segment(k, l.b.size());
      k += l.b.size();
    }
  }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.w.allFinite() || !l.b.allFinite()) return false;
    return true;
  }
};

// Inverted-dropout multipliers (0 or 1/(1-p)) for the four hidden
// activations; an empty matrix means no dropout on that layer.
struct DropoutMask {
  Matrix hidden;       // encoder.0 output, T x hidden
  Matrix code;         // bottleneck, T x code
  Matrix dec_hidden;   // decoder.0 output, T x hidden
  Matrix reg_hidden;   // regressor.0 output, T x regressor_hidden

  static DropoutMask draw(const Architecture& a, Eigen::Index t, Rng& rng) {
    DropoutMask m;
    if (a.dropout <= 0) return m;
    const double keep = 1.0 / (1.0 - a.dropout);
    auto fill = [&](Matrix& mat, int width) {
      mat.resize(t, width);
      for (Eigen::Index j = 0; j < mat.cols(); ++j)
        for (Eigen::Index i = 0; i < mat.rows(); ++i) mat(i, j) = rng.uniform() < a.dropout ? 0.0 : keep;
    };
    fill(m.hidden, a.hidden);
    fill(m.code, a.code);
    fill(m.dec_hidden, a.hidden);
    fill(m.reg_hidden, a.regressor_hidden);
    return m;
  }
};

// Pre-activations and activations kept for backprop.
struct BagForward {
  Matrix z1, a1;  // encoder.0
  Matrix z2, code;
  Matrix z3, d1;  // decoder.0
  Matrix recon;
  Matrix z5, r1;  // regressor.0
  Vector scores;
};

namespace detail {

inline Matrix affine(const Matrix& in, const Layer& l) { return (in * l.w.transpose()).rowwise() + l.b.transpose(); }

inline Matrix relu_drop(const Matrix& z, const Matrix& mask) {
  Matrix a = z.cwiseMax(0.0);
  if (mask.size() != 0) {
    if (mask.rows() != a.rows() || mask.cols() != a.cols()) throw InvalidArgument("dropout mask shape mismatch");
    a.array() *= mask.array();
  }
  return a;
}

inline Matrix relu_drop_grad(const Matrix& upstream, const Matrix& z, const Matrix& mask) {
  Matrix g = upstream.array() * (z.array() > 0.0).cast<double>();
  if (mask.size() != 0) g.array() *= mask.array();
  return g;
}

}  // namespace detail

inline BagForward forward(const Matrix& x, const ModelParams& p, const DropoutMask& mask = {}) {
  if (x.cols() != p.arch.input) throw InvalidArgument("forward: input width does not match the model");
  if (x.rows() < 1) throw InvalidArgument("forward: empty bag");
  BagForward f;
  f.z1 = detail::affine(x, p.layers[kEnc1]);
  f.a1 = detail::relu_drop(f.z1, mask.hidden);
  f.z2 = detail::affine(f.a1, p.layers[kEnc2]);
  f.code = detail::relu_drop(f.z2, mask.code);
  f.z3 = detail::affine(f.code, p.layers[kDec1]);
  f.d1 = detail::relu_drop(f.z3, mask.dec_hidden);
  f.recon = detail::affine(f.d1, p.layers[kDec2]);
  f.z5 = detail::affine(f.code, p.layers[kReg1]);
  f.r1 = detail::relu_drop(f.z5, mask.reg_hidden);
  f.scores = detail::affine(f.r1, p.layers[kReg2]).col(0);
  return f;
}

struct ParamGrads {
  std::array<Layer, kLayerCount> layers;

  static ParamGrads zeros_like(const ModelParams& p) {
    ParamGrads g;
    for (int l = 0; l < kLayerCount; ++l) {
      g.layers[l].w = Matrix::Zero(p.layers[l].w.rows(), p.layers[l].w.cols());
      g.layers[l].b = Vector::Zero(p.layers[l].b.size());
    }
    return g;
  }

  Vector flatten() const {
    ModelParams tmp;
    tmp.layers = layers;
    return tmp.flatten();
  }
};

// Accumulates dL/dparams for one bag given dL/d(recon) and dL/d(scores).
inline void backward(const Matrix& x, const BagForward& f, const ModelParams& p, const DropoutMask& mask,
                     const Matrix& d_recon, const Vector& d_scores, ParamGrads& g) {
  auto accumulate = [](Layer& gl, const Matrix& dz, const Matrix& in) {
    gl.w.noalias() += dz.transpose() * in;
    gl.b += dz.colwise().sum().transpose();
  };
  const Matrix dz6 = d_scores;
  accumulate(g.layers[kReg2], dz6, f.r1);
  const Matrix dz5 = detail::relu_drop_grad(dz6 * p.layers[kReg2].w, f.z5, mask.reg_hidden);
  accumulate(g.layers[kReg1], dz5, f.code);

  accumulate(g.layers[kDec2], d_recon, f.d1);
  const Matrix dz3 = detail::relu_drop_grad(d_recon * p.layers[kDec2].w, f.z3, mask.dec_hidden);
  accumulate(g.layers[kDec1], dz3, f.code);

  const Matrix d_code = dz5 * p.layers[kReg1].w + dz3 * p.layers[kDec1].w;
  const Matrix dz2 = detail::relu_drop_grad(d_code, f.z2, mask.code);
  accumulate(g.layers[kEnc2], dz2, f.a1);
  const Matrix dz1 = detail::relu_drop_grad(dz2 * p.layers[kEnc2].w, f.z1, mask.hidden);
  accumulate(g.layers[kEnc1], dz1, x);
}

}  // namespace crlm::survaminn
