#pragma once

// Minimal neural-net building blocks with hand-written reverse-mode
// backward passes: linear layers (optionally with low-rank adapters),
// layer norm, GELU, and row softmax. Everything is templated on the scalar
// so training runs in 32-bit while gradient property tests run in 64-bit.
//
// Conventions: activations are row-major matrices with one row per token;
// a linear layer computes y = x W + b with W of shape (in x out). backward()
// accumulates into parameter .grad fields (callers zero them) and returns
// the gradient w.r.t. the layer input.

#include <cmath>
#include <string>
#include <vector>

#include "tcr3/common.hpp"
#include "tcr3/rng.hpp"

namespace tcr3 {

// Which training group a parameter belongs to (see TrainConfig::group).
enum class ParamKind {
  kCodec,       // patch codec encoders/decoders
  kBase,        // transformer base weights (attention/MLP/layernorm)
  kAdapter,     // low-rank adapter factors
  kProjection,  // input embedding and output projection
};

template <typename T>
struct Param {
  std::string name;
  ParamKind kind = ParamKind::kBase;
  MatX<T> value;
  MatX<T> grad;

  void init_shape(const std::string& n, ParamKind k, Eigen::Index rows, Eigen::Index cols) {
    name = n;
    kind = k;
    value.setZero(rows, cols);
    grad.setZero(rows, cols);
  }
  void zero_grad() { grad.setZero(); }
};

// Fills a parameter with N(0, std^2) draws in row-major order.
template <typename T>
void init_normal(Param<T>& p, Rng& rng, double stddev) {
  for (Eigen::Index i = 0; i < p.value.size(); ++i)
    p.value.data()[i] = static_cast<T>(rng.normal() * stddev);
}

// --- Activation functions -------------------------------------------------

// tanh-approximation GELU.
template <typename T>
T gelu_scalar(T x) {
  const T k = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  const T u = k * (x + static_cast<T>(0.044715) * x * x * x);
  return static_cast<T>(0.5) * x * (static_cast<T>(1) + std::tanh(u));
}

template <typename T>
T gelu_grad_scalar(T x) {
  const T k = static_cast<T>(0.7978845608028654);
  const T u = k * (x + static_cast<T>(0.044715) * x * x * x);
  const T th = std::tanh(u);
  const T sech2 = static_cast<T>(1) - th * th;
  const T du = k * (static_cast<T>(1) + static_cast<T>(3) * static_cast<T>(0.044715) * x * x);
  return static_cast<T>(0.5) * (static_cast<T>(1) + th) +
         static_cast<T>(0.5) * x * sech2 * du;
}

template <typename T>
MatX<T> gelu(const MatX<T>& x) {
  MatX<T> y = x;
  for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = gelu_scalar(y.data()[i]);
  return y;
}

// dL/dx given dL/dy and the forward input.
template <typename T>
MatX<T> gelu_backward(const MatX<T>& dy, const MatX<T>& x) {
  MatX<T> dx = dy;
  for (Eigen::Index i = 0; i < dx.size(); ++i)
    dx.data()[i] *= gelu_grad_scalar(x.data()[i]);
  return dx;
}

template <typename T>
T logistic(T x) {
  return static_cast<T>(1) / (static_cast<T>(1) + std::exp(-x));
}

// Row-wise softmax with max subtraction.
template <typename T>
MatX<T> softmax_rows(const MatX<T>& x) {
  MatX<T> y = x;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp();
    row /= row.sum();
  }
  return y;
}

// dL/dx for y = softmax_rows(x): dx_i = y_i * (dy_i - sum_j y_j dy_j).
template <typename T>
MatX<T> softmax_rows_backward(const MatX<T>& dy, const MatX<T>& y) {
  MatX<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const T dot = y.row(r).dot(dy.row(r));
    dx.row(r) = (y.row(r).array() * (dy.row(r).array() - dot)).matrix();
  }
  return dx;
}

// --- Linear layer (optionally with a low-rank adapter) --------------------

// y = x W + b, plus, when the adapter is attached,
// y += (alpha / r) * (x A) B with B zero-initialized so a fresh adapter is
// exactly neutral.
template <typename T>
struct Linear {
  Param<T> W;  // in x out
  Param<T> b;  // 1 x out
  bool has_lora = false;
  Param<T> A;  // in x r
  Param<T> B;  // r x out
  T lora_scale = T(0);  // alpha / r

  struct Cache {
    MatX<T> x;   // forward input
    MatX<T> xa;  // x A (only when the adapter is attached)
  };

  void init_shape(const std::string& name, ParamKind kind, Eigen::Index in, Eigen::Index out) {
    W.init_shape(name + ".W", kind, in, out);
    b.init_shape(name + ".b", kind, 1, out);
  }

  void attach_lora(const std::string& name, Eigen::Index rank, double alpha) {
    has_lora = true;
    lora_scale = static_cast<T>(alpha / static_cast<double>(rank));
    A.init_shape(name + ".lora_A", ParamKind::kAdapter, W.value.rows(), rank);
    B.init_shape(name + ".lora_B", ParamKind::kAdapter, rank, W.value.cols());
  }

  Eigen::Index in_dim() const { return W.value.rows(); }
  Eigen::Index out_dim() const { return W.value.cols(); }

  MatX<T> forward(const MatX<T>& x, Cache* cache) const {
    MatX<T> y = x * W.value;
    y.rowwise() += b.value.row(0);
    if (cache) cache->x = x;
    if (has_lora) {
      MatX<T> xa = x * A.value;
      y.noalias() += lora_scale * (xa * B.value);
      if (cache) cache->xa = std::move(xa);
    }
    return y;
  }

  // Accumulates dW, db (and dA, dB) and returns dx.
  MatX<T> backward(const MatX<T>& dy, const Cache& cache) {
    W.grad.noalias() += cache.x.transpose() * dy;
    b.grad.row(0) += dy.colwise().sum();
    MatX<T> dx = dy * W.value.transpose();
    if (has_lora) {
      B.grad.noalias() += lora_scale * (cache.xa.transpose() * dy);
      MatX<T> dyBt = dy * B.value.transpose();  // N x r
      A.grad.noalias() += lora_scale * (cache.x.transpose() * dyBt);
      dx.noalias() += lora_scale * (dyBt * A.value.transpose());
    }
    return dx;
  }

  void collect(std::vector<Param<T>*>* out) {
    out->push_back(&W);
    out->push_back(&b);
    if (has_lora) {
      out->push_back(&A);
      out->push_back(&B);
    }
  }
};

// --- Layer norm ------------------------------------------------------------

template <typename T>
struct LayerNorm {
  Param<T> gamma;  // 1 x d
  Param<T> beta;   // 1 x d
  static constexpr T kEps = static_cast<T>(1e-5);

  struct Cache {
    MatX<T> xhat;   // normalized input
    VecX<T> rstd;   // per-row 1/sqrt(var + eps)
  };

  void init_shape(const std::string& name, ParamKind kind, Eigen::Index d) {
    gamma.init_shape(name + ".gamma", kind, 1, d);
    gamma.value.setOnes();
    beta.init_shape(name + ".beta", kind, 1, d);
  }

  MatX<T> forward(const MatX<T>& x, Cache* cache) const {
    const Eigen::Index n = x.rows(), d = x.cols();
    MatX<T> xhat(n, d);
    VecX<T> rstd(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      const T mean = x.row(r).mean();
      const T var = (x.row(r).array() - mean).square().sum() / static_cast<T>(d);
      rstd(r) = static_cast<T>(1) / std::sqrt(var + kEps);
      xhat.row(r) = (x.row(r).array() - mean) * rstd(r);
    }
    MatX<T> y = xhat.array().rowwise() * gamma.value.row(0).array();
    y.array().rowwise() += beta.value.row(0).array();
    if (cache) {
      cache->xhat = std::move(xhat);
      cache->rstd = std::move(rstd);
    }
    return y;
  }

  MatX<T> backward(const MatX<T>& dy, const Cache& cache) {
    const Eigen::Index n = dy.rows(), d = dy.cols();
    gamma.grad.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    beta.grad.row(0) += dy.colwise().sum();
    MatX<T> dx(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
      // dxhat = dy * gamma; dx = rstd * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
      Eigen::Array<T, 1, Eigen::Dynamic> dxhat =
          dy.row(r).array() * gamma.value.row(0).array();
      const T m1 = dxhat.mean();
      const T m2 = (dxhat * cache.xhat.row(r).array()).mean();
      dx.row(r) =
          ((dxhat - m1 - cache.xhat.row(r).array() * m2) * cache.rstd(r)).matrix();
    }
    return dx;
  }

  void collect(std::vector<Param<T>*>* out) {
    out->push_back(&gamma);
    out->push_back(&beta);
  }
};

}  // namespace tcr3
