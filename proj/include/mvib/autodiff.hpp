#pragma once

// Tape-based reverse-mode differentiation over rank-2 tensors.
//
// A Tape owns every node created while building one expression graph. Nodes
// are appended in creation order, which is a topological order, so backward()
// is a single reverse sweep. Gradient buffers are allocated on first use;
// nodes the loss does not depend on keep an all-zero gradient.

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mvib/error.hpp"
#include "mvib/rng.hpp"
#include "mvib/tensor.hpp"

namespace mvib {

inline constexpr double kProbabilityFloor = 1e-12;
inline constexpr double kDistributionTolerance = 1e-6;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while its Tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const {
    if (!tape_) throw InvalidArgument("use of an unbound Var");
    return *tape_;
  }
  std::size_t id() const { return id_; }

  const Tensor& value() const;
  // Gradient of the last backward() target; zeros when nothing reached this node.
  Tensor grad() const;
  bool requires_grad() const;

  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Trainable input.
  Var leaf(Tensor value) { return push(std::move(value), true, {}); }
  /// Input that never receives a gradient.
  Var constant(Tensor value) { return push(std::move(value), false, {}); }

  Var push(Tensor value, bool requires_grad, BackwardFn backward) {
    if (value.rank() != 2) throw InvalidArgument("autodiff tensors must be rank 2, got " + value.shape_string());
    nodes_.push_back(Node{std::move(value), Tensor(), std::move(backward), requires_grad});
    return Var(this, nodes_.size() - 1);
  }

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  bool has_grad(std::size_t id) const { return !nodes_.at(id).grad.empty(); }
  const Tensor& grad_ref(std::size_t id) const { return nodes_.at(id).grad; }

  // Gradient buffer of a node that takes part in backward, zero-initialized on first use.
  Tensor& grad_buffer(std::size_t id) {
    Node& n = nodes_.at(id);
    if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
    return n.grad;
  }

  /// Populates d loss / d node for every node the scalar `loss` depends on.
  void backward(const Var& loss) {
    if (&loss.tape() != this) throw InvalidArgument("backward: loss belongs to a different tape");
    if (backward_done_) throw InvalidArgument("backward called twice without reset_gradients()");
    const Tensor& v = value(loss.id());
    if (v.size() != 1) throw InvalidArgument("backward: loss must be a scalar, got " + v.shape_string());
    backward_done_ = true;
    grad_buffer(loss.id())[0] = 1.0;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (n.grad.empty() || !n.requires_grad || !n.backward) continue;
      n.backward(*this, id);
    }
  }

  void reset_gradients() {
    for (auto& n : nodes_) n.grad = Tensor();
    backward_done_ = false;
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  std::deque<Node> nodes_;  // deque: node references stay valid as the tape grows
  bool backward_done_ = false;
};

inline const Tensor& Var::value() const { return tape().value(id_); }
inline Tensor Var::grad() const {
  const Tape& t = tape();
  return t.has_grad(id_) ? t.grad_ref(id_) : Tensor(t.value(id_).shape(), 0.0);
}
inline bool Var::requires_grad() const { return tape().requires_grad(id_); }

namespace detail {

inline Tape& common_tape(std::initializer_list<const Var*> vars) {
  Tape* t = nullptr;
  for (const Var* v : vars) {
    Tape& vt = v->tape();
    if (t && t != &vt) throw InvalidArgument("operands live on different tapes");
    t = &vt;
  }
  return *t;
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw InvalidArgument(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

inline bool wants_grad(const Tape& t, const Var& v) { return t.requires_grad(v.id()); }

}  // namespace detail

/// Records stop_gradient values in one pass and substitutes them, in the same
/// order, in later passes. Finite-difference checks use it to hold teachers
/// fixed while the students move.
struct StopGradientTrace {
  std::vector<Tensor> values;
  std::size_t next = 0;
  bool replay = false;
};

namespace detail {
inline thread_local StopGradientTrace* active_trace = nullptr;
}  // namespace detail

class ScopedStopGradientTrace {
 public:
  explicit ScopedStopGradientTrace(StopGradientTrace& trace) : previous_(detail::active_trace) {
    trace.next = 0;
    detail::active_trace = &trace;
  }
  ~ScopedStopGradientTrace() { detail::active_trace = previous_; }
  ScopedStopGradientTrace(const ScopedStopGradientTrace&) = delete;
  ScopedStopGradientTrace& operator=(const ScopedStopGradientTrace&) = delete;

 private:
  StopGradientTrace* previous_;
};

/// Node with the same value that blocks gradient flow to `x`.
inline Var stop_gradient(const Var& x) {
  Tape& t = x.tape();
  StopGradientTrace* trace = detail::active_trace;
  if (!trace) return t.push(x.value(), false, {});
  if (!trace->replay) {
    trace->values.push_back(x.value());
    return t.push(x.value(), false, {});
  }
  if (trace->next >= trace->values.size() || trace->values[trace->next].shape() != x.value().shape()) {
    throw InvalidArgument("stop_gradient: replayed trace does not match the graph");
  }
  return t.push(trace->values[trace->next++], false, {});
}

inline Var matmul(const Var& a, const Var& b) {
  Tape& t = detail::common_tape({&a, &b});
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.rows()) {
    throw InvalidArgument("matmul: shape mismatch " + A.shape_string() + " x " + B.shape_string());
  }
  const std::size_t M = A.rows(), K = A.cols(), N = B.cols();
  Tensor C = Tensor::matrix(M, N);
  for (std::size_t i = 0; i < M; ++i) {
    double* c = &C(i, 0);
    for (std::size_t k = 0; k < K; ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;
      const double* brow = B.row(k).data();
      for (std::size_t j = 0; j < N; ++j) c[j] += aik * brow[j];
    }
  }
  const bool rg = detail::wants_grad(t, a) || detail::wants_grad(t, b);
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(C), rg, [ia, ib, M, K, N](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad_ref(self);
    const Tensor& A = tp.value(ia);
    const Tensor& B = tp.value(ib);
    if (tp.requires_grad(ia)) {
      Tensor& dA = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < M; ++i) {
        const double* g = G.row(i).data();
        for (std::size_t k = 0; k < K; ++k) {
          const double* brow = B.row(k).data();
          double s = 0.0;
          for (std::size_t j = 0; j < N; ++j) s += g[j] * brow[j];
          dA(i, k) += s;
        }
      }
    }
    if (tp.requires_grad(ib)) {
      Tensor& dB = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < M; ++i) {
        const double* g = G.row(i).data();
        for (std::size_t k = 0; k < K; ++k) {
          const double aik = A(i, k);
          if (aik == 0.0) continue;
          double* d = &dB(k, 0);
          for (std::size_t j = 0; j < N; ++j) d[j] += aik * g[j];
        }
      }
    }
  });
}

inline Var add(const Var& a, const Var& b) {
  Tape& t = detail::common_tape({&a, &b});
  detail::require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), detail::wants_grad(t, a) || detail::wants_grad(t, b), [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad_ref(self);
    for (std::size_t id : {ia, ib}) {
      if (!tp.requires_grad(id)) continue;
      Tensor& d = tp.grad_buffer(id);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += G[i];
    }
  });
}

inline Var sub(const Var& a, const Var& b) {
  Tape& t = detail::common_tape({&a, &b});
  detail::require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), detail::wants_grad(t, a) || detail::wants_grad(t, b), [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad_ref(self);
    if (tp.requires_grad(ia)) {
      Tensor& d = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += G[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor& d = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= G[i];
    }
  });
}

/// x (rows x C) + bias (1 x C), bias broadcast over rows.
inline Var add_bias(const Var& x, const Var& bias) {
  Tape& t = detail::common_tape({&x, &bias});
  const Tensor& X = x.value();
  const Tensor& b = bias.value();
  if (b.rows() != 1 || b.cols() != X.cols()) {
    throw InvalidArgument("add_bias: bias " + b.shape_string() + " does not match " + X.shape_string());
  }
  Tensor out = X;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += b[c];
  }
  const std::size_t ix = x.id(), ib = bias.id();
  return t.push(std::move(out), detail::wants_grad(t, x) || detail::wants_grad(t, bias), [ix, ib](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad_ref(self);
    if (tp.requires_grad(ix)) {
      Tensor& d = tp.grad_buffer(ix);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += G[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor& d = tp.grad_buffer(ib);
      for (std::size_t r = 0; r < G.rows(); ++r) {
        for (std::size_t c = 0; c < G.cols(); ++c) d[c] += G(r, c);
      }
    }
  });
}

inline Var scale(const Var& x, double factor) {
  Tape& t = x.tape();
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= factor;
  const std::size_t ix = x.id();
  return t.push(std::move(out), detail::wants_grad(t, x), [ix, factor](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad_ref(self);
    Tensor& d = tp.grad_buffer(ix);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * G[i];
  });
}

/// Elementwise product.
inline Var mul(const Var& a, const Var& b) {
  Tape& t = detail::common_tape({&a, &b});
  detail::require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(std::move(out), detail::wants_grad(t, a) || detail::wants_grad(t, b), [ia, ib](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad_ref(self);
    const Tensor& A = tp.value(ia);
    const Tensor& B = tp.value(ib);
    if (tp.requires_grad(ia)) {
      Tensor& d = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += G[i] * B[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor& d = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += G[i] * A[i];
    }
  });
}

/// Sum of all entries, as a 1x1 node.
inline Var sum(const Var& x) {
  Tape& t = x.tape();
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t ix = x.id();
  return t.push(Tensor::scalar(s), detail::wants_grad(t, x), [ix](Tape& tp, std::size_t self) {
    const double g = tp.grad_ref(self)[0];
    Tensor& d = tp.grad_buffer(ix);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g;
  });
}

inline Var relu(const Var& x) {
  Tape& t = x.tape();
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  const std::size_t ix = x.id();
  return t.push(std::move(out), detail::wants_grad(t, x), [ix](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad_ref(self);
    const Tensor& X = tp.value(ix);
    Tensor& d = tp.grad_buffer(ix);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (X[i] > 0.0) d[i] += G[i];
    }
  });
}

/// Column-wise concatenation of nodes with equal row counts.
inline Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("concat: no inputs");
  Tape& t = parts[0].tape();
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids, widths;
  bool rg = false;
  for (const Var& p : parts) {
    if (&p.tape() != &t) throw InvalidArgument("concat: operands live on different tapes");
    if (p.rows() != rows) throw InvalidArgument("concat: row counts differ");
    ids.push_back(p.id());
    widths.push_back(p.cols());
    cols += p.cols();
    rg = rg || t.requires_grad(p.id());
  }
  Tensor out = Tensor::matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const auto src = parts[k].value().row(r);
      std::copy(src.begin(), src.end(), &out(r, offset));
      offset += widths[k];
    }
  }
  return t.push(std::move(out), rg, [ids, widths](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad_ref(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (tp.requires_grad(ids[k])) {
        Tensor& d = tp.grad_buffer(ids[k]);
        for (std::size_t r = 0; r < G.rows(); ++r) {
          for (std::size_t c = 0; c < widths[k]; ++c) d(r, c) += G(r, offset + c);
        }
      }
      offset += widths[k];
    }
  });
}

inline Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

/// Columns [begin, end).
inline Var slice_cols(const Var& x, std::size_t begin, std::size_t end) {
  Tape& t = x.tape();
  const Tensor& X = x.value();
  if (begin >= end || end > X.cols()) throw InvalidArgument("slice_cols: bad range");
  const std::size_t w = end - begin;
  Tensor out = Tensor::matrix(X.rows(), w);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    for (std::size_t c = 0; c < w; ++c) out(r, c) = X(r, begin + c);
  }
  const std::size_t ix = x.id();
  return t.push(std::move(out), detail::wants_grad(t, x), [ix, begin, w](Tape& tp, std::size_t self) {
    const Tensor& G = tp.grad_ref(self);
    Tensor& d = tp.grad_buffer(ix);
    for (std::size_t r = 0; r < G.rows(); ++r) {
      for (std::size_t c = 0; c < w; ++c) d(r, begin + c) += G(r, c);
    }
  });
}

/// Softmax along `axis` (1: each row is a distribution, 0: each column).
/// Max-subtracted for stability.
inline Var softmax(const Var& logits, int axis = 1) {
  if (axis != 0 && axis != 1) throw InvalidArgument("softmax: axis must be 0 or 1");
  Tape& t = logits.tape();
  const Tensor& X = logits.value();
  if (!X.all_finite()) throw DivergenceError("softmax: non-finite logits");
  const std::size_t lines = axis == 1 ? X.rows() : X.cols();
  const std::size_t len = axis == 1 ? X.cols() : X.rows();
  auto at = [&](std::size_t line, std::size_t k) { return axis == 1 ? line * X.cols() + k : k * X.cols() + line; };

  Tensor out(X.shape(), 0.0);
  for (std::size_t l = 0; l < lines; ++l) {
    double m = X[at(l, 0)];
    for (std::size_t k = 1; k < len; ++k) m = std::max(m, X[at(l, k)]);
    double z = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const double e = std::exp(X[at(l, k)] - m);
      out[at(l, k)] = e;
      z += e;
    }
    for (std::size_t k = 0; k < len; ++k) out[at(l, k)] /= z;
  }
  const std::size_t ix = logits.id();
  const std::size_t cols = X.cols();
  return t.push(std::move(out), detail::wants_grad(t, logits),
                [ix, axis, lines, len, cols](Tape& tp, std::size_t self) {
                  const Tensor& G = tp.grad_ref(self);
                  const Tensor& S = tp.value(self);
                  Tensor& d = tp.grad_buffer(ix);
                  auto at = [&](std::size_t line, std::size_t k) {
                    return axis == 1 ? line * cols + k : k * cols + line;
                  };
                  for (std::size_t l = 0; l < lines; ++l) {
                    double dot = 0.0;
                    for (std::size_t k = 0; k < len; ++k) dot += G[at(l, k)] * S[at(l, k)];
                    for (std::size_t k = 0; k < len; ++k) d[at(l, k)] += S[at(l, k)] * (G[at(l, k)] - dot);
                  }
                });
}

namespace detail {

inline void require_distribution_rows(const Tensor& p, const char* op) {
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double s = 0.0;
    for (double x : p.row(r)) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument(std::string(op) + ": negative or non-finite probability");
      s += x;
    }
    if (std::abs(s - 1.0) > kDistributionTolerance) {
      throw InvalidArgument(std::string(op) + ": row " + std::to_string(r) + " sums to " + std::to_string(s));
    }
  }
}

}  // namespace detail

/// Mean over rows of KL(p_r || q_r) = sum_c p log(p / max(q, 1e-12)).
/// The floor guards the value only: below it the gradient is still -p / q, so
/// a confidently wrong student keeps learning.
///
/// Returns a 1x1 node. Stop-gradient on either side is the caller's choice
/// (wrap it in stop_gradient()).
inline Var kl_divergence(const Var& p, const Var& q) {
  Tape& t = detail::common_tape({&p, &q});
  const Tensor& P = p.value();
  const Tensor& Q = q.value();
  detail::require_same_shape(P, Q, "kl_divergence");
  detail::require_distribution_rows(P, "kl_divergence");
  detail::require_distribution_rows(Q, "kl_divergence");
  const double inv_rows = 1.0 / static_cast<double>(P.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (P[i] > 0.0) total += P[i] * (std::log(P[i]) - std::log(std::max(Q[i], kProbabilityFloor)));
  }
  const std::size_t ip = p.id(), iq = q.id();
  return t.push(Tensor::scalar(total * inv_rows), detail::wants_grad(t, p) || detail::wants_grad(t, q),
                [ip, iq, inv_rows](Tape& tp, std::size_t self) {
                  const double g = tp.grad_ref(self)[0] * inv_rows;
                  const Tensor& P = tp.value(ip);
                  const Tensor& Q = tp.value(iq);
                  if (tp.requires_grad(iq)) {
                    Tensor& d = tp.grad_buffer(iq);
                    for (std::size_t i = 0; i < d.size(); ++i) {
                      if (Q[i] >= std::numeric_limits<double>::min()) d[i] -= g * P[i] / Q[i];
                    }
                  }
                  if (tp.requires_grad(ip)) {
                    Tensor& d = tp.grad_buffer(ip);
                    for (std::size_t i = 0; i < d.size(); ++i) {
                      d[i] += g * (std::log(std::max(P[i], kProbabilityFloor)) -
                                   std::log(std::max(Q[i], kProbabilityFloor)) + 1.0);
                    }
                  }
                });
}

/// Mean over rows of -log max(pred[r, label_r], 1e-12). `pred` holds
/// probabilities. As in kl_divergence the floor does not zero the gradient.
inline Var cross_entropy(const Var& pred, std::span<const int> labels) {
  Tape& t = pred.tape();
  const Tensor& P = pred.value();
  if (labels.size() != P.rows()) throw InvalidArgument("cross_entropy: label count does not match batch size");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= P.cols()) {
      throw InvalidArgument("cross_entropy: label " + std::to_string(y) + " out of range");
    }
  }
  const double inv_rows = 1.0 / static_cast<double>(P.rows());
  double total = 0.0;
  for (std::size_t r = 0; r < P.rows(); ++r) total -= std::log(std::max(P(r, labels[r]), kProbabilityFloor));
  std::vector<int> ys(labels.begin(), labels.end());
  const std::size_t ip = pred.id();
  return t.push(Tensor::scalar(total * inv_rows), detail::wants_grad(t, pred),
                [ip, ys = std::move(ys), inv_rows](Tape& tp, std::size_t self) {
                  const double g = tp.grad_ref(self)[0] * inv_rows;
                  const Tensor& P = tp.value(ip);
                  Tensor& d = tp.grad_buffer(ip);
                  for (std::size_t r = 0; r < P.rows(); ++r) {
                    const double p = P(r, ys[r]);
                    if (p >= std::numeric_limits<double>::min()) d(r, ys[r]) -= g / p;
                  }
                });
}

/// z = mean + exp(0.5 * log_var) * xi, xi ~ N(0, 1) drawn row-major from `rng`.
inline Var gaussian_reparameterize(const Var& mean, const Var& log_var, Rng& rng) {
  Tape& t = detail::common_tape({&mean, &log_var});
  detail::require_same_shape(mean.value(), log_var.value(), "gaussian_reparameterize");
  const Tensor& M = mean.value();
  const Tensor& L = log_var.value();
  std::vector<double> noise(M.size());
  for (auto& x : noise) x = rng.normal();
  Tensor out = M;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::exp(0.5 * L[i]) * noise[i];
  const std::size_t im = mean.id(), il = log_var.id();
  return t.push(std::move(out), detail::wants_grad(t, mean) || detail::wants_grad(t, log_var),
                [im, il, noise = std::move(noise)](Tape& tp, std::size_t self) {
                  const Tensor& G = tp.grad_ref(self);
                  if (tp.requires_grad(im)) {
                    Tensor& d = tp.grad_buffer(im);
                    for (std::size_t i = 0; i < d.size(); ++i) d[i] += G[i];
                  }
                  if (tp.requires_grad(il)) {
                    const Tensor& L = tp.value(il);
                    Tensor& d = tp.grad_buffer(il);
                    for (std::size_t i = 0; i < d.size(); ++i) d[i] += G[i] * 0.5 * std::exp(0.5 * L[i]) * noise[i];
                  }
                });
}

}  // namespace mvib
