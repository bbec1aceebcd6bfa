#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "freqnet/tensor.hpp"

namespace freqnet {

namespace detail {

template <typename T>
void check_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

// C[M,N] += A[M,K] * B[K,N]
template <typename T>
void gemm_acc(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (std::int64_t l = 0; l < k; ++l) {
      const T ail = a[i * k + l];
      if (ail == T(0)) continue;
      const T* brow = b + l * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += ail * brow[j];
    }
  }
}

// C[M,N] += A[M,K] * B[N,K]^T
template <typename T>
void gemm_abt_acc(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    for (std::int64_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T acc = T(0);
      for (std::int64_t l = 0; l < k; ++l) acc += arow[l] * brow[l];
      c[i * n + j] += acc;
    }
  }
}

// C[K,N] += A[M,K]^T * B[M,N]
template <typename T>
void gemm_atb_acc(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    const T* brow = b + i * n;
    for (std::int64_t l = 0; l < k; ++l) {
      const T ail = arow[l];
      if (ail == T(0)) continue;
      T* crow = c + l * n;
      for (std::int64_t j = 0; j < n; ++j) crow[j] += ail * brow[j];
    }
  }
}

}  // namespace detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape("add", a, b);
  std::vector<T> out(a.data());
  const auto& bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return detail::make_op<T>(
      a.shape(), std::move(out), {a.node(), b.node()}, "add", [pa = a.node(), pb = b.node()](Node<T>& self) {
        detail::accumulate(*pa, std::span<const T>(self.grad));
        detail::accumulate(*pb, std::span<const T>(self.grad));
      });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, T s) {
  std::vector<T> out(a.data());
  for (auto& v : out) v += s;
  return detail::make_op<T>(a.shape(), std::move(out), {a.node()}, "add_scalar",
                            [pa = a.node()](Node<T>& self) {
                              detail::accumulate(*pa, std::span<const T>(self.grad));
                            });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape("sub", a, b);
  std::vector<T> out(a.data());
  const auto& bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return detail::make_op<T>(
      a.shape(), std::move(out), {a.node(), b.node()}, "sub", [pa = a.node(), pb = b.node()](Node<T>& self) {
        detail::accumulate(*pa, std::span<const T>(self.grad));
        if (pb->needs_grad) {
          pb->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] -= self.grad[i];
        }
      });
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a) {
  std::vector<T> out(a.data());
  for (auto& v : out) v = -v;
  return detail::make_op<T>(a.shape(), std::move(out), {a.node()}, "neg",
                            [pa = a.node()](Node<T>& self) {
                              if (!pa->needs_grad) return;
                              pa->ensure_grad();
                              for (std::size_t i = 0; i < self.grad.size(); ++i)
                                pa->grad[i] -= self.grad[i];
                            });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape("mul", a, b);
  std::vector<T> out(a.data());
  const auto& bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return detail::make_op<T>(
      a.shape(), std::move(out), {a.node(), b.node()}, "mul", [pa = a.node(), pb = b.node()](Node<T>& self) {
        if (pa->needs_grad) {
          pa->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            pa->grad[i] += self.grad[i] * pb->value[i];
        }
        if (pb->needs_grad) {
          pb->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            pb->grad[i] += self.grad[i] * pa->value[i];
        }
      });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, T s) {
  std::vector<T> out(a.data());
  for (auto& v : out) v *= s;
  return detail::make_op<T>(a.shape(), std::move(out), {a.node()}, "mul_scalar",
                            [pa = a.node(), s](Node<T>& self) {
                              if (!pa->needs_grad) return;
                              pa->ensure_grad();
                              for (std::size_t i = 0; i < self.grad.size(); ++i)
                                pa->grad[i] += self.grad[i] * s;
                            });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape("div", a, b);
  const auto& bv = b.data();
  for (const T v : bv) {
    if (v == T(0)) throw DomainError("div: zero divisor entry");
  }
  std::vector<T> out(a.data());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= bv[i];
  return detail::make_op<T>(
      a.shape(), std::move(out), {a.node(), b.node()}, "div", [pa = a.node(), pb = b.node()](Node<T>& self) {
        if (pa->needs_grad) {
          pa->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            pa->grad[i] += self.grad[i] / pb->value[i];
        }
        if (pb->needs_grad) {
          pb->ensure_grad();
          for (std::size_t i = 0; i < self.grad.size(); ++i)
            pb->grad[i] -= self.grad[i] * pa->value[i] / (pb->value[i] * pb->value[i]);
        }
      });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, T s) {
  if (s == T(0)) throw DomainError("div: zero scalar divisor");
  return mul(a, T(1) / s);
}

// Bias-style broadcast: b has shape [C] and is added over [N,C] or [N,C,H,W].
// General broadcasting is deliberately unsupported so that shape errors stay loud.
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& b) {
  const auto& xs = x.shape();
  const auto& bs = b.shape();
  if (bs.size() != 1 || (xs.size() != 2 && xs.size() != 4) || xs[1] != bs[0])
    throw ShapeError("add_bias: expected x [N,C] or [N,C,H,W] with bias [C], got " +
                     shape_str(xs) + " and " + shape_str(bs));
  const std::int64_t n = xs[0];
  const std::int64_t c = xs[1];
  const std::int64_t inner = (xs.size() == 4) ? xs[2] * xs[3] : 1;
  std::vector<T> out(x.data());
  const auto& bv = b.data();
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t j = 0; j < c; ++j) {
      T* row = out.data() + (i * c + j) * inner;
      const T bj = bv[static_cast<std::size_t>(j)];
      for (std::int64_t k = 0; k < inner; ++k) row[k] += bj;
    }
  return detail::make_op<T>(
      xs, std::move(out), {x.node(), b.node()}, "add_bias",
      [px = x.node(), pb = b.node(), n, c, inner](Node<T>& self) {
        detail::accumulate(*px, std::span<const T>(self.grad));
        if (pb->needs_grad) {
          pb->ensure_grad();
          for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < c; ++j) {
              const T* row = self.grad.data() + (i * c + j) * inner;
              T acc = T(0);
              for (std::int64_t k = 0; k < inner; ++k) acc += row[k];
              pb->grad[static_cast<std::size_t>(j)] += acc;
            }
        }
      });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (as.size() != 2 || bs.size() != 2 || as[1] != bs[0])
    throw ShapeError("matmul: incompatible shapes " + shape_str(as) + " and " + shape_str(bs));
  const std::int64_t m = as[0], k = as[1], n = bs[1];
  std::vector<T> out(static_cast<std::size_t>(m * n), T(0));
  detail::gemm_acc(a.data().data(), b.data().data(), out.data(), m, k, n);
  return detail::make_op<T>(
      Shape{m, n}, std::move(out), {a.node(), b.node()}, "matmul",
      [pa = a.node(), pb = b.node(), m, k, n](Node<T>& self) {
        if (pa->needs_grad) {
          pa->ensure_grad();
          detail::gemm_abt_acc(self.grad.data(), pb->value.data(), pa->grad.data(), m, n, k);
        }
        if (pb->needs_grad) {
          pb->ensure_grad();
          detail::gemm_atb_acc(pa->value.data(), self.grad.data(), pb->grad.data(), m, k, n);
        }
      });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel(shape) != a.size())
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  std::vector<T> out(a.data());
  return detail::make_op<T>(std::move(shape), std::move(out), {a.node()}, "reshape",
                            [pa = a.node()](Node<T>& self) {
                              detail::accumulate(*pa, std::span<const T>(self.grad));
                            });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = T(0);
  for (const T v : a.data()) acc += v;
  return detail::make_op<T>(Shape{}, std::vector<T>{acc}, {a.node()}, "sum",
                            [pa = a.node()](Node<T>& self) {
                              if (!pa->needs_grad) return;
                              pa->ensure_grad();
                              const T g = self.grad[0];
                              for (auto& v : pa->grad) v += g;
                            });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  if (a.size() == 0) throw ShapeError("mean: empty tensor");
  T acc = T(0);
  for (const T v : a.data()) acc += v;
  const T inv = T(1) / static_cast<T>(a.size());
  return detail::make_op<T>(Shape{}, std::vector<T>{acc * inv}, {a.node()}, "mean",
                            [pa = a.node(), inv](Node<T>& self) {
                              if (!pa->needs_grad) return;
                              pa->ensure_grad();
                              const T g = self.grad[0] * inv;
                              for (auto& v : pa->grad) v += g;
                            });
}

// Ties resolve to the first (lowest flat index) maximum so backward is
// deterministic.
template <typename T>
Tensor<T> max_all(const Tensor<T>& a) {
  if (a.size() == 0) throw ShapeError("max_all: empty tensor");
  const auto& av = a.data();
  std::size_t arg = 0;
  for (std::size_t i = 1; i < av.size(); ++i) {
    if (av[i] > av[arg]) arg = i;
  }
  return detail::make_op<T>(Shape{}, std::vector<T>{av[arg]}, {a.node()}, "max",
                            [pa = a.node(), arg](Node<T>& self) {
                              if (!pa->needs_grad) return;
                              pa->ensure_grad();
                              pa->grad[arg] += self.grad[0];
                            });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> out(a.data());
  for (auto& v : out) v = v > T(0) ? v : T(0);
  return detail::make_op<T>(a.shape(), std::move(out), {a.node()}, "relu",
                            [pa = a.node()](Node<T>& self) {
                              if (!pa->needs_grad) return;
                              pa->ensure_grad();
                              for (std::size_t i = 0; i < self.grad.size(); ++i) {
                                if (pa->value[i] > T(0)) pa->grad[i] += self.grad[i];
                              }
                            });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  std::vector<T> out(a.data());
  for (auto& v : out) v = std::exp(v);
  return detail::make_op<T>(a.shape(), std::move(out), {a.node()}, "exp",
                            [pa = a.node()](Node<T>& self) {
                              if (!pa->needs_grad) return;
                              pa->ensure_grad();
                              for (std::size_t i = 0; i < self.grad.size(); ++i)
                                pa->grad[i] += self.grad[i] * self.value[i];
                            });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  for (const T v : a.data()) {
    if (!(v > T(0))) throw DomainError("log: non-positive operand entry");
  }
  std::vector<T> out(a.data());
  for (auto& v : out) v = std::log(v);
  return detail::make_op<T>(a.shape(), std::move(out), {a.node()}, "log",
                            [pa = a.node()](Node<T>& self) {
                              if (!pa->needs_grad) return;
                              pa->ensure_grad();
                              for (std::size_t i = 0; i < self.grad.size(); ++i)
                                pa->grad[i] += self.grad[i] / pa->value[i];
                            });
}

template <typename T>
struct LossWithAccuracy {
  Tensor<T> loss;
  double accuracy = 0.0;
};

// Fused softmax + mean cross entropy over logits [N,K]. Accuracy counts
// argmax matches with ties resolved to the lowest class index.
template <typename T>
LossWithAccuracy<T> softmax_cross_entropy(const Tensor<T>& logits,
                                          std::span<const std::int32_t> labels) {
  const auto& s = logits.shape();
  if (s.size() != 2) throw ShapeError("softmax_cross_entropy: logits must be [N,K], got " + shape_str(s));
  const std::int64_t n = s[0], k = s[1];
  if (static_cast<std::int64_t>(labels.size()) != n)
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for batch " +
                     std::to_string(n));
  for (const auto y : labels) {
    if (y < 0 || y >= k)
      throw DataError("softmax_cross_entropy: label " + std::to_string(y) + " outside [0, " +
                      std::to_string(k) + ")");
  }
  const auto& z = logits.data();
  std::vector<T> probs(z.size());
  double loss_acc = 0.0;
  std::int64_t correct = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const T* row = z.data() + i * k;
    T m = row[0];
    std::int64_t arg = 0;
    for (std::int64_t j = 1; j < k; ++j) {
      if (row[j] > m) {
        m = row[j];
        arg = j;
      }
    }
    double denom = 0.0;
    for (std::int64_t j = 0; j < k; ++j) denom += std::exp(static_cast<double>(row[j] - m));
    const double log_denom = std::log(denom);
    for (std::int64_t j = 0; j < k; ++j)
      probs[static_cast<std::size_t>(i * k + j)] =
          static_cast<T>(std::exp(static_cast<double>(row[j] - m)) / denom);
    loss_acc += log_denom - static_cast<double>(row[labels[static_cast<std::size_t>(i)]] - m);
    if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  const double mean_loss = loss_acc / static_cast<double>(n);
  std::vector<std::int32_t> label_copy(labels.begin(), labels.end());
  Tensor<T> loss = detail::make_op<T>(
      Shape{}, std::vector<T>{static_cast<T>(mean_loss)}, {logits.node()}, "softmax_cross_entropy",
      [pz = logits.node(), probs = std::move(probs), labels = std::move(label_copy), n, k](Node<T>& self) {
        if (!pz->needs_grad) return;
        pz->ensure_grad();
        const T g = self.grad[0] / static_cast<T>(n);
        for (std::int64_t i = 0; i < n; ++i) {
          for (std::int64_t j = 0; j < k; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i * k + j);
            T p = probs[idx];
            if (j == labels[static_cast<std::size_t>(i)]) p -= T(1);
            pz->grad[idx] += g * p;
          }
        }
      });
  return {std::move(loss), static_cast<double>(correct) / static_cast<double>(n)};
}

template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return add(a, b); }
template <typename T>
Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return sub(a, b); }
template <typename T>
Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) { return mul(a, b); }
template <typename T>
Tensor<T> operator*(const Tensor<T>& a, T s) { return mul(a, s); }

}  // namespace freqnet
