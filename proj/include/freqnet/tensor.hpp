#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "freqnet/error.hpp"

namespace freqnet {

using Shape = std::vector<std::int64_t>;

inline std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

inline std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

namespace detail {

inline std::uint64_t next_seq() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

inline bool& finite_checks_flag() {
  static bool enabled = true;
  return enabled;
}

}  // namespace detail

// Forward values are required to stay finite; the scan can be switched off
// for timing-sensitive runs but stays on by default.
inline void set_finite_checks(bool enabled) { detail::finite_checks_flag() = enabled; }
inline bool finite_checks_enabled() { return detail::finite_checks_flag(); }

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated lazily during backward
  bool requires_grad = false;
  bool needs_grad = false;  // requires_grad here or anywhere upstream
  bool backward_done = false;
  std::uint64_t seq = 0;
  std::string label;
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

// Value-semantic handle over a shared graph node. Values are immutable after
// creation except for leaf tensors, whose storage the optimizer updates
// between graph builds.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr<T> node) : node_(std::move(node)) {}

  static Tensor from(Shape shape, std::vector<T> data) {
    if (numel(shape) != static_cast<std::int64_t>(data.size())) {
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
    }
    auto node = std::make_shared<Node<T>>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->seq = detail::next_seq();
    return Tensor(std::move(node));
  }

  static Tensor full(Shape shape, T v) {
    auto n = numel(shape);
    return from(std::move(shape), std::vector<T>(static_cast<std::size_t>(n), v));
  }

  static Tensor zeros(Shape shape) { return full(std::move(shape), T(0)); }

  static Tensor scalar(T v) { return from(Shape{}, std::vector<T>{v}); }

  bool defined() const { return node_ != nullptr; }

  const Shape& shape() const { return check()->shape; }

  std::int64_t size() const { return static_cast<std::int64_t>(check()->value.size()); }

  std::int64_t dim(std::size_t i) const {
    const auto& s = shape();
    if (i >= s.size()) throw ShapeError("dimension index out of range for " + shape_str(s));
    return s[i];
  }

  const std::vector<T>& data() const { return check()->value; }

  // Mutable access to leaf storage. The optimizer and finite-difference
  // harness rewrite parameter values through this between graph builds.
  std::vector<T>& raw_data() {
    auto n = check();
    if (!n->parents.empty())
      throw ContractError("raw_data: only leaf tensors may be mutated (node '" + n->label + "')");
    return n->value;
  }

  T item() const {
    auto n = check();
    if (n->value.size() != 1)
      throw ContractError("item: tensor has shape " + shape_str(n->shape) + ", expected a scalar");
    return n->value[0];
  }

  T at(std::initializer_list<std::int64_t> idx) const {
    auto n = check();
    if (idx.size() != n->shape.size())
      throw ShapeError("at: rank mismatch for shape " + shape_str(n->shape));
    std::int64_t flat = 0;
    std::size_t k = 0;
    for (auto i : idx) {
      if (i < 0 || i >= n->shape[k])
        throw ShapeError("at: index out of bounds for shape " + shape_str(n->shape));
      flat = flat * n->shape[k] + i;
      ++k;
    }
    return n->value[static_cast<std::size_t>(flat)];
  }

  bool requires_grad() const { return check()->requires_grad; }

  Tensor& set_requires_grad(bool b) {
    auto n = check();
    if (!n->parents.empty())
      throw ContractError("set_requires_grad: only valid on leaf tensors");
    n->requires_grad = b;
    n->needs_grad = b;
    return *this;
  }

  bool has_grad() const { return !check()->grad.empty(); }

  const std::vector<T>& grad() const {
    auto n = check();
    if (n->grad.empty())
      throw ContractError("grad: no gradient present on '" + n->label + "' (run backward first)");
    return n->grad;
  }

  void zero_grad() { check()->grad.clear(); }

  const std::string& label() const { return check()->label; }

  Tensor& set_label(std::string label) {
    check()->label = std::move(label);
    return *this;
  }

  NodePtr<T> node() const { return node_; }

 private:
  NodePtr<T> check() const {
    if (!node_) throw ContractError("operation on an undefined tensor");
    return node_;
  }

  NodePtr<T> node_;
};

namespace detail {

template <typename T>
void check_finite(const std::vector<T>& v, const std::string& label) {
  if (!finite_checks_flag()) return;
  for (const T x : v) {
    if (!std::isfinite(static_cast<double>(x)))
      throw NumericError("non-finite value produced by '" + label + "'");
  }
}

template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> value, std::vector<NodePtr<T>> parents,
                  std::string label, std::function<void(Node<T>&)> backward_fn) {
  if (numel(shape) != static_cast<std::int64_t>(value.size()))
    throw ShapeError("internal: op '" + label + "' produced " + std::to_string(value.size()) +
                     " values for shape " + shape_str(shape));
  check_finite(value, label);
  auto node = std::make_shared<Node<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->parents = std::move(parents);
  for (const auto& p : node->parents) {
    if (p && p->needs_grad) node->needs_grad = true;
  }
  if (node->needs_grad) node->backward_fn = std::move(backward_fn);
  node->seq = next_seq();
  node->label = std::move(label);
  return Tensor<T>(std::move(node));
}

template <typename T>
void accumulate(Node<T>& parent, std::span<const T> g) {
  if (!parent.needs_grad) return;
  parent.ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) parent.grad[i] += g[i];
}

}  // namespace detail

// Reverse-mode pass. Gradients accumulate additively into every node that
// needs them; the traversal order is descending creation order, so repeated
// runs over an identically built graph are bit-identical.
template <typename T>
void backward(const Tensor<T>& loss) {
  auto root = loss.node();
  if (!root) throw ContractError("backward: undefined tensor");
  if (!root->shape.empty())
    throw ContractError("backward: loss must be a scalar of shape [], got " +
                        shape_str(root->shape));
  if (root->backward_done)
    throw ContractError("backward: this graph was already differentiated; rebuild it before "
                        "calling backward again");

  std::vector<Node<T>*> order;
  std::vector<Node<T>*> stack{root.get()};
  std::unordered_set<const Node<T>*> seen{root.get()};
  while (!stack.empty()) {
    Node<T>* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Node<T>* a, const Node<T>* b) { return a->seq > b->seq; });

  root->ensure_grad();
  root->grad[0] = T(1);
  for (Node<T>* n : order) {
    if (!n->backward_fn || n->grad.empty()) continue;
    n->backward_fn(*n);
  }
  root->backward_done = true;
}

// Named trainable tensor. learning_rate_scale multiplies the optimizer step
// for this parameter only; decay marks it for weight decay.
template <typename T>
struct Parameter {
  Tensor<T> value;
  std::string name;
  T learning_rate_scale = T(1);
  bool decay = false;

  Parameter() = default;
  Parameter(Tensor<T> v, std::string n, T lr_scale = T(1), bool apply_decay = false)
      : value(std::move(v)), name(std::move(n)), learning_rate_scale(lr_scale), decay(apply_decay) {
    if (!(learning_rate_scale > T(0)))
      throw ContractError("parameter '" + name + "': learning_rate_scale must be positive");
    value.set_requires_grad(true);
    value.set_label(name);
  }

  std::vector<T>& grad_or_zero() {
    auto n = value.node();
    n->ensure_grad();
    return n->grad;
  }
};

template <typename T>
void fill_randn(Tensor<T>& t, std::mt19937_64& rng, double stddev, double mean = 0.0) {
  std::normal_distribution<double> dist(mean, stddev);
  for (auto& v : t.raw_data()) v = static_cast<T>(dist(rng));
}

template <typename T>
void fill_uniform(Tensor<T>& t, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.raw_data()) v = static_cast<T>(dist(rng));
}

}  // namespace freqnet
