#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "freqnet/gradcheck.hpp"
#include "freqnet/ops.hpp"
#include "freqnet/tensor.hpp"

using namespace freqnet;

namespace {

Tensor<double> randt(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  auto t = Tensor<double>::zeros(std::move(shape));
  fill_uniform(t, rng, lo, hi);
  return t;
}

Shape random_shape(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> rank_dist(1, 4);
  std::uniform_int_distribution<std::int64_t> dim_dist(1, 8);
  Shape s(static_cast<std::size_t>(rank_dist(rng)));
  for (auto& d : s) d = dim_dist(rng);
  return s;
}

}  // namespace

TEST_CASE("elementwise arithmetic") {
  auto a = Tensor<double>::from({2}, {1, 2});
  auto b = Tensor<double>::from({2}, {3, 4});
  CHECK(add(a, b).data() == std::vector<double>{4, 6});
  CHECK(sub(b, a).data() == std::vector<double>{2, 2});
  CHECK(mul(a, b).data() == std::vector<double>{3, 8});
  CHECK(div(b, a).data() == std::vector<double>{3, 2});
  CHECK(add(a, 10.0).data() == std::vector<double>{11, 12});
  CHECK(mul(a, 2.0).data() == std::vector<double>{2, 4});
}

TEST_CASE("relu definition") {
  auto x = Tensor<double>::from({3}, {-1, 0, 2});
  CHECK(relu(x).data() == std::vector<double>{0, 0, 2});
}

TEST_CASE("matmul identity") {
  std::mt19937_64 rng(1);
  auto a = randt({3, 3}, rng);
  auto eye = Tensor<double>::zeros({3, 3});
  for (int i = 0; i < 3; ++i) eye.raw_data()[static_cast<std::size_t>(i * 3 + i)] = 1.0;
  auto out = matmul(eye, a);
  for (std::size_t i = 0; i < 9; ++i) CHECK(out.data()[i] == doctest::Approx(a.data()[i]));
}

TEST_CASE("shape mismatch reports both shapes") {
  auto a = Tensor<double>::zeros({2, 3});
  auto b = Tensor<double>::zeros({3});
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("[2, 3]"), ShapeError);
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
}

TEST_CASE("domain errors") {
  auto a = Tensor<double>::from({2}, {1, -1});
  CHECK_THROWS_AS(log(a), DomainError);
  auto z = Tensor<double>::from({2}, {1, 0});
  CHECK_THROWS_AS(div(a, z), DomainError);
  CHECK_THROWS_AS(div(a, 0.0), DomainError);
}

TEST_CASE("finite check flags NaN outputs") {
  auto a = Tensor<double>::from({1}, {1e308});
  CHECK_THROWS_AS(mul(a, a), NumericError);
  set_finite_checks(false);
  CHECK_NOTHROW(mul(a, a));
  set_finite_checks(true);
}

TEST_CASE("backward of sum(w*w)") {
  auto w = Tensor<double>::from({1}, {3}).set_requires_grad(true);
  auto loss = sum(mul(w, w));
  backward(loss);
  CHECK(w.grad()[0] == doctest::Approx(6.0));
}

TEST_CASE("backward of mean") {
  auto x = Tensor<double>::from({4}, {1, 2, 3, 4}).set_requires_grad(true);
  backward(mean(x));
  for (double g : x.grad()) CHECK(g == doctest::Approx(0.25));
}

TEST_CASE("softmax cross entropy at uniform logits") {
  auto z = Tensor<double>::zeros({1, 10}).set_requires_grad(true);
  std::vector<std::int32_t> labels{0};
  auto [loss, acc] = softmax_cross_entropy(z, labels);
  CHECK(loss.item() == doctest::Approx(std::log(10.0)));
  CHECK(acc == doctest::Approx(1.0));  // ties resolve to class 0
  backward(loss);
  CHECK(z.grad()[0] == doctest::Approx(0.1 - 1.0));
  for (std::size_t j = 1; j < 10; ++j) CHECK(z.grad()[j] == doctest::Approx(0.1));
}

TEST_CASE("softmax cross entropy gradient matches finite differences") {
  std::mt19937_64 rng(7);
  Parameter<double> z(randt({3, 5}, rng), "z");
  std::vector<std::int32_t> labels{1, 4, 0};
  Parameter<double>* params[] = {&z};
  const double err = grad_check(
      [&] { return softmax_cross_entropy(z.value, std::span<const std::int32_t>(labels)).loss; },
      params, 1e-6);
  CHECK(err < 1e-7);
}

TEST_CASE("label out of range is a data error") {
  auto z = Tensor<double>::zeros({1, 3});
  std::vector<std::int32_t> labels{3};
  CHECK_THROWS_AS(softmax_cross_entropy(z, std::span<const std::int32_t>(labels)), DataError);
}

TEST_CASE("backward contract errors") {
  auto x = Tensor<double>::from({2}, {1, 2}).set_requires_grad(true);
  auto y = mul(x, 2.0);
  CHECK_THROWS_AS(backward(y), ContractError);  // non-scalar loss
  auto loss = sum(y);
  backward(loss);
  CHECK_THROWS_AS(backward(loss), ContractError);  // second backward without rebuild
}

TEST_CASE("gradients accumulate over shared consumers") {
  auto w = Tensor<double>::from({2}, {1.5, -2.0}).set_requires_grad(true);
  // branch A: sum(w*w), branch B: 3*sum(w)
  auto branch_a = sum(mul(w, w));
  auto branch_b = mul(sum(w), 3.0);
  backward(add(branch_a, branch_b));
  auto both = w.grad();

  w.zero_grad();
  backward(sum(mul(w, w)));
  auto only_a = w.grad();
  w.zero_grad();
  backward(mul(sum(w), 3.0));
  auto only_b = w.grad();

  for (std::size_t i = 0; i < both.size(); ++i)
    CHECK(both[i] == doctest::Approx(only_a[i] + only_b[i]));
}

TEST_CASE("gradient accumulates across separate graphs until zeroed") {
  auto w = Tensor<double>::from({1}, {2.0}).set_requires_grad(true);
  backward(sum(mul(w, w)));
  backward(sum(mul(w, w)));
  CHECK(w.grad()[0] == doctest::Approx(8.0));
  w.zero_grad();
  CHECK_FALSE(w.has_grad());
}

TEST_CASE("identical runs produce bit-identical gradients") {
  std::mt19937_64 rng(11);
  auto base = randt({4, 4}, rng);
  std::vector<std::vector<double>> grads;
  for (int run = 0; run < 2; ++run) {
    auto w = Tensor<double>::from(base.shape(), base.data()).set_requires_grad(true);
    auto h = relu(matmul(w, w));
    backward(mean(mul(h, h)));
    grads.push_back(w.grad());
  }
  CHECK(grads[0] == grads[1]);
}

TEST_CASE("max reduction breaks ties at the first index") {
  auto x = Tensor<double>::from({4}, {1, 7, 7, 2}).set_requires_grad(true);
  backward(max_all(x));
  CHECK(x.grad() == std::vector<double>{0, 1, 0, 0});
}

TEST_CASE("grad_check on an exact quadratic") {
  Parameter<double> w(Tensor<double>::from({1}, {3.0}), "w");
  Parameter<double>* params[] = {&w};
  const double err = grad_check([&] { return sum(mul(w.value, w.value)); }, params, 1e-5);
  CHECK(err < 1e-8);
}

TEST_CASE("grad_check on a one-layer dense net") {
  std::mt19937_64 rng(3);
  Parameter<double> w(randt({6, 4}, rng, -0.5, 0.5), "w");
  Parameter<double> b(randt({4}, rng, -0.5, 0.5), "b");
  auto x = randt({3, 6}, rng);
  std::vector<std::int32_t> labels{0, 2, 3};
  Parameter<double>* params[] = {&w, &b};
  const double err = grad_check(
      [&] {
        auto logits = add_bias(matmul(x, w.value), b.value);
        return softmax_cross_entropy(logits, std::span<const std::int32_t>(labels)).loss;
      },
      params, 1e-6);
  CHECK(err < 1e-5);
}

// Every kernel, random small shapes (<= 4 dims, <= 8 per dim), gradients
// verified against central differences. Inputs are sampled away from kinks
// and singularities so the difference quotient is trustworthy.
TEST_CASE("grad_check sweep over all kernels") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 8; ++trial) {
    Shape shape = random_shape(rng);

    auto away_from_zero = [&](Tensor<double> t) {
      for (auto& v : t.raw_data())
        if (std::abs(v) < 0.05) v = v < 0 ? v - 0.1 : v + 0.1;
      return t;
    };

    Parameter<double> a(away_from_zero(randt(shape, rng)), "a");
    Parameter<double> b(away_from_zero(randt(shape, rng)), "b");
    Parameter<double>* both[] = {&a, &b};
    Parameter<double>* only_a[] = {&a};

    // fixed mixing tensor keeps losses generic; bounded away from zero so no
    // gradient entry degenerates to finite-difference noise
    auto weights = away_from_zero(randt(shape, rng));

    auto check = [&](auto&& f, std::span<Parameter<double>* const> params, double tol) {
      const double err = grad_check(f, params, 1e-5);
      CAPTURE(trial);
      CHECK(err < tol);
    };

    check([&] { return sum(mul(weights, add(a.value, b.value))); }, both, 1e-5);
    check([&] { return sum(mul(weights, sub(a.value, b.value))); }, both, 1e-5);
    check([&] { return sum(mul(weights, mul(a.value, b.value))); }, both, 1e-5);
    check([&] { return sum(mul(weights, div(a.value, b.value))); }, both, 1e-5);
    check([&] { return mean(mul(weights, relu(a.value))); }, only_a, 1e-5);
    check([&] { return sum(mul(weights, exp(a.value))); }, only_a, 1e-5);
    check([&] { return sum(mul(weights, log(mul(a.value, a.value)))); }, only_a, 1e-5);
    check([&] { return mul(max_all(a.value), 2.0); }, only_a, 1e-5);
    check([&] { return mean(a.value); }, only_a, 1e-5);
    check([&] { return sum(reshape(mul(a.value, b.value), Shape{a.value.size()})); }, both, 1e-5);
  }

  // matmul and bias broadcasting over 2-d shapes
  for (int trial = 0; trial < 4; ++trial) {
    std::uniform_int_distribution<std::int64_t> dim_dist(1, 6);
    const std::int64_t m = dim_dist(rng), k = dim_dist(rng), n = dim_dist(rng);
    Parameter<double> a(randt({m, k}, rng), "a");
    Parameter<double> b(randt({k, n}, rng), "b");
    Parameter<double> bias(randt({n}, rng), "bias");
    auto weights = randt({m, n}, rng);
    Parameter<double>* params[] = {&a, &b, &bias};
    const double err = grad_check(
        [&] { return sum(mul(weights, add_bias(matmul(a.value, b.value), bias.value))); },
        params, 1e-6);
    CHECK(err < 1e-5);
  }
}

TEST_CASE("parameter invariants") {
  CHECK_THROWS_AS(Parameter<double>(Tensor<double>::zeros({1}), "p", 0.0), ContractError);
  Parameter<double> p(Tensor<double>::zeros({2}), "p");
  CHECK(p.value.requires_grad());
  CHECK(p.value.label() == "p");
}

TEST_CASE("raw_data is leaf-only") {
  auto x = Tensor<double>::from({2}, {1, 2});
  auto y = mul(x, 2.0);
  CHECK_THROWS_AS(y.raw_data(), ContractError);
}
