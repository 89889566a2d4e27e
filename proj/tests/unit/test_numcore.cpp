// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <set>

#include "gradcheck.hpp"
#include "promptlab/error.hpp"
#include "promptlab/kernels/vmath.hpp"
#include "promptlab/numcore/adam.hpp"
#include "promptlab/numcore/ops.hpp"

using namespace promptlab;
using nc::Tensor;

TEST_CASE("tensor shape helpers") {
  Tensor t({2, 3, 4}, 1.5);
  CHECK(t.size() == 24);
  CHECK(t.rows() == 6);
  CHECK(t.cols() == 4);
  CHECK(nc::shape_str(t.shape()) == "[2x3x4]");
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);

  const auto m = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  const auto tr = nc::transpose(m);
  CHECK(tr.shape() == nc::Shape{3, 2});
  CHECK(tr.at(2, 1) == 6);
  CHECK(nc::transpose(tr) == m);

  const auto s = nc::slice_rows(m, 1, 1);
  CHECK(s == Tensor::matrix(1, 3, {4, 5, 6}));
  const std::vector<Tensor> parts{nc::slice_rows(m, 0, 1), s};
  CHECK(nc::concat_rows(parts) == m);
}

TEST_CASE("tensor checksum and finiteness") {
  auto a = Tensor::vector({1, 2, 3});
  auto b = a;
  CHECK(nc::checksum(a) == nc::checksum(b));
  b[1] = std::nextafter(2.0, 3.0);
  CHECK(nc::checksum(a) != nc::checksum(b));
  CHECK(a.all_finite());
  a[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(a.all_finite());
  CHECK_THROWS_AS(a.check_finite("probe"), NumericError);
}

TEST_CASE("op forward values") {
  nc::Tape t;
  const auto a = nc::make_var(Tensor::matrix(2, 2, {1, 2, 3, 4}));
  const auto b = nc::make_var(Tensor::matrix(2, 2, {5, 6, 7, 8}));
  CHECK(nc::matmul(t, a, b)->value == Tensor::matrix(2, 2, {19, 22, 43, 50}));
  CHECK(nc::add(t, a, b)->value == Tensor::matrix(2, 2, {6, 8, 10, 12}));
  CHECK(nc::scale(t, a, 0.5)->value == Tensor::matrix(2, 2, {0.5, 1, 1.5, 2}));
  CHECK(nc::sum(t, a)->value[0] == 10.0);

  const auto g = nc::gelu(t, nc::make_var(Tensor::vector({0.0, 1.0, -1.0})));
  CHECK(g->value[0] == 0.0);
  CHECK(g->value[1] == doctest::Approx(0.8411919906082768).epsilon(1e-14));
  CHECK(g->value[2] == doctest::Approx(-0.15880800939172324).epsilon(1e-13));

  const auto sm = nc::softmax_rows(t, nc::make_var(Tensor::matrix(2, 3, {1, 2, 3, 1000, 1000, 1000})));
  for (std::size_t r = 0; r < 2; ++r) {
    double s = 0.0;
    for (double v : sm->value.row(r)) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(sm->value.at(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const auto x = nc::make_var(Tensor::matrix(1, 4, {1, 2, 3, 10}));
  const auto ln = nc::layer_norm(t, x, nc::make_var(Tensor({4}, 1.0)), nc::make_var(Tensor({4}, 0.0)));
  double mean = 0.0, var = 0.0;
  for (double v : ln->value.values()) mean += v / 4.0;
  for (double v : ln->value.values()) var += (v - mean) * (v - mean) / 4.0;
  CHECK(mean == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(var == doctest::Approx(1.0).epsilon(1e-5));

  const std::vector<std::int32_t> ids{2, 0};
  const auto gr = nc::gather_rows(t, nc::make_var(Tensor::matrix(3, 1, {7, 8, 9})), ids);
  CHECK(gr->value == Tensor::matrix(2, 1, {9, 7}));

  const std::vector<std::int32_t> targets{0, 1};
  const std::vector<std::uint8_t> mask{1, 1};
  const auto ce = nc::cross_entropy(t, nc::make_var(Tensor({2, 5}, 0.3)), targets, mask);
  CHECK(ce->value[0] == doctest::Approx(std::log(5.0)).epsilon(1e-15));
}

TEST_CASE("op shape errors") {
  nc::Tape t;
  const auto a = nc::make_var(Tensor({2, 3}));
  CHECK_THROWS_AS(nc::matmul(t, a, a), DimensionError);
  CHECK_THROWS_AS(nc::add(t, a, nc::make_var(Tensor({3, 2}))), DimensionError);
  CHECK_THROWS_AS(nc::drop_leading_rows(t, a, 2, 1), DimensionError);
  CHECK_THROWS_AS(nc::prepend_rows(t, nc::make_var(Tensor({1, 2})), a, 1), DimensionError);
  const std::vector<std::int32_t> targets{0, 0};
  const std::vector<std::uint8_t> none{0, 0};
  CHECK_THROWS_AS(nc::cross_entropy(t, a, targets, none), ConfigError);
  CHECK_THROWS_AS(t.backward(a), DimensionError);
}

TEST_CASE("prepend and drop rows are inverse") {
  nc::Tape t;
  const auto p = nc::make_var(testing::random_tensor({2, 3}, 1));
  const auto x = nc::make_var(testing::random_tensor({3 * 4, 3}, 2));
  const auto joined = nc::prepend_rows(t, p, x, 3);
  CHECK(joined->value.rows() == 3 * 6);
  CHECK(nc::drop_leading_rows(t, joined, 3, 2)->value == x->value);
}

TEST_CASE("gradient checks cover every op") {
  const auto results = testing::op_gradchecks();
  std::set<std::string> names;
  for (const auto& r : results) {
    INFO(r.name << " max rel err " << r.max_rel_err);
    CHECK(r.ok());
    names.insert(r.name);
  }
  CHECK(names.size() == static_cast<std::size_t>(nc::OpKind::kCrossEntropy) + 1);
}

TEST_CASE("gradients accumulate across uses") {
  nc::Tape t;
  auto a = nc::make_var(Tensor::vector({1, 2}), true);
  t.backward(nc::sum(t, nc::add(t, a, a)));
  CHECK(*a->grad == Tensor::vector({2, 2}));
  auto frozen = nc::make_var(Tensor::vector({1, 2}), false);
  nc::Tape t2;
  t2.backward(nc::sum(t2, nc::add(t2, frozen, a)));
  CHECK_FALSE(frozen->grad.has_value());
}

TEST_CASE("adam first step moves by lr against the gradient sign") {
  std::vector<double> p{1.0, -2.0, 0.5};
  const std::vector<double> g{0.3, -4.0, 1e-3};
  nc::AdamState st;
  nc::AdamConfig cfg;
  cfg.lr = 0.01;
  nc::adam_update(p, g, st, cfg);
  CHECK(st.step == 1);
  const double expect0 = 1.0 - 0.01 * 0.3 / (0.3 + 1e-8);
  CHECK(p[0] == doctest::Approx(expect0).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(-2.0 + 0.01 * 4.0 / (4.0 + 1e-8)).epsilon(1e-14));
  CHECK(p[2] == doctest::Approx(0.5 - 0.01 * 1e-3 / (1e-3 + 1e-8)).epsilon(1e-14));

  nc::AdamConfig bad;
  bad.lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.lr = 1e-3;
  bad.beta1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("adam rejects non-finite parameters") {
  auto v = nc::make_var(Tensor::vector({1.0}), true);
  v->grad = Tensor::vector({std::numeric_limits<double>::quiet_NaN()});
  nc::Adam opt({v}, nc::AdamConfig{});
  CHECK_THROWS_AS(opt.step(), NumericError);
}

TEST_CASE("vexp matches std::exp") {
  double worst = 0.0;
  for (int i = -70000; i <= 70000; ++i) {
    const double x = i * 0.01 + 0.0031;
    const double ref = std::exp(x);
    worst = std::max(worst, std::abs(kernels::vexp(x) - ref) / ref);
  }
  CHECK(worst < 4.5e-16);
  CHECK(kernels::vexp(0.0) == 1.0);
  CHECK(std::isnan(kernels::vexp(std::numeric_limits<double>::quiet_NaN())));
  CHECK(kernels::vexp(-1e300) >= 0.0);
  CHECK(kernels::vexp(-1e300) < 1e-300);
}

TEST_CASE("vtanh matches std::tanh") {
  double worst = 0.0;
  for (int i = -40000; i <= 40000; ++i) {
    const double y = i * 1e-3;
    worst = std::max(worst, std::abs(kernels::vtanh(y) - std::tanh(y)));
  }
  CHECK(worst < 1e-15);
  CHECK(kernels::vtanh(0.0) == 0.0);
  CHECK(kernels::vtanh(50.0) == 1.0);
  CHECK(kernels::vtanh(-50.0) == -1.0);
}
