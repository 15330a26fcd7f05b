// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "sdn/gradcheck.hpp"
#include "sdn/graph.hpp"

using namespace sdn;
using namespace sdn::nn;

TEST_CASE("tensor invariants") {
  TensorD t({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.rank() == 3);
  for (int64_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0);
  CHECK_THROWS_AS(t.reshaped({5, 5}), ShapeError);
  TensorD r = t.reshaped({4, 6});
  CHECK(r.dim(0) == 4);
}

TEST_CASE("relu on all-negative input is zero with zero gradient") {
  Graph<double> g;
  TensorD x({1, 2, 3, 3});
  for (int64_t i = 0; i < x.size(); ++i) x[i] = -1.0 - static_cast<double>(i);
  auto xv = make_var(x, true);
  auto y = relu(g, xv);
  for (int64_t i = 0; i < y->value.size(); ++i) CHECK(y->value[i] == 0.0);
  TensorD ones(y->value.shape());
  ones.fill(1.0);
  g.backward_with(y, ones);
  REQUIRE(xv->has_grad());
  for (int64_t i = 0; i < xv->grad.size(); ++i) CHECK(xv->grad[i] == 0.0);
}

TEST_CASE("conv2d with an identity 1x1 kernel reproduces the input") {
  Graph<double> g;
  Rng rng(1);
  TensorD x({2, 3, 5, 5});
  for (int64_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1, 1);
  TensorD w({3, 3, 1, 1});
  for (int c = 0; c < 3; ++c) w.at(c, c, 0, 0) = 1.0;
  auto y = conv2d(g, make_var(x), make_var(w), 1);
  REQUIRE(y->value.shape() == x.shape());
  for (int64_t i = 0; i < x.size(); ++i) CHECK(y->value[i] == doctest::Approx(x[i]).epsilon(1e-12));
}

TEST_CASE("conv2d stride-2 halves even spatial extents") {
  Graph<double> g;
  auto x = make_var(TensorD({1, 2, 8, 8}));
  auto w = make_var(TensorD({4, 2, 3, 3}));
  auto y = conv2d(g, x, w, 2);
  CHECK(y->value.shape() == std::vector<int>{1, 4, 4, 4});
  CHECK_THROWS_AS(conv2d(g, x, w, 3), InvalidArgument);
}

TEST_CASE("shape errors name both shapes") {
  Graph<double> g;
  auto x = make_var(TensorD({1, 3, 4, 4}));
  auto w = make_var(TensorD({4, 2, 3, 3}));
  try {
    conv2d(g, x, w, 1);
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[1,3,4,4]") != std::string::npos);
    CHECK(msg.find("[4,2,3,3]") != std::string::npos);
  }
}

TEST_CASE("maxpool and upsample invert shape-wise") {
  Graph<double> g;
  Rng rng(5);
  TensorD x({1, 2, 6, 6});
  for (int64_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1, 1);
  auto down = maxpool2(g, make_var(x));
  CHECK(down->value.shape() == std::vector<int>{1, 2, 3, 3});
  auto up = upsample_nearest2(g, down);
  CHECK(up->value.shape() == std::vector<int>{1, 2, 6, 6});
  CHECK_THROWS_AS(maxpool2(g, make_var(TensorD({1, 1, 5, 5}))), ShapeError);
}

TEST_CASE("softmax cross-entropy values") {
  Graph<double> g;
  TensorI target({1, 2, 2});
  target.fill(1);

  SUBCASE("uniform logits give ln(K)") {
    auto logits = make_var(TensorD({1, 2, 2, 2}));
    auto loss = softmax_cross_entropy(g, logits, target);
    CHECK(loss->value[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }

  SUBCASE("confident correct logits give near-zero loss") {
    TensorD l({1, 2, 2, 2});
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) {
        l.at(0, 0, y, x) = -20;
        l.at(0, 1, y, x) = 20;
      }
    auto loss = softmax_cross_entropy(g, make_var(l), target);
    CHECK(loss->value[0] < 1e-9);
  }

  SUBCASE("bad target class is rejected") {
    TensorI bad({1, 2, 2});
    bad.fill(3);
    auto logits = make_var(TensorD({1, 2, 2, 2}));
    CHECK_THROWS_AS(softmax_cross_entropy(g, logits, bad), InvalidArgument);
  }
}

TEST_CASE("standard gradient sweep passes at double precision") {
  auto results = standard_grad_checks(20250101);
  for (const auto& r : results) {
    INFO(r.name, " max rel err ", r.max_rel_err);
    CHECK(r.pass);
    CHECK(r.max_rel_err < 1e-4);
  }
  // the sweep covers every differentiable op family
  CHECK(results.size() >= 14);
}

TEST_CASE("grad_check flags a broken derivative") {
  Rng rng(9);
  // forward computes x^2 but the closure lies about it via a detached graph
  auto broken = [](Graph<double>& g, const std::vector<VarPtr<double>>& in) {
    auto out = make_var<double>(TensorD(in[0]->value.shape()));
    for (int64_t i = 0; i < out->value.size(); ++i)
      out->value[i] = in[0]->value[i] * in[0]->value[i];
    if (g.recording()) {
      out->needs_grad = true;
      auto x = in[0];
      g.record([x, out]() {
        if (!out->has_grad()) return;
        x->ensure_grad();
        for (int64_t i = 0; i < x->grad.size(); ++i) x->grad[i] += out->grad[i];  // wrong: misses 2x
      });
    }
    return out;
  };
  auto res = grad_check("broken_square", broken, {TensorD::full({2, 2}, 0.7)}, 1e-4, rng);
  CHECK(!res.pass);
}
