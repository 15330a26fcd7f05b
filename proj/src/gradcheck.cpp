// SPDX-License-Identifier: Apache-2.0
#include "sdn/gradcheck.hpp"

#include <cmath>

namespace sdn::nn {

namespace {

TensorD random_tensor(const std::vector<int>& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  TensorD t(shape);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

double dot_with(const TensorD& a, const TensorD& b) {
  double acc = 0;
  for (int64_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

GradCheckResult grad_check(const std::string& name, const OpClosure& op,
                           std::vector<TensorD> inputs, double tolerance, Rng& rng, double step) {
  GradCheckResult res;
  res.name = name;
  res.tolerance = tolerance;

  std::vector<VarPtr<double>> leaves;
  leaves.reserve(inputs.size());
  for (auto& t : inputs) leaves.push_back(make_var<double>(t, /*needs_grad=*/true));

  Graph<double> g;
  VarPtr<double> out = op(g, leaves);
  TensorD cotangent = random_tensor(out->value.shape(), rng);
  g.backward_with(out, cotangent);

  std::vector<TensorD> analytic;
  for (const auto& leaf : leaves)
    analytic.push_back(leaf->has_grad() ? leaf->grad : TensorD(leaf->value.shape()));

  auto eval = [&](const std::vector<VarPtr<double>>& ls) {
    Graph<double> quiet(/*recording=*/false);
    VarPtr<double> y = op(quiet, ls);
    return dot_with(y->value, cotangent);
  };

  double max_rel = 0;
  for (size_t i = 0; i < leaves.size(); ++i) {
    for (int64_t e = 0; e < leaves[i]->value.size(); ++e) {
      double saved = leaves[i]->value[e];
      leaves[i]->value[e] = saved + step;
      double plus = eval(leaves);
      leaves[i]->value[e] = saved - step;
      double minus = eval(leaves);
      leaves[i]->value[e] = saved;
      double numeric = (plus - minus) / (2 * step);
      double a = analytic[i][e];
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        res.detail = "non-finite gradient encountered";
        res.max_rel_err = std::numeric_limits<double>::infinity();
        res.pass = false;
        return res;
      }
      double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      max_rel = std::max(max_rel, rel);
    }
  }
  res.max_rel_err = max_rel;
  res.pass = max_rel < tolerance;
  return res;
}

GradCheckResult grad_check_shapes(const std::string& name, const OpClosure& op,
                                  const std::vector<std::vector<int>>& shapes, double tolerance,
                                  Rng& rng, double step) {
  std::vector<TensorD> inputs;
  inputs.reserve(shapes.size());
  for (const auto& s : shapes) inputs.push_back(random_tensor(s, rng));
  return grad_check(name, op, std::move(inputs), tolerance, rng, step);
}

std::vector<GradCheckResult> standard_grad_checks(uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckResult> results;
  const double tol = 1e-4;

  results.push_back(grad_check_shapes(
      "conv2d_3x3_s1",
      [](Graph<double>& g, const std::vector<VarPtr<double>>& in) {
        return conv2d(g, in[0], in[1], 1);
      },
      {{2, 3, 6, 6}, {4, 3, 3, 3}}, tol, rng));

  results.push_back(grad_check_shapes(
      "conv2d_3x3_s2",
      [](Graph<double>& g, const std::vector<VarPtr<double>>& in) {
        return conv2d(g, in[0], in[1], 2);
      },
      {{2, 3, 6, 6}, {4, 3, 3, 3}}, tol, rng));

  // exactly linear, so a larger step removes roundoff without truncation error
  results.push_back(grad_check_shapes(
      "conv2d_1x1",
      [](Graph<double>& g, const std::vector<VarPtr<double>>& in) {
        return conv2d(g, in[0], in[1], 1);
      },
      {{2, 4, 5, 5}, {6, 4, 1, 1}}, 1e-8, rng, 1e-3));

  results.push_back(grad_check_shapes(
      "bias_add",
      [](Graph<double>& g, const std::vector<VarPtr<double>>& in) {
        return bias_add(g, in[0], in[1]);
      },
      {{2, 4, 5, 5}, {4}}, 1e-6, rng));

  {
    // probe away from the kink: |u| > 0.1
    TensorD x({2, 3, 6, 6});
    for (int64_t i = 0; i < x.size(); ++i) {
      double u = rng.uniform(0.1, 1.0);
      x[i] = rng.uniform() < 0.5 ? u : -u;
    }
    results.push_back(grad_check(
        "relu_off_kink",
        [](Graph<double>& g, const std::vector<VarPtr<double>>& in) { return relu(g, in[0]); },
        {x}, 1e-6, rng));
  }

  {
    // pairwise gaps >= 0.01 so the argmax cannot flip under the fd step
    TensorD x({2, 3, 6, 6});
    std::vector<int64_t> perm(static_cast<size_t>(x.size()));
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int64_t>(i);
    for (size_t i = perm.size(); i > 1; --i)
      std::swap(perm[i - 1], perm[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1))]);
    for (int64_t i = 0; i < x.size(); ++i) x[i] = 0.01 * static_cast<double>(perm[static_cast<size_t>(i)]) - 1.0;
    results.push_back(grad_check(
        "maxpool2",
        [](Graph<double>& g, const std::vector<VarPtr<double>>& in) { return maxpool2(g, in[0]); },
        {x}, tol, rng));
  }

  results.push_back(grad_check_shapes(
      "upsample_nearest2",
      [](Graph<double>& g, const std::vector<VarPtr<double>>& in) {
        return upsample_nearest2(g, in[0]);
      },
      {{2, 3, 4, 4}}, 1e-6, rng));

  results.push_back(grad_check_shapes(
      "concat_channels",
      [](Graph<double>& g, const std::vector<VarPtr<double>>& in) {
        return concat_channels(g, in[0], in[1]);
      },
      {{2, 3, 4, 4}, {2, 2, 4, 4}}, 1e-6, rng));

  {
    TensorI target({2, 4, 4});
    for (int64_t i = 0; i < target.size(); ++i) target[i] = static_cast<int32_t>(i % 2);
    results.push_back(grad_check_shapes(
        "softmax_cross_entropy",
        [target](Graph<double>& g, const std::vector<VarPtr<double>>& in) {
          return softmax_cross_entropy(g, in[0], target);
        },
        {{2, 2, 4, 4}}, tol, rng));
  }

  results.push_back(grad_check_shapes(
      "global_cross_attention",
      [](Graph<double>& g, const std::vector<VarPtr<double>>& in) {
        return global_cross_attention(g, in[0], in[1]);
      },
      {{1, 4, 5, 5}, {1, 4, 5, 5}}, tol, rng));

  results.push_back(grad_check_shapes(
      "local_cross_attention_w3",
      [](Graph<double>& g, const std::vector<VarPtr<double>>& in) {
        return local_cross_attention(g, in[0], in[1], 3);
      },
      {{1, 4, 5, 5}, {1, 4, 5, 5}}, tol, rng));

  results.push_back(grad_check_shapes(
      "elu_plus_one",
      [](Graph<double>& g, const std::vector<VarPtr<double>>& in) {
        return elu_plus_one(g, in[0]);
      },
      {{2, 4, 3, 3}}, tol, rng));

  results.push_back(grad_check_shapes(
      "linear_attention_core",
      [](Graph<double>& g, const std::vector<VarPtr<double>>& in) {
        auto pq = elu_plus_one(g, in[0]);
        auto pk = elu_plus_one(g, in[1]);
        return linear_attention_core(g, pq, pk, in[2], 2);
      },
      {{1, 4, 4, 4}, {1, 4, 4, 4}, {1, 4, 4, 4}}, tol, rng));

  results.push_back(grad_check_shapes(
      "linear_self_attention",
      [](Graph<double>& g, const std::vector<VarPtr<double>>& in) {
        MsaParams<double> p{in[1], in[2], in[3], in[4]};
        return linear_self_attention(g, in[0], p, 2, true);
      },
      {{1, 8, 4, 4}, {8, 8, 1, 1}, {8, 8, 1, 1}, {8, 8, 1, 1}, {8, 8, 1, 1}}, tol, rng));

  return results;
}

}  // namespace sdn::nn
