// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sdn/attention.hpp"
#include "sdn/graph.hpp"
#include "sdn/rng.hpp"

namespace sdn::nn {

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0;
  double tolerance = 0;
  bool pass = false;
  std::string detail;
};

using OpClosure =
    std::function<VarPtr<double>(Graph<double>&, const std::vector<VarPtr<double>>&)>;

// Central-difference check of the op's reverse-mode gradients against a random
// cotangent, in double precision. rel err = |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult grad_check(const std::string& name, const OpClosure& op,
                           std::vector<TensorD> inputs, double tolerance, Rng& rng,
                           double step = 1e-5);

// Inputs drawn uniform in [-1, 1] from the given shapes.
GradCheckResult grad_check_shapes(const std::string& name, const OpClosure& op,
                                  const std::vector<std::vector<int>>& shapes, double tolerance,
                                  Rng& rng, double step = 1e-5);

// The full differentiable-op sweep: conv (stride 1/2), bias, relu (probed away
// from the kink), maxpool, upsample, concat, softmax-CE, GCA, LCA, linear MSA.
std::vector<GradCheckResult> standard_grad_checks(uint64_t seed);

}  // namespace sdn::nn
