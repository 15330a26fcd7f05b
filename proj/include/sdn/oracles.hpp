// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "sdn/assembly.hpp"
#include "sdn/geometry.hpp"
#include "sdn/render.hpp"
#include "sdn/tensor.hpp"

namespace sdn::oracle {

// Reference implementations kept deliberately independent of the library's
// fast paths: plain double loops, alternative formulas, second algorithms.

// nQD via the relative rotation angle: 2 * sin(theta / 4).
double nqd_reference(const Quaternion& q1, const Quaternion& q2);

// Brute-force O((HW)^2) cross-attention; f1/f2 are [C,H,W]. Returns [2C,H,W].
nn::TensorD gca_reference(const nn::TensorD& f1, const nn::TensorD& f2);

// Same with a clipped window neighborhood per query.
nn::TensorD lca_reference(const nn::TensorD& f1, const nn::TensorD& f2, int window);

// Quadratic expansion of the kernelized attention: explicit N x N weight
// matrix phi(q_i) . phi(k_j) row-normalized. q/k/v are [C,H,W]; phi is
// elu(u)+1 applied here. Returns [C,H,W].
nn::TensorD linear_attention_quadratic_reference(const nn::TensorD& q, const nn::TensorD& k,
                                                 const nn::TensorD& v, int heads);

// Plain softmax attention over the same projections (the counterexample
// showing kernelized attention is not softmax attention).
nn::TensorD softmax_attention_reference(const nn::TensorD& q, const nn::TensorD& k,
                                        const nn::TensorD& v, int heads);

// Symmetric difference via std::set_symmetric_difference over id vectors.
PartDiff part_diff_reference(const PartCatalog& cat, const AssemblyState& a,
                             const AssemblyState& b);

// Alternative change-mask rule: a pixel is change iff either instance label
// belongs to the part-diff set (render module exposes the production copy;
// this one is a from-scratch reimplementation over raw labels).
BinaryMask diff_membership_mask_reference(const ImageU16& anchor_labels,
                                          const ImageU16& aligned_labels, const PartDiff& diff);

// Analytic pinhole projection of a transformed box's 8 corners; returns the
// pixel-space bounding box {x0, y0, x1, y1}.
std::array<double, 4> projected_box_bbox_reference(const Box& box, const RigidTransform& tf,
                                                   const CameraPose& pose);

// Pixel-count IoU with an explicit four-counter confusion tally.
double iou_reference(const BinaryMask& pred, const BinaryMask& gt);

// Quantile recomputed with an index/interpolation formulation written
// independently of eval's version.
double quantile_reference(std::vector<double> values, double p);

struct OracleResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Every derived brute-force oracle suite that runs without training.
std::vector<OracleResult> run_oracle_suites(uint64_t seed);

}  // namespace sdn::oracle
