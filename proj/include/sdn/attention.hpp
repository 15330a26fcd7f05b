// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "sdn/graph.hpp"

namespace sdn::nn {

enum class Mechanism { gca, lca, gca_msa, concat_only };

std::string mechanism_name(Mechanism m);
Mechanism mechanism_from_name(const std::string& name);

struct AttentionConfig {
  Mechanism mechanism = Mechanism::gca;
  std::vector<int> lca_windows = {7, 5, 3};  // one per attention resolution, coarse last
  int msa_heads = 8;
  bool msa_positional_encoding = true;
};

// Global cross-attention. For each query location of f1, softmax over scaled
// dot products against every location of f2, weighted sum of f2, concatenated
// under f1: out = concat(f1, attend(f1 -> f2)). No positional encoding and no
// learned projections. Accepts [C,H,W] or [N,C,H,W]; output doubles C.
template <typename T>
VarPtr<T> global_cross_attention(Graph<T>& g, const VarPtr<T>& f1, const VarPtr<T>& f2);

// Same formula with the key/value set restricted to the window x window
// neighborhood of the query's own coordinates in f2, clipped at borders.
template <typename T>
VarPtr<T> local_cross_attention(Graph<T>& g, const VarPtr<T>& f1, const VarPtr<T>& f2, int window);

// Softmax weight row of one query against f2 (same layout the ops use),
// recomputed outside the graph. For LCA, entries outside the window are 0.
// f1/f2 are [C,H,W]; the returned map is [H,W] and sums to 1.
template <typename T>
TensorT<T> attention_weight_row(const TensorT<T>& f1, const TensorT<T>& f2, int qx, int qy,
                                int lca_window /* 0 = global */);

// Kernelized attention core: out_i = (phi_q_i . sum_j phi_k_j^T v_j) /
// (phi_q_i . sum_j phi_k_j), evaluated per head (channels split into `heads`
// groups). Inputs [N,C,H,W]; cost linear in H*W. Denominator floored at 1e-30.
template <typename T>
VarPtr<T> linear_attention_core(Graph<T>& g, const VarPtr<T>& phi_q, const VarPtr<T>& phi_k,
                                const VarPtr<T>& v, int heads);

// 2D sinusoidal positional encoding, C/4 frequency bands per axis for each of
// sin/cos, added (not concatenated). Requires C % 4 == 0.
template <typename T>
TensorT<T> sinusoidal_positional_encoding(int c, int h, int w);

template <typename T>
struct MsaParams {
  VarPtr<T> wq, wk, wv, wo;  // each [C,C,1,1]
};

// Linear multi-headed self-attention with feature map phi(u) = elu(u)+1:
// tokens = flatten(f (+ positional encoding)); Q/K/V = learned projections;
// heads concatenated, projected back, residual adds the input f.
template <typename T>
VarPtr<T> linear_self_attention(Graph<T>& g, const VarPtr<T>& f, const MsaParams<T>& params,
                                int heads, bool with_positional_encoding);

}  // namespace sdn::nn
