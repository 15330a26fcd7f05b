// SPDX-License-Identifier: Apache-2.0
#pragma once

#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Core>

namespace sdn::la {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapRM = Eigen::Map<const MatRM<T>>;

// C[M,N] (+)= A[M,K] * B[K,N], all row-major.
template <typename T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
  CMapRM<T> A(a, m, k), B(b, k, n);
  MapRM<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A * B;
  else
    C.noalias() = A * B;
}

// C[M,N] (+)= A[K,M]^T * B[K,N].
template <typename T>
void gemm_at_b(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
  CMapRM<T> A(a, k, m), B(b, k, n);
  MapRM<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A.transpose() * B;
  else
    C.noalias() = A.transpose() * B;
}

// C[M,N] (+)= A[M,K] * B[N,K]^T.
template <typename T>
void gemm_a_bt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate = false) {
  CMapRM<T> A(a, m, k), B(b, n, k);
  MapRM<T> C(c, m, n);
  if (accumulate)
    C.noalias() += A * B.transpose();
  else
    C.noalias() = A * B.transpose();
}

}  // namespace sdn::la
