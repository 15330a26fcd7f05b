// SPDX-License-Identifier: Apache-2.0
#include "sdn/attention.hpp"

#include <algorithm>
#include <cmath>

#include "sdn/la.hpp"
#include "sdn/util.hpp"

namespace sdn::nn {

std::string mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::gca: return "gca";
    case Mechanism::lca: return "lca";
    case Mechanism::gca_msa: return "gca_msa";
    case Mechanism::concat_only: return "concat";
  }
  return "gca";
}

Mechanism mechanism_from_name(const std::string& name) {
  if (name == "gca") return Mechanism::gca;
  if (name == "lca") return Mechanism::lca;
  if (name == "gca_msa") return Mechanism::gca_msa;
  if (name == "concat" || name == "concat_only") return Mechanism::concat_only;
  throw InvalidArgument("unknown attention mechanism: " + name);
}

namespace {

struct Dims {
  int n, c, h, w, m;
  bool batched;
};

template <typename T>
Dims attention_dims(const VarPtr<T>& f1, const VarPtr<T>& f2, const char* what) {
  require_same_shape(f1->value, f2->value, what);
  const auto& s = f1->value.shape();
  if (s.size() == 3) return {1, s[0], s[1], s[2], s[1] * s[2], false};
  if (s.size() == 4) return {s[0], s[1], s[2], s[3], s[2] * s[3], true};
  throw ShapeError(std::string(what) + ": expected [C,H,W] or [N,C,H,W], got " + shape_str(s));
}

// in-place row softmax with max subtraction; fixed summation order
template <typename T>
void softmax_rows(T* mat, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    T* row = mat + static_cast<int64_t>(i) * cols;
    T mx = row[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
    T sum(0);
    for (int j = 0; j < cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    T inv = T(1) / sum;
    for (int j = 0; j < cols; ++j) row[j] *= inv;
  }
}

// dL = W о (dW - rowsum(W о dW)), writing into dw
template <typename T>
void softmax_backward_rows(const T* wgt, T* dw, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    const T* wr = wgt + static_cast<int64_t>(i) * cols;
    T* dr = dw + static_cast<int64_t>(i) * cols;
    T dot(0);
    for (int j = 0; j < cols; ++j) dot += wr[j] * dr[j];
    for (int j = 0; j < cols; ++j) dr[j] = wr[j] * (dr[j] - dot);
  }
}

}  // namespace

template <typename T>
VarPtr<T> global_cross_attention(Graph<T>& g, const VarPtr<T>& f1, const VarPtr<T>& f2) {
  Dims d = attention_dims(f1, f2, "global_cross_attention");
  const int c = d.c, m = d.m;
  const T inv_sqrt_c = T(1) / std::sqrt(static_cast<T>(c));

  std::vector<int> out_shape = d.batched ? std::vector<int>{d.n, 2 * c, d.h, d.w}
                                         : std::vector<int>{2 * c, d.h, d.w};
  auto out = make_var<T>(TensorT<T>(std::move(out_shape)));
  auto weights = std::make_shared<std::vector<TensorT<T>>>();
  weights->reserve(static_cast<size_t>(d.n));

  for (int n = 0; n < d.n; ++n) {
    const T* x1 = f1->value.data() + static_cast<int64_t>(n) * c * m;
    const T* x2 = f2->value.data() + static_cast<int64_t>(n) * c * m;
    T* o1 = out->value.data() + static_cast<int64_t>(n) * 2 * c * m;
    T* o2 = o1 + static_cast<int64_t>(c) * m;
    std::copy_n(x1, static_cast<int64_t>(c) * m, o1);
    TensorT<T> wgt({m, m});
    la::gemm_at_b(x1, x2, wgt.data(), m, c, m);  // logits = F1 . F2^T
    for (int64_t i = 0; i < wgt.size(); ++i) wgt[i] *= inv_sqrt_c;
    softmax_rows(wgt.data(), m, m);
    la::gemm_a_bt(x2, wgt.data(), o2, c, m, m);  // attended, channel-major
    weights->push_back(std::move(wgt));
  }

  if (g.recording() && (f1->needs_grad || f2->needs_grad)) {
    out->needs_grad = true;
    g.record([f1, f2, out, weights, c, m, inv_sqrt_c, nd = d.n]() {
      if (!out->has_grad()) return;
      if (f1->needs_grad) f1->ensure_grad();
      if (f2->needs_grad) f2->ensure_grad();
      for (int n = 0; n < nd; ++n) {
        const T* x1 = f1->value.data() + static_cast<int64_t>(n) * c * m;
        const T* x2 = f2->value.data() + static_cast<int64_t>(n) * c * m;
        const T* go1 = out->grad.data() + static_cast<int64_t>(n) * 2 * c * m;
        const T* go2 = go1 + static_cast<int64_t>(c) * m;
        const TensorT<T>& wgt = (*weights)[static_cast<size_t>(n)];
        if (f1->needs_grad) {
          T* g1 = f1->grad.data() + static_cast<int64_t>(n) * c * m;
          for (int64_t i = 0; i < static_cast<int64_t>(c) * m; ++i) g1[i] += go1[i];
        }
        TensorT<T> dwgt({m, m});
        la::gemm_at_b(go2, x2, dwgt.data(), m, c, m);  // dW = dA . F2^T
        if (f2->needs_grad) {
          T* g2 = f2->grad.data() + static_cast<int64_t>(n) * c * m;
          la::gemm(go2, wgt.data(), g2, c, m, m, true);  // value path
        }
        softmax_backward_rows(wgt.data(), dwgt.data(), m, m);
        for (int64_t i = 0; i < dwgt.size(); ++i) dwgt[i] *= inv_sqrt_c;
        if (f1->needs_grad) {
          T* g1 = f1->grad.data() + static_cast<int64_t>(n) * c * m;
          la::gemm_a_bt(x2, dwgt.data(), g1, c, m, m, true);  // X2 . dL^T
        }
        if (f2->needs_grad) {
          T* g2 = f2->grad.data() + static_cast<int64_t>(n) * c * m;
          la::gemm(x1, dwgt.data(), g2, c, m, m, true);  // X1 . dL
        }
      }
    });
  }
  return out;
}

namespace {

struct WindowBounds {
  int x0, x1, y0, y1, count;
};

inline WindowBounds window_at(int qx, int qy, int h, int w, int radius) {
  WindowBounds b;
  b.x0 = std::max(0, qx - radius);
  b.x1 = std::min(w - 1, qx + radius);
  b.y0 = std::max(0, qy - radius);
  b.y1 = std::min(h - 1, qy + radius);
  b.count = (b.x1 - b.x0 + 1) * (b.y1 - b.y0 + 1);
  return b;
}

}  // namespace

template <typename T>
VarPtr<T> local_cross_attention(Graph<T>& g, const VarPtr<T>& f1, const VarPtr<T>& f2,
                                int window) {
  if (window < 1 || window % 2 == 0)
    throw InvalidArgument("local cross-attention window must be odd and >= 1");
  Dims d = attention_dims(f1, f2, "local_cross_attention");
  const int c = d.c, m = d.m, h = d.h, w = d.w;
  const int radius = window / 2;
  const T inv_sqrt_c = T(1) / std::sqrt(static_cast<T>(c));
  const int wmax = window * window;

  std::vector<int> out_shape = d.batched ? std::vector<int>{d.n, 2 * c, d.h, d.w}
                                         : std::vector<int>{2 * c, d.h, d.w};
  auto out = make_var<T>(TensorT<T>(std::move(out_shape)));
  // per query: up to window^2 softmax weights, neighborhood recomputed on use
  auto weights = std::make_shared<std::vector<T>>(
      static_cast<size_t>(d.n) * m * wmax, T(0));

  for (int n = 0; n < d.n; ++n) {
    const T* x1 = f1->value.data() + static_cast<int64_t>(n) * c * m;
    const T* x2 = f2->value.data() + static_cast<int64_t>(n) * c * m;
    T* o1 = out->value.data() + static_cast<int64_t>(n) * 2 * c * m;
    T* o2 = o1 + static_cast<int64_t>(c) * m;
    std::copy_n(x1, static_cast<int64_t>(c) * m, o1);
    for (int qy = 0; qy < h; ++qy) {
      for (int qx = 0; qx < w; ++qx) {
        const int q = qy * w + qx;
        WindowBounds b = window_at(qx, qy, h, w, radius);
        T* wrow = weights->data() + (static_cast<int64_t>(n) * m + q) * wmax;
        int idx = 0;
        T mx = -std::numeric_limits<T>::infinity();
        for (int y = b.y0; y <= b.y1; ++y)
          for (int x = b.x0; x <= b.x1; ++x, ++idx) {
            const int j = y * w + x;
            T dot(0);
            for (int cc = 0; cc < c; ++cc)
              dot += x1[static_cast<int64_t>(cc) * m + q] * x2[static_cast<int64_t>(cc) * m + j];
            wrow[idx] = dot * inv_sqrt_c;
            mx = std::max(mx, wrow[idx]);
          }
        T sum(0);
        for (int i = 0; i < b.count; ++i) {
          wrow[i] = std::exp(wrow[i] - mx);
          sum += wrow[i];
        }
        T inv = T(1) / sum;
        for (int i = 0; i < b.count; ++i) wrow[i] *= inv;
        idx = 0;
        for (int y = b.y0; y <= b.y1; ++y)
          for (int x = b.x0; x <= b.x1; ++x, ++idx) {
            const int j = y * w + x;
            const T wv = wrow[idx];
            for (int cc = 0; cc < c; ++cc)
              o2[static_cast<int64_t>(cc) * m + q] += wv * x2[static_cast<int64_t>(cc) * m + j];
          }
      }
    }
  }

  if (g.recording() && (f1->needs_grad || f2->needs_grad)) {
    out->needs_grad = true;
    g.record([f1, f2, out, weights, c, m, h, w, radius, wmax, inv_sqrt_c, nd = d.n]() {
      if (!out->has_grad()) return;
      if (f1->needs_grad) f1->ensure_grad();
      if (f2->needs_grad) f2->ensure_grad();
      std::vector<T> dw(static_cast<size_t>(wmax));
      for (int n = 0; n < nd; ++n) {
        const T* x1 = f1->value.data() + static_cast<int64_t>(n) * c * m;
        const T* x2 = f2->value.data() + static_cast<int64_t>(n) * c * m;
        const T* go1 = out->grad.data() + static_cast<int64_t>(n) * 2 * c * m;
        const T* go2 = go1 + static_cast<int64_t>(c) * m;
        T* g1 = f1->needs_grad ? f1->grad.data() + static_cast<int64_t>(n) * c * m : nullptr;
        T* g2 = f2->needs_grad ? f2->grad.data() + static_cast<int64_t>(n) * c * m : nullptr;
        if (g1)
          for (int64_t i = 0; i < static_cast<int64_t>(c) * m; ++i) g1[i] += go1[i];
        for (int qy = 0; qy < h; ++qy) {
          for (int qx = 0; qx < w; ++qx) {
            const int q = qy * w + qx;
            WindowBounds b = window_at(qx, qy, h, w, radius);
            const T* wrow = weights->data() + (static_cast<int64_t>(n) * m + q) * wmax;
            int idx = 0;
            T dot(0);
            for (int y = b.y0; y <= b.y1; ++y)
              for (int x = b.x0; x <= b.x1; ++x, ++idx) {
                const int j = y * w + x;
                T acc(0);
                for (int cc = 0; cc < c; ++cc)
                  acc += go2[static_cast<int64_t>(cc) * m + q] *
                         x2[static_cast<int64_t>(cc) * m + j];
                dw[static_cast<size_t>(idx)] = acc;  // dW before softmax bwd
                dot += wrow[idx] * acc;
                if (g2) {
                  const T wv = wrow[idx];
                  for (int cc = 0; cc < c; ++cc)
                    g2[static_cast<int64_t>(cc) * m + j] +=
                        wv * go2[static_cast<int64_t>(cc) * m + q];
                }
              }
            idx = 0;
            for (int y = b.y0; y <= b.y1; ++y)
              for (int x = b.x0; x <= b.x1; ++x, ++idx) {
                const int j = y * w + x;
                const T dl = wrow[idx] * (dw[static_cast<size_t>(idx)] - dot) * inv_sqrt_c;
                if (g1)
                  for (int cc = 0; cc < c; ++cc)
                    g1[static_cast<int64_t>(cc) * m + q] +=
                        dl * x2[static_cast<int64_t>(cc) * m + j];
                if (g2)
                  for (int cc = 0; cc < c; ++cc)
                    g2[static_cast<int64_t>(cc) * m + j] +=
                        dl * x1[static_cast<int64_t>(cc) * m + q];
              }
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> attention_weight_row(const TensorT<T>& f1, const TensorT<T>& f2, int qx, int qy,
                                int lca_window) {
  if (f1.rank() != 3 || !f1.same_shape(f2))
    throw ShapeError("attention_weight_row expects matching [C,H,W] maps");
  const int c = f1.dim(0), h = f1.dim(1), w = f1.dim(2), m = h * w;
  if (qx < 0 || qx >= w || qy < 0 || qy >= h)
    throw InvalidArgument("query pixel outside the feature map");
  const T inv_sqrt_c = T(1) / std::sqrt(static_cast<T>(c));
  const int q = qy * w + qx;
  WindowBounds b = lca_window > 0 ? window_at(qx, qy, h, w, lca_window / 2)
                                  : WindowBounds{0, w - 1, 0, h - 1, m};
  TensorT<T> row({h, w});
  T mx = -std::numeric_limits<T>::infinity();
  for (int y = b.y0; y <= b.y1; ++y)
    for (int x = b.x0; x <= b.x1; ++x) {
      const int j = y * w + x;
      T dot(0);
      for (int cc = 0; cc < c; ++cc)
        dot += f1[static_cast<int64_t>(cc) * m + q] * f2[static_cast<int64_t>(cc) * m + j];
      row[j] = dot * inv_sqrt_c;
      mx = std::max(mx, row[j]);
    }
  T sum(0);
  for (int y = b.y0; y <= b.y1; ++y)
    for (int x = b.x0; x <= b.x1; ++x) {
      const int j = y * w + x;
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
  const T inv = T(1) / sum;
  for (int y = b.y0; y <= b.y1; ++y)
    for (int x = b.x0; x <= b.x1; ++x) row[y * w + x] *= inv;
  return row;
}

template <typename T>
VarPtr<T> linear_attention_core(Graph<T>& g, const VarPtr<T>& phi_q, const VarPtr<T>& phi_k,
                                const VarPtr<T>& v, int heads) {
  Dims d = attention_dims(phi_q, phi_k, "linear_attention_core");
  require_same_shape(phi_q->value, v->value, "linear_attention_core");
  if (heads < 1 || d.c % heads != 0)
    throw InvalidArgument("head count must divide the channel dimension");
  const int c = d.c, m = d.m, hd = d.c / heads;
  const T floor_den = static_cast<T>(1e-30);

  using Mat = la::MatRM<T>;
  using Stride = Eigen::OuterStride<>;
  using BlockMap = Eigen::Map<const Mat, 0, Stride>;
  using MutBlockMap = Eigen::Map<Mat, 0, Stride>;

  auto out = make_var<T>(TensorT<T>(phi_q->value.shape()));
  for (int n = 0; n < d.n; ++n) {
    for (int hh = 0; hh < heads; ++hh) {
      const int64_t off = static_cast<int64_t>(n) * c * m + static_cast<int64_t>(hh) * hd * m;
      BlockMap aq(phi_q->value.data() + off, hd, m, Stride(m));
      BlockMap ak(phi_k->value.data() + off, hd, m, Stride(m));
      BlockMap av(v->value.data() + off, hd, m, Stride(m));
      MutBlockMap ob(out->value.data() + off, hd, m, Stride(m));
      Mat s = ak * av.transpose();                       // [d, d]
      Eigen::Matrix<T, Eigen::Dynamic, 1> z = ak.rowwise().sum();
      Mat num = s.transpose() * aq;                      // [d, m]
      Eigen::Matrix<T, 1, Eigen::Dynamic> den = z.transpose() * aq;  // [1, m]
      for (int j = 0; j < m; ++j) {
        T dj = std::max(den(0, j), floor_den);
        for (int b = 0; b < hd; ++b) ob(b, j) = num(b, j) / dj;
      }
    }
  }

  if (g.recording() && (phi_q->needs_grad || phi_k->needs_grad || v->needs_grad)) {
    out->needs_grad = true;
    g.record([phi_q, phi_k, v, out, heads, c, m, hd, floor_den, nd = d.n]() {
      if (!out->has_grad()) return;
      if (phi_q->needs_grad) phi_q->ensure_grad();
      if (phi_k->needs_grad) phi_k->ensure_grad();
      if (v->needs_grad) v->ensure_grad();
      using Stride = Eigen::OuterStride<>;
      for (int n = 0; n < nd; ++n) {
        for (int hh = 0; hh < heads; ++hh) {
          const int64_t off = static_cast<int64_t>(n) * c * m + static_cast<int64_t>(hh) * hd * m;
          BlockMap aq(phi_q->value.data() + off, hd, m, Stride(m));
          BlockMap ak(phi_k->value.data() + off, hd, m, Stride(m));
          BlockMap av(v->value.data() + off, hd, m, Stride(m));
          BlockMap ob(out->value.data() + off, hd, m, Stride(m));
          BlockMap gb(out->grad.data() + off, hd, m, Stride(m));
          // recompute den and S (cheap relative to storing them per step)
          Mat s = ak * av.transpose();
          Eigen::Matrix<T, Eigen::Dynamic, 1> z = ak.rowwise().sum();
          Eigen::Matrix<T, 1, Eigen::Dynamic> den = z.transpose() * aq;
          Mat dnum(hd, m);
          Eigen::Matrix<T, 1, Eigen::Dynamic> dden(m);
          for (int j = 0; j < m; ++j) {
            T dj = std::max(den(0, j), floor_den);
            T acc(0);
            for (int b = 0; b < hd; ++b) {
              dnum(b, j) = gb(b, j) / dj;
              acc += ob(b, j) * gb(b, j);
            }
            dden(j) = den(0, j) > floor_den ? -acc / dj : T(0);
          }
          Mat ds = aq * dnum.transpose();  // [d, d]
          Eigen::Matrix<T, Eigen::Dynamic, 1> dz = aq * dden.transpose();
          if (phi_q->needs_grad) {
            MutBlockMap gq(phi_q->grad.data() + off, hd, m, Stride(m));
            gq.noalias() += s * dnum;
            gq.noalias() += z * dden;
          }
          if (phi_k->needs_grad) {
            MutBlockMap gk(phi_k->grad.data() + off, hd, m, Stride(m));
            gk.noalias() += ds * av;
            gk.colwise() += dz;
          }
          if (v->needs_grad) {
            MutBlockMap gv(v->grad.data() + off, hd, m, Stride(m));
            gv.noalias() += ds.transpose() * ak;
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
TensorT<T> sinusoidal_positional_encoding(int c, int h, int w) {
  if (c % 4 != 0) throw InvalidArgument("positional encoding needs channels divisible by 4");
  const int bands = c / 4;
  TensorT<T> pe({c, h, w});
  for (int b = 0; b < bands; ++b) {
    double omega = std::pow(10000.0, -static_cast<double>(b) / bands);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        pe.at(b, y, x) = static_cast<T>(std::sin(y * omega));
        pe.at(bands + b, y, x) = static_cast<T>(std::cos(y * omega));
        pe.at(2 * bands + b, y, x) = static_cast<T>(std::sin(x * omega));
        pe.at(3 * bands + b, y, x) = static_cast<T>(std::cos(x * omega));
      }
  }
  return pe;
}

template <typename T>
VarPtr<T> linear_self_attention(Graph<T>& g, const VarPtr<T>& f, const MsaParams<T>& params,
                                int heads, bool with_positional_encoding) {
  bool batched = f->value.rank() == 4;
  if (!batched && f->value.rank() != 3)
    throw ShapeError("linear_self_attention expects [C,H,W] or [N,C,H,W]");
  VarPtr<T> x = f;
  if (!batched) {
    const auto& s = f->value.shape();
    x = reshape(g, f, {1, s[0], s[1], s[2]});
  }
  const int c = x->value.dim(1), h = x->value.dim(2), w = x->value.dim(3);
  if (heads < 1 || c % heads != 0)
    throw InvalidArgument("head count must divide the channel dimension");
  VarPtr<T> t = x;
  if (with_positional_encoding) t = add_const(g, x, sinusoidal_positional_encoding<T>(c, h, w));
  auto q = conv2d(g, t, params.wq, 1);
  auto k = conv2d(g, t, params.wk, 1);
  auto v = conv2d(g, t, params.wv, 1);
  auto pq = elu_plus_one(g, q);
  auto pk = elu_plus_one(g, k);
  auto core = linear_attention_core(g, pq, pk, v, heads);
  auto o = conv2d(g, core, params.wo, 1);
  auto res = add(g, x, o);
  if (!batched) return reshape(g, res, f->value.shape());
  return res;
}

#define SDN_INSTANTIATE_ATTN(T)                                                                   \
  template VarPtr<T> global_cross_attention<T>(Graph<T>&, const VarPtr<T>&, const VarPtr<T>&);    \
  template VarPtr<T> local_cross_attention<T>(Graph<T>&, const VarPtr<T>&, const VarPtr<T>&,      \
                                              int);                                              \
  template TensorT<T> attention_weight_row<T>(const TensorT<T>&, const TensorT<T>&, int, int,    \
                                              int);                                              \
  template VarPtr<T> linear_attention_core<T>(Graph<T>&, const VarPtr<T>&, const VarPtr<T>&,     \
                                              const VarPtr<T>&, int);                            \
  template TensorT<T> sinusoidal_positional_encoding<T>(int, int, int);                          \
  template VarPtr<T> linear_self_attention<T>(Graph<T>&, const VarPtr<T>&, const MsaParams<T>&,  \
                                              int, bool);

SDN_INSTANTIATE_ATTN(float)
SDN_INSTANTIATE_ATTN(double)

}  // namespace sdn::nn
