// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "sdn/graph.hpp"
#include "sdn/la.hpp"

namespace sdn::nn {

namespace {

template <typename T>
void check_rank4(const VarPtr<T>& x, const char* what) {
  if (x->value.rank() != 4)
    throw ShapeError(std::string(what) + ": expected rank-4 [N,C,H,W], got " +
                     shape_str(x->value.shape()));
}

// column index layout: ((n*Ho + oy)*Wo + ox); row layout: ((ci*k + ky)*k + kx)
template <typename T>
void im2col(const TensorT<T>& x, int k, int stride, int pad, int ho, int wo, TensorT<T>& cols) {
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int64_t out_cols = static_cast<int64_t>(n) * ho * wo;
  T* cp = cols.data();
  for (int c = 0; c < ci; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        int64_t row = (static_cast<int64_t>(c) * k + ky) * k + kx;
        T* dst = cp + row * out_cols;
        for (int nn = 0; nn < n; ++nn) {
          const T* plane = x.data() + (static_cast<int64_t>(nn) * ci + c) * h * w;
          for (int oy = 0; oy < ho; ++oy) {
            int iy = oy * stride - pad + ky;
            T* d = dst + (static_cast<int64_t>(nn) * ho + oy) * wo;
            if (iy < 0 || iy >= h) {
              std::fill(d, d + wo, T(0));
              continue;
            }
            const T* src = plane + static_cast<int64_t>(iy) * w;
            for (int ox = 0; ox < wo; ++ox) {
              int ix = ox * stride - pad + kx;
              d[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const TensorT<T>& cols, int k, int stride, int pad, int ho, int wo,
                TensorT<T>& dx) {
  const int n = dx.dim(0), ci = dx.dim(1), h = dx.dim(2), w = dx.dim(3);
  const int64_t out_cols = static_cast<int64_t>(n) * ho * wo;
  const T* cp = cols.data();
  for (int c = 0; c < ci; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        int64_t row = (static_cast<int64_t>(c) * k + ky) * k + kx;
        const T* src_row = cp + row * out_cols;
        for (int nn = 0; nn < n; ++nn) {
          T* plane = dx.data() + (static_cast<int64_t>(nn) * ci + c) * h * w;
          for (int oy = 0; oy < ho; ++oy) {
            int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            const T* s = src_row + (static_cast<int64_t>(nn) * ho + oy) * wo;
            T* dst = plane + static_cast<int64_t>(iy) * w;
            for (int ox = 0; ox < wo; ++ox) {
              int ix = ox * stride - pad + kx;
              if (ix >= 0 && ix < w) dst[ix] += s[ox];
            }
          }
        }
      }
    }
  }
}

// [Co, N*Ho*Wo] -> [N, Co, Ho, Wo]
template <typename T>
void scatter_rows_to_nchw(const TensorT<T>& y, TensorT<T>& out) {
  const int n = out.dim(0), co = out.dim(1);
  const int64_t plane = static_cast<int64_t>(out.dim(2)) * out.dim(3);
  for (int c = 0; c < co; ++c) {
    const T* src = y.data() + static_cast<int64_t>(c) * n * plane;
    for (int nn = 0; nn < n; ++nn)
      std::copy_n(src + static_cast<int64_t>(nn) * plane, plane,
                  out.data() + (static_cast<int64_t>(nn) * co + c) * plane);
  }
}

// [N, Co, Ho, Wo] -> [Co, N*Ho*Wo]
template <typename T>
void gather_nchw_to_rows(const TensorT<T>& g4, TensorT<T>& y) {
  const int n = g4.dim(0), co = g4.dim(1);
  const int64_t plane = static_cast<int64_t>(g4.dim(2)) * g4.dim(3);
  for (int c = 0; c < co; ++c) {
    T* dst = y.data() + static_cast<int64_t>(c) * n * plane;
    for (int nn = 0; nn < n; ++nn)
      std::copy_n(g4.data() + (static_cast<int64_t>(nn) * co + c) * plane, plane,
                  dst + static_cast<int64_t>(nn) * plane);
  }
}

}  // namespace

template <typename T>
VarPtr<T> conv2d(Graph<T>& g, const VarPtr<T>& x, const VarPtr<T>& w, int stride) {
  check_rank4(x, "conv2d input");
  if (w->value.rank() != 4) throw ShapeError("conv2d weight must be rank-4 [Co,Ci,k,k]");
  if (stride != 1 && stride != 2) throw InvalidArgument("conv2d stride must be 1 or 2");
  const int k = w->value.dim(2);
  if (w->value.dim(3) != k || k % 2 == 0)
    throw ShapeError("conv2d kernel must be square with odd side, got " +
                     shape_str(w->value.shape()));
  if (w->value.dim(1) != x->value.dim(1))
    throw ShapeError("conv2d channels: input " + shape_str(x->value.shape()) + " vs weight " +
                     shape_str(w->value.shape()));
  const int n = x->value.dim(0), h = x->value.dim(2), wd = x->value.dim(3);
  const int pad = k / 2;
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (wd + 2 * pad - k) / stride + 1;
  const int co = w->value.dim(0), ckk = w->value.dim(1) * k * k;

  TensorT<T> cols({ckk, static_cast<int>(static_cast<int64_t>(n) * ho * wo)});
  im2col(x->value, k, stride, pad, ho, wo, cols);
  TensorT<T> y({co, cols.dim(1)});
  la::gemm(w->value.data(), cols.data(), y.data(), co, ckk, cols.dim(1));
  auto out = make_var<T>(TensorT<T>({n, co, ho, wo}));
  scatter_rows_to_nchw(y, out->value);

  if (g.recording() && (x->needs_grad || w->needs_grad)) {
    out->needs_grad = true;
    g.record([x, w, out, stride, k, pad, ho, wo]() {
      if (!out->has_grad()) return;
      const int n_ = out->value.dim(0), co_ = out->value.dim(1);
      const int ckk_ = w->value.dim(1) * k * k;
      const int ncols = static_cast<int>(static_cast<int64_t>(n_) * ho * wo);
      TensorT<T> dy({co_, ncols});
      gather_nchw_to_rows(out->grad, dy);
      if (w->needs_grad) {
        TensorT<T> cols2({ckk_, ncols});
        im2col(x->value, k, stride, pad, ho, wo, cols2);
        w->ensure_grad();
        la::gemm_a_bt(dy.data(), cols2.data(), w->grad.data(), co_, ncols, ckk_, true);
      }
      if (x->needs_grad) {
        TensorT<T> dcols({ckk_, ncols});
        la::gemm_at_b(w->value.data(), dy.data(), dcols.data(), ckk_, co_, ncols);
        x->ensure_grad();
        col2im_add(dcols, k, stride, pad, ho, wo, x->grad);
      }
    });
  }
  return out;
}

template <typename T>
VarPtr<T> bias_add(Graph<T>& g, const VarPtr<T>& x, const VarPtr<T>& b) {
  check_rank4(x, "bias_add input");
  const int c = x->value.dim(1);
  if (b->value.rank() != 1 || b->value.dim(0) != c)
    throw ShapeError("bias shape " + shape_str(b->value.shape()) + " does not match channels of " +
                     shape_str(x->value.shape()));
  auto out = make_var<T>(TensorT<T>(x->value.shape()));
  const int n = x->value.dim(0);
  const int64_t plane = static_cast<int64_t>(x->value.dim(2)) * x->value.dim(3);
  for (int nn = 0; nn < n; ++nn)
    for (int cc = 0; cc < c; ++cc) {
      const T bv = b->value[cc];
      const T* src = x->value.data() + (static_cast<int64_t>(nn) * c + cc) * plane;
      T* dst = out->value.data() + (static_cast<int64_t>(nn) * c + cc) * plane;
      for (int64_t i = 0; i < plane; ++i) dst[i] = src[i] + bv;
    }
  if (g.recording() && (x->needs_grad || b->needs_grad)) {
    out->needs_grad = true;
    g.record([x, b, out, plane]() {
      if (!out->has_grad()) return;
      const int n_ = x->value.dim(0), c_ = x->value.dim(1);
      if (x->needs_grad) {
        x->ensure_grad();
        for (int64_t i = 0; i < x->grad.size(); ++i) x->grad[i] += out->grad[i];
      }
      if (b->needs_grad) {
        b->ensure_grad();
        for (int nn = 0; nn < n_; ++nn)
          for (int cc = 0; cc < c_; ++cc) {
            const T* gp = out->grad.data() + (static_cast<int64_t>(nn) * c_ + cc) * plane;
            T acc(0);
            for (int64_t i = 0; i < plane; ++i) acc += gp[i];
            b->grad[cc] += acc;
          }
      }
    });
  }
  return out;
}

template <typename T>
VarPtr<T> relu(Graph<T>& g, const VarPtr<T>& x) {
  auto out = make_var<T>(TensorT<T>(x->value.shape()));
  for (int64_t i = 0; i < x->value.size(); ++i) out->value[i] = std::max(T(0), x->value[i]);
  if (g.recording() && x->needs_grad) {
    out->needs_grad = true;
    g.record([x, out]() {
      if (!out->has_grad()) return;
      x->ensure_grad();
      for (int64_t i = 0; i < x->value.size(); ++i)
        if (x->value[i] > T(0)) x->grad[i] += out->grad[i];
    });
  }
  return out;
}

template <typename T>
VarPtr<T> maxpool2(Graph<T>& g, const VarPtr<T>& x) {
  check_rank4(x, "maxpool2 input");
  const int n = x->value.dim(0), c = x->value.dim(1), h = x->value.dim(2), w = x->value.dim(3);
  if (h % 2 || w % 2) throw ShapeError("maxpool2 needs even spatial extents, got " +
                                       shape_str(x->value.shape()));
  auto out = make_var<T>(TensorT<T>({n, c, h / 2, w / 2}));
  auto arg = std::make_shared<std::vector<uint8_t>>(static_cast<size_t>(out->value.size()));
  int64_t oi = 0;
  for (int nn = 0; nn < n; ++nn)
    for (int cc = 0; cc < c; ++cc) {
      const T* plane = x->value.data() + (static_cast<int64_t>(nn) * c + cc) * h * w;
      for (int oy = 0; oy < h / 2; ++oy)
        for (int ox = 0; ox < w / 2; ++ox, ++oi) {
          T best = plane[(2 * oy) * w + 2 * ox];
          uint8_t bi = 0;
          for (uint8_t d = 1; d < 4; ++d) {
            T v = plane[(2 * oy + d / 2) * w + 2 * ox + d % 2];
            if (v > best) {
              best = v;
              bi = d;
            }
          }
          out->value[oi] = best;
          (*arg)[static_cast<size_t>(oi)] = bi;
        }
    }
  if (g.recording() && x->needs_grad) {
    out->needs_grad = true;
    g.record([x, out, arg, h, w]() {
      if (!out->has_grad()) return;
      x->ensure_grad();
      const int n_ = x->value.dim(0), c_ = x->value.dim(1);
      int64_t oi2 = 0;
      for (int nn = 0; nn < n_; ++nn)
        for (int cc = 0; cc < c_; ++cc) {
          T* plane = x->grad.data() + (static_cast<int64_t>(nn) * c_ + cc) * h * w;
          for (int oy = 0; oy < h / 2; ++oy)
            for (int ox = 0; ox < w / 2; ++ox, ++oi2) {
              uint8_t d = (*arg)[static_cast<size_t>(oi2)];
              plane[(2 * oy + d / 2) * w + 2 * ox + d % 2] += out->grad[oi2];
            }
        }
    });
  }
  return out;
}

template <typename T>
VarPtr<T> upsample_nearest2(Graph<T>& g, const VarPtr<T>& x) {
  check_rank4(x, "upsample input");
  const int n = x->value.dim(0), c = x->value.dim(1), h = x->value.dim(2), w = x->value.dim(3);
  auto out = make_var<T>(TensorT<T>({n, c, 2 * h, 2 * w}));
  for (int nn = 0; nn < n; ++nn)
    for (int cc = 0; cc < c; ++cc) {
      const T* src = x->value.data() + (static_cast<int64_t>(nn) * c + cc) * h * w;
      T* dst = out->value.data() + (static_cast<int64_t>(nn) * c + cc) * 4 * h * w;
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          T v = src[y * w + xx];
          dst[(2 * y) * 2 * w + 2 * xx] = v;
          dst[(2 * y) * 2 * w + 2 * xx + 1] = v;
          dst[(2 * y + 1) * 2 * w + 2 * xx] = v;
          dst[(2 * y + 1) * 2 * w + 2 * xx + 1] = v;
        }
    }
  if (g.recording() && x->needs_grad) {
    out->needs_grad = true;
    g.record([x, out, h, w]() {
      if (!out->has_grad()) return;
      x->ensure_grad();
      const int n_ = x->value.dim(0), c_ = x->value.dim(1);
      for (int nn = 0; nn < n_; ++nn)
        for (int cc = 0; cc < c_; ++cc) {
          T* dst = x->grad.data() + (static_cast<int64_t>(nn) * c_ + cc) * h * w;
          const T* src = out->grad.data() + (static_cast<int64_t>(nn) * c_ + cc) * 4 * h * w;
          for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx)
              dst[y * w + xx] += src[(2 * y) * 2 * w + 2 * xx] + src[(2 * y) * 2 * w + 2 * xx + 1] +
                                 src[(2 * y + 1) * 2 * w + 2 * xx] +
                                 src[(2 * y + 1) * 2 * w + 2 * xx + 1];
        }
    });
  }
  return out;
}

template <typename T>
VarPtr<T> concat_channels(Graph<T>& g, const VarPtr<T>& a, const VarPtr<T>& b) {
  check_rank4(a, "concat input a");
  check_rank4(b, "concat input b");
  if (a->value.dim(0) != b->value.dim(0) || a->value.dim(2) != b->value.dim(2) ||
      a->value.dim(3) != b->value.dim(3))
    throw ShapeError("concat_channels: " + shape_str(a->value.shape()) + " vs " +
                     shape_str(b->value.shape()));
  const int n = a->value.dim(0), ca = a->value.dim(1), cb = b->value.dim(1);
  const int64_t plane = static_cast<int64_t>(a->value.dim(2)) * a->value.dim(3);
  auto out = make_var<T>(TensorT<T>({n, ca + cb, a->value.dim(2), a->value.dim(3)}));
  for (int nn = 0; nn < n; ++nn) {
    std::copy_n(a->value.data() + static_cast<int64_t>(nn) * ca * plane, ca * plane,
                out->value.data() + static_cast<int64_t>(nn) * (ca + cb) * plane);
    std::copy_n(b->value.data() + static_cast<int64_t>(nn) * cb * plane, cb * plane,
                out->value.data() + (static_cast<int64_t>(nn) * (ca + cb) + ca) * plane);
  }
  if (g.recording() && (a->needs_grad || b->needs_grad)) {
    out->needs_grad = true;
    g.record([a, b, out, plane]() {
      if (!out->has_grad()) return;
      const int n_ = a->value.dim(0), ca_ = a->value.dim(1), cb_ = b->value.dim(1);
      if (a->needs_grad) {
        a->ensure_grad();
        for (int nn = 0; nn < n_; ++nn) {
          const T* src = out->grad.data() + static_cast<int64_t>(nn) * (ca_ + cb_) * plane;
          T* dst = a->grad.data() + static_cast<int64_t>(nn) * ca_ * plane;
          for (int64_t i = 0; i < ca_ * plane; ++i) dst[i] += src[i];
        }
      }
      if (b->needs_grad) {
        b->ensure_grad();
        for (int nn = 0; nn < n_; ++nn) {
          const T* src = out->grad.data() + (static_cast<int64_t>(nn) * (ca_ + cb_) + ca_) * plane;
          T* dst = b->grad.data() + static_cast<int64_t>(nn) * cb_ * plane;
          for (int64_t i = 0; i < cb_ * plane; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return out;
}

template <typename T>
VarPtr<T> add(Graph<T>& g, const VarPtr<T>& a, const VarPtr<T>& b) {
  require_same_shape(a->value, b->value, "add");
  auto out = make_var<T>(TensorT<T>(a->value.shape()));
  for (int64_t i = 0; i < a->value.size(); ++i) out->value[i] = a->value[i] + b->value[i];
  if (g.recording() && (a->needs_grad || b->needs_grad)) {
    out->needs_grad = true;
    g.record([a, b, out]() {
      if (!out->has_grad()) return;
      if (a->needs_grad) {
        a->ensure_grad();
        for (int64_t i = 0; i < a->grad.size(); ++i) a->grad[i] += out->grad[i];
      }
      if (b->needs_grad) {
        b->ensure_grad();
        for (int64_t i = 0; i < b->grad.size(); ++i) b->grad[i] += out->grad[i];
      }
    });
  }
  return out;
}

template <typename T>
VarPtr<T> add_const(Graph<T>& g, const VarPtr<T>& x, const TensorT<T>& c) {
  auto out = make_var<T>(TensorT<T>(x->value.shape()));
  if (c.shape() == x->value.shape()) {
    for (int64_t i = 0; i < x->value.size(); ++i) out->value[i] = x->value[i] + c[i];
  } else if (x->value.rank() == 4 && c.rank() == 3 && c.dim(0) == x->value.dim(1) &&
             c.dim(1) == x->value.dim(2) && c.dim(2) == x->value.dim(3)) {
    const int64_t per = c.size();
    for (int nn = 0; nn < x->value.dim(0); ++nn)
      for (int64_t i = 0; i < per; ++i)
        out->value[static_cast<int64_t>(nn) * per + i] =
            x->value[static_cast<int64_t>(nn) * per + i] + c[i];
  } else {
    throw ShapeError("add_const: constant " + shape_str(c.shape()) + " does not broadcast to " +
                     shape_str(x->value.shape()));
  }
  if (g.recording() && x->needs_grad) {
    out->needs_grad = true;
    g.record([x, out]() {
      if (!out->has_grad()) return;
      x->ensure_grad();
      for (int64_t i = 0; i < x->grad.size(); ++i) x->grad[i] += out->grad[i];
    });
  }
  return out;
}

template <typename T>
VarPtr<T> elu_plus_one(Graph<T>& g, const VarPtr<T>& x) {
  auto out = make_var<T>(TensorT<T>(x->value.shape()));
  for (int64_t i = 0; i < x->value.size(); ++i) {
    T u = x->value[i];
    out->value[i] = u >= T(0) ? u + T(1) : std::exp(u);
  }
  if (g.recording() && x->needs_grad) {
    out->needs_grad = true;
    g.record([x, out]() {
      if (!out->has_grad()) return;
      x->ensure_grad();
      for (int64_t i = 0; i < x->value.size(); ++i) {
        T u = x->value[i];
        T d = u >= T(0) ? T(1) : out->value[i];  // exp(u) below zero
        x->grad[i] += out->grad[i] * d;
      }
    });
  }
  return out;
}

template <typename T>
VarPtr<T> softmax_cross_entropy(Graph<T>& g, const VarPtr<T>& logits, const TensorI& target) {
  check_rank4(logits, "softmax_cross_entropy logits");
  const int n = logits->value.dim(0), k = logits->value.dim(1), h = logits->value.dim(2),
            w = logits->value.dim(3);
  if (target.rank() != 3 || target.dim(0) != n || target.dim(1) != h || target.dim(2) != w)
    throw ShapeError("target shape " + shape_str(target.shape()) + " does not match logits " +
                     shape_str(logits->value.shape()));
  auto probs = std::make_shared<TensorT<T>>(logits->value.shape());
  const int64_t plane = static_cast<int64_t>(h) * w;
  double loss_acc = 0;
  for (int nn = 0; nn < n; ++nn) {
    const T* lp = logits->value.data() + static_cast<int64_t>(nn) * k * plane;
    T* pp = probs->data() + static_cast<int64_t>(nn) * k * plane;
    for (int64_t i = 0; i < plane; ++i) {
      int t = target[static_cast<int64_t>(nn) * plane + i];
      if (t < 0 || t >= k) throw InvalidArgument("target class out of range");
      T mx = lp[i];
      for (int c = 1; c < k; ++c) mx = std::max(mx, lp[static_cast<int64_t>(c) * plane + i]);
      double denom = 0;
      for (int c = 0; c < k; ++c)
        denom += std::exp(static_cast<double>(lp[static_cast<int64_t>(c) * plane + i] - mx));
      double lse = static_cast<double>(mx) + std::log(denom);
      for (int c = 0; c < k; ++c)
        pp[static_cast<int64_t>(c) * plane + i] = static_cast<T>(
            std::exp(static_cast<double>(lp[static_cast<int64_t>(c) * plane + i]) - lse));
      loss_acc += lse - static_cast<double>(lp[static_cast<int64_t>(t) * plane + i]);
    }
  }
  const double count = static_cast<double>(n) * h * w;
  auto out = make_var<T>(TensorT<T>::scalar(static_cast<T>(loss_acc / count)));
  if (g.recording() && logits->needs_grad) {
    out->needs_grad = true;
    TensorI tgt = target;
    g.record([logits, out, probs, tgt, count]() {
      if (!out->has_grad()) return;
      logits->ensure_grad();
      const int n_ = logits->value.dim(0), k_ = logits->value.dim(1);
      const int64_t plane_ =
          static_cast<int64_t>(logits->value.dim(2)) * logits->value.dim(3);
      const T scale = out->grad[0] / static_cast<T>(count);
      for (int nn = 0; nn < n_; ++nn)
        for (int64_t i = 0; i < plane_; ++i) {
          int t = tgt[static_cast<int64_t>(nn) * plane_ + i];
          for (int c = 0; c < k_; ++c) {
            int64_t idx = (static_cast<int64_t>(nn) * k_ + c) * plane_ + i;
            T p = (*probs)[idx];
            logits->grad[idx] += scale * (p - (c == t ? T(1) : T(0)));
          }
        }
    });
  }
  return out;
}

template <typename T>
VarPtr<T> reshape(Graph<T>& g, const VarPtr<T>& x, std::vector<int> shape) {
  auto out = make_var<T>(x->value.reshaped(std::move(shape)));
  if (g.recording() && x->needs_grad) {
    out->needs_grad = true;
    g.record([x, out]() {
      if (!out->has_grad()) return;
      x->ensure_grad();
      for (int64_t i = 0; i < x->grad.size(); ++i) x->grad[i] += out->grad[i];
    });
  }
  return out;
}

#define SDN_INSTANTIATE_OPS(T)                                                            \
  template VarPtr<T> conv2d<T>(Graph<T>&, const VarPtr<T>&, const VarPtr<T>&, int);       \
  template VarPtr<T> bias_add<T>(Graph<T>&, const VarPtr<T>&, const VarPtr<T>&);          \
  template VarPtr<T> relu<T>(Graph<T>&, const VarPtr<T>&);                                \
  template VarPtr<T> maxpool2<T>(Graph<T>&, const VarPtr<T>&);                            \
  template VarPtr<T> upsample_nearest2<T>(Graph<T>&, const VarPtr<T>&);                   \
  template VarPtr<T> concat_channels<T>(Graph<T>&, const VarPtr<T>&, const VarPtr<T>&);   \
  template VarPtr<T> add<T>(Graph<T>&, const VarPtr<T>&, const VarPtr<T>&);               \
  template VarPtr<T> add_const<T>(Graph<T>&, const VarPtr<T>&, const TensorT<T>&);        \
  template VarPtr<T> elu_plus_one<T>(Graph<T>&, const VarPtr<T>&);                        \
  template VarPtr<T> softmax_cross_entropy<T>(Graph<T>&, const VarPtr<T>&, const TensorI&); \
  template VarPtr<T> reshape<T>(Graph<T>&, const VarPtr<T>&, std::vector<int>);

SDN_INSTANTIATE_OPS(float)
SDN_INSTANTIATE_OPS(double)

}  // namespace sdn::nn
