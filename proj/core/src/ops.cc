// Copyright 2026 The CanonSLR Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "canonslr/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "canonslr/error.h"

namespace canonslr::ops {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
MatMap<T> as_matrix(Tensor<T>& t, std::size_t rows, std::size_t cols) {
  return MatMap<T>(t.data(), static_cast<Eigen::Index>(rows),
                   static_cast<Eigen::Index>(cols));
}
template <typename T>
ConstMatMap<T> as_matrix(const Tensor<T>& t, std::size_t rows,
                         std::size_t cols) {
  return ConstMatMap<T>(t.data(), static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(cols));
}

// Fixed-order reductions. Eigen's vectorized sum() splits by pointer
// alignment, which varies between runs and breaks bit reproducibility.
template <typename M, typename T>
void add_row_sums(const M& m, T* dst) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    T acc = 0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) acc += m(r, c);
    dst[r] += acc;
  }
}
template <typename M, typename T>
void add_col_sums(const M& m, T* dst) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) dst[c] += m(r, c);
  }
}

void require(bool cond, const char* op, const std::string& what) {
  if (!cond) throw InvalidArgument(std::string(op) + ": " + what);
}

template <typename T>
void accumulate(Node<T>* node, const Tensor<T>& delta) {
  if (!node->requires_grad) return;
  auto& g = node->grad_ref();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

struct ConvGeometry {
  std::size_t channels, frames, height, width, kernel, out_h, out_w;
  int stride, pad;
  std::size_t col_rows() const { return channels * kernel * kernel; }
  std::size_t col_cols() const { return frames * out_h * out_w; }
};

template <typename T>
void im2col(const Tensor<T>& x, const ConvGeometry& g, Tensor<T>& col) {
  const std::size_t plane = g.height * g.width;
  const std::size_t out_plane = g.out_h * g.out_w;
  T* dst = col.data();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        for (std::size_t n = 0; n < g.frames; ++n) {
          const T* src = x.data() + (c * g.frames + n) * plane;
          for (std::size_t oy = 0; oy < g.out_h; ++oy) {
            const long iy = static_cast<long>(oy) * g.stride + ky - g.pad;
            T* row = dst + n * out_plane + oy * g.out_w;
            if (iy < 0 || iy >= static_cast<long>(g.height)) {
              std::fill(row, row + g.out_w, T(0));
              continue;
            }
            for (std::size_t ox = 0; ox < g.out_w; ++ox) {
              const long ix = static_cast<long>(ox) * g.stride + kx - g.pad;
              row[ox] = (ix < 0 || ix >= static_cast<long>(g.width))
                            ? T(0)
                            : src[iy * g.width + ix];
            }
          }
        }
        dst += g.col_cols();
      }
    }
  }
}

template <typename T>
void col2im(const Tensor<T>& col, const ConvGeometry& g, Tensor<T>& dx) {
  const std::size_t plane = g.height * g.width;
  const std::size_t out_plane = g.out_h * g.out_w;
  const T* src = col.data();
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        for (std::size_t n = 0; n < g.frames; ++n) {
          T* dst = dx.data() + (c * g.frames + n) * plane;
          for (std::size_t oy = 0; oy < g.out_h; ++oy) {
            const long iy = static_cast<long>(oy) * g.stride + ky - g.pad;
            if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
            const T* row = src + n * out_plane + oy * g.out_w;
            for (std::size_t ox = 0; ox < g.out_w; ++ox) {
              const long ix = static_cast<long>(ox) * g.stride + kx - g.pad;
              if (ix >= 0 && ix < static_cast<long>(g.width)) {
                dst[iy * g.width + ix] += row[ox];
              }
            }
          }
        }
        src += g.col_cols();
      }
    }
  }
}

template <typename T>
T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

// Forward pass of one LSTM direction with every activation kept for BPTT.
template <typename T>
struct LstmTrace {
  Tensor<T> gates;   // [T, 4H] post-activation i, f, g, o
  Tensor<T> cell;    // [T, H]
  Tensor<T> hidden;  // [T, H]
};

template <typename T>
LstmTrace<T> lstm_forward(const Tensor<T>& x, const LstmWeights<T>& w,
                          bool reverse) {
  const std::size_t steps = x.dim(0), in = x.dim(1);
  const std::size_t hid = w.recurrent.value().dim(1);
  LstmTrace<T> tr{Tensor<T>({steps, 4 * hid}), Tensor<T>({steps, hid}),
                  Tensor<T>({steps, hid})};
  auto X = as_matrix(x, steps, in);
  auto Wx = as_matrix(w.input.value(), 4 * hid, in);
  auto Wh = as_matrix(w.recurrent.value(), 4 * hid, hid);
  auto b = as_matrix(w.bias.value(), 1, 4 * hid);
  auto A = as_matrix(tr.gates, steps, 4 * hid);
  A.noalias() = X * Wx.transpose();
  A.rowwise() += b.row(0);
  Eigen::Matrix<T, 1, Eigen::Dynamic> h_prev =
      Eigen::Matrix<T, 1, Eigen::Dynamic>::Zero(hid);
  Eigen::Matrix<T, 1, Eigen::Dynamic> c_prev = h_prev;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    auto a = A.row(t);
    a.noalias() += h_prev * Wh.transpose();
    for (std::size_t j = 0; j < hid; ++j) {
      const T ig = sigmoid(a(j));
      const T fg = sigmoid(a(hid + j));
      const T gg = std::tanh(a(2 * hid + j));
      const T og = sigmoid(a(3 * hid + j));
      a(j) = ig;
      a(hid + j) = fg;
      a(2 * hid + j) = gg;
      a(3 * hid + j) = og;
      const T c = fg * c_prev(j) + ig * gg;
      tr.cell(t, j) = c;
      tr.hidden(t, j) = og * std::tanh(c);
    }
    h_prev = as_matrix(tr.hidden, steps, hid).row(t);
    c_prev = as_matrix(tr.cell, steps, hid).row(t);
  }
  return tr;
}

// dh [T,H] is the gradient on this direction's hidden outputs.
template <typename T>
void lstm_backward(const Tensor<T>& x, const LstmWeights<T>& w,
                   const LstmTrace<T>& tr, const Tensor<T>& dh, bool reverse,
                   Tensor<T>* dx) {
  const std::size_t steps = x.dim(0), in = x.dim(1);
  const std::size_t hid = w.recurrent.value().dim(1);
  auto Wh = as_matrix(w.recurrent.value(), 4 * hid, hid);
  Tensor<T> dgates({steps, 4 * hid});
  auto dA = as_matrix(dgates, steps, 4 * hid);
  Eigen::Matrix<T, 1, Eigen::Dynamic> dh_next =
      Eigen::Matrix<T, 1, Eigen::Dynamic>::Zero(hid);
  Eigen::Matrix<T, 1, Eigen::Dynamic> dc_next = dh_next;
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? k : steps - 1 - k;
    const bool has_prev = reverse ? t + 1 < steps : t > 0;
    const std::size_t tp = reverse ? t + 1 : t - 1;
    for (std::size_t j = 0; j < hid; ++j) {
      const T ig = tr.gates(t, j), fg = tr.gates(t, hid + j);
      const T gg = tr.gates(t, 2 * hid + j), og = tr.gates(t, 3 * hid + j);
      const T tc = std::tanh(tr.cell(t, j));
      const T dht = dh(t, j) + dh_next(j);
      const T dct = dc_next(j) + dht * og * (T(1) - tc * tc);
      const T c_prev = has_prev ? tr.cell(tp, j) : T(0);
      dA(t, j) = dct * gg * ig * (T(1) - ig);
      dA(t, hid + j) = dct * c_prev * fg * (T(1) - fg);
      dA(t, 2 * hid + j) = dct * ig * (T(1) - gg * gg);
      dA(t, 3 * hid + j) = dht * tc * og * (T(1) - og);
      dc_next(j) = dct * fg;
    }
    dh_next.noalias() = dA.row(t) * Wh;
  }
  auto X = as_matrix(x, steps, in);
  if (w.input.requires_grad()) {
    auto& g = w.input.node()->grad_ref();
    as_matrix(g, 4 * hid, in).noalias() += dA.transpose() * X;
  }
  if (w.recurrent.requires_grad()) {
    auto& g = w.recurrent.node()->grad_ref();
    auto dWh = as_matrix(g, 4 * hid, hid);
    auto Hm = as_matrix(tr.hidden, steps, hid);
    for (std::size_t t = 0; t < steps; ++t) {
      const bool has_prev = reverse ? t + 1 < steps : t > 0;
      if (!has_prev) continue;
      const std::size_t tp = reverse ? t + 1 : t - 1;
      dWh.noalias() += dA.row(t).transpose() * Hm.row(tp);
    }
  }
  if (w.bias.requires_grad()) {
    auto& g = w.bias.node()->grad_ref();
    add_col_sums(dA, g.data());
  }
  if (dx != nullptr) {
    auto Wx = as_matrix(w.input.value(), 4 * hid, in);
    as_matrix(*dx, steps, in).noalias() += dA * Wx;
  }
}

}  // namespace

template <typename T>
Var<T> add(Tape<T>* tape, const Var<T>& a, const Var<T>& b) {
  require(a.shape() == b.shape(), "add",
          shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  Node<T>* an = a.node();
  Node<T>* bn = b.node();
  return Tape<T>::record(tape, std::move(out), {a, b},
                         [an, bn](const Tensor<T>& g) {
                           accumulate(an, g);
                           accumulate(bn, g);
                         });
}

template <typename T>
Var<T> relu(Tape<T>* tape, const Var<T>& x) {
  Tensor<T> out = x.value();
  for (auto& v : out.values()) v = v > T(0) ? v : T(0);
  Node<T>* xn = x.node();
  return Tape<T>::record(tape, std::move(out), {x}, [xn](const Tensor<T>& g) {
    if (!xn->requires_grad) return;
    auto& dx = xn->grad_ref();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xn->value[i] > T(0)) dx[i] += g[i];
    }
  });
}

template <typename T>
Var<T> scale(Tape<T>* tape, const Var<T>& x, T factor) {
  Tensor<T> out = x.value();
  for (auto& v : out.values()) v *= factor;
  Node<T>* xn = x.node();
  return Tape<T>::record(tape, std::move(out), {x},
                         [xn, factor](const Tensor<T>& g) {
                           if (!xn->requires_grad) return;
                           auto& dx = xn->grad_ref();
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             dx[i] += factor * g[i];
                           }
                         });
}

template <typename T>
Var<T> scale_by(Tape<T>* tape, const Var<T>& x, const Var<T>& alpha) {
  require(alpha.value().size() == 1, "scale_by", "alpha must be a scalar");
  const T a = alpha.value()[0];
  Tensor<T> out = x.value();
  for (auto& v : out.values()) v *= a;
  Node<T>* xn = x.node();
  Node<T>* an = alpha.node();
  return Tape<T>::record(
      tape, std::move(out), {x, alpha}, [xn, an](const Tensor<T>& g) {
        const T a = an->value[0];
        if (xn->requires_grad) {
          auto& dx = xn->grad_ref();
          for (std::size_t i = 0; i < g.size(); ++i) dx[i] += a * g[i];
        }
        if (an->requires_grad) {
          T s = 0;
          for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * xn->value[i];
          an->grad_ref()[0] += s;
        }
      });
}

template <typename T>
Var<T> weighted_sum(Tape<T>* tape, const std::vector<Var<T>>& terms,
                    const std::vector<T>& weights) {
  require(terms.size() == weights.size(), "weighted_sum", "size mismatch");
  T total = 0;
  std::vector<Node<T>*> nodes;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    require(terms[i].value().size() == 1, "weighted_sum", "terms must be scalars");
    total += weights[i] * terms[i].value()[0];
    nodes.push_back(terms[i].node());
  }
  return Tape<T>::record(tape, Tensor<T>({1}, {total}), terms,
                         [nodes, weights](const Tensor<T>& g) {
                           for (std::size_t i = 0; i < nodes.size(); ++i) {
                             if (nodes[i]->requires_grad) {
                               nodes[i]->grad_ref()[0] += weights[i] * g[0];
                             }
                           }
                         });
}

template <typename T>
Var<T> conv2d(Tape<T>* tape, const Var<T>& x, const Var<T>& weight,
              const Var<T>& bias, int stride, int pad) {
  const auto& xs = x.shape();
  const auto& ws = weight.shape();
  require(xs.size() == 4 && ws.size() == 4, "conv2d", "expects rank-4 input and weight");
  require(ws[1] == xs[0], "conv2d",
          "input channels " + std::to_string(xs[0]) + " != weight channels " +
              std::to_string(ws[1]));
  require(ws[2] == ws[3], "conv2d", "square kernels only");
  require(bias.value().size() == ws[0], "conv2d", "bias size mismatch");
  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ws[2], 0, 0, stride, pad};
  require(xs[2] + 2 * pad >= g.kernel && xs[3] + 2 * pad >= g.kernel, "conv2d",
          "input smaller than kernel");
  g.out_h = (xs[2] + 2 * pad - g.kernel) / stride + 1;
  g.out_w = (xs[3] + 2 * pad - g.kernel) / stride + 1;
  const std::size_t out_ch = ws[0];

  Tensor<T> col({g.col_rows(), g.col_cols()});
  im2col(x.value(), g, col);
  Tensor<T> out({out_ch, g.frames, g.out_h, g.out_w});
  auto Y = as_matrix(out, out_ch, g.col_cols());
  Y.noalias() = as_matrix(weight.value(), out_ch, g.col_rows()) *
                as_matrix(col, g.col_rows(), g.col_cols());
  const T* b = bias.value().data();
  for (std::size_t o = 0; o < out_ch; ++o) Y.row(o).array() += b[o];

  Node<T>* xn = x.node();
  Node<T>* wn = weight.node();
  Node<T>* bn = bias.node();
  return Tape<T>::record(
      tape, std::move(out), {x, weight, bias},
      [xn, wn, bn, g, out_ch, col = std::move(col)](const Tensor<T>& grad) {
        auto dY = as_matrix(grad, out_ch, g.col_cols());
        if (bn->requires_grad) {
          add_row_sums(dY, bn->grad_ref().data());
        }
        if (wn->requires_grad) {
          as_matrix(wn->grad_ref(), out_ch, g.col_rows()).noalias() +=
              dY * as_matrix(col, g.col_rows(), g.col_cols()).transpose();
        }
        if (xn->requires_grad) {
          Tensor<T> dcol({g.col_rows(), g.col_cols()});
          as_matrix(dcol, g.col_rows(), g.col_cols()).noalias() =
              as_matrix(wn->value, out_ch, g.col_rows()).transpose() * dY;
          col2im(dcol, g, xn->grad_ref());
        }
      });
}

template <typename T>
Var<T> spatial_mean(Tape<T>* tape, const Var<T>& x) {
  const auto& s = x.shape();
  require(s.size() == 4, "spatial_mean", "expects [C,N,H,W]");
  const std::size_t ch = s[0], frames = s[1], plane = s[2] * s[3];
  Tensor<T> out({frames, ch});
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t n = 0; n < frames; ++n) {
      const T* p = x.value().data() + (c * frames + n) * plane;
      T acc = 0;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      out(n, c) = acc / static_cast<T>(plane);
    }
  }
  Node<T>* xn = x.node();
  return Tape<T>::record(
      tape, std::move(out), {x}, [xn, ch, frames, plane](const Tensor<T>& g) {
        if (!xn->requires_grad) return;
        auto& dx = xn->grad_ref();
        const T inv = T(1) / static_cast<T>(plane);
        for (std::size_t c = 0; c < ch; ++c) {
          for (std::size_t n = 0; n < frames; ++n) {
            T* p = dx.data() + (c * frames + n) * plane;
            const T v = g(n, c) * inv;
            for (std::size_t i = 0; i < plane; ++i) p[i] += v;
          }
        }
      });
}

template <typename T>
Var<T> conv1d(Tape<T>* tape, const Var<T>& x, const Var<T>& weight,
              const Var<T>& bias, int pad) {
  const auto& xs = x.shape();
  const auto& ws = weight.shape();
  require(xs.size() == 2 && ws.size() == 3, "conv1d", "expects x [T,C], weight [O,C,k]");
  require(ws[1] == xs[1], "conv1d", "channel mismatch");
  require(bias.value().size() == ws[0], "conv1d", "bias size mismatch");
  const std::size_t steps = xs[0], in = xs[1], out_ch = ws[0], k = ws[2];
  require(steps + 2 * pad >= k, "conv1d", "sequence shorter than kernel");
  const std::size_t out_steps = steps + 2 * pad - k + 1;
  Tensor<T> col({out_steps, in * k});
  for (std::size_t t = 0; t < out_steps; ++t) {
    for (std::size_t c = 0; c < in; ++c) {
      for (std::size_t j = 0; j < k; ++j) {
        const long src = static_cast<long>(t + j) - pad;
        col(t, c * k + j) = (src < 0 || src >= static_cast<long>(steps))
                                ? T(0)
                                : x.value()(static_cast<std::size_t>(src), c);
      }
    }
  }
  Tensor<T> out({out_steps, out_ch});
  auto Y = as_matrix(out, out_steps, out_ch);
  Y.noalias() = as_matrix(col, out_steps, in * k) *
                as_matrix(weight.value(), out_ch, in * k).transpose();
  Y.rowwise() += as_matrix(bias.value(), 1, out_ch).row(0);

  Node<T>* xn = x.node();
  Node<T>* wn = weight.node();
  Node<T>* bn = bias.node();
  return Tape<T>::record(
      tape, std::move(out), {x, weight, bias},
      [=, col = std::move(col)](const Tensor<T>& g) {
        auto dY = as_matrix(g, out_steps, out_ch);
        if (bn->requires_grad) {
          add_col_sums(dY, bn->grad_ref().data());
        }
        if (wn->requires_grad) {
          as_matrix(wn->grad_ref(), out_ch, in * k).noalias() +=
              dY.transpose() * as_matrix(col, out_steps, in * k);
        }
        if (xn->requires_grad) {
          RowMat<T> dcol = dY * as_matrix(wn->value, out_ch, in * k);
          auto& dx = xn->grad_ref();
          for (std::size_t t = 0; t < out_steps; ++t) {
            for (std::size_t c = 0; c < in; ++c) {
              for (std::size_t j = 0; j < k; ++j) {
                const long src = static_cast<long>(t + j) - pad;
                if (src >= 0 && src < static_cast<long>(steps)) {
                  dx(static_cast<std::size_t>(src), c) += dcol(t, c * k + j);
                }
              }
            }
          }
        }
      });
}

template <typename T>
Var<T> max_pool1d(Tape<T>* tape, const Var<T>& x, int window) {
  const auto& xs = x.shape();
  require(xs.size() == 2, "max_pool1d", "expects [T,C]");
  require(window >= 1, "max_pool1d", "window must be positive");
  const std::size_t w = static_cast<std::size_t>(window);
  const std::size_t out_steps = xs[0] / w, ch = xs[1];
  require(out_steps >= 1, "max_pool1d", "sequence shorter than window");
  Tensor<T> out({out_steps, ch});
  std::vector<std::size_t> argmax(out_steps * ch);
  for (std::size_t t = 0; t < out_steps; ++t) {
    for (std::size_t c = 0; c < ch; ++c) {
      std::size_t best = t * w;
      for (std::size_t j = 1; j < w; ++j) {
        if (x.value()(t * w + j, c) > x.value()(best, c)) best = t * w + j;
      }
      argmax[t * ch + c] = best;
      out(t, c) = x.value()(best, c);
    }
  }
  Node<T>* xn = x.node();
  return Tape<T>::record(tape, std::move(out), {x},
                         [xn, ch, argmax = std::move(argmax)](const Tensor<T>& g) {
                           if (!xn->requires_grad) return;
                           auto& dx = xn->grad_ref();
                           for (std::size_t i = 0; i < argmax.size(); ++i) {
                             dx(argmax[i], i % ch) += g[i];
                           }
                         });
}

template <typename T>
Var<T> linear(Tape<T>* tape, const Var<T>& x, const Var<T>& weight,
              const Var<T>& bias) {
  const auto& xs = x.shape();
  const auto& ws = weight.shape();
  require(xs.size() == 2 && ws.size() == 2 && ws[1] == xs[1], "linear",
          "shape mismatch " + shape_string(xs) + " x " + shape_string(ws));
  require(bias.value().size() == ws[0], "linear", "bias size mismatch");
  const std::size_t rows = xs[0], in = xs[1], out_dim = ws[0];
  Tensor<T> out({rows, out_dim});
  auto Y = as_matrix(out, rows, out_dim);
  Y.noalias() = as_matrix(x.value(), rows, in) *
                as_matrix(weight.value(), out_dim, in).transpose();
  Y.rowwise() += as_matrix(bias.value(), 1, out_dim).row(0);
  Node<T>* xn = x.node();
  Node<T>* wn = weight.node();
  Node<T>* bn = bias.node();
  return Tape<T>::record(
      tape, std::move(out), {x, weight, bias}, [=](const Tensor<T>& g) {
        auto dY = as_matrix(g, rows, out_dim);
        if (bn->requires_grad) {
          add_col_sums(dY, bn->grad_ref().data());
        }
        if (wn->requires_grad) {
          as_matrix(wn->grad_ref(), out_dim, in).noalias() +=
              dY.transpose() * as_matrix(xn->value, rows, in);
        }
        if (xn->requires_grad) {
          as_matrix(xn->grad_ref(), rows, in).noalias() +=
              dY * as_matrix(wn->value, out_dim, in);
        }
      });
}

template <typename T>
Var<T> matmul(Tape<T>* tape, const Var<T>& x, const Var<T>& weight) {
  const auto& xs = x.shape();
  const auto& ws = weight.shape();
  require(!xs.empty() && ws.size() == 2 && ws[0] == xs.back(), "matmul",
          "shape mismatch " + shape_string(xs) + " x " + shape_string(ws));
  const std::size_t in = ws[0], out_dim = ws[1];
  const std::size_t rows = x.value().size() / in;
  Shape out_shape = xs;
  out_shape.back() = out_dim;
  Tensor<T> out(out_shape);
  as_matrix(out, rows, out_dim).noalias() =
      as_matrix(x.value(), rows, in) * as_matrix(weight.value(), in, out_dim);
  Node<T>* xn = x.node();
  Node<T>* wn = weight.node();
  return Tape<T>::record(
      tape, std::move(out), {x, weight}, [=](const Tensor<T>& g) {
        auto dY = as_matrix(g, rows, out_dim);
        if (wn->requires_grad) {
          as_matrix(wn->grad_ref(), in, out_dim).noalias() +=
              as_matrix(xn->value, rows, in).transpose() * dY;
        }
        if (xn->requires_grad) {
          as_matrix(xn->grad_ref(), rows, in).noalias() +=
              dY * as_matrix(wn->value, in, out_dim).transpose();
        }
      });
}

template <typename T>
Var<T> bilstm(Tape<T>* tape, const Var<T>& x, const LstmWeights<T>& forward,
              const LstmWeights<T>& backward) {
  const auto& xs = x.shape();
  require(xs.size() == 2, "bilstm", "expects [T,C]");
  for (const auto* w : {&forward, &backward}) {
    const auto& is = w->input.shape();
    const auto& rs = w->recurrent.shape();
    require(is.size() == 2 && is[1] == xs[1] && rs.size() == 2 &&
                rs[0] == is[0] && rs[0] == 4 * rs[1] &&
                w->bias.value().size() == is[0],
            "bilstm", "weight shapes inconsistent with input");
  }
  const std::size_t steps = xs[0], hid = forward.recurrent.shape()[1];
  auto fwd = lstm_forward(x.value(), forward, false);
  auto bwd = lstm_forward(x.value(), backward, true);
  Tensor<T> out({steps, 2 * hid});
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < hid; ++j) {
      out(t, j) = fwd.hidden(t, j);
      out(t, hid + j) = bwd.hidden(t, j);
    }
  }
  Node<T>* xn = x.node();
  return Tape<T>::record(
      tape, std::move(out),
      {x, forward.input, forward.recurrent, forward.bias, backward.input,
       backward.recurrent, backward.bias},
      [=, fwd = std::move(fwd), bwd = std::move(bwd)](const Tensor<T>& g) {
        Tensor<T> dh_f({steps, hid}), dh_b({steps, hid});
        for (std::size_t t = 0; t < steps; ++t) {
          for (std::size_t j = 0; j < hid; ++j) {
            dh_f(t, j) = g(t, j);
            dh_b(t, j) = g(t, hid + j);
          }
        }
        Tensor<T>* dx = xn->requires_grad ? &xn->grad_ref() : nullptr;
        lstm_backward(xn->value, forward, fwd, dh_f, false, dx);
        lstm_backward(xn->value, backward, bwd, dh_b, true, dx);
      });
}

#define CANONSLR_INSTANTIATE_OPS(T)                                         \
  template Var<T> add(Tape<T>*, const Var<T>&, const Var<T>&);              \
  template Var<T> relu(Tape<T>*, const Var<T>&);                            \
  template Var<T> scale(Tape<T>*, const Var<T>&, T);                        \
  template Var<T> scale_by(Tape<T>*, const Var<T>&, const Var<T>&);         \
  template Var<T> weighted_sum(Tape<T>*, const std::vector<Var<T>>&,        \
                               const std::vector<T>&);                      \
  template Var<T> conv2d(Tape<T>*, const Var<T>&, const Var<T>&,            \
                         const Var<T>&, int, int);                          \
  template Var<T> spatial_mean(Tape<T>*, const Var<T>&);                    \
  template Var<T> conv1d(Tape<T>*, const Var<T>&, const Var<T>&,            \
                         const Var<T>&, int);                               \
  template Var<T> max_pool1d(Tape<T>*, const Var<T>&, int);                 \
  template Var<T> linear(Tape<T>*, const Var<T>&, const Var<T>&,            \
                         const Var<T>&);                                    \
  template Var<T> matmul(Tape<T>*, const Var<T>&, const Var<T>&);           \
  template Var<T> bilstm(Tape<T>*, const Var<T>&, const LstmWeights<T>&,    \
                         const LstmWeights<T>&);

CANONSLR_INSTANTIATE_OPS(float)
CANONSLR_INSTANTIATE_OPS(double)

#undef CANONSLR_INSTANTIATE_OPS

}  // namespace canonslr::ops
