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

#include "canonslr/tme.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "canonslr/error.h"
#include "canonslr/ops.h"

namespace canonslr::tme {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

template <typename T>
ConstMatMap<T> frame_rows(const Tensor<T>& x, std::size_t t) {
  const std::size_t b = x.dim(1), c = x.dim(2);
  return ConstMatMap<T>(x.data() + t * b * c, static_cast<Eigen::Index>(b),
                        static_cast<Eigen::Index>(c));
}

struct Degrees {
  std::vector<double> deg;
  std::vector<double> coeff;  // per edge: w / sqrt(deg_src * deg_dst)
};

template <typename W>
Degrees degrees(const TemporalGraph& graph, const W& weight_of) {
  Degrees d;
  d.deg.assign(graph.num_nodes(), 1.0);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    d.deg[graph.edges[e].src] += weight_of(e);
    d.deg[graph.edges[e].dst] += weight_of(e);
  }
  d.coeff.resize(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& edge = graph.edges[e];
    d.coeff[e] = weight_of(e) / std::sqrt(d.deg[edge.src] * d.deg[edge.dst]);
  }
  return d;
}

// Y = D^-1/2 (A+I) D^-1/2 G for nodes [N,C].
template <typename T>
Tensor<T> propagate(const TemporalGraph& graph, const Degrees& d,
                    const T* nodes, std::size_t n, std::size_t c) {
  Tensor<T> y({n, c});
  for (std::size_t u = 0; u < n; ++u) {
    const T s = static_cast<T>(1.0 / d.deg[u]);
    for (std::size_t k = 0; k < c; ++k) y[u * c + k] = s * nodes[u * c + k];
  }
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& edge = graph.edges[e];
    const T w = static_cast<T>(d.coeff[e]);
    for (std::size_t k = 0; k < c; ++k) {
      y[edge.src * c + k] += w * nodes[edge.dst * c + k];
      y[edge.dst * c + k] += w * nodes[edge.src * c + k];
    }
  }
  return y;
}

void check_graph_nodes(const TemporalGraph& graph, std::size_t rows) {
  if (rows != graph.num_nodes()) {
    throw InvalidArgument("graph_convolve: " + std::to_string(rows) +
                          " node rows for a graph of " +
                          std::to_string(graph.num_nodes()) + " nodes");
  }
}

}  // namespace

template <typename T>
Tensor<T> tokenize(const Tensor<T>& stage) {
  if (stage.rank() != 4) {
    throw InvalidArgument("tokenize: expected [C,T,H,W], got " +
                          shape_string(stage.shape()));
  }
  const std::size_t c = stage.dim(0), t = stage.dim(1);
  const std::size_t b = stage.dim(2) * stage.dim(3);
  Tensor<T> out({t, b, c});
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t ti = 0; ti < t; ++ti) {
      const T* src = stage.data() + (ci * t + ti) * b;
      for (std::size_t bi = 0; bi < b; ++bi) out(ti, bi, ci) = src[bi];
    }
  }
  return out;
}

template <typename T>
Tensor<T> untokenize(const Tensor<T>& tokens, std::size_t height,
                     std::size_t width) {
  if (tokens.rank() != 3 || tokens.dim(1) != height * width) {
    throw InvalidArgument("untokenize: token shape " + shape_string(tokens.shape()) +
                          " does not match " + std::to_string(height) + "x" +
                          std::to_string(width));
  }
  const std::size_t t = tokens.dim(0), b = tokens.dim(1), c = tokens.dim(2);
  Tensor<T> out({c, t, height, width});
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t ti = 0; ti < t; ++ti) {
      T* dst = out.data() + (ci * t + ti) * b;
      for (std::size_t bi = 0; bi < b; ++bi) dst[bi] = tokens(ti, bi, ci);
    }
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> correlate_projected(const Tensor<T>& queries,
                                           const Tensor<T>& keys) {
  if (queries.rank() != 3 || queries.shape() != keys.shape()) {
    throw InvalidArgument("correlate: queries/keys must share shape [T,B,d]");
  }
  const std::size_t frames = queries.dim(0), b = queries.dim(1);
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(queries.dim(2)));
  std::vector<Tensor<T>> out;
  for (std::size_t t = 0; t + 1 < frames; ++t) {
    Tensor<T> s({b, b});
    Eigen::Map<RowMat<T>>(s.data(), static_cast<Eigen::Index>(b),
                          static_cast<Eigen::Index>(b))
        .noalias() = inv_sqrt_d * (frame_rows(queries, t) *
                                   frame_rows(keys, t + 1).transpose());
    out.push_back(std::move(s));
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>> correlate(const Tensor<T>& tokens, const Tensor<T>& wq,
                                 const Tensor<T>& wk) {
  if (tokens.rank() != 3 || wq.rank() != 2 || wq.shape() != wk.shape() ||
      wq.dim(0) != tokens.dim(2)) {
    throw InvalidArgument("correlate: projections must be [C,d] for tokens [T,B,C]");
  }
  Var<T> u(tokens), q_w(wq), k_w(wk);
  return correlate_projected(ops::matmul<T>(nullptr, u, q_w).value(),
                             ops::matmul<T>(nullptr, u, k_w).value());
}

template <typename T>
TemporalGraph build_graph(const std::vector<Tensor<T>>& scores, std::size_t k) {
  if (k < 1) throw InvalidArgument("build_graph: K must be >= 1");
  TemporalGraph g;
  g.frames = scores.size() + 1;
  g.tokens_per_frame = scores.empty() ? 0 : scores.front().dim(0);
  if (scores.empty()) return g;
  const std::size_t b = g.tokens_per_frame;
  const std::size_t keep = std::min(k, b);
  g.row_degree = keep;
  g.edges.reserve(scores.size() * b * keep);
  std::vector<std::size_t> idx(b);
  for (std::size_t t = 0; t < scores.size(); ++t) {
    const auto& s = scores[t];
    for (std::size_t i = 0; i < b; ++i) {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(keep), idx.end(),
                        [&](std::size_t a, std::size_t c) {
                          if (s(i, a) != s(i, c)) return s(i, a) > s(i, c);
                          return a < c;
                        });
      const double top = static_cast<double>(s(i, idx[0]));
      double z = 0;
      for (std::size_t r = 0; r < keep; ++r) {
        z += std::exp(static_cast<double>(s(i, idx[r])) - top);
      }
      for (std::size_t r = 0; r < keep; ++r) {
        const double w = std::exp(static_cast<double>(s(i, idx[r])) - top) / z;
        g.edges.push_back({t * b + i, (t + 1) * b + idx[r], w});
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> graph_convolve(const TemporalGraph& graph, const Tensor<T>& nodes,
                         const Tensor<T>& weight) {
  const std::size_t c = weight.dim(0);
  check_graph_nodes(graph, nodes.size() / std::max<std::size_t>(c, 1));
  Tensor<T> w({graph.edges.size()});
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    w[e] = static_cast<T>(graph.edges[e].weight);
  }
  Tensor<T> flat = nodes;
  flat.reshape({graph.num_nodes(), c});
  return graph_convolve<T>(nullptr, graph, Var<T>(flat), Var<T>(w), Var<T>(weight))
      .value();
}

template <typename T>
Tensor<T> fuse(const Tensor<T>& stage, const Tensor<T>& enhanced, T alpha) {
  if (stage.shape() != enhanced.shape()) {
    throw InvalidArgument("fuse: shape " + shape_string(enhanced.shape()) +
                          " does not match stage " + shape_string(stage.shape()));
  }
  Tensor<T> out = stage;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += alpha * enhanced[i];
  return out;
}

template <typename T>
Var<T> tokenize(Tape<T>* tape, const Var<T>& stage) {
  const std::size_t h = stage.shape().at(2), w = stage.shape().at(3);
  Node<T>* sn = stage.node();
  return Tape<T>::record(tape, tokenize(stage.value()), {stage},
                         [sn, h, w](const Tensor<T>& g) {
                           if (!sn->requires_grad) return;
                           const Tensor<T> back = untokenize(g, h, w);
                           auto& dx = sn->grad_ref();
                           for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += back[i];
                         });
}

template <typename T>
Var<T> untokenize(Tape<T>* tape, const Var<T>& tokens, std::size_t height,
                  std::size_t width) {
  Node<T>* tn = tokens.node();
  return Tape<T>::record(tape, untokenize(tokens.value(), height, width), {tokens},
                         [tn](const Tensor<T>& g) {
                           if (!tn->requires_grad) return;
                           const Tensor<T> back = tokenize(g);
                           auto& dx = tn->grad_ref();
                           for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += back[i];
                         });
}

template <typename T>
Var<T> edge_weights(Tape<T>* tape, const Var<T>& queries, const Var<T>& keys,
                    const TemporalGraph& graph) {
  const auto& qs = queries.shape();
  if (qs.size() != 3 || qs != keys.shape() || qs[0] != graph.frames ||
      (graph.tokens_per_frame != 0 && qs[1] != graph.tokens_per_frame)) {
    throw InvalidArgument("edge_weights: queries/keys do not match the graph");
  }
  const std::size_t d = qs[2];
  const std::size_t keep = graph.row_degree;
  const std::size_t num_edges = graph.edges.size();
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(d));
  const T* q = queries.value().data();
  const T* kk = keys.value().data();
  Tensor<T> w({num_edges});
  for (std::size_t r = 0; r * keep < num_edges; ++r) {
    T top = -std::numeric_limits<T>::infinity();
    std::vector<T> s(keep);
    for (std::size_t j = 0; j < keep; ++j) {
      const auto& e = graph.edges[r * keep + j];
      T acc = 0;
      for (std::size_t x = 0; x < d; ++x) acc += q[e.src * d + x] * kk[e.dst * d + x];
      s[j] = acc * inv_sqrt_d;
      top = std::max(top, s[j]);
    }
    T z = 0;
    for (std::size_t j = 0; j < keep; ++j) z += std::exp(s[j] - top);
    for (std::size_t j = 0; j < keep; ++j) w[r * keep + j] = std::exp(s[j] - top) / z;
  }
  Node<T>* qn = queries.node();
  Node<T>* kn = keys.node();
  Tensor<T> weights_copy = w;
  return Tape<T>::record(
      tape, std::move(w), {queries, keys},
      [qn, kn, keep, d, inv_sqrt_d, sm = std::move(weights_copy),
       edges = graph.edges](const Tensor<T>& g) {
        const std::size_t num_edges = edges.size();
        for (std::size_t r = 0; r * keep < num_edges; ++r) {
          T dot = 0;
          for (std::size_t j = 0; j < keep; ++j) dot += sm[r * keep + j] * g[r * keep + j];
          for (std::size_t j = 0; j < keep; ++j) {
            const std::size_t ei = r * keep + j;
            const T ds = sm[ei] * (g[ei] - dot) * inv_sqrt_d;
            const auto& e = edges[ei];
            if (qn->requires_grad) {
              auto& dq = qn->grad_ref();
              for (std::size_t x = 0; x < d; ++x) dq[e.src * d + x] += ds * kn->value[e.dst * d + x];
            }
            if (kn->requires_grad) {
              auto& dk = kn->grad_ref();
              for (std::size_t x = 0; x < d; ++x) dk[e.dst * d + x] += ds * qn->value[e.src * d + x];
            }
          }
        }
      });
}

template <typename T>
Var<T> graph_convolve(Tape<T>* tape, const TemporalGraph& graph,
                      const Var<T>& nodes, const Var<T>& weights,
                      const Var<T>& weight) {
  const auto& ws = weight.shape();
  if (ws.size() != 2) throw InvalidArgument("graph_convolve: weight must be [C,C']");
  const std::size_t c = ws[0], c_out = ws[1];
  if (nodes.value().size() % std::max<std::size_t>(c, 1) != 0) {
    throw InvalidArgument("graph_convolve: node features do not match weight rows");
  }
  const std::size_t n = nodes.value().size() / c;
  check_graph_nodes(graph, n);
  if (weights.value().size() != graph.edges.size()) {
    throw InvalidArgument("graph_convolve: one weight per edge required");
  }
  const Tensor<T>& wv = weights.value();
  const Degrees dg = degrees(graph, [&](std::size_t e) { return static_cast<double>(wv[e]); });
  Tensor<T> y = propagate(graph, dg, nodes.value().data(), n, c);
  Shape out_shape = nodes.shape();
  out_shape.back() = c_out;
  Tensor<T> out(out_shape);
  Eigen::Map<RowMat<T>> Z(out.data(), static_cast<Eigen::Index>(n),
                          static_cast<Eigen::Index>(c_out));
  Z.noalias() = ConstMatMap<T>(y.data(), static_cast<Eigen::Index>(n),
                               static_cast<Eigen::Index>(c)) *
                ConstMatMap<T>(weight.value().data(), static_cast<Eigen::Index>(c),
                               static_cast<Eigen::Index>(c_out));
  for (auto& v : out.values()) v = v > T(0) ? v : T(0);

  Node<T>* nn = nodes.node();
  Node<T>* en = weights.node();
  Node<T>* wn = weight.node();
  Tensor<T> activated = out;
  return Tape<T>::record(
      tape, std::move(out), {nodes, weights, weight},
      [=, edges = graph.edges, y = std::move(y), act = std::move(activated)](
          const Tensor<T>& g) {
        RowMat<T> dz(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c_out));
        for (std::size_t i = 0; i < n * c_out; ++i) {
          dz.data()[i] = act[i] > T(0) ? g[i] : T(0);
        }
        ConstMatMap<T> Y(y.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
        ConstMatMap<T> W(wn->value.data(), static_cast<Eigen::Index>(c),
                         static_cast<Eigen::Index>(c_out));
        if (wn->requires_grad) {
          Eigen::Map<RowMat<T>>(wn->grad_ref().data(), static_cast<Eigen::Index>(c),
                                static_cast<Eigen::Index>(c_out))
              .noalias() += Y.transpose() * dz;
        }
        if (!nn->requires_grad && !en->requires_grad) return;
        const RowMat<T> dy = dz * W.transpose();
        const T* G = nn->value.data();
        auto dot = [&](std::size_t a, std::size_t b) {
          T s = 0;
          for (std::size_t k = 0; k < c; ++k) s += dy(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(k)) * G[b * c + k];
          return s;
        };
        if (nn->requires_grad) {
          auto& dg_nodes = nn->grad_ref();
          for (std::size_t u = 0; u < n; ++u) {
            const T s = static_cast<T>(1.0 / dg.deg[u]);
            for (std::size_t k = 0; k < c; ++k) dg_nodes[u * c + k] += s * dy(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(k));
          }
          for (std::size_t e = 0; e < edges.size(); ++e) {
            const T w = static_cast<T>(dg.coeff[e]);
            const std::size_t u = edges[e].src, v = edges[e].dst;
            for (std::size_t k = 0; k < c; ++k) {
              dg_nodes[v * c + k] += w * dy(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(k));
              dg_nodes[u * c + k] += w * dy(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(k));
            }
          }
        }
        if (en->requires_grad) {
          std::vector<double> ddeg(n, 0.0);
          for (std::size_t u = 0; u < n; ++u) {
            ddeg[u] = -static_cast<double>(dot(u, u)) / (dg.deg[u] * dg.deg[u]);
          }
          std::vector<double> pair(edges.size());
          for (std::size_t e = 0; e < edges.size(); ++e) {
            const std::size_t u = edges[e].src, v = edges[e].dst;
            pair[e] = static_cast<double>(dot(u, v) + dot(v, u));
            ddeg[u] -= dg.coeff[e] * pair[e] / (2 * dg.deg[u]);
            ddeg[v] -= dg.coeff[e] * pair[e] / (2 * dg.deg[v]);
          }
          auto& dw = en->grad_ref();
          for (std::size_t e = 0; e < edges.size(); ++e) {
            const std::size_t u = edges[e].src, v = edges[e].dst;
            dw[e] += static_cast<T>(pair[e] / std::sqrt(dg.deg[u] * dg.deg[v]) +
                                    ddeg[u] + ddeg[v]);
          }
        }
      });
}

template <typename T>
Var<T> enhance(Tape<T>* tape, const Var<T>& stage, const Params<T>& params,
               std::size_t k) {
  const auto& s = stage.shape();
  if (s.size() != 4) throw InvalidArgument("enhance: expected [C,T,H,W]");
  if (s[1] < 2) return stage;
  const Var<T> tokens = tokenize(tape, stage);
  const Var<T> queries = ops::matmul(tape, tokens, params.query);
  const Var<T> keys = ops::matmul(tape, tokens, params.key);
  const auto scores = correlate_projected(queries.value(), keys.value());
  const TemporalGraph graph = build_graph(scores, k);
  const Var<T> weights = edge_weights(tape, queries, keys, graph);
  const Var<T> enhanced = graph_convolve(tape, graph, tokens, weights, params.gcn);
  const Var<T> back = untokenize(tape, enhanced, s[2], s[3]);
  return ops::add(tape, stage, ops::scale_by(tape, back, params.alpha));
}

#define CANONSLR_INSTANTIATE_TME(T)                                              \
  template Tensor<T> tokenize(const Tensor<T>&);                                 \
  template Tensor<T> untokenize(const Tensor<T>&, std::size_t, std::size_t);     \
  template std::vector<Tensor<T>> correlate(const Tensor<T>&, const Tensor<T>&,  \
                                            const Tensor<T>&);                   \
  template std::vector<Tensor<T>> correlate_projected(const Tensor<T>&,          \
                                                      const Tensor<T>&);         \
  template TemporalGraph build_graph(const std::vector<Tensor<T>>&, std::size_t); \
  template Tensor<T> graph_convolve(const TemporalGraph&, const Tensor<T>&,      \
                                    const Tensor<T>&);                           \
  template Tensor<T> fuse(const Tensor<T>&, const Tensor<T>&, T);                \
  template Var<T> tokenize(Tape<T>*, const Var<T>&);                             \
  template Var<T> untokenize(Tape<T>*, const Var<T>&, std::size_t, std::size_t); \
  template Var<T> edge_weights(Tape<T>*, const Var<T>&, const Var<T>&,           \
                               const TemporalGraph&);                            \
  template Var<T> graph_convolve(Tape<T>*, const TemporalGraph&, const Var<T>&,  \
                                 const Var<T>&, const Var<T>&);                  \
  template Var<T> enhance(Tape<T>*, const Var<T>&, const Params<T>&, std::size_t);

CANONSLR_INSTANTIATE_TME(float)
CANONSLR_INSTANTIATE_TME(double)

#undef CANONSLR_INSTANTIATE_TME

}  // namespace canonslr::tme
