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

#ifndef CANONSLR_TME_H_
#define CANONSLR_TME_H_

#include <cstddef>
#include <vector>

#include "canonslr/autograd.h"

// Temporal motion relational enhancement.
//
// A stage feature map F [C,T,H,W] is read as T frames of B = H*W spatial
// tokens. Tokens of adjacent frames are compared in a shared query/key
// space, each token keeps its top-K matches in the next frame, and one
// graph-convolution layer over the resulting sparse temporal graph produces
// an enhancement that is added back onto F through a learnable gate.
namespace canonslr::tme {

// [C,T,H,W] -> [T,B,C]; lossless.
template <typename T>
Tensor<T> tokenize(const Tensor<T>& stage);

// [T,B,C] -> [C,T,H,W] with B = height * width.
template <typename T>
Tensor<T> untokenize(const Tensor<T>& tokens, std::size_t height,
                     std::size_t width);

// S_t(i,j) = <q_{t,i}, k_{t+1,j}> / sqrt(d) for t = 0..T-2, where
// q = U W_q and k = U W_k. tokens [T,B,C], projections [C,d].
// Returns T-1 matrices of shape [B,B]; empty when T < 2.
template <typename T>
std::vector<Tensor<T>> correlate(const Tensor<T>& tokens, const Tensor<T>& wq,
                                 const Tensor<T>& wk);

// Same scores from already projected queries/keys [T,B,d].
template <typename T>
std::vector<Tensor<T>> correlate_projected(const Tensor<T>& queries,
                                           const Tensor<T>& keys);

// Directed edge from node (t,i) to node (t+1,j); node id = t*B + i.
struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  double weight = 1.0;
};

struct TemporalGraph {
  std::size_t frames = 0;
  std::size_t tokens_per_frame = 0;
  // Row-major over (t, i); each row holds its min(K,B) selected edges in
  // descending score order.
  std::vector<Edge> edges;
  std::size_t row_degree = 0;

  std::size_t num_nodes() const { return frames * tokens_per_frame; }
};

// Keeps, for every token of frame t, the K highest-scoring tokens of frame
// t+1 (ties to the lower column). K is clamped to B. Edge weights are the
// softmax of the kept scores within each row. scores holds the T-1
// matrices of a T-frame clip.
template <typename T>
TemporalGraph build_graph(const std::vector<Tensor<T>>& scores, std::size_t k);

// One GCN layer: ReLU(D^-1/2 (A + I) D^-1/2 G W) where A is the
// symmetrized weighted adjacency. nodes [N,C], weight [C,C'].
template <typename T>
Tensor<T> graph_convolve(const TemporalGraph& graph, const Tensor<T>& nodes,
                         const Tensor<T>& weight);

// stage + alpha * enhanced (same shape).
template <typename T>
Tensor<T> fuse(const Tensor<T>& stage, const Tensor<T>& enhanced, T alpha);

// Differentiable counterparts.

template <typename T>
Var<T> tokenize(Tape<T>* tape, const Var<T>& stage);

template <typename T>
Var<T> untokenize(Tape<T>* tape, const Var<T>& tokens, std::size_t height,
                  std::size_t width);

// Softmax-normalized scores of the graph's edges, shape [E]. The edge set
// itself is a constant of the forward pass; gradients reach the queries and
// keys only through the selected entries.
template <typename T>
Var<T> edge_weights(Tape<T>* tape, const Var<T>& queries, const Var<T>& keys,
                    const TemporalGraph& graph);

// nodes [N,C] (or [T,B,C]), weights [E] in graph edge order, weight [C,C'].
template <typename T>
Var<T> graph_convolve(Tape<T>* tape, const TemporalGraph& graph,
                      const Var<T>& nodes, const Var<T>& weights,
                      const Var<T>& weight);

template <typename T>
struct Params {
  Var<T> query;  // [C,d]
  Var<T> key;    // [C,d]
  Var<T> gcn;    // [C,C]
  Var<T> alpha;  // [1]
};

// Full enhancement F + alpha * Reshape(GCN(G, E)). Identity when T < 2.
template <typename T>
Var<T> enhance(Tape<T>* tape, const Var<T>& stage, const Params<T>& params,
               std::size_t k);

}  // namespace canonslr::tme

#endif  // CANONSLR_TME_H_
