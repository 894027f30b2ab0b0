#pragma once

#include <utility>
#include <vector>

#include "rtl/data.hpp"
#include "rtl/nn.hpp"
#include "rtl/tensor.hpp"

namespace rtl {

// Decomposable-attention encoder configuration. F (attention features) and
// G (comparison) are two-layer relu stacks of width `hidden`.
struct DamConfig {
  size_t hidden = 200;
  size_t embed_dim = 300;
};

FeedForwardSpec dam_f_spec(const DamConfig& cfg);  // embeddings -> attention space
FeedForwardSpec dam_g_spec(const DamConfig& cfg);  // token + its alignment -> match vector

// Adds encoder.F.* and encoder.G.* parameters to the store.
void init_dam(ParamStore& store, const DamConfig& cfg, Rng& rng);

struct AttendCache {
  Tensor f1, f2;            // F outputs [m,h], [n,h]
  FeedForwardCache f1c, f2c;
  Tensor wr, wc;            // row-normalized and column-normalized attention [m,n]
};

struct CompareCache {
  FeedForwardCache g1c, g2c;
};

struct AggregateCache {
  std::vector<size_t> argmax1, argmax2;  // winning row per column of the max pool
};

// Soft alignment between the two sentences. Pad positions get -1e9 added to
// their logits, so after the softmax they carry exactly zero weight. Returns
// (eps2 [m,d], eps1 [n,d]): for each token, the attention-weighted blend of
// the other sentence's embeddings.
std::pair<Tensor, Tensor> attend(const ParamStore& store, const DamConfig& cfg, const Tensor& emb1,
                                 const Tensor& emb2, const Tensor& mask1, const Tensor& mask2,
                                 AttendCache* cache = nullptr);

// Compares each token with its aligned blend: rows of V are G(x ⊕ eps).
std::pair<Tensor, Tensor> compare(const ParamStore& store, const DamConfig& cfg, const Tensor& emb1,
                                  const Tensor& eps2, const Tensor& emb2, const Tensor& eps1,
                                  CompareCache* cache = nullptr);

// Pools the match vectors over real tokens (sum and elementwise max) and
// concatenates both sentences' pools into z [4h].
Tensor aggregate(const Tensor& v1, const Tensor& v2, const Tensor& mask1, const Tensor& mask2,
                 AggregateCache* cache = nullptr);

// Everything the backward pass needs for one pair.
struct PairCache {
  Tensor x1, x2;        // gathered embeddings [width, d]
  Tensor mask1, mask2;  // [width]
  AttendCache att;
  CompareCache cmp;
  AggregateCache agg;
  Tensor eps2, eps1;
  Tensor v1m, v2m;  // match matrices [width, h]
};

struct PairEncoding {
  Tensor z;  // [batch, 4*hidden]
  std::vector<PairCache> caches;
};

// Runs attend -> compare -> aggregate per pair over the batch, reading token
// vectors from the store's "embeddings" parameter.
PairEncoding encode(const ParamStore& store, const DamConfig& cfg, const PairBatch& batch,
                    bool keep_cache = true);

// Backpropagates dL/dz through the encoder, accumulating gradients for
// encoder.F.*, encoder.G.*, and the embedding rows the batch touched.
void encode_backward(ParamStore& store, const DamConfig& cfg, const PairBatch& batch,
                     const PairEncoding& enc, const Tensor& dz);

}  // namespace rtl
