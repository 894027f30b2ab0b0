#include "rtl/dam.hpp"

#include <algorithm>
#include <cmath>

#include "rtl/errors.hpp"

namespace rtl {

FeedForwardSpec dam_f_spec(const DamConfig& cfg) {
  return {"encoder.F", {cfg.embed_dim, cfg.hidden, cfg.hidden}, Activation::relu,
          OutputTransform::none};
}

FeedForwardSpec dam_g_spec(const DamConfig& cfg) {
  return {"encoder.G", {2 * cfg.embed_dim, cfg.hidden, cfg.hidden}, Activation::relu,
          OutputTransform::none};
}

void init_dam(ParamStore& store, const DamConfig& cfg, Rng& rng) {
  init_feed_forward(store, dam_f_spec(cfg), rng);
  init_feed_forward(store, dam_g_spec(cfg), rng);
}

static void check_has_real_token(const Tensor& mask, const char* which) {
  for (double m : mask.data)
    if (m != 0.0) return;
  throw NumericError(std::string("encoder: ") + which + " sentence has no real tokens");
}

std::pair<Tensor, Tensor> attend(const ParamStore& store, const DamConfig& cfg, const Tensor& emb1,
                                 const Tensor& emb2, const Tensor& mask1, const Tensor& mask2,
                                 AttendCache* cache) {
  check_has_real_token(mask1, "first");
  check_has_real_token(mask2, "second");
  FeedForwardSpec fs = dam_f_spec(cfg);
  AttendCache local;
  AttendCache& c = cache ? *cache : local;
  c.f1 = feed_forward(store, fs, emb1, cache ? &c.f1c : nullptr);
  c.f2 = feed_forward(store, fs, emb2, cache ? &c.f2c : nullptr);
  size_t m = emb1.dim(0), n = emb2.dim(0);

  Tensor e = matmul_nt(c.f1, c.f2);  // [m,n] raw logits
  Tensor row_logits = e;             // pads in sentence 2 pushed out of row softmax
  Tensor col_logits = e;             // pads in sentence 1 pushed out of column softmax
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) {
      if (mask2[j] == 0.0) row_logits.at(i, j) += -1e9;
      if (mask1[i] == 0.0) col_logits.at(i, j) += -1e9;
    }
  c.wr = softmax_dim(row_logits, 1);
  c.wc = softmax_dim(col_logits, 0);

  Tensor eps2 = matmul(c.wr, emb2);     // [m,d]
  Tensor eps1 = matmul_tn(c.wc, emb1);  // [n,d]
  return {std::move(eps2), std::move(eps1)};
}

std::pair<Tensor, Tensor> compare(const ParamStore& store, const DamConfig& cfg, const Tensor& emb1,
                                  const Tensor& eps2, const Tensor& emb2, const Tensor& eps1,
                                  CompareCache* cache) {
  FeedForwardSpec gs = dam_g_spec(cfg);
  Tensor in1 = concat_cols({&emb1, &eps2});
  Tensor in2 = concat_cols({&emb2, &eps1});
  Tensor v1 = feed_forward(store, gs, in1, cache ? &cache->g1c : nullptr);
  Tensor v2 = feed_forward(store, gs, in2, cache ? &cache->g2c : nullptr);
  return {std::move(v1), std::move(v2)};
}

static void pool(const Tensor& v, const Tensor& mask, double* sum_out, double* max_out,
                 std::vector<size_t>* argmax) {
  size_t rows = v.dim(0), h = v.dim(1);
  for (size_t c = 0; c < h; ++c) {
    double s = 0.0;
    double mx = 0.0;
    size_t arg = 0;
    bool first = true;
    for (size_t r = 0; r < rows; ++r) {
      if (mask[r] == 0.0) continue;
      s += v.at(r, c);
      if (first || v.at(r, c) > mx) {
        mx = v.at(r, c);
        arg = r;
        first = false;
      }
    }
    sum_out[c] = s;
    max_out[c] = mx;
    if (argmax) (*argmax)[c] = arg;
  }
}

Tensor aggregate(const Tensor& v1, const Tensor& v2, const Tensor& mask1, const Tensor& mask2,
                 AggregateCache* cache) {
  check_has_real_token(mask1, "first");
  check_has_real_token(mask2, "second");
  size_t h = v1.dim(1);
  Tensor z({4 * h});
  if (cache) {
    cache->argmax1.assign(h, 0);
    cache->argmax2.assign(h, 0);
  }
  pool(v1, mask1, &z.data[0], &z.data[2 * h], cache ? &cache->argmax1 : nullptr);
  pool(v2, mask2, &z.data[h], &z.data[3 * h], cache ? &cache->argmax2 : nullptr);
  return z;
}

static Tensor gather_rows(const Tensor& table, const std::vector<int32_t>& ids, size_t row_off,
                          size_t width) {
  size_t d = table.dim(1);
  Tensor out({width, d});
  for (size_t r = 0; r < width; ++r) {
    size_t id = static_cast<size_t>(ids[row_off + r]);
    for (size_t c = 0; c < d; ++c) out.at(r, c) = table.at(id, c);
  }
  return out;
}

static Tensor mask_row(const Tensor& mask, size_t r) {
  size_t w = mask.dim(1);
  Tensor out({w});
  for (size_t c = 0; c < w; ++c) out[c] = mask.at(r, c);
  return out;
}

PairEncoding encode(const ParamStore& store, const DamConfig& cfg, const PairBatch& batch,
                    bool keep_cache) {
  const Tensor& table = store.at("embeddings").value;
  PairEncoding enc;
  enc.z = Tensor({batch.n, 4 * cfg.hidden});
  if (keep_cache) enc.caches.resize(batch.n);
  for (size_t r = 0; r < batch.n; ++r) {
    PairCache scratch;
    PairCache& pc = keep_cache ? enc.caches[r] : scratch;
    pc.x1 = gather_rows(table, batch.ids1, r * batch.width, batch.width);
    pc.x2 = gather_rows(table, batch.ids2, r * batch.width, batch.width);
    pc.mask1 = mask_row(batch.mask1, r);
    pc.mask2 = mask_row(batch.mask2, r);
    auto [eps2, eps1] = attend(store, cfg, pc.x1, pc.x2, pc.mask1, pc.mask2,
                               keep_cache ? &pc.att : nullptr);
    auto [v1, v2] =
        compare(store, cfg, pc.x1, eps2, pc.x2, eps1, keep_cache ? &pc.cmp : nullptr);
    Tensor z = aggregate(v1, v2, pc.mask1, pc.mask2, keep_cache ? &pc.agg : nullptr);
    for (size_t c = 0; c < z.size(); ++c) enc.z.at(r, c) = z[c];
    if (keep_cache) {
      pc.eps2 = std::move(eps2);
      pc.eps1 = std::move(eps1);
      pc.v1m = std::move(v1);
      pc.v2m = std::move(v2);
    }
  }
  return enc;
}

// Jacobian of a row softmax applied to dL/d(weights), restricted to the rows
// actually produced by attend. Pad columns hold weight exactly 0, so their
// logits get zero gradient without special casing.
static Tensor softmax_rows_backward(const Tensor& w, const Tensor& dw) {
  size_t m = w.dim(0), n = w.dim(1);
  Tensor de({m, n});
  for (size_t i = 0; i < m; ++i) {
    double dot = 0.0;
    for (size_t j = 0; j < n; ++j) dot += dw.at(i, j) * w.at(i, j);
    for (size_t j = 0; j < n; ++j) de.at(i, j) = w.at(i, j) * (dw.at(i, j) - dot);
  }
  return de;
}

static Tensor softmax_cols_backward(const Tensor& w, const Tensor& dw) {
  size_t m = w.dim(0), n = w.dim(1);
  Tensor de({m, n});
  for (size_t j = 0; j < n; ++j) {
    double dot = 0.0;
    for (size_t i = 0; i < m; ++i) dot += dw.at(i, j) * w.at(i, j);
    for (size_t i = 0; i < m; ++i) de.at(i, j) = w.at(i, j) * (dw.at(i, j) - dot);
  }
  return de;
}

void encode_backward(ParamStore& store, const DamConfig& cfg, const PairBatch& batch,
                     const PairEncoding& enc, const Tensor& dz) {
  if (enc.caches.size() != batch.n)
    throw NumericError("encode_backward: encoding was built without caches");
  FeedForwardSpec fs = dam_f_spec(cfg);
  FeedForwardSpec gs = dam_g_spec(cfg);
  Param& emb = store.at("embeddings");
  size_t h = cfg.hidden;
  size_t d = cfg.embed_dim;
  for (size_t r = 0; r < batch.n; ++r) {
    const PairCache& pc = enc.caches[r];
    size_t w = batch.width;

    // Undo the pooling: sum pool spreads over real rows, max pool credits
    // the winning row per column.
    Tensor dv1({w, h}), dv2({w, h});
    for (size_t i = 0; i < w; ++i)
      for (size_t c = 0; c < h; ++c) {
        if (pc.mask1[i] != 0.0) dv1.at(i, c) = dz.at(r, c);
        if (pc.mask2[i] != 0.0) dv2.at(i, c) = dz.at(r, h + c);
      }
    for (size_t c = 0; c < h; ++c) {
      dv1.at(pc.agg.argmax1[c], c) += dz.at(r, 2 * h + c);
      dv2.at(pc.agg.argmax2[c], c) += dz.at(r, 3 * h + c);
    }

    Tensor din1 = feed_forward_backward(store, gs, pc.cmp.g1c, dv1);  // [w, 2d]
    Tensor din2 = feed_forward_backward(store, gs, pc.cmp.g2c, dv2);
    Tensor dx1({w, d}), dx2({w, d}), deps2({w, d}), deps1({w, d});
    for (size_t i = 0; i < w; ++i)
      for (size_t c = 0; c < d; ++c) {
        dx1.at(i, c) = din1.at(i, c);
        deps2.at(i, c) = din1.at(i, d + c);
        dx2.at(i, c) = din2.at(i, c);
        deps1.at(i, c) = din2.at(i, d + c);
      }

    // eps2 = wr x2, eps1 = wc^T x1.
    Tensor dwr = matmul_nt(deps2, pc.x2);
    Tensor dwc = matmul_nt(pc.x1, deps1);
    {
      Tensor dx2_att = matmul_tn(pc.att.wr, deps2);
      Tensor dx1_att = matmul(pc.att.wc, deps1);
      for (size_t k = 0; k < dx2.size(); ++k) dx2[k] += dx2_att[k];
      for (size_t k = 0; k < dx1.size(); ++k) dx1[k] += dx1_att[k];
    }

    Tensor de = softmax_rows_backward(pc.att.wr, dwr);
    Tensor dec = softmax_cols_backward(pc.att.wc, dwc);
    for (size_t k = 0; k < de.size(); ++k) de[k] += dec[k];

    // e = f1 f2^T.
    Tensor df1 = matmul(de, pc.att.f2);
    Tensor df2 = matmul_tn(de, pc.att.f1);
    {
      Tensor dx1_f = feed_forward_backward(store, fs, pc.att.f1c, df1);
      Tensor dx2_f = feed_forward_backward(store, fs, pc.att.f2c, df2);
      for (size_t k = 0; k < dx1.size(); ++k) dx1[k] += dx1_f[k];
      for (size_t k = 0; k < dx2.size(); ++k) dx2[k] += dx2_f[k];
    }

    for (size_t i = 0; i < w; ++i) {
      size_t id1 = static_cast<size_t>(batch.ids1[r * w + i]);
      size_t id2 = static_cast<size_t>(batch.ids2[r * w + i]);
      for (size_t c = 0; c < d; ++c) {
        emb.grad.at(id1, c) += dx1.at(i, c);
        emb.grad.at(id2, c) += dx2.at(i, c);
      }
    }
  }
}

}  // namespace rtl
