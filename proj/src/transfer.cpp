#include "rtl/transfer.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "rtl/errors.hpp"
#include "rtl/rng.hpp"

namespace rtl {

bool auc_score(const std::vector<double>& scores, const std::vector<int>& labels, double* auc) {
  size_t pos = 0, neg = 0;
  for (int y : labels) (y == 1 ? pos : neg)++;
  if (pos == 0 || neg == 0) return false;
  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  // Sweep ascending score groups; each positive beats every negative in a
  // strictly lower group and half-ties with negatives in its own group.
  unsigned long long greater = 0, equal = 0, neg_below = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    unsigned long long gpos = 0, gneg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? gpos : gneg)++;
      ++j;
    }
    greater += gpos * neg_below;
    equal += gpos * gneg;
    neg_below += gneg;
    i = j;
  }
  *auc = (static_cast<double>(greater) + 0.5 * static_cast<double>(equal)) /
         (static_cast<double>(pos) * static_cast<double>(neg));
  return true;
}

TransferModel::TransferModel(DamConfig dam, size_t vocab_size)
    : dam_(dam), vocab_size_(vocab_size) {
  if (dam_.hidden < 1) throw ConfigError("encoder hidden size must be >= 1");
}

FeedForwardSpec TransferModel::head_spec(Domain d) const {
  return {std::string("head.") + domain_name(d),
          {4 * dam_.hidden, 2},
          Activation::relu,  // unused: single affine layer + softmax
          OutputTransform::softmax};
}

void TransferModel::init_params(uint64_t seed, const Tensor* embeddings) {
  Param& emb = store_.add("embeddings", {vocab_size_, dam_.embed_dim});
  if (embeddings) {
    if (!embeddings->same_shape(emb.value))
      throw ConfigError("embedding table is " + shape_str(*embeddings) + ", model expects " +
                        shape_str(emb.value));
    emb.value = *embeddings;
  } else {
    Rng rng(sub_seed(seed, "init.embeddings"));
    emb.value = random_embeddings_shape(vocab_size_, dam_.embed_dim, rng);
  }
  {
    Rng rng(sub_seed(seed, "init.encoder"));
    init_dam(store_, dam_, rng);
  }
  {
    Rng rng(sub_seed(seed, "init.heads"));
    init_feed_forward(store_, head_spec(Domain::source), rng);
    init_feed_forward(store_, head_spec(Domain::target), rng);
  }
}

void TransferModel::set_params(ParamStore&& store) {
  const char* required[] = {"embeddings",    "encoder.F.W0",  "encoder.G.W0",
                            "head.source.W0", "head.target.W0"};
  for (const char* name : required)
    if (!store.has(name)) throw DataError(std::string("checkpoint lacks parameter: ") + name);
  const Tensor& emb = store.at("embeddings").value;
  if (emb.rank() != 2 || emb.dim(0) != vocab_size_ || emb.dim(1) != dam_.embed_dim)
    throw DataError("checkpoint embeddings are " + shape_str(emb) + ", model expects [" +
                    std::to_string(vocab_size_) + "," + std::to_string(dam_.embed_dim) + "]");
  const Tensor& f0 = store.at("encoder.F.W0").value;
  if (f0.dim(0) != dam_.embed_dim || f0.dim(1) != dam_.hidden)
    throw DataError("checkpoint encoder width disagrees with configured sizes");
  store_ = std::move(store);
}

Tensor TransferModel::classify(const PairBatch& batch, Domain d, PairEncoding* enc,
                               FeedForwardCache* head_cache) const {
  PairEncoding local = encode(store_, dam_, batch, enc != nullptr);
  Tensor probs = feed_forward(store_, head_spec(d), local.z, head_cache);
  if (enc) *enc = std::move(local);
  return probs;
}

double TransferModel::domain_loss(const PairBatch& batch, Domain d) const {
  return cross_entropy(classify(batch, d), batch.labels);
}

double TransferModel::update_domain(const PairBatch& batch, Domain d, double lr) {
  if (batch.n == 0) throw NumericError("update_domain: empty batch");
  PairEncoding enc;
  FeedForwardCache head_cache;
  Tensor probs = classify(batch, d, &enc, &head_cache);
  double loss = cross_entropy(probs, batch.labels);

  Tensor dprobs = cross_entropy_backward(probs, batch.labels);
  FeedForwardSpec hs = head_spec(d);
  Tensor dz = feed_forward_backward(store_, hs, head_cache, dprobs);
  encode_backward(store_, dam_, batch, enc, dz);

  // PAD embeddings stay fixed at zero.
  Param& emb = store_.at("embeddings");
  for (size_t c = 0; c < dam_.embed_dim; ++c) emb.grad.at(Vocab::kPad, c) = 0.0;

  std::vector<std::string> names = store_.names("encoder.");
  names.push_back("embeddings");
  for (const auto& n : store_.names(hs.prefix + ".")) names.push_back(n);
  AdamConfig cfg = adam_;
  cfg.lr = lr;
  adam_step(store_, names, cfg);
  return loss;
}

EvalResult TransferModel::evaluate(const std::vector<SentencePair>& pairs, Domain d,
                                   size_t max_len, size_t eval_batch) const {
  if (pairs.empty()) throw DataError("evaluate: no pairs");
  EvalResult res;
  res.n = pairs.size();
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(pairs.size());
  labels.reserve(pairs.size());
  size_t correct = 0;
  for (size_t start = 0; start < pairs.size(); start += eval_batch) {
    size_t end = std::min(pairs.size(), start + eval_batch);
    std::vector<size_t> idx(end - start);
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
    PairBatch b = make_batch(pairs, d, idx, max_len);
    Tensor probs = classify(b, d);
    for (size_t r = 0; r < b.n; ++r) {
      double p1 = probs.at(r, 1);
      int pred = p1 > 0.5 ? 1 : 0;
      if (pred == b.labels[r]) ++correct;
      scores.push_back(p1);
      labels.push_back(b.labels[r]);
    }
  }
  res.accuracy = static_cast<double>(correct) / static_cast<double>(pairs.size());
  res.auc_defined = auc_score(scores, labels, &res.auc);
  return res;
}

// --- checkpoint format ---

namespace {

constexpr char kMagic[8] = {'R', 'T', 'L', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) { out.append(reinterpret_cast<char*>(&v), 4); }
void put_u64(std::string& out, uint64_t v) { out.append(reinterpret_cast<char*>(&v), 8); }
void put_str(std::string& out, const std::string& s) {
  put_u64(out, s.size());
  out.append(s);
}
void put_doubles(std::string& out, const std::vector<double>& v) {
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;
  explicit Reader(const std::string& b) : buf(b) {}
  void need(size_t n) const {
    if (pos + n > buf.size()) throw DataError("checkpoint: truncated payload");
  }
  uint32_t u32() {
    need(4);
    uint32_t v;
    std::memcpy(&v, buf.data() + pos, 4);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v;
    std::memcpy(&v, buf.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::string str() {
    uint64_t n = u64();
    need(n);
    std::string s(buf.data() + pos, n);
    pos += n;
    return s;
  }
  void doubles(std::vector<double>& out, size_t n) {
    need(n * sizeof(double));
    out.resize(n);
    std::memcpy(out.data(), buf.data() + pos, n * sizeof(double));
    pos += n * sizeof(double);
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store, const Vocab& vocab,
                     const std::string& config_echo) {
  std::string payload;
  put_str(payload, config_echo);
  put_u64(payload, vocab.size());
  for (const auto& w : vocab.words()) put_str(payload, w);
  put_u64(payload, store.entries().size());
  for (const auto& [name, p] : store.entries()) {
    put_str(payload, name);
    put_u32(payload, static_cast<uint32_t>(p.value.shape.size()));
    for (size_t dim : p.value.shape) put_u64(payload, dim);
    put_u64(payload, p.step);
    put_doubles(payload, p.value.data);
    put_doubles(payload, p.m.data);
    put_doubles(payload, p.v.data);
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  uint32_t ver = kVersion;
  out.write(reinterpret_cast<char*>(&ver), 4);
  uint64_t n = payload.size();
  out.write(reinterpret_cast<char*>(&n), 8);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  uint64_t sum = fnv1a64_bytes(payload.data(), payload.size());
  out.write(reinterpret_cast<char*>(&sum), 8);
  if (!out) throw DataError("failed while writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError("not a checkpoint file: " + path);
  uint32_t ver = 0;
  in.read(reinterpret_cast<char*>(&ver), 4);
  if (!in || ver != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(ver) + ": " + path);
  uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 8);
  if (!in) throw DataError("checkpoint: truncated header: " + path);
  std::string payload(n, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(n));
  uint64_t sum = 0;
  in.read(reinterpret_cast<char*>(&sum), 8);
  if (!in) throw DataError("checkpoint: truncated file: " + path);
  if (fnv1a64_bytes(payload.data(), payload.size()) != sum)
    throw DataError("checkpoint: checksum mismatch (corrupt file): " + path);

  Reader r(payload);
  Checkpoint ck;
  ck.config_echo = r.str();
  uint64_t n_words = r.u64();
  ck.vocab_words.reserve(n_words);
  for (uint64_t i = 0; i < n_words; ++i) ck.vocab_words.push_back(r.str());
  uint64_t n_tensors = r.u64();
  for (uint64_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    uint32_t rank = r.u32();
    std::vector<size_t> shape(rank);
    for (uint32_t k = 0; k < rank; ++k) shape[k] = r.u64();
    uint64_t step = r.u64();
    Param& p = ck.store.add(name, shape);
    p.step = step;
    size_t count = p.value.size();
    r.doubles(p.value.data, count);
    r.doubles(p.m.data, count);
    r.doubles(p.v.data, count);
  }
  if (ck.store.has("embeddings") &&
      ck.store.at("embeddings").value.dim(0) != ck.vocab_words.size())
    throw DataError("checkpoint: embedding rows disagree with vocabulary size");
  return ck;
}

Vocab vocab_from_words(const std::vector<std::string>& words) {
  Vocab v;
  for (size_t i = 2; i < words.size(); ++i) v.token_id(words[i]);
  if (words.size() >= 2 && (v.size() != words.size()))
    throw DataError("checkpoint vocabulary has duplicate words");
  v.freeze();
  return v;
}

}  // namespace rtl
