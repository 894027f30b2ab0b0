#include "rtl/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "rtl/errors.hpp"

namespace rtl {

Vocab::Vocab() {
  words_ = {"<pad>", "<unk>"};
  index_ = {{"<pad>", kPad}, {"<unk>", kUnk}};
}

int32_t Vocab::token_id(const std::string& word) {
  auto it = index_.find(word);
  if (it != index_.end()) return it->second;
  if (frozen_) return kUnk;
  int32_t id = static_cast<int32_t>(words_.size());
  words_.push_back(word);
  index_.emplace(word, id);
  return id;
}

int32_t Vocab::lookup(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::word(int32_t id) const {
  if (id < 0 || static_cast<size_t>(id) >= words_.size())
    throw DataError("token id out of range: " + std::to_string(id));
  return words_[static_cast<size_t>(id)];
}

static std::vector<std::string> tokenize_lower(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

static std::vector<int32_t> encode_sentence(const std::string& text, size_t max_len, Vocab& vocab,
                                            const std::string& path, size_t line_no) {
  std::vector<std::string> toks = tokenize_lower(text);
  if (toks.empty())
    throw DataError(path + ":" + std::to_string(line_no) + ": empty sentence after tokenization");
  if (toks.size() > max_len) toks.resize(max_len);
  std::vector<int32_t> ids;
  ids.reserve(toks.size());
  for (const auto& t : toks) ids.push_back(vocab.token_id(t));
  return ids;
}

std::vector<SentencePair> load_corpus(const std::string& path, size_t max_len, Vocab& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  std::vector<SentencePair> pairs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;  // blank line
    size_t t1 = line.find('\t');
    size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 3 tab-separated columns");
    std::string s1 = line.substr(0, t1);
    std::string s2 = line.substr(t1 + 1, t2 - t1 - 1);
    std::string lab = line.substr(t2 + 1);
    while (!lab.empty() && std::isspace(static_cast<unsigned char>(lab.back()))) lab.pop_back();
    SentencePair p;
    if (lab == "0")
      p.label = 0;
    else if (lab == "1")
      p.label = 1;
    else
      throw DataError(path + ":" + std::to_string(line_no) + ": label must be 0 or 1, got \"" +
                      lab + "\"");
    p.tokens1 = encode_sentence(s1, max_len, vocab, path, line_no);
    p.tokens2 = encode_sentence(s2, max_len, vocab, path, line_no);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void save_corpus(const std::string& path, const std::vector<SentencePair>& pairs,
                 const Vocab& vocab) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path);
  for (const auto& p : pairs) {
    for (size_t i = 0; i < p.tokens1.size(); ++i) {
      if (i) out << ' ';
      out << vocab.word(p.tokens1[i]);
    }
    out << '\t';
    for (size_t i = 0; i < p.tokens2.size(); ++i) {
      if (i) out << ' ';
      out << vocab.word(p.tokens2[i]);
    }
    out << '\t' << p.label << '\n';
  }
  if (!out) throw DataError("failed while writing corpus file: " + path);
}

Tensor random_embeddings_shape(size_t vocab_size, size_t dim, Rng& rng) {
  Tensor table({vocab_size, dim});
  for (size_t r = 1; r < vocab_size; ++r)  // PAD row stays zero
    for (size_t c = 0; c < dim; ++c) table.at(r, c) = rng.uniform(-0.05, 0.05);
  return table;
}

Tensor random_embeddings(const Vocab& vocab, size_t dim, Rng& rng) {
  return random_embeddings_shape(vocab.size(), dim, rng);
}

Tensor load_embeddings(const std::string& path, const Vocab& vocab, size_t dim, Rng& rng,
                       size_t* hits) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path);
  Tensor table({vocab.size(), dim});
  std::vector<uint8_t> found(vocab.size(), 0);
  found[Vocab::kPad] = 1;  // PAD row is pinned to zero
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    int32_t id = vocab.lookup(word);
    if (id == Vocab::kUnk && word != vocab.word(Vocab::kUnk)) continue;
    std::vector<double> vec;
    vec.reserve(dim);
    double v;
    while (ss >> v) vec.push_back(v);
    if (vec.size() != dim)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                      " values, got " + std::to_string(vec.size()));
    for (size_t c = 0; c < dim; ++c) table.at(static_cast<size_t>(id), c) = vec[c];
    found[static_cast<size_t>(id)] = 1;
  }
  size_t n_hits = 0;
  for (size_t r = 1; r < vocab.size(); ++r) n_hits += found[r];
  // Fill the misses in id order so the draw sequence is reproducible.
  for (size_t r = 1; r < vocab.size(); ++r) {
    if (found[r]) continue;
    for (size_t c = 0; c < dim; ++c) table.at(r, c) = rng.uniform(-0.05, 0.05);
  }
  if (hits) *hits = n_hits;
  return table;
}

PairBatch make_batch(const std::vector<SentencePair>& pairs, Domain domain,
                     const std::vector<size_t>& indices, size_t max_len) {
  PairBatch b;
  b.domain = domain;
  b.n = indices.size();
  b.width = max_len;
  b.ids1.assign(b.n * b.width, Vocab::kPad);
  b.ids2.assign(b.n * b.width, Vocab::kPad);
  b.mask1 = Tensor({b.n, b.width});
  b.mask2 = Tensor({b.n, b.width});
  b.labels.resize(b.n);
  b.origin = indices;
  for (size_t r = 0; r < b.n; ++r) {
    const SentencePair& p = pairs.at(indices[r]);
    for (size_t c = 0; c < p.tokens1.size() && c < b.width; ++c) {
      b.ids1[r * b.width + c] = p.tokens1[c];
      b.mask1.at(r, c) = 1.0;
    }
    for (size_t c = 0; c < p.tokens2.size() && c < b.width; ++c) {
      b.ids2[r * b.width + c] = p.tokens2[c];
      b.mask2.at(r, c) = 1.0;
    }
    b.labels[r] = p.label;
  }
  return b;
}

std::vector<PairBatch> make_batches(const std::vector<SentencePair>& pairs, Domain domain,
                                    size_t batch_size, size_t max_len, uint64_t seed) {
  if (pairs.empty()) throw DataError("make_batches: empty pair list");
  if (batch_size == 0) throw DataError("make_batches: batch_size must be >= 1");
  Rng rng(seed);
  std::vector<size_t> order = rng.permutation(pairs.size());
  std::vector<PairBatch> out;
  for (size_t start = 0; start < order.size(); start += batch_size) {
    size_t end = std::min(order.size(), start + batch_size);
    out.push_back(make_batch(
        pairs, domain, std::vector<size_t>(order.begin() + start, order.begin() + end), max_len));
  }
  return out;
}

BatchStream::BatchStream(const std::vector<SentencePair>* pairs, Domain domain, size_t batch_size,
                         size_t max_len, uint64_t seed)
    : pairs_(pairs), domain_(domain), batch_size_(batch_size), max_len_(max_len), rng_(seed) {
  if (pairs_->empty()) throw DataError("batch stream: empty pair list");
  order_ = rng_.permutation(pairs_->size());
}

PairBatch BatchStream::next() {
  std::vector<size_t> idx;
  idx.reserve(batch_size_);
  while (idx.size() < batch_size_) {
    if (cursor_ == order_.size()) {
      rng_.shuffle(order_);
      cursor_ = 0;
    }
    idx.push_back(order_[cursor_++]);
  }
  return make_batch(*pairs_, domain_, idx, max_len_);
}

// --- synthetic corpus ---

namespace {

// k distinct token indices from [band_lo, band_lo + band_n).
std::vector<int32_t> draw_distinct(Rng& rng, int32_t band_lo, size_t band_n, size_t k) {
  std::vector<int32_t> out;
  while (out.size() < k) {
    int32_t cand = band_lo + static_cast<int32_t>(rng.next_index(band_n));
    if (std::find(out.begin(), out.end(), cand) == out.end()) out.push_back(cand);
  }
  return out;
}

bool intersects(const std::vector<int32_t>& a, const std::vector<int32_t>& b) {
  for (int32_t x : a)
    if (std::find(b.begin(), b.end(), x) != b.end()) return true;
  return false;
}

// A structured pair: paraphrases are a permuted copy of the first sentence
// (sometimes with one token swapped out), non-paraphrases share no tokens.
SentencePair structured_pair(Rng& rng, int32_t band_lo, size_t band_n) {
  SentencePair p;
  size_t k = 3 + rng.next_index(4);
  p.tokens1 = draw_distinct(rng, band_lo, band_n, k);
  p.label = rng.bernoulli(0.5) ? 1 : 0;
  if (p.label == 1) {
    p.tokens2 = p.tokens1;
    rng.shuffle(p.tokens2);
    if (rng.bernoulli(0.3)) {
      size_t pos = rng.next_index(k);
      int32_t repl;
      do {
        repl = band_lo + static_cast<int32_t>(rng.next_index(band_n));
      } while (std::find(p.tokens1.begin(), p.tokens1.end(), repl) != p.tokens1.end());
      p.tokens2[pos] = repl;
    }
  } else {
    do {
      size_t k2 = 3 + rng.next_index(4);
      p.tokens2 = draw_distinct(rng, band_lo, band_n, k2);
    } while (intersects(p.tokens1, p.tokens2));
  }
  return p;
}

}  // namespace

Corpus synth_generate(const SynthConfig& cfg, Vocab& vocab) {
  if (cfg.shift_fraction < 0.0 || cfg.shift_fraction > 1.0)
    throw ConfigError("synth.shift_fraction must be in [0, 1]");
  if (cfg.band_fraction <= 0.0 || cfg.band_fraction > 1.0)
    throw ConfigError("synth.band_fraction must be in (0, 1]");
  size_t band_n = static_cast<size_t>(static_cast<double>(cfg.vocab_size) * cfg.band_fraction);
  // Non-paraphrases need two token-disjoint sentences of up to 6 tokens each,
  // plus one spare for the swap move.
  if (band_n < 13)
    throw ConfigError("synth.vocab_size too small: each population needs at least 13 tokens, got " +
                      std::to_string(band_n));

  // Register the full token inventory up front so ids are contiguous and
  // independent of which tokens the pairs happen to use.
  std::vector<int32_t> ids(cfg.vocab_size);
  for (size_t i = 0; i < cfg.vocab_size; ++i)
    ids[i] = vocab.token_id("t" + std::to_string(i));

  int32_t low_lo = ids.empty() ? 0 : ids[0];
  int32_t high_lo = ids[cfg.vocab_size - band_n];

  Rng rng(cfg.seed);
  Corpus corpus;

  std::vector<SentencePair> target;
  target.reserve(cfg.n_target);
  for (size_t i = 0; i < cfg.n_target; ++i) target.push_back(structured_pair(rng, low_lo, band_n));
  size_t n_train = cfg.n_target / 2;
  size_t n_val = cfg.n_target / 4;
  corpus.target_train.assign(target.begin(), target.begin() + n_train);
  corpus.target_val.assign(target.begin() + n_train, target.begin() + n_train + n_val);
  corpus.target_test.assign(target.begin() + n_train + n_val, target.end());

  corpus.source_train.reserve(cfg.n_source);
  corpus.source_tags.reserve(cfg.n_source);
  for (size_t i = 0; i < cfg.n_source; ++i) {
    bool shifted = rng.bernoulli(cfg.shift_fraction);
    SentencePair p = structured_pair(rng, shifted ? high_lo : low_lo, band_n);
    if (shifted) p.label = rng.bernoulli(0.5) ? 1 : 0;  // fair coin: no usable signal
    corpus.source_train.push_back(std::move(p));
    corpus.source_tags.push_back(shifted ? 1 : 0);
  }
  return corpus;
}

}  // namespace rtl
