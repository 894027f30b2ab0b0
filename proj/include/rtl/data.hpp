#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "rtl/rng.hpp"
#include "rtl/tensor.hpp"

namespace rtl {

enum class Domain { source, target };

inline const char* domain_name(Domain d) { return d == Domain::source ? "source" : "target"; }

// One text pair, already tokenized to vocabulary ids (unpadded).
struct SentencePair {
  std::vector<int32_t> tokens1;
  std::vector<int32_t> tokens2;
  int label = 0;
};

// Token table with reserved PAD=0 and UNK=1. While unfrozen, lookups add new
// words; once frozen (e.g. after loading a checkpoint) unknown words map to
// UNK instead.
class Vocab {
 public:
  static constexpr int32_t kPad = 0;
  static constexpr int32_t kUnk = 1;

  Vocab();

  int32_t token_id(const std::string& word);        // adds when unfrozen
  int32_t lookup(const std::string& word) const;    // UNK when absent
  const std::string& word(int32_t id) const;
  size_t size() const { return words_.size(); }
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::unordered_map<std::string, int32_t> index_;
  std::vector<std::string> words_;
  bool frozen_ = false;
};

// Padded, masked minibatch of pairs from one domain.
struct PairBatch {
  Domain domain = Domain::source;
  size_t n = 0;      // rows
  size_t width = 0;  // padded length (max_len)
  std::vector<int32_t> ids1;  // n * width, PAD-filled
  std::vector<int32_t> ids2;
  Tensor mask1;  // [n, width], 1 = real token
  Tensor mask2;
  std::vector<int> labels;
  std::vector<size_t> origin;  // index of each row in the pair list it came from

  int32_t id1(size_t r, size_t c) const { return ids1[r * width + c]; }
  int32_t id2(size_t r, size_t c) const { return ids2[r * width + c]; }
};

struct Corpus {
  std::vector<SentencePair> source_train;
  std::vector<SentencePair> target_train;
  std::vector<SentencePair> target_val;
  std::vector<SentencePair> target_test;
  // Parallel to source_train for synthetic corpora: 1 marks a pair drawn
  // from the shifted population. Empty for loaded corpora.
  std::vector<uint8_t> source_tags;
};

// Reads a 3-column TSV (sentence1, sentence2, label), lowercases, splits on
// whitespace, truncates to max_len, and resolves tokens through the vocab.
// Malformed lines raise DataError naming the line number.
std::vector<SentencePair> load_corpus(const std::string& path, size_t max_len, Vocab& vocab);

// Writes pairs back to the same TSV format, one pair per line.
void save_corpus(const std::string& path, const std::vector<SentencePair>& pairs,
                 const Vocab& vocab);

// Builds the [vocab, dim] embedding table from a GloVe-style text file:
// in-vocab rows copy the file vector, everything else is uniform ±0.05,
// PAD row zero. `hits` (optional) receives the number of in-vocab rows
// found in the file.
Tensor load_embeddings(const std::string& path, const Vocab& vocab, size_t dim, Rng& rng,
                       size_t* hits = nullptr);

// Fallback when no embedding file is given: uniform ±0.05 everywhere except
// the PAD row.
Tensor random_embeddings(const Vocab& vocab, size_t dim, Rng& rng);
Tensor random_embeddings_shape(size_t vocab_size, size_t dim, Rng& rng);

// Shuffles the pairs with the seeded permutation and chunks them into
// batches of batch_size (final batch may be short). origin records each
// row's index into `pairs`.
std::vector<PairBatch> make_batches(const std::vector<SentencePair>& pairs, Domain domain,
                                    size_t batch_size, size_t max_len, uint64_t seed);

// Builds one batch from explicit pair indices, in the given order.
PairBatch make_batch(const std::vector<SentencePair>& pairs, Domain domain,
                     const std::vector<size_t>& indices, size_t max_len);

// Endless batch source that deals from a seeded shuffle without replacement
// and reshuffles when the deck runs out. Used for the source-domain stream,
// which must persist across episodes.
class BatchStream {
 public:
  BatchStream(const std::vector<SentencePair>* pairs, Domain domain, size_t batch_size,
              size_t max_len, uint64_t seed);
  PairBatch next();

 private:
  const std::vector<SentencePair>* pairs_;
  Domain domain_;
  size_t batch_size_;
  size_t max_len_;
  Rng rng_;
  std::vector<size_t> order_;
  size_t cursor_ = 0;
};

struct SynthConfig {
  size_t vocab_size = 120;     // content tokens (PAD/UNK are extra)
  size_t n_source = 2000;
  size_t n_target = 400;       // split 1/2 train, 1/4 validation, 1/4 test
  double shift_fraction = 0.5; // ρ: fraction of source pairs from the shifted population
  double band_fraction = 0.65; // share of the vocabulary each population draws from
  uint64_t seed = 7;
};

// Generates a two-domain corpus with a planted distribution shift. Target
// pairs and aligned source pairs draw their tokens from the low band of the
// vocabulary and carry structural labels (paraphrase = permuted copy,
// non-paraphrase = disjoint tokens). Shifted source pairs draw from the high
// band and get a fair-coin label, so they carry no signal and transfer from
// them is harmful. Tokens are registered in the vocab as "t0", "t1", ...
Corpus synth_generate(const SynthConfig& cfg, Vocab& vocab);

}  // namespace rtl
