#pragma once

#include <string>
#include <vector>

#include "rtl/dam.hpp"
#include "rtl/data.hpp"
#include "rtl/nn.hpp"

namespace rtl {

struct EvalResult {
  double accuracy = 0.0;
  double auc = 0.0;
  bool auc_defined = false;  // false when the pairs contain only one class
  size_t n = 0;
};

// AUC with ties counted half, computed by tie-group rank counting in exact
// integer arithmetic. Returns false (and leaves auc untouched) when either
// class is absent.
bool auc_score(const std::vector<double>& scores, const std::vector<int>& labels, double* auc);

// Shared encoder plus one 2-way softmax head per domain. All parameters,
// including the embedding table, live in a single ParamStore so optimizer
// state and checkpointing see one flat namespace:
//   embeddings, encoder.F.*, encoder.G.*, head.source.*, head.target.*
class TransferModel {
 public:
  TransferModel(DamConfig dam, size_t vocab_size);

  // Fresh glorot/zero parameters. Each group draws from its own labeled
  // stream of `seed`. Pass a table to start from pretrained embeddings.
  void init_params(uint64_t seed, const Tensor* embeddings = nullptr);

  // Class probabilities [n, 2] under the given domain's head. Pass `enc` to
  // keep the encoder cache for a following backward pass.
  Tensor classify(const PairBatch& batch, Domain d, PairEncoding* enc = nullptr,
                  FeedForwardCache* head_cache = nullptr) const;

  // Mean cross-entropy of the batch under its domain head.
  double domain_loss(const PairBatch& batch, Domain d) const;

  // One training step: backward through head, encoder, and embeddings, then
  // Adam over exactly those groups (the other domain's head is untouched).
  // Returns the loss before the update.
  double update_domain(const PairBatch& batch, Domain d, double lr);

  // Accuracy at the 0.5 threshold and tie-aware AUC of p(y=1).
  EvalResult evaluate(const std::vector<SentencePair>& pairs, Domain d, size_t max_len,
                      size_t eval_batch = 64) const;

  // Replaces all parameters, e.g. with a loaded checkpoint. Validates that
  // the store carries the tensors this model's shape requires.
  void set_params(ParamStore&& store);

  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const DamConfig& dam() const { return dam_; }
  AdamConfig& adam() { return adam_; }

  FeedForwardSpec head_spec(Domain d) const;

 private:
  DamConfig dam_;
  size_t vocab_size_;
  ParamStore store_;
  AdamConfig adam_;
};

// Single-file model snapshot: magic, version, config echo, vocabulary, and
// every named tensor with its Adam state. Round-trips bitwise.
void save_checkpoint(const std::string& path, const ParamStore& store, const Vocab& vocab,
                     const std::string& config_echo);

struct Checkpoint {
  ParamStore store;
  std::vector<std::string> vocab_words;
  std::string config_echo;
};

Checkpoint load_checkpoint(const std::string& path);

// Rebuilds a Vocab from checkpoint words, frozen so eval-time lookups of
// unseen words fall back to UNK.
Vocab vocab_from_words(const std::vector<std::string>& words);

}  // namespace rtl
