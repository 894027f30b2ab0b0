#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rtl/data.hpp"
#include "rtl/selector.hpp"
#include "rtl/transfer.hpp"

namespace rtl {

enum class TrainMode { base_only, transfer_only, rtl_reinforce, rtl_actor_critic };

TrainMode parse_mode(const std::string& name);  // ConfigError on unknown name
const char* mode_name(TrainMode mode);

struct TrainConfig {
  TrainMode mode = TrainMode::rtl_actor_critic;
  size_t episodes = 30;
  size_t batch_size = 32;
  size_t pretrain_iters = 50;  // alternating source/target update pairs
  double lr_transfer = 0.001;
  double lr_policy = 0.02;
  double lr_value = 0.02;  // config default follows lr_policy
  double gamma = 0.8;
  size_t dam_hidden = 200;
  size_t embed_dim = 300;
  size_t policy_hidden = 128;
  size_t max_len = 40;  // task presets: pi 40, nli 50
  uint64_t seed = 1;
  size_t reward_subsample = 0;  // 0 = score rewards on the full validation set
  bool force_keep_all = false;  // debug: skip sampling, keep every source pair
  std::string checkpoint_dir;   // empty = don't write checkpoints
  std::string config_echo;      // stamped into checkpoints
};

struct EpisodeStats {
  size_t episode = 0;  // 1-based
  double val_acc = 0.0, val_auc = 0.0;
  bool val_auc_defined = false;
  double test_acc = 0.0, test_auc = 0.0;
  bool test_auc_defined = false;
  double selection_rate = 1.0;  // kept / drawn source pairs (1 when no selector runs)
  double mean_reward = 0.0;     // 0 in base_only, which measures no rewards
  std::string checkpoint_path;
};

struct RunReport {
  std::vector<EpisodeStats> episodes;
  size_t best_episode = 0;  // index into episodes: highest validation accuracy, earliest tie
  double final_test_acc = 0.0, final_test_auc = 0.0;
  bool final_test_auc_defined = false;
  // Most recent keep/drop decision per source pair index, across the run.
  std::map<size_t, int> final_actions;

  // Deterministic text form (full precision, no paths): two runs are
  // equivalent iff their serializations are byte-identical.
  std::string serialize() const;
};

// Runs the configured training mode on the corpus. `vocab` sizes the
// embedding table and is stamped into checkpoints; `embeddings` (optional)
// seeds the table. `selection_log` (optional) receives one line per step plus
// the final per-pair action dump; the caller writes any file header
// beforehand.
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const Corpus* corpus, const Vocab* vocab,
          const Tensor* embeddings = nullptr);

  RunReport run(std::ostream* selection_log = nullptr);

  // Pieces of run(), exposed so tests can drive them directly.
  void pretrain(size_t iters);
  EpisodeRecord run_episode(size_t episode, std::ostream* selection_log = nullptr,
                            EpisodeStats* stats = nullptr);

  TransferModel& model() { return model_; }
  const TrainConfig& config() const { return cfg_; }
  const std::map<size_t, int>& last_actions() const { return last_actions_; }

 private:
  bool uses_source() const { return cfg_.mode != TrainMode::base_only; }
  bool uses_selector() const {
    return cfg_.mode == TrainMode::rtl_reinforce || cfg_.mode == TrainMode::rtl_actor_critic;
  }
  const std::vector<SentencePair>& reward_pairs(size_t episode);

  TrainConfig cfg_;
  const Corpus* corpus_;
  const Vocab* vocab_;
  TransferModel model_;
  std::optional<BatchStream> source_stream_;
  std::optional<BatchStream> pretrain_target_stream_;
  FeedForwardSpec policy_spec_, value_spec_;
  std::map<size_t, int> last_actions_;
  std::vector<SentencePair> reward_subset_;  // per-episode fixed subsample
};

RunReport train(const TrainConfig& cfg, const Corpus& corpus, const Vocab* vocab,
                const Tensor* embeddings = nullptr, std::ostream* selection_log = nullptr);

}  // namespace rtl
