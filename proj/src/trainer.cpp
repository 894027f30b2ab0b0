#include "rtl/trainer.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "rtl/errors.hpp"
#include "rtl/version.hpp"

namespace rtl {

TrainMode parse_mode(const std::string& name) {
  if (name == "base_only") return TrainMode::base_only;
  if (name == "transfer_only") return TrainMode::transfer_only;
  if (name == "rtl_reinforce") return TrainMode::rtl_reinforce;
  if (name == "rtl_actor_critic") return TrainMode::rtl_actor_critic;
  throw ConfigError("unknown mode \"" + name +
                    "\" (expected base_only, transfer_only, rtl_reinforce, rtl_actor_critic)");
}

const char* mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::base_only: return "base_only";
    case TrainMode::transfer_only: return "transfer_only";
    case TrainMode::rtl_reinforce: return "rtl_reinforce";
    case TrainMode::rtl_actor_critic: return "rtl_actor_critic";
  }
  return "?";
}

static std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

static std::string fmt_auc(double v, bool defined) { return defined ? fmt17(v) : "undefined"; }

std::string RunReport::serialize() const {
  std::string out;
  out += "episodes " + std::to_string(episodes.size()) + "\n";
  for (const auto& e : episodes) {
    out += "episode " + std::to_string(e.episode);
    out += " val_acc " + fmt17(e.val_acc);
    out += " val_auc " + fmt_auc(e.val_auc, e.val_auc_defined);
    out += " test_acc " + fmt17(e.test_acc);
    out += " test_auc " + fmt_auc(e.test_auc, e.test_auc_defined);
    out += " selection_rate " + fmt17(e.selection_rate);
    out += " mean_reward " + fmt17(e.mean_reward);
    out += "\n";
  }
  out += "best_episode " + std::to_string(episodes.empty() ? 0 : episodes[best_episode].episode) +
         "\n";
  out += "final_test_acc " + fmt17(final_test_acc) + "\n";
  out += "final_test_auc " + fmt_auc(final_test_auc, final_test_auc_defined) + "\n";
  return out;
}

static const Vocab* require_vocab(const Vocab* v) {
  if (!v) throw ConfigError("trainer needs a vocabulary");
  return v;
}

Trainer::Trainer(const TrainConfig& cfg, const Corpus* corpus, const Vocab* vocab,
                 const Tensor* embeddings)
    : cfg_(cfg),
      corpus_(corpus),
      vocab_(require_vocab(vocab)),
      model_(DamConfig{cfg.dam_hidden, cfg.embed_dim}, vocab_->size()),
      policy_spec_(policy_spec(selector_state_width(cfg.dam_hidden), cfg.policy_hidden)),
      value_spec_(value_spec(selector_state_width(cfg.dam_hidden), cfg.policy_hidden)) {
  if (cfg_.episodes < 1) throw ConfigError("episodes must be >= 1");
  if (cfg_.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg_.lr_transfer <= 0 || cfg_.lr_policy <= 0 || cfg_.lr_value <= 0)
    throw ConfigError("learning rates must be > 0");
  if (cfg_.gamma < 0.0 || cfg_.gamma > 1.0) throw ConfigError("gamma must be in [0, 1]");
  if (corpus_->target_train.empty()) throw DataError("target training set is empty");
  if (corpus_->target_val.empty()) throw DataError("target validation set is empty");
  model_.init_params(cfg_.seed, embeddings);

  if (uses_source()) {
    if (corpus_->source_train.empty()) throw DataError("source training set is empty");
    if (corpus_->source_train.size() < corpus_->target_train.size() && log_level() >= 1)
      std::cerr << "warning: source set (" << corpus_->source_train.size()
                << " pairs) is smaller than target set (" << corpus_->target_train.size()
                << " pairs); transfer setups normally have the source much larger\n";
    source_stream_.emplace(&corpus_->source_train, Domain::source, cfg_.batch_size, cfg_.max_len,
                           sub_seed(cfg_.seed, "source_stream"));
    pretrain_target_stream_.emplace(&corpus_->target_train, Domain::target, cfg_.batch_size,
                                    cfg_.max_len, sub_seed(cfg_.seed, "pretrain.target_stream"));
  }
  if (uses_selector())
    init_selector(model_.params(), selector_state_width(cfg_.dam_hidden), cfg_.policy_hidden,
                  cfg_.seed);
}

void Trainer::pretrain(size_t iters) {
  if (!uses_source() || iters == 0) return;
  for (size_t i = 0; i < iters; ++i) {
    PairBatch src = source_stream_->next();
    model_.update_domain(src, Domain::source, cfg_.lr_transfer);
    PairBatch tgt = pretrain_target_stream_->next();
    model_.update_domain(tgt, Domain::target, cfg_.lr_transfer);
  }
}

const std::vector<SentencePair>& Trainer::reward_pairs(size_t episode) {
  const std::vector<SentencePair>& val = corpus_->target_val;
  if (cfg_.reward_subsample == 0 || cfg_.reward_subsample >= val.size()) return val;
  Rng rng(sub_seed(cfg_.seed, "reward_subsample.ep" + std::to_string(episode)));
  std::vector<size_t> perm = rng.permutation(val.size());
  reward_subset_.clear();
  for (size_t i = 0; i < cfg_.reward_subsample; ++i) reward_subset_.push_back(val[perm[i]]);
  return reward_subset_;
}

EpisodeRecord Trainer::run_episode(size_t episode, std::ostream* selection_log,
                                   EpisodeStats* stats) {
  if (stats) stats->episode = episode;
  std::string ep = std::to_string(episode);
  std::vector<PairBatch> target_batches =
      make_batches(corpus_->target_train, Domain::target, cfg_.batch_size, cfg_.max_len,
                   sub_seed(cfg_.seed, "target_batches.ep" + ep));

  EpisodeRecord record;
  record.gamma = cfg_.gamma;
  size_t kept_total = 0, drawn_total = 0;
  double reward_sum = 0.0;

  if (!uses_source()) {
    for (const PairBatch& tgt : target_batches)
      model_.update_domain(tgt, Domain::target, cfg_.lr_transfer);
    if (stats) {
      stats->selection_rate = 1.0;
      stats->mean_reward = 0.0;
    }
    return record;
  }

  Rng action_rng(sub_seed(cfg_.seed, "actions.ep" + ep));
  const std::vector<SentencePair>& val = reward_pairs(episode);
  bool sample = uses_selector() && !cfg_.force_keep_all;

  for (size_t b = 0; b < target_batches.size(); ++b) {
    PairBatch src = source_stream_->next();

    EpisodeStep step;
    if (uses_selector()) step.states = build_states(model_, src);

    ActionBatch acts;
    if (sample) {
      acts = sample_actions(policy_forward(model_.params(), policy_spec_, step.states),
                            action_rng);
    } else {
      acts.actions.assign(src.n, 1);
      acts.keep_probs.assign(src.n, 1.0);
    }

    std::optional<PairBatch> filtered = filter_batch(src, acts.actions);
    if (filtered) model_.update_domain(*filtered, Domain::source, cfg_.lr_transfer);
    double reward = compute_reward(model_, val, cfg_.max_len);
    model_.update_domain(target_batches[b], Domain::target, cfg_.lr_transfer);

    size_t kept = filtered ? filtered->n : 0;
    kept_total += kept;
    drawn_total += src.n;
    reward_sum += reward;
    for (size_t r = 0; r < src.n; ++r) last_actions_[src.origin[r]] = acts.actions[r];

    if (uses_selector()) {
      step.actions = acts.actions;
      step.reward = reward;
      record.steps.push_back(std::move(step));
    }
    if (selection_log)
      *selection_log << episode << ", " << (b + 1) << ", " << kept << ", " << src.n << ", "
                     << fmt17(reward) << "\n";
    if (log_level() >= 2)
      std::cerr << "episode " << episode << " step " << (b + 1) << "/" << target_batches.size()
                << " kept " << kept << "/" << src.n << " reward " << reward << "\n";
  }

  if (uses_selector()) {
    PolicyMode pm = cfg_.mode == TrainMode::rtl_reinforce ? PolicyMode::reinforce
                                                          : PolicyMode::actor_critic;
    policy_update(model_.params(), policy_spec_, value_spec_, record, pm, cfg_.lr_policy);
    value_update(model_.params(), value_spec_, record, cfg_.lr_value);
  }

  if (stats) {
    stats->selection_rate =
        drawn_total ? static_cast<double>(kept_total) / static_cast<double>(drawn_total) : 1.0;
    stats->mean_reward =
        target_batches.empty() ? 0.0 : reward_sum / static_cast<double>(target_batches.size());
  }
  return record;
}

RunReport Trainer::run(std::ostream* selection_log) {
  pretrain(cfg_.pretrain_iters);
  if (selection_log) *selection_log << "episode, batch, kept, total, reward\n";

  RunReport report;
  for (size_t e = 1; e <= cfg_.episodes; ++e) {
    EpisodeStats stats;
    run_episode(e, selection_log, &stats);

    EvalResult val = model_.evaluate(corpus_->target_val, Domain::target, cfg_.max_len);
    stats.val_acc = val.accuracy;
    stats.val_auc = val.auc;
    stats.val_auc_defined = val.auc_defined;
    if (!corpus_->target_test.empty()) {
      EvalResult test = model_.evaluate(corpus_->target_test, Domain::target, cfg_.max_len);
      stats.test_acc = test.accuracy;
      stats.test_auc = test.auc;
      stats.test_auc_defined = test.auc_defined;
    }

    if (!cfg_.checkpoint_dir.empty()) {
      std::filesystem::create_directories(cfg_.checkpoint_dir);
      stats.checkpoint_path = cfg_.checkpoint_dir + "/episode_" + std::to_string(e) + ".ckpt";
      save_checkpoint(stats.checkpoint_path, model_.params(), *vocab_, cfg_.config_echo);
    }

    if (log_level() >= 1)
      std::cerr << "episode " << e << "/" << cfg_.episodes << " val_acc " << stats.val_acc
                << " test_acc " << stats.test_acc << " selection " << stats.selection_rate
                << " mean_reward " << stats.mean_reward << "\n";
    report.episodes.push_back(std::move(stats));
  }

  report.best_episode = 0;
  for (size_t i = 1; i < report.episodes.size(); ++i)
    if (report.episodes[i].val_acc > report.episodes[report.best_episode].val_acc)
      report.best_episode = i;
  const EpisodeStats& best = report.episodes[report.best_episode];
  report.final_test_acc = best.test_acc;
  report.final_test_auc = best.test_auc;
  report.final_test_auc_defined = best.test_auc_defined;
  report.final_actions = last_actions_;

  if (selection_log) {
    *selection_log << "pair, index, action\n";
    for (const auto& [idx, act] : last_actions_)
      *selection_log << "pair, " << idx << ", " << act << "\n";
  }
  return report;
}

RunReport train(const TrainConfig& cfg, const Corpus& corpus, const Vocab* vocab,
                const Tensor* embeddings, std::ostream* selection_log) {
  Trainer t(cfg, &corpus, vocab, embeddings);
  return t.run(selection_log);
}

}  // namespace rtl
