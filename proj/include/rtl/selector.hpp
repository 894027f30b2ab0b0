#pragma once

#include <optional>
#include <vector>

#include "rtl/data.hpp"
#include "rtl/nn.hpp"
#include "rtl/transfer.hpp"

namespace rtl {

// Policy net: state -> tanh hidden -> 2-way softmax over {drop, keep}.
FeedForwardSpec policy_spec(size_t state_width, size_t hidden);
// Value net: state -> tanh hidden -> scalar return estimate.
FeedForwardSpec value_spec(size_t state_width, size_t hidden);

// Width of the per-pair state vector: z (4h) ⊕ source-model loss ⊕
// target-model loss ⊕ source-model probs (2) ⊕ target-model probs (2).
inline size_t selector_state_width(size_t dam_hidden) { return 4 * dam_hidden + 6; }

// Adds policy.* and value.* parameters, each drawn from its own labeled
// stream of `seed`.
void init_selector(ParamStore& store, size_t state_width, size_t hidden, uint64_t seed);

// Builds the per-pair state matrix [n, 4h+6] for a source batch. Reads
// model parameters but never writes gradients: selector inputs are
// stop-gradient features.
Tensor build_states(const TransferModel& model, const PairBatch& batch);

// Keep/drop distribution per state, rows [p(drop), p(keep)].
Tensor policy_forward(const ParamStore& store, const FeedForwardSpec& spec, const Tensor& states);

struct ActionBatch {
  std::vector<int> actions;        // 1 = keep, 0 = drop
  std::vector<double> keep_probs;  // the probabilities the draws came from
};

// One bernoulli draw per pair against its keep probability (exactly one rng
// draw per row). Greedy mode takes the argmax instead and draws nothing.
ActionBatch sample_actions(const Tensor& probs, Rng& rng, bool greedy = false);

// Rows with action 1, in order. Empty selection (all dropped) returns
// nullopt: the caller must skip the source update for that step.
std::optional<PairBatch> filter_batch(const PairBatch& batch, const std::vector<int>& actions);

// Target-model accuracy on the given validation pairs. Called after the
// source update and before the target update of the same step.
double compute_reward(const TransferModel& model, const std::vector<SentencePair>& val_pairs,
                      size_t max_len);

// r'_b = sum_k gamma^k r_{b+k}, computed by the backward recurrence
// r'_b = r_b + gamma * r'_{b+1} (which it satisfies exactly).
std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma);

struct EpisodeStep {
  Tensor states;             // [n, state_width]
  std::vector<int> actions;  // per pair
  double reward = 0.0;       // measured after this step's source update
};

// One episode's history H, in step order.
struct EpisodeRecord {
  std::vector<EpisodeStep> steps;
  double gamma = 0.8;
};

enum class PolicyMode { reinforce, actor_critic };

// Walks the stored batches chronologically; for each, ascends the policy by
// the mean score-function term (1/n) Σ v_i ∇ log π(a_i|S_i) with one Adam
// step at lr. v_i is the batch return under reinforce, or return minus the
// value net's estimate under actor_critic. The value net is read but never
// written here, and v_i is a constant: no gradient flows through it.
void policy_update(ParamStore& store, const FeedForwardSpec& policy, const FeedForwardSpec& value,
                   const EpisodeRecord& record, PolicyMode mode, double lr);

// Second pass over the same history: per batch, one Adam step on the mean
// squared error between value predictions and the batch return. Policy
// parameters are untouched.
void value_update(ParamStore& store, const FeedForwardSpec& value, const EpisodeRecord& record,
                  double lr);

}  // namespace rtl
