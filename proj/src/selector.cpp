#include "rtl/selector.hpp"

#include <cmath>

#include "rtl/errors.hpp"

namespace rtl {

FeedForwardSpec policy_spec(size_t state_width, size_t hidden) {
  return {"policy", {state_width, hidden, 2}, Activation::tanh, OutputTransform::softmax};
}

FeedForwardSpec value_spec(size_t state_width, size_t hidden) {
  return {"value", {state_width, hidden, 1}, Activation::tanh, OutputTransform::linear};
}

void init_selector(ParamStore& store, size_t state_width, size_t hidden, uint64_t seed) {
  {
    Rng rng(sub_seed(seed, "init.policy"));
    init_feed_forward(store, policy_spec(state_width, hidden), rng);
  }
  {
    Rng rng(sub_seed(seed, "init.value"));
    init_feed_forward(store, value_spec(state_width, hidden), rng);
  }
}

static double clamped_nll(double p) { return -std::log(p < 1e-12 ? 1e-12 : p); }

Tensor build_states(const TransferModel& model, const PairBatch& batch) {
  const ParamStore& store = model.params();
  PairEncoding enc = encode(store, model.dam(), batch, false);
  Tensor ps = feed_forward(store, model.head_spec(Domain::source), enc.z);
  Tensor pt = feed_forward(store, model.head_spec(Domain::target), enc.z);
  size_t zw = enc.z.dim(1);
  Tensor states({batch.n, zw + 6});
  for (size_t r = 0; r < batch.n; ++r) {
    size_t c = 0;
    for (; c < zw; ++c) states.at(r, c) = enc.z.at(r, c);
    size_t y = static_cast<size_t>(batch.labels[r]);
    states.at(r, c++) = clamped_nll(ps.at(r, y));
    states.at(r, c++) = clamped_nll(pt.at(r, y));
    states.at(r, c++) = ps.at(r, 0);
    states.at(r, c++) = ps.at(r, 1);
    states.at(r, c++) = pt.at(r, 0);
    states.at(r, c++) = pt.at(r, 1);
  }
  return states;
}

Tensor policy_forward(const ParamStore& store, const FeedForwardSpec& spec, const Tensor& states) {
  return feed_forward(store, spec, states);
}

ActionBatch sample_actions(const Tensor& probs, Rng& rng, bool greedy) {
  ActionBatch out;
  out.actions.resize(probs.dim(0));
  out.keep_probs.resize(probs.dim(0));
  for (size_t r = 0; r < probs.dim(0); ++r) {
    double keep = probs.at(r, 1);
    out.keep_probs[r] = keep;
    if (greedy)
      out.actions[r] = keep > probs.at(r, 0) ? 1 : 0;
    else
      out.actions[r] = rng.next_double() < keep ? 1 : 0;
  }
  return out;
}

std::optional<PairBatch> filter_batch(const PairBatch& batch, const std::vector<int>& actions) {
  if (actions.size() != batch.n)
    throw NumericError("filter_batch: actions/batch length mismatch");
  std::vector<size_t> rows;
  for (size_t r = 0; r < batch.n; ++r)
    if (actions[r] == 1) rows.push_back(r);
  if (rows.empty()) return std::nullopt;
  PairBatch out;
  out.domain = batch.domain;
  out.n = rows.size();
  out.width = batch.width;
  out.ids1.reserve(out.n * out.width);
  out.ids2.reserve(out.n * out.width);
  out.mask1 = Tensor({out.n, out.width});
  out.mask2 = Tensor({out.n, out.width});
  for (size_t k = 0; k < rows.size(); ++k) {
    size_t r = rows[k];
    for (size_t c = 0; c < batch.width; ++c) {
      out.ids1.push_back(batch.ids1[r * batch.width + c]);
      out.ids2.push_back(batch.ids2[r * batch.width + c]);
      out.mask1.at(k, c) = batch.mask1.at(r, c);
      out.mask2.at(k, c) = batch.mask2.at(r, c);
    }
    out.labels.push_back(batch.labels[r]);
    out.origin.push_back(batch.origin[r]);
  }
  return out;
}

double compute_reward(const TransferModel& model, const std::vector<SentencePair>& val_pairs,
                      size_t max_len) {
  if (val_pairs.empty()) throw DataError("compute_reward: empty validation set");
  return model.evaluate(val_pairs, Domain::target, max_len).accuracy;
}

std::vector<double> discounted_returns(const std::vector<double>& rewards, double gamma) {
  if (rewards.empty()) throw NumericError("discounted_returns: empty reward list");
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("discount gamma must be in [0, 1]");
  std::vector<double> returns(rewards.size());
  double acc = 0.0;
  for (size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    returns[i] = acc;
  }
  return returns;
}

static std::vector<double> record_returns(const EpisodeRecord& record) {
  std::vector<double> rewards;
  rewards.reserve(record.steps.size());
  for (const auto& s : record.steps) rewards.push_back(s.reward);
  return discounted_returns(rewards, record.gamma);
}

void policy_update(ParamStore& store, const FeedForwardSpec& policy, const FeedForwardSpec& value,
                   const EpisodeRecord& record, PolicyMode mode, double lr) {
  if (record.steps.empty()) return;
  std::vector<double> returns = record_returns(record);
  std::vector<std::string> names = store.names(policy.prefix + ".");
  for (size_t b = 0; b < record.steps.size(); ++b) {
    const EpisodeStep& step = record.steps[b];
    size_t n = step.actions.size();
    std::vector<double> v(n, returns[b]);
    if (mode == PolicyMode::actor_critic) {
      // Baseline from the value net as it stands now; it stays frozen for
      // the whole policy loop, and v is a constant with no gradient path.
      Tensor est = feed_forward(store, value, step.states);
      for (size_t i = 0; i < n; ++i) v[i] -= est.at(i, 0);
    }
    FeedForwardCache cache;
    Tensor probs = feed_forward(store, policy, step.states, &cache);
    Tensor dprobs(probs.shape);
    double inv_n = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) {
      size_t a = static_cast<size_t>(step.actions[i]);
      double p = probs.at(i, a);
      if (p >= 1e-12) dprobs.at(i, a) = -v[i] * inv_n / p;
    }
    feed_forward_backward(store, policy, cache, dprobs);
    // Plain gradient steps here, not Adam: the replay takes one step per
    // stored batch, and Adam's magnitude-normalized steps let zero-mean
    // reward noise walk the logits into a saturated keep-all or drop-all
    // policy. With raw gradients the noise largely cancels across batches
    // while a consistent advantage signal still accumulates.
    sgd_step(store, names, lr);
  }
}

void value_update(ParamStore& store, const FeedForwardSpec& value, const EpisodeRecord& record,
                  double lr) {
  if (record.steps.empty()) return;
  std::vector<double> returns = record_returns(record);
  std::vector<std::string> names = store.names(value.prefix + ".");
  AdamConfig cfg;
  cfg.lr = lr;
  for (size_t b = 0; b < record.steps.size(); ++b) {
    const EpisodeStep& step = record.steps[b];
    size_t n = step.states.dim(0);
    FeedForwardCache cache;
    Tensor est = feed_forward(store, value, step.states, &cache);
    Tensor dest(est.shape);
    double inv_n = 1.0 / static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) dest.at(i, 0) = 2.0 * (est.at(i, 0) - returns[b]) * inv_n;
    feed_forward_backward(store, value, cache, dest);
    adam_step(store, names, cfg);
  }
}

}  // namespace rtl
