#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <utility>

#include "rtl/diagnostics.hpp"
#include "rtl/errors.hpp"
#include "rtl/trainer.hpp"
#include "rtl/version.hpp"

namespace py = pybind11;
using namespace rtl;

namespace {

std::vector<SentencePair> tokenize_pairs(
    const std::vector<std::pair<std::string, std::string>>& texts, Vocab& vocab) {
  std::vector<SentencePair> pairs;
  pairs.reserve(texts.size());
  for (const auto& [a, b] : texts) {
    SentencePair p;
    auto add = [&](const std::string& text, std::vector<int32_t>& tokens) {
      std::istringstream words(text);
      for (std::string w; words >> w;) tokens.push_back(vocab.token_id(w));
    };
    add(a, p.tokens1);
    add(b, p.tokens2);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

py::object opt_float(double v, bool defined) {
  if (!defined) return py::none();
  return py::float_(v);
}

py::dict report_to_dict(const RunReport& r) {
  py::list episodes;
  for (const auto& e : r.episodes) {
    py::dict d;
    d["episode"] = e.episode;
    d["val_acc"] = e.val_acc;
    d["val_auc"] = opt_float(e.val_auc, e.val_auc_defined);
    d["test_acc"] = e.test_acc;
    d["test_auc"] = opt_float(e.test_auc, e.test_auc_defined);
    d["selection_rate"] = e.selection_rate;
    d["mean_reward"] = e.mean_reward;
    episodes.append(d);
  }
  py::dict out;
  out["episodes"] = episodes;
  out["best_episode"] = r.episodes.empty() ? size_t(0) : r.episodes[r.best_episode].episode;
  out["final_test_acc"] = r.final_test_acc;
  out["final_test_auc"] = opt_float(r.final_test_auc, r.final_test_auc_defined);
  py::dict actions;
  for (const auto& [idx, act] : r.final_actions) actions[py::int_(idx)] = act;
  out["final_actions"] = actions;
  return out;
}

}  // namespace

PYBIND11_MODULE(rtl_core, m) {
  m.doc() = "reinforced selective transfer learning for text matching";
  m.attr("__version__") = kToolVersion;

  m.def("version", &tool_banner, "tool name and version string");

  m.def(
      "discounted_returns",
      [](const std::vector<double>& rewards, double gamma) {
        return discounted_returns(rewards, gamma);
      },
      py::arg("rewards"), py::arg("gamma"),
      "suffix-discounted returns: out[i] = rewards[i] + gamma * out[i+1]");

  m.def(
      "auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) -> py::object {
        double a = 0.0;
        if (!auc_score(scores, labels, &a)) return py::none();
        return py::float_(a);
      },
      py::arg("scores"), py::arg("labels"),
      "pairwise ranking score; None when only one class is present");

  m.def(
      "corpus_distance",
      [](const std::vector<std::pair<std::string, std::string>>& a,
         const std::vector<std::pair<std::string, std::string>>& b) {
        Vocab vocab;
        auto da = term_distribution(tokenize_pairs(a, vocab), vocab);
        auto db = term_distribution(tokenize_pairs(b, vocab), vocab);
        auto support = union_support({&da, &db});
        return wasserstein_1(align_to(da, support), align_to(db, support));
      },
      py::arg("pairs_a"), py::arg("pairs_b"),
      "transport distance between the term distributions of two corpora, "
      "each given as a list of (sentence1, sentence2) strings");

  m.def(
      "train_synth",
      [](const std::string& mode, size_t episodes, size_t batch_size, size_t pretrain,
         double lr_transfer, double lr_policy, double lr_value, double gamma, size_t dam_hidden,
         size_t embed_dim, size_t policy_hidden, size_t max_len, uint64_t seed,
         size_t vocab_size, size_t n_source, size_t n_target, double shift_fraction,
         double band_fraction, uint64_t data_seed) {
        TrainConfig tc;
        tc.mode = parse_mode(mode);
        tc.episodes = episodes;
        tc.batch_size = batch_size;
        tc.pretrain_iters = pretrain;
        tc.lr_transfer = lr_transfer;
        tc.lr_policy = lr_policy;
        tc.lr_value = lr_value;
        tc.gamma = gamma;
        tc.dam_hidden = dam_hidden;
        tc.embed_dim = embed_dim;
        tc.policy_hidden = policy_hidden;
        tc.max_len = max_len;
        tc.seed = seed;
        SynthConfig sc;
        sc.vocab_size = vocab_size;
        sc.n_source = n_source;
        sc.n_target = n_target;
        sc.shift_fraction = shift_fraction;
        sc.band_fraction = band_fraction;
        sc.seed = data_seed;
        Vocab vocab;
        Corpus corpus = synth_generate(sc, vocab);
        RunReport report;
        {
          py::gil_scoped_release release;
          report = train(tc, corpus, &vocab);
        }
        return report_to_dict(report);
      },
      py::arg("mode") = "rtl_actor_critic", py::arg("episodes") = 5, py::arg("batch_size") = 8,
      py::arg("pretrain") = 20, py::arg("lr_transfer") = 1e-3, py::arg("lr_policy") = 3e-3,
      py::arg("lr_value") = 5e-3, py::arg("gamma") = 0.8, py::arg("dam_hidden") = 16,
      py::arg("embed_dim") = 16, py::arg("policy_hidden") = 32, py::arg("max_len") = 8,
      py::arg("seed") = 1, py::arg("vocab_size") = 60, py::arg("n_source") = 200,
      py::arg("n_target") = 80, py::arg("shift_fraction") = 0.5, py::arg("band_fraction") = 0.65,
      py::arg("data_seed") = 7,
      "generate the planted-shift corpus and train on it; returns the run report");

  m.def(
      "eval_checkpoint",
      [](const std::string& checkpoint, const std::string& data_tsv, const std::string& domain) {
        Domain d;
        if (domain == "source")
          d = Domain::source;
        else if (domain == "target")
          d = Domain::target;
        else
          throw ConfigError("domain must be source or target");
        Checkpoint ck = load_checkpoint(checkpoint);
        Vocab vocab = vocab_from_words(ck.vocab_words);
        size_t max_len = SIZE_MAX;
        size_t hidden = 0, embed = 0;
        {
          // dimensions come from the checkpoint's own config echo
          std::istringstream echo(ck.config_echo);
          for (std::string line; std::getline(echo, line);) {
            std::istringstream kv(line);
            std::string key, eq, value;
            if (!(kv >> key >> eq >> value) || eq != "=") continue;
            if (key == "max_len") max_len = std::stoul(value);
            if (key == "dam_hidden") hidden = std::stoul(value);
            if (key == "embed_dim") embed = std::stoul(value);
          }
        }
        if (!hidden || !embed)
          throw DataError("checkpoint config echo is missing the model dimensions");
        std::vector<SentencePair> pairs = load_corpus(data_tsv, max_len, vocab);
        TransferModel model(DamConfig{hidden, embed}, vocab.size());
        model.set_params(std::move(ck.store));
        EvalResult res = model.evaluate(pairs, d, max_len);
        py::dict out;
        out["pairs"] = res.n;
        out["accuracy"] = res.accuracy;
        out["auc"] = opt_float(res.auc, res.auc_defined);
        return out;
      },
      py::arg("checkpoint"), py::arg("data_tsv"), py::arg("domain") = "target",
      "accuracy and ranking score of a saved checkpoint on a TSV pair file");

  py::register_exception<ConfigError>(m, "RtlConfigError");
  py::register_exception<DataError>(m, "RtlDataError");
  py::register_exception<NumericError>(m, "RtlNumericError");
}
