#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "rtl/config.hpp"
#include "rtl/diagnostics.hpp"
#include "rtl/errors.hpp"
#include "rtl/trainer.hpp"
#include "rtl/version.hpp"

namespace {

using namespace rtl;

struct LoadedData {
  Vocab vocab;
  Corpus corpus;
  std::optional<Tensor> embeddings;
};

LoadedData prepare_data(const RunSetup& setup) {
  LoadedData d;
  if (setup.use_synth) {
    d.corpus = synth_generate(setup.synth, d.vocab);
  } else {
    if (setup.data_target_train.empty() || setup.data_target_val.empty())
      throw ConfigError("data.target_train and data.target_val are required");
    size_t len = setup.train.max_len;
    if (!setup.data_source.empty())
      d.corpus.source_train = load_corpus(setup.data_source, len, d.vocab);
    else if (setup.train.mode != TrainMode::base_only)
      throw ConfigError("data.source is required unless mode = base_only");
    d.corpus.target_train = load_corpus(setup.data_target_train, len, d.vocab);
    d.corpus.target_val = load_corpus(setup.data_target_val, len, d.vocab);
    if (!setup.data_target_test.empty())
      d.corpus.target_test = load_corpus(setup.data_target_test, len, d.vocab);
  }
  if (!setup.data_embeddings.empty()) {
    Rng rng(sub_seed(setup.train.seed, "init.embeddings"));
    size_t hits = 0;
    d.embeddings = load_embeddings(setup.data_embeddings, d.vocab, setup.train.embed_dim, rng,
                                   &hits);
    if (log_level() >= 1)
      std::cerr << "embeddings: " << hits << "/" << (d.vocab.size() - 1)
                << " vocabulary words found in " << setup.data_embeddings << "\n";
  }
  return d;
}

int cmd_train(const std::string& config_path, const std::string& mode_override,
              std::optional<uint64_t> seed_override) {
  RunSetup setup = load_config(config_path);
  if (!mode_override.empty()) setup.train.mode = parse_mode(mode_override);
  if (seed_override) setup.train.seed = *seed_override;
  setup.train.config_echo = effective_config(setup);

  LoadedData data = prepare_data(setup);

  std::ofstream log_file;
  std::ostream* log = nullptr;
  if (!setup.selection_log.empty()) {
    std::filesystem::path p(setup.selection_log);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    log_file.open(setup.selection_log);
    if (!log_file) throw DataError("cannot write selection log: " + setup.selection_log);
    log_file << file_header(setup);
    log = &log_file;
  }

  RunReport report =
      train(setup.train, data.corpus, &data.vocab,
            data.embeddings ? &*data.embeddings : nullptr, log);

  std::cout << file_header(setup);
  std::cout << report.serialize();
  if (!report.episodes.empty() && !report.episodes[report.best_episode].checkpoint_path.empty())
    std::cout << "best_checkpoint " << report.episodes[report.best_episode].checkpoint_path
              << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& domain_name_arg) {
  Domain domain;
  if (domain_name_arg == "source")
    domain = Domain::source;
  else if (domain_name_arg == "target")
    domain = Domain::target;
  else
    throw ConfigError("--domain must be source or target");

  Checkpoint ck = load_checkpoint(ckpt_path);
  RunSetup setup = resolve_config(read_config_string(ck.config_echo));
  Vocab vocab = vocab_from_words(ck.vocab_words);
  std::vector<SentencePair> pairs = load_corpus(data_path, setup.train.max_len, vocab);

  TransferModel model(DamConfig{setup.train.dam_hidden, setup.train.embed_dim}, vocab.size());
  model.set_params(std::move(ck.store));
  EvalResult res = model.evaluate(pairs, domain, setup.train.max_len);

  std::cout << "# " << tool_banner() << "\n";
  std::cout << "# checkpoint = " << ckpt_path << "\n";
  std::cout << "# data = " << data_path << "\n";
  std::cout << "# domain = " << domain_name_arg << "\n";
  std::istringstream echo(ck.config_echo);
  for (std::string line; std::getline(echo, line);) std::cout << "# " << line << "\n";
  std::cout << "pairs=" << res.n << "\n";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", res.accuracy);
  std::cout << "accuracy=" << buf << "\n";
  if (res.auc_defined) {
    std::snprintf(buf, sizeof(buf), "%.6f", res.auc);
    std::cout << "auc=" << buf << "\n";
  } else {
    std::cout << "auc=undefined\n";
  }
  return 0;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
  RunSetup setup = load_config(config_path);
  if (!setup.use_synth)
    throw ConfigError("synth command needs synth.* keys (config points at data files)");

  Vocab vocab;
  Corpus corpus = synth_generate(setup.synth, vocab);
  std::filesystem::create_directories(out_dir);

  auto path = [&](const char* name) { return out_dir + "/" + name; };
  save_corpus(path("source.tsv"), corpus.source_train, vocab);
  save_corpus(path("target_train.tsv"), corpus.target_train, vocab);
  save_corpus(path("target_val.tsv"), corpus.target_val, vocab);
  save_corpus(path("target_test.tsv"), corpus.target_test, vocab);

  {
    std::ofstream tags(path("source_tags.txt"));
    if (!tags) throw DataError("cannot write " + path("source_tags.txt"));
    tags << file_header(setup);
    tags << "# one line per source.tsv pair: 1 = shifted population, 0 = aligned\n";
    for (uint8_t t : corpus.source_tags) tags << int(t) << "\n";
  }

  size_t shifted = 0;
  for (uint8_t t : corpus.source_tags) shifted += t;
  {
    std::ofstream manifest(path("manifest.txt"));
    if (!manifest) throw DataError("cannot write " + path("manifest.txt"));
    manifest << file_header(setup);
    manifest << "source.tsv " << corpus.source_train.size() << "\n";
    manifest << "target_train.tsv " << corpus.target_train.size() << "\n";
    manifest << "target_val.tsv " << corpus.target_val.size() << "\n";
    manifest << "target_test.tsv " << corpus.target_test.size() << "\n";
    manifest << "source_tags.txt " << corpus.source_tags.size() << "\n";
    manifest << "shifted_pairs " << shifted << "\n";
  }

  std::cout << "wrote " << corpus.source_train.size() << " source pairs (" << shifted
            << " shifted), " << corpus.target_train.size() << "/" << corpus.target_val.size()
            << "/" << corpus.target_test.size() << " target train/val/test pairs to " << out_dir
            << "\n";
  return 0;
}

SelectionOutcome parse_selection_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open selection log: " + path);
  SelectionOutcome out;
  std::string line;
  bool saw_dump = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("pair,", 0) == 0) {
      if (line.find("index") != std::string::npos) {  // the dump's own header
        saw_dump = true;
        continue;
      }
      std::istringstream ss(line.substr(5));
      size_t idx;
      int action;
      char comma;
      if (!(ss >> idx >> comma >> action) || comma != ',')
        throw DataError("selection log: malformed pair line: " + line);
      (action == 1 ? out.kept : out.dropped).push_back(idx);
      saw_dump = true;
    }
  }
  if (!saw_dump)
    throw DataError("selection log has no per-pair action dump (was the run interrupted?)");
  return out;
}

std::vector<uint8_t> read_tags(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open tags file: " + path);
  std::vector<uint8_t> tags;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line == "0")
      tags.push_back(0);
    else if (line == "1")
      tags.push_back(1);
    else
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 0 or 1");
  }
  return tags;
}

int cmd_analyze(const std::string& log_path, const std::string& source_path,
                const std::string& target_path, uint64_t seed, const std::string& tags_path) {
  SelectionOutcome sel = parse_selection_log(log_path);
  Vocab vocab;
  std::vector<SentencePair> source = load_corpus(source_path, SIZE_MAX, vocab);
  std::vector<SentencePair> target = load_corpus(target_path, SIZE_MAX, vocab);

  std::cout << "# " << tool_banner() << "\n";
  std::cout << "# selection_log = " << log_path << "\n";
  std::cout << "# source = " << source_path << "\n";
  std::cout << "# target = " << target_path << "\n";
  if (!tags_path.empty()) std::cout << "# tags = " << tags_path << "\n";
  std::cout << "# seed = " << seed << "\n";

  DistanceReport report = selection_report(source, target, sel, vocab, seed);
  std::cout << render_distance_report(report);
  if (!tags_path.empty()) {
    ShiftScore score = planted_shift_score(sel, read_tags(tags_path));
    std::cout << render_shift_score(score);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reinforced selective transfer learning for text matching"};
  app.set_version_flag("--version", rtl::tool_banner());
  app.require_subcommand(1);

  std::string config_path, mode_override, out_dir;
  std::optional<uint64_t> seed_override;
  uint64_t analyze_seed = 1;
  std::string ckpt_path, data_path, domain_arg = "target";
  std::string log_path, source_path, target_path, tags_path;

  CLI::App* train = app.add_subcommand("train", "train a model per the config file");
  train->add_option("--config", config_path, "config file (key = value lines)")->required();
  train->add_option("--mode", mode_override,
                    "override mode: base_only, transfer_only, rtl_reinforce, rtl_actor_critic");
  train->add_option("--seed", seed_override, "override the run seed");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a TSV file");
  eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval->add_option("--data", data_path, "3-column TSV of pairs")->required();
  eval->add_option("--domain", domain_arg, "which classification head to use (default target)");

  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic two-domain corpus");
  synth->add_option("--config", config_path, "config file with synth.* keys")->required();
  synth->add_option("--out", out_dir, "output directory")->required();

  CLI::App* analyze = app.add_subcommand("analyze", "domain-distance report for a selection log");
  analyze->add_option("--selection-log", log_path, "selection log from a training run")
      ->required();
  analyze->add_option("--source", source_path, "source-domain TSV")->required();
  analyze->add_option("--target", target_path, "target-domain TSV")->required();
  analyze->add_option("--seed", analyze_seed, "seed for the random reference subset");
  analyze->add_option("--tags", tags_path, "origin tags file from `rtl synth` (optional)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(train)) return cmd_train(config_path, mode_override, seed_override);
    if (app.got_subcommand(eval)) return cmd_eval(ckpt_path, data_path, domain_arg);
    if (app.got_subcommand(synth)) return cmd_synth(config_path, out_dir);
    if (app.got_subcommand(analyze))
      return cmd_analyze(log_path, source_path, target_path, analyze_seed, tags_path);
  } catch (const rtl::ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const rtl::DataError& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
