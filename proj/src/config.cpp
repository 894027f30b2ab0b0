#include "rtl/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "rtl/errors.hpp"
#include "rtl/version.hpp"

namespace rtl {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "mode",           "episodes",       "batch_size",      "pretrain",
      "lr_transfer",    "lr_policy",      "lr_value",        "gamma",
      "dam_hidden",     "embed_dim",      "policy_hidden",   "max_len",
      "seed",           "task",           "force_keep_all",  "checkpoint_dir",
      "selection_log",  "selector.reward_subsample",
      "data.source",    "data.target_train", "data.target_val", "data.target_test",
      "data.embeddings",
      "synth.vocab_size", "synth.n_source", "synth.n_target", "synth.shift_fraction",
      "synth.band_fraction", "synth.seed",
  };
  return keys;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    if (!value.empty() && value[0] == '-') throw std::invalid_argument("negative");
    uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key \"" + key + "\": expected a nonnegative integer, got \"" +
                      value + "\"");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key \"" + key + "\": expected a number, got \"" + value + "\"");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key \"" + key + "\": expected true or false, got \"" + value + "\"");
}

}  // namespace

static std::map<std::string, std::string> read_config_stream(std::istream& in,
                                                             const std::string& path) {
  std::map<std::string, std::string> raw;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected `key = value`");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    if (!known_keys().count(key))
      throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown config key \"" + key +
                        "\"");
    if (raw.count(key))
      throw ConfigError(path + ":" + std::to_string(line_no) + ": duplicate key \"" + key + "\"");
    raw[key] = value;
  }
  return raw;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return read_config_stream(in, path);
}

std::map<std::string, std::string> read_config_string(const std::string& text) {
  std::istringstream in(text);
  return read_config_stream(in, "<config>");
}

RunSetup resolve_config(const std::map<std::string, std::string>& raw) {
  for (const auto& [k, _] : raw)
    if (!known_keys().count(k)) throw ConfigError("unknown config key \"" + k + "\"");

  auto get = [&](const char* key) -> const std::string* {
    auto it = raw.find(key);
    return it == raw.end() ? nullptr : &it->second;
  };

  RunSetup s;
  if (const auto* v = get("task")) {
    if (*v != "pi" && *v != "nli")
      throw ConfigError("config key \"task\": expected pi or nli, got \"" + *v + "\"");
    s.task = *v;
  }
  s.train.max_len = (s.task == "nli") ? 50 : 40;  // preset; explicit max_len overrides

  if (const auto* v = get("mode")) s.train.mode = parse_mode(*v);
  if (const auto* v = get("episodes")) s.train.episodes = parse_u64("episodes", *v);
  if (const auto* v = get("batch_size")) s.train.batch_size = parse_u64("batch_size", *v);
  if (const auto* v = get("pretrain")) s.train.pretrain_iters = parse_u64("pretrain", *v);
  if (const auto* v = get("lr_transfer")) s.train.lr_transfer = parse_double("lr_transfer", *v);
  if (const auto* v = get("lr_policy")) s.train.lr_policy = parse_double("lr_policy", *v);
  s.train.lr_value = s.train.lr_policy;  // default tracks lr_policy
  if (const auto* v = get("lr_value")) s.train.lr_value = parse_double("lr_value", *v);
  if (const auto* v = get("gamma")) s.train.gamma = parse_double("gamma", *v);
  if (const auto* v = get("dam_hidden")) s.train.dam_hidden = parse_u64("dam_hidden", *v);
  if (const auto* v = get("embed_dim")) s.train.embed_dim = parse_u64("embed_dim", *v);
  if (const auto* v = get("policy_hidden")) s.train.policy_hidden = parse_u64("policy_hidden", *v);
  if (const auto* v = get("max_len")) s.train.max_len = parse_u64("max_len", *v);
  if (const auto* v = get("seed")) s.train.seed = parse_u64("seed", *v);
  if (const auto* v = get("selector.reward_subsample"))
    s.train.reward_subsample = parse_u64("selector.reward_subsample", *v);
  if (const auto* v = get("force_keep_all"))
    s.train.force_keep_all = parse_bool("force_keep_all", *v);
  if (const auto* v = get("checkpoint_dir")) s.train.checkpoint_dir = *v;
  if (const auto* v = get("selection_log")) s.selection_log = *v;

  if (const auto* v = get("data.source")) s.data_source = *v;
  if (const auto* v = get("data.target_train")) s.data_target_train = *v;
  if (const auto* v = get("data.target_val")) s.data_target_val = *v;
  if (const auto* v = get("data.target_test")) s.data_target_test = *v;
  if (const auto* v = get("data.embeddings")) s.data_embeddings = *v;

  bool any_synth = false;
  if (const auto* v = get("synth.vocab_size")) {
    s.synth.vocab_size = parse_u64("synth.vocab_size", *v);
    any_synth = true;
  }
  if (const auto* v = get("synth.n_source")) {
    s.synth.n_source = parse_u64("synth.n_source", *v);
    any_synth = true;
  }
  if (const auto* v = get("synth.n_target")) {
    s.synth.n_target = parse_u64("synth.n_target", *v);
    any_synth = true;
  }
  if (const auto* v = get("synth.shift_fraction")) {
    s.synth.shift_fraction = parse_double("synth.shift_fraction", *v);
    any_synth = true;
  }
  if (const auto* v = get("synth.band_fraction")) {
    s.synth.band_fraction = parse_double("synth.band_fraction", *v);
    any_synth = true;
  }
  if (const auto* v = get("synth.seed")) {
    s.synth.seed = parse_u64("synth.seed", *v);
    any_synth = true;
  }

  bool any_files = !s.data_target_train.empty();
  if (any_files && any_synth)
    throw ConfigError("config mixes data.* file paths with synth.* generation keys; use one");
  s.use_synth = !any_files;

  if (s.train.gamma < 0.0 || s.train.gamma > 1.0)
    throw ConfigError("config key \"gamma\": must be in [0, 1]");
  if (s.train.episodes < 1) throw ConfigError("config key \"episodes\": must be >= 1");
  if (s.train.batch_size < 1) throw ConfigError("config key \"batch_size\": must be >= 1");
  if (s.train.lr_transfer <= 0 || s.train.lr_policy <= 0 || s.train.lr_value <= 0)
    throw ConfigError("learning rates must be > 0");
  if (s.synth.shift_fraction < 0.0 || s.synth.shift_fraction > 1.0)
    throw ConfigError("config key \"synth.shift_fraction\": must be in [0, 1]");
  return s;
}

RunSetup load_config(const std::string& path) { return resolve_config(read_config_file(path)); }

std::string effective_config(const RunSetup& s) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
  };
  std::map<std::string, std::string> kv;
  kv["mode"] = mode_name(s.train.mode);
  kv["episodes"] = std::to_string(s.train.episodes);
  kv["batch_size"] = std::to_string(s.train.batch_size);
  kv["pretrain"] = std::to_string(s.train.pretrain_iters);
  kv["lr_transfer"] = num(s.train.lr_transfer);
  kv["lr_policy"] = num(s.train.lr_policy);
  kv["lr_value"] = num(s.train.lr_value);
  kv["gamma"] = num(s.train.gamma);
  kv["dam_hidden"] = std::to_string(s.train.dam_hidden);
  kv["embed_dim"] = std::to_string(s.train.embed_dim);
  kv["policy_hidden"] = std::to_string(s.train.policy_hidden);
  kv["max_len"] = std::to_string(s.train.max_len);
  kv["seed"] = std::to_string(s.train.seed);
  kv["task"] = s.task;
  kv["selector.reward_subsample"] = std::to_string(s.train.reward_subsample);
  kv["force_keep_all"] = s.train.force_keep_all ? "true" : "false";
  if (!s.train.checkpoint_dir.empty()) kv["checkpoint_dir"] = s.train.checkpoint_dir;
  if (!s.selection_log.empty()) kv["selection_log"] = s.selection_log;
  if (s.use_synth) {
    kv["synth.vocab_size"] = std::to_string(s.synth.vocab_size);
    kv["synth.n_source"] = std::to_string(s.synth.n_source);
    kv["synth.n_target"] = std::to_string(s.synth.n_target);
    kv["synth.shift_fraction"] = num(s.synth.shift_fraction);
    kv["synth.band_fraction"] = num(s.synth.band_fraction);
    kv["synth.seed"] = std::to_string(s.synth.seed);
  } else {
    kv["data.source"] = s.data_source;
    kv["data.target_train"] = s.data_target_train;
    kv["data.target_val"] = s.data_target_val;
    kv["data.target_test"] = s.data_target_test;
    if (!s.data_embeddings.empty()) kv["data.embeddings"] = s.data_embeddings;
  }
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string file_header(const RunSetup& setup) {
  std::string out = "# " + tool_banner() + "\n";
  std::istringstream lines(effective_config(setup));
  std::string line;
  while (std::getline(lines, line)) out += "# " + line + "\n";
  return out;
}

}  // namespace rtl
