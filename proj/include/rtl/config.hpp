#pragma once

#include <map>
#include <string>

#include "rtl/data.hpp"
#include "rtl/trainer.hpp"

namespace rtl {

// Everything a run needs, resolved from a config file plus CLI overrides.
struct RunSetup {
  TrainConfig train;
  SynthConfig synth;
  bool use_synth = false;  // true: generate the corpus; false: load the data.* files
  std::string data_source;
  std::string data_target_train;
  std::string data_target_val;
  std::string data_target_test;
  std::string data_embeddings;  // optional GloVe-style file
  std::string selection_log;    // optional output path
  std::string task = "pi";
};

// Parses a flat `key = value` file ('#' starts a comment). Unknown keys and
// malformed values raise ConfigError naming the key.
std::map<std::string, std::string> read_config_file(const std::string& path);

// Same grammar from an in-memory string (e.g. a checkpoint's config echo).
std::map<std::string, std::string> read_config_string(const std::string& text);

// Applies defaults, task presets, and validation on top of the raw keys.
RunSetup resolve_config(const std::map<std::string, std::string>& raw);

RunSetup load_config(const std::string& path);

// The resolved configuration as sorted `key = value` lines; stamped into
// every output artifact so runs are self-describing.
std::string effective_config(const RunSetup& setup);

// effective_config prefixed as '#' comment lines, with the tool banner.
std::string file_header(const RunSetup& setup);

}  // namespace rtl
