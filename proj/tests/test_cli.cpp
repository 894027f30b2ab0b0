// End-to-end tests that drive the rtl binary as a subprocess. The harness
// passes the binary's path as the last command-line argument.
#define DOCTEST_CONFIG_IMPLEMENT
#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace {

std::string g_rtl;
std::string g_work;

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  REQUIRE(out.good());
}

RunResult run_cli(const std::string& args) {
  static int n = 0;
  std::string out_path = g_work + "/cap_out_" + std::to_string(n) + ".txt";
  std::string err_path = g_work + "/cap_err_" + std::to_string(n) + ".txt";
  ++n;
  std::string cmd = "'" + g_rtl + "' " + args + " >" + out_path + " 2>" + err_path;
  int rc = std::system(cmd.c_str());
  RunResult r;
  if (rc != -1 && WIFEXITED(rc)) r.code = WEXITSTATUS(rc);
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::string case_dir(const std::string& name) {
  std::string dir = g_work + "/" + name;
  std::filesystem::create_directories(dir);
  return dir;
}

// value following `key ` on its own report line
std::string extract(const std::string& text, const std::string& key) {
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  }
  return "";
}

size_t count_lines(const std::string& path) {
  std::ifstream in(path);
  size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

// synth a small corpus into dir and return a data.* config body pointing at it
std::string make_corpus(const std::string& dir) {
  write_file(dir + "/synth.conf",
             "task = pi\n"
             "synth.vocab_size = 40\n"
             "synth.n_source = 60\n"
             "synth.n_target = 40\n"
             "synth.seed = 7\n");
  RunResult r = run_cli("synth --config " + dir + "/synth.conf --out " + dir);
  REQUIRE(r.code == 0);
  return "data.source = " + dir + "/source.tsv\n" +
         "data.target_train = " + dir + "/target_train.tsv\n" +
         "data.target_val = " + dir + "/target_val.tsv\n" +
         "data.target_test = " + dir + "/target_test.tsv\n";
}

const char* kSmallModel =
    "episodes = 2\n"
    "batch_size = 8\n"
    "pretrain = 2\n"
    "dam_hidden = 6\n"
    "embed_dim = 5\n"
    "policy_hidden = 8\n"
    "max_len = 12\n"
    "seed = 3\n";

}  // namespace

TEST_CASE("version flag prints the tool banner") {
  RunResult r = run_cli("--version");
  CHECK(r.code == 0);
  CHECK(r.out.find("rtl 1.0.0") != std::string::npos);
}

TEST_CASE("running without a subcommand is a usage error") {
  RunResult r = run_cli("");
  CHECK(r.code == 2);
}

TEST_CASE("synth writes corpus files, origin tags, and a manifest") {
  std::string dir = case_dir("synth");
  write_file(dir + "/synth.conf",
             "synth.vocab_size = 40\n"
             "synth.n_source = 60\n"
             "synth.n_target = 40\n"
             "synth.seed = 7\n");
  RunResult r = run_cli("synth --config " + dir + "/synth.conf --out " + dir + "/corpus");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("wrote 60 source pairs") != std::string::npos);

  CHECK(count_lines(dir + "/corpus/source.tsv") == 60);
  CHECK(count_lines(dir + "/corpus/target_train.tsv") == 20);
  CHECK(count_lines(dir + "/corpus/target_val.tsv") == 10);
  CHECK(count_lines(dir + "/corpus/target_test.tsv") == 10);

  // one 0/1 tag per source pair, after the comment header
  std::ifstream tags(dir + "/corpus/source_tags.txt");
  size_t n_tags = 0, shifted = 0;
  for (std::string line; std::getline(tags, line);) {
    if (line.empty() || line[0] == '#') continue;
    REQUIRE((line == "0" || line == "1"));
    ++n_tags;
    shifted += line == "1";
  }
  CHECK(n_tags == 60);
  CHECK(shifted > 0);
  CHECK(shifted < 60);

  std::string manifest = slurp(dir + "/corpus/manifest.txt");
  CHECK(manifest.find("# rtl 1.0.0") != std::string::npos);
  CHECK(manifest.find("source.tsv 60") != std::string::npos);
  CHECK(manifest.find("target_train.tsv 20") != std::string::npos);
  CHECK(manifest.find("shifted_pairs " + std::to_string(shifted)) != std::string::npos);
}

TEST_CASE("training on TSV files is deterministic and leaves inputs untouched") {
  std::string dir = case_dir("train");
  std::string data_keys = make_corpus(dir);
  write_file(dir + "/train.conf", data_keys + "mode = transfer_only\n" + kSmallModel);

  std::string source_before = slurp(dir + "/source.tsv");
  std::string val_before = slurp(dir + "/target_val.tsv");

  RunResult a = run_cli("train --config " + dir + "/train.conf");
  REQUIRE(a.code == 0);
  CHECK(a.out.rfind("# rtl 1.0.0\n", 0) == 0);
  CHECK(a.out.find("# mode = transfer_only\n") != std::string::npos);
  CHECK(a.out.find("episodes 2\n") != std::string::npos);
  CHECK(extract(a.out, "best_episode") != "");
  CHECK(extract(a.out, "final_test_acc") != "");

  RunResult b = run_cli("train --config " + dir + "/train.conf");
  REQUIRE(b.code == 0);
  CHECK(a.out == b.out);  // same config, same bytes

  RunResult c = run_cli("train --config " + dir + "/train.conf --seed 4");
  REQUIRE(c.code == 0);
  CHECK(c.out != a.out);
  CHECK(c.out.find("# seed = 4\n") != std::string::npos);

  CHECK(slurp(dir + "/source.tsv") == source_before);
  CHECK(slurp(dir + "/target_val.tsv") == val_before);
}

TEST_CASE("training can generate its corpus in-process") {
  std::string dir = case_dir("train_synth");
  write_file(dir + "/train.conf",
             std::string("mode = transfer_only\n") + kSmallModel +
                 "synth.vocab_size = 40\n"
                 "synth.n_source = 60\n"
                 "synth.n_target = 40\n"
                 "synth.seed = 9\n");
  RunResult r = run_cli("train --config " + dir + "/train.conf");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("# synth.vocab_size = 40\n") != std::string::npos);
  CHECK(extract(r.out, "final_test_acc") != "");
}

TEST_CASE("unknown config keys are rejected by name") {
  std::string dir = case_dir("bad_key");
  write_file(dir + "/bad.conf", "lr_polcy = 0.001\n");
  RunResult r = run_cli("train --config " + dir + "/bad.conf");
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown config key") != std::string::npos);
  CHECK(r.err.find("lr_polcy") != std::string::npos);
  CHECK(r.err.find(":1:") != std::string::npos);
}

TEST_CASE("missing data files exit with a data error") {
  std::string dir = case_dir("missing");
  write_file(dir + "/train.conf",
             std::string("mode = base_only\n") + kSmallModel +
                 "data.target_train = " + dir + "/nope.tsv\n" +
                 "data.target_val = " + dir + "/nope.tsv\n");
  RunResult r = run_cli("train --config " + dir + "/train.conf");
  CHECK(r.code == 3);
  CHECK(r.err.find("error: data:") != std::string::npos);
  CHECK(r.err.find("nope.tsv") != std::string::npos);
}

TEST_CASE("malformed TSV rows are reported with their line number") {
  std::string dir = case_dir("bad_row");
  write_file(dir + "/good.tsv", "a b\tc d\t1\n");
  write_file(dir + "/bad.tsv", "a b\tc d\t1\na\tb\t2\n");
  write_file(dir + "/train.conf",
             std::string("mode = base_only\n") + kSmallModel +
                 "data.target_train = " + dir + "/bad.tsv\n" +
                 "data.target_val = " + dir + "/good.tsv\n");
  RunResult r = run_cli("train --config " + dir + "/train.conf");
  CHECK(r.code == 3);
  CHECK(r.err.find("bad.tsv:2") != std::string::npos);
}

TEST_CASE("eval on the best checkpoint reproduces the reported test accuracy") {
  std::string dir = case_dir("eval");
  std::string data_keys = make_corpus(dir);
  write_file(dir + "/train.conf", data_keys + "mode = transfer_only\n" + kSmallModel +
                                      "checkpoint_dir = " + dir + "/ckpt\n");
  RunResult t = run_cli("train --config " + dir + "/train.conf");
  REQUIRE(t.code == 0);
  std::string ckpt = extract(t.out, "best_checkpoint");
  REQUIRE(ckpt != "");
  double reported = std::stod(extract(t.out, "final_test_acc"));

  RunResult e = run_cli("eval --checkpoint " + ckpt + " --data " + dir +
                        "/target_test.tsv --domain target");
  REQUIRE(e.code == 0);
  CHECK(e.out.find("# checkpoint = " + ckpt) != std::string::npos);
  CHECK(extract(e.out, "pairs") == "10");
  double evaluated = std::stod(extract(e.out, "accuracy"));
  CHECK(std::abs(evaluated - reported) < 5e-7);  // eval prints 6 decimals
}

TEST_CASE("eval rejects an unknown domain name") {
  RunResult r = run_cli("eval --checkpoint x --data y --domain middle");
  CHECK(r.code == 2);
  CHECK(r.err.find("--domain must be source or target") != std::string::npos);
}

TEST_CASE("analyze reads a selection log and reports domain distances") {
  std::string dir = case_dir("analyze");
  std::string data_keys = make_corpus(dir);
  // force_keep_all makes the final action dump deterministic: everything kept
  write_file(dir + "/train.conf", data_keys + "mode = rtl_actor_critic\n" + kSmallModel +
                                      "force_keep_all = true\n" +
                                      "selection_log = " + dir + "/sel.log\n");
  RunResult t = run_cli("train --config " + dir + "/train.conf");
  REQUIRE(t.code == 0);
  REQUIRE(std::filesystem::exists(dir + "/sel.log"));

  RunResult a = run_cli("analyze --selection-log " + dir + "/sel.log --source " + dir +
                        "/source.tsv --target " + dir + "/target_train.tsv --seed 2");
  REQUIRE(a.code == 0);
  CHECK(a.out.find("# seed = 2") != std::string::npos);
  CHECK(a.out.find("d_origin=") != std::string::npos);
  CHECK(a.out.find("d_select=") != std::string::npos);
  CHECK(a.out.find("d_drop=undefined") != std::string::npos);  // nothing was dropped
  CHECK(a.out.find("drop_empty=1") != std::string::npos);
  CHECK(a.out.find("misaligned_drop_rate=") == std::string::npos);  // no tags given

  RunResult b = run_cli("analyze --selection-log " + dir + "/sel.log --source " + dir +
                        "/source.tsv --target " + dir + "/target_train.tsv --tags " + dir +
                        "/source_tags.txt");
  REQUIRE(b.code == 0);
  CHECK(b.out.find("misaligned_drop_rate=0") != std::string::npos);
  CHECK(b.out.find("aligned_drop_rate=0") != std::string::npos);
}

int main(int argc, char** argv) {
  setenv("RTL_LOG", "0", 1);
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s [doctest options] <path-to-rtl-binary>\n", argv[0]);
    return 1;
  }
  g_rtl = argv[argc - 1];
  g_work = "/tmp/rtl_cli_work";
  std::filesystem::remove_all(g_work);
  std::filesystem::create_directories(g_work);
  return doctest::Context(argc - 1, argv).run();
}
