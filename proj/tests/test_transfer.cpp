#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "rtl/errors.hpp"
#include "rtl/transfer.hpp"

using namespace rtl;

namespace {

struct Fixture {
  Vocab vocab;
  TransferModel model;
  std::vector<SentencePair> pairs;

  explicit Fixture(uint64_t seed = 1, size_t hidden = 6, size_t embed = 5)
      : model({hidden, embed}, 14) {  // 12 tokens + pad + unk
    for (int i = 0; i < 12; ++i) vocab.token_id("t" + std::to_string(i));
    REQUIRE(vocab.size() == 14);
    model.init_params(seed);
    Rng rng(seed + 100);
    for (int i = 0; i < 8; ++i) {
      SentencePair p;
      size_t l1 = 1 + rng.next_index(3), l2 = 1 + rng.next_index(3);
      for (size_t k = 0; k < l1; ++k) p.tokens1.push_back(2 + int32_t(rng.next_index(12)));
      for (size_t k = 0; k < l2; ++k) p.tokens2.push_back(2 + int32_t(rng.next_index(12)));
      p.label = int(i % 2);
      pairs.push_back(p);
    }
  }

  PairBatch batch(std::vector<size_t> idx, size_t width = 4) const {
    return make_batch(pairs, Domain::target, idx, width);
  }
};

bool stores_equal(const ParamStore& a, const ParamStore& b) {
  if (a.names() != b.names()) return false;
  for (const auto& name : a.names()) {
    const Param& pa = a.at(name);
    const Param& pb = b.at(name);
    if (pa.value.data != pb.value.data || pa.m.data != pb.m.data || pa.v.data != pb.v.data ||
        pa.step != pb.step)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("ranking score matches the worked example") {
  double auc = 0.0;
  REQUIRE(auc_score({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}, &auc));
  CHECK(auc == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("ranking score endpoints and ties") {
  double auc = 0.0;
  REQUIRE(auc_score({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}, &auc));
  CHECK(auc == 1.0);
  REQUIRE(auc_score({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}, &auc));
  CHECK(auc == 0.0);
  REQUIRE(auc_score({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}, &auc));
  CHECK(auc == 0.5);
  // one class only: undefined
  CHECK(!auc_score({0.1, 0.2}, {1, 1}, &auc));
  CHECK(!auc_score({0.1, 0.2}, {0, 0}, &auc));
}

TEST_CASE("ranking score agrees exactly with the pairwise oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    size_t n = 2 + rng.next_index(40);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (size_t i = 0; i < n; ++i) {
      // quantized scores force plenty of ties
      scores[i] = double(rng.next_index(8)) / 8.0;
      labels[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    double lib = 0.0, ref = 0.0;
    bool lib_ok = auc_score(scores, labels, &lib);
    bool ref_ok = oracles::pairwise_rank_score(scores, labels, &ref);
    REQUIRE(lib_ok == ref_ok);
    if (lib_ok) CHECK(lib == ref);  // exact equality, both use integer counts
  }
}

TEST_CASE("zero heads emit the uniform distribution") {
  Fixture fx;
  for (const auto& name : fx.model.params().names("head.")) fx.model.params().at(name).value.fill(0.0);
  Tensor p = fx.model.classify(fx.batch({0, 1, 2}), Domain::target);
  REQUIRE(p.shape == std::vector<size_t>{3, 2});
  for (double v : p.data) CHECK(v == 0.5);
  // uniform probabilities mean the loss is exactly ln 2
  CHECK(fx.model.domain_loss(fx.batch({0, 1, 2}), Domain::target) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("class probabilities are rows of a simplex") {
  Fixture fx(3);
  Tensor p = fx.model.classify(fx.batch({0, 1, 2, 3}), Domain::source);
  for (size_t r = 0; r < 4; ++r) {
    CHECK(p.at(r, 0) + p.at(r, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.at(r, 0) >= 0.0);
    CHECK(p.at(r, 1) >= 0.0);
  }
}

TEST_CASE("the two domain heads are distinct functions") {
  Fixture fx(4);
  PairBatch b = fx.batch({0, 1});
  Tensor ps = fx.model.classify(b, Domain::source);
  Tensor pt = fx.model.classify(b, Domain::target);
  bool differ = false;
  for (size_t i = 0; i < ps.size(); ++i) differ |= ps[i] != pt[i];
  CHECK(differ);  // independently initialized heads
}

TEST_CASE("one update step descends the batch loss for almost every seed") {
  int descended = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Fixture fx(seed);
    PairBatch b = fx.batch({0, 1, 2, 3, 4, 5, 6, 7});
    double before = fx.model.update_domain(b, Domain::target, 0.001);
    double after = fx.model.domain_loss(b, Domain::target);
    if (after < before) ++descended;
  }
  CHECK(descended >= 19);
}

TEST_CASE("updating one domain never touches the other head") {
  Fixture fx(5);
  Tensor tgt_w = fx.model.params().at("head.target.W0").value;
  Tensor tgt_b = fx.model.params().at("head.target.b0").value;
  uint64_t tgt_step = fx.model.params().at("head.target.W0").step;
  fx.model.update_domain(fx.batch({0, 1, 2}, 4), Domain::source, 0.01);
  CHECK(fx.model.params().at("head.target.W0").value.data == tgt_w.data);  // bitwise
  CHECK(fx.model.params().at("head.target.b0").value.data == tgt_b.data);
  CHECK(fx.model.params().at("head.target.W0").step == tgt_step);
  // moments of the untouched head never decay either
  CHECK(fx.model.params().at("head.target.W0").m.data ==
        std::vector<double>(tgt_w.size(), 0.0));

  Tensor src_w = fx.model.params().at("head.source.W0").value;
  fx.model.update_domain(fx.batch({0, 1, 2}, 4), Domain::target, 0.01);
  CHECK(fx.model.params().at("head.source.W0").value.data == src_w.data);
}

TEST_CASE("the encoder accumulates optimizer steps from both domains") {
  Fixture fx(6);
  fx.model.update_domain(fx.batch({0, 1}), Domain::source, 0.001);
  fx.model.update_domain(fx.batch({2, 3}), Domain::target, 0.001);
  CHECK(fx.model.params().at("encoder.F.W0").step == 2);
  CHECK(fx.model.params().at("embeddings").step == 2);
  CHECK(fx.model.params().at("head.source.W0").step == 1);
  CHECK(fx.model.params().at("head.target.W0").step == 1);
}

TEST_CASE("evaluation reports accuracy and ranking on known pairs") {
  Fixture fx(7);
  EvalResult r = fx.model.evaluate(fx.pairs, Domain::target, 4);
  CHECK(r.n == 8);
  CHECK(r.accuracy >= 0.0);
  CHECK(r.accuracy <= 1.0);
  CHECK(r.auc_defined);  // labels alternate, both classes present
  CHECK(r.auc >= 0.0);
  CHECK(r.auc <= 1.0);
  // single-class evaluation leaves the ranking undefined
  std::vector<SentencePair> ones;
  for (const auto& p : fx.pairs)
    if (p.label == 1) ones.push_back(p);
  EvalResult r1 = fx.model.evaluate(ones, Domain::target, 4);
  CHECK(!r1.auc_defined);
}

TEST_CASE("evaluation is independent of the eval batch size") {
  Fixture fx(8);
  EvalResult a = fx.model.evaluate(fx.pairs, Domain::target, 4, 64);
  EvalResult b = fx.model.evaluate(fx.pairs, Domain::target, 4, 3);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.auc == b.auc);
}

TEST_CASE("full model gradients match finite differences") {
  Fixture fx(9, 4, 3);
  // Zero-initialized biases put relu pre-activations exactly on the kink,
  // where central differences and subgradients legitimately disagree. Nudge
  // everything to a generic point before checking.
  Rng fuzz(1234);
  for (auto& [name, p] : fx.model.params().entries())
    for (auto& v : p.value.data) v += fuzz.uniform(-0.03, 0.03);
  PairBatch b = fx.batch({0, 1, 2, 3}, 3);

  auto eval_domain = [&](Domain d) {
    return [&fx, b, d](bool with_grad) {
      ParamStore& store = fx.model.params();
      if (!with_grad) {
        Tensor probs = fx.model.classify(b, d);
        return cross_entropy(probs, b.labels);
      }
      PairEncoding enc;
      FeedForwardCache head_cache;
      Tensor probs = fx.model.classify(b, d, &enc, &head_cache);
      double loss = cross_entropy(probs, b.labels);
      Tensor dprobs = cross_entropy_backward(probs, b.labels);
      Tensor dz = feed_forward_backward(store, fx.model.head_spec(d), head_cache, dprobs);
      encode_backward(store, fx.model.dam(), b, enc, dz);
      return loss;
    };
  };

  auto src = eval_domain(Domain::source);
  for (const char* name :
       {"embeddings", "encoder.F.W0", "encoder.F.b0", "encoder.F.W1", "encoder.F.b1",
        "encoder.G.W0", "encoder.G.b0", "encoder.G.W1", "encoder.G.b1", "head.source.W0",
        "head.source.b0"}) {
    CHECK_MESSAGE(finite_diff_check(fx.model.params(), name, src) < 1e-4, name);
  }
  auto tgt = eval_domain(Domain::target);
  for (const char* name : {"head.target.W0", "head.target.b0", "encoder.G.W1", "embeddings"}) {
    CHECK_MESSAGE(finite_diff_check(fx.model.params(), name, tgt) < 1e-4, name);
  }
}

TEST_CASE("checkpoints round trip bitwise") {
  Fixture fx(10);
  // give the optimizer state something nonzero to preserve
  fx.model.update_domain(fx.batch({0, 1, 2, 3}), Domain::target, 0.01);
  fx.model.update_domain(fx.batch({4, 5}), Domain::source, 0.01);

  std::string path = "/tmp/rtl_test_ckpt.bin";
  save_checkpoint(path, fx.model.params(), fx.vocab, "mode = test\nseed = 10\n");
  Checkpoint ck = load_checkpoint(path);
  CHECK(stores_equal(ck.store, fx.model.params()));
  CHECK(ck.config_echo == "mode = test\nseed = 10\n");
  CHECK(ck.vocab_words == fx.vocab.words());

  // a reloaded model evaluates identically, bit for bit
  EvalResult before = fx.model.evaluate(fx.pairs, Domain::target, 4);
  TransferModel twin({fx.model.dam().hidden, fx.model.dam().embed_dim}, fx.vocab.size());
  twin.set_params(std::move(ck.store));
  EvalResult after = twin.evaluate(fx.pairs, Domain::target, 4);
  CHECK(before.accuracy == after.accuracy);
  CHECK(before.auc == after.auc);

  Vocab rebuilt = vocab_from_words(ck.vocab_words);
  CHECK(rebuilt.size() == fx.vocab.size());
  CHECK(rebuilt.frozen());
  CHECK(rebuilt.lookup("t3") == fx.vocab.lookup("t3"));
}

TEST_CASE("corrupted checkpoints are refused") {
  Fixture fx(11);
  std::string path = "/tmp/rtl_test_ckpt_bad.bin";
  save_checkpoint(path, fx.model.params(), fx.vocab, "");

  // flip one payload byte: the checksum must catch it
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    char c;
    f.seekg(40);
    f.get(c);
    f.seekp(40);
    f.put(static_cast<char>(c ^ 0x01));
  }
  CHECK_THROWS_AS(load_checkpoint(path), DataError);

  // wrong magic
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOTACKPTxxxxxxxxxxxxxxxxxxxxxxxxxxxx";
  }
  CHECK_THROWS_AS(load_checkpoint(path), DataError);

  // truncated file
  save_checkpoint(path, fx.model.params(), fx.vocab, "");
  {
    std::ifstream in(path, std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(path, std::ios::binary);
    out << all.substr(0, all.size() / 2);
  }
  CHECK_THROWS_AS(load_checkpoint(path), DataError);

  CHECK_THROWS_AS(load_checkpoint("/tmp/rtl_test_ckpt_missing.bin"), DataError);
}

TEST_CASE("set_params validates shape compatibility") {
  Fixture fx(12);
  std::string path = "/tmp/rtl_test_ckpt_shape.bin";
  save_checkpoint(path, fx.model.params(), fx.vocab, "");
  Checkpoint ck = load_checkpoint(path);
  // a model with a different hidden width must refuse these tensors
  TransferModel other({fx.model.dam().hidden + 1, fx.model.dam().embed_dim}, fx.vocab.size());
  CHECK_THROWS_AS(other.set_params(std::move(ck.store)), DataError);
  // an empty store is refused outright
  TransferModel same({fx.model.dam().hidden, fx.model.dam().embed_dim}, fx.vocab.size());
  ParamStore empty;
  CHECK_THROWS_AS(same.set_params(std::move(empty)), DataError);
}

TEST_CASE("init_params accepts pretrained embeddings and checks their shape") {
  Vocab v;
  for (int i = 0; i < 5; ++i) v.token_id("w" + std::to_string(i));
  TransferModel m({4, 3}, v.size());
  Tensor emb({7, 3});
  emb.at(2, 0) = 0.25;
  m.init_params(1, &emb);
  CHECK(m.params().at("embeddings").value.at(2, 0) == 0.25);
  TransferModel bad({4, 3}, v.size());
  Tensor wrong({6, 3});
  CHECK_THROWS_AS(bad.init_params(1, &wrong), ConfigError);
}
