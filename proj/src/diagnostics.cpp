#include "rtl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "rtl/errors.hpp"
#include "rtl/rng.hpp"

namespace rtl {

TermDistribution term_distribution(const std::vector<SentencePair>& pairs, const Vocab& vocab) {
  if (pairs.empty()) throw DataError("term_distribution: empty pair list");
  std::map<std::string, double> counts;  // ordered: support comes out sorted
  double total = 0.0;
  for (const auto& p : pairs) {
    for (int32_t id : p.tokens1) {
      counts[vocab.word(id)] += 1.0;
      total += 1.0;
    }
    for (int32_t id : p.tokens2) {
      counts[vocab.word(id)] += 1.0;
      total += 1.0;
    }
  }
  TermDistribution d;
  d.support.reserve(counts.size());
  d.probs.reserve(counts.size());
  for (const auto& [term, c] : counts) {
    d.support.push_back(term);
    d.probs.push_back(c / total);
  }
  return d;
}

std::vector<std::string> union_support(const std::vector<const TermDistribution*>& dists) {
  std::set<std::string> terms;
  for (const TermDistribution* d : dists) terms.insert(d->support.begin(), d->support.end());
  return {terms.begin(), terms.end()};
}

TermDistribution align_to(const TermDistribution& d, const std::vector<std::string>& support) {
  TermDistribution out;
  out.support = support;
  out.probs.assign(support.size(), 0.0);
  size_t cursor = 0;  // both lists are sorted
  for (size_t i = 0; i < d.support.size(); ++i) {
    while (cursor < support.size() && support[cursor] < d.support[i]) ++cursor;
    if (cursor == support.size() || support[cursor] != d.support[i])
      throw DataError("align_to: support lacks term \"" + d.support[i] + "\"");
    out.probs[cursor] = d.probs[i];
  }
  return out;
}

double wasserstein_1(const TermDistribution& u, const TermDistribution& v) {
  if (u.support != v.support)
    throw DataError("wasserstein_1: distributions have mismatched supports");
  double cdf_u = 0.0, cdf_v = 0.0, dist = 0.0;
  for (size_t k = 0; k < u.probs.size(); ++k) {
    cdf_u += u.probs[k];
    cdf_v += v.probs[k];
    dist += std::abs(cdf_u - cdf_v);
  }
  return dist;
}

static std::vector<SentencePair> subset(const std::vector<SentencePair>& pairs,
                                        const std::vector<size_t>& idx) {
  std::vector<SentencePair> out;
  out.reserve(idx.size());
  for (size_t i : idx) out.push_back(pairs.at(i));
  return out;
}

DistanceReport selection_report(const std::vector<SentencePair>& source,
                                const std::vector<SentencePair>& target,
                                const SelectionOutcome& sel, const Vocab& vocab, uint64_t seed) {
  if (sel.kept.empty()) throw DataError("selection_report: selected set is empty");
  DistanceReport r;
  r.n_select = sel.kept.size();
  r.n_drop = sel.dropped.size();
  r.n_origin = r.n_select + r.n_drop;
  r.drop_empty = sel.dropped.empty();

  std::vector<size_t> origin_idx = sel.kept;
  origin_idx.insert(origin_idx.end(), sel.dropped.begin(), sel.dropped.end());

  std::vector<SentencePair> origin_pairs = subset(source, origin_idx);
  std::vector<SentencePair> kept_pairs = subset(source, sel.kept);

  Rng rng(sub_seed(seed, "selection_report.random_subset"));
  std::vector<size_t> perm = rng.permutation(origin_idx.size());
  std::vector<size_t> rand_idx;
  rand_idx.reserve(sel.kept.size());
  for (size_t i = 0; i < sel.kept.size(); ++i) rand_idx.push_back(origin_idx[perm[i]]);
  std::vector<SentencePair> rand_pairs = subset(source, rand_idx);

  TermDistribution dt = term_distribution(target, vocab);
  TermDistribution dorigin = term_distribution(origin_pairs, vocab);
  std::vector<std::string> support = union_support({&dt, &dorigin});
  dt = align_to(dt, support);

  r.d_origin = wasserstein_1(dt, align_to(dorigin, support));
  r.d_select = wasserstein_1(dt, align_to(term_distribution(kept_pairs, vocab), support));
  r.d_rand = wasserstein_1(dt, align_to(term_distribution(rand_pairs, vocab), support));
  if (!r.drop_empty) {
    std::vector<SentencePair> dropped_pairs = subset(source, sel.dropped);
    r.d_drop = wasserstein_1(dt, align_to(term_distribution(dropped_pairs, vocab), support));
  }
  return r;
}

static std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

std::string render_distance_report(const DistanceReport& r) {
  std::string out;
  out += "term distances to the target domain (lexicographic support, unit spacing;\n";
  out += "absolute values depend on that ordering convention, only comparisons matter)\n\n";
  char line[96];
  std::snprintf(line, sizeof(line), "%-10s %8s %14s\n", "subset", "pairs", "distance");
  out += line;
  std::snprintf(line, sizeof(line), "%-10s %8zu %14s\n", "origin", r.n_origin,
                fmt(r.d_origin).c_str());
  out += line;
  std::snprintf(line, sizeof(line), "%-10s %8zu %14s\n", "selected", r.n_select,
                fmt(r.d_select).c_str());
  out += line;
  std::snprintf(line, sizeof(line), "%-10s %8zu %14s\n", "dropped", r.n_drop,
                r.drop_empty ? "(empty)" : fmt(r.d_drop).c_str());
  out += line;
  std::snprintf(line, sizeof(line), "%-10s %8zu %14s\n", "random", r.n_select,
                fmt(r.d_rand).c_str());
  out += line;
  out += "\n";
  out += "d_origin=" + fmt(r.d_origin) + "\n";
  out += "d_select=" + fmt(r.d_select) + "\n";
  out += std::string("d_drop=") + (r.drop_empty ? "undefined" : fmt(r.d_drop)) + "\n";
  out += "d_rand=" + fmt(r.d_rand) + "\n";
  out += std::string("drop_empty=") + (r.drop_empty ? "1" : "0") + "\n";
  return out;
}

ShiftScore planted_shift_score(const SelectionOutcome& sel, const std::vector<uint8_t>& tags) {
  if (tags.empty()) throw DataError("planted_shift_score: no origin tags available");
  ShiftScore s;
  size_t dropped_mis = 0, dropped_ali = 0;
  auto tally = [&](const std::vector<size_t>& idx, bool dropped) {
    for (size_t i : idx) {
      if (i >= tags.size()) throw DataError("planted_shift_score: pair index outside tag list");
      if (tags[i]) {
        ++s.n_misaligned;
        if (dropped) ++dropped_mis;
      } else {
        ++s.n_aligned;
        if (dropped) ++dropped_ali;
      }
    }
  };
  tally(sel.kept, false);
  tally(sel.dropped, true);
  if (s.n_misaligned) s.misaligned_drop_rate = static_cast<double>(dropped_mis) / s.n_misaligned;
  if (s.n_aligned) s.aligned_drop_rate = static_cast<double>(dropped_ali) / s.n_aligned;
  return s;
}

std::string render_shift_score(const ShiftScore& s) {
  std::string out;
  out += "misaligned_drop_rate=" + fmt(s.misaligned_drop_rate) + "\n";
  out += "aligned_drop_rate=" + fmt(s.aligned_drop_rate) + "\n";
  out += "n_misaligned=" + std::to_string(s.n_misaligned) + "\n";
  out += "n_aligned=" + std::to_string(s.n_aligned) + "\n";
  return out;
}

}  // namespace rtl
