#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtl/data.hpp"

namespace rtl {

// Term-frequency distribution over a lexicographically ordered support.
struct TermDistribution {
  std::vector<std::string> support;
  std::vector<double> probs;
};

// Counts every token occurrence in both sentences of every pair and
// normalizes. Support is the sorted set of terms that occur.
TermDistribution term_distribution(const std::vector<SentencePair>& pairs, const Vocab& vocab);

// Lexicographic union of several supports.
std::vector<std::string> union_support(const std::vector<const TermDistribution*>& dists);

// Re-expresses a distribution on a larger support (missing terms get 0).
// The target support must contain every term the distribution uses.
TermDistribution align_to(const TermDistribution& d, const std::vector<std::string>& support);

// Wasserstein-1 between two distributions on the same ordered support with
// unit spacing between adjacent positions: sum over k of |CDF_u(k) - CDF_v(k)|.
double wasserstein_1(const TermDistribution& u, const TermDistribution& v);

// Which source pairs the selector kept and dropped (most recent decision
// per pair), by index into the source pair list.
struct SelectionOutcome {
  std::vector<size_t> kept;
  std::vector<size_t> dropped;
};

struct DistanceReport {
  double d_origin = 0.0;  // target vs all pairs the selector saw
  double d_select = 0.0;  // target vs kept pairs
  double d_drop = 0.0;    // target vs dropped pairs (see drop_empty)
  double d_rand = 0.0;    // target vs a seeded random subset of size |kept|
  size_t n_origin = 0, n_select = 0, n_drop = 0;
  bool drop_empty = false;  // keep-all run: d_drop is meaningless
};

// Distance analysis of a selection against the target domain. All four
// distances use one shared support (union of target and origin terms) so
// they are mutually comparable. Throws when the kept set is empty.
DistanceReport selection_report(const std::vector<SentencePair>& source,
                                const std::vector<SentencePair>& target,
                                const SelectionOutcome& sel, const Vocab& vocab, uint64_t seed);

// Human-readable table plus machine-readable name=value lines.
std::string render_distance_report(const DistanceReport& r);

struct ShiftScore {
  double misaligned_drop_rate = 0.0;
  double aligned_drop_rate = 0.0;
  size_t n_misaligned = 0, n_aligned = 0;  // pairs covered by the selection
};

// Drop rates split by the synthetic generator's origin tags (1 = shifted
// population). Only meaningful on generated corpora.
ShiftScore planted_shift_score(const SelectionOutcome& sel, const std::vector<uint8_t>& tags);

std::string render_shift_score(const ShiftScore& s);

}  // namespace rtl
