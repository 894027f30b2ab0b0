// Independent reference implementations used to cross-check library results.
// Deliberately written with different algorithms than the library code:
// transport distance via successive-shortest-path min-cost flow, ranking
// quality via the brute-force O(P*N) pair count.
#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace oracles {

// Min-cost flow on a bipartite transport network: supply node per u-atom,
// demand node per v-atom, cost |i - j| between positions i and j (unit
// spacing). Returns the minimum total cost of moving all mass from u to v.
// Supports of size <= ~30 keep this instant.
inline double transport_min_cost(const std::vector<double>& u, const std::vector<double>& v) {
  assert(u.size() == v.size());
  const size_t k = u.size();
  // Nodes: 0 = source, 1..k = u atoms, k+1..2k = v atoms, 2k+1 = sink.
  const size_t n_nodes = 2 * k + 2;
  const size_t src = 0, snk = 2 * k + 1;
  struct Edge {
    size_t to;
    double cap;
    double cost;
    size_t rev;  // index of the reverse edge in graph[to]
  };
  std::vector<std::vector<Edge>> graph(n_nodes);
  auto add_edge = [&](size_t a, size_t b, double cap, double cost) {
    graph[a].push_back({b, cap, cost, graph[b].size()});
    graph[b].push_back({a, 0.0, -cost, graph[a].size() - 1});
  };
  double total_supply = 0.0;
  for (size_t i = 0; i < k; ++i) {
    if (u[i] > 0.0) {
      add_edge(src, 1 + i, u[i], 0.0);
      total_supply += u[i];
    }
    if (v[i] > 0.0) add_edge(k + 1 + i, snk, v[i], 0.0);
  }
  for (size_t i = 0; i < k; ++i) {
    if (u[i] <= 0.0) continue;
    for (size_t j = 0; j < k; ++j) {
      if (v[j] <= 0.0) continue;
      double cost = i > j ? double(i - j) : double(j - i);
      add_edge(1 + i, k + 1 + j, std::numeric_limits<double>::infinity(), cost);
    }
  }

  double total_cost = 0.0;
  double remaining = total_supply;
  const double kEps = 1e-15;
  while (remaining > kEps) {
    // Bellman-Ford shortest path by cost on the residual graph.
    std::vector<double> dist(n_nodes, std::numeric_limits<double>::infinity());
    std::vector<size_t> prev_node(n_nodes, SIZE_MAX), prev_edge(n_nodes, SIZE_MAX);
    dist[src] = 0.0;
    for (size_t round = 0; round + 1 < n_nodes; ++round) {
      bool changed = false;
      for (size_t a = 0; a < n_nodes; ++a) {
        if (!std::isfinite(dist[a])) continue;
        for (size_t ei = 0; ei < graph[a].size(); ++ei) {
          const Edge& e = graph[a][ei];
          if (e.cap <= kEps) continue;
          if (dist[a] + e.cost < dist[e.to] - 1e-18) {
            dist[e.to] = dist[a] + e.cost;
            prev_node[e.to] = a;
            prev_edge[e.to] = ei;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (!std::isfinite(dist[snk])) break;  // no residual path; marginals were unbalanced
    double push = remaining;
    for (size_t at = snk; at != src; at = prev_node[at])
      push = std::min(push, graph[prev_node[at]][prev_edge[at]].cap);
    for (size_t at = snk; at != src; at = prev_node[at]) {
      Edge& e = graph[prev_node[at]][prev_edge[at]];
      e.cap -= push;
      graph[e.to][e.rev].cap += push;
      total_cost += push * e.cost;
    }
    remaining -= push;
  }
  return total_cost;
}

// Brute-force ranking quality: every positive/negative pair inspected once.
// Final arithmetic written the same way as the library so agreement can be
// checked for exact equality, while the counting path is entirely different.
inline bool pairwise_rank_score(const std::vector<double>& scores,
                                const std::vector<int>& labels, double* out) {
  unsigned long long pos = 0, neg = 0, greater = 0, equal = 0;
  for (int y : labels) (y == 1 ? pos : neg)++;
  if (pos == 0 || neg == 0) return false;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      if (scores[i] > scores[j]) ++greater;
      else if (scores[i] == scores[j]) ++equal;
    }
  }
  *out = (static_cast<double>(greater) + 0.5 * static_cast<double>(equal)) /
         (static_cast<double>(pos) * static_cast<double>(neg));
  return true;
}

}  // namespace oracles
