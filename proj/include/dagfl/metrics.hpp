#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dagfl/dag.hpp"
#include "dagfl/errors.hpp"
#include "dagfl/random.hpp"

namespace dagfl {

// Weighted undirected graph of clients. Edge weights count direct approvals
// between the two clients' transactions; self-approvals are kept as
// self-loops.
class ClientGraph {
 public:
  void add_node(int node) { nodes_.insert(node); }

  void add_edge_weight(int a, int b, double weight) {
    nodes_.insert(a);
    nodes_.insert(b);
    const auto key = a <= b ? std::pair{a, b} : std::pair{b, a};
    weights_[key] += weight;
  }

  double weight(int a, int b) const {
    const auto key = a <= b ? std::pair{a, b} : std::pair{b, a};
    const auto it = weights_.find(key);
    return it == weights_.end() ? 0.0 : it->second;
  }

  const std::set<int>& nodes() const { return nodes_; }
  const std::map<std::pair<int, int>, double>& edges() const { return weights_; }

  bool has_edges() const { return !weights_.empty(); }

  // Sum of all edge weights, self-loops counted once.
  double total_weight() const {
    double total = 0.0;
    for (const auto& [key, w] : weights_) total += w;
    return total;
  }

  // Weighted degree; a self-loop contributes twice, as usual for modularity.
  double degree(int node) const {
    double d = 0.0;
    for (const auto& [key, w] : weights_) {
      if (key.first == node) d += w;
      if (key.second == node) d += w;
    }
    return d;
  }

 private:
  std::set<int> nodes_;
  std::map<std::pair<int, int>, double> weights_;
};

struct Partition {
  std::map<int, int> assignment;  // node -> community id

  int community(int node) const { return assignment.at(node); }

  std::size_t num_communities() const {
    std::set<int> ids;
    for (const auto& [node, c] : assignment) ids.insert(c);
    return ids.size();
  }
};

// G_clients: for every non-genesis transaction and each of its parents
// (genesis parents skipped), one approval edge between the two publishers.
// Duplicate parents count twice.
inline ClientGraph build_client_graph(const Dag& dag) {
  ClientGraph graph;
  for (const Transaction& t : dag) {
    if (t.is_genesis()) continue;
    graph.add_node(t.publisher);
    for (TransactionId p : t.parents) {
      const Transaction& parent = dag.tx(p);
      if (parent.is_genesis()) continue;
      graph.add_edge_weight(t.publisher, parent.publisher, 1.0);
    }
  }
  return graph;
}

// Newman weighted modularity of a partition.
inline double modularity(const ClientGraph& graph, const Partition& partition) {
  if (!graph.has_edges()) throw EmptyGraph("modularity: graph has no edges");
  const double two_w = 2.0 * graph.total_weight();
  std::map<int, double> sigma_in;   // sum over ordered intra-community pairs
  std::map<int, double> sigma_tot;  // sum of member degrees
  for (int node : graph.nodes()) {
    sigma_tot[partition.community(node)] += graph.degree(node);
  }
  for (const auto& [key, w] : graph.edges()) {
    const int ca = partition.community(key.first);
    const int cb = partition.community(key.second);
    if (ca != cb) continue;
    // Ordered-pair sum: a non-self edge appears as (a,b) and (b,a); a
    // self-loop counts twice in the degree convention used here.
    sigma_in[ca] += 2.0 * w;
  }
  double q = 0.0;
  for (const auto& [community, tot] : sigma_tot) {
    const auto in_it = sigma_in.find(community);
    const double in = in_it == sigma_in.end() ? 0.0 : in_it->second;
    const double frac = tot / two_w;
    q += in / two_w - frac * frac;
  }
  return q;
}

namespace detail {

// Working graph for Louvain levels: contiguous node ids, adjacency lists,
// self-loop weights kept separate.
struct LouvainGraph {
  std::vector<std::vector<std::pair<int, double>>> adjacency;  // no self edges
  std::vector<double> self_loops;
  double total_weight = 0.0;  // self-loops counted once

  int size() const { return static_cast<int>(adjacency.size()); }
};

struct LouvainLevelResult {
  std::vector<int> community;  // node -> community, renumbered 0..k-1
  bool moved = false;
};

// One phase of local moving: visit nodes in a fixed order and move each to
// its best-gain community (re-join, isolate, or a neighboring community).
// Repeats sweeps until a full sweep makes no move.
inline LouvainLevelResult louvain_one_level(const LouvainGraph& graph,
                                            int rotation, Rng* shuffle_rng,
                                            const std::vector<int>* initial = nullptr) {
  const int n = graph.size();
  std::vector<int> community(static_cast<std::size_t>(n));
  std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
  std::vector<double> sigma_tot(static_cast<std::size_t>(n), 0.0);
  std::vector<int> members(static_cast<std::size_t>(n), 0);
  for (int v = 0; v < n; ++v) {
    community[static_cast<std::size_t>(v)] =
        initial != nullptr ? (*initial)[static_cast<std::size_t>(v)] : v;
    double d = 2.0 * graph.self_loops[static_cast<std::size_t>(v)];
    for (const auto& [u, w] : graph.adjacency[static_cast<std::size_t>(v)]) d += w;
    degree[static_cast<std::size_t>(v)] = d;
  }
  for (int v = 0; v < n; ++v) {
    const int c = community[static_cast<std::size_t>(v)];
    sigma_tot[static_cast<std::size_t>(c)] += degree[static_cast<std::size_t>(v)];
    ++members[static_cast<std::size_t>(c)];
  }
  const double two_m = 2.0 * graph.total_weight;

  // Ascending ids rotated by `rotation`; an explicit rng shuffles instead.
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    order[static_cast<std::size_t>(v)] = (v + rotation) % n;
  }
  if (shuffle_rng != nullptr) shuffle_rng->shuffle(order);

  LouvainLevelResult result;
  bool any_move = true;
  std::map<int, double> weight_to_community;
  while (any_move) {
    any_move = false;
    for (int v : order) {
      const int old_community = community[static_cast<std::size_t>(v)];
      weight_to_community.clear();
      for (const auto& [u, w] : graph.adjacency[static_cast<std::size_t>(v)]) {
        weight_to_community[community[static_cast<std::size_t>(u)]] += w;
      }
      // Detach v; gains below are the exact modularity deltas of inserting
      // the detached node into a community (staying isolated scores 0).
      sigma_tot[static_cast<std::size_t>(old_community)] -=
          degree[static_cast<std::size_t>(v)];
      --members[static_cast<std::size_t>(old_community)];
      const double k_v = degree[static_cast<std::size_t>(v)];

      auto gain = [&](int c) {
        const auto it = weight_to_community.find(c);
        const double k_in = it == weight_to_community.end() ? 0.0 : it->second;
        return k_in / graph.total_weight -
               sigma_tot[static_cast<std::size_t>(c)] * k_v / (two_m * graph.total_weight);
      };

      // Candidates in deterministic order: re-join the old community,
      // isolate, or join the best-gain neighboring community.
      double best_gain = gain(old_community);
      int target = old_community;
      if (best_gain < -1e-12) {
        // Isolation beats re-joining: claim the lowest empty community id.
        for (int c = 0; c < n; ++c) {
          if (members[static_cast<std::size_t>(c)] == 0) {
            best_gain = 0.0;
            target = c;
            break;
          }
        }
      }
      for (const auto& [c, w] : weight_to_community) {
        if (c == old_community) continue;
        if (gain(c) > best_gain + 1e-12) {
          best_gain = gain(c);
          target = c;
        }
      }
      sigma_tot[static_cast<std::size_t>(target)] += degree[static_cast<std::size_t>(v)];
      ++members[static_cast<std::size_t>(target)];
      community[static_cast<std::size_t>(v)] = target;
      if (target != old_community) {
        any_move = true;
        result.moved = true;
      }
    }
  }

  // Renumber communities 0..k-1 in order of first appearance.
  std::map<int, int> renumber;
  for (int v = 0; v < n; ++v) {
    const int c = community[static_cast<std::size_t>(v)];
    const auto [it, inserted] = renumber.emplace(c, static_cast<int>(renumber.size()));
    community[static_cast<std::size_t>(v)] = it->second;
  }
  result.community = std::move(community);
  return result;
}

// Collapse communities into supernodes; intra-community weight becomes a
// self-loop.
inline LouvainGraph aggregate(const LouvainGraph& graph, const std::vector<int>& community,
                              int num_communities) {
  LouvainGraph result;
  result.adjacency.resize(static_cast<std::size_t>(num_communities));
  result.self_loops.resize(static_cast<std::size_t>(num_communities), 0.0);
  result.total_weight = graph.total_weight;
  std::map<std::pair<int, int>, double> edges;
  for (int v = 0; v < graph.size(); ++v) {
    const int cv = community[static_cast<std::size_t>(v)];
    result.self_loops[static_cast<std::size_t>(cv)] +=
        graph.self_loops[static_cast<std::size_t>(v)];
    for (const auto& [u, w] : graph.adjacency[static_cast<std::size_t>(v)]) {
      if (u < v) continue;  // each undirected edge once
      const int cu = community[static_cast<std::size_t>(u)];
      if (cu == cv) {
        result.self_loops[static_cast<std::size_t>(cv)] += w;
      } else {
        const auto key = cv <= cu ? std::pair{cv, cu} : std::pair{cu, cv};
        edges[key] += w;
      }
    }
  }
  for (const auto& [key, w] : edges) {
    result.adjacency[static_cast<std::size_t>(key.first)].emplace_back(key.second, w);
    result.adjacency[static_cast<std::size_t>(key.second)].emplace_back(key.first, w);
  }
  return result;
}

// Alternates node-level local moving (from the current assignment) with a
// supernode pass on the aggregated graph until neither improves. The node
// pass restores the single-node mobility that plain aggregation freezes;
// every accepted move strictly raises modularity, so the loop terminates.
// Returns the community per original contiguous index.
inline std::vector<int> louvain_levels(const LouvainGraph& original, int rotation,
                                       Rng* shuffle_rng) {
  const int n = original.size();
  std::vector<int> assignment(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    assignment[i] = static_cast<int>(i);
  }
  if (original.total_weight <= 0.0) return assignment;

  for (;;) {
    bool improved = false;

    const LouvainLevelResult node_pass =
        louvain_one_level(original, rotation % n, shuffle_rng, &assignment);
    improved = improved || node_pass.moved;
    assignment = node_pass.community;

    const int num_communities =
        1 + *std::max_element(assignment.begin(), assignment.end());
    if (num_communities > 1) {
      const LouvainGraph aggregated = aggregate(original, assignment, num_communities);
      const LouvainLevelResult super_pass =
          louvain_one_level(aggregated, rotation % num_communities, shuffle_rng);
      if (super_pass.moved) {
        improved = true;
        for (int& c : assignment) {
          c = super_pass.community[static_cast<std::size_t>(c)];
        }
      }
    }
    if (!improved) break;
  }
  return assignment;
}

// Modularity of a contiguous-index assignment over a working graph.
inline double modularity_of(const LouvainGraph& graph, const std::vector<int>& community) {
  const double two_m = 2.0 * graph.total_weight;
  std::vector<double> sigma_in(community.size(), 0.0);
  std::vector<double> sigma_tot(community.size(), 0.0);
  for (int v = 0; v < graph.size(); ++v) {
    const int c = community[static_cast<std::size_t>(v)];
    double degree = 2.0 * graph.self_loops[static_cast<std::size_t>(v)];
    sigma_in[static_cast<std::size_t>(c)] +=
        2.0 * graph.self_loops[static_cast<std::size_t>(v)];
    for (const auto& [u, w] : graph.adjacency[static_cast<std::size_t>(v)]) {
      degree += w;
      if (community[static_cast<std::size_t>(u)] == c) {
        sigma_in[static_cast<std::size_t>(c)] += w;
      }
    }
    sigma_tot[static_cast<std::size_t>(c)] += degree;
  }
  double q = 0.0;
  for (std::size_t c = 0; c < community.size(); ++c) {
    const double frac = sigma_tot[c] / two_m;
    q += sigma_in[c] / two_m - frac * frac;
  }
  return q;
}

// One Kernighan-Lin refinement round: greedily apply the best single-node
// move (even when it loses modularity), lock the node, and keep the best
// prefix of the move sequence. Escapes local optima that need coordinated
// multi-node moves. When forced_first >= 0 the chain must start with that
// node's best move (the free greedy opener can lock a node a better chain
// needs). Returns true when the assignment improved.
inline bool kl_refine_once(const LouvainGraph& graph, std::vector<int>& community,
                           int forced_first = -1) {
  const int n = graph.size();
  if (n < 2 || graph.total_weight <= 0.0) return false;
  const double two_m = 2.0 * graph.total_weight;

  std::vector<int> work = community;
  std::vector<double> sigma_tot(static_cast<std::size_t>(n), 0.0);
  std::vector<int> members(static_cast<std::size_t>(n), 0);
  std::vector<double> degree(static_cast<std::size_t>(n), 0.0);
  for (int v = 0; v < n; ++v) {
    double d = 2.0 * graph.self_loops[static_cast<std::size_t>(v)];
    for (const auto& [u, w] : graph.adjacency[static_cast<std::size_t>(v)]) d += w;
    degree[static_cast<std::size_t>(v)] = d;
    const int c = work[static_cast<std::size_t>(v)];
    sigma_tot[static_cast<std::size_t>(c)] += d;
    ++members[static_cast<std::size_t>(c)];
  }

  struct Move {
    int node;
    int target;
  };
  std::vector<Move> moves;
  std::vector<double> cumulative;
  std::vector<char> locked(static_cast<std::size_t>(n), 0);
  std::map<int, double> weight_to_community;
  double cum = 0.0;

  for (int step = 0; step < n; ++step) {
    double best_delta = 0.0;
    int best_node = -1;
    int best_target = -1;
    bool found = false;
    for (int v = 0; v < n; ++v) {
      if (locked[static_cast<std::size_t>(v)]) continue;
      if (step == 0 && forced_first >= 0 && v != forced_first) continue;
      const int old_community = work[static_cast<std::size_t>(v)];
      weight_to_community.clear();
      for (const auto& [u, w] : graph.adjacency[static_cast<std::size_t>(v)]) {
        weight_to_community[work[static_cast<std::size_t>(u)]] += w;
      }
      const double k_v = degree[static_cast<std::size_t>(v)];
      const double sigma_old =
          sigma_tot[static_cast<std::size_t>(old_community)] - k_v;
      auto gain = [&](int c, double sigma) {
        const auto it = weight_to_community.find(c);
        const double k_in = it == weight_to_community.end() ? 0.0 : it->second;
        return k_in / graph.total_weight - sigma * k_v / (two_m * graph.total_weight);
      };
      const double old_gain = gain(old_community, sigma_old);

      auto consider = [&](int target, double delta) {
        if (!found || delta > best_delta + 1e-12) {
          best_delta = delta;
          best_node = v;
          best_target = target;
          found = true;
        }
      };
      if (members[static_cast<std::size_t>(old_community)] > 1) {
        for (int c = 0; c < n; ++c) {
          if (members[static_cast<std::size_t>(c)] == 0) {
            consider(c, -old_gain);  // isolation
            break;
          }
        }
      }
      for (const auto& [c, w] : weight_to_community) {
        if (c == old_community) continue;
        consider(c, gain(c, sigma_tot[static_cast<std::size_t>(c)]) - old_gain);
      }
    }
    if (!found) break;

    const int from = work[static_cast<std::size_t>(best_node)];
    sigma_tot[static_cast<std::size_t>(from)] -= degree[static_cast<std::size_t>(best_node)];
    --members[static_cast<std::size_t>(from)];
    sigma_tot[static_cast<std::size_t>(best_target)] +=
        degree[static_cast<std::size_t>(best_node)];
    ++members[static_cast<std::size_t>(best_target)];
    work[static_cast<std::size_t>(best_node)] = best_target;
    locked[static_cast<std::size_t>(best_node)] = 1;
    cum += best_delta;
    moves.push_back({best_node, best_target});
    cumulative.push_back(cum);
  }

  // Keep the best strictly-improving prefix.
  int best_prefix = -1;
  double best_value = 1e-12;
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    if (cumulative[i] > best_value) {
      best_value = cumulative[i];
      best_prefix = static_cast<int>(i);
    }
  }
  if (best_prefix < 0) return false;
  for (int i = 0; i <= best_prefix; ++i) {
    community[static_cast<std::size_t>(moves[static_cast<std::size_t>(i)].node)] =
        moves[static_cast<std::size_t>(i)].target;
  }
  return true;
}

// KL refinement over the free chain plus one forced-start chain per node
// (small graphs only); the best-modularity outcome wins.
inline bool kl_refine(const LouvainGraph& graph, std::vector<int>& community) {
  std::vector<int> best = community;
  bool improved = kl_refine_once(graph, best);
  double best_q = modularity_of(graph, best);
  if (graph.size() <= 64) {
    for (int v = 0; v < graph.size(); ++v) {
      std::vector<int> candidate = community;
      if (kl_refine_once(graph, candidate, v)) {
        const double q = modularity_of(graph, candidate);
        if (q > best_q + 1e-12) {
          best = std::move(candidate);
          best_q = q;
          improved = true;
        }
      }
    }
  }
  if (improved) community = std::move(best);
  return improved;
}

}  // namespace detail

// Louvain community detection. Deterministic by default: the local-moving
// phase is restarted over rotated ascending-id visiting orders (greedy
// merging is order-sensitive), the best-modularity result wins, and a
// Kernighan-Lin prefix refinement cleans up coordinated-move optima. A
// shuffle rng replaces the rotations with a single randomized order.
inline Partition louvain(const ClientGraph& graph, Rng* shuffle_rng = nullptr) {
  if (graph.nodes().empty()) throw EmptyGraph("louvain: empty graph");

  // Map client ids to contiguous indices.
  std::vector<int> index_to_node(graph.nodes().begin(), graph.nodes().end());
  std::map<int, int> node_to_index;
  for (std::size_t i = 0; i < index_to_node.size(); ++i) {
    node_to_index[index_to_node[i]] = static_cast<int>(i);
  }

  detail::LouvainGraph working;
  working.adjacency.resize(index_to_node.size());
  working.self_loops.resize(index_to_node.size(), 0.0);
  for (const auto& [key, w] : graph.edges()) {
    working.total_weight += w;
    const int a = node_to_index[key.first];
    const int b = node_to_index[key.second];
    if (a == b) {
      working.self_loops[static_cast<std::size_t>(a)] += w;
    } else {
      working.adjacency[static_cast<std::size_t>(a)].emplace_back(b, w);
      working.adjacency[static_cast<std::size_t>(b)].emplace_back(a, w);
    }
  }

  auto to_partition = [&](const std::vector<int>& assignment) {
    // Renumber by smallest member client id for a stable labelling.
    std::map<int, int> first_member;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      first_member.emplace(assignment[i], static_cast<int>(first_member.size()));
    }
    Partition partition;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      partition.assignment[index_to_node[i]] = first_member[assignment[i]];
    }
    return partition;
  };

  if (!graph.has_edges()) {
    return to_partition(detail::louvain_levels(working, 0, nullptr));
  }

  std::vector<int> best_assignment;
  double best_q = 0.0;
  if (shuffle_rng != nullptr) {
    best_assignment = detail::louvain_levels(working, 0, shuffle_rng);
    best_q = detail::modularity_of(working, best_assignment);
  } else {
    // Restart 0 is the plain ascending-id order; the rest rotate it. Greedy
    // local moving is order-sensitive and restarts are cheap at this scale.
    const int restarts = std::min<int>(working.size(), 16);
    for (int restart = 0; restart < restarts; ++restart) {
      std::vector<int> candidate = detail::louvain_levels(working, restart, nullptr);
      const double q = detail::modularity_of(working, candidate);
      if (restart == 0 || q > best_q + 1e-12) {
        best_assignment = std::move(candidate);
        best_q = q;
      }
    }
  }

  // Settle coordinated-move optima: alternate KL prefix refinement with
  // plain local moving until neither improves.
  while (detail::kl_refine(working, best_assignment)) {
    best_assignment =
        detail::louvain_one_level(working, 0, nullptr, &best_assignment).community;
  }
  return to_partition(best_assignment);
}

// Fraction of approval edges joining publishers of the same ground-truth
// cluster. Genesis-parent edges are excluded; duplicate parents count twice.
inline double approval_pureness(const Dag& dag, const std::map<int, int>& clusters) {
  std::size_t edges = 0;
  std::size_t pure = 0;
  for (const Transaction& t : dag) {
    if (t.is_genesis()) continue;
    for (TransactionId p : t.parents) {
      const Transaction& parent = dag.tx(p);
      if (parent.is_genesis()) continue;
      ++edges;
      if (clusters.at(t.publisher) == clusters.at(parent.publisher)) {
        ++pure;
      }
    }
  }
  if (edges == 0) throw NoEdges("approval_pureness: no non-genesis approval edges");
  return static_cast<double>(pure) / static_cast<double>(edges);
}

// Fraction of clients whose input cluster differs from the relative-majority
// input cluster of their community. Ties penalize: misclassified count per
// community is its size minus the largest single-cluster count.
inline double misclassification_fraction(const Partition& partition,
                                         const std::map<int, int>& clusters) {
  std::map<int, std::map<int, int>> cluster_counts;  // community -> cluster -> count
  std::size_t total = 0;
  for (const auto& [node, community] : partition.assignment) {
    const auto it = clusters.find(node);
    if (it == clusters.end()) continue;
    ++cluster_counts[community][it->second];
    ++total;
  }
  if (total == 0) return 0.0;
  std::size_t misclassified = 0;
  for (const auto& [community, counts] : cluster_counts) {
    std::size_t size = 0;
    std::size_t largest = 0;
    for (const auto& [cluster, count] : counts) {
      size += static_cast<std::size_t>(count);
      largest = std::max(largest, static_cast<std::size_t>(count));
    }
    misclassified += size - largest;
  }
  return static_cast<double>(misclassified) / static_cast<double>(total);
}

// Number of poisoned transactions among the reference tips and all their
// ancestors.
inline int approved_poisoned_count(const Dag& dag,
                                   std::array<TransactionId, 2> reference_tips) {
  std::unordered_set<TransactionId> closure = dag.ancestors(reference_tips[0]);
  const std::unordered_set<TransactionId> second = dag.ancestors(reference_tips[1]);
  closure.insert(second.begin(), second.end());
  closure.insert(reference_tips[0]);
  closure.insert(reference_tips[1]);
  int count = 0;
  for (TransactionId id : closure) {
    if (dag.tx(id).poisoned) ++count;
  }
  return count;
}

struct CommunityPoisonCounts {
  int poisoned = 0;
  int benign = 0;
};

// Per-community counts of poisoned vs. benign clients.
inline std::map<int, CommunityPoisonCounts> poisoned_cluster_distribution(
    const Partition& partition, const std::set<int>& poisoned_clients) {
  std::map<int, CommunityPoisonCounts> result;
  for (const auto& [node, community] : partition.assignment) {
    if (poisoned_clients.count(node) > 0) {
      ++result[community].poisoned;
    } else {
      ++result[community].benign;
    }
  }
  return result;
}

}  // namespace dagfl
