#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dagfl/dag.hpp"
#include "dagfl/errors.hpp"
#include "dagfl/learning.hpp"
#include "dagfl/random.hpp"

namespace dagfl {

enum class Normalization { Simple, SpreadScaled };
enum class Selector { AccuracyBiased, UniformRandom };

struct WalkConfig {
  double alpha = 10.0;
  Normalization normalization = Normalization::Simple;
  int start_depth_min = 15;
  int start_depth_max = 25;
  Selector selector = Selector::AccuracyBiased;

  void validate() const {
    if (alpha <= 0.0) throw InvalidParameter("walk alpha must be positive");
    if (start_depth_min < 1 || start_depth_min > start_depth_max) {
      throw InvalidParameter("walk start depth range must satisfy 1 <= min <= max");
    }
  }
};

struct WalkOutcome {
  TransactionId tip = 0;
  std::uint64_t steps = 0;
  std::uint64_t evaluations = 0;
  double duration_s = 0.0;
};

// Shifts accuracies so the maximum maps to zero.
inline std::vector<double> normalize_simple(std::span<const double> accuracies) {
  if (accuracies.empty()) throw EmptyInput("normalize_simple: empty accuracies");
  const double max = *std::max_element(accuracies.begin(), accuracies.end());
  std::vector<double> normalized(accuracies.size());
  for (std::size_t i = 0; i < accuracies.size(); ++i) {
    normalized[i] = accuracies[i] - max;
  }
  return normalized;
}

// Shifts and rescales by the accuracy spread so the minimum maps to -1 and
// the maximum to 0. Zero spread degenerates to all zeros (uniform choice).
inline std::vector<double> normalize_spread_scaled(std::span<const double> accuracies) {
  if (accuracies.empty()) throw EmptyInput("normalize_spread_scaled: empty accuracies");
  const auto [min_it, max_it] = std::minmax_element(accuracies.begin(), accuracies.end());
  const double spread = *max_it - *min_it;
  std::vector<double> normalized(accuracies.size(), 0.0);
  if (spread > 0.0) {
    for (std::size_t i = 0; i < accuracies.size(); ++i) {
      normalized[i] = (accuracies[i] - *max_it) / spread;
    }
  }
  return normalized;
}

// Per-child probabilities: exp(normalized * alpha), normalized to sum 1.
inline std::vector<double> walk_weights(std::span<const double> accuracies,
                                        const WalkConfig& cfg) {
  std::vector<double> weights = cfg.normalization == Normalization::Simple
                                    ? normalize_simple(accuracies)
                                    : normalize_spread_scaled(accuracies);
  double sum = 0.0;
  for (double& w : weights) {
    w = std::exp(w * cfg.alpha);
    sum += w;
  }
  for (double& w : weights) {
    w /= sum;
  }
  return weights;
}

// Uniformly picks a tip, then descends k parent steps (k uniform in the
// configured depth range, parent picked uniformly per step). Stops early at
// genesis.
inline TransactionId sample_walk_start(const Dag& dag, const WalkConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::vector<TransactionId>& tips = dag.tips();
  TransactionId current = tips[rng.next_index(tips.size())];
  const long depth = rng.next_int(cfg.start_depth_min, cfg.start_depth_max);
  for (long step = 0; step < depth; ++step) {
    const Transaction& t = dag.tx(current);
    if (t.is_genesis()) break;
    current = t.parents[rng.next_index(t.parents.size())];
  }
  return current;
}

// Walks child edges from `start` until reaching a transaction with no
// approvers. At each step every child is scored with `evaluate` (callable as
// double(const Transaction&)) and the next node is sampled from the
// alpha-weighted distribution.
template <class Eval>
WalkOutcome biased_random_walk(const Dag& dag, TransactionId start, Eval&& evaluate,
                               const WalkConfig& cfg, Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  WalkOutcome outcome;
  TransactionId current = start;
  std::vector<double> accuracies;
  for (;;) {
    const std::vector<TransactionId>& children = dag.children(current);
    if (children.empty()) break;
    accuracies.resize(children.size());
    for (std::size_t i = 0; i < children.size(); ++i) {
      accuracies[i] = evaluate(dag.tx(children[i]));
    }
    outcome.evaluations += children.size();
    const std::vector<double> probabilities = walk_weights(accuracies, cfg);
    current = children[weighted_choice(probabilities, rng)];
    ++outcome.steps;
  }
  outcome.tip = current;
  outcome.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return outcome;
}

struct TipPair {
  std::array<TransactionId, 2> ids{0, 0};
  std::uint64_t steps = 0;
  std::uint64_t evaluations = 0;
  double duration_s = 0.0;
};

// Two tips via two independent walks (own start sample each); with the
// UniformRandom selector, two tips drawn uniformly with replacement. The
// results may coincide.
template <class Eval>
TipPair select_tips(const Dag& dag, Eval&& evaluate, const WalkConfig& cfg, Rng& rng) {
  cfg.validate();
  TipPair pair;
  if (cfg.selector == Selector::UniformRandom) {
    const std::vector<TransactionId>& tips = dag.tips();
    pair.ids[0] = tips[rng.next_index(tips.size())];
    pair.ids[1] = tips[rng.next_index(tips.size())];
    return pair;
  }
  for (std::size_t w = 0; w < 2; ++w) {
    const TransactionId start = sample_walk_start(dag, cfg, rng);
    const WalkOutcome outcome = biased_random_walk(dag, start, evaluate, cfg, rng);
    pair.ids[w] = outcome.tip;
    pair.steps += outcome.steps;
    pair.evaluations += outcome.evaluations;
    pair.duration_s += outcome.duration_s;
  }
  return pair;
}

// Element-wise average of the two selected tips' params, plus the pair that
// produced it (needed by poisoning bookkeeping).
template <class Eval>
std::pair<ModelParams, TipPair> reference_model_with_tips(const Dag& dag, Eval&& evaluate,
                                                          const WalkConfig& cfg, Rng& rng) {
  const TipPair pair = select_tips(dag, evaluate, cfg, rng);
  ModelParams params = average(dag.tx(pair.ids[0]).params, dag.tx(pair.ids[1]).params);
  return {std::move(params), pair};
}

template <class Eval>
ModelParams reference_model(const Dag& dag, Eval&& evaluate, const WalkConfig& cfg,
                            Rng& rng) {
  return reference_model_with_tips(dag, evaluate, cfg, rng).first;
}

}  // namespace dagfl
