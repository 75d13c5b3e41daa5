#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dagfl/dag.hpp"
#include "dagfl/dataset.hpp"
#include "dagfl/errors.hpp"
#include "dagfl/learning.hpp"
#include "dagfl/metrics.hpp"
#include "dagfl/random.hpp"
#include "dagfl/tip_selection.hpp"

namespace dagfl {

struct SimConfig {
  int rounds = 100;
  int clients_per_round = 10;
  WalkConfig walk;
  TrainConfig train;
  std::vector<std::size_t> hidden_layers{32};
  double poison_fraction = 0.0;
  // Number of clean rounds before the label flips take effect; negative
  // disables poisoning.
  int poison_start_round = -1;
  std::array<int, 2> flip_pair{3, 8};
  std::uint64_t seed = 0;

  void validate(std::size_t num_clients) const {
    if (rounds < 0) throw InvalidParameter("rounds must be non-negative");
    if (clients_per_round <= 0 ||
        static_cast<std::size_t>(clients_per_round) > num_clients) {
      throw InvalidParameter("clients_per_round must be in [1, num_clients]");
    }
    if (poison_fraction < 0.0 || poison_fraction > 1.0) {
      throw InvalidParameter("poison_fraction must lie in [0, 1]");
    }
    walk.validate();
    train.validate();
  }
};

struct ClientRoundRecord {
  int client_id = 0;
  bool published = false;
  std::optional<TransactionId> tx_id;
  double accuracy = 0.0;            // trained model on own test split
  double loss = 0.0;                // trained model on own test split
  double reference_accuracy = 0.0;  // publish-gate baseline
  double walk_duration_s = 0.0;     // all walks this round
  std::uint64_t walk_steps = 0;
  std::uint64_t walk_evaluations = 0;
  std::array<TransactionId, 2> reference_tips{0, 0};
  bool client_poisoned = false;
  // Reference-model rate of pair-flipped predictions against clean labels;
  // NaN when the client has no test samples of either class.
  double flipped_rate = std::numeric_limits<double>::quiet_NaN();
  int approved_poisoned = 0;
};

struct RoundRecord {
  int round = 0;
  std::vector<ClientRoundRecord> clients;
  double mean_accuracy = 0.0;
  double mean_loss = 0.0;
  std::size_t tips_count = 0;  // after round-end insertion
};

namespace detail {

// Memoizes per-transaction accuracy of one client's test split for the
// duration of one client-round (walks revisit transactions).
class CachedTestEvaluator {
 public:
  CachedTestEvaluator(const std::vector<Sample>& test_set) : test_set_(test_set) {}

  double operator()(const Transaction& t) {
    const auto it = cache_.find(t.id);
    if (it != cache_.end()) return it->second;
    const double accuracy = evaluate(t.params, test_set_).accuracy;
    cache_.emplace(t.id, accuracy);
    return accuracy;
  }

 private:
  const std::vector<Sample>& test_set_;
  std::unordered_map<TransactionId, double> cache_;
};

}  // namespace detail

// One protocol round against a frozen DAG snapshot: every sampled client
// selects two tips, averages them, trains locally, and publishes iff the
// trained model strictly beats its reference model on the client's own test
// split. Accepted transactions are appended after all clients finish, in
// ascending client-id order.
inline RoundRecord run_round(Dag& dag, const std::vector<ClientDataset>& clients,
                             const SimConfig& cfg, int round_no, Rng& round_rng) {
  RoundRecord record;
  record.round = round_no;

  const std::vector<int> sampled = sample_without_replacement(
      static_cast<int>(clients.size()), cfg.clients_per_round, round_rng);

  struct PendingTx {
    std::array<TransactionId, 2> parents;
    ModelParams params;
    int publisher;
    bool poisoned;
  };
  std::vector<PendingTx> accepted;

  double accuracy_sum = 0.0;
  double loss_sum = 0.0;
  const bool poison_active = cfg.poison_start_round >= 0;

  for (int client_id : sampled) {
    const ClientDataset& client = clients[static_cast<std::size_t>(client_id)];
    Rng rng = make_stream(cfg.seed, {0x10, static_cast<std::uint64_t>(round_no),
                                     static_cast<std::uint64_t>(client_id)});
    detail::CachedTestEvaluator evaluator(client.test);

    ClientRoundRecord entry;
    entry.client_id = client_id;
    entry.client_poisoned = client.poisoned;

    // (1) tip selection, (2) averaging
    const TipPair training_tips = select_tips(dag, evaluator, cfg.walk, rng);
    ModelParams base =
        average(dag.tx(training_tips.ids[0]).params, dag.tx(training_tips.ids[1]).params);

    // (3) local training
    const ModelParams trained = train(base, client.train, cfg.train, rng);

    // (4) publish gate against a freshly walked reference model
    auto [reference, reference_tips] =
        reference_model_with_tips(dag, evaluator, cfg.walk, rng);
    const Evaluation trained_eval = evaluate(trained, client.test);
    const double reference_accuracy = evaluate(reference, client.test).accuracy;

    entry.accuracy = trained_eval.accuracy;
    entry.loss = trained_eval.loss;
    entry.reference_accuracy = reference_accuracy;
    entry.walk_steps = training_tips.steps + reference_tips.steps;
    entry.walk_evaluations = training_tips.evaluations + reference_tips.evaluations;
    entry.walk_duration_s = training_tips.duration_s + reference_tips.duration_s;
    entry.reference_tips = reference_tips.ids;
    entry.published = trained_eval.accuracy > reference_accuracy;

    if (poison_active) {
      entry.approved_poisoned = approved_poisoned_count(dag, reference_tips.ids);
      // Rates are always measured against clean labels; flipping is an
      // involution, so a poisoned client's clean view is one flip away.
      ClientDataset unflipped;
      const ClientDataset* clean_view = &client;
      if (client.poisoned) {
        unflipped = poison_flip_labels(client, cfg.flip_pair[0], cfg.flip_pair[1]);
        clean_view = &unflipped;
      }
      try {
        entry.flipped_rate = flipped_prediction_rate(reference, *clean_view,
                                                     cfg.flip_pair[0], cfg.flip_pair[1]);
      } catch (const NoRelevantSamples&) {
        // leave NaN
      }
    }

    if (entry.published) {
      accepted.push_back(PendingTx{training_tips.ids, trained, client_id, client.poisoned});
    }

    accuracy_sum += entry.accuracy;
    loss_sum += entry.loss;
    record.clients.push_back(std::move(entry));
  }

  for (PendingTx& tx : accepted) {
    const TransactionId id = dag.add_transaction(tx.parents, std::move(tx.params),
                                                 tx.publisher, round_no, tx.poisoned);
    for (ClientRoundRecord& entry : record.clients) {
      if (entry.client_id == tx.publisher) {
        entry.tx_id = id;
        break;
      }
    }
  }

  const double n = static_cast<double>(record.clients.size());
  record.mean_accuracy = n > 0 ? accuracy_sum / n : 0.0;
  record.mean_loss = n > 0 ? loss_sum / n : 0.0;
  record.tips_count = dag.tips().size();
  return record;
}

struct SimResult {
  Dag dag;
  std::vector<RoundRecord> history;
  std::set<int> poisoned_clients;
  Architecture arch;
};

// Called after every round with the round number, the DAG state, the round's
// records, and the (possibly poisoned) client datasets.
using RoundObserver = std::function<void(int, const Dag&, const RoundRecord&,
                                         const std::vector<ClientDataset>&)>;

inline Architecture derive_architecture(const std::vector<ClientDataset>& clients,
                                        const std::vector<std::size_t>& hidden_layers) {
  if (clients.empty()) throw EmptyDataset("no client datasets");
  std::size_t input_dim = 0;
  int max_label = 0;
  for (const ClientDataset& c : clients) {
    for (const Sample& s : c.train) {
      input_dim = s.features.size();
      max_label = std::max(max_label, s.label);
    }
    for (const Sample& s : c.test) {
      max_label = std::max(max_label, s.label);
    }
  }
  Architecture arch;
  arch.layers.push_back(input_dim);
  for (std::size_t h : hidden_layers) arch.layers.push_back(h);
  arch.layers.push_back(static_cast<std::size_t>(max_label) + 1);
  arch.validate();
  return arch;
}

// Full deterministic run: genesis, cfg.rounds rounds, label flips applied to
// ceil(p * N) seed-chosen clients once cfg.poison_start_round clean rounds
// have completed.
inline SimResult run_simulation(std::vector<ClientDataset> clients, const SimConfig& cfg,
                                const RoundObserver& observer = nullptr) {
  cfg.validate(clients.size());
  const Architecture arch = derive_architecture(clients, cfg.hidden_layers);

  Rng init_rng = make_stream(cfg.seed, {0x01});
  Dag dag = Dag::create_genesis(init_params(arch, init_rng));

  SimResult result{std::move(dag), {}, {}, arch};
  bool poison_applied = false;

  auto apply_poison = [&]() {
    const int count = static_cast<int>(
        std::ceil(cfg.poison_fraction * static_cast<double>(clients.size())));
    if (count == 0) return;
    Rng poison_rng = make_stream(cfg.seed, {0x02});
    const std::vector<int> victims =
        sample_without_replacement(static_cast<int>(clients.size()), count, poison_rng);
    for (int id : victims) {
      clients[static_cast<std::size_t>(id)] =
          poison_flip_labels(clients[static_cast<std::size_t>(id)], cfg.flip_pair[0],
                             cfg.flip_pair[1]);
      result.poisoned_clients.insert(id);
    }
  };

  if (cfg.poison_start_round == 0 && cfg.poison_fraction > 0.0) {
    apply_poison();
    poison_applied = true;
  }

  for (int round = 1; round <= cfg.rounds; ++round) {
    Rng round_rng = make_stream(cfg.seed, {0x03, static_cast<std::uint64_t>(round)});
    RoundRecord record = run_round(result.dag, clients, cfg, round, round_rng);
    result.history.push_back(std::move(record));
    if (observer) observer(round, result.dag, result.history.back(), clients);

    if (!poison_applied && cfg.poison_fraction > 0.0 && cfg.poison_start_round >= 0 &&
        round == cfg.poison_start_round) {
      apply_poison();
      poison_applied = true;
    }
  }
  return result;
}

}  // namespace dagfl
