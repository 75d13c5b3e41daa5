#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dagfl/dataset.hpp"
#include "dagfl/errors.hpp"
#include "dagfl/learning.hpp"
#include "dagfl/random.hpp"
#include "dagfl/simulation.hpp"

namespace dagfl {

struct FedConfig {
  int rounds = 100;
  int clients_per_round = 10;
  TrainConfig train;
  std::vector<std::size_t> hidden_layers{32};
  double proximal_mu = 0.0;  // 0 => plain FedAvg
  bool weighted_aggregation = true;
  std::uint64_t seed = 0;

  void validate(std::size_t num_clients) const {
    if (rounds < 0) throw InvalidParameter("rounds must be non-negative");
    if (clients_per_round <= 0 ||
        static_cast<std::size_t>(clients_per_round) > num_clients) {
      throw InvalidParameter("clients_per_round must be in [1, num_clients]");
    }
    if (proximal_mu < 0.0) throw InvalidParameter("proximal_mu must be non-negative");
    train.validate();
  }
};

// One SGD step on cross-entropy plus the proximal pull (mu/2)*||w - anchor||^2.
inline ModelParams fedprox_local_step(const ModelParams& params, const ModelParams& anchor,
                                      std::span<const Sample> batch, double learning_rate,
                                      double mu) {
  if (params.arch != anchor.arch) {
    throw ArchitectureMismatch("fedprox_local_step: anchor architecture mismatch");
  }
  std::vector<double> grad = gradient(params, batch);
  ModelParams result = params;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i] += mu * (params.values[i] - anchor.values[i]);
    result.values[i] -= learning_rate * grad[i];
  }
  return result;
}

// Local training with the proximal term applied on every mini-batch step.
// Shares the batch schedule with plain train(), so mu = 0 reproduces it
// bit-for-bit.
inline ModelParams train_proximal(const ModelParams& params, std::span<const Sample> data,
                                  const TrainConfig& cfg, Rng& rng,
                                  const ModelParams& anchor, double mu) {
  return detail::train_impl(params, data, cfg, rng, &anchor, mu);
}

// One synchronized round: sampled clients train from the global model; the
// new global is the sample-count-weighted (or uniform) average of their
// results.
inline ModelParams fedavg_round(const ModelParams& global,
                                const std::vector<ClientDataset>& clients,
                                const FedConfig& cfg, int round_no, Rng& round_rng) {
  const std::vector<int> sampled = sample_without_replacement(
      static_cast<int>(clients.size()), cfg.clients_per_round, round_rng);

  std::vector<ModelParams> updates;
  std::vector<double> weights;
  updates.reserve(sampled.size());
  for (int client_id : sampled) {
    const ClientDataset& client = clients[static_cast<std::size_t>(client_id)];
    Rng rng = make_stream(cfg.seed, {0x20, static_cast<std::uint64_t>(round_no),
                                     static_cast<std::uint64_t>(client_id)});
    updates.push_back(cfg.proximal_mu > 0.0
                          ? train_proximal(global, client.train, cfg.train, rng, global,
                                           cfg.proximal_mu)
                          : train(global, client.train, cfg.train, rng));
    weights.push_back(cfg.weighted_aggregation
                          ? static_cast<double>(client.train.size())
                          : 1.0);
  }

  double weight_sum = 0.0;
  for (double w : weights) weight_sum += w;

  ModelParams aggregated = global;
  std::fill(aggregated.values.begin(), aggregated.values.end(), 0.0);
  for (std::size_t k = 0; k < updates.size(); ++k) {
    const double w = weights[k] / weight_sum;
    for (std::size_t i = 0; i < aggregated.values.size(); ++i) {
      aggregated.values[i] += w * updates[k].values[i];
    }
  }
  return aggregated;
}

struct BaselineResult {
  ModelParams global;
  std::vector<RoundRecord> history;
};

// Centralized baseline run. Per round the records hold the post-aggregation
// global model's accuracy/loss on each sampled client's test split.
inline BaselineResult run_baseline(const std::vector<ClientDataset>& clients,
                                   const FedConfig& cfg) {
  cfg.validate(clients.size());
  const Architecture arch = derive_architecture(clients, cfg.hidden_layers);
  Rng init_rng = make_stream(cfg.seed, {0x01});
  ModelParams global = init_params(arch, init_rng);

  BaselineResult result{std::move(global), {}};
  for (int round = 1; round <= cfg.rounds; ++round) {
    Rng round_rng = make_stream(cfg.seed, {0x03, static_cast<std::uint64_t>(round)});
    // Re-draw the sample to know which clients to report on; the draw inside
    // fedavg_round consumes an identical stream.
    Rng sample_rng = make_stream(cfg.seed, {0x03, static_cast<std::uint64_t>(round)});
    const std::vector<int> sampled = sample_without_replacement(
        static_cast<int>(clients.size()), cfg.clients_per_round, sample_rng);

    result.global = fedavg_round(result.global, clients, cfg, round, round_rng);

    RoundRecord record;
    record.round = round;
    double accuracy_sum = 0.0;
    double loss_sum = 0.0;
    for (int client_id : sampled) {
      const ClientDataset& client = clients[static_cast<std::size_t>(client_id)];
      const Evaluation eval = evaluate(result.global, client.test);
      ClientRoundRecord entry;
      entry.client_id = client_id;
      entry.accuracy = eval.accuracy;
      entry.loss = eval.loss;
      record.clients.push_back(entry);
      accuracy_sum += eval.accuracy;
      loss_sum += eval.loss;
    }
    const double n = static_cast<double>(record.clients.size());
    record.mean_accuracy = accuracy_sum / n;
    record.mean_loss = loss_sum / n;
    result.history.push_back(std::move(record));
  }
  return result;
}

}  // namespace dagfl
