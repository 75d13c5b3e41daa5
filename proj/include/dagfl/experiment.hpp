#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dagfl/baselines.hpp"
#include "dagfl/dataset.hpp"
#include "dagfl/errors.hpp"
#include "dagfl/io.hpp"
#include "dagfl/simulation.hpp"

#include <json.hpp>

namespace dagfl {

// Violations of the experiment spec schema; the CLI maps these to exit 2.
struct SchemaError : Error {
  using Error::Error;
};

enum class Algorithm { Dag, FedAvg, FedProx };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Dag: return "dag";
    case Algorithm::FedAvg: return "fedavg";
    case Algorithm::FedProx: return "fedprox";
  }
  return "?";
}

struct ExperimentSpec {
  std::string name;
  Algorithm algorithm = Algorithm::Dag;
  int repetitions = 3;
  std::uint64_t seed = 42;
  int rounds = 100;
  int clients_per_round = 10;
  std::variant<ClusteredSpec, FedproxSyntheticSpec> dataset;
  TrainConfig train;
  WalkConfig walk;
  std::vector<std::size_t> hidden_layers{32};
  double proximal_mu = 0.1;
  double poison_fraction = 0.0;
  int poison_start_round = -1;
  std::array<int, 2> flip_pair{3, 8};
};

namespace spec_detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::string& context,
                                const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (allowed.count(key) == 0) {
      throw SchemaError("unknown key \"" + key + "\" in " + context);
    }
  }
}

inline const json& require_key(const json& obj, const std::string& context,
                               const std::string& key) {
  if (!obj.contains(key)) {
    throw SchemaError("missing required key \"" + key + "\"" +
                      (context.empty() ? "" : " in " + context));
  }
  return obj.at(key);
}

inline json merge_defaults(json defaults, const json& overrides) {
  for (const auto& [key, value] : overrides.items()) {
    if (value.is_object() && defaults.contains(key) && defaults[key].is_object()) {
      defaults[key] = merge_defaults(defaults[key], value);
    } else {
      defaults[key] = value;
    }
  }
  return defaults;
}

inline json clustered_defaults() {
  return json{{"generator", "clustered"},
              {"num_clients", 30},
              {"num_clusters", 3},
              {"classes_per_cluster", json::array({{0, 1, 2, 3}, {4, 5, 6}, {7, 8, 9}})},
              {"samples_per_client", 250},
              {"feature_dim", 20},
              {"overlap_min", 0.0},
              {"overlap_max", 0.0},
              {"mean_scale", 1.0},
              {"noise_std", 0.7}};
}

inline json fedprox_defaults() {
  return json{{"generator", "fedprox_synthetic"}, {"alpha", 0.5},
              {"beta", 0.5},                      {"num_clients", 30},
              {"samples_per_client", 250},        {"feature_dim", 60},
              {"num_classes", 10}};
}

inline json walk_defaults() {
  return json{{"alpha", 10.0},
              {"normalization", "simple"},
              {"start_depth_min", 15},
              {"start_depth_max", 25},
              {"selector", "accuracy"}};
}

inline json poison_defaults() {
  return json{{"fraction", 0.0}, {"start_round", -1}, {"flip_pair", {3, 8}}};
}

}  // namespace spec_detail

// Fills in defaults and rejects malformed or unknown content. The result is
// stable: resolving a resolved spec is the identity.
inline nlohmann::json resolve_spec_json(const nlohmann::json& raw) {
  using nlohmann::json;
  using namespace spec_detail;

  if (!raw.is_object()) throw SchemaError("experiment spec must be a JSON object");
  reject_unknown_keys(raw, "experiment spec",
                      {"schema_version", "name", "algorithm", "repetitions", "seed",
                       "rounds", "clients_per_round", "dataset", "train", "walk",
                       "hidden_layers", "proximal_mu", "poison", "sweep"});

  const json& version = require_key(raw, "", "schema_version");
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw SchemaError("unsupported schema_version (expected 1)");
  }
  for (const char* key : {"name", "algorithm", "seed", "rounds", "clients_per_round"}) {
    require_key(raw, "", key);
  }
  const json& dataset_raw = require_key(raw, "", "dataset");
  const json& train_raw = require_key(raw, "", "train");

  if (!raw.at("name").is_string() || raw.at("name").get<std::string>().empty()) {
    throw SchemaError("key \"name\" must be a non-empty string");
  }
  const std::string algorithm = raw.at("algorithm").is_string()
                                    ? raw.at("algorithm").get<std::string>()
                                    : "";
  if (algorithm != "dag" && algorithm != "fedavg" && algorithm != "fedprox") {
    throw SchemaError("key \"algorithm\" must be one of dag, fedavg, fedprox");
  }
  if (!raw.at("rounds").is_number_integer() || raw.at("rounds").get<int>() < 0) {
    throw SchemaError("key \"rounds\" must be a non-negative integer");
  }
  if (!raw.at("clients_per_round").is_number_integer() ||
      raw.at("clients_per_round").get<int>() <= 0) {
    throw SchemaError("key \"clients_per_round\" must be a positive integer");
  }

  if (!dataset_raw.is_object()) throw SchemaError("key \"dataset\" must be an object");
  const json& generator = require_key(dataset_raw, "dataset", "generator");
  json dataset;
  if (generator == "clustered") {
    reject_unknown_keys(dataset_raw, "dataset",
                        {"generator", "num_clients", "num_clusters", "classes_per_cluster",
                         "samples_per_client", "feature_dim", "overlap_min", "overlap_max",
                         "mean_scale", "noise_std"});
    dataset = merge_defaults(clustered_defaults(), dataset_raw);
  } else if (generator == "fedprox_synthetic") {
    reject_unknown_keys(dataset_raw, "dataset",
                        {"generator", "alpha", "beta", "num_clients", "samples_per_client",
                         "feature_dim", "num_classes"});
    dataset = merge_defaults(fedprox_defaults(), dataset_raw);
  } else {
    throw SchemaError("dataset generator must be clustered or fedprox_synthetic");
  }

  if (!train_raw.is_object()) throw SchemaError("key \"train\" must be an object");
  reject_unknown_keys(train_raw, "train",
                      {"local_epochs", "local_batches", "batch_size", "learning_rate"});
  for (const char* key : {"local_epochs", "local_batches", "batch_size", "learning_rate"}) {
    require_key(train_raw, "train", key);
  }

  json walk = walk_defaults();
  if (raw.contains("walk")) {
    if (!raw.at("walk").is_object()) throw SchemaError("key \"walk\" must be an object");
    reject_unknown_keys(raw.at("walk"), "walk",
                        {"alpha", "normalization", "start_depth_min", "start_depth_max",
                         "selector"});
    walk = merge_defaults(walk, raw.at("walk"));
  }
  const std::string normalization = walk.at("normalization").get<std::string>();
  if (normalization != "simple" && normalization != "spread_scaled") {
    throw SchemaError("walk normalization must be simple or spread_scaled");
  }
  const std::string selector = walk.at("selector").get<std::string>();
  if (selector != "accuracy" && selector != "uniform") {
    throw SchemaError("walk selector must be accuracy or uniform");
  }

  if (walk.at("alpha").is_number() && walk.at("alpha").get<double>() <= 0.0) {
    throw SchemaError("key \"alpha\" in walk must be positive");
  }
  for (const char* key : {"local_epochs", "local_batches", "batch_size"}) {
    if (!train_raw.at(key).is_number_integer() || train_raw.at(key).get<int>() <= 0) {
      throw SchemaError("key \"" + std::string(key) + "\" in train must be a positive integer");
    }
  }
  if (!train_raw.at("learning_rate").is_number() ||
      train_raw.at("learning_rate").get<double>() < 0.0) {
    throw SchemaError("key \"learning_rate\" in train must be a non-negative number");
  }

  json poison = poison_defaults();
  if (raw.contains("poison")) {
    if (!raw.at("poison").is_object()) throw SchemaError("key \"poison\" must be an object");
    reject_unknown_keys(raw.at("poison"), "poison", {"fraction", "start_round", "flip_pair"});
    poison = merge_defaults(poison, raw.at("poison"));
  }
  if (!poison.at("fraction").is_number() || poison.at("fraction").get<double>() < 0.0 ||
      poison.at("fraction").get<double>() > 1.0) {
    throw SchemaError("key \"fraction\" in poison must lie in [0, 1]");
  }

  json resolved{{"schema_version", 1},
                {"name", raw.at("name")},
                {"algorithm", algorithm},
                {"repetitions", raw.value("repetitions", 3)},
                {"seed", raw.at("seed")},
                {"rounds", raw.at("rounds")},
                {"clients_per_round", raw.at("clients_per_round")},
                {"dataset", dataset},
                {"train", train_raw},
                {"walk", walk},
                {"hidden_layers", raw.value("hidden_layers", json::array({32}))},
                {"proximal_mu", raw.value("proximal_mu", 0.1)},
                {"poison", poison}};
  if (resolved.at("repetitions").get<int>() < 1) {
    throw SchemaError("key \"repetitions\" must be at least 1");
  }
  if (raw.contains("sweep")) {
    const json& sweep = raw.at("sweep");
    if (!sweep.is_object()) throw SchemaError("key \"sweep\" must be an object");
    reject_unknown_keys(sweep, "sweep", {"pointer", "values"});
    require_key(sweep, "sweep", "pointer");
    require_key(sweep, "sweep", "values");
    if (!sweep.at("values").is_array() || sweep.at("values").empty()) {
      throw SchemaError("sweep values must be a non-empty array");
    }
    const nlohmann::json::json_pointer pointer(sweep.at("pointer").get<std::string>());
    if (!resolved.contains(pointer)) {
      throw SchemaError("sweep pointer \"" + sweep.at("pointer").get<std::string>() +
                        "\" does not address an existing spec key");
    }
    resolved["sweep"] = sweep;
  }
  return resolved;
}

// Materializes the typed spec from a resolved (sweep-free) JSON config.
inline ExperimentSpec spec_from_json(const nlohmann::json& resolved) {
  ExperimentSpec spec;
  spec.name = resolved.at("name").get<std::string>();
  const std::string algorithm = resolved.at("algorithm").get<std::string>();
  spec.algorithm = algorithm == "dag"      ? Algorithm::Dag
                   : algorithm == "fedavg" ? Algorithm::FedAvg
                                           : Algorithm::FedProx;
  spec.repetitions = resolved.at("repetitions").get<int>();
  spec.seed = resolved.at("seed").get<std::uint64_t>();
  spec.rounds = resolved.at("rounds").get<int>();
  spec.clients_per_round = resolved.at("clients_per_round").get<int>();

  const nlohmann::json& ds = resolved.at("dataset");
  if (ds.at("generator") == "clustered") {
    ClusteredSpec c;
    c.num_clients = ds.at("num_clients").get<int>();
    c.num_clusters = ds.at("num_clusters").get<int>();
    c.classes_per_cluster = ds.at("classes_per_cluster").get<std::vector<std::vector<int>>>();
    c.samples_per_client = ds.at("samples_per_client").get<int>();
    c.feature_dim = ds.at("feature_dim").get<int>();
    c.overlap_min = ds.at("overlap_min").get<double>();
    c.overlap_max = ds.at("overlap_max").get<double>();
    c.mean_scale = ds.at("mean_scale").get<double>();
    c.noise_std = ds.at("noise_std").get<double>();
    spec.dataset = c;
  } else {
    FedproxSyntheticSpec f;
    f.alpha_het = ds.at("alpha").get<double>();
    f.beta_het = ds.at("beta").get<double>();
    f.num_clients = ds.at("num_clients").get<int>();
    f.feature_dim = ds.at("feature_dim").get<int>();
    f.num_classes = ds.at("num_classes").get<int>();
    if (ds.at("samples_per_client").is_array()) {
      f.samples_per_client = ds.at("samples_per_client").get<std::vector<int>>();
    } else {
      f.samples_per_client.assign(static_cast<std::size_t>(f.num_clients),
                                  ds.at("samples_per_client").get<int>());
    }
    spec.dataset = f;
  }

  const nlohmann::json& train = resolved.at("train");
  spec.train.local_epochs = train.at("local_epochs").get<int>();
  spec.train.local_batches = train.at("local_batches").get<int>();
  spec.train.batch_size = train.at("batch_size").get<int>();
  spec.train.learning_rate = train.at("learning_rate").get<double>();

  const nlohmann::json& walk = resolved.at("walk");
  spec.walk.alpha = walk.at("alpha").get<double>();
  spec.walk.normalization = walk.at("normalization") == "simple"
                                ? Normalization::Simple
                                : Normalization::SpreadScaled;
  spec.walk.start_depth_min = walk.at("start_depth_min").get<int>();
  spec.walk.start_depth_max = walk.at("start_depth_max").get<int>();
  spec.walk.selector = walk.at("selector") == "accuracy" ? Selector::AccuracyBiased
                                                         : Selector::UniformRandom;

  spec.hidden_layers = resolved.at("hidden_layers").get<std::vector<std::size_t>>();
  spec.proximal_mu = resolved.at("proximal_mu").get<double>();

  const nlohmann::json& poison = resolved.at("poison");
  spec.poison_fraction = poison.at("fraction").get<double>();
  spec.poison_start_round = poison.at("start_round").get<int>();
  const auto pair = poison.at("flip_pair").get<std::vector<int>>();
  if (pair.size() != 2) throw SchemaError("poison flip_pair must hold two class ids");
  spec.flip_pair = {pair[0], pair[1]};
  return spec;
}

// Expands the optional sweep into (label, sweep-free config) pairs.
inline std::vector<std::pair<std::string, nlohmann::json>> expand_sweep(
    const nlohmann::json& resolved) {
  std::vector<std::pair<std::string, nlohmann::json>> configs;
  nlohmann::json base = resolved;
  base.erase("sweep");
  if (!resolved.contains("sweep")) {
    configs.emplace_back("base", base);
    return configs;
  }
  const std::string pointer_str = resolved.at("sweep").at("pointer").get<std::string>();
  const nlohmann::json::json_pointer pointer(pointer_str);
  const std::string param = pointer_str.substr(pointer_str.rfind('/') + 1);
  for (const nlohmann::json& value : resolved.at("sweep").at("values")) {
    nlohmann::json config = base;
    config[pointer] = value;
    const std::string label =
        param + "=" + (value.is_string() ? value.get<std::string>() : value.dump());
    configs.emplace_back(label, resolve_spec_json(config));
  }
  return configs;
}

inline std::vector<ClientDataset> generate_dataset(const ExperimentSpec& spec, Rng& rng) {
  if (std::holds_alternative<ClusteredSpec>(spec.dataset)) {
    return gen_clustered(std::get<ClusteredSpec>(spec.dataset), rng);
  }
  return gen_fedprox_synthetic(std::get<FedproxSyntheticSpec>(spec.dataset), rng);
}

// Named experiment recipes shipped with the tool.
inline std::vector<std::pair<std::string, nlohmann::json>> builtin_recipes() {
  using nlohmann::json;
  const json train{{"local_epochs", 1},
                   {"local_batches", 10},
                   {"batch_size", 10},
                   {"learning_rate", 0.05}};
  const json clustered{{"generator", "clustered"}, {"num_clients", 30}};
  // Stand-in for a naturally split dataset: one cluster, every client holds
  // samples of all classes.
  const json unclustered{{"generator", "clustered"},
                         {"num_clients", 30},
                         {"num_clusters", 1},
                         {"classes_per_cluster", json::array({{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}})}};

  std::vector<std::pair<std::string, json>> recipes;
  auto add = [&](json spec) {
    const std::string name = spec.at("name").get<std::string>();
    recipes.emplace_back(name, resolve_spec_json(spec));
  };

  add(json{{"schema_version", 1},
           {"name", "alpha-sweep"},
           {"algorithm", "dag"},
           {"seed", 42},
           {"rounds", 100},
           {"clients_per_round", 10},
           {"dataset", clustered},
           {"train", train},
           {"sweep", {{"pointer", "/walk/alpha"}, {"values", {0.1, 1.0, 10.0, 100.0}}}}});

  add(json{{"schema_version", 1},
           {"name", "alpha-sweep-dynamic"},
           {"algorithm", "dag"},
           {"seed", 42},
           {"rounds", 100},
           {"clients_per_round", 10},
           {"dataset", clustered},
           {"train", train},
           {"walk", {{"normalization", "spread_scaled"}}},
           {"sweep", {{"pointer", "/walk/alpha"}, {"values", {0.1, 1.0, 10.0, 100.0}}}}});

  json relaxed = clustered;
  relaxed["overlap_min"] = 0.15;
  relaxed["overlap_max"] = 0.20;
  add(json{{"schema_version", 1},
           {"name", "relaxed-clusters"},
           {"algorithm", "dag"},
           {"seed", 42},
           {"rounds", 100},
           {"clients_per_round", 10},
           {"dataset", relaxed},
           {"train", train},
           {"sweep", {{"pointer", "/walk/alpha"}, {"values", {0.1, 1.0, 10.0, 100.0}}}}});

  add(json{{"schema_version", 1},
           {"name", "vs-fedavg"},
           {"algorithm", "dag"},
           {"seed", 42},
           {"rounds", 100},
           {"clients_per_round", 10},
           {"dataset", clustered},
           {"train", train},
           {"sweep", {{"pointer", "/algorithm"}, {"values", {"dag", "fedavg"}}}}});

  // Linear softmax model: the synthetic labels come from per-client linear
  // models, so a hidden layer would let one global model fit every client.
  add(json{{"schema_version", 1},
           {"name", "vs-fedprox"},
           {"algorithm", "dag"},
           {"seed", 42},
           {"rounds", 100},
           {"clients_per_round", 10},
           {"dataset", {{"generator", "fedprox_synthetic"}, {"num_clients", 30}}},
           {"train", train},
           {"hidden_layers", json::array()},
           {"proximal_mu", 0.1},
           {"sweep", {{"pointer", "/algorithm"}, {"values", {"dag", "fedavg", "fedprox"}}}}});

  // Larger per-client test splits keep the walk's accuracy signal sharp,
  // which drives the separation of poisoned and benign clients.
  json poisoning_data = unclustered;
  poisoning_data["samples_per_client"] = 500;
  add(json{{"schema_version", 1},
           {"name", "poisoning"},
           {"algorithm", "dag"},
           {"seed", 42},
           {"rounds", 200},
           {"clients_per_round", 10},
           {"dataset", poisoning_data},
           {"train", train},
           {"poison", {{"fraction", 0.3}, {"start_round", 100}, {"flip_pair", {3, 8}}}},
           {"sweep", {{"pointer", "/poison/fraction"}, {"values", {0.0, 0.2, 0.3}}}}});

  // Noisier blobs keep the publish gate admitting updates for the full run,
  // so the DAG grows throughout the measured window.
  json scalability_data = unclustered;
  scalability_data["num_clients"] = 60;
  scalability_data["noise_std"] = 2.0;
  add(json{{"schema_version", 1},
           {"name", "scalability"},
           {"algorithm", "dag"},
           {"seed", 42},
           {"rounds", 100},
           {"clients_per_round", 10},
           {"dataset", scalability_data},
           {"train", train},
           {"sweep", {{"pointer", "/clients_per_round"}, {"values", {5, 10, 20, 40}}}}});

  return recipes;
}

struct RunOptions {
  std::filesystem::path out_dir;
  bool dry_run = false;
  bool export_params = false;
  bool export_data = false;  // write each repetition's datasets as JSONL
};

inline std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("DAGFL_OUT")) {
    return std::filesystem::path(env);
  }
  return std::filesystem::path("runs");
}

namespace spec_detail {

struct ConfigSummary {
  std::string label;
  std::string algorithm;
  int repetitions = 0;
  std::vector<double> accuracy;    // final round, per repetition
  std::vector<double> loss;
  std::vector<double> pureness;    // dag only
  std::vector<double> modularity;  // dag only
};

inline std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) {
    return {std::numeric_limits<double>::quiet_NaN(),
            std::numeric_limits<double>::quiet_NaN()};
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

inline nlohmann::json stat_json(const std::vector<double>& values) {
  const auto [mean, std] = mean_std(values);
  return nlohmann::json{{"mean", mean}, {"std", std}};
}

}  // namespace spec_detail

// Executes one resolved, sweep-free configuration for one repetition,
// writing CSVs (and the DAG export for dag runs) into `rep_dir`. Returns the
// final-round (accuracy, loss, pureness, modularity); the last two are NaN
// for baseline runs.
inline std::array<double, 4> run_single_repetition(const ExperimentSpec& spec,
                                                   int repetition,
                                                   const std::filesystem::path& rep_dir,
                                                   const RunOptions& options) {
  std::filesystem::create_directories(rep_dir);
  const std::uint64_t rep_seed = spec.seed + static_cast<std::uint64_t>(repetition);
  Rng data_rng = make_stream(rep_seed, {0xDA7A});
  std::vector<ClientDataset> clients = generate_dataset(spec, data_rng);
  if (options.export_data) {
    std::ofstream data_out(rep_dir / "clients.jsonl");
    export_samples_jsonl(clients, data_out);
  }

  std::array<double, 4> final_stats{std::numeric_limits<double>::quiet_NaN(),
                                    std::numeric_limits<double>::quiet_NaN(),
                                    std::numeric_limits<double>::quiet_NaN(),
                                    std::numeric_limits<double>::quiet_NaN()};

  if (spec.algorithm == Algorithm::Dag) {
    SimConfig sim;
    sim.rounds = spec.rounds;
    sim.clients_per_round = spec.clients_per_round;
    sim.walk = spec.walk;
    sim.train = spec.train;
    sim.hidden_layers = spec.hidden_layers;
    sim.poison_fraction = spec.poison_fraction;
    sim.poison_start_round = spec.poison_start_round;
    sim.flip_pair = spec.flip_pair;
    sim.seed = rep_seed;

    std::ofstream clients_out(rep_dir / "clients.csv");
    std::ofstream aggregate_out(rep_dir / "aggregate.csv");
    std::ofstream metrics_out(rep_dir / "metrics.csv");
    ClientCsvWriter clients_csv(clients_out);
    AggregateCsvWriter aggregate_csv(aggregate_out);
    MetricsCsvWriter metrics_csv(metrics_out);

    RoundMetrics last_metrics;
    const RoundObserver observer = [&](int round, const Dag& dag, const RoundRecord& record,
                                       const std::vector<ClientDataset>& state) {
      clients_csv.write_round(record);
      aggregate_csv.write_round(record);
      last_metrics = compute_round_metrics(round, dag, record, state);
      metrics_csv.write(last_metrics);
    };

    const SimResult result = run_simulation(clients, sim, observer);
    std::ofstream dag_out(rep_dir / "dag.jsonl");
    result.dag.export_jsonl(dag_out, options.export_params);

    if (!result.history.empty()) {
      final_stats[0] = result.history.back().mean_accuracy;
      final_stats[1] = result.history.back().mean_loss;
      final_stats[2] = last_metrics.approval_pureness;
      final_stats[3] = last_metrics.modularity;
    }
  } else {
    FedConfig fed;
    fed.rounds = spec.rounds;
    fed.clients_per_round = spec.clients_per_round;
    fed.train = spec.train;
    fed.hidden_layers = spec.hidden_layers;
    fed.proximal_mu = spec.algorithm == Algorithm::FedProx ? spec.proximal_mu : 0.0;
    fed.seed = rep_seed;

    const BaselineResult result = run_baseline(clients, fed);
    std::ofstream clients_out(rep_dir / "clients.csv");
    std::ofstream aggregate_out(rep_dir / "aggregate.csv");
    ClientCsvWriter clients_csv(clients_out, algorithm_name(spec.algorithm));
    AggregateCsvWriter aggregate_csv(aggregate_out, algorithm_name(spec.algorithm));
    for (const RoundRecord& record : result.history) {
      clients_csv.write_round(record);
      aggregate_csv.write_round(record);
    }
    if (!result.history.empty()) {
      final_stats[0] = result.history.back().mean_accuracy;
      final_stats[1] = result.history.back().mean_loss;
    }
  }
  return final_stats;
}

// Runs every configuration of a resolved spec (expanding the sweep) for all
// repetitions and writes summary.json at the run root.
inline void run_resolved_spec(const nlohmann::json& resolved, const RunOptions& options,
                              std::ostream& log) {
  const std::string name = resolved.at("name").get<std::string>();
  const auto configs = expand_sweep(resolved);
  const std::filesystem::path run_root = options.out_dir / name;

  if (options.dry_run) {
    log << "dry run: " << name << " -> " << run_root.string() << "\n";
    for (const auto& [label, config] : configs) {
      spec_from_json(config);  // full typed validation
      log << "  config " << label << ": " << config.dump() << "\n";
    }
    return;
  }

  nlohmann::json summary{{"schema_version", 1},
                         {"name", name},
                         {"configurations", nlohmann::json::array()}};
  for (const auto& [label, config] : configs) {
    const ExperimentSpec spec = spec_from_json(config);
    spec_detail::ConfigSummary stats;
    stats.label = label;
    stats.algorithm = algorithm_name(spec.algorithm);
    stats.repetitions = spec.repetitions;
    for (int rep = 0; rep < spec.repetitions; ++rep) {
      const std::filesystem::path rep_dir =
          run_root / label / ("rep" + std::to_string(rep));
      log << "running " << name << "/" << label << " repetition " << rep << "\n";
      const auto final_stats =
          run_single_repetition(spec, rep, rep_dir, options);
      stats.accuracy.push_back(final_stats[0]);
      stats.loss.push_back(final_stats[1]);
      if (!std::isnan(final_stats[2])) stats.pureness.push_back(final_stats[2]);
      if (!std::isnan(final_stats[3])) stats.modularity.push_back(final_stats[3]);
    }
    nlohmann::json entry{{"label", stats.label},
                         {"algorithm", stats.algorithm},
                         {"repetitions", stats.repetitions},
                         {"final_round",
                          {{"accuracy", spec_detail::stat_json(stats.accuracy)},
                           {"loss", spec_detail::stat_json(stats.loss)}}}};
    if (!stats.pureness.empty()) {
      entry["final_round"]["approval_pureness"] = spec_detail::stat_json(stats.pureness);
      entry["final_round"]["modularity"] = spec_detail::stat_json(stats.modularity);
    }
    summary["configurations"].push_back(std::move(entry));
  }
  std::filesystem::create_directories(run_root);
  std::ofstream summary_out(run_root / "summary.json");
  summary_out << summary.dump(2) << '\n';
  log << "wrote " << (run_root / "summary.json").string() << "\n";
}

// Best-effort line anchor: first line containing the quoted key named in a
// schema error message.
inline std::string anchor_schema_error(const std::string& file_text,
                                       const std::string& message) {
  const std::size_t quote_start = message.find('"');
  if (quote_start == std::string::npos) return message;
  const std::size_t quote_end = message.find('"', quote_start + 1);
  if (quote_end == std::string::npos) return message;
  const std::string key = message.substr(quote_start + 1, quote_end - quote_start - 1);
  const std::size_t pos = file_text.find("\"" + key + "\"");
  if (pos == std::string::npos) return message;
  const long line = 1 + std::count(file_text.begin(),
                                   file_text.begin() + static_cast<long>(pos), '\n');
  return "line " + std::to_string(line) + ": " + message;
}

// Loads, validates, and runs a spec file. Exit codes: 0 success, 1 runtime
// failure, 2 schema violation.
inline int run_experiment(const std::string& spec_path, const RunOptions& options,
                          std::ostream& log, std::ostream& err) {
  std::ifstream in(spec_path);
  if (!in) {
    err << "error: cannot read spec file " << spec_path << "\n";
    return 1;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  nlohmann::json raw;
  try {
    raw = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    err << "error: " << spec_path << ": " << e.what() << "\n";
    return 2;
  }

  nlohmann::json resolved;
  try {
    resolved = resolve_spec_json(raw);
  } catch (const SchemaError& e) {
    err << "error: " << spec_path << ": " << anchor_schema_error(text, e.what()) << "\n";
    return 2;
  }

  try {
    run_resolved_spec(resolved, options, log);
  } catch (const SchemaError& e) {
    err << "error: " << spec_path << ": " << anchor_schema_error(text, e.what()) << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << spec_path << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

// Prints final-round statistics for every configuration found under `dir`.
// Returns 1 when no run output is present.
inline int summarize(const std::filesystem::path& dir, std::ostream& out,
                     std::ostream& err) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir)) {
    err << "error: no such directory: " << dir.string() << "\n";
    return 1;
  }

  // config dir -> repetition dirs containing aggregate.csv
  std::map<std::string, std::vector<fs::path>> configs;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "aggregate.csv") {
      const fs::path rep_dir = entry.path().parent_path();
      configs[rep_dir.parent_path().string()].push_back(rep_dir);
    }
  }
  if (configs.empty()) {
    err << "error: no aggregate.csv files under " << dir.string() << "\n";
    return 1;
  }

  auto final_value = [](const CsvTable& table, const std::string& column) {
    const int idx = table.column(column);
    if (idx < 0 || table.rows.empty()) return std::numeric_limits<double>::quiet_NaN();
    return std::stod(table.rows.back()[static_cast<std::size_t>(idx)]);
  };

  out << "configuration                               reps  accuracy          loss"
         "              pureness          modularity\n";
  for (auto& [config, rep_dirs] : configs) {
    std::sort(rep_dirs.begin(), rep_dirs.end());
    std::vector<double> accuracy, loss, pureness, modularity;
    for (const fs::path& rep_dir : rep_dirs) {
      std::ifstream agg(rep_dir / "aggregate.csv");
      const CsvTable table = read_csv(agg);
      accuracy.push_back(final_value(table, "mean_accuracy"));
      loss.push_back(final_value(table, "mean_loss"));
      if (fs::exists(rep_dir / "metrics.csv")) {
        std::ifstream met(rep_dir / "metrics.csv");
        const CsvTable metrics = read_csv(met);
        pureness.push_back(final_value(metrics, "approval_pureness"));
        modularity.push_back(final_value(metrics, "modularity"));
      }
    }
    auto cell = [](const std::vector<double>& values) {
      if (values.empty()) return std::string("-");
      const auto [mean, std] = spec_detail::mean_std(values);
      std::ostringstream os;
      os << format_double(mean) << "+-" << format_double(std);
      return os.str();
    };
    const std::string label =
        fs::relative(fs::path(config), dir).string();
    out << label;
    for (std::size_t i = label.size(); i < 44; ++i) out << ' ';
    out << rep_dirs.size() << "     " << cell(accuracy) << "  " << cell(loss) << "  "
        << cell(pureness) << "  " << cell(modularity) << "\n";
  }
  return 0;
}

}  // namespace dagfl
