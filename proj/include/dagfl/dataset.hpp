#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dagfl/errors.hpp"
#include "dagfl/learning.hpp"
#include "dagfl/random.hpp"

#include <json.hpp>

namespace dagfl {

struct ClientDataset {
  int client_id = 0;
  std::vector<Sample> train;
  std::vector<Sample> test;
  int cluster = 0;
  bool poisoned = false;
};

struct ClusteredSpec {
  int num_clients = 30;
  int num_clusters = 3;
  // Disjoint class sets, one per cluster; together they must cover 0..C-1.
  std::vector<std::vector<int>> classes_per_cluster{{0, 1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
  int samples_per_client = 250;
  int feature_dim = 20;
  // Fraction of each client's samples drawn from foreign-cluster classes,
  // drawn uniformly per client from [overlap_min, overlap_max].
  double overlap_min = 0.0;
  double overlap_max = 0.0;
  // Class means are drawn from N(0, mean_scale^2) per dimension; samples
  // scatter around them with isotropic noise_std.
  double mean_scale = 1.0;
  double noise_std = 0.7;
};

namespace detail {

// 90:10 split, test size rounded to nearest. Samples arrive in generation
// order; the caller shuffles beforehand where that matters.
inline void split_train_test(std::vector<Sample> samples, ClientDataset& out) {
  const std::size_t n = samples.size();
  std::size_t test_count = static_cast<std::size_t>(
      std::llround(0.10 * static_cast<double>(n)));
  test_count = std::clamp<std::size_t>(test_count, 1, n - 1);
  out.train.assign(samples.begin(), samples.end() - static_cast<long>(test_count));
  out.test.assign(samples.end() - static_cast<long>(test_count), samples.end());
}

}  // namespace detail

// Gaussian-blob classification with clients grouped into class clusters.
inline std::vector<ClientDataset> gen_clustered(const ClusteredSpec& spec, Rng& rng) {
  if (spec.num_clients <= 0 || spec.samples_per_client < 10 || spec.feature_dim <= 0) {
    throw InvalidParameter("gen_clustered: counts must be positive (and >=10 samples)");
  }
  if (spec.num_clusters <= 0 ||
      spec.classes_per_cluster.size() != static_cast<std::size_t>(spec.num_clusters)) {
    throw InvalidPartition("gen_clustered: one class set per cluster required");
  }
  if (spec.num_clients % spec.num_clusters != 0) {
    throw InvalidParameter("gen_clustered: num_clients must be divisible by num_clusters");
  }
  if (spec.overlap_min < 0.0 || spec.overlap_max >= 1.0 ||
      spec.overlap_min > spec.overlap_max) {
    throw InvalidParameter("gen_clustered: overlap range must satisfy 0 <= lo <= hi < 1");
  }

  // The class sets must partition 0..C-1 disjointly.
  std::set<int> seen;
  std::size_t total = 0;
  for (const auto& classes : spec.classes_per_cluster) {
    if (classes.empty()) throw InvalidPartition("gen_clustered: empty cluster class set");
    for (int c : classes) {
      if (c < 0 || !seen.insert(c).second) {
        throw InvalidPartition("gen_clustered: overlapping or negative class assignment");
      }
      ++total;
    }
  }
  const int num_classes = static_cast<int>(total);
  if (*seen.rbegin() != num_classes - 1) {
    throw InvalidPartition("gen_clustered: class ids must cover 0..C-1 without gaps");
  }

  // One mean per class, fixed for the whole dataset.
  std::vector<std::vector<double>> class_means(static_cast<std::size_t>(num_classes));
  for (auto& mean : class_means) {
    mean.resize(static_cast<std::size_t>(spec.feature_dim));
    for (double& v : mean) v = rng.next_normal(0.0, spec.mean_scale);
  }

  std::vector<int> all_classes(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) all_classes[static_cast<std::size_t>(c)] = c;

  const int clients_per_cluster = spec.num_clients / spec.num_clusters;
  std::vector<ClientDataset> clients;
  clients.reserve(static_cast<std::size_t>(spec.num_clients));

  for (int id = 0; id < spec.num_clients; ++id) {
    ClientDataset ds;
    ds.client_id = id;
    ds.cluster = id / clients_per_cluster;
    const std::vector<int>& own = spec.classes_per_cluster[static_cast<std::size_t>(ds.cluster)];
    std::vector<int> foreign;
    for (int c : all_classes) {
      if (std::find(own.begin(), own.end(), c) == own.end()) foreign.push_back(c);
    }

    const double overlap = spec.overlap_min == spec.overlap_max
                               ? spec.overlap_min
                               : rng.next_uniform(spec.overlap_min, spec.overlap_max);
    const int n = spec.samples_per_client;
    const int n_foreign = foreign.empty()
                              ? 0
                              : static_cast<int>(std::llround(overlap * n));

    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
      const bool take_foreign = s < n_foreign;
      const std::vector<int>& source = take_foreign ? foreign : own;
      const int label = source[rng.next_index(source.size())];
      Sample sample;
      sample.label = label;
      sample.features.resize(static_cast<std::size_t>(spec.feature_dim));
      const std::vector<double>& mean = class_means[static_cast<std::size_t>(label)];
      for (int d = 0; d < spec.feature_dim; ++d) {
        sample.features[static_cast<std::size_t>(d)] =
            rng.next_normal(mean[static_cast<std::size_t>(d)], spec.noise_std);
      }
      samples.push_back(std::move(sample));
    }
    rng.shuffle(samples);
    detail::split_train_test(std::move(samples), ds);
    clients.push_back(std::move(ds));
  }
  return clients;
}

struct FedproxSyntheticSpec {
  double alpha_het = 0.5;  // dissimilarity of local models across clients
  double beta_het = 0.5;   // dissimilarity of local feature distributions
  int num_clients = 30;
  std::vector<int> samples_per_client;  // empty => 250 for every client
  int feature_dim = 60;
  int num_classes = 10;
};

// Per-client logistic-model synthetic data: client k draws its own softmax
// ground truth (W_k, b_k) and feature distribution, so each client is its
// own task (cluster == client_id).
inline std::vector<ClientDataset> gen_fedprox_synthetic(const FedproxSyntheticSpec& spec,
                                                        Rng& rng) {
  if (spec.alpha_het < 0.0 || spec.alpha_het > 1.0 || spec.beta_het < 0.0 ||
      spec.beta_het > 1.0) {
    throw InvalidParameter("gen_fedprox_synthetic: alpha/beta must lie in [0, 1]");
  }
  if (spec.num_clients <= 0 || spec.feature_dim <= 0 || spec.num_classes <= 1) {
    throw InvalidParameter("gen_fedprox_synthetic: invalid dimensions");
  }
  std::vector<int> counts = spec.samples_per_client;
  if (counts.empty()) {
    counts.assign(static_cast<std::size_t>(spec.num_clients), 250);
  }
  if (counts.size() != static_cast<std::size_t>(spec.num_clients)) {
    throw InvalidParameter("gen_fedprox_synthetic: one sample count per client required");
  }
  for (int c : counts) {
    if (c < 10) throw InvalidParameter("gen_fedprox_synthetic: need >= 10 samples per client");
  }

  const std::size_t d = static_cast<std::size_t>(spec.feature_dim);
  const std::size_t C = static_cast<std::size_t>(spec.num_classes);

  // Feature covariance is diagonal with Sigma_jj = j^-1.2 (1-based j).
  std::vector<double> feature_std(d);
  for (std::size_t j = 0; j < d; ++j) {
    feature_std[j] = std::sqrt(std::pow(static_cast<double>(j + 1), -1.2));
  }

  std::vector<ClientDataset> clients;
  clients.reserve(static_cast<std::size_t>(spec.num_clients));
  for (int k = 0; k < spec.num_clients; ++k) {
    const double u_k = rng.next_normal(0.0, spec.alpha_het);
    std::vector<double> weights(C * d);
    std::vector<double> bias(C);
    for (double& w : weights) w = rng.next_normal(u_k, 1.0);
    for (double& b : bias) b = rng.next_normal(u_k, 1.0);

    const double big_b = rng.next_normal(0.0, spec.beta_het);
    std::vector<double> v_k(d);
    for (double& v : v_k) v = rng.next_normal(big_b, 1.0);

    ClientDataset ds;
    ds.client_id = k;
    ds.cluster = k;  // every client is its own task
    std::vector<Sample> samples;
    const int n = counts[static_cast<std::size_t>(k)];
    samples.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
      Sample sample;
      sample.features.resize(d);
      for (std::size_t j = 0; j < d; ++j) {
        sample.features[j] = rng.next_normal(v_k[j], feature_std[j]);
      }
      int best = 0;
      double best_logit = 0.0;
      for (std::size_t c = 0; c < C; ++c) {
        double logit = bias[c];
        for (std::size_t j = 0; j < d; ++j) {
          logit += weights[c * d + j] * sample.features[j];
        }
        if (c == 0 || logit > best_logit) {
          best = static_cast<int>(c);
          best_logit = logit;
        }
      }
      sample.label = best;
      samples.push_back(std::move(sample));
    }
    detail::split_train_test(std::move(samples), ds);
    clients.push_back(std::move(ds));
  }
  return clients;
}

// Swaps labels class_a <-> class_b in train and test data and toggles the
// poisoned flag, making the transform an involution.
inline ClientDataset poison_flip_labels(const ClientDataset& ds, int class_a, int class_b) {
  if (class_a == class_b || class_a < 0 || class_b < 0) {
    throw InvalidClass("poison_flip_labels: classes must be distinct and non-negative");
  }
  ClientDataset flipped = ds;
  auto flip = [&](std::vector<Sample>& samples) {
    for (Sample& s : samples) {
      if (s.label == class_a) {
        s.label = class_b;
      } else if (s.label == class_b) {
        s.label = class_a;
      }
    }
  };
  flip(flipped.train);
  flip(flipped.test);
  flipped.poisoned = !ds.poisoned;
  return flipped;
}

// Fraction of test samples with true class a or b that the model predicts
// as the other class of the pair. `ds` must carry clean labels.
inline double flipped_prediction_rate(const ModelParams& params, const ClientDataset& ds,
                                      int class_a, int class_b) {
  if (class_a == class_b || class_a < 0 || class_b < 0) {
    throw InvalidClass("flipped_prediction_rate: classes must be distinct and non-negative");
  }
  detail::NetWorkspace ws(params.arch);
  std::size_t relevant = 0;
  std::size_t flipped = 0;
  for (const Sample& s : ds.test) {
    if (s.label != class_a && s.label != class_b) continue;
    if (s.features.size() != params.arch.input_dim()) {
      throw DimensionMismatch("flipped_prediction_rate: feature dim mismatch");
    }
    ++relevant;
    detail::forward(params, s.features, ws);
    const int predicted = detail::argmax_lowest(ws.activations.back());
    const int other = s.label == class_a ? class_b : class_a;
    if (predicted == other) ++flipped;
  }
  if (relevant == 0) {
    throw NoRelevantSamples("flipped_prediction_rate: no test samples of either class");
  }
  return static_cast<double>(flipped) / static_cast<double>(relevant);
}

// JSON-lines export: one object per sample with keys client, split, label,
// features.
inline void export_samples_jsonl(const std::vector<ClientDataset>& clients,
                                 std::ostream& out) {
  for (const ClientDataset& ds : clients) {
    auto dump = [&](const std::vector<Sample>& samples, const char* split) {
      for (const Sample& s : samples) {
        nlohmann::json line{{"client", ds.client_id},
                            {"split", split},
                            {"label", s.label},
                            {"features", s.features}};
        out << line.dump() << '\n';
      }
    };
    dump(ds.train, "train");
    dump(ds.test, "test");
  }
}

// Inverse of export_samples_jsonl. Cluster labels and poison flags are not
// part of the wire format; imported datasets carry cluster = client_id.
inline std::vector<ClientDataset> import_samples_jsonl(std::istream& in) {
  std::map<int, ClientDataset> by_client;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.contains("client") || !obj.contains("split") ||
        !obj.contains("label") || !obj.contains("features")) {
      throw InvalidParameter("import_samples_jsonl: malformed line " + std::to_string(line_no));
    }
    const int client = obj["client"].get<int>();
    ClientDataset& ds = by_client[client];
    ds.client_id = client;
    ds.cluster = client;
    Sample s;
    s.label = obj["label"].get<int>();
    s.features = obj["features"].get<std::vector<double>>();
    if (obj["split"].get<std::string>() == "train") {
      ds.train.push_back(std::move(s));
    } else {
      ds.test.push_back(std::move(s));
    }
  }
  std::vector<ClientDataset> clients;
  clients.reserve(by_client.size());
  for (auto& [id, ds] : by_client) {
    clients.push_back(std::move(ds));
  }
  return clients;
}

}  // namespace dagfl
