#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "dagfl/errors.hpp"
#include "dagfl/random.hpp"

namespace dagfl {

struct Sample {
  std::vector<double> features;
  int label = 0;
};

// Feed-forward net shape: input dim, hidden dims..., class count.
struct Architecture {
  std::vector<std::size_t> layers;

  std::size_t param_count() const {
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
      count += (layers[l] + 1) * layers[l + 1];
    }
    return count;
  }

  std::size_t input_dim() const { return layers.front(); }
  std::size_t num_classes() const { return layers.back(); }

  bool operator==(const Architecture&) const = default;

  void validate() const {
    if (layers.size() < 2) {
      throw InvalidParameter("architecture needs at least input and output layers");
    }
    for (std::size_t n : layers) {
      if (n == 0) throw InvalidParameter("architecture layer sizes must be positive");
    }
  }
};

// Flat parameter vector. Per-layer layout: weights row-major by output
// neuron (n_out x n_in), then n_out biases.
struct ModelParams {
  std::vector<double> values;
  Architecture arch;

  bool finite() const {
    return std::all_of(values.begin(), values.end(),
                       [](double v) { return std::isfinite(v); });
  }
};

struct TrainConfig {
  int local_epochs = 1;
  int local_batches = 10;
  int batch_size = 10;
  double learning_rate = 0.05;

  void validate() const {
    if (local_epochs <= 0 || local_batches <= 0 || batch_size <= 0) {
      throw InvalidParameter("train config counts must be positive");
    }
    if (learning_rate < 0.0) {
      throw InvalidParameter("learning rate must be non-negative");
    }
  }
};

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;
  std::size_t sample_count = 0;
};

namespace detail {

// Offset of layer l's block within the flat vector.
inline std::size_t layer_offset(const Architecture& arch, std::size_t l) {
  std::size_t offset = 0;
  for (std::size_t i = 0; i < l; ++i) {
    offset += (arch.layers[i] + 1) * arch.layers[i + 1];
  }
  return offset;
}

// Scratch buffers for one forward/backward pass, reused across samples.
struct NetWorkspace {
  std::vector<std::vector<double>> activations;      // per layer, post-activation
  std::vector<std::vector<double>> pre_activations;  // per layer > 0
  std::vector<std::vector<double>> deltas;

  explicit NetWorkspace(const Architecture& arch) {
    activations.resize(arch.layers.size());
    pre_activations.resize(arch.layers.size());
    deltas.resize(arch.layers.size());
    for (std::size_t l = 0; l < arch.layers.size(); ++l) {
      activations[l].resize(arch.layers[l]);
      pre_activations[l].resize(arch.layers[l]);
      deltas[l].resize(arch.layers[l]);
    }
  }
};

// Forward pass; leaves logits (pre-softmax) in activations.back().
inline void forward(const ModelParams& params, std::span<const double> input,
                    NetWorkspace& ws) {
  const Architecture& arch = params.arch;
  std::copy(input.begin(), input.end(), ws.activations[0].begin());
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < arch.layers.size(); ++l) {
    const std::size_t n_in = arch.layers[l];
    const std::size_t n_out = arch.layers[l + 1];
    const double* weights = params.values.data() + offset;
    const double* biases = weights + n_in * n_out;
    const bool last = (l + 2 == arch.layers.size());
    for (std::size_t o = 0; o < n_out; ++o) {
      double z = biases[o];
      const double* row = weights + o * n_in;
      const double* in = ws.activations[l].data();
      for (std::size_t i = 0; i < n_in; ++i) {
        z += row[i] * in[i];
      }
      ws.pre_activations[l + 1][o] = z;
      ws.activations[l + 1][o] = last ? z : (z > 0.0 ? z : 0.0);
    }
    offset += (n_in + 1) * n_out;
  }
}

// In-place stable softmax.
inline void softmax(std::vector<double>& logits) {
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - max_logit);
    sum += v;
  }
  for (double& v : logits) {
    v /= sum;
  }
}

inline int argmax_lowest(std::span<const double> values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) {
      best = i;
    }
  }
  return best;
}

inline void check_batch(const ModelParams& params, std::span<const Sample> batch) {
  if (batch.empty()) {
    throw EmptyDataset("empty sample set");
  }
  for (const Sample& s : batch) {
    if (s.features.size() != params.arch.input_dim()) {
      throw DimensionMismatch("sample feature dim does not match architecture input");
    }
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= params.arch.num_classes()) {
      throw DimensionMismatch("sample label out of class range");
    }
  }
}

// Accumulates the gradient of mean cross-entropy over `batch` into `grad`
// (which must be zeroed by the caller). Mean is over the batch.
inline void accumulate_ce_gradient(const ModelParams& params,
                                   std::span<const Sample> batch,
                                   NetWorkspace& ws, std::vector<double>& grad) {
  const Architecture& arch = params.arch;
  const std::size_t depth = arch.layers.size();
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const Sample& sample : batch) {
    forward(params, sample.features, ws);
    std::vector<double>& probs = ws.deltas[depth - 1];
    probs = ws.activations[depth - 1];
    softmax(probs);
    probs[static_cast<std::size_t>(sample.label)] -= 1.0;  // dL/dlogits

    for (std::size_t l = depth - 1; l >= 1; --l) {
      const std::size_t n_in = arch.layers[l - 1];
      const std::size_t n_out = arch.layers[l];
      const std::size_t offset = layer_offset(arch, l - 1);
      double* gw = grad.data() + offset;
      double* gb = gw + n_in * n_out;
      const double* weights = params.values.data() + offset;
      const std::vector<double>& delta = ws.deltas[l];
      const std::vector<double>& in = ws.activations[l - 1];

      for (std::size_t o = 0; o < n_out; ++o) {
        const double d = delta[o] * inv_n;
        double* grow = gw + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) {
          grow[i] += d * in[i];
        }
        gb[o] += d;
      }
      if (l == 1) break;
      std::vector<double>& prev_delta = ws.deltas[l - 1];
      for (std::size_t i = 0; i < n_in; ++i) {
        double acc = 0.0;
        for (std::size_t o = 0; o < n_out; ++o) {
          acc += weights[o * n_in + i] * delta[o];
        }
        // ReLU derivative on the hidden pre-activation.
        prev_delta[i] = ws.pre_activations[l - 1][i] > 0.0 ? acc : 0.0;
      }
    }
  }
}

// Shared SGD loop. When `anchor` is non-null a proximal pull
// mu * (w - anchor) is added to every step's gradient.
inline ModelParams train_impl(const ModelParams& params, std::span<const Sample> data,
                              const TrainConfig& cfg, Rng& rng,
                              const ModelParams* anchor, double mu) {
  cfg.validate();
  check_batch(params, data);
  if (anchor != nullptr && anchor->arch != params.arch) {
    throw ArchitectureMismatch("proximal anchor architecture mismatch");
  }

  ModelParams result = params;
  NetWorkspace ws(params.arch);
  std::vector<double> grad(params.values.size());
  std::vector<std::size_t> order(data.size());
  std::vector<Sample> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));

  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    for (int b = 0; b < cfg.local_batches; ++b) {
      batch.clear();
      for (int k = 0; k < cfg.batch_size; ++k) {
        // Cycle through the shuffled data when the client holds fewer
        // samples than local_batches * batch_size.
        const std::size_t idx = (static_cast<std::size_t>(b) *
                                     static_cast<std::size_t>(cfg.batch_size) +
                                 static_cast<std::size_t>(k)) %
                                data.size();
        batch.push_back(data[order[idx]]);
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      accumulate_ce_gradient(result, batch, ws, grad);
      if (anchor != nullptr) {
        for (std::size_t i = 0; i < grad.size(); ++i) {
          grad[i] += mu * (result.values[i] - anchor->values[i]);
        }
      }
      for (std::size_t i = 0; i < grad.size(); ++i) {
        result.values[i] -= cfg.learning_rate * grad[i];
      }
    }
  }
  return result;
}

}  // namespace detail

// Fan-in scaled init: weights ~ N(0, 1/n_in), biases zero.
inline ModelParams init_params(const Architecture& arch, Rng& rng) {
  arch.validate();
  ModelParams params{std::vector<double>(arch.param_count()), arch};
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < arch.layers.size(); ++l) {
    const std::size_t n_in = arch.layers[l];
    const std::size_t n_out = arch.layers[l + 1];
    const double stddev = 1.0 / std::sqrt(static_cast<double>(n_in));
    for (std::size_t w = 0; w < n_in * n_out; ++w) {
      params.values[offset + w] = rng.next_normal(0.0, stddev);
    }
    // biases stay zero
    offset += (n_in + 1) * n_out;
  }
  return params;
}

// Element-wise mean of two parameter vectors.
inline ModelParams average(const ModelParams& p, const ModelParams& q) {
  if (p.arch != q.arch) {
    throw ArchitectureMismatch("cannot average params of different architectures");
  }
  ModelParams result = p;
  for (std::size_t i = 0; i < result.values.size(); ++i) {
    result.values[i] = 0.5 * (p.values[i] + q.values[i]);
  }
  return result;
}

// Exact gradient of mean cross-entropy over the batch. Exposed for testing.
inline std::vector<double> gradient(const ModelParams& params,
                                    std::span<const Sample> batch) {
  detail::check_batch(params, batch);
  detail::NetWorkspace ws(params.arch);
  std::vector<double> grad(params.values.size());
  detail::accumulate_ce_gradient(params, batch, ws, grad);
  return grad;
}

inline ModelParams train(const ModelParams& params, std::span<const Sample> data,
                         const TrainConfig& cfg, Rng& rng) {
  return detail::train_impl(params, data, cfg, rng, nullptr, 0.0);
}

// Accuracy by argmax (ties to the lowest class index) and mean cross-entropy
// with probabilities clamped to [1e-12, 1].
inline Evaluation evaluate(const ModelParams& params, std::span<const Sample> data) {
  detail::check_batch(params, data);
  detail::NetWorkspace ws(params.arch);
  std::vector<double> probs;
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (const Sample& sample : data) {
    detail::forward(params, sample.features, ws);
    probs = ws.activations.back();
    detail::softmax(probs);
    if (detail::argmax_lowest(probs) == sample.label) {
      ++correct;
    }
    const double p = std::clamp(probs[static_cast<std::size_t>(sample.label)], 1e-12, 1.0);
    loss_sum += -std::log(p);
  }
  Evaluation eval;
  eval.sample_count = data.size();
  eval.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  eval.loss = loss_sum / static_cast<double>(data.size());
  return eval;
}

}  // namespace dagfl
