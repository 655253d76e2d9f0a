#pragma once

// Multi-label selector: an MLP with sigmoid outputs trained with a
// class-balanced binary cross-entropy, SGD with momentum and weight decay, a
// step learning-rate schedule and online hard example mining.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pel/error.hpp"
#include "pel/labeling.hpp"

namespace pel {

inline constexpr double kProbClamp = 1e-7;

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> biases;   // out

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// ReLU hidden layers, sigmoid output of width K.
struct SelectorNet {
  std::vector<std::size_t> layer_dims;
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }

  /// Zero-initialised net with the given shape.
  static SelectorNet zeros(std::vector<std::size_t> dims) {
    if (dims.size() < 2) throw InputError("selector needs at least input and output widths");
    for (std::size_t d : dims) {
      if (d == 0) throw InputError("layer widths must be positive");
    }
    SelectorNet net;
    net.layer_dims = std::move(dims);
    for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
      DenseLayer layer;
      layer.in = net.layer_dims[l];
      layer.out = net.layer_dims[l + 1];
      layer.weights.assign(layer.in * layer.out, 0.0);
      layer.biases.assign(layer.out, 0.0);
      net.layers.push_back(std::move(layer));
    }
    return net;
  }

  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static SelectorNet initialize(std::vector<std::size_t> dims, std::mt19937_64& rng) {
    SelectorNet net = zeros(std::move(dims));
    for (DenseLayer& layer : net.layers) {
      const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (double& w : layer.weights) w = dist(rng);
    }
    return net;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers) n += l.weights.size() + l.biases.size();
    return n;
  }

  friend bool operator==(const SelectorNet&, const SelectorNet&) = default;
};

/// Intermediate values of one forward pass, kept for backprop.
struct ForwardTrace {
  std::vector<std::vector<double>> activations;  // activations[0] is the input
  std::vector<double> logits;
  std::vector<double> outputs;
};

inline ForwardTrace forward_trace(const SelectorNet& net, std::span<const double> x) {
  if (x.size() != net.input_dim()) {
    throw InputError("feature length " + std::to_string(x.size()) + " does not match selector input " +
                     std::to_string(net.input_dim()));
  }
  ForwardTrace t;
  t.activations.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const DenseLayer& layer = net.layers[l];
    const std::vector<double>& a = t.activations.back();
    std::vector<double> z(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double s = layer.biases[o];
      const double* row = layer.weights.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) s += row[i] * a[i];
      z[o] = s;
    }
    if (l + 1 == net.layers.size()) {
      t.logits = std::move(z);
    } else {
      for (double& v : z) v = std::max(v, 0.0);
      t.activations.push_back(std::move(z));
    }
  }
  t.outputs.resize(t.logits.size());
  std::transform(t.logits.begin(), t.logits.end(), t.outputs.begin(), sigmoid);
  return t;
}

/// K scores in (0, 1).
inline std::vector<double> forward(const SelectorNet& net, std::span<const double> x) {
  return forward_trace(net, x).outputs;
}

/// Index of the highest score, lowest index on ties.
inline std::size_t argmax_index(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

inline std::size_t select(const SelectorNet& net, std::span<const double> x) {
  return argmax_index(forward_trace(net, x).logits);
}

struct BceResult {
  double loss = 0.0;
  std::vector<double> grad_logits;  // dL / d(pre-sigmoid logit), per output
};

/// Sum over outputs of -b*y*log(p) - (1-b)*(1-y)*log(1-p). Probabilities are
/// clamped to [1e-7, 1 - 1e-7] inside the logarithms.
inline BceResult class_balanced_bce(std::span<const double> predictions, std::span<const int> targets,
                                    std::span<const double> betas) {
  if (predictions.size() != targets.size() || predictions.size() != betas.size()) {
    throw InputError("class_balanced_bce: predictions, targets and betas differ in length");
  }
  BceResult r;
  r.grad_logits.resize(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double y = std::clamp(predictions[i], kProbClamp, 1.0 - kProbClamp);
    const double t = targets[i] != 0 ? 1.0 : 0.0;
    const double b = betas[i];
    r.loss += -b * t * std::log(y) - (1.0 - b) * (1.0 - t) * std::log(1.0 - y);
    const double p = predictions[i];
    r.grad_logits[i] = -b * t * (1.0 - p) + (1.0 - b) * (1.0 - t) * p;
  }
  return r;
}

/// Per-column positive weight 1 - (positives / rows), clamped to [eps, 1 - eps].
inline std::vector<double> compute_beta(std::span<const std::vector<int>> batch_targets, double eps) {
  if (batch_targets.empty()) throw InputError("compute_beta: empty batch");
  const std::size_t k = batch_targets.front().size();
  std::vector<double> beta(k, 0.0);
  for (const auto& row : batch_targets) {
    if (row.size() != k) throw InputError("compute_beta: ragged label rows");
    for (std::size_t i = 0; i < k; ++i) beta[i] += row[i] != 0 ? 1.0 : 0.0;
  }
  const double rows = static_cast<double>(batch_targets.size());
  for (double& b : beta) b = std::clamp(1.0 - b / rows, eps, 1.0 - eps);
  return beta;
}

/// Indices of the ceil(fraction * B) largest losses, largest first; equal
/// losses keep the lower index.
inline std::vector<std::size_t> ohem_filter(std::span<const double> losses, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("ohem fraction must lie in (0, 1]");
  std::vector<std::size_t> idx(losses.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return losses[a] > losses[b]; });
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(losses.size()) - 1e-12));
  idx.resize(std::min(keep, idx.size()));
  return idx;
}

/// Parameter-shaped gradient buffer.
struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  explicit Gradients(const SelectorNet& net) {
    for (const DenseLayer& l : net.layers) {
      weights.emplace_back(l.weights.size(), 0.0);
      biases.emplace_back(l.biases.size(), 0.0);
    }
  }

  void scale(double s) {
    for (auto& w : weights) for (double& v : w) v *= s;
    for (auto& b : biases) for (double& v : b) v *= s;
  }
};

/// Accumulates d(loss)/d(params) for one sample given d(loss)/d(logits).
inline void backprop(const SelectorNet& net, const ForwardTrace& t, std::span<const double> grad_logits,
                     Gradients& g) {
  std::vector<double> delta(grad_logits.begin(), grad_logits.end());
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const DenseLayer& layer = net.layers[l];
    const std::vector<double>& a = t.activations[l];
    for (std::size_t o = 0; o < layer.out; ++o) {
      g.biases[l][o] += delta[o];
      double* row = g.weights[l].data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) row[i] += delta[o] * a[i];
    }
    if (l == 0) break;
    std::vector<double> prev(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* row = layer.weights.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) prev[i] += row[i] * delta[o];
    }
    // a is the ReLU output of the previous layer; its derivative is 1 where a > 0.
    for (std::size_t i = 0; i < layer.in; ++i) {
      if (a[i] <= 0.0) prev[i] = 0.0;
    }
    delta = std::move(prev);
  }
}

/// Mini-batch objective: mean over the retained samples of the per-sample
/// summed loss, with the positive weights fixed.
struct BatchObjective {
  double loss = 0.0;
  std::vector<double> per_sample;  // every sample in the batch
  std::vector<std::size_t> retained;
};

inline BatchObjective batch_objective(const SelectorNet& net, std::span<const LabelRecord> batch,
                                      std::span<const double> betas, double ohem_fraction, Gradients* grads) {
  BatchObjective obj;
  std::vector<ForwardTrace> traces;
  std::vector<BceResult> bce;
  traces.reserve(batch.size());
  bce.reserve(batch.size());
  for (const LabelRecord& r : batch) {
    if (r.labels.size() != net.output_dim()) {
      throw InputError("record '" + r.image_id + "' has " + std::to_string(r.labels.size()) +
                       " labels, selector outputs " + std::to_string(net.output_dim()));
    }
    traces.push_back(forward_trace(net, r.features));
    bce.push_back(class_balanced_bce(traces.back().outputs, r.labels, betas));
    obj.per_sample.push_back(bce.back().loss);
  }
  obj.retained = ohem_filter(obj.per_sample, ohem_fraction);
  const double inv = 1.0 / static_cast<double>(obj.retained.size());
  for (std::size_t i : obj.retained) {
    obj.loss += obj.per_sample[i] * inv;
    if (grads != nullptr) {
      std::vector<double> g = bce[i].grad_logits;
      for (double& v : g) v *= inv;
      backprop(net, traces[i], g, *grads);
    }
  }
  return obj;
}

struct TrainConfig {
  std::vector<std::size_t> hidden{32, 32};
  std::size_t batch_size = 16;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  double lr_initial = 1e-3;
  double lr_decay_factor = 0.1;
  std::size_t lr_decay_epochs = 20;
  double lr_floor = 1e-6;
  double ohem_fraction = 0.5;
  double beta_clamp = 0.05;
  double p_mask_initial = 0.3;
  double p_mask_final = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline void validate(const TrainConfig& c) {
  if (c.batch_size == 0) throw InputError("batch_size must be positive");
  if (!(c.lr_initial > 0.0) || !(c.lr_floor > 0.0)) throw InputError("learning rates must be positive");
  if (!(c.lr_decay_factor > 0.0 && c.lr_decay_factor < 1.0)) throw InputError("lr_decay_factor must lie in (0, 1)");
  if (c.lr_decay_epochs == 0) throw InputError("lr_decay_epochs must be positive");
  if (!(c.ohem_fraction > 0.0 && c.ohem_fraction <= 1.0)) throw InputError("ohem_fraction must lie in (0, 1]");
  if (!(c.beta_clamp >= 0.0 && c.beta_clamp < 0.5)) throw InputError("beta_clamp must lie in [0, 0.5)");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw InputError("momentum must lie in [0, 1)");
  if (c.weight_decay < 0.0) throw InputError("weight_decay must be non-negative");
  for (double p : {c.p_mask_initial, c.p_mask_final}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("p_mask endpoints must lie in [0, 1]");
  }
}

/// Per-epoch learning rates: lr_initial, decayed every lr_decay_epochs, until
/// the rate falls below lr_floor.
inline std::vector<double> lr_schedule(const TrainConfig& c) {
  validate(c);
  std::vector<double> lrs;
  for (int step = 0;; ++step) {
    const double lr = c.lr_initial * std::pow(c.lr_decay_factor, step);
    if (lr < c.lr_floor * (1.0 - 1e-9)) break;
    lrs.insert(lrs.end(), c.lr_decay_epochs, lr);
  }
  return lrs;
}

/// Linear interpolation from p_mask_initial (first epoch) to p_mask_final (last).
inline double p_mask_at(const TrainConfig& c, std::size_t epoch, std::size_t total_epochs) {
  if (total_epochs <= 1) return c.p_mask_initial;
  const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return c.p_mask_initial + (c.p_mask_final - c.p_mask_initial) * t;
}

/// Fraction of records whose selected model carries a positive label.
/// All-negative records count as misses unless `exclude_all_zero` is set.
inline double selector_accuracy(const SelectorNet& net, std::span<const LabelRecord> dataset,
                                bool exclude_all_zero = false) {
  if (dataset.empty()) throw InputError("selector_accuracy: empty dataset");
  std::size_t hits = 0, total = 0;
  for (const LabelRecord& r : dataset) {
    if (exclude_all_zero && all_zero(r.labels)) continue;
    ++total;
    const std::size_t k = select(net, r.features);
    if (k < r.labels.size() && r.labels[k] != 0) ++hits;
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double p_mask = 0.0;
  double mean_loss = 0.0;
  double train_accuracy = 0.0;
  std::vector<double> batch_losses;  // OHEM-retained objective per batch
};

struct TrainResult {
  SelectorNet net;
  std::vector<EpochLog> log;
};

/// Produces the training view of record `index` for one epoch. Receives the
/// training RNG and the current masking probability.
using Augmenter = std::function<LabelRecord(std::size_t index, std::mt19937_64& rng, double p_mask)>;

inline void check_dataset(std::span<const LabelRecord> dataset) {
  if (dataset.empty()) throw InputError("training dataset is empty");
  const std::size_t d = dataset.front().features.size();
  const std::size_t k = dataset.front().labels.size();
  if (d == 0 || k == 0) throw InputError("records need non-empty features and labels");
  for (const LabelRecord& r : dataset) {
    if (r.features.size() != d || r.labels.size() != k) {
      throw InputError("record '" + r.image_id + "' has inconsistent feature or label length");
    }
  }
}

inline TrainResult train(std::span<const LabelRecord> dataset, const TrainConfig& cfg,
                         const Augmenter& augment = {}) {
  validate(cfg);
  check_dataset(dataset);
  const std::size_t d = dataset.front().features.size();
  const std::size_t k = dataset.front().labels.size();

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> dims{d};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(k);
  TrainResult result{SelectorNet::initialize(dims, rng), {}};
  SelectorNet& net = result.net;

  Gradients velocity(net);
  const std::vector<double> lrs = lr_schedule(cfg);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < lrs.size(); ++epoch) {
    EpochLog log;
    log.epoch = epoch + 1;
    log.lr = lrs[epoch];
    log.p_mask = p_mask_at(cfg, epoch, lrs.size());
    std::shuffle(order.begin(), order.end(), rng);

    for (std::size_t start = 0, batch_no = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<LabelRecord> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(augment ? augment(order[i], rng, log.p_mask) : dataset[order[i]]);
      }
      std::vector<std::vector<int>> targets;
      targets.reserve(batch.size());
      for (const LabelRecord& r : batch) targets.push_back(r.labels);
      const std::vector<double> betas = compute_beta(targets, cfg.beta_clamp);

      Gradients grads(net);
      const BatchObjective obj = batch_objective(net, batch, betas, cfg.ohem_fraction, &grads);
      if (!std::isfinite(obj.loss)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                             std::to_string(batch_no + 1));
      }
      log.batch_losses.push_back(obj.loss);

      for (std::size_t l = 0; l < net.layers.size(); ++l) {
        DenseLayer& layer = net.layers[l];
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
          double& v = velocity.weights[l][i];
          v = cfg.momentum * v + log.lr * (grads.weights[l][i] + cfg.weight_decay * layer.weights[i]);
          layer.weights[i] -= v;
        }
        for (std::size_t i = 0; i < layer.biases.size(); ++i) {
          double& v = velocity.biases[l][i];
          v = cfg.momentum * v + log.lr * grads.biases[l][i];
          layer.biases[i] -= v;
        }
      }
    }
    double sum = 0.0;
    for (double v : log.batch_losses) sum += v;
    log.mean_loss = sum / static_cast<double>(log.batch_losses.size());
    log.train_accuracy = selector_accuracy(net, dataset);
    result.log.push_back(std::move(log));
  }
  return result;
}

}  // namespace pel
