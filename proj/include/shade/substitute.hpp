// Copyright 2026 The shade Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "shade/common.hpp"
#include "shade/embed.hpp"

namespace shade {

/// One-hidden-layer ReLU classifier with a softmax head. Everything the
/// attack engines need from a classifier is here: class probabilities and
/// analytic input-space gradients. Weights are row-major.
struct ClassifierParams {
  std::size_t input_dim = 0;
  std::size_t hidden_width = 0;
  std::size_t num_classes = 2;
  std::vector<double> w1;  // input_dim x hidden_width
  std::vector<double> b1;  // hidden_width
  std::vector<double> w2;  // hidden_width x num_classes
  std::vector<double> b2;  // num_classes
};

struct TrainConfig {
  std::size_t hidden_width = 64;
  double learning_rate = 0.05;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  double l2_penalty = 1e-4;
  // Eq-fidelity switch: trains on the squared-error (Brier) objective
  // instead of cross-entropy. Gradients for the attack engines stay
  // cross-entropy either way.
  bool squared_error = false;
};

struct Prediction {
  std::vector<double> probs;   // softmax(logits), sums to 1
  std::vector<double> logits;
  int predicted = 0;           // argmax, lowest index on exact ties
};

struct TrainResult {
  ClassifierParams params;
  std::vector<double> loss_trace;  // full-training-set objective per epoch
};

namespace detail {

inline void forward(const ClassifierParams& p, const std::vector<double>& x,
                    std::vector<double>& hidden, std::vector<double>& logits) {
  hidden.assign(p.hidden_width, 0.0);
  for (std::size_t i = 0; i < p.input_dim; ++i) {
    double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = &p.w1[i * p.hidden_width];
    for (std::size_t k = 0; k < p.hidden_width; ++k) hidden[k] += xi * row[k];
  }
  for (std::size_t k = 0; k < p.hidden_width; ++k) {
    hidden[k] += p.b1[k];
    if (hidden[k] < 0.0) hidden[k] = 0.0;
  }
  logits.assign(p.num_classes, 0.0);
  for (std::size_t k = 0; k < p.hidden_width; ++k) {
    double hk = hidden[k];
    if (hk == 0.0) continue;
    const double* row = &p.w2[k * p.num_classes];
    for (std::size_t c = 0; c < p.num_classes; ++c) logits[c] += hk * row[c];
  }
  for (std::size_t c = 0; c < p.num_classes; ++c) logits[c] += p.b2[c];
}

inline std::vector<double> softmax(const std::vector<double>& logits) {
  double m = logits[0];
  for (double z : logits) m = std::max(m, z);
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    probs[c] = std::exp(logits[c] - m);
    sum += probs[c];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

// dLoss/dlogits for one example. Cross-entropy gives p - onehot(y); the
// Brier objective routes through the softmax Jacobian.
inline std::vector<double> loss_logit_grad(const std::vector<double>& probs, int label,
                                           bool squared_error) {
  const std::size_t K = probs.size();
  std::vector<double> g(K);
  if (!squared_error) {
    for (std::size_t c = 0; c < K; ++c)
      g[c] = probs[c] - (static_cast<int>(c) == label ? 1.0 : 0.0);
    return g;
  }
  double dot = 0.0;
  std::vector<double> dp(K);
  for (std::size_t c = 0; c < K; ++c) {
    dp[c] = 2.0 * (probs[c] - (static_cast<int>(c) == label ? 1.0 : 0.0));
    dot += dp[c] * probs[c];
  }
  for (std::size_t c = 0; c < K; ++c) g[c] = probs[c] * (dp[c] - dot);
  return g;
}

inline double example_loss(const std::vector<double>& probs, int label, bool squared_error) {
  if (!squared_error) {
    double p = std::max(probs[static_cast<std::size_t>(label)], 1e-300);
    return -std::log(p);
  }
  double s = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    double t = static_cast<int>(c) == label ? 1.0 : 0.0;
    double d = probs[c] - t;
    s += d * d;
  }
  return s;
}

inline double l2_norm_sq(const ClassifierParams& p) {
  double s = 0.0;
  for (double v : p.w1) s += v * v;
  for (double v : p.b1) s += v * v;
  for (double v : p.w2) s += v * v;
  for (double v : p.b2) s += v * v;
  return s;
}

}  // namespace detail

inline Prediction predict(const ClassifierParams& params, const EmbeddingVector& x) {
  if (x.dim() != params.input_dim)
    throw std::invalid_argument("predict: dimension mismatch");
  std::vector<double> hidden, logits;
  detail::forward(params, x.values, hidden, logits);
  Prediction out;
  out.logits = std::move(logits);
  out.probs = detail::softmax(out.logits);
  out.predicted = 0;
  for (std::size_t c = 1; c < out.probs.size(); ++c)
    if (out.probs[c] > out.probs[out.predicted]) out.predicted = static_cast<int>(c);
  return out;
}

/// Gradient of the cross-entropy loss at `target_class` with respect to the
/// input vector, by backpropagation.
inline std::vector<double> input_gradient(const ClassifierParams& params,
                                          const EmbeddingVector& x, int target_class) {
  if (x.dim() != params.input_dim)
    throw std::invalid_argument("input_gradient: dimension mismatch");
  if (target_class < 0 || target_class >= static_cast<int>(params.num_classes))
    throw std::invalid_argument("input_gradient: target class out of range");
  std::vector<double> hidden, logits;
  detail::forward(params, x.values, hidden, logits);
  std::vector<double> probs = detail::softmax(logits);

  std::vector<double> dlogits(params.num_classes);
  for (std::size_t c = 0; c < params.num_classes; ++c)
    dlogits[c] = probs[c] - (static_cast<int>(c) == target_class ? 1.0 : 0.0);

  std::vector<double> dhidden(params.hidden_width, 0.0);
  for (std::size_t k = 0; k < params.hidden_width; ++k) {
    if (hidden[k] <= 0.0) continue;  // ReLU mask
    const double* row = &params.w2[k * params.num_classes];
    double s = 0.0;
    for (std::size_t c = 0; c < params.num_classes; ++c) s += row[c] * dlogits[c];
    dhidden[k] = s;
  }

  std::vector<double> dx(params.input_dim, 0.0);
  for (std::size_t i = 0; i < params.input_dim; ++i) {
    const double* row = &params.w1[i * params.hidden_width];
    double s = 0.0;
    for (std::size_t k = 0; k < params.hidden_width; ++k) s += row[k] * dhidden[k];
    dx[i] = s;
  }
  return dx;
}

/// Mini-batch gradient descent with momentum 0.9 on mean loss plus
/// l2_penalty * |params|^2. Shuffling, init, and batch accumulation order
/// are all fixed, so identical inputs give identical parameters.
inline TrainResult train_kway(const std::vector<std::pair<EmbeddingVector, int>>& data,
                              std::size_t num_classes, const TrainConfig& config) {
  if (data.size() < 2) throw std::invalid_argument("train: at least 2 examples required");
  if (num_classes < 2) throw std::invalid_argument("train: need at least 2 classes");
  if (config.hidden_width < 1 || config.learning_rate <= 0.0 || config.batch_size < 1 ||
      config.l2_penalty < 0.0)
    throw std::invalid_argument("train: bad config");
  const std::size_t d = data[0].first.dim();
  std::vector<bool> class_seen(num_classes, false);
  for (const auto& [x, y] : data) {
    if (x.dim() != d) throw std::invalid_argument("train: dimension mismatch");
    if (y < 0 || y >= static_cast<int>(num_classes))
      throw std::invalid_argument("train: label " + std::to_string(y) + " out of range");
    class_seen[static_cast<std::size_t>(y)] = true;
  }
  for (std::size_t c = 0; c < num_classes; ++c)
    if (!class_seen[c]) throw std::invalid_argument("missing class " + std::to_string(c));

  ClassifierParams p;
  p.input_dim = d;
  p.hidden_width = config.hidden_width;
  p.num_classes = num_classes;
  p.w1.resize(d * p.hidden_width);
  p.b1.assign(p.hidden_width, 0.0);
  p.w2.resize(p.hidden_width * num_classes);
  p.b2.assign(num_classes, 0.0);

  Rng rng(derive_seed(config.seed, 0x1417ULL));
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& w : p.w1) w = (2.0 * rng_u01(rng) - 1.0) * bound1;
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(p.hidden_width));
  for (double& w : p.w2) w = (2.0 * rng_u01(rng) - 1.0) * bound2;

  const double momentum = 0.9;
  std::vector<double> vw1(p.w1.size(), 0.0), vb1(p.b1.size(), 0.0);
  std::vector<double> vw2(p.w2.size(), 0.0), vb2(p.b2.size(), 0.0);
  std::vector<double> gw1(p.w1.size()), gb1(p.b1.size());
  std::vector<double> gw2(p.w2.size()), gb2(p.b2.size());

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  std::vector<double> hidden, logits;
  std::size_t batch_index = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng_shuffle(order, rng);
    for (std::size_t start = 0; start < data.size(); start += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(start + config.batch_size, data.size());
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      std::fill(gw1.begin(), gw1.end(), 0.0);
      std::fill(gb1.begin(), gb1.end(), 0.0);
      std::fill(gw2.begin(), gw2.end(), 0.0);
      std::fill(gb2.begin(), gb2.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t pos = start; pos < end; ++pos) {
        const auto& [x, y] = data[order[pos]];
        detail::forward(p, x.values, hidden, logits);
        std::vector<double> probs = detail::softmax(logits);
        batch_loss += detail::example_loss(probs, y, config.squared_error);
        std::vector<double> dlogits = detail::loss_logit_grad(probs, y, config.squared_error);
        for (std::size_t k = 0; k < p.hidden_width; ++k) {
          double hk = hidden[k];
          if (hk == 0.0) continue;
          double* row = &gw2[k * num_classes];
          for (std::size_t c = 0; c < num_classes; ++c) row[c] += hk * dlogits[c];
        }
        for (std::size_t c = 0; c < num_classes; ++c) gb2[c] += dlogits[c];
        for (std::size_t k = 0; k < p.hidden_width; ++k) {
          if (hidden[k] <= 0.0) continue;
          const double* row = &p.w2[k * num_classes];
          double s = 0.0;
          for (std::size_t c = 0; c < num_classes; ++c) s += row[c] * dlogits[c];
          gb1[k] += s;
          for (std::size_t i = 0; i < d; ++i) {
            double xi = x.values[i];
            if (xi != 0.0) gw1[i * p.hidden_width + k] += xi * s;
          }
        }
      }
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("non-finite loss at batch " + std::to_string(batch_index));
      const double lr = config.learning_rate;
      const double wd = 2.0 * config.l2_penalty;
      auto step = [&](std::vector<double>& w, std::vector<double>& v,
                      const std::vector<double>& g) {
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] = momentum * v[i] - lr * (g[i] * inv_batch + wd * w[i]);
          w[i] += v[i];
        }
      };
      step(p.w1, vw1, gw1);
      step(p.b1, vb1, gb1);
      step(p.w2, vw2, gw2);
      step(p.b2, vb2, gb2);
    }

    double total = 0.0;
    for (const auto& [x, y] : data) {
      detail::forward(p, x.values, hidden, logits);
      total += detail::example_loss(detail::softmax(logits), y, config.squared_error);
    }
    total = total / static_cast<double>(data.size()) +
            config.l2_penalty * detail::l2_norm_sq(p);
    if (!std::isfinite(total))
      throw std::runtime_error("non-finite loss at batch " + std::to_string(batch_index));
    result.loss_trace.push_back(total);
  }
  result.params = std::move(p);
  return result;
}

/// Binary substitute training on (embedding, pseudo-label) pairs.
inline TrainResult train(const std::vector<std::pair<EmbeddingVector, int>>& shadow,
                         const TrainConfig& config) {
  return train_kway(shadow, 2, config);
}

inline double accuracy(const ClassifierParams& params,
                       const std::vector<std::pair<EmbeddingVector, int>>& data) {
  if (data.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& [x, y] : data)
    if (predict(params, x).predicted == y) ++hit;
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

// --- model file (versioned JSON; doubles round-trip exactly) ---

inline nlohmann::json params_to_json(const ClassifierParams& p) {
  nlohmann::json j;
  j["format"] = "shade-classifier";
  j["version"] = 1;
  j["input_dim"] = p.input_dim;
  j["hidden_width"] = p.hidden_width;
  j["num_classes"] = p.num_classes;
  j["w1"] = p.w1;
  j["b1"] = p.b1;
  j["w2"] = p.w2;
  j["b2"] = p.b2;
  return j;
}

inline ClassifierParams params_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "shade-classifier")
    throw std::runtime_error("not a classifier model file");
  if (j.value("version", 0) != 1)
    throw std::runtime_error("unsupported classifier model version");
  ClassifierParams p;
  p.input_dim = j.at("input_dim").get<std::size_t>();
  p.hidden_width = j.at("hidden_width").get<std::size_t>();
  p.num_classes = j.at("num_classes").get<std::size_t>();
  p.w1 = j.at("w1").get<std::vector<double>>();
  p.b1 = j.at("b1").get<std::vector<double>>();
  p.w2 = j.at("w2").get<std::vector<double>>();
  p.b2 = j.at("b2").get<std::vector<double>>();
  if (p.w1.size() != p.input_dim * p.hidden_width || p.b1.size() != p.hidden_width ||
      p.w2.size() != p.hidden_width * p.num_classes || p.b2.size() != p.num_classes)
    throw std::runtime_error("inconsistent classifier model shapes");
  return p;
}

inline void save_params(const ClassifierParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << params_to_json(p).dump(2) << '\n';
}

inline ClassifierParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  nlohmann::json j;
  in >> j;
  return params_from_json(j);
}

}  // namespace shade
