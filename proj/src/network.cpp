#include "cogeffort/network.hpp"

#include <cmath>

#include "cogeffort/error.hpp"

namespace cogeffort {

using nn::Mode;

std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::cnn_gru: return "cnn_gru";
    case Architecture::cnn: return "cnn";
    case Architecture::lstm: return "lstm";
    case Architecture::bilstm: return "bilstm";
  }
  return "?";
}

Architecture parse_architecture(const std::string& s) {
  if (s == "cnn_gru") return Architecture::cnn_gru;
  if (s == "cnn") return Architecture::cnn;
  if (s == "lstm") return Architecture::lstm;
  if (s == "bilstm") return Architecture::bilstm;
  throw ConfigError("unknown architecture '" + s + "' (cnn_gru|cnn|lstm|bilstm)");
}

std::string to_string(BnPosition p) {
  return p == BnPosition::pre_recurrent ? "pre_gru" : "post_gru";
}

BnPosition parse_bn_position(const std::string& s) {
  if (s == "pre_gru") return BnPosition::pre_recurrent;
  if (s == "post_gru") return BnPosition::post_recurrent;
  throw ConfigError("unknown bn_position '" + s + "' (pre_gru|post_gru)");
}

void ModelConfig::validate() const {
  if (input_width < 1 || conv_filters < 1 || gru_units < 1 || dense_units < 1) {
    throw ConfigError("layer sizes must be positive");
  }
  if (conv_kernel != 1) throw ConfigError("conv_kernel must be 1 for single-timestep input");
  if (classes != 2) throw ConfigError("only binary classification (classes = 2) is supported");
  if (!(dropout_rate >= 0 && dropout_rate < 1)) throw ConfigError("dropout_rate must lie in [0, 1)");
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

std::size_t ModelConfig::latent_width() const {
  switch (architecture) {
    case Architecture::cnn: return static_cast<std::size_t>(conv_filters);
    case Architecture::bilstm: return 2 * static_cast<std::size_t>(gru_units);
    default: return static_cast<std::size_t>(gru_units);
  }
}

std::vector<std::pair<std::string, Tensor::Shape>> parameter_layout(const ModelConfig& c) {
  const auto cin = static_cast<std::size_t>(c.input_width);
  const auto f = static_cast<std::size_t>(c.conv_filters);
  const auto u = static_cast<std::size_t>(c.gru_units);
  const auto d = static_cast<std::size_t>(c.dense_units);
  const auto k = static_cast<std::size_t>(c.classes);
  const std::size_t latent = c.latent_width();
  const std::size_t bn_width = c.bn_position == BnPosition::pre_recurrent ? f : latent;

  std::vector<std::pair<std::string, Tensor::Shape>> layout = {
      {"conv.kernel", {1, cin, f}},  {"conv.bias", {f}},
      {"bn.gamma", {bn_width}},      {"bn.beta", {bn_width}},
      {"bn.running_mean", {bn_width}}, {"bn.running_var", {bn_width}},
      {"dense.W", {latent, d}},      {"dense.b", {d}},
      {"out.W", {d, k}},             {"out.b", {k}},
  };
  auto add_cell = [&](const std::string& prefix, const std::vector<std::string>& names) {
    for (const auto& n : names) {
      if (n[0] == 'W') layout.push_back({prefix + n, {f, u}});
      else if (n[0] == 'U') layout.push_back({prefix + n, {u, u}});
      else layout.push_back({prefix + n, {u}});
    }
  };
  switch (c.architecture) {
    case Architecture::cnn_gru: add_cell("gru.", nn::gru_param_names()); break;
    case Architecture::lstm: add_cell("lstm.", nn::lstm_param_names()); break;
    case Architecture::bilstm:
      add_cell("lstm_fwd.", nn::lstm_param_names());
      add_cell("lstm_bwd.", nn::lstm_param_names());
      break;
    case Architecture::cnn: break;
  }
  return layout;
}

Network::Network(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng rng(derive_seed(config_.seed, {3}));
  auto layout = parameter_layout(config_);
  std::sort(layout.begin(), layout.end());
  for (const auto& [name, shape] : layout) {
    Tensor t(shape);
    const bool is_bias = name.ends_with(".bias") || name.ends_with(".b") ||
                         name.find(".b_") != std::string::npos || name == "bn.beta" ||
                         name == "bn.running_mean";
    if (name == "bn.gamma" || name == "bn.running_var") {
      t.fill(1.0);
    } else if (!is_bias) {
      std::size_t fan_in = shape.size() == 3 ? shape[0] * shape[1] : shape[0];
      std::size_t fan_out = shape.size() == 3 ? shape[0] * shape[2] : shape[1];
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (auto& v : t.values()) v = rng.uniform(-limit, limit);
    }
    params_.emplace(name, std::move(t));
  }
}

Network::Network(ModelConfig config, ParamMap params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  for (const auto& [name, shape] : parameter_layout(config_)) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ShapeError("missing parameter " + name);
    require_shape(it->second, shape, name.c_str());
  }
}

std::vector<std::string> Network::trainable_names() const {
  std::vector<std::string> names;
  for (const auto& [name, _] : params_) {
    if (name != "bn.running_mean" && name != "bn.running_var") names.push_back(name);
  }
  return names;
}

struct ForwardCache {
  Tensor input;          // (B, T, C)
  Tensor conv_out;       // (B*T, F)
  Tensor relu_in;        // pre-activation of the post-conv ReLU, (B*T, F)
  nn::BatchNormCache bn;
  nn::SequenceCache seq, seq_bwd;
  Tensor latent;         // (B, L)
  Tensor head_in;        // latent after optional BN, (B, L)
  Tensor drop_mask;
  Tensor dense_in;       // dropout output
  Tensor dense_pre;
  Tensor dense_act;
  Tensor logits;
};

void Network::check_input(const Tensor& batch) const {
  const auto w = static_cast<std::size_t>(config_.input_width);
  if (batch.rank() != 3 || batch.dim(1) != 1 || batch.dim(2) != w || batch.dim(0) == 0) {
    throw ShapeError("model input must be (B, 1, " + std::to_string(w) + "), got " +
                     shape_string(batch.shape()));
  }
}

Tensor Network::head_logits(const Tensor& latent, Mode mode, Rng* rng, ForwardCache* cache,
                            ParamMap& running) const {
  Tensor head_in = latent;
  if (config_.bn_position == BnPosition::post_recurrent) {
    head_in = nn::batchnorm_forward(latent, params_.at("bn.gamma"), params_.at("bn.beta"),
                                    running.at("bn.running_mean"), running.at("bn.running_var"),
                                    mode, cache ? &cache->bn : nullptr,
                                    config_.bn_identity_fallback);
  }
  Rng fallback(0);
  Tensor mask;
  Tensor dropped = nn::dropout(head_in, config_.dropout_rate, mode, rng ? *rng : fallback, &mask);
  Tensor pre = nn::dense_forward(dropped, params_.at("dense.W"), params_.at("dense.b"));
  Tensor act = nn::relu(pre);
  Tensor logits = nn::dense_forward(act, params_.at("out.W"), params_.at("out.b"));
  if (cache) {
    cache->head_in = std::move(head_in);
    cache->drop_mask = std::move(mask);
    cache->dense_in = std::move(dropped);
    cache->dense_pre = std::move(pre);
    cache->dense_act = std::move(act);
    cache->logits = logits;
  }
  return logits;
}

Tensor Network::run(const Tensor& batch, Mode mode, Rng* rng, ForwardCache* cache,
                    ParamMap& running) const {
  check_input(batch);
  if (mode == Mode::train && !rng) throw ConfigError("train-mode forward needs an rng");
  const std::size_t b = batch.dim(0), t = batch.dim(1);
  const auto f = static_cast<std::size_t>(config_.conv_filters);
  const auto u = static_cast<std::size_t>(config_.gru_units);

  Tensor conv = nn::conv1d_forward(batch, params_.at("conv.kernel"), params_.at("conv.bias"))
                    .reshaped({b * t, f});
  Tensor relu_in = conv;
  if (config_.bn_position == BnPosition::pre_recurrent) {
    relu_in = nn::batchnorm_forward(conv, params_.at("bn.gamma"), params_.at("bn.beta"),
                                    running.at("bn.running_mean"), running.at("bn.running_var"),
                                    mode, cache ? &cache->bn : nullptr,
                                    config_.bn_identity_fallback);
  }
  const Tensor seq_in = nn::relu(relu_in).reshaped({b, t, f});

  Tensor latent;
  switch (config_.architecture) {
    case Architecture::cnn_gru:
      latent = nn::recurrent_forward(nn::CellKind::gru, seq_in, params_, "gru.", u, false,
                                     cache ? &cache->seq : nullptr);
      break;
    case Architecture::lstm:
      latent = nn::recurrent_forward(nn::CellKind::lstm, seq_in, params_, "lstm.", u, false,
                                     cache ? &cache->seq : nullptr);
      break;
    case Architecture::bilstm:
      latent = nn::bilstm_forward(seq_in, params_, u, cache ? &cache->seq : nullptr,
                                  cache ? &cache->seq_bwd : nullptr);
      break;
    case Architecture::cnn:
      latent = seq_in.reshaped({b, t * f});
      break;
  }
  if (cache) {
    cache->input = batch;
    cache->conv_out = std::move(conv);
    cache->relu_in = std::move(relu_in);
    cache->latent = latent;
  }
  return latent;
}

Tensor Network::forward(const Tensor& batch, Mode mode, Rng* rng) {
  const Tensor latent = run(batch, mode, rng, nullptr, params_);
  return nn::softmax(head_logits(latent, mode, rng, nullptr, params_));
}

Network::LossGrad Network::loss_and_gradients(const Tensor& batch, const std::vector<int>& labels,
                                              Rng& rng) {
  if (labels.size() != batch.dim(0)) throw ShapeError("label count must match batch size");
  ForwardCache cache;
  const Tensor latent = run(batch, Mode::train, &rng, &cache, params_);
  const Tensor logits = head_logits(latent, Mode::train, &rng, &cache, params_);
  nn::SoftmaxLoss sl = nn::softmax_cross_entropy(
      logits, nn::one_hot(labels, static_cast<std::size_t>(config_.classes)));

  LossGrad out;
  out.loss = sl.loss;
  out.probs = std::move(sl.probs);
  ParamMap& g = out.grads;

  nn::DenseGrads d_out = nn::dense_backward(cache.dense_act, params_.at("out.W"), sl.dlogits);
  g["out.W"] = std::move(d_out.dw);
  g["out.b"] = std::move(d_out.db);
  const Tensor d_pre = nn::relu_backward(cache.dense_pre, d_out.dx);
  nn::DenseGrads d_dense = nn::dense_backward(cache.dense_in, params_.at("dense.W"), d_pre);
  g["dense.W"] = std::move(d_dense.dw);
  g["dense.b"] = std::move(d_dense.db);
  Tensor d_latent = hadamard(d_dense.dx, cache.drop_mask);

  if (config_.bn_position == BnPosition::post_recurrent) {
    nn::BatchNormGrads bg = nn::batchnorm_backward(cache.bn, params_.at("bn.gamma"), d_latent);
    g["bn.gamma"] = std::move(bg.dgamma);
    g["bn.beta"] = std::move(bg.dbeta);
    d_latent = std::move(bg.dx);
  }

  const std::size_t b = batch.dim(0), t = batch.dim(1);
  const auto f = static_cast<std::size_t>(config_.conv_filters);
  const auto u = static_cast<std::size_t>(config_.gru_units);
  Tensor d_seq;
  switch (config_.architecture) {
    case Architecture::cnn_gru:
      d_seq = nn::recurrent_backward(cache.seq, params_, "gru.", d_latent, g);
      break;
    case Architecture::lstm:
      d_seq = nn::recurrent_backward(cache.seq, params_, "lstm.", d_latent, g);
      break;
    case Architecture::bilstm: {
      Tensor dh_f({b, u}), dh_b({b, u});
      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < u; ++j) {
          dh_f(i, j) = d_latent(i, j);
          dh_b(i, j) = d_latent(i, u + j);
        }
      }
      d_seq = nn::recurrent_backward(cache.seq, params_, "lstm_fwd.", dh_f, g);
      add_inplace(d_seq, nn::recurrent_backward(cache.seq_bwd, params_, "lstm_bwd.", dh_b, g));
      break;
    }
    case Architecture::cnn:
      d_seq = d_latent.reshaped({b, t, f});
      break;
  }

  Tensor d_conv = nn::relu_backward(cache.relu_in, d_seq.reshaped({b * t, f}));
  if (config_.bn_position == BnPosition::pre_recurrent) {
    nn::BatchNormGrads bg = nn::batchnorm_backward(cache.bn, params_.at("bn.gamma"), d_conv);
    g["bn.gamma"] = std::move(bg.dgamma);
    g["bn.beta"] = std::move(bg.dbeta);
    d_conv = std::move(bg.dx);
  }
  nn::Conv1dGrads cg = nn::conv1d_backward(cache.input, params_.at("conv.kernel"),
                                           d_conv.reshaped({b, t, f}));
  g["conv.kernel"] = std::move(cg.dkernel);
  g["conv.bias"] = std::move(cg.dbias);
  return out;
}

Tensor Network::predict_proba(const Tensor& batch) const {
  ParamMap running{{"bn.running_mean", params_.at("bn.running_mean")},
                   {"bn.running_var", params_.at("bn.running_var")}};
  const Tensor latent = run(batch, Mode::infer, nullptr, nullptr, running);
  return nn::softmax(head_logits(latent, Mode::infer, nullptr, nullptr, running));
}

std::vector<int> Network::predict(const Tensor& batch) const {
  const Tensor p = predict_proba(batch);
  std::vector<int> labels(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) labels[i] = p(i, 1) > p(i, 0) ? 1 : 0;
  return labels;
}

Tensor Network::extract_latent(const Tensor& batch) const {
  ParamMap running{{"bn.running_mean", params_.at("bn.running_mean")},
                   {"bn.running_var", params_.at("bn.running_var")}};
  return run(batch, Mode::infer, nullptr, nullptr, running);
}

std::vector<double> Network::head_probabilities(const Tensor& latents) const {
  if (latents.rank() != 2 || latents.cols() != config_.latent_width()) {
    throw ShapeError("head_probabilities: expected (N, " + std::to_string(config_.latent_width()) +
                     "), got " + shape_string(latents.shape()));
  }
  ParamMap running{{"bn.running_mean", params_.at("bn.running_mean")},
                   {"bn.running_var", params_.at("bn.running_var")}};
  const Tensor p = nn::softmax(head_logits(latents, Mode::infer, nullptr, nullptr, running));
  std::vector<double> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) out[i] = p(i, 1);
  return out;
}

double Network::head_probability(std::span<const double> latent) const {
  const Tensor x({1, latent.size()}, std::vector<double>(latent.begin(), latent.end()));
  return head_probabilities(x).front();
}

}  // namespace cogeffort
