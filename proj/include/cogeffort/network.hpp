#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cogeffort/layers.hpp"
#include "cogeffort/tensor.hpp"

namespace cogeffort {

enum class Architecture { cnn_gru, cnn, lstm, bilstm };
enum class BnPosition { pre_recurrent, post_recurrent };

std::string to_string(Architecture a);
Architecture parse_architecture(const std::string& s);
std::string to_string(BnPosition p);
BnPosition parse_bn_position(const std::string& s);

// CNN-GRU defaults: lr 0.003, 8 GRU units,
// 32 filters, dropout 0.1, batch size 4.
struct ModelConfig {
  Architecture architecture = Architecture::cnn_gru;
  int input_width = 12;
  int conv_filters = 32;
  int conv_kernel = 1;
  int gru_units = 8;  // hidden size for every recurrent variant
  double dropout_rate = 0.1;
  int dense_units = 64;
  int classes = 2;
  double learning_rate = 0.003;
  int batch_size = 4;
  int max_epochs = 150;
  int patience = 8;
  BnPosition bn_position = BnPosition::pre_recurrent;
  bool bn_identity_fallback = false;
  std::uint64_t seed = 42;

  void validate() const;
  /// Width of the representation fed to the classification head.
  std::size_t latent_width() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ForwardCache;

// Conv1D(k=1) -> [BN -> ReLU] -> recurrent layer -> dropout -> dense(ReLU)
// -> softmax. With bn_position = post_recurrent the BN block moves after the
// recurrent layer and ReLU follows the convolution instead.
class Network {
 public:
  /// Glorot-uniform weights, zero biases/beta, unit gamma, seeded from config.
  explicit Network(ModelConfig config);
  Network(ModelConfig config, ParamMap params);

  const ModelConfig& config() const { return config_; }
  const ParamMap& params() const { return params_; }
  ParamMap& params() { return params_; }
  /// Parameters updated by the optimiser (excludes BN running statistics).
  std::vector<std::string> trainable_names() const;

  /// (B, 1, input_width) -> (B, classes). Infer mode is deterministic.
  Tensor forward(const Tensor& batch, nn::Mode mode, Rng* rng = nullptr);

  struct LossGrad {
    double loss = 0.0;
    Tensor probs;
    ParamMap grads;
  };
  /// Train-mode forward + backward. Updates BN running statistics.
  LossGrad loss_and_gradients(const Tensor& batch, const std::vector<int>& labels, Rng& rng);

  Tensor predict_proba(const Tensor& batch) const;
  /// argmax of infer-mode probabilities, ties to class 0.
  std::vector<int> predict(const Tensor& batch) const;
  /// Final recurrent hidden state (before dropout); for the plain CNN, the
  /// activated convolution features.
  Tensor extract_latent(const Tensor& batch) const;
  /// Class-1 probability of the classification head applied to one latent
  /// vector (infer mode).
  double head_probability(std::span<const double> latent) const;
  /// Row-wise head_probability for an (N, latent_width) matrix.
  std::vector<double> head_probabilities(const Tensor& latents) const;

 private:
  Tensor run(const Tensor& batch, nn::Mode mode, Rng* rng, ForwardCache* cache,
             ParamMap& running) const;
  Tensor head_logits(const Tensor& latent, nn::Mode mode, Rng* rng, ForwardCache* cache,
                     ParamMap& running) const;
  void check_input(const Tensor& batch) const;

  ModelConfig config_;
  ParamMap params_;
};

/// Parameter shapes implied by a config, keyed by name.
std::vector<std::pair<std::string, Tensor::Shape>> parameter_layout(const ModelConfig& config);

}  // namespace cogeffort
