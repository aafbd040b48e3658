#pragma once

#include <string>
#include <vector>

#include "cogeffort/rng.hpp"
#include "cogeffort/tensor.hpp"

// Forward/backward kernels for the small recurrent classifiers. Matrices are
// row-major with one sample per row; weights multiply from the right
// (y = x W + b).
namespace cogeffort::nn {

enum class Mode { train, infer };

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;
inline constexpr double kLogClamp = 1e-12;

// ---- Conv1D ----------------------------------------------------------------
// x (B, T, C), kernel (K, C, F), bias (F) -> (B, T, F). Only K = 1 is
// supported: with a single timestep a wider kernel has nothing to slide over.
Tensor conv1d_forward(const Tensor& x, const Tensor& kernel, const Tensor& bias);

struct Conv1dGrads {
  Tensor dx, dkernel, dbias;
};
Conv1dGrads conv1d_backward(const Tensor& x, const Tensor& kernel, const Tensor& dy);

// ---- Batch normalisation over rows of an (N, F) matrix ----------------------
struct BatchNormCache {
  Tensor x_hat;
  std::vector<double> inv_std;
  bool identity = false;
};

/// Train mode normalises with batch statistics and folds them into the running
/// estimates (momentum 0.9); infer mode uses the running estimates. A
/// single-row batch in train mode throws unless identity_fallback is set, in
/// which case the layer passes its input through unchanged.
Tensor batchnorm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         Tensor& running_mean, Tensor& running_var, Mode mode,
                         BatchNormCache* cache, bool identity_fallback = false);

struct BatchNormGrads {
  Tensor dx, dgamma, dbeta;
};
BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const Tensor& gamma,
                                  const Tensor& dy);

// ---- Recurrent cells ----------------------------------------------------------
// Parameters live in a ParamMap under `prefix` + {W_*, U_*, b_*}; W is (C, U),
// U is (U, U), b is (U).

struct GruCache {
  Tensor x, h, z, r, rh, h_tilde;
};

/// z = σ(xW_z + hU_z + b_z), r = σ(xW_r + hU_r + b_r),
/// h~ = tanh(xW_h + (r∘h)U_h + b_h), h' = (1-z)∘h + z∘h~.
Tensor gru_step_forward(const Tensor& x, const Tensor& h, const ParamMap& params,
                        const std::string& prefix, GruCache* cache);

struct StepGrads {
  Tensor dx, dh, dc;
  ParamMap dparams;  // keyed like the parameters
};
StepGrads gru_step_backward(const GruCache& cache, const ParamMap& params,
                            const std::string& prefix, const Tensor& dh_next);

struct LstmCache {
  Tensor x, h, c, i, f, o, g, c_next, tanh_c;
};

struct LstmState {
  Tensor h, c;
};

LstmState lstm_step_forward(const Tensor& x, const Tensor& h, const Tensor& c,
                            const ParamMap& params, const std::string& prefix,
                            LstmCache* cache);
StepGrads lstm_step_backward(const LstmCache& cache, const ParamMap& params,
                             const std::string& prefix, const Tensor& dh_next,
                             const Tensor& dc_next);

std::vector<std::string> gru_param_names();   // W_z ... b_h
std::vector<std::string> lstm_param_names();  // W_i ... b_g

// Whole-sequence wrappers over (B, T, C) returning the final hidden state.
enum class CellKind { gru, lstm };

struct SequenceCache {
  CellKind kind = CellKind::gru;
  std::vector<GruCache> gru;
  std::vector<LstmCache> lstm;
  std::size_t steps = 0;
  bool reversed = false;
};

Tensor recurrent_forward(CellKind kind, const Tensor& x, const ParamMap& params,
                         const std::string& prefix, std::size_t units, bool reversed,
                         SequenceCache* cache);

/// Returns dx (B, T, C); parameter gradients are accumulated into `grads`.
Tensor recurrent_backward(const SequenceCache& cache, const ParamMap& params,
                          const std::string& prefix, const Tensor& dh_final,
                          ParamMap& grads);

/// Forward half over t = 0..T-1, backward half over t = T-1..0, concatenated
/// as [h_fwd, h_bwd].
Tensor bilstm_forward(const Tensor& x, const ParamMap& params, std::size_t units,
                      SequenceCache* fwd_cache, SequenceCache* bwd_cache);

// ---- Dense, activations, dropout, loss --------------------------------------
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);

struct DenseGrads {
  Tensor dx, dw, db;
};
DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);

/// Inverted dropout. Returns the multiplicative mask (0 or 1/(1-rate)); in
/// infer mode, or with rate 0, the mask is all ones.
Tensor dropout_mask(const Tensor::Shape& shape, double rate, Mode mode, Rng& rng);
Tensor dropout(const Tensor& x, double rate, Mode mode, Rng& rng, Tensor* mask_out = nullptr);

struct SoftmaxLoss {
  double loss = 0.0;
  Tensor probs;    // (B, K)
  Tensor dlogits;  // (p - y) / B
};

/// Mean categorical cross-entropy with log clamped at 1e-12.
SoftmaxLoss softmax_cross_entropy(const Tensor& logits, const Tensor& one_hot);
Tensor softmax(const Tensor& logits);
Tensor one_hot(const std::vector<int>& labels, std::size_t classes);

struct DenseSoftmaxResult {
  double loss = 0.0;
  Tensor probs, dlogits, dfeatures, dweights, dbias;
};
DenseSoftmaxResult dense_softmax_xent(const Tensor& features, const Tensor& weights,
                                      const Tensor& bias, const Tensor& one_hot);

}  // namespace cogeffort::nn
