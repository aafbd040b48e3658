#include "cogeffort/layers.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

#include "cogeffort/error.hpp"

namespace cogeffort::nn {

namespace {

double sigmoid(double a) {
  if (a >= 0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

const Tensor& param(const ParamMap& params, const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) throw ShapeError("missing parameter: " + name);
  return it->second;
}

// a = x W + h U + b
Tensor gate_preactivation(const Tensor& x, const Tensor& h, const Tensor& w,
                          const Tensor& u, const Tensor& b) {
  Tensor a = matmul(x, w);
  add_inplace(a, matmul(h, u));
  add_row_vector(a, b);
  return a;
}

template <typename F>
Tensor map(const Tensor& t, F f) {
  Tensor out = t;
  for (auto& v : out.values()) v = f(v);
  return out;
}

void check_cell_inputs(const Tensor& x, const Tensor& h, const ParamMap& params,
                       const std::string& w_name, const std::string& u_name) {
  const Tensor& w = param(params, w_name);
  const Tensor& u = param(params, u_name);
  if (x.rank() != 2 || h.rank() != 2 || x.rows() != h.rows()) {
    throw ShapeError("recurrent step: x " + shape_string(x.shape()) + " and h " +
                     shape_string(h.shape()) + " must be (B, C) and (B, U)");
  }
  if (w.rank() != 2 || w.rows() != x.cols() || w.cols() != h.cols()) {
    throw ShapeError("recurrent step: " + w_name + " has shape " + shape_string(w.shape()));
  }
  if (u.rank() != 2 || u.rows() != h.cols() || u.cols() != h.cols()) {
    throw ShapeError("recurrent step: " + u_name + " has shape " + shape_string(u.shape()));
  }
}

// Gradients of a gate a = xW + hU + b given da.
void gate_backward(const Tensor& x, const Tensor& h, const Tensor& w, const Tensor& u,
                   const Tensor& da, const std::string& prefix, const std::string& gate,
                   StepGrads& g) {
  g.dparams[prefix + "W_" + gate] = matmul_tn(x, da);
  g.dparams[prefix + "U_" + gate] = matmul_tn(h, da);
  g.dparams[prefix + "b_" + gate] = column_sums(da);
  add_inplace(g.dx, matmul_nt(da, w));
  add_inplace(g.dh, matmul_nt(da, u));
}

Tensor timestep(const Tensor& x, std::size_t t) {
  const std::size_t b = x.dim(0), c = x.dim(2);
  Tensor out({b, c});
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < c; ++j) out(i, j) = x(i, t, j);
  }
  return out;
}

}  // namespace

// ---- Conv1D -------------------------------------------------------------------

Tensor conv1d_forward(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  if (x.rank() != 3) throw ShapeError("conv1d: input must be (B, T, C), got " + shape_string(x.shape()));
  if (kernel.rank() != 3 || kernel.dim(0) != 1 || kernel.dim(1) != x.dim(2)) {
    throw ShapeError("conv1d: kernel must be (1, " + std::to_string(x.dim(2)) + ", F), got " +
                     shape_string(kernel.shape()));
  }
  const std::size_t f = kernel.dim(2);
  if (bias.size() != f) throw ShapeError("conv1d: bias length must equal filter count");
  const std::size_t b = x.dim(0), t = x.dim(1), c = x.dim(2);
  Tensor flat = x.reshaped({b * t, c});
  Tensor y = matmul(flat, kernel.reshaped({c, f}));
  add_row_vector(y, bias);
  return y.reshaped({b, t, f});
}

Conv1dGrads conv1d_backward(const Tensor& x, const Tensor& kernel, const Tensor& dy) {
  const std::size_t b = x.dim(0), t = x.dim(1), c = x.dim(2), f = kernel.dim(2);
  require_shape(dy, {b, t, f}, "conv1d_backward dy");
  const Tensor flat_x = x.reshaped({b * t, c});
  const Tensor flat_dy = dy.reshaped({b * t, f});
  const Tensor w = kernel.reshaped({c, f});
  Conv1dGrads g;
  g.dx = matmul_nt(flat_dy, w).reshaped({b, t, c});
  g.dkernel = matmul_tn(flat_x, flat_dy).reshaped({1, c, f});
  g.dbias = column_sums(flat_dy);
  return g;
}

// ---- Batch normalisation ------------------------------------------------------

Tensor batchnorm_forward(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         Tensor& running_mean, Tensor& running_var, Mode mode,
                         BatchNormCache* cache, bool identity_fallback) {
  if (x.rank() != 2) throw ShapeError("batchnorm: input must be (N, F)");
  const std::size_t n = x.rows(), f = x.cols();
  const std::initializer_list<const Tensor*> per_feature{&gamma, &beta, &running_mean, &running_var};
  for (const Tensor* t : per_feature) {
    if (t->size() != f) throw ShapeError("batchnorm: parameter length must equal feature count");
  }
  if (mode == Mode::train && n < 2) {
    if (!identity_fallback) {
      throw ConfigError(
          "batchnorm: a training batch of 1 has no batch statistics; use batch_size >= 2 "
          "or enable bn_identity_fallback");
    }
    if (cache) {
      cache->identity = true;
      cache->x_hat = Tensor();
      cache->inv_std.clear();
    }
    return x;
  }

  std::vector<double> mean(f, 0.0), var(f, 0.0);
  if (mode == Mode::train) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < f; ++j) mean[j] += x(i, j);
    }
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < f; ++j) {
        const double d = x(i, j) - mean[j];
        var[j] += d * d;
      }
    }
    for (auto& v : var) v /= static_cast<double>(n);
    for (std::size_t j = 0; j < f; ++j) {
      running_mean[j] = kBatchNormMomentum * running_mean[j] + (1 - kBatchNormMomentum) * mean[j];
      running_var[j] = kBatchNormMomentum * running_var[j] + (1 - kBatchNormMomentum) * var[j];
    }
  } else {
    for (std::size_t j = 0; j < f; ++j) {
      mean[j] = running_mean[j];
      var[j] = running_var[j];
    }
  }

  Tensor x_hat({n, f});
  std::vector<double> inv_std(f);
  for (std::size_t j = 0; j < f; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + kBatchNormEpsilon);
  Tensor y({n, f});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      x_hat(i, j) = (x(i, j) - mean[j]) * inv_std[j];
      y(i, j) = gamma[j] * x_hat(i, j) + beta[j];
    }
  }
  if (cache) {
    cache->identity = false;
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const Tensor& gamma,
                                  const Tensor& dy) {
  BatchNormGrads g;
  if (cache.identity) {
    g.dx = dy;
    g.dgamma = Tensor({gamma.size()});
    g.dbeta = Tensor({gamma.size()});
    return g;
  }
  const std::size_t n = dy.rows(), f = dy.cols();
  require_shape(cache.x_hat, dy.shape(), "batchnorm_backward dy");
  g.dgamma = Tensor({f});
  g.dbeta = Tensor({f});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      g.dbeta[j] += dy(i, j);
      g.dgamma[j] += dy(i, j) * cache.x_hat(i, j);
    }
  }
  // dx = inv_std / N * (N dx̂ - Σ dx̂ - x̂ Σ dx̂∘x̂), dx̂ = dy γ
  g.dx = Tensor({n, f});
  const double nn = static_cast<double>(n);
  for (std::size_t j = 0; j < f; ++j) {
    const double sum_dxhat = gamma[j] * g.dbeta[j];
    const double sum_dxhat_xhat = gamma[j] * g.dgamma[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double dxhat = dy(i, j) * gamma[j];
      g.dx(i, j) = cache.inv_std[j] / nn *
                   (nn * dxhat - sum_dxhat - cache.x_hat(i, j) * sum_dxhat_xhat);
    }
  }
  return g;
}

// ---- GRU ------------------------------------------------------------------------

std::vector<std::string> gru_param_names() {
  return {"W_z", "W_r", "W_h", "U_z", "U_r", "U_h", "b_z", "b_r", "b_h"};
}

std::vector<std::string> lstm_param_names() {
  return {"W_i", "W_f", "W_o", "W_g", "U_i", "U_f", "U_o", "U_g", "b_i", "b_f", "b_o", "b_g"};
}

Tensor gru_step_forward(const Tensor& x, const Tensor& h, const ParamMap& params,
                        const std::string& prefix, GruCache* cache) {
  for (const char* g : {"z", "r", "h"}) {
    check_cell_inputs(x, h, params, prefix + "W_" + g, prefix + "U_" + g);
  }
  const Tensor z = map(gate_preactivation(x, h, param(params, prefix + "W_z"),
                                          param(params, prefix + "U_z"),
                                          param(params, prefix + "b_z")),
                       sigmoid);
  const Tensor r = map(gate_preactivation(x, h, param(params, prefix + "W_r"),
                                          param(params, prefix + "U_r"),
                                          param(params, prefix + "b_r")),
                       sigmoid);
  const Tensor rh = hadamard(r, h);
  const Tensor h_tilde = map(gate_preactivation(x, rh, param(params, prefix + "W_h"),
                                                param(params, prefix + "U_h"),
                                                param(params, prefix + "b_h")),
                             [](double a) { return std::tanh(a); });
  Tensor out = h;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - z[i]) * h[i] + z[i] * h_tilde[i];
  }
  if (cache) *cache = GruCache{x, h, z, r, rh, h_tilde};
  return out;
}

StepGrads gru_step_backward(const GruCache& c, const ParamMap& params,
                            const std::string& prefix, const Tensor& dh_next) {
  require_shape(dh_next, c.h.shape(), "gru_step_backward dh");
  StepGrads g;
  g.dx = Tensor(c.x.shape());
  g.dh = Tensor(c.h.shape());
  const std::size_t n = dh_next.size();

  Tensor dz(c.z.shape()), da_h(c.z.shape());
  for (std::size_t i = 0; i < n; ++i) {
    dz[i] = dh_next[i] * (c.h_tilde[i] - c.h[i]);
    const double dht = dh_next[i] * c.z[i];
    da_h[i] = dht * (1.0 - c.h_tilde[i] * c.h_tilde[i]);
    g.dh[i] = dh_next[i] * (1.0 - c.z[i]);
  }

  // Candidate gate: its recurrent input is r∘h, so route through r and h.
  const Tensor& u_h = param(params, prefix + "U_h");
  g.dparams[prefix + "W_h"] = matmul_tn(c.x, da_h);
  g.dparams[prefix + "U_h"] = matmul_tn(c.rh, da_h);
  g.dparams[prefix + "b_h"] = column_sums(da_h);
  add_inplace(g.dx, matmul_nt(da_h, param(params, prefix + "W_h")));
  const Tensor drh = matmul_nt(da_h, u_h);
  Tensor da_r(c.r.shape()), da_z(c.z.shape());
  for (std::size_t i = 0; i < n; ++i) {
    g.dh[i] += drh[i] * c.r[i];
    const double dr = drh[i] * c.h[i];
    da_r[i] = dr * c.r[i] * (1.0 - c.r[i]);
    da_z[i] = dz[i] * c.z[i] * (1.0 - c.z[i]);
  }
  gate_backward(c.x, c.h, param(params, prefix + "W_r"), param(params, prefix + "U_r"), da_r,
                prefix, "r", g);
  gate_backward(c.x, c.h, param(params, prefix + "W_z"), param(params, prefix + "U_z"), da_z,
                prefix, "z", g);
  return g;
}

// ---- LSTM -----------------------------------------------------------------------

LstmState lstm_step_forward(const Tensor& x, const Tensor& h, const Tensor& c,
                            const ParamMap& params, const std::string& prefix,
                            LstmCache* cache) {
  for (const char* g : {"i", "f", "o", "g"}) {
    check_cell_inputs(x, h, params, prefix + "W_" + g, prefix + "U_" + g);
  }
  require_shape(c, h.shape(), "lstm_step cell state");
  auto gate = [&](const char* name) {
    return gate_preactivation(x, h, param(params, prefix + "W_" + name),
                              param(params, prefix + "U_" + name),
                              param(params, prefix + "b_" + name));
  };
  const Tensor i = map(gate("i"), sigmoid);
  const Tensor f = map(gate("f"), sigmoid);
  const Tensor o = map(gate("o"), sigmoid);
  const Tensor g = map(gate("g"), [](double a) { return std::tanh(a); });
  LstmState next{h, c};
  Tensor tanh_c(c.shape());
  for (std::size_t k = 0; k < c.size(); ++k) {
    next.c[k] = f[k] * c[k] + i[k] * g[k];
    tanh_c[k] = std::tanh(next.c[k]);
    next.h[k] = o[k] * tanh_c[k];
  }
  if (cache) *cache = LstmCache{x, h, c, i, f, o, g, next.c, tanh_c};
  return next;
}

StepGrads lstm_step_backward(const LstmCache& c, const ParamMap& params,
                             const std::string& prefix, const Tensor& dh_next,
                             const Tensor& dc_next) {
  require_shape(dh_next, c.h.shape(), "lstm_step_backward dh");
  require_shape(dc_next, c.c.shape(), "lstm_step_backward dc");
  StepGrads g;
  g.dx = Tensor(c.x.shape());
  g.dh = Tensor(c.h.shape());
  g.dc = Tensor(c.c.shape());
  const std::size_t n = dh_next.size();
  Tensor da_i(c.i.shape()), da_f(c.f.shape()), da_o(c.o.shape()), da_g(c.g.shape());
  for (std::size_t k = 0; k < n; ++k) {
    const double d_o = dh_next[k] * c.tanh_c[k];
    const double dc = dc_next[k] + dh_next[k] * c.o[k] * (1.0 - c.tanh_c[k] * c.tanh_c[k]);
    const double d_f = dc * c.c[k];
    const double d_i = dc * c.g[k];
    const double d_g = dc * c.i[k];
    g.dc[k] = dc * c.f[k];
    da_i[k] = d_i * c.i[k] * (1.0 - c.i[k]);
    da_f[k] = d_f * c.f[k] * (1.0 - c.f[k]);
    da_o[k] = d_o * c.o[k] * (1.0 - c.o[k]);
    da_g[k] = d_g * (1.0 - c.g[k] * c.g[k]);
  }
  const std::pair<const char*, const Tensor*> gates[] = {
      {"i", &da_i}, {"f", &da_f}, {"o", &da_o}, {"g", &da_g}};
  for (const auto& [name, da] : gates) {
    gate_backward(c.x, c.h, param(params, prefix + "W_" + name),
                  param(params, prefix + "U_" + name), *da, prefix, name, g);
  }
  return g;
}

// ---- Sequences --------------------------------------------------------------------

Tensor recurrent_forward(CellKind kind, const Tensor& x, const ParamMap& params,
                         const std::string& prefix, std::size_t units, bool reversed,
                         SequenceCache* cache) {
  if (x.rank() != 3) throw ShapeError("recurrent layer: input must be (B, T, C)");
  const std::size_t b = x.dim(0), steps = x.dim(1);
  Tensor h({b, units});
  Tensor c({b, units});
  if (cache) {
    *cache = SequenceCache{};
    cache->kind = kind;
    cache->steps = steps;
    cache->reversed = reversed;
  }
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reversed ? steps - 1 - s : s;
    const Tensor xt = timestep(x, t);
    if (kind == CellKind::gru) {
      GruCache step;
      h = gru_step_forward(xt, h, params, prefix, cache ? &step : nullptr);
      if (cache) cache->gru.push_back(std::move(step));
    } else {
      LstmCache step;
      LstmState next = lstm_step_forward(xt, h, c, params, prefix, cache ? &step : nullptr);
      h = std::move(next.h);
      c = std::move(next.c);
      if (cache) cache->lstm.push_back(std::move(step));
    }
  }
  return h;
}

Tensor recurrent_backward(const SequenceCache& cache, const ParamMap& params,
                          const std::string& prefix, const Tensor& dh_final, ParamMap& grads) {
  const std::size_t b = dh_final.rows();
  std::size_t c_in = 0;
  if (cache.kind == CellKind::gru) {
    c_in = cache.gru.front().x.cols();
  } else {
    c_in = cache.lstm.front().x.cols();
  }
  Tensor dx({b, cache.steps, c_in});
  Tensor dh = dh_final;
  Tensor dc(dh_final.shape());
  auto accumulate = [&](ParamMap& from) {
    for (auto& [name, g] : from) {
      auto it = grads.find(name);
      if (it == grads.end()) {
        grads.emplace(name, std::move(g));
      } else {
        add_inplace(it->second, g);
      }
    }
  };
  for (std::size_t s = cache.steps; s-- > 0;) {
    const std::size_t t = cache.reversed ? cache.steps - 1 - s : s;
    StepGrads g = cache.kind == CellKind::gru
                      ? gru_step_backward(cache.gru[s], params, prefix, dh)
                      : lstm_step_backward(cache.lstm[s], params, prefix, dh, dc);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < c_in; ++j) dx(i, t, j) = g.dx(i, j);
    }
    dh = std::move(g.dh);
    if (cache.kind == CellKind::lstm) dc = std::move(g.dc);
    accumulate(g.dparams);
  }
  return dx;
}

Tensor bilstm_forward(const Tensor& x, const ParamMap& params, std::size_t units,
                      SequenceCache* fwd_cache, SequenceCache* bwd_cache) {
  const Tensor hf = recurrent_forward(CellKind::lstm, x, params, "lstm_fwd.", units, false, fwd_cache);
  const Tensor hb = recurrent_forward(CellKind::lstm, x, params, "lstm_bwd.", units, true, bwd_cache);
  const std::size_t b = x.dim(0);
  Tensor out({b, 2 * units});
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < units; ++j) {
      out(i, j) = hf(i, j);
      out(i, units + j) = hb(i, j);
    }
  }
  return out;
}

// ---- Dense / activations / dropout / loss -----------------------------------------

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor y = matmul(x, w);
  add_row_vector(y, b);
  return y;
}

DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy) {
  return DenseGrads{matmul_nt(dy, w), matmul_tn(x, dy), column_sums(dy)};
}

Tensor relu(const Tensor& x) {
  return map(x, [](double v) { return v > 0 ? v : 0.0; });
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!(x[i] > 0)) dx[i] = 0.0;
  }
  return dx;
}

Tensor dropout_mask(const Tensor::Shape& shape, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0 && rate < 1)) throw ConfigError("dropout rate must lie in [0, 1)");
  Tensor mask(shape, 1.0);
  if (mode == Mode::infer || rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& m : mask.values()) m = rng.uniform() < rate ? 0.0 : keep_scale;
  return mask;
}

Tensor dropout(const Tensor& x, double rate, Mode mode, Rng& rng, Tensor* mask_out) {
  Tensor mask = dropout_mask(x.shape(), rate, mode, rng);
  Tensor y = hadamard(x, mask);
  if (mask_out) *mask_out = std::move(mask);
  return y;
}

Tensor softmax(const Tensor& logits) {
  Tensor p = logits;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double mx = p(i, 0);
    for (std::size_t j = 1; j < p.cols(); ++j) mx = std::max(mx, p(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) {
      p(i, j) = std::exp(p(i, j) - mx);
      z += p(i, j);
    }
    for (std::size_t j = 0; j < p.cols(); ++j) p(i, j) /= z;
  }
  return p;
}

Tensor one_hot(const std::vector<int>& labels, std::size_t classes) {
  Tensor y({labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw DataError("label " + std::to_string(labels[i]) + " out of range");
    }
    y(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return y;
}

SoftmaxLoss softmax_cross_entropy(const Tensor& logits, const Tensor& targets) {
  require_shape(targets, logits.shape(), "softmax_cross_entropy labels");
  for (std::size_t i = 0; i < targets.rows(); ++i) {
    int ones = 0;
    for (std::size_t j = 0; j < targets.cols(); ++j) {
      const double v = targets(i, j);
      if (v == 1.0) {
        ++ones;
      } else if (v != 0.0) {
        ones = -1;
        break;
      }
    }
    if (ones != 1) throw DataError("labels row " + std::to_string(i) + " is not one-hot");
  }
  SoftmaxLoss out;
  out.probs = softmax(logits);
  const double b = static_cast<double>(logits.rows());
  out.dlogits = Tensor(logits.shape());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      const double p = out.probs(i, j), y = targets(i, j);
      if (y != 0.0) total -= y * std::log(std::max(p, kLogClamp));
      out.dlogits(i, j) = (p - y) / b;
    }
  }
  out.loss = total / b;
  return out;
}

DenseSoftmaxResult dense_softmax_xent(const Tensor& features, const Tensor& weights,
                                      const Tensor& bias, const Tensor& targets) {
  const Tensor logits = dense_forward(features, weights, bias);
  SoftmaxLoss sl = softmax_cross_entropy(logits, targets);
  DenseGrads dg = dense_backward(features, weights, sl.dlogits);
  return DenseSoftmaxResult{sl.loss, std::move(sl.probs), std::move(sl.dlogits),
                            std::move(dg.dx), std::move(dg.dw), std::move(dg.db)};
}

}  // namespace cogeffort::nn
