#include "cogeffort/optim.hpp"

#include <cmath>

#include "cogeffort/error.hpp"

namespace cogeffort {

void adam_step(ParamMap& params, const ParamMap& grads, AdamState& state, double lr,
               const std::vector<std::string>& names) {
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (const auto& name : names) {
    auto p_it = params.find(name);
    auto g_it = grads.find(name);
    if (p_it == params.end() || g_it == grads.end()) {
      throw ShapeError("adam_step: missing parameter or gradient " + name);
    }
    Tensor& p = p_it->second;
    const Tensor& g = g_it->second;
    if (p.shape() != g.shape()) {
      throw ShapeError("adam_step: gradient shape " + shape_string(g.shape()) +
                       " does not match parameter " + name + " " + shape_string(p.shape()));
    }
    Tensor& m = state.first_moment.try_emplace(name, p.shape()).first->second;
    Tensor& v = state.second_moment.try_emplace(name, p.shape()).first->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace cogeffort
