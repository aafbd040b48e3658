#pragma once

#include <string>
#include <vector>

#include "cogeffort/tensor.hpp"

namespace cogeffort {

struct AdamState {
  ParamMap first_moment;
  ParamMap second_moment;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update of `names` in params using grads. Missing
/// moments are created as zeros on first use.
void adam_step(ParamMap& params, const ParamMap& grads, AdamState& state, double lr,
               const std::vector<std::string>& names);

}  // namespace cogeffort
