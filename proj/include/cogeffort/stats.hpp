#pragma once

#include <span>

namespace cogeffort {

double mean(std::span<const double> v);
/// Population standard deviation (n denominator).
double population_sd(std::span<const double> v);

struct PearsonResult {
  double r = 0.0;
  bool degenerate = false;  // a constant column; r reported as 0
};
/// Two-pass Pearson correlation, clamped to [-1, 1]. Needs >= 3 points.
PearsonResult pearson(std::span<const double> a, std::span<const double> b);

}  // namespace cogeffort
