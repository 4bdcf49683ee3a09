#pragma once

#include "rdsym/expr.hpp"

#include <cmath>
#include <random>

namespace rdsym::testing {

inline Binding random_binding(const Expr& e, std::mt19937_64& rng, double lo = 0.1, double hi = 0.9) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Binding b;
  for (const auto& s : free_symbols(e)) b[s] = dist(rng);
  return b;
}

inline bool close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace rdsym::testing
