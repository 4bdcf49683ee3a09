#pragma once

#include "rdsym/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rdsym {

struct EquationStats {
  std::string name;
  double max_abs = 0.0;
  double max_scaled = 0.0;
};

/// Outcome of one randomized or grid residual check. `pass` holds iff the
/// scaled residual |R| / (1 + Σ|terms of R|) stayed within `tol` everywhere.
struct Report {
  std::string label;
  ParamSet params;
  std::size_t samples = 0;
  std::size_t redraws = 0;
  double max_abs_residual = 0.0;
  double max_scaled_residual = 0.0;
  std::vector<EquationStats> per_equation;
  double tol = 0.0;
  bool pass = false;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> notes;
  std::vector<Report> children;

  /// Folds a child's pass flag and maxima into this report.
  void absorb(const Report& child);
};

/// Sampling seed: RDSYM_SEED from the environment when set, else a fixed default.
std::uint64_t default_seed();

}  // namespace rdsym
