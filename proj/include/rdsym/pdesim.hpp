#pragma once

#include "rdsym/model.hpp"
#include "rdsym/solutions.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace rdsym {

enum class Boundary { DirichletExact, DirichletConstant, NoFlux };

std::string_view boundary_name(Boundary b);
Boundary parse_boundary(std::string_view text);

struct SimConfig {
  double x0 = 0, x1 = 1;
  int n_cells = 64;
  double t_end = 1;
  Boundary boundary = Boundary::NoFlux;
  double safety = 0.4;
  std::array<Expr, 3> initial;               // u, v, w at t = 0 (in x, t allowed)
  std::optional<std::array<Expr, 3>> exact;  // boundary data for DirichletExact
  std::array<double, 3> left{}, right{};     // DirichletConstant values
  int n_snapshots = 1;                       // besides t = 0

  void validate() const;
  double h() const { return (x1 - x0) / n_cells; }
};

/// Initial and boundary data taken from an exact solution.
SimConfig config_from_exact(const ExactSolution& s, double x0, double x1, int n_cells, double t_end);

struct Snapshot {
  double t = 0;
  std::array<std::vector<double>, 3> f;
};

struct SimResult {
  std::vector<double> x;
  std::vector<Snapshot> snapshots;
  std::size_t steps = 0;
  double dt = 0;
  double max_abs = 0;
};

/// Method of lines: centered Laplacian, classical RK4 in time with
/// dt = t_end / ceil(t_end / (safety·h²/(2·max d))). Throws BlowUpError when a
/// field exceeds 1e12 or turns non-finite.
SimResult simulate(const RDSystem& sys, const SimConfig& cfg);

enum class Norm { Sup, L2 };

/// Per-snapshot, per-component error against exact fields in t and x.
std::vector<std::array<double, 3>> error_vs_exact(const SimResult& r, const std::array<Expr, 3>& exact, Norm norm);

struct ConvergenceResult {
  std::vector<int> n_cells;
  std::vector<std::array<double, 3>> errors;  // sup error at t_end
  std::vector<std::array<double, 3>> orders;  // between consecutive levels
  std::array<bool, 3> exact{};                // errors at machine level on every level
};

/// Runs n, 2n, 4n, ... cells (levels ≥ 3) in parallel; sup error at t_end.
ConvergenceResult convergence_order(const RDSystem& sys, const std::array<Expr, 3>& exact, const SimConfig& base,
                                    int levels = 3);

/// Stable text form of a config, used for the manifest hash.
std::string canonical_text(const RDSystem& sys, const SimConfig& cfg);
std::uint64_t fnv1a(std::string_view text);

}  // namespace rdsym
