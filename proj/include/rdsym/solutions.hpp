#pragma once

#include "rdsym/model.hpp"
#include "rdsym/report.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rdsym {

enum class SolutionId { S4_11, S4_16, S4_18, S4_22, S4_24 };

inline constexpr std::array<SolutionId, 5> kSolutionIds{SolutionId::S4_11, SolutionId::S4_16, SolutionId::S4_18,
                                                        SolutionId::S4_22, SolutionId::S4_24};

/// "sol_4_11"; parse also accepts "4-11" and "4_11".
std::string_view solution_name(SolutionId id);
SolutionId parse_solution_id(std::string_view text);

struct Grid {
  double t0 = 0, t1 = 1;
  int nt = 50;
  double x0 = 0, x1 = 1;
  int nx = 50;

  std::vector<double> ts() const;
  std::vector<double> xs() const;
};

struct ExactSolution {
  SolutionId id = SolutionId::S4_11;
  ParamSet params;
  std::array<Expr, 3> fields;  // u, v, w in t and x
  RDSystem system;
  // Fields are defined for x_lo < x < x_hi; points closer than `guard` to an
  // open end count as singular.
  double x_lo = -1e300, x_hi = 1e300, guard = 1e-2;
  Grid check;  // construction-time residual grid
  std::vector<std::string> restrictions;
  Report construction;
};

/// Params: sol_4_11 needs d1, d2, d3 and takes k, alpha, beta (defaults 1/4,
/// 0, 3/5). sol_4_16 needs d1, d2, d3 and `phi1`. sol_4_18/22/24 take d
/// (= d2, default 2) and, for sol_4_18, c1 (default 1/2); d1 and d3 are fixed.
ExactSolution exact_solution(SolutionId id, const ParamSet& params, std::optional<Expr> phi1 = std::nullopt);

/// Symbolic residual S_k = d_k u_xx - u_t + C_k on the grid; DomainError on a
/// singular grid point.
Report pde_residual_on_grid(const ExactSolution& s, const Grid& grid, double tol = 1e-9);

/// Printed t → ∞ limit for decaying solutions; ConsistencyError otherwise.
std::array<Expr, 3> steady_state(const ExactSolution& s);
/// Exponential decay rate of the distance to steady_state.
double decay_rate(const ExactSolution& s);
/// log(dist(T) / dist(T + 1)) with dist the sup over the check window of the
/// largest component distance to steady_state.
double measured_decay(const ExactSolution& s, double T);
/// Growth rate of sup |u| for sol_4_22 / sol_4_24.
double growth_rate(const ExactSolution& s);

/// sup over the x grid of |field(T, x) - steady(x)|, per component.
Report asymptotics_check(const ExactSolution& s, const std::array<Expr, 3>& steady, double T, double tol,
                         std::optional<std::pair<double, double>> x_range = std::nullopt, int nx = 101);

struct NonnegCheck {
  bool ok = false;
  double lower = 0, upper = 0;
  std::string lower_bound;  // the active term of the max
  std::string upper_bound;
};

/// β bounds for u, v ≥ 0 on [0, π/√D]: α ≥ 0 and α < 0 branches.
NonnegCheck nonneg_domain_4_11(double k, double alpha, double beta, double D);

enum class PhiSolution { P4_20, P4_21 };

struct PhiOdeCheck {
  Report residual;
  double I = 0;           // first integral at x = 0
  double I_expected = 0;  // (9/4) c1
  double I_spread = 0;    // max deviation of I over the samples
};

/// d1 φ'' - rhs(φ) on random x for the explicit φ; rhs defaults to φ(φ - 1).
PhiOdeCheck phi_ode_check(PhiSolution which, const Number& d1, std::optional<Expr> rhs = std::nullopt);

Expr explicit_phi(PhiSolution which, const Number& d1);

/// |u + v - 1| on a 100×100 grid over the check window; sol_4_11 only.
Report property_u_plus_v(const ExactSolution& s, double tol = 1e-12);

}  // namespace rdsym
