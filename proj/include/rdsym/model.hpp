#pragma once

#include "rdsym/expr.hpp"

#include <array>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace rdsym {

using ParamSet = std::map<std::string, Number, std::less<>>;

struct HGFParams {
  Number d1, d2, d3;
  Number a1, a2, a3, a4, a5;

  /// Checks d1,d2,d3 > 0 and a4 > 0. Other coefficients may have any sign:
  /// several of the exact solutions live on systems with a negative a2.
  void validate() const;
  ParamSet as_params() const;
};

/// u_t = d1 u_xx + C1, v_t = d2 v_xx + C2, w_t = d3 w_xx + C3.
struct RDSystem {
  std::array<Number, 3> d;
  std::array<Expr, 3> C;  // in u, v, w (t and x allowed for transformed systems)
  std::optional<HGFParams> hgf;
  std::string label;

  void validate() const;
};

inline const std::array<std::string, 3> kFields{"u", "v", "w"};

RDSystem hgf_system(const HGFParams& p);

/// Operator d_t + xi d_x + eta^k d_{u^k}, time coefficient normalized to 1.
struct QOperator {
  Expr xi;
  std::array<Expr, 3> eta;
  std::string label;
};

struct Restriction {
  std::string text;  // e.g. "a4·d1 ≠ d3"
  Number lhs, rhs;

  bool holds() const { return !numerically_equal(lhs, rhs); }
};

struct TableCase {
  int id = 0;
  ParamSet params;  // resolved: diffusivities, a1..a5, alphas, mu
  Expr P;
  RDSystem system;
  std::vector<QOperator> operators;
  std::vector<Restriction> restrictions;
  std::vector<std::string> notes;
};

inline constexpr int kCaseCount = 13;

/// One row of the operator table. Missing diffusivities are an error;
/// free coefficients (a_i, alpha_i, mu) default to 1. Throws
/// RestrictionError naming the violated restriction.
TableCase table_case(int id, const ParamSet& params, std::optional<Expr> P = std::nullopt);

/// E(δ1, δ2) = exp[μ(δ2−δ1)/(2δ1δ2)·(x + μ(δ2−δ1)/(2δ1)·t)].
Expr e_factor(const Number& delta1, const Number& delta2, const Number& mu);

/// Gate for user-supplied P(t,x): P_t = d2 P_xx at 50 random points.
void check_heat_solution(const Expr& P, const Number& d2);

/// Random parameters admissible for the row, kept away from restriction
/// equalities so coefficients stay moderate.
ParamSet random_case_params(int id, std::mt19937_64& rng);

enum class DlvTransform { Eq21, UPlusA1V };

struct DlvResult {
  RDSystem system;
  std::array<Number, 3> scaled_d;
  bool dlv_form = false;
  std::array<bool, 3> component_dlv{};
  double max_fit_residual = 0.0;
};

/// Eq21: u* = a1 w, v* = −(u + a1 v), w* = e^{−t} u, x* = x/√d, for the
/// rows with d1 = d2 = d, a2 = 1, a3 = 0, a5 = a1 a4 (Cases 4 and 5).
/// UPlusA1V: replaces v by u + a1 v; needs d1 = d2, a2 = 1, a1 ≠ 0.
DlvResult transform_to_dlv(const RDSystem& sys, DlvTransform which, double tol = 1e-9);

/// Whether C/field is affine in (u,v,w) and free of t and x, by randomized fit.
bool is_field_times_affine(const Expr& C, const std::string& field, double tol, double* max_residual = nullptr);

}  // namespace rdsym
