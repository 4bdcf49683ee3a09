#pragma once

#include "rdsym/model.hpp"
#include "rdsym/report.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace rdsym {

/// Jet coordinate naming: field, then '_', then t's, then x's (u_t, u_xx, u_tx).
struct JetSymbol {
  int field = 0;  // 0,1,2 for u,v,w
  int nt = 0;
  int nx = 0;
};
std::optional<JetSymbol> parse_jet(std::string_view name);
std::string jet_name(int field, int nt, int nx);

enum class Direction { T, X };

Expr total_derivative(const Expr& e, Direction dir);

/// η¹ = r¹u + q¹v + h¹w + p¹, η² = r²v + q²u + h²w + p², η³ = r³w + q³u + h³v + p³.
struct LinearCoefficients {
  std::array<Expr, 3> r, q, h, p;

  /// Coefficient of field j in η^k.
  const Expr& coefficient(int k, int j) const;
  std::array<Expr, 3> eta() const;
};

/// Splits an operator whose η are affine in u,v,w; throws ConsistencyError otherwise.
LinearCoefficients decompose(const QOperator& Q);

/// Invariance residuals on the manifold; only t, x, u, v, w and u_x, v_x, w_x remain.
std::array<Expr, 3> prolong_residuals(const QOperator& Q, const RDSystem& sys);

struct SampleBox {
  double t_lo = 0.0, t_hi = 1.0;
  double x_lo = -1.0, x_hi = 1.0;
  double field_lo = -1.0, field_hi = 1.0;
  double slope_lo = -1.0, slope_hi = 1.0;
};

struct VerifyOptions {
  int n_samples = 200;
  double tol = 1e-9;
  std::uint64_t seed = 0;  // 0 picks default_seed()
  bool confirm = true;     // second pass with an independent seed
  SampleBox box;
};

Report verify_invariance(const QOperator& Q, const RDSystem& sys, const VerifyOptions& opt = {});

struct NamedResidual {
  std::string name;
  Expr expr;
};

/// Left-hand sides of the determining equations for an affine operator with
/// ξ = ξ(t,x), named "3" to "11"; expressions in t, x, u, v, w.
std::vector<NamedResidual> determining_residuals(const LinearCoefficients& L, const Expr& xi, const HGFParams& p);

/// Randomized zero test of a residual list over (t,x,u,v,w).
Report check_residuals(const std::vector<NamedResidual>& residuals, const VerifyOptions& opt = {});

}  // namespace rdsym
