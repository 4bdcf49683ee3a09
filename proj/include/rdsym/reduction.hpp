#pragma once

#include "rdsym/model.hpp"
#include "rdsym/report.hpp"

#include <array>
#include <string>
#include <vector>

namespace rdsym {

enum class AnsatzId { Q1, Q2 };

/// Field shapes u, v, w as expressions in t, x and phi1, phi2, phi3 obtained
/// from the characteristic system of Q1 or Q2 of the second table row (a1 = 1).
struct Ansatz {
  AnsatzId id = AnsatzId::Q1;
  Number d1, d2, d3;
  Number rate;  // d3/(d3 - d1)
  std::array<Expr, 3> fields;
  QOperator op;
  RDSystem system;  // the row-2 system the operator belongs to
};

/// Throws RestrictionError for d1 = d2 or d1 = d3, ConsistencyError if the
/// characteristic residual does not vanish.
Ansatz build_ansatz(AnsatzId id, const Number& d1, const Number& d2, const Number& d3);

/// Max characteristic residual |u_t - η¹| etc. over random (t, x, φ).
double characteristic_residual(const Ansatz& a, int n_samples = 200, std::uint64_t seed = 0);

/// phi_i'' = rhs_i(x, phi, phi') for i = 1..n.
struct ReducedODESystem {
  std::string id;
  std::vector<std::string> vars;  // phi1, phi2, ...
  std::vector<Expr> rhs;          // in x, vars and their primes ("phi1_p")
};

enum class ReducedId { Sys46, Sys48 };

ReducedODESystem reduced_ode_system(ReducedId id, const Number& d1, const Number& d2, const Number& d3);

/// Max scaled lifted residual with φ'' taken from the reduced system, over
/// random (t, x, φ, φ'); zero when the system is the reduction of `sys`
/// under the ansatz.
double reduction_defect(const Ansatz& a, const ReducedODESystem& odes, const RDSystem& sys,
                        int n_samples = 200, std::uint64_t seed = 0);

/// d1 φ'' = φ(φ - 1), a single equation in "phi".
ReducedODESystem single_ode(const Number& d1);

/// d1 φ'² - (2/3)φ³ + φ², constant along solutions of single_ode.
double first_integral(double d1, double phi, double dphi);

struct Trajectory {
  std::vector<double> x;
  std::vector<std::vector<double>> phi;   // [point][component]
  std::vector<std::vector<double>> dphi;  // first derivatives
  std::size_t steps = 0;
  double max_local_error = 0.0;  // Richardson estimate
};

/// Classical RK4 with fixed step; throws BlowUpError when |φ| exceeds 1e12.
Trajectory integrate_ode(const ReducedODESystem& sys, const std::vector<double>& phi0,
                         const std::vector<double>& dphi0, double x0, double x1, double h);

/// Residuals of the evolution system after substituting the ansatz with
/// analytic φ(x), sampled on the tensor grid t × x.
Report lift_and_verify(const Ansatz& a, const std::array<Expr, 3>& phis, const RDSystem& sys,
                       const std::vector<double>& t, const std::vector<double>& x, double tol);

/// Same check for a numerical trajectory: φ'' by fourth-order finite
/// differences on every `stride`-th trajectory point.
Report lift_and_verify(const Ansatz& a, const Trajectory& traj, const RDSystem& sys,
                       const std::vector<double>& t, std::size_t stride, double tol);

/// Weights for the m-th derivative at z from values at nodes (Fornberg).
std::vector<double> fd_weights(double z, const std::vector<double>& nodes, int m);

}  // namespace rdsym
