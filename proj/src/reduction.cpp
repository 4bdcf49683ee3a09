#include "rdsym/reduction.hpp"

#include "rdsym/compiled.hpp"
#include "rdsym/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rdsym {

namespace {

const std::array<std::string, 3> kPhi{"phi1", "phi2", "phi3"};
const std::array<std::string, 3> kPhiXX{"phi1_xx", "phi2_xx", "phi3_xx"};

// The second table row with a1 = 1.
TableCase row2(const Number& d1, const Number& d2, const Number& d3) {
  return table_case(2, {{"d1", d1}, {"d2", d2}, {"d3", d3}, {"a1", Number(1)}});
}

// Residuals d_k Σ_i ∂F_k/∂φ_i φ_i'' - ∂F_k/∂t + C_k(F) in t, φ, φ''. Exact
// because the ansatz is affine in φ with coefficients free of x.
std::array<Expr, 3> lift_template(const Ansatz& a, const RDSystem& sys) {
  SubstitutionRules fields;
  for (int k = 0; k < 3; ++k) fields[kFields[k]] = a.fields[k];
  std::array<Expr, 3> S;
  for (int k = 0; k < 3; ++k) {
    std::vector<Expr> terms;
    for (int i = 0; i < 3; ++i)
      terms.push_back(Expr(sys.d[k]) * differentiate(a.fields[k], kPhi[i]) * sym(kPhiXX[i]));
    terms.push_back(-differentiate(a.fields[k], "t"));
    terms.push_back(substitute(sys.C[k], fields));
    S[k] = Expr::sum(std::move(terms));
  }
  return S;
}

std::vector<std::string> template_inputs() {
  return {"t", "x", kPhi[0], kPhi[1], kPhi[2], kPhiXX[0], kPhiXX[1], kPhiXX[2]};
}

Report finish(Report rep, double tol) {
  rep.tol = tol;
  for (const auto& eq : rep.per_equation) {
    rep.max_abs_residual = std::max(rep.max_abs_residual, eq.max_abs);
    rep.max_scaled_residual = std::max(rep.max_scaled_residual, eq.max_scaled);
  }
  rep.pass = rep.max_scaled_residual <= tol;
  return rep;
}

Report empty_report(const std::string& label) {
  Report rep;
  rep.label = label;
  rep.per_equation = {{"S1"}, {"S2"}, {"S3"}};
  return rep;
}

void accumulate(Report& rep, std::span<const double> value, std::span<const double> scale) {
  ++rep.samples;
  for (std::size_t k = 0; k < value.size(); ++k) {
    auto& eq = rep.per_equation[k];
    eq.max_abs = std::max(eq.max_abs, std::abs(value[k]));
    eq.max_scaled = std::max(eq.max_scaled, std::abs(value[k]) / scale[k]);
  }
}

}  // namespace

Ansatz build_ansatz(AnsatzId id, const Number& d1, const Number& d2, const Number& d3) {
  if (d1 == d2) throw RestrictionError("ansatz requires d1 ≠ d2");
  if (d1 == d3) throw RestrictionError("ansatz requires d1 ≠ d3");
  TableCase tc = row2(d1, d2, d3);
  Ansatz a;
  a.id = id;
  a.d1 = d1, a.d2 = d2, a.d3 = d3;
  a.rate = d3 / (d3 - d1);
  a.op = tc.operators.at(id == AnsatzId::Q1 ? 0 : 1);
  a.system = tc.system;
  Expr g = exp(Expr(a.rate) * sym("t"));
  Expr p1 = sym("phi1"), p2 = sym("phi2"), p3 = sym("phi3");
  if (id == AnsatzId::Q1) {
    Number K = d1 * (d1 - d3) / (d3 * (d1 - d2));
    a.fields = {p1 + Expr(K) * p3 * g, p2 - Expr(K) * p3 * g, p3 * g};
  } else {
    Number L = d3 * (d1 - d2) / (d1 * (d1 - d3));
    a.fields = {p1 * g, p2 - p1 * g, p3 + Expr(L) * p1 * g};
  }
  double res = characteristic_residual(a, 64, 1);
  if (!(res <= 1e-12)) throw ConsistencyError("ansatz does not solve the characteristic system");
  return a;
}

double characteristic_residual(const Ansatz& a, int n_samples, std::uint64_t seed) {
  SubstitutionRules fields;
  for (int k = 0; k < 3; ++k) fields[kFields[k]] = a.fields[k];
  std::vector<Expr> R;
  for (int k = 0; k < 3; ++k) R.push_back(differentiate(a.fields[k], "t") - substitute(a.op.eta[k], fields));
  ScaledResidual prog(R, {"t", "x", "phi1", "phi2", "phi3"});
  auto work = prog.workspace();
  std::mt19937_64 rng(seed ? seed : default_seed());
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::array<double, 5> in{};
  std::array<double, 3> value{}, scale{};
  double worst = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    in[0] = 0.5 * (unit(rng) + 1.0);
    for (int i = 1; i < 5; ++i) in[i] = unit(rng);
    if (!prog.eval(in, value, scale, work)) throw DomainError("characteristic residual undefined");
    for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(value[k]) / scale[k]);
  }
  return worst;
}

ReducedODESystem reduced_ode_system(ReducedId id, const Number& d1, const Number& d2, const Number& d3) {
  if (d1 == d3) throw RestrictionError("reduced system requires d1 ≠ d3");
  if (d1 == d2) throw RestrictionError("reduced system requires d1 ≠ d2");
  Expr p1 = sym("phi1"), p2 = sym("phi2"), p3 = sym("phi3");
  Expr c1 = Expr(Number(1) / d1), c2 = Expr(Number(1) / d2);
  Expr g = Expr((d2 - d3) / (d1 - d3));
  Expr shift = Expr(d1 / (d3 - d1));
  ReducedODESystem s;
  s.vars = {"phi1", "phi2", "phi3"};
  if (id == ReducedId::Sys46) {
    s.id = "sys_4_6";
    s.rhs = {-c1 * p1 * (1 - p1 - p2), -c2 * g * p2 * (1 - p1 - p2), c1 * p3 * (p1 + p2 + shift)};
  } else {
    s.id = "sys_4_8";
    Expr back = Expr((d1 - d3) / (d2 - d3));
    if (d2 == d3) throw RestrictionError("sys_4_8 requires d2 ≠ d3");
    s.rhs = {c1 * p1 * (shift + p2), -c2 * g * p2 * (1 - p2 + back * p3), c1 * p2 * p3};
  }
  return s;
}

double reduction_defect(const Ansatz& a, const ReducedODESystem& odes, const RDSystem& sys, int n_samples,
                        std::uint64_t seed) {
  if (odes.vars.size() != 3) throw Error("reduction needs a three-component system");
  SubstitutionRules closure;
  for (int i = 0; i < 3; ++i) closure[kPhiXX[i]] = odes.rhs[i];
  auto S = lift_template(a, sys);
  std::vector<Expr> R;
  for (const auto& s : S) R.push_back(substitute(s, closure));
  std::vector<std::string> inputs{"t", "x", kPhi[0], kPhi[1], kPhi[2], "phi1_p", "phi2_p", "phi3_p"};
  ScaledResidual prog(R, inputs);
  auto work = prog.workspace();
  std::mt19937_64 rng(seed ? seed : default_seed());
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::array<double, 8> in{};
  std::array<double, 3> value{}, scale{};
  double worst = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    in[0] = 0.5 * (unit(rng) + 1.0);
    for (int i = 1; i < 8; ++i) in[i] = unit(rng);
    if (!prog.eval(in, value, scale, work)) throw DomainError("reduction defect undefined");
    for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(value[k]) / scale[k]);
  }
  return worst;
}

ReducedODESystem single_ode(const Number& d1) {
  if (!(d1.value() > 0)) throw DomainError("d1 must be positive");
  Expr p = sym("phi");
  return {"ode_4_13", {"phi"}, {Expr(Number(1) / d1) * p * (p - 1)}};
}

double first_integral(double d1, double phi, double dphi) {
  return d1 * dphi * dphi - (2.0 / 3.0) * phi * phi * phi + phi * phi;
}

Trajectory integrate_ode(const ReducedODESystem& sys, const std::vector<double>& phi0,
                         const std::vector<double>& dphi0, double x0, double x1, double h) {
  const std::size_t n = sys.vars.size();
  if (phi0.size() != n || dphi0.size() != n) throw Error("initial data must have one value and slope per component");
  if (!(h > 0) || !(x1 > x0)) throw Error("integration needs x1 > x0 and h > 0");
  std::vector<std::string> inputs{"x"};
  for (const auto& v : sys.vars) inputs.push_back(v);
  for (const auto& v : sys.vars) inputs.push_back(v + "_p");
  CompiledExpr prog(sys.rhs, inputs);
  auto work = prog.workspace();

  const std::size_t steps = static_cast<std::size_t>(std::ceil((x1 - x0) / h - 1e-9));
  const double dx = (x1 - x0) / static_cast<double>(steps);

  // State y = (φ, φ').
  std::vector<double> in(2 * n + 1), acc(n);
  auto rhs = [&](double x, const std::vector<double>& y, std::vector<double>& dy) {
    in[0] = x;
    std::copy(y.begin(), y.end(), in.begin() + 1);
    if (!prog.eval(in, acc, work)) throw DomainError("reduced system undefined at x = " + std::to_string(x));
    for (std::size_t i = 0; i < n; ++i) {
      dy[i] = y[n + i];
      dy[n + i] = acc[i];
    }
  };
  std::vector<double> k1(2 * n), k2(2 * n), k3(2 * n), k4(2 * n), tmp(2 * n);
  auto rk4 = [&](double x, double step, const std::vector<double>& y, std::vector<double>& out) {
    rhs(x, y, k1);
    for (std::size_t i = 0; i < 2 * n; ++i) tmp[i] = y[i] + 0.5 * step * k1[i];
    rhs(x + 0.5 * step, tmp, k2);
    for (std::size_t i = 0; i < 2 * n; ++i) tmp[i] = y[i] + 0.5 * step * k2[i];
    rhs(x + 0.5 * step, tmp, k3);
    for (std::size_t i = 0; i < 2 * n; ++i) tmp[i] = y[i] + step * k3[i];
    rhs(x + step, tmp, k4);
    for (std::size_t i = 0; i < 2 * n; ++i) out[i] = y[i] + step / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  };

  Trajectory tr;
  tr.steps = steps;
  std::vector<double> y(2 * n), full(2 * n), half(2 * n), fine(2 * n);
  std::copy(phi0.begin(), phi0.end(), y.begin());
  std::copy(dphi0.begin(), dphi0.end(), y.begin() + n);
  auto record = [&](double x) {
    tr.x.push_back(x);
    tr.phi.emplace_back(y.begin(), y.begin() + n);
    tr.dphi.emplace_back(y.begin() + n, y.end());
  };
  record(x0);
  for (std::size_t s = 0; s < steps; ++s) {
    double x = x0 + dx * static_cast<double>(s);
    double next = s + 1 == steps ? x1 : x0 + dx * static_cast<double>(s + 1);
    rk4(x, dx, y, full);
    rk4(x, 0.5 * dx, y, half);
    rk4(x + 0.5 * dx, 0.5 * dx, half, fine);
    for (std::size_t i = 0; i < 2 * n; ++i)
      tr.max_local_error = std::max(tr.max_local_error, std::abs(fine[i] - full[i]) / 15.0);
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isfinite(full[i]) || std::abs(full[i]) > 1e12)
        throw BlowUpError("trajectory blew up after x = " + std::to_string(x), x);
    y = full;
    record(next);
  }
  return tr;
}

std::vector<double> fd_weights(double z, const std::vector<double>& nodes, int m) {
  // Fornberg's recursion, keeping only the column for derivative order m.
  const std::size_t n = nodes.size();
  if (n <= static_cast<std::size_t>(m)) throw Error("stencil too short for derivative order");
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0, c4 = nodes[0] - z;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    int mn = std::min<int>(static_cast<int>(i), m);
    double c2 = 1.0, c5 = c4;
    c4 = nodes[i] - z;
    for (std::size_t j = 0; j < i; ++j) {
      double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = c[i][m];
  return w;
}

Report lift_and_verify(const Ansatz& a, const std::array<Expr, 3>& phis, const RDSystem& sys,
                       const std::vector<double>& t, const std::vector<double>& x, double tol) {
  SubstitutionRules by_phi;
  for (int i = 0; i < 3; ++i) {
    for (const auto& s : free_symbols(phis[i]))
      if (s != "x") throw Error("phi" + std::to_string(i + 1) + " may depend on x only, found '" + s + "'");
    by_phi[kPhi[i]] = phis[i];
  }
  std::array<Expr, 3> F;
  SubstitutionRules fields;
  for (int k = 0; k < 3; ++k) {
    F[k] = substitute(a.fields[k], by_phi);
    fields[kFields[k]] = F[k];
  }
  std::vector<Expr> S;
  for (int k = 0; k < 3; ++k)
    S.push_back(Expr(sys.d[k]) * differentiate(differentiate(F[k], "x"), "x") - differentiate(F[k], "t") +
                substitute(sys.C[k], fields));
  ScaledResidual prog(S, {"t", "x"});
  auto work = prog.workspace();
  Report rep = empty_report(sys.label);
  std::array<double, 2> in{};
  std::array<double, 3> value{}, scale{};
  for (double tv : t)
    for (double xv : x) {
      in = {tv, xv};
      if (!prog.eval(in, value, scale, work)) {
        ++rep.redraws;
        continue;
      }
      accumulate(rep, value, scale);
    }
  if (rep.redraws) rep.notes.push_back(std::to_string(rep.redraws) + " grid points outside the domain skipped");
  return finish(std::move(rep), tol);
}

Report lift_and_verify(const Ansatz& a, const Trajectory& traj, const RDSystem& sys,
                       const std::vector<double>& t, std::size_t stride, double tol) {
  if (traj.phi.empty() || traj.phi.front().size() != 3) throw Error("lift needs a three-component trajectory");
  if (stride == 0) throw Error("stride must be positive");
  const std::size_t m = (traj.x.size() - 1) / stride + 1;  // verification points
  if (m < 6) throw Error("verification grid extends beyond trajectory domain");
  std::vector<double> xs(m);
  for (std::size_t i = 0; i < m; ++i) xs[i] = traj.x[i * stride];

  // φ'' on the verification grid: 5-point centered inside, 6-point one-sided
  // at the two points nearest each end (both fourth order).
  std::vector<std::array<double, 3>> dd(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t lo = i < 2 ? 0 : (i + 2 >= m ? m - 6 : i - 2);
    std::size_t len = (i < 2 || i + 2 >= m) ? 6 : 5;
    std::vector<double> nodes(xs.begin() + lo, xs.begin() + lo + len);
    auto w = fd_weights(xs[i], nodes, 2);
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < len; ++j) s += w[j] * traj.phi[(lo + j) * stride][c];
      dd[i][c] = s;
    }
  }

  auto S = lift_template(a, sys);
  ScaledResidual prog({S.begin(), S.end()}, template_inputs());
  auto work = prog.workspace();
  Report rep = empty_report(sys.label);
  std::array<double, 8> in{};
  std::array<double, 3> value{}, scale{};
  for (double tv : t)
    for (std::size_t i = 0; i < m; ++i) {
      in[0] = tv;
      in[1] = xs[i];
      for (int c = 0; c < 3; ++c) {
        in[2 + c] = traj.phi[i * stride][c];
        in[5 + c] = dd[i][c];
      }
      if (!prog.eval(in, value, scale, work)) throw DomainError("lifted residual undefined on trajectory");
      accumulate(rep, value, scale);
    }
  rep.notes.push_back("verification spacing " + std::to_string(xs[1] - xs[0]));
  return finish(std::move(rep), tol);
}

}  // namespace rdsym
