#include "rdsym/solutions.hpp"

#include "rdsym/compiled.hpp"
#include "rdsym/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace rdsym {

namespace {

constexpr double kPi = std::numbers::pi;

const char* kNames[] = {"sol_4_11", "sol_4_16", "sol_4_18", "sol_4_22", "sol_4_24"};

class Params {
 public:
  Params(std::string_view who, const ParamSet& in) : who_(who), in_(in) {}

  Number required(const std::string& name) {
    auto it = in_.find(name);
    if (it == in_.end()) throw RestrictionError(who_ + ": missing required parameter " + name);
    return out_[name] = it->second;
  }
  Number optional(const std::string& name, const Number& fallback) {
    auto it = in_.find(name);
    return out_[name] = it == in_.end() ? fallback : it->second;
  }
  Number fixed(const std::string& name, const Number& value) {
    if (auto it = in_.find(name); it != in_.end() && !numerically_equal(it->second, value))
      throw RestrictionError(who_ + " requires " + name + " = " + value.str() + " (got " + it->second.str() + ")");
    return out_[name] = value;
  }
  const ParamSet& resolved() const { return out_; }

 private:
  std::string who_;
  const ParamSet& in_;
  ParamSet out_;
};

Expr c(const Number& n) { return Expr(n); }

Expr sqrt_of(const Number& n) { return pow(Expr(n), Rational{1, 2}); }

// tan²(x/(2√d1)) and its pole half-width π√d1.
Expr tan_sq(const Number& d1) { return pow(tan(sym("x") / (2 * sqrt_of(d1))), 2); }

RDSystem row2_system(const Number& d1, const Number& d2, const Number& d3) {
  TableCase tc = table_case(2, {{"d1", d1}, {"d2", d2}, {"d3", d3}, {"a1", Number(1)}});
  tc.system.label = "row 2 system, d = (" + d1.str() + ", " + d2.str() + ", " + d3.str() + ")";
  return tc.system;
}

std::vector<Expr> residual_exprs(const ExactSolution& s) {
  SubstitutionRules f;
  for (int k = 0; k < 3; ++k) f[kFields[k]] = s.fields[k];
  std::vector<Expr> S;
  for (int k = 0; k < 3; ++k)
    S.push_back(c(s.system.d[k]) * differentiate(differentiate(s.fields[k], "x"), "x") -
                differentiate(s.fields[k], "t") + substitute(s.system.C[k], f));
  return S;
}

bool decaying(const ExactSolution& s) {
  switch (s.id) {
    case SolutionId::S4_11:
    case SolutionId::S4_18: return true;
    case SolutionId::S4_16: return s.params.at("d3").value() < s.params.at("d1").value();
    default: return false;
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string_view solution_name(SolutionId id) { return kNames[static_cast<int>(id)]; }

SolutionId parse_solution_id(std::string_view text) {
  std::string t(text);
  if (t.rfind("sol_", 0) == 0) t = t.substr(4);
  std::replace(t.begin(), t.end(), '-', '_');
  for (auto id : kSolutionIds)
    if (solution_name(id).substr(4) == t) return id;
  throw Error("unknown solution id '" + std::string(text) + "'");
}

std::vector<double> Grid::ts() const {
  std::vector<double> out(nt);
  for (int i = 0; i < nt; ++i) out[i] = nt == 1 ? t0 : t0 + (t1 - t0) * i / (nt - 1);
  return out;
}

std::vector<double> Grid::xs() const {
  std::vector<double> out(nx);
  for (int i = 0; i < nx; ++i) out[i] = nx == 1 ? x0 : x0 + (x1 - x0) * i / (nx - 1);
  return out;
}

ExactSolution exact_solution(SolutionId id, const ParamSet& params, std::optional<Expr> phi1) {
  std::string who(solution_name(id));
  Params p(who, params);
  ExactSolution s;
  s.id = id;
  Expr t = sym("t"), x = sym("x");
  switch (id) {
    case SolutionId::S4_11: {
      Number d1 = p.required("d1"), d2 = p.required("d2"), d3 = p.required("d3");
      Number k = p.optional("k", Number::ratio(1, 4));
      Number al = p.optional("alpha", 0), be = p.optional("beta", Number::ratio(3, 5));
      if (!(d1.value() > d3.value())) throw RestrictionError(who + " requires d1 > d3 (decaying mode)");
      Number D = d3 / (d1 * (d1 - d3));
      s.system = row2_system(d1, d2, d3);
      Expr mode = sin(sqrt_of(D) * x) * exp(-c(d1 * D) * t);
      Expr lin = c(al) * x + c(be);
      s.fields = {-c(k) * mode + lin, c(k) * mode - lin + 1, c(k * (d2 - d1) * D) * mode};
      s.check = {0, 5, 50, 0, kPi / std::sqrt(D.value()), 50};
      s.restrictions = {"d1 > d3", "d1 ≠ d2"};
      break;
    }
    case SolutionId::S4_16: {
      Number d1 = p.required("d1"), d2 = p.required("d2"), d3 = p.required("d3");
      if (!phi1) throw RestrictionError(who + " requires phi1, a solution of the linear equation for phi1");
      for (const auto& name : free_symbols(*phi1))
        if (name != "x") throw Error(who + ": phi1 may depend on x only, found '" + name + "'");
      if (d1 == d3) throw RestrictionError(who + " requires d1 ≠ d3");
      s.system = row2_system(d1, d2, d3);
      Number r = d3 / (d3 - d1);
      Expr g = exp(c(r) * t), T2 = tan_sq(d1);
      s.fields = {*phi1 * g, num(3, 2) * (1 + T2) - *phi1 * g,
                  c(d3 * (d2 - d1) / (2 * d1 * (d1 - d3))) * (1 + 3 * T2) +
                      c(d3 * (d1 - d2) / (d1 * (d1 - d3))) * *phi1 * g};
      double half = kPi * std::sqrt(d1.value());
      s.x_lo = -half, s.x_hi = half;
      s.check = {0, 1, 50, -half + s.guard, half - s.guard, 50};
      s.restrictions = {"d1 ≠ d2", "d1 ≠ d3", "phi1 solves the linear equation"};

      // Gate on the linear equation before anything else.
      Expr lin = c(d1) * differentiate(differentiate(*phi1, "x"), "x") -
                 *phi1 * (c((3 * d3 - d1) / (2 * (d3 - d1))) + num(3, 2) * T2);
      ScaledResidual prog({lin}, {"x"});
      auto work = prog.workspace();
      std::array<double, 1> v{}, sc{};
      double worst = 0;
      for (double xv : s.check.xs()) {
        std::array<double, 1> in{xv};
        if (!prog.eval(in, v, sc, work)) throw DomainError(who + ": phi1 undefined at x = " + fmt(xv));
        worst = std::max(worst, std::abs(v[0]) / sc[0]);
      }
      if (worst > 1e-9)
        throw ConsistencyError(who + ": phi1 does not solve the linear equation (scaled residual " + fmt(worst) + ")");
      break;
    }
    case SolutionId::S4_18: {
      p.fixed("d1", 1);
      Number d3 = p.fixed("d3", Number::ratio(5, 9));
      Number d = p.optional("d", 2);
      p.fixed("d2", d);
      Number c1 = p.optional("c1", Number::ratio(1, 2));
      s.system = row2_system(1, d, d3);
      Expr u = c(c1) * pow(cos(x / 2), 3) * exp(num(-5, 4) * t);
      Expr T2 = pow(tan(x / 2), 2);
      s.fields = {u, num(3, 2) * (1 + T2) - u,
                  c(Number::ratio(5, 8) * (d - 1)) * (1 + 3 * T2) + c(Number::ratio(5, 4) * (1 - d)) * u};
      s.x_lo = -kPi, s.x_hi = kPi;
      s.check = {0, 5, 50, -kPi + s.guard, kPi - s.guard, 50};
      s.restrictions = {"d1 = 1", "d3 = 5/9", "d ≠ 1"};
      break;
    }
    case SolutionId::S4_22:
    case SolutionId::S4_24: {
      bool first = id == SolutionId::S4_22;
      p.fixed("d1", 1);
      Number d3 = p.fixed("d3", first ? Number::ratio(9, 5) : Number::ratio(4, 3));
      Number d = p.optional("d", 2);
      p.fixed("d2", d);
      s.system = row2_system(1, d, d3);
      Expr th2 = pow(tanh(x / 2), 2);
      Expr shape = pow(cosh(x / 2), 3);
      if (!first) shape = sinh(x / 2) * shape;
      Number rate = first ? Number::ratio(9, 4) : Number(4);
      Expr u = shape * exp(c(rate) * t);
      // w-coefficients (27/8, 9/4) and (6, 4) times (d - 1)
      Number a = first ? Number::ratio(27, 8) : Number(6), b = first ? Number::ratio(9, 4) : Number(4);
      s.fields = {u, num(1, 2) * (-1 + 3 * th2) - u, c(a * (d - 1)) * (1 - th2) + c(b * (d - 1)) * u};
      s.check = {0, 1, 50, -2, 2, 50};
      s.restrictions = {"d1 = 1", first ? "d3 = 9/5" : "d3 = 4/3", "d ≠ 1"};
      break;
    }
  }
  s.params = p.resolved();
  s.construction = pde_residual_on_grid(s, s.check);
  s.construction.label = who + " construction check";
  if (!s.construction.pass)
    throw ConsistencyError(who + ": residual check failed (scaled " + fmt(s.construction.max_scaled_residual) + ")");
  return s;
}

Report pde_residual_on_grid(const ExactSolution& s, const Grid& grid, double tol) {
  ScaledResidual prog(residual_exprs(s), {"t", "x"});
  auto work = prog.workspace();
  Report rep;
  rep.label = std::string(solution_name(s.id));
  rep.params = s.params;
  rep.tol = tol;
  rep.per_equation = {{"S1"}, {"S2"}, {"S3"}};
  std::array<double, 2> in{};
  std::array<double, 3> value{}, scale{};
  for (double xv : grid.xs()) {
    if (xv < s.x_lo + s.guard || xv > s.x_hi - s.guard)
      throw DomainError(rep.label + ": singular point in grid at x = " + fmt(xv));
    for (double tv : grid.ts()) {
      in = {tv, xv};
      if (!prog.eval(in, value, scale, work))
        throw DomainError(rep.label + ": singular point in grid at (t, x) = (" + fmt(tv) + ", " + fmt(xv) + ")");
      ++rep.samples;
      for (int k = 0; k < 3; ++k) {
        auto& eq = rep.per_equation[k];
        eq.max_abs = std::max(eq.max_abs, std::abs(value[k]));
        eq.max_scaled = std::max(eq.max_scaled, std::abs(value[k]) / scale[k]);
      }
    }
  }
  for (const auto& eq : rep.per_equation) {
    rep.max_abs_residual = std::max(rep.max_abs_residual, eq.max_abs);
    rep.max_scaled_residual = std::max(rep.max_scaled_residual, eq.max_scaled);
  }
  rep.pass = rep.max_scaled_residual <= tol;
  return rep;
}

std::array<Expr, 3> steady_state(const ExactSolution& s) {
  if (!decaying(s)) throw ConsistencyError(std::string(solution_name(s.id)) + " is not decaying");
  Expr x = sym("x");
  if (s.id == SolutionId::S4_11) {
    Expr lin = c(s.params.at("alpha")) * x + c(s.params.at("beta"));
    return {lin, 1 - lin, Expr(0)};
  }
  const Number& d1 = s.params.at("d1");
  const Number& d2 = s.params.at("d2");
  const Number& d3 = s.params.at("d3");
  Expr T2 = tan_sq(d1);
  return {Expr(0), num(3, 2) * (1 + T2), c(d3 * (d2 - d1) / (2 * d1 * (d1 - d3))) * (1 + 3 * T2)};
}

double decay_rate(const ExactSolution& s) {
  if (!decaying(s)) throw ConsistencyError(std::string(solution_name(s.id)) + " is not decaying");
  double d1 = s.params.at("d1").value(), d3 = s.params.at("d3").value();
  return d3 / (d1 - d3);  // d1·D for sol_4_11, -rate of the ansatz otherwise
}

double measured_decay(const ExactSolution& s, double T) {
  auto lim = steady_state(s);
  auto dist = [&](double at) { return asymptotics_check(s, lim, at, 1.0).max_abs_residual; };
  return std::log(dist(T) / dist(T + 1));
}

double growth_rate(const ExactSolution& s) {
  if (s.id == SolutionId::S4_22) return 9.0 / 4.0;
  if (s.id == SolutionId::S4_24) return 4.0;
  throw ConsistencyError(std::string(solution_name(s.id)) + " is not a growing solution");
}

Report asymptotics_check(const ExactSolution& s, const std::array<Expr, 3>& steady, double T, double tol,
                         std::optional<std::pair<double, double>> x_range, int nx) {
  if (!decaying(s)) throw ConsistencyError(std::string(solution_name(s.id)) + " is not decaying");
  auto [lo, hi] = x_range.value_or(std::pair{s.check.x0, s.check.x1});
  Grid g{T, T, 1, lo, hi, nx};
  std::vector<Expr> diff;
  for (int k = 0; k < 3; ++k) diff.push_back(s.fields[k] - steady[k]);
  CompiledExpr prog(diff, {"t", "x"});
  auto work = prog.workspace();
  Report rep;
  rep.label = std::string(solution_name(s.id)) + " asymptotics at T = " + fmt(T);
  rep.params = s.params;
  rep.tol = tol;
  rep.per_equation = {{"u"}, {"v"}, {"w"}};
  std::array<double, 3> out{};
  for (double xv : g.xs()) {
    if (xv < s.x_lo + s.guard || xv > s.x_hi - s.guard)
      throw DomainError(rep.label + ": singular point in grid at x = " + fmt(xv));
    std::array<double, 2> in{T, xv};
    if (!prog.eval(in, out, work)) throw DomainError(rep.label + ": undefined at x = " + fmt(xv));
    ++rep.samples;
    for (int k = 0; k < 3; ++k) {
      rep.per_equation[k].max_abs = std::max(rep.per_equation[k].max_abs, std::abs(out[k]));
      rep.per_equation[k].max_scaled = rep.per_equation[k].max_abs;
    }
  }
  for (const auto& eq : rep.per_equation) rep.max_abs_residual = std::max(rep.max_abs_residual, eq.max_abs);
  rep.max_scaled_residual = rep.max_abs_residual;
  rep.pass = rep.max_abs_residual <= tol;
  return rep;
}

NonnegCheck nonneg_domain_4_11(double k, double alpha, double beta, double D) {
  NonnegCheck r;
  double s = std::sqrt(D);
  double shifted = k - alpha * kPi / (2 * s);
  if (alpha >= 0) {
    r.lower = std::max(0.0, shifted);
    r.lower_bound = shifted > 0 ? "k - alpha*pi/(2*sqrt(D))" : "0";
    r.upper = 1 - alpha * kPi / s;
    r.upper_bound = "1 - alpha*pi/sqrt(D)";
  } else {
    double edge = -alpha * kPi / s;
    r.lower = std::max(edge, shifted);
    r.lower_bound = shifted > edge ? "k - alpha*pi/(2*sqrt(D))" : "-alpha*pi/sqrt(D)";
    r.upper = 1;
    r.upper_bound = "1";
  }
  r.ok = r.lower <= beta && beta <= r.upper;
  return r;
}

Expr explicit_phi(PhiSolution which, const Number& d1) {
  Expr arg = sym("x") / (2 * sqrt_of(d1));
  if (which == PhiSolution::P4_20) return num(3, 2) * (1 + pow(tan(arg), 2));
  return num(1, 2) * (-1 + 3 * pow(tanh(arg), 2));
}

PhiOdeCheck phi_ode_check(PhiSolution which, const Number& d1, std::optional<Expr> rhs) {
  if (!(d1.value() > 0)) throw DomainError("d1 must be positive");
  Expr phi = explicit_phi(which, d1);
  Expr f = rhs.value_or(sym("phi") * (sym("phi") - 1));
  Expr dphi = differentiate(phi, "x");
  Expr res = c(d1) * differentiate(dphi, "x") - substitute(f, {{"phi", phi}});
  ScaledResidual prog({res}, {"x"});
  CompiledExpr vals({phi, dphi}, {"x"});
  auto work = prog.workspace();
  auto vwork = vals.workspace();

  PhiOdeCheck out;
  out.I_expected = which == PhiSolution::P4_20 ? 0.0 : (9.0 / 4.0) * (4.0 / 27.0);
  {
    std::array<double, 1> in{0.0};
    std::array<double, 2> pv{};
    vals.eval(in, pv, vwork);
    out.I = d1.value() * pv[1] * pv[1] - (2.0 / 3.0) * pv[0] * pv[0] * pv[0] + pv[0] * pv[0];
  }
  Report& rep = out.residual;
  rep.label = which == PhiSolution::P4_20 ? "phi 4-20" : "phi 4-21";
  rep.tol = 1e-12;
  rep.per_equation = {{"ode"}};
  std::uint64_t seed = default_seed();
  rep.seeds = {seed};
  std::mt19937_64 rng(seed);
  // Stay a unit away from the poles at ±π√d1 for the tan branch.
  double half = which == PhiSolution::P4_20 ? kPi * std::sqrt(d1.value()) - 1.0 : 5.0;
  std::uniform_real_distribution<double> pick(-half, half);
  std::array<double, 1> v{}, sc{};
  std::array<double, 2> pv{};
  for (int i = 0; i < 200; ++i) {
    std::array<double, 1> in{pick(rng)};
    if (!prog.eval(in, v, sc, work) || !vals.eval(in, pv, vwork)) {
      ++rep.redraws;
      continue;
    }
    ++rep.samples;
    rep.per_equation[0].max_abs = std::max(rep.per_equation[0].max_abs, std::abs(v[0]));
    rep.per_equation[0].max_scaled = std::max(rep.per_equation[0].max_scaled, std::abs(v[0]) / sc[0]);
    double I = d1.value() * pv[1] * pv[1] - (2.0 / 3.0) * pv[0] * pv[0] * pv[0] + pv[0] * pv[0];
    out.I_spread = std::max(out.I_spread, std::abs(I - out.I) / std::max(1.0, std::abs(pv[0] * pv[0] * pv[0])));
  }
  rep.max_abs_residual = rep.per_equation[0].max_abs;
  rep.max_scaled_residual = rep.per_equation[0].max_scaled;
  rep.pass = rep.max_scaled_residual <= rep.tol;
  rep.notes.push_back("I = " + fmt(out.I) + ", expected " + fmt(out.I_expected));
  return out;
}

Report property_u_plus_v(const ExactSolution& s, double tol) {
  if (s.id != SolutionId::S4_11)
    throw Error("u + v = 1 holds for sol_4_11 only, got " + std::string(solution_name(s.id)));
  Grid g = s.check;
  g.nt = g.nx = 100;
  CompiledExpr prog({s.fields[0] + s.fields[1] - 1}, {"t", "x"});
  auto work = prog.workspace();
  Report rep;
  rep.label = "sol_4_11 u + v = 1";
  rep.params = s.params;
  rep.tol = tol;
  rep.per_equation = {{"u+v-1"}};
  std::array<double, 1> out{};
  for (double tv : g.ts())
    for (double xv : g.xs()) {
      std::array<double, 2> in{tv, xv};
      prog.eval(in, out, work);
      ++rep.samples;
      rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(out[0]));
    }
  rep.per_equation[0].max_abs = rep.per_equation[0].max_scaled = rep.max_scaled_residual = rep.max_abs_residual;
  rep.pass = rep.max_abs_residual <= tol;
  return rep;
}

}  // namespace rdsym
