#include "rdsym/symmetry.hpp"

#include "rdsym/compiled.hpp"
#include "rdsym/errors.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <random>

namespace rdsym {

std::optional<JetSymbol> parse_jet(std::string_view name) {
  if (name.empty()) return std::nullopt;
  auto it = std::find(kFields.begin(), kFields.end(), name.substr(0, 1));
  if (it == kFields.end()) return std::nullopt;
  JetSymbol j;
  j.field = static_cast<int>(it - kFields.begin());
  if (name.size() == 1) return j;
  if (name[1] != '_' || name.size() == 2) return std::nullopt;
  std::size_t i = 2;
  while (i < name.size() && name[i] == 't') ++j.nt, ++i;
  while (i < name.size() && name[i] == 'x') ++j.nx, ++i;
  if (i != name.size()) return std::nullopt;
  return j;
}

std::string jet_name(int field, int nt, int nx) {
  std::string s = kFields[field];
  if (nt + nx == 0) return s;
  s += '_';
  s.append(nt, 't');
  s.append(nx, 'x');
  return s;
}

Expr total_derivative(const Expr& e, Direction dir) {
  std::vector<Expr> terms{differentiate(e, dir == Direction::T ? "t" : "x")};
  for (const auto& s : free_symbols(e)) {
    auto j = parse_jet(s);
    if (!j) continue;
    int nt = j->nt + (dir == Direction::T ? 1 : 0);
    int nx = j->nx + (dir == Direction::X ? 1 : 0);
    terms.push_back(sym(jet_name(j->field, nt, nx)) * differentiate(e, s));
  }
  return Expr::sum(std::move(terms));
}

const Expr& LinearCoefficients::coefficient(int k, int j) const {
  if (k == j) return r[k];
  switch (k) {
    case 0: return j == 1 ? q[0] : h[0];
    case 1: return j == 0 ? q[1] : h[1];
    default: return j == 0 ? q[2] : h[2];
  }
}

std::array<Expr, 3> LinearCoefficients::eta() const {
  std::array<Expr, 3> out;
  for (int k = 0; k < 3; ++k) {
    std::vector<Expr> terms{p[k]};
    for (int j = 0; j < 3; ++j) terms.push_back(coefficient(k, j) * sym(kFields[j]));
    out[k] = Expr::sum(std::move(terms));
  }
  return out;
}

LinearCoefficients decompose(const QOperator& Q) {
  SubstitutionRules origin{{"u", Expr(0)}, {"v", Expr(0)}, {"w", Expr(0)}};
  LinearCoefficients L;
  for (int k = 0; k < 3; ++k) {
    auto part = [&](int j) { return substitute(differentiate(Q.eta[k], kFields[j]), origin); };
    L.r[k] = part(k);
    L.p[k] = substitute(Q.eta[k], origin);
  }
  L.q = {substitute(differentiate(Q.eta[0], "v"), origin), substitute(differentiate(Q.eta[1], "u"), origin),
         substitute(differentiate(Q.eta[2], "u"), origin)};
  L.h = {substitute(differentiate(Q.eta[0], "w"), origin), substitute(differentiate(Q.eta[1], "w"), origin),
         substitute(differentiate(Q.eta[2], "v"), origin)};

  auto rebuilt = L.eta();
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 20; ++i) {
      Binding b{{"t", 0.5 * (dist(rng) + 1)}, {"x", dist(rng)}, {"u", dist(rng)}, {"v", dist(rng)}, {"w", dist(rng)}};
      double a = evaluate(Q.eta[k], b);
      double c = evaluate(rebuilt[k], b);
      if (std::abs(a - c) > 1e-12 * std::max({1.0, std::abs(a), std::abs(c)}))
        throw ConsistencyError("eta" + std::to_string(k + 1) + " is not affine in u, v, w");
    }
  }
  return L;
}

std::array<Expr, 3> prolong_residuals(const QOperator& Q, const RDSystem& sys) {
  const Expr Dx_xi = total_derivative(Q.xi, Direction::X);
  const Expr Dt_xi = total_derivative(Q.xi, Direction::T);

  SubstitutionRules manifold;
  for (int j = 0; j < 3; ++j) {
    Expr ux = sym(jet_name(j, 0, 1));
    Expr ut = Q.eta[j] - Q.xi * ux;
    manifold[jet_name(j, 1, 0)] = ut;
    manifold[jet_name(j, 0, 2)] = (ut - sys.C[j]) / Expr(sys.d[j]);
  }

  std::array<Expr, 3> out;
  for (int k = 0; k < 3; ++k) {
    Expr ux = sym(jet_name(k, 0, 1));
    Expr uxx = sym(jet_name(k, 0, 2));
    Expr rho_x = total_derivative(Q.eta[k], Direction::X) - ux * Dx_xi;
    Expr rho_t = total_derivative(Q.eta[k], Direction::T) - ux * Dt_xi;
    Expr sigma_xx = total_derivative(rho_x, Direction::X) - uxx * Dx_xi;
    std::vector<Expr> terms{Expr(sys.d[k]) * sigma_xx, -rho_t};
    for (int j = 0; j < 3; ++j) terms.push_back(Q.eta[j] * differentiate(sys.C[k], kFields[j]));
    // Explicit (t, x) dependence only occurs in transformed systems.
    terms.push_back(differentiate(sys.C[k], "t"));
    terms.push_back(Q.xi * differentiate(sys.C[k], "x"));
    Expr R = substitute(Expr::sum(std::move(terms)), manifold);
    for (const auto& s : free_symbols(R)) {
      auto j = parse_jet(s);
      if (j && (j->nt > 0 || j->nx > 1))
        throw ConsistencyError("unexpected higher jet symbol " + s + " in residual " + std::to_string(k + 1));
    }
    out[k] = R;
  }
  return out;
}

namespace {

const std::vector<std::string> kReducedJet{"t", "x", "u", "v", "w", "u_x", "v_x", "w_x"};

using Sampler = std::function<void(std::mt19937_64&, std::vector<double>&)>;

// Shared sampling loop: two seeds, redraws on domain errors, max aggregation.
Report sample_residuals(const ScaledResidual& prog, const std::vector<std::string>& names,
                        std::size_t n_inputs, const Sampler& draw, const VerifyOptions& opt) {
  if (opt.n_samples < 1) throw Error("n_samples must be at least 1");
  Report rep;
  rep.tol = opt.tol;
  rep.per_equation.resize(names.size());
  for (std::size_t k = 0; k < names.size(); ++k) rep.per_equation[k].name = names[k];
  std::uint64_t seed = opt.seed ? opt.seed : default_seed();
  rep.seeds.push_back(seed);
  if (opt.confirm) rep.seeds.push_back(seed ^ 0x9E3779B97F4A7C15ULL);

  std::vector<double> in(n_inputs), value(names.size()), scale(names.size());
  auto work = prog.workspace();
  for (auto s : rep.seeds) {
    std::mt19937_64 rng(s);
    for (int i = 0; i < opt.n_samples; ++i) {
      int tries = 0;
      for (;;) {
        draw(rng, in);
        if (prog.eval(in, value, scale, work)) break;
        ++rep.redraws;
        if (++tries > 1000) throw DomainError("residual undefined throughout the sampling box");
      }
      ++rep.samples;
      for (std::size_t k = 0; k < names.size(); ++k) {
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
  rep.pass = rep.max_scaled_residual <= opt.tol;
  return rep;
}

}  // namespace

Report verify_invariance(const QOperator& Q, const RDSystem& sys, const VerifyOptions& opt) {
  auto R = prolong_residuals(Q, sys);
  ScaledResidual prog({R.begin(), R.end()}, kReducedJet);
  const SampleBox& bx = opt.box;
  Sampler draw = [&bx](std::mt19937_64& rng, std::vector<double>& in) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto pick = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    in[0] = pick(bx.t_lo, bx.t_hi);
    in[1] = pick(bx.x_lo, bx.x_hi);
    for (int i = 2; i < 5; ++i) in[i] = pick(bx.field_lo, bx.field_hi);
    for (int i = 5; i < 8; ++i) in[i] = pick(bx.slope_lo, bx.slope_hi);
  };
  Report rep = sample_residuals(prog, {"R1", "R2", "R3"}, kReducedJet.size(), draw, opt);
  rep.label = Q.label;
  return rep;
}

std::vector<NamedResidual> determining_residuals(const LinearCoefficients& L, const Expr& xi, const HGFParams& p) {
  for (const auto& s : free_symbols(xi))
    if (s != "t" && s != "x") throw RestrictionError("xi must depend on t and x only");
  const RDSystem sys = hgf_system(p);
  const auto eta = L.eta();
  const auto& d = sys.d;
  const auto& C = sys.C;
  auto D = [](const Expr& e, const char* s) { return differentiate(e, s); };
  auto n = [](const Number& v) { return Expr(v); };
  const Expr xi_x = D(xi, "x");
  const Expr xi_t = D(xi, "t");
  const Expr xi_xx = D(xi_x, "x");
  const std::array<const char*, 3> f{"u", "v", "w"};

  std::vector<NamedResidual> out;
  // Items 3) to 5): coefficients of the cross first derivatives, printed with
  // the sign convention of the determining system.
  auto cross = [&](const std::string& name, int k, int j, int sign) {
    Expr eta_j = D(eta[k], f[j]);
    Expr eta_xj = D(eta_j, "x");
    Expr dd = n(d[std::min(k, j)] - d[std::max(k, j)]);
    out.push_back({name, dd * xi * eta_j + Expr(2 * sign) * n(d[k] * d[j]) * eta_xj});
  };
  cross("3a", 0, 1, -1);
  cross("3b", 0, 2, -1);
  cross("4a", 1, 0, 1);
  cross("4b", 1, 2, -1);
  cross("5a", 2, 0, 1);
  cross("5b", 2, 1, 1);
  // Items 6) to 8).
  for (int k = 0; k < 3; ++k) {
    Expr e = xi_t - n(d[k]) * xi_xx + 2 * n(d[k]) * D(D(eta[k], f[k]), "x") + 2 * xi * xi_x;
    out.push_back({std::to_string(6 + k), e});
  }
  // Items 9) to 11).
  for (int k = 0; k < 3; ++k) {
    std::vector<Expr> terms;
    for (int j = 0; j < 3; ++j) terms.push_back(eta[j] * D(C[k], f[j]));
    terms.push_back((2 * xi_x - D(eta[k], f[k])) * C[k]);
    for (int j = 0; j < 3; ++j) {
      if (j == k) continue;
      Expr ratio = n(d[k] / d[j]);
      Expr eta_kj = D(eta[k], f[j]);
      terms.push_back(-ratio * eta_kj * C[j]);
      terms.push_back((ratio - 1) * eta[j] * eta_kj);
    }
    terms.push_back(n(d[k]) * D(D(eta[k], "x"), "x"));
    terms.push_back(-D(eta[k], "t"));
    terms.push_back(-2 * xi_x * eta[k]);
    out.push_back({std::to_string(9 + k), Expr::sum(std::move(terms))});
  }
  return out;
}

Report check_residuals(const std::vector<NamedResidual>& residuals, const VerifyOptions& opt) {
  static const std::vector<std::string> inputs{"t", "x", "u", "v", "w"};
  std::vector<Expr> exprs;
  std::vector<std::string> names;
  for (const auto& r : residuals) {
    exprs.push_back(r.expr);
    names.push_back(r.name);
  }
  ScaledResidual prog(exprs, inputs);
  const SampleBox& bx = opt.box;
  Sampler draw = [&bx](std::mt19937_64& rng, std::vector<double>& in) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto pick = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    in[0] = pick(bx.t_lo, bx.t_hi);
    in[1] = pick(bx.x_lo, bx.x_hi);
    for (int i = 2; i < 5; ++i) in[i] = pick(bx.field_lo, bx.field_hi);
  };
  return sample_residuals(prog, names, inputs.size(), draw, opt);
}

}  // namespace rdsym
