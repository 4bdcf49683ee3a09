#include "rdsym/pdesim.hpp"

#include "rdsym/compiled.hpp"
#include "rdsym/errors.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

namespace rdsym {

namespace {

constexpr double kBlowUp = 1e12;

using State = std::array<std::vector<double>, 3>;

}  // namespace

std::string_view boundary_name(Boundary b) {
  switch (b) {
    case Boundary::DirichletExact: return "dirichlet-from-exact";
    case Boundary::DirichletConstant: return "dirichlet-constant";
    case Boundary::NoFlux: return "no-flux";
  }
  return "?";
}

Boundary parse_boundary(std::string_view text) {
  for (auto b : {Boundary::DirichletExact, Boundary::DirichletConstant, Boundary::NoFlux})
    if (boundary_name(b) == text) return b;
  throw Error("unknown boundary '" + std::string(text) + "'");
}

void SimConfig::validate() const {
  if (!(x1 > x0)) throw Error("simulation interval must have x1 > x0");
  if (n_cells < 8) throw Error("n_cells must be at least 8");
  if (!(t_end > 0)) throw Error("t_end must be positive");
  if (!(safety > 0 && safety <= 1)) throw Error("safety must lie in (0, 1]");
  if (n_snapshots < 1) throw Error("n_snapshots must be at least 1");
  if (boundary == Boundary::DirichletExact && !exact) throw Error("dirichlet-from-exact needs exact boundary data");
}

SimConfig config_from_exact(const ExactSolution& s, double x0, double x1, int n_cells, double t_end) {
  SimConfig c;
  c.x0 = x0, c.x1 = x1, c.n_cells = n_cells, c.t_end = t_end;
  c.boundary = Boundary::DirichletExact;
  c.initial = s.fields;
  c.exact = s.fields;
  return c;
}

SimResult simulate(const RDSystem& sys, const SimConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_cells;
  const std::size_t m = static_cast<std::size_t>(n) + 1;
  const double h = cfg.h();
  double dmax = 0;
  for (const auto& d : sys.d) dmax = std::max(dmax, d.value());
  const double dt_stable = cfg.safety * h * h / (2 * dmax);
  const auto n_steps = static_cast<std::size_t>(std::ceil(cfg.t_end / dt_stable));
  const double dt = cfg.t_end / static_cast<double>(n_steps);

  SimResult res;
  res.dt = dt;
  res.steps = n_steps;
  res.x.resize(m);
  for (std::size_t i = 0; i < m; ++i) res.x[i] = i == static_cast<std::size_t>(n) ? cfg.x1 : cfg.x0 + h * i;

  const std::vector<std::string> inputs{"t", "x", "u", "v", "w"};
  CompiledExpr react({sys.C.begin(), sys.C.end()}, inputs);
  auto rwork = react.workspace();
  CompiledExpr init({cfg.initial.begin(), cfg.initial.end()}, {"t", "x"});
  auto iwork = init.workspace();
  CompiledExpr bdata;
  std::vector<double> bwork;
  if (cfg.boundary == Boundary::DirichletExact) {
    bdata = CompiledExpr({cfg.exact->begin(), cfg.exact->end()}, {"t", "x"});
    bwork = bdata.workspace();
  }

  State y;
  for (auto& f : y) f.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    std::array<double, 2> in{0.0, res.x[i]};
    std::array<double, 3> out{};
    if (!init.eval(in, out, iwork)) throw DomainError("initial data undefined at x = " + std::to_string(res.x[i]));
    for (int k = 0; k < 3; ++k) y[k][i] = out[k];
  }

  // Dirichlet rows are algebraic: their values are imposed at every stage time.
  auto impose = [&](State& s, double t) {
    if (cfg.boundary == Boundary::NoFlux) return;
    std::array<double, 3> lo = cfg.left, hi = cfg.right;
    if (cfg.boundary == Boundary::DirichletExact) {
      std::array<double, 2> a{t, cfg.x0}, b{t, cfg.x1};
      if (!bdata.eval(a, lo, bwork) || !bdata.eval(b, hi, bwork))
        throw DomainError("boundary data undefined at t = " + std::to_string(t));
    }
    for (int k = 0; k < 3; ++k) {
      s[k][0] = lo[k];
      s[k][m - 1] = hi[k];
    }
  };
  const bool noflux = cfg.boundary == Boundary::NoFlux;
  const double inv_h2 = 1.0 / (h * h);
  std::array<double, 5> in{};
  std::array<double, 3> c{};
  auto rhs = [&](const State& s, double t, State& ds) {
    for (std::size_t i = 0; i < m; ++i) {
      bool edge = i == 0 || i == m - 1;
      if (edge && !noflux) {
        for (int k = 0; k < 3; ++k) ds[k][i] = 0;
        continue;
      }
      in = {t, res.x[i], s[0][i], s[1][i], s[2][i]};
      if (!react.eval(in, c, rwork)) throw DomainError("reaction terms undefined at x = " + std::to_string(res.x[i]));
      for (int k = 0; k < 3; ++k) {
        const auto& f = s[k];
        double left = i == 0 ? f[1] : f[i - 1];
        double right = i == m - 1 ? f[m - 2] : f[i + 1];
        ds[k][i] = sys.d[k].value() * (left - 2 * f[i] + right) * inv_h2 + c[k];
      }
    }
  };

  auto snapshot = [&](double t) {
    res.snapshots.push_back({t, y});
  };
  impose(y, 0.0);
  snapshot(0.0);
  std::vector<std::size_t> marks;
  for (int j = 1; j <= cfg.n_snapshots; ++j)
    marks.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(n_steps) * j / cfg.n_snapshots)));

  State k1, k2, k3, k4, tmp;
  for (auto* s : {&k1, &k2, &k3, &k4, &tmp})
    for (auto& f : *s) f.assign(m, 0.0);
  auto axpy = [&](const State& base, double a, const State& k, double t) {
    for (int c3 = 0; c3 < 3; ++c3)
      for (std::size_t i = 0; i < m; ++i) tmp[c3][i] = base[c3][i] + a * k[c3][i];
    impose(tmp, t);
  };
  std::size_t next_mark = 0;
  for (std::size_t step = 1; step <= n_steps; ++step) {
    double t = dt * static_cast<double>(step - 1);
    double t_next = step == n_steps ? cfg.t_end : dt * static_cast<double>(step);
    rhs(y, t, k1);
    axpy(y, 0.5 * dt, k1, t + 0.5 * dt);
    rhs(tmp, t + 0.5 * dt, k2);
    axpy(y, 0.5 * dt, k2, t + 0.5 * dt);
    rhs(tmp, t + 0.5 * dt, k3);
    axpy(y, dt, k3, t_next);
    rhs(tmp, t_next, k4);
    for (int k = 0; k < 3; ++k)
      for (std::size_t i = 0; i < m; ++i) {
        double v = y[k][i] + dt / 6.0 * (k1[k][i] + 2 * k2[k][i] + 2 * k3[k][i] + k4[k][i]);
        if (!std::isfinite(v) || std::abs(v) > kBlowUp)
          throw BlowUpError("simulation blew up after t = " + std::to_string(t), t);
        y[k][i] = v;
      }
    impose(y, t_next);
    for (int k = 0; k < 3; ++k)
      for (double v : y[k]) res.max_abs = std::max(res.max_abs, std::abs(v));
    while (next_mark < marks.size() && marks[next_mark] == step) {
      snapshot(t_next);
      ++next_mark;
    }
  }
  return res;
}

std::vector<std::array<double, 3>> error_vs_exact(const SimResult& r, const std::array<Expr, 3>& exact, Norm norm) {
  CompiledExpr prog({exact.begin(), exact.end()}, {"t", "x"});
  auto work = prog.workspace();
  const std::size_t m = r.x.size();
  std::vector<std::array<double, 3>> out;
  for (const auto& s : r.snapshots) {
    std::array<double, 3> err{};
    for (std::size_t i = 0; i < m; ++i) {
      std::array<double, 2> in{s.t, r.x[i]};
      std::array<double, 3> ex{};
      if (!prog.eval(in, ex, work)) throw DomainError("exact solution undefined at x = " + std::to_string(r.x[i]));
      for (int k = 0; k < 3; ++k) {
        double e = std::abs(s.f[k][i] - ex[k]);
        if (norm == Norm::Sup) {
          err[k] = std::max(err[k], e);
        } else {
          double w = 0.5 * ((i + 1 < m ? r.x[i + 1] - r.x[i] : 0.0) + (i > 0 ? r.x[i] - r.x[i - 1] : 0.0));
          err[k] += w * e * e;
        }
      }
    }
    if (norm == Norm::L2)
      for (auto& e : err) e = std::sqrt(e);
    out.push_back(err);
  }
  return out;
}

ConvergenceResult convergence_order(const RDSystem& sys, const std::array<Expr, 3>& exact, const SimConfig& base,
                                    int levels) {
  if (levels < 3) throw Error("convergence needs at least three levels");
  ConvergenceResult cr;
  std::vector<std::future<std::array<double, 3>>> runs;
  for (int l = 0; l < levels; ++l) {
    SimConfig c = base;
    c.n_cells = base.n_cells << l;
    c.n_snapshots = 1;
    cr.n_cells.push_back(c.n_cells);
    runs.push_back(std::async(std::launch::async, [&sys, &exact, c] {
      return error_vs_exact(simulate(sys, c), exact, Norm::Sup).back();
    }));
  }
  for (auto& f : runs) cr.errors.push_back(f.get());
  for (int k = 0; k < 3; ++k)
    cr.exact[k] = std::all_of(cr.errors.begin(), cr.errors.end(), [k](const auto& e) { return e[k] <= 1e-12; });
  for (int l = 0; l + 1 < levels; ++l) {
    std::array<double, 3> o{};
    for (int k = 0; k < 3; ++k)
      o[k] = cr.exact[k] ? std::numeric_limits<double>::infinity() : std::log2(cr.errors[l][k] / cr.errors[l + 1][k]);
    cr.orders.push_back(o);
  }
  return cr;
}

std::string canonical_text(const RDSystem& sys, const SimConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << "d=" << sys.d[0].str() << ',' << sys.d[1].str() << ',' << sys.d[2].str() << '\n';
  for (const auto& C : sys.C) os << "C=" << C << '\n';
  os << "x=" << cfg.x0 << ',' << cfg.x1 << "\nn=" << cfg.n_cells << "\nt_end=" << cfg.t_end
     << "\nboundary=" << boundary_name(cfg.boundary) << "\nsafety=" << cfg.safety << "\nsnapshots=" << cfg.n_snapshots
     << '\n';
  for (const auto& e : cfg.initial) os << "init=" << e << '\n';
  if (cfg.exact)
    for (const auto& e : *cfg.exact) os << "exact=" << e << '\n';
  if (cfg.boundary == Boundary::DirichletConstant)
    for (int k = 0; k < 3; ++k) os << "bc=" << cfg.left[k] << ',' << cfg.right[k] << '\n';
  return os.str();
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace rdsym
