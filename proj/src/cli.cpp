#include "rdsym/cli.hpp"

#include "rdsym/config.hpp"
#include "rdsym/compiled.hpp"
#include "rdsym/errors.hpp"
#include "rdsym/io.hpp"
#include "rdsym/symmetry.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace rdsym::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

class UsageError : public Error {
 public:
  using Error::Error;
};

template <class F>
auto as_usage(F&& f) {
  try {
    return f();
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

struct Options {
  std::string out = "rdsym-out";
  std::string config;
  std::string params;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  int samples = 200;
  // verify-case / verify-operator
  int case_id = 0;
  bool all = false;
  int draws = 1;
  int op = 0;
  std::string P, d, C, xi, eta;
  bool determining = false;
  // verify-solution / simulate / converge
  std::string id;
  std::string phi1;
  int grid = 100;
  bool surface = false;
  double x0 = std::numeric_limits<double>::quiet_NaN();
  double x1 = std::numeric_limits<double>::quiet_NaN();
  int cells = 0;
  double t_end = 1.0;
  std::string boundary;
  double safety = 0.4;
  int snapshots = 10;
  std::string initial, left, right;
  double max_error = -1;
  int levels = 3;
  double order_lo = 1.7, order_hi = 2.3;
  // reduce
  std::string ansatz, ode, phi0, dphi0;
  double x_end = std::numbers::pi;
  double h = 1e-3;
  int stride = 10;
  // fig1
  std::string panel = "right";
  double t_max = 5;
};

struct Outcome {
  std::vector<Report> reports;
  nlohmann::json extra = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> files;
  nlohmann::json request = nlohmann::json::object();
  std::string listing;  // printed instead of a report table
};

std::vector<std::string> split(const std::string& text, const char* seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::strchr(seps, c)) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::array<Expr, 3> three_exprs(const std::string& text, const char* what) {
  auto parts = split(text, ";");
  if (parts.size() != 3) throw UsageError(std::string(what) + " needs three ';'-separated expressions");
  std::array<Expr, 3> out;
  for (int k = 0; k < 3; ++k) out[k] = as_usage([&] { return parse(parts[k]); });
  return out;
}

std::vector<double> doubles(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& p : split(text, ",;"))
    out.push_back(as_usage([&] { return Number::parse(p).value(); }));
  if (out.empty()) throw UsageError(std::string(what) + " is empty");
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ParamSet params_of(const Options& o) {
  return as_usage([&] { return parse_param_list(o.params); });
}

std::uint64_t seed_of(const Options& o) { return o.seed ? o.seed : default_seed(); }

Report leaf(const std::string& label, double value, double tol, bool pass) {
  Report r;
  r.label = label;
  r.max_abs_residual = r.max_scaled_residual = value;
  r.tol = tol;
  r.pass = pass;
  r.samples = 1;
  return r;
}

Report group(const std::string& label, const ParamSet& params, double tol) {
  Report r;
  r.label = label;
  r.params = params;
  r.tol = tol;
  r.pass = true;
  return r;
}

// Explicit operator from --d/--C/--xi/--eta with params substituted.
std::optional<Definition> explicit_definition(const Options& o) {
  if (o.d.empty() && o.C.empty() && o.xi.empty() && o.eta.empty()) return std::nullopt;
  if (o.d.empty() || o.C.empty() || o.xi.empty() || o.eta.empty())
    throw UsageError("an explicit definition needs --d, --C, --xi and --eta");
  nlohmann::json j;
  j["d"] = split(o.d, ",;");
  auto c = split(o.C, ";"), e = split(o.eta, ";");
  j["C"] = c;
  j["xi"] = o.xi;
  j["eta"] = e;
  j["params"] = nlohmann::json::object();
  for (const auto& [k, v] : params_of(o)) j["params"][k] = v.str();
  return as_usage([&] { return parse_definition(j); });
}

std::optional<Expr> opt_expr(const std::string& text) {
  if (text.empty()) return std::nullopt;
  return as_usage([&] { return parse(text); });
}

VerifyOptions verify_options(const Options& o) {
  VerifyOptions v;
  v.n_samples = o.samples;
  v.tol = o.tol;
  v.seed = seed_of(o);
  return v;
}

Outcome verify_case(const Options& o) {
  if (!o.all && o.case_id == 0) throw UsageError("verify-case needs --case N or --all");
  if (o.case_id < 0 || o.case_id > kCaseCount) throw UsageError("case must be 1.." + std::to_string(kCaseCount));
  if (o.draws < 1) throw UsageError("--draws must be at least 1");
  std::vector<int> ids;
  if (o.all)
    for (int i = 1; i <= kCaseCount; ++i) ids.push_back(i);
  else
    ids.push_back(o.case_id);
  ParamSet given = params_of(o);
  auto P = opt_expr(o.P);
  VerifyOptions vo = verify_options(o);
  // Fixed parameters for a single case; random admissible draws for the suite
  // (given values override the draw).
  bool random = o.all || given.empty();
  auto run_case = [=](int id) {
    Report rep = group("Case " + std::to_string(id), {}, o.tol);
    std::mt19937_64 rng(vo.seed + static_cast<std::uint64_t>(id));
    int draws = random ? o.draws : 1;
    for (int k = 0; k < draws; ++k) {
      ParamSet p = given;
      if (random) {
        p = random_case_params(id, rng);
        for (const auto& [key, v] : given) p[key] = v;
      }
      TableCase tc = table_case(id, p, P);
      if (k == 0) {
        rep.params = tc.params;
        rep.notes = tc.notes;
      }
      for (const auto& q : tc.operators) {
        Report child = verify_invariance(q, tc.system, vo);
        child.label = q.label;
        child.params = tc.params;
        rep.absorb(child);
      }
    }
    if (!rep.children.empty()) rep.seeds = rep.children.front().seeds;
    return rep;
  };
  std::vector<std::future<Report>> jobs;
  for (int id : ids) jobs.push_back(std::async(std::launch::async, run_case, id));
  Outcome out;
  for (auto& j : jobs) out.reports.push_back(j.get());
  out.request = {{"cases", ids}, {"params", params_text(given)}, {"P", o.P}, {"draws", o.draws},
                 {"samples", o.samples}, {"tol", o.tol}};
  return out;
}

Outcome verify_operator(const Options& o) {
  RDSystem sys;
  QOperator q;
  ParamSet params = params_of(o);
  if (auto def = explicit_definition(o)) {
    sys = *def->system;
    q = *def->op;
  } else {
    if (o.case_id < 1 || o.case_id > kCaseCount) throw UsageError("verify-operator needs --case and --op, or --d/--C/--xi/--eta");
    TableCase tc = table_case(o.case_id, params, opt_expr(o.P));
    if (o.op < 1 || o.op > static_cast<int>(tc.operators.size()))
      throw UsageError("Case " + std::to_string(o.case_id) + " has " + std::to_string(tc.operators.size()) + " operator(s)");
    sys = tc.system;
    q = tc.operators[o.op - 1];
    params = tc.params;
  }
  VerifyOptions vo = verify_options(o);
  Report top = group(q.label, params, o.tol);
  Report inv = verify_invariance(q, sys, vo);
  inv.label = "invariance criterion";
  top.absorb(inv);
  if (o.determining) {
    if (!sys.hgf) throw UsageError("--determining needs a table case system");
    Report de = check_residuals(determining_residuals(decompose(q), q.xi, *sys.hgf), vo);
    de.label = "determining equations";
    top.absorb(de);
  }
  top.seeds = inv.seeds;
  Outcome out;
  out.reports.push_back(top);
  out.extra["operator"] = {{"xi", to_string(q.xi)},
                           {"eta", {to_string(q.eta[0]), to_string(q.eta[1]), to_string(q.eta[2])}}};
  out.request = {{"system", {to_string(sys.C[0]), to_string(sys.C[1]), to_string(sys.C[2])}},
                 {"d", {sys.d[0].str(), sys.d[1].str(), sys.d[2].str()}},
                 {"operator", out.extra["operator"]},
                 {"samples", o.samples},
                 {"tol", o.tol}};
  return out;
}

ExactSolution solution_of(const Options& o) {
  if (o.id.empty()) throw UsageError("--id is required");
  SolutionId id = as_usage([&] { return parse_solution_id(o.id); });
  return exact_solution(id, params_of(o), opt_expr(o.phi1));
}

Outcome verify_solution(const Options& o) {
  ExactSolution s = solution_of(o);
  std::string name(solution_name(s.id));
  Report top = group(name, s.params, o.tol);
  Grid g = s.check;
  g.nt = g.nx = o.grid;
  Report res = pde_residual_on_grid(s, g, o.tol);
  res.label = "PDE residual " + std::to_string(o.grid) + "x" + std::to_string(o.grid);
  top.absorb(res);
  Outcome out;
  switch (s.id) {
    case SolutionId::S4_11: {
      top.absorb(property_u_plus_v(s));
      Report a = asymptotics_check(s, steady_state(s), 20, 1e-7);
      top.absorb(a);
      double rate = decay_rate(s), meas = measured_decay(s, 10);
      top.absorb(leaf("decay exponent t=10..11", std::abs(meas - rate), 1e-6, std::abs(meas - rate) <= 1e-6));
      double D = rate / s.params.at("d1").value();
      auto nn = nonneg_domain_4_11(s.params.at("k").value(), s.params.at("alpha").value(),
                                   s.params.at("beta").value(), D);
      top.notes.push_back(std::string("nonnegativity bounds ") + (nn.ok ? "hold" : "do not hold") + ": " +
                          format_double(nn.lower) + " <= beta <= " + format_double(nn.upper) + " (active: " +
                          nn.lower_bound + ", " + nn.upper_bound + ")");
      out.extra["nonnegativity"] = {{"ok", nn.ok}, {"lower", nn.lower}, {"upper", nn.upper},
                                    {"lower_bound", nn.lower_bound}, {"upper_bound", nn.upper_bound}};
      break;
    }
    case SolutionId::S4_16:
    case SolutionId::S4_18:
      if (s.id == SolutionId::S4_18 || s.params.at("d3").value() < s.params.at("d1").value()) {
        top.absorb(asymptotics_check(s, steady_state(s), 20, 1e-7));
        double rate = decay_rate(s), meas = measured_decay(s, 5);
        top.absorb(leaf("decay exponent t=5..6", std::abs(meas - rate), 1e-6, std::abs(meas - rate) <= 1e-6));
      }
      break;
    case SolutionId::S4_22:
    case SolutionId::S4_24: {
      CompiledExpr prog({s.fields[0]}, {"t", "x"});
      auto sup = [&](double t) {
        double m = 0;
        for (double x : g.xs()) {
          std::array<double, 2> in{t, x};
          std::array<double, 1> v{};
          prog.eval(in, v);
          m = std::max(m, std::abs(v[0]));
        }
        return m;
      };
      double ratio = sup(1) / sup(0), want = std::exp(growth_rate(s));
      double rel = std::abs(ratio / want - 1);
      top.absorb(leaf("sup|u| growth per unit time", rel, 1e-9, rel <= 1e-9));
      break;
    }
  }
  top.seeds.clear();
  out.reports.push_back(top);
  out.extra["fields"] = {to_string(s.fields[0]), to_string(s.fields[1]), to_string(s.fields[2])};
  if (o.surface) out.files.emplace_back(name + "_surface.csv", surface_csv(s, g));
  out.request = {{"id", name}, {"params", params_text(s.params)}, {"phi1", o.phi1}, {"grid", o.grid}, {"tol", o.tol}};
  return out;
}

Outcome reduce(const Options& o) {
  Outcome out;
  ParamSet p = params_of(o);
  auto need = [&](const char* k) {
    auto it = p.find(k);
    if (it == p.end()) throw UsageError(std::string("reduce needs parameter ") + k);
    return it->second;
  };
  out.request = {{"ansatz", o.ansatz}, {"ode", o.ode},   {"params", params_text(p)}, {"phi0", o.phi0},
                 {"dphi0", o.dphi0},   {"x_end", o.x_end}, {"h", o.h},                {"stride", o.stride},
                 {"tol", o.tol}};
  if (!o.ansatz.empty() == !o.ode.empty()) throw UsageError("reduce needs exactly one of --ansatz and --ode");
  if (!o.ansatz.empty()) {
    if (o.ansatz != "Q1" && o.ansatz != "Q2") throw UsageError("--ansatz must be Q1 or Q2");
    bool q1 = o.ansatz == "Q1";
    Number d1 = need("d1"), d2 = need("d2"), d3 = need("d3");
    Ansatz a = build_ansatz(q1 ? AnsatzId::Q1 : AnsatzId::Q2, d1, d2, d3);
    auto odes = reduced_ode_system(q1 ? ReducedId::Sys46 : ReducedId::Sys48, d1, d2, d3);
    Report top = group(o.ansatz + " reduction (" + odes.id + ")", p, o.tol);
    double ch = characteristic_residual(a, o.samples, seed_of(o));
    top.absorb(leaf("characteristic system", ch, 1e-12, ch <= 1e-12));
    double defect = reduction_defect(a, odes, a.system, o.samples, seed_of(o));
    top.absorb(leaf("reduced system closes the residual", defect, 1e-12, defect <= 1e-12));
    out.extra["ansatz"] = {to_string(a.fields[0]), to_string(a.fields[1]), to_string(a.fields[2])};
    out.extra["reduced"] = nlohmann::json::object();
    for (int i = 0; i < 3; ++i) out.extra["reduced"][odes.vars[i] + "''"] = to_string(odes.rhs[i]);
    if (!o.phi0.empty()) {
      auto y0 = doubles(o.phi0, "--phi0"), dy0 = doubles(o.dphi0.empty() ? "0,0,0" : o.dphi0, "--dphi0");
      Trajectory tr = integrate_ode(odes, y0, dy0, 0, o.x_end, o.h);
      std::vector<double> ts;
      for (int i = 0; i <= 10; ++i) ts.push_back(0.1 * i);
      Report lift = lift_and_verify(a, tr, a.system, ts, static_cast<std::size_t>(o.stride), o.tol);
      lift.label = "lifted trajectory";
      top.absorb(lift);
      out.extra["trajectory"] = {{"steps", tr.steps}, {"max_local_error", tr.max_local_error}};
      out.files.emplace_back("trajectory.csv", trajectory_csv(tr));
    }
    top.seeds = {seed_of(o)};
    out.reports.push_back(top);
    return out;
  }
  Number d1 = need("d1");
  if (o.ode == "4-20" || o.ode == "4-21") {
    auto which = o.ode == "4-20" ? PhiSolution::P4_20 : PhiSolution::P4_21;
    auto chk = phi_ode_check(which, d1);
    Report top = group("explicit phi " + o.ode, p, 1e-12);
    top.absorb(chk.residual);
    double dI = std::abs(chk.I - chk.I_expected);
    top.absorb(leaf("first integral I = " + format_double(chk.I), dI, 1e-12, dI <= 1e-12));
    out.extra["phi"] = to_string(explicit_phi(which, d1));
    out.reports.push_back(top);
    return out;
  }
  if (o.ode != "4-13") throw UsageError("--ode must be 4-13, 4-20 or 4-21");
  if (o.phi0.empty()) throw UsageError("--ode 4-13 needs --phi0 (and optionally --dphi0)");
  auto y0 = doubles(o.phi0, "--phi0"), dy0 = doubles(o.dphi0.empty() ? "0" : o.dphi0, "--dphi0");
  Trajectory tr = integrate_ode(single_ode(d1), y0, dy0, 0, o.x_end, o.h);
  double I0 = first_integral(d1.value(), y0[0], dy0[0]), drift = 0;
  for (std::size_t i = 0; i < tr.x.size(); ++i)
    drift = std::max(drift, std::abs(first_integral(d1.value(), tr.phi[i][0], tr.dphi[i][0]) - I0));
  Report top = group("single equation", p, 1e-9);
  top.absorb(leaf("first integral drift", drift, 1e-9, drift <= 1e-9));
  out.extra["first_integral"] = I0;
  out.extra["trajectory"] = {{"steps", tr.steps}, {"max_local_error", tr.max_local_error}};
  out.files.emplace_back("trajectory.csv", trajectory_csv(tr));
  out.reports.push_back(top);
  return out;
}

struct SimSetup {
  RDSystem sys;
  SimConfig cfg;
  std::optional<std::array<Expr, 3>> exact;
  ParamSet params;
};

SimSetup sim_setup(const Options& o, int default_cells) {
  SimSetup st;
  int cells = o.cells > 0 ? o.cells : default_cells;
  if (!o.id.empty()) {
    ExactSolution s = solution_of(o);
    double x0 = std::isnan(o.x0) ? s.check.x0 : o.x0, x1 = std::isnan(o.x1) ? s.check.x1 : o.x1;
    st.sys = s.system;
    st.cfg = config_from_exact(s, x0, x1, cells, o.t_end);
    st.exact = s.fields;
    st.params = s.params;
    if (!o.initial.empty()) st.cfg.initial = three_exprs(o.initial, "--initial");
  } else {
    if (o.initial.empty()) throw UsageError("simulate needs --id or --initial");
    if (auto def = explicit_definition(o)) {
      st.sys = *def->system;
    } else if (o.case_id >= 1 && o.case_id <= kCaseCount) {
      st.sys = table_case(o.case_id, params_of(o), opt_expr(o.P)).system;
    } else {
      throw UsageError("--initial needs a system: --case N or --d/--C (with --xi/--eta)");
    }
    st.params = params_of(o);
    st.cfg.x0 = std::isnan(o.x0) ? 0.0 : o.x0;
    st.cfg.x1 = std::isnan(o.x1) ? 1.0 : o.x1;
    st.cfg.n_cells = cells;
    st.cfg.t_end = o.t_end;
    st.cfg.initial = three_exprs(o.initial, "--initial");
    st.cfg.boundary = Boundary::NoFlux;
  }
  if (!o.boundary.empty()) st.cfg.boundary = as_usage([&] { return parse_boundary(o.boundary); });
  if (st.cfg.boundary == Boundary::DirichletConstant) {
    auto l = doubles(o.left.empty() ? "0,0,0" : o.left, "--left"), r = doubles(o.right.empty() ? "0,0,0" : o.right, "--right");
    if (l.size() != 3 || r.size() != 3) throw UsageError("--left/--right need three values");
    st.cfg.left = {l[0], l[1], l[2]};
    st.cfg.right = {r[0], r[1], r[2]};
  }
  st.cfg.safety = o.safety;
  st.cfg.n_snapshots = o.snapshots;
  as_usage([&] {
    st.cfg.validate();
    return 0;
  });
  return st;
}

Outcome simulate_cmd(const Options& o) {
  SimSetup st = sim_setup(o, 128);
  Outcome out;
  out.request = {{"canonical", canonical_text(st.sys, st.cfg)}};
  Report top = group("simulate", st.params, o.max_error);
  try {
    SimResult r = simulate(st.sys, st.cfg);
    out.files.emplace_back("snapshots.csv", snapshot_csv(r));
    out.extra["steps"] = r.steps;
    out.extra["dt"] = r.dt;
    out.extra["max_abs"] = r.max_abs;
    if (st.exact) {
      auto sup = error_vs_exact(r, *st.exact, Norm::Sup);
      auto l2 = error_vs_exact(r, *st.exact, Norm::L2);
      nlohmann::json series = nlohmann::json::array();
      for (std::size_t i = 0; i < sup.size(); ++i)
        series.push_back({{"t", r.snapshots[i].t}, {"sup", sup[i]}, {"l2", l2[i]}});
      out.extra["errors"] = series;
      double last = std::max({sup.back()[0], sup.back()[1], sup.back()[2]});
      top.max_abs_residual = top.max_scaled_residual = last;
      if (o.max_error >= 0) top.pass = last <= o.max_error;
    }
  } catch (const BlowUpError& e) {
    top.pass = false;
    top.notes.push_back(e.what());
    out.extra["blow_up_after"] = e.last_valid();
  }
  out.reports.push_back(top);
  return out;
}

Outcome converge_cmd(const Options& o) {
  if (o.id.empty()) throw UsageError("converge needs --id");
  SimSetup st = sim_setup(o, 32);
  ConvergenceResult cr = convergence_order(st.sys, *st.exact, st.cfg, o.levels);
  Report top = group("converge " + o.id, st.params, 0);
  double worst = 0;
  for (const auto& ord : cr.orders)
    for (int k = 0; k < 3; ++k) {
      if (cr.exact[k]) continue;
      bool ok = ord[k] >= o.order_lo && ord[k] <= o.order_hi;
      top.pass = top.pass && ok;
      worst = std::max(worst, std::abs(ord[k] - 2));
    }
  top.max_abs_residual = top.max_scaled_residual = worst;
  top.notes.push_back("orders must lie in [" + format_double(o.order_lo) + ", " + format_double(o.order_hi) + "]");
  nlohmann::json orders = nlohmann::json::array();
  for (const auto& ord : cr.orders) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < 3; ++k) row.push_back(cr.exact[k] ? nlohmann::json("exact") : nlohmann::json(ord[k]));
    orders.push_back(row);
  }
  Outcome out;
  out.extra = {{"n_cells", cr.n_cells}, {"errors", cr.errors}, {"orders", orders}};
  out.request = {{"canonical", canonical_text(st.sys, st.cfg)}, {"levels", o.levels}};
  out.reports.push_back(top);
  return out;
}

Outcome fig1(const Options& o) {
  std::vector<std::string> panels;
  if (o.panel == "both")
    panels = {"left", "right"};
  else if (o.panel == "left" || o.panel == "right")
    panels = {o.panel};
  else
    throw UsageError("--panel must be left, right or both");
  if (!(o.t_max > 0)) throw UsageError("--t-max must be positive");
  Outcome out;
  for (const auto& panel : panels) {
    ParamSet p{{"d1", 1}, {"d2", 2}, {"d3", Number::ratio(1, 2)}, {"k", Number::ratio(1, 4)},
               {"beta", Number::ratio(3, 5)}, {"alpha", panel == "left" ? Number::ratio(1, 8) : Number(0)}};
    ExactSolution s = exact_solution(SolutionId::S4_11, p);
    Grid g{0, o.t_max, 101, s.check.x0, s.check.x1, 101};
    std::string csv = "fig1_" + panel + ".csv";
    out.files.emplace_back(csv, surface_csv(s, g));
    out.files.emplace_back("fig1_" + panel + ".gp",
                           surface_plot_script(csv, "sol_4_11, alpha = " + p["alpha"].str(), 101, 101));
    Report top = group("fig1 " + panel, s.params, 1e-12);
    auto at = [&](double t, double x) {
      Binding b{{"t", t}, {"x", x}};
      return std::array{evaluate(s.fields[0], b), evaluate(s.fields[1], b), evaluate(s.fields[2], b)};
    };
    std::array<double, 3> want = panel == "right" ? std::array{0.35, 0.65, 0.25} : std::array{0.6, 0.4, 0.0};
    double x = panel == "right" ? g.xs()[50] : 0.0;
    auto got = at(0, x);
    double dev = 0;
    for (int k = 0; k < 3; ++k) dev = std::max(dev, std::abs(got[k] - want[k]));
    top.absorb(leaf(panel == "right" ? "row (0, pi/2)" : "row (0, 0)", dev, 1e-12, dev <= 1e-12));
    if (o.t_max >= 20) {
      double wmax = 0;
      for (double xv : g.xs()) wmax = std::max(wmax, std::abs(at(20, xv)[2]));
      top.absorb(leaf("w at t = 20", wmax, 1e-7, wmax <= 1e-7));
    }
    out.reports.push_back(top);
  }
  out.request = {{"panel", o.panel}, {"t_max", o.t_max}};
  return out;
}

Outcome list_cases(const Options& o) {
  std::ostringstream os;
  std::mt19937_64 rng(seed_of(o));
  for (int id = 1; id <= kCaseCount; ++id) {
    TableCase tc = table_case(id, random_case_params(id, rng));
    os << "Case " << id << ": " << tc.operators.size() << " operator(s)";
    for (const auto& q : tc.operators) os << ' ' << q.label.substr(q.label.rfind(' ') + 1);
    os << "; restrictions:";
    if (tc.restrictions.empty()) os << " none";
    for (const auto& r : tc.restrictions) os << ' ' << r.text << ';';
    os << '\n';
  }
  Outcome out;
  out.listing = os.str();
  return out;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--config", o.config, "JSON or TOML file with option defaults");
  sub->add_option("--params", o.params, "name=value list, values may be p/q");
  sub->add_option("--seed", o.seed, "sampling seed (default RDSYM_SEED or built-in)");
  sub->add_option("--tol", o.tol, "scaled residual tolerance");
}

void add_definition(CLI::App* sub, Options& o) {
  sub->add_option("--d", o.d, "diffusivities d1,d2,d3");
  sub->add_option("--C", o.C, "reaction terms separated by ';'");
  sub->add_option("--xi", o.xi, "operator coefficient xi");
  sub->add_option("--eta", o.eta, "operator coefficients separated by ';'");
  sub->add_option("--P", o.P, "P(t,x) for the rows that use it");
}

void add_solution(CLI::App* sub, Options& o) {
  sub->add_option("--id", o.id, "solution id, e.g. 4-11");
  sub->add_option("--phi1", o.phi1, "phi1(x) for sol_4_16");
}

void add_sim(CLI::App* sub, Options& o) {
  sub->add_option("--x0", o.x0);
  sub->add_option("--x1", o.x1);
  sub->add_option("--cells", o.cells);
  sub->add_option("--t-end", o.t_end);
  sub->add_option("--boundary", o.boundary, "dirichlet-from-exact, dirichlet-constant or no-flux");
  sub->add_option("--safety", o.safety);
  sub->add_option("--initial", o.initial, "u;v;w at t = 0");
  sub->add_option("--left", o.left);
  sub->add_option("--right", o.right);
  sub->add_option("--case", o.case_id);
}

struct App {
  CLI::App app{"Conditional symmetry and exact solution checks for the three-component HGF system", "rdsym"};
  std::map<std::string, CLI::App*> subs;

  explicit App(Options& o) {
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    auto* vc = subs["verify-case"] = app.add_subcommand("verify-case", "check the operators of table rows");
    add_common(vc, o);
    vc->add_option("--case", o.case_id);
    vc->add_flag("--all", o.all, "all 13 rows with random admissible parameters");
    vc->add_option("--draws", o.draws, "random parameter draws per row");
    vc->add_option("--samples", o.samples);
    vc->add_option("--P", o.P);

    auto* vo = subs["verify-operator"] = app.add_subcommand("verify-operator", "check one operator");
    add_common(vo, o);
    add_definition(vo, o);
    vo->add_option("--case", o.case_id);
    vo->add_option("--op", o.op, "operator index within the row, from 1");
    vo->add_option("--samples", o.samples);
    vo->add_flag("--determining", o.determining, "also evaluate the determining equations");

    auto* vs = subs["verify-solution"] = app.add_subcommand("verify-solution", "check an exact solution");
    add_common(vs, o);
    add_solution(vs, o);
    vs->add_option("--grid", o.grid, "grid points per axis");
    vs->add_flag("--surface", o.surface, "export the t,x,u,v,w surface");

    auto* rd = subs["reduce"] = app.add_subcommand("reduce", "ansatz, reduced equations and trajectories");
    add_common(rd, o);
    rd->add_option("--ansatz", o.ansatz, "Q1 or Q2");
    rd->add_option("--ode", o.ode, "4-13, 4-20 or 4-21");
    rd->add_option("--phi0", o.phi0);
    rd->add_option("--dphi0", o.dphi0);
    rd->add_option("--x-end", o.x_end);
    rd->add_option("--step", o.h, "integration step");
    rd->add_option("--stride", o.stride, "trajectory points per verification spacing");
    rd->add_option("--samples", o.samples);

    auto* sm = subs["simulate"] = app.add_subcommand("simulate", "method-of-lines run");
    add_common(sm, o);
    add_solution(sm, o);
    add_definition(sm, o);
    add_sim(sm, o);
    sm->add_option("--snapshots", o.snapshots);
    sm->add_option("--max-error", o.max_error, "fail when the final sup error exceeds this");

    auto* cv = subs["converge"] = app.add_subcommand("converge", "observed order under refinement");
    add_common(cv, o);
    add_solution(cv, o);
    add_sim(cv, o);
    cv->add_option("--levels", o.levels);
    cv->add_option("--order-lo", o.order_lo);
    cv->add_option("--order-hi", o.order_hi);

    auto* lc = subs["list-cases"] = app.add_subcommand("list-cases", "rows, operators and restrictions");
    lc->add_option("--seed", o.seed);

    auto* f1 = subs["fig1"] = app.add_subcommand("fig1", "surface data and gnuplot script for sol_4_11");
    f1->add_option("--out", o.out);
    f1->add_option("--panel", o.panel, "left, right or both");
    f1->add_option("--t-max", o.t_max);
  }

  std::string verb() const {
    for (const auto& [name, sub] : subs)
      if (sub->parsed()) return name;
    return {};
  }
};

void parse(App& a, std::vector<std::string> args) {
  std::reverse(args.begin(), args.end());
  a.app.parse(args);
}

// Config keys become options unless given on the command line; params merge
// with command-line values winning.
std::vector<std::string> config_args(const nlohmann::json& cfg, CLI::App* sub, const std::string& cli_params) {
  if (!cfg.is_object()) throw UsageError("config must be a table/object");
  std::vector<std::string> extra;
  std::string params;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "params") {
      if (!value.is_object()) throw UsageError("config 'params' must be a table");
      for (const auto& [k, v] : value.items())
        params += k + "=" + as_usage([&] { return number_from_json(v).str(); }) + ",";
      continue;
    }
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (flag == "id" && value.is_number()) throw UsageError("config 'id' must be a string such as \"4-11\"");
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option("--" + flag);
    } catch (const CLI::OptionNotFound&) {
      throw UsageError("config key '" + key + "' is not an option of " + sub->get_name());
    }
    if (opt->count() > 0) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back("--" + flag);
      continue;
    }
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i) text += ';';
        text += value[i].is_string() ? value[i].get<std::string>() : value[i].dump();
      }
    } else if (value.is_number()) {
      text = value.dump();
    } else {
      throw UsageError("config key '" + key + "' has an unsupported value");
    }
    extra.push_back("--" + flag);
    extra.push_back(text);
  }
  if (!params.empty()) {
    extra.push_back("--params");
    extra.push_back(params + cli_params);
  }
  return extra;
}

nlohmann::json manifest(const std::string& verb, const std::vector<std::string>& args, const Options& o,
                        const Outcome& out, int code) {
  nlohmann::json m;
  m["tool"] = "rdsym";
  m["version"] = kVersion;
  m["command"] = verb;
  m["argv"] = args;
  m["seed"] = seed_of(o);
  const char* env = std::getenv("RDSYM_SEED");
  m["RDSYM_SEED"] = env ? nlohmann::json(env) : nlohmann::json(nullptr);
  m["tol"] = o.tol;
  m["params"] = nlohmann::json::object();
  for (const auto& r : out.reports)
    for (const auto& [k, v] : r.params) m["params"][k] = v.str();
  m["request"] = out.request;
  m["config_hash"] = hex64(fnv1a(out.request.dump()));
  m["artifacts"] = nlohmann::json::array();
  for (const auto& [name, content] : out.files) m["artifacts"].push_back({{"file", name}, {"fnv1a", hex64(fnv1a(content))}});
  m["exit"] = code;
  return m;
}

int execute(const std::vector<std::string>& args, std::ostream& os) {
  Options o;
  App first(o);
  parse(first, args);
  std::string verb = first.verb();
  std::vector<std::string> full = args;
  if (!o.config.empty()) {
    auto cfg = as_usage([&] { return load_config(o.config); });
    auto extra = config_args(cfg, first.subs.at(verb), o.params);
    if (!extra.empty()) {
      // Drop a command-line --params that the merged value replaces.
      if (std::find(extra.begin(), extra.end(), "--params") != extra.end())
        for (std::size_t i = 0; i + 1 < full.size(); ++i)
          if (full[i] == "--params") full.erase(full.begin() + i, full.begin() + i + 2), --i;
      full.insert(full.end(), extra.begin(), extra.end());
      o = Options{};
      App second(o);
      parse(second, full);
    }
  }

  Outcome out;
  if (verb == "verify-case") out = verify_case(o);
  else if (verb == "verify-operator") out = verify_operator(o);
  else if (verb == "verify-solution") out = verify_solution(o);
  else if (verb == "reduce") out = reduce(o);
  else if (verb == "simulate") out = simulate_cmd(o);
  else if (verb == "converge") out = converge_cmd(o);
  else if (verb == "fig1") out = fig1(o);
  else out = list_cases(o);

  if (!out.listing.empty()) {
    os << out.listing;
    return 0;
  }
  bool pass = std::all_of(out.reports.begin(), out.reports.end(), [](const Report& r) { return r.pass; });
  int code = pass ? 0 : 1;
  std::filesystem::path dir(o.out);
  for (const auto& [name, content] : out.files) write_atomic(dir / name, content);
  nlohmann::json rep;
  rep["command"] = verb;
  rep["pass"] = pass;
  rep["reports"] = nlohmann::json::array();
  for (const auto& r : out.reports) rep["reports"].push_back(report_to_json(r));
  rep["extra"] = out.extra;
  write_atomic(dir / "report.json", rep.dump(2) + "\n");
  write_atomic(dir / "manifest.json", manifest(verb, args, o, out, code).dump(2) + "\n");
  os << render_reports(out.reports);
  os << "wrote " << (dir / "report.json").string() << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return execute(args, out);
  } catch (const CLI::CallForHelp&) {
    Options o;
    App a(o);
    for (const auto& word : args)
      if (auto* sub = a.app.get_subcommand_no_throw(word)) {
        out << sub->help();
        return 0;
      }
    out << a.app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const RestrictionError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const rdsym::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace rdsym::cli
