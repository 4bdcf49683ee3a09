#include "rdsym/model.hpp"

#include "rdsym/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace rdsym {

namespace {

Expr c(const Number& n) { return Expr(n); }

bool positive(const Number& n) { return !n.is_zero() && !n.is_negative(); }

const Expr kT = sym("t");
const Expr kX = sym("x");
const Expr kU = sym("u");
const Expr kV = sym("v");
const Expr kW = sym("w");

}  // namespace

void HGFParams::validate() const {
  if (!positive(d1) || !positive(d2) || !positive(d3))
    throw RestrictionError("diffusivities must be positive (d1=" + d1.str() + ", d2=" + d2.str() +
                           ", d3=" + d3.str() + ")");
  if (!positive(a4)) throw RestrictionError("a4 must be positive (got " + a4.str() + ")");
}

ParamSet HGFParams::as_params() const {
  return {{"d1", d1}, {"d2", d2}, {"d3", d3}, {"a1", a1}, {"a2", a2},
          {"a3", a3}, {"a4", a4}, {"a5", a5}};
}

void RDSystem::validate() const {
  for (int k = 0; k < 3; ++k) {
    if (!positive(d[k])) throw RestrictionError("diffusivity d" + std::to_string(k + 1) + " must be positive");
    for (const auto& s : free_symbols(C[k])) {
      if (s != "u" && s != "v" && s != "w" && s != "t" && s != "x")
        throw RestrictionError("reaction term C" + std::to_string(k + 1) + " has unbound symbol '" + s + "'");
    }
  }
}

RDSystem hgf_system(const HGFParams& p) {
  p.validate();
  RDSystem sys;
  sys.d = {p.d1, p.d2, p.d3};
  Expr logistic = 1 - kU - c(p.a1) * kV;
  sys.C[0] = kU * logistic;
  sys.C[1] = c(p.a2) * kV * logistic + kU * kW + c(p.a1) * kV * kW;
  sys.C[2] = c(p.a3) * kW * (1 - kW) - c(p.a4) * kU * kW - c(p.a5) * kV * kW;
  sys.hgf = p;
  sys.label = "HGF";
  return sys;
}

Expr e_factor(const Number& delta1, const Number& delta2, const Number& mu) {
  Number k = mu * (delta2 - delta1) / (Number(2) * delta1 * delta2);
  Number s = mu * (delta2 - delta1) / (Number(2) * delta1);
  return exp(c(k) * (kX + c(s) * kT));
}

void check_heat_solution(const Expr& P, const Number& d2) {
  for (const auto& s : free_symbols(P))
    if (s != "t" && s != "x") throw RestrictionError("P may depend on t and x only (found '" + s + "')");
  if (P.is_zero()) return;
  Expr Pt = differentiate(P, "t");
  Expr Pxx = differentiate(differentiate(P, "x"), "x");
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> tdist(0.0, 1.0), xdist(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    Binding b{{"t", tdist(rng)}, {"x", xdist(rng)}};
    double a = evaluate(Pt, b);
    double bxx = d2.value() * evaluate(Pxx, b);
    if (std::abs(a - bxx) > 1e-9 * (1 + std::abs(a) + std::abs(bxx)))
      throw RestrictionError("P does not solve P_t = d2·P_xx (residual " + std::to_string(a - bxx) + ")");
  }
}

namespace {

class CaseBuilder {
 public:
  CaseBuilder(int id, const ParamSet& in) : id_(id), in_(in) { out_.id = id; }

  std::string prefix() const { return "Case " + std::to_string(id_); }

  Number required(const std::string& name) {
    auto it = in_.find(name);
    if (it == in_.end()) throw RestrictionError(prefix() + ": missing required parameter " + name);
    out_.params[name] = it->second;
    return it->second;
  }

  Number optional(const std::string& name, const Number& fallback = Number(1)) {
    auto it = in_.find(name);
    Number v = it == in_.end() ? fallback : it->second;
    out_.params[name] = v;
    return v;
  }

  // A coefficient fixed by the row; a conflicting user value is rejected.
  Number fixed(const std::string& name, const Number& value, const std::string& formula) {
    if (auto it = in_.find(name); it != in_.end() && !numerically_equal(it->second, value))
      throw RestrictionError(prefix() + " fixes " + name + " = " + formula + " = " + value.str() +
                             " (got " + it->second.str() + ")");
    out_.params[name] = value;
    return value;
  }

  // Diffusivity shared by two slots, given either as `d` or as equal pair.
  Number shared(const std::string& first, const std::string& second) {
    if (auto it = in_.find("d"); it != in_.end()) {
      for (const auto& n : {first, second})
        if (auto jt = in_.find(n); jt != in_.end() && !numerically_equal(jt->second, it->second))
          throw RestrictionError(prefix() + " requires " + first + " = " + second + " = d");
      out_.params["d"] = it->second;
      out_.params[first] = it->second;
      out_.params[second] = it->second;
      return it->second;
    }
    auto a = in_.find(first);
    auto b = in_.find(second);
    if (a == in_.end() || b == in_.end())
      throw RestrictionError(prefix() + ": missing required parameter d (" + first + " = " + second + " = d)");
    if (!numerically_equal(a->second, b->second))
      throw RestrictionError(prefix() + " requires " + first + " = " + second);
    out_.params["d"] = a->second;
    out_.params[first] = a->second;
    out_.params[second] = a->second;
    return a->second;
  }

  void require_ne(const Number& lhs, const Number& rhs, const std::string& text) {
    Restriction r{text, lhs, rhs};
    if (!r.holds()) throw RestrictionError(prefix() + " requires " + text);
    out_.restrictions.push_back(std::move(r));
  }

  void positive_d() {
    for (const char* n : {"d1", "d2", "d3"})
      if (!positive(out_.params.at(n)))
        throw RestrictionError(prefix() + ": diffusivity " + std::string(n) + " must be positive");
  }

  void add(std::string label, Expr xi, Expr eta1, Expr eta2, Expr eta3) {
    out_.operators.push_back(QOperator{std::move(xi), {std::move(eta1), std::move(eta2), std::move(eta3)},
                                       prefix() + " " + std::move(label)});
  }

  TableCase& out() { return out_; }

 private:
  int id_;
  const ParamSet& in_;
  TableCase out_;
};

void finish_system(CaseBuilder& b) {
  auto& p = b.out().params;
  HGFParams h{p.at("d1"), p.at("d2"), p.at("d3"), p.at("a1"), p.at("a2"), p.at("a3"), p.at("a4"), p.at("a5")};
  if (!positive(h.a4)) throw RestrictionError(b.prefix() + ": a4 must be positive (got " + h.a4.str() + ")");
  b.out().system = hgf_system(h);
  b.out().system.label = b.prefix();
}

// a2·P = 0 side condition of the rows that carry P.
void gate_P(CaseBuilder& b, const Number& a2, const Expr& P) {
  if (!a2.is_zero() && !P.is_zero())
    throw RestrictionError(b.prefix() + " requires a2·P = 0 (a2 = " + a2.str() + ")");
  if (a2.is_zero())
    b.out().notes.push_back("a2 = 0 branch: the row's reaction terms degenerate and P is unconstrained");
}

}  // namespace

TableCase table_case(int id, const ParamSet& params, std::optional<Expr> P_in) {
  if (id < 1 || id > kCaseCount) throw RestrictionError("unknown case " + std::to_string(id) + " (expected 1..13)");
  CaseBuilder b(id, params);
  const Expr t = kT, u = kU, v = kV, w = kW;
  const Number zero(0), one(1);
  Expr P = P_in.value_or(Expr(0));
  bool carries_P = id == 6 || id == 11 || id == 13;
  if (!P.is_zero() && !carries_P) throw RestrictionError(b.prefix() + " has no free function P");

  Number d1, d2, d3;
  if (id == 4 || id == 5) {
    d1 = d2 = b.shared("d1", "d2");
    d3 = b.required("d3");
  } else if (id == 12 || id == 13) {
    d1 = b.required("d1");
    d2 = d3 = b.shared("d2", "d3");
  } else {
    d1 = b.required("d1");
    d2 = b.required("d2");
    d3 = b.required("d3");
  }
  b.positive_d();
  if (carries_P) check_heat_solution(P, d2);

  auto mu = [&] { return b.optional("mu"); };
  auto alpha = [&](int i) { return b.optional("alpha" + std::to_string(i)); };

  switch (id) {
    case 1: {
      b.fixed("a1", zero, "0");
      b.fixed("a5", zero, "0");
      b.fixed("a2", d2 / d1, "d2/d1");
      Number a3 = b.optional("a3");
      b.optional("a4");
      b.require_ne(a3, zero, "a3 ≠ 0");
      Number m = mu(), al1 = alpha(1), al2 = alpha(2);
      Expr E = e_factor(d1, d2, m);
      Expr growth = exp(c(d2 / d1) * t);
      Expr q2 = (c(al1) + c(al2) * growth) * E;
      Expr p2 = -c(al2) * growth * E;
      b.add("Q", c(m), 0, q2 * u + p2, 0);
      break;
    }
    case 2: {
      Number a1 = b.optional("a1");
      b.require_ne(a1, zero, "a1 ≠ 0");
      b.require_ne(d1, d2, "d1 ≠ d2");
      b.require_ne(d1, d3, "d1 ≠ d3");
      b.fixed("a3", zero, "0");
      b.fixed("a2", (d2 - d3) / (d1 - d3), "(d2-d3)/(d1-d3)");
      b.fixed("a4", d3 / d1, "d3/d1");
      b.fixed("a5", a1 * d3 / d1, "a1·d3/d1");
      Number k1 = d1 / (d1 - d2);
      b.add("Q1", 0, -c(a1 * k1) * w, c(k1) * w, -c(d3 / (d1 - d3)) * w);
      Number k2 = d3 / (a1 * (d1 - d3));
      Number k3 = (d1 - d2) * d3 * d3 / (a1 * d1 * (d1 - d3) * (d1 - d3));
      b.add("Q2", 0, -c(a1 * k2) * u, c(k2) * u, -c(k3) * u);
      break;
    }
    case 3: {
      Number a1 = b.optional("a1");
      Number a4 = b.optional("a4");
      b.require_ne(a1, zero, "a1 ≠ 0");
      b.require_ne(d1, d2, "d1 ≠ d2");
      b.require_ne(a4 * d1, d3, "a4·d1 ≠ d3");
      b.fixed("a3", zero, "0");
      b.fixed("a2", d2 / d1, "d2/d1");
      b.fixed("a5", a1 * a4, "a1·a4");
      Expr F = c(d2 / a1) * (u - 1) + c(d2) * v + c(d1 * d3 / (a4 * d1 - d3)) * w;
      Expr G = F / c(d1 - d2);
      b.add("Q", 0, c(a1) * G, -G, 0);
      break;
    }
    case 4: {
      Number a1 = b.optional("a1");
      Number a4 = b.optional("a4");
      b.require_ne(a1, zero, "a1 ≠ 0");
      b.require_ne(a4 * d1, d3, "a4·d ≠ d3");
      b.fixed("a2", one, "1");
      b.fixed("a3", zero, "0");
      b.fixed("a5", a1 * a4, "a1·a4");
      Number al1 = alpha(1), al2 = alpha(2);
      Number g = a4 * d1 - d3;
      Expr et = exp(t);
      Expr G = (c(al1) + c(al2 * g) * et) * u + c(al2 * a1 * g) * et * v + c(al2 * a1 * d3) * et * w -
               c(al2 * g) * et;
      b.add("Q", 0, c(a1) * G, -G, 0);
      break;
    }
    case 5: {
      Number a1 = b.optional("a1");
      b.require_ne(a1, zero, "a1 ≠ 0");
      b.fixed("a2", one, "1");
      b.fixed("a3", zero, "0");
      b.fixed("a4", d3 / d1, "d3/d");
      b.fixed("a5", a1 * d3 / d1, "a1·d3/d");
      Number m = mu(), al1 = alpha(1), al2 = alpha(2);
      Expr G = c(al1) * u + c(al2) * exp(t) * e_factor(d3, d1, m) * w;
      b.add("Q", c(m), c(a1) * G, -G, 0);
      break;
    }
    case 6: {
      b.fixed("a1", zero, "0");
      b.fixed("a3", zero, "0");
      b.fixed("a5", zero, "0");
      Number a2 = b.optional("a2");
      Number a4 = b.optional("a4");
      b.require_ne(a4 * d2, a2 * d3, "a4·d2 ≠ a2·d3");
      b.require_ne(a2 * d1, d2, "a2·d1 ≠ d2");
      b.require_ne(d2, d3, "d2 ≠ d3");
      gate_P(b, a2, P);
      Number al1 = alpha(1);
      Expr s = c(one / (d2 - d3));
      Expr eta2 = s * (c(al1) * v + c(d3 * (a2 * d3 + al1) / (a4 * d2 - a2 * d3)) * w + P);
      Expr eta3 = -s * c(a2 * d3) * w;
      b.add("Q", 0, 0, eta2, eta3);
      break;
    }
    case 7: {
      b.fixed("a1", zero, "0");
      b.fixed("a3", zero, "0");
      b.fixed("a5", zero, "0");
      Number a4 = b.optional("a4");
      b.fixed("a2", a4 * d2 / d3, "a4·d2/d3");
      Number m = mu(), al1 = alpha(1), al2 = alpha(2);
      Expr h2 = c(al2) * exp(c((a4 * d2 + al1 * (d2 - d3)) / d3) * t) * e_factor(d3, d2, m);
      b.add("Q", c(m), 0, c(al1) * v + h2 * w, c(al1) * w);
      break;
    }
    case 8: {
      b.fixed("a1", zero, "0");
      b.fixed("a3", zero, "0");
      b.fixed("a5", zero, "0");
      b.fixed("a2", d2 / d1, "d2/d1");
      Number a4 = b.optional("a4");
      b.require_ne(a4 * d1, d3, "a4·d1 ≠ d3");
      Number m = mu(), al1 = alpha(1), al2 = alpha(2), al3 = alpha(3);
      Expr E = e_factor(d1, d2, m);
      Expr growth = exp(c(d2 / d1) * t);
      Expr q2 = (c(al2) + c(al3) * growth) * E;
      Expr p2 = -c(al3) * growth * E;
      b.add("Q1", c(m), 0, c(al1) * v + q2 * u + p2, c(al1) * w);
      if (!numerically_equal(d2, d3)) {
        Expr s = c(one / (d2 - d3));
        Expr eta2 = s * (c(al1) * v + c(d3 * (d2 * d3 + d1 * al1) / (d2 * (a4 * d1 - d3))) * w + c(al2) * u +
                         c(al3) * growth * (u - 1));
        Expr eta3 = -s * c(d2 * d3 / d1) * w;
        b.add("Q2", 0, 0, eta2, eta3);
      } else {
        b.out().notes.push_back("second operator omitted: its time coefficient d2 - d3 vanishes");
      }
      break;
    }
    case 9: {
      b.fixed("a1", zero, "0");
      b.fixed("a3", zero, "0");
      b.fixed("a5", zero, "0");
      b.fixed("a2", d2 / d1, "d2/d1");
      b.fixed("a4", d3 / d1, "d3/d1");
      Number m = mu(), al1 = alpha(1), al2 = alpha(2), al3 = alpha(3), al4 = alpha(4);
      Expr E = e_factor(d1, d2, m);
      Expr growth = exp(c(d2 / d1) * t);
      Expr q2 = (c(al2) + c(al3) * growth) * E;
      Expr p2 = -c(al3) * growth * E;
      Expr h2 = c(al4) * exp(c((d2 * d3 + al1 * d1 * (d2 - d3)) / (d1 * d3)) * t) * e_factor(d3, d2, m);
      b.add("Q", c(m), 0, c(al1) * v + q2 * u + h2 * w + p2, c(al1) * w);
      break;
    }
    case 10: {
      b.fixed("a1", zero, "0");
      b.fixed("a3", zero, "0");
      b.fixed("a5", zero, "0");
      b.require_ne(d2, d3, "d2 ≠ d3");
      b.fixed("a2", (d2 - d3) / d1, "(d2-d3)/d1");
      b.fixed("a4", d3 / d1, "d3/d1");
      Number al1 = alpha(1), al2 = alpha(2), al3 = alpha(3);
      Expr q3 = c(al3) * exp(-c(d3 / d1) * t) - c(al2);
      Expr q2 = -c(d1 / d3) * q3;
      b.add("Q1", 0, 0, c(al1) * v + q2 * u, c(al1) * w + q3 * u + c(al2));
      b.add("Q2", 0, 0, c(al1) * v + c((al1 * d1 + d3) / d3) * w, -c(d3 / d1) * w);
      break;
    }
    case 11: {
      b.fixed("a1", zero, "0");
      b.fixed("a3", zero, "0");
      b.fixed("a5", zero, "0");
      b.fixed("a4", d3 / d1, "d3/d1");
      Number a2 = b.optional("a2");
      b.require_ne(a2 * d1, d2, "a2·d1 ≠ d2");
      b.require_ne(a2 * d1, d2 - d3, "a2·d1 ≠ d2 - d3");
      b.require_ne(d2, d3, "d2 ≠ d3");
      gate_P(b, a2, P);
      Number al1 = alpha(1), al2 = alpha(2);
      Number g = a2 * d1 - d2;
      b.add("Q1", 0, 0, c(al1) * v - c(d1 * al2 / g) * u + P, c(al2) * (1 - u) + c(al1) * w);
      Expr s = c(one / (d2 - d3));
      b.add("Q2", 0, 0, s * (c(al1) * v + c(d1 * (a2 * d3 + al1) / (d2 - a2 * d1)) * w + P),
            -s * c(a2 * d3) * w);
      Expr decay = exp(-c(d3 / d1) * t);
      Expr eta2 = -c(d3 / d1) * v + c(al1 * d1 / g) * decay * u + c(d3 * (g + d3) / (g * (d3 - d2))) * w + P;
      Expr eta3 = c(a2 * d3 / (d3 - d2)) * w + c(al1) * decay * u;
      b.add("Q3", 0, 0, eta2, eta3);
      break;
    }
    case 12: {
      b.fixed("a1", zero, "0");
      b.fixed("a3", zero, "0");
      b.fixed("a5", zero, "0");
      b.fixed("a4", d2 / d1, "d/d1");
      Number a2 = b.optional("a2");
      b.require_ne(a2, zero, "a2 ≠ 0");
      Number m = mu(), al1 = alpha(1), al2 = alpha(2);
      Number d = d2;
      Expr q2 = c(al2) * e_factor(d1, d, m);
      Expr q3 = c((a2 * d1 - d) / d1) * q2;
      Expr p3 = c((d - a2 * d1) / d1) * q2;
      b.add("Q", c(m), 0, c(al1) * v + q2 * u, q3 * u + c(al1) * w + p3);
      break;
    }
    case 13: {
      b.fixed("a1", zero, "0");
      b.fixed("a2", zero, "0");
      b.fixed("a3", zero, "0");
      b.fixed("a5", zero, "0");
      b.fixed("a4", d2 / d1, "d/d1");
      Number m = mu(), al1 = alpha(1), al2 = alpha(2), al3 = alpha(3), al4 = alpha(4);
      Number d = d2;
      Expr E = e_factor(d1, d, m);
      Number h2 = d1 * (al1 - al2) / d;
      Expr q2 = (c(al3) * exp(-c(d / d1) * t) + c(al4)) * E;
      Expr q3 = -c(d / d1) * q2;
      Expr p3 = c(al4 * d / d1) * E;
      b.add("Q", c(m), 0, c(al1) * v + q2 * u + c(h2) * w + P, q3 * u + c(al2) * w + p3);
      break;
    }
  }
  finish_system(b);
  b.out().P = P;
  return std::move(b.out());
}

namespace {

// Reaction coefficients each row leaves free; the rest are fixed by the row.
std::vector<std::string> free_coefficients(int id) {
  switch (id) {
    case 1: return {"a3", "a4"};
    case 2: return {"a1"};
    case 3: return {"a1", "a4"};
    case 4: return {"a1", "a4"};
    case 5: return {"a1"};
    case 6: return {"a2", "a4"};
    case 7: return {"a4"};
    case 8: return {"a4"};
    case 11: return {"a2"};
    case 12: return {"a2"};
    default: return {};
  }
}

}  // namespace

ParamSet random_case_params(int id, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dpos(0.3, 2.0), coef(0.3, 2.0), amp(-1.0, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    ParamSet p;
    double d1 = dpos(rng), d2 = dpos(rng), d3 = dpos(rng);
    if (id == 4 || id == 5) {
      p["d"] = Number(d1);
      p["d3"] = Number(d3);
    } else if (id == 12 || id == 13) {
      p["d1"] = Number(d1);
      p["d"] = Number(d2);
    } else {
      p["d1"] = Number(d1);
      p["d2"] = Number(d2);
      p["d3"] = Number(d3);
    }
    for (const auto& a : free_coefficients(id)) p[a] = Number(coef(rng));
    for (const char* a : {"alpha1", "alpha2", "alpha3", "alpha4", "mu"}) p[a] = Number(amp(rng));
    TableCase tc;
    try {
      tc = table_case(id, p);
    } catch (const RestrictionError&) {
      continue;
    }
    bool ok = true;
    for (const auto& res : tc.restrictions) {
      double a = res.lhs.value(), b = res.rhs.value();
      if (std::abs(a - b) < 0.15 * std::max({1.0, std::abs(a), std::abs(b)})) ok = false;
    }
    const auto& d = tc.system.d;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        double gap = std::abs(d[i].value() - d[j].value());
        if (gap > 0 && gap < 0.15) ok = false;
      }
    if (ok) return p;
  }
  throw Error("could not draw admissible parameters for case " + std::to_string(id));
}

bool is_field_times_affine(const Expr& C, const std::string& field, double tol, double* max_residual) {
  Expr g = C / sym(field);
  std::mt19937_64 rng(977);
  std::uniform_real_distribution<double> dist(0.1, 1.0);
  constexpr int kFit = 16;
  auto sample = [&](double t_value) {
    Binding b{{"u", dist(rng)}, {"v", dist(rng)}, {"w", dist(rng)}, {"t", t_value}, {"x", dist(rng)}};
    return b;
  };
  Eigen::MatrixXd A(kFit, 4);
  Eigen::VectorXd y(kFit);
  for (int i = 0; i < kFit; ++i) {
    Binding b = sample(0.3);
    A.row(i) << 1.0, b["u"], b["v"], b["w"];
    y(i) = evaluate(g, b);
  }
  Eigen::VectorXd coef = A.colPivHouseholderQr().solve(y);
  double worst = 0.0;
  for (int i = 0; i < 32; ++i) {
    // Half the checks move t and x as well, so explicit dependence shows up.
    Binding b = sample(i % 2 == 0 ? 0.3 : 0.05 + 0.9 * dist(rng));
    double fit = coef(0) + coef(1) * b["u"] + coef(2) * b["v"] + coef(3) * b["w"];
    double val = evaluate(g, b);
    worst = std::max(worst, std::abs(val - fit) / std::max(1.0, std::abs(val)));
  }
  if (max_residual) *max_residual = worst;
  return worst <= tol;
}

DlvResult transform_to_dlv(const RDSystem& sys, DlvTransform which, double tol) {
  if (!sys.hgf) throw RestrictionError("transform needs an HGF system with known coefficients");
  const HGFParams& p = *sys.hgf;
  DlvResult out;
  const Expr u = kU, v = kV, w = kW;
  if (which == DlvTransform::UPlusA1V) {
    if (!numerically_equal(p.d1, p.d2)) throw RestrictionError("u + a1·v → v requires d1 = d2");
    if (!numerically_equal(p.a2, Number(1))) throw RestrictionError("u + a1·v → v requires a2 = 1");
    if (p.a1.is_zero()) throw RestrictionError("u + a1·v → v requires a1 ≠ 0");
    // New v is V = u + a1 v, so the old v is (V - u)/a1.
    SubstitutionRules back{{"v", (v - u) / c(p.a1)}};
    out.system.C[0] = substitute(sys.C[0], back);
    out.system.C[1] = substitute(sys.C[0] + c(p.a1) * sys.C[1], back);
    out.system.C[2] = substitute(sys.C[2], back);
    out.system.d = sys.d;
    out.system.label = sys.label + " (u + a1·v → v)";
  } else {
    if (!numerically_equal(p.d1, p.d2)) throw RestrictionError("transformation requires d1 = d2 = d");
    if (!numerically_equal(p.a2, Number(1)) || !p.a3.is_zero() || !numerically_equal(p.a5, p.a1 * p.a4))
      throw RestrictionError("transformation requires the rows with a2 = 1, a3 = 0, a5 = a1·a4");
    if (p.a1.is_zero()) throw RestrictionError("transformation requires a1 ≠ 0");
    const Number& d = p.d1;
    // Old fields in terms of the new ones: w = u*/a1, u = e^t w*, v = -(v* + e^t w*)/a1.
    Expr et = exp(sym("t"));
    SubstitutionRules back{{"u", et * w}, {"v", -(v + et * w) / c(p.a1)}, {"w", u / c(p.a1)}};
    out.system.C[0] = substitute(c(p.a1) * sys.C[2], back);
    out.system.C[1] = substitute(-(sys.C[0] + c(p.a1) * sys.C[1]), back);
    out.system.C[2] = substitute(exp(-sym("t")) * sys.C[0], back) - w;
    out.system.d = {p.d3 / d, Number(1), Number(1)};
    out.system.label = sys.label + " (u*, v*, w* transform)";
  }
  out.scaled_d = out.system.d;
  out.dlv_form = true;
  for (int k = 0; k < 3; ++k) {
    double res = 0.0;
    out.component_dlv[k] = is_field_times_affine(out.system.C[k], kFields[k], tol, &res);
    out.max_fit_residual = std::max(out.max_fit_residual, res);
    out.dlv_form = out.dlv_form && out.component_dlv[k];
  }
  return out;
}

}  // namespace rdsym
