#include "doctest.h"
#include "test_util.hpp"

#include "rdsym/errors.hpp"
#include "rdsym/symmetry.hpp"

#include <algorithm>
#include <cmath>

using namespace rdsym;
using rdsym::testing::close;

namespace {

TableCase case2() { return table_case(2, {{"d1", Number(1)}, {"d2", Number(2)}, {"d3", Number::ratio(1, 2)}}); }

// Hand-coded invariance residual for ξ = 0 and η = A·(u,v,w) with constant A,
// on system (a1 = 1, a2 = 3, a4 = a5 = 1/2, d = (1, 2, 1/2)).
std::array<double, 3> hand_residual(const double A[3][3], const double y[3]) {
  const double d[3] = {1.0, 2.0, 0.5};
  double u = y[0], v = y[1], w = y[2];
  double C[3] = {u * (1 - u - v), 3 * v * (1 - u - v) + u * w + v * w, -0.5 * u * w - 0.5 * v * w};
  double J[3][3] = {{1 - 2 * u - v, -u, 0},
                    {-3 * v + w, 3 * (1 - u - 2 * v) + w, u + v},
                    {-0.5 * w, -0.5 * w, -0.5 * u - 0.5 * v}};
  double eta[3];
  for (int k = 0; k < 3; ++k) eta[k] = A[k][0] * u + A[k][1] * v + A[k][2] * w;
  std::array<double, 3> R{};
  for (int k = 0; k < 3; ++k) {
    double r = 0;
    for (int j = 0; j < 3; ++j) {
      double u_xx = (eta[j] - C[j]) / d[j];  // u_t = η on the manifold when ξ = 0
      r += d[k] * A[k][j] * u_xx - A[k][j] * eta[j] + eta[j] * J[k][j];
    }
    R[k] = r;
  }
  return R;
}

}  // namespace

TEST_CASE("jet symbol naming") {
  CHECK(jet_name(0, 0, 2) == "u_xx");
  CHECK(jet_name(2, 1, 1) == "w_tx");
  CHECK(jet_name(1, 0, 0) == "v");
  auto j = parse_jet("v_tx");
  REQUIRE(j);
  CHECK(j->field == 1);
  CHECK(j->nt == 1);
  CHECK(j->nx == 1);
  CHECK_FALSE(parse_jet("a1"));
  CHECK_FALSE(parse_jet("u_xt"));
  CHECK_FALSE(parse_jet("mu"));
}

TEST_CASE("total derivatives") {
  Expr u = sym("u"), v = sym("v");
  CHECK(to_string(total_derivative(u, Direction::X)) == "u_x");
  Expr d = total_derivative(u * v, Direction::X);
  Binding b{{"u", 2}, {"v", 3}, {"u_x", 5}, {"v_x", 7}};
  CHECK(evaluate(d, b) == doctest::Approx(5 * 3 + 2 * 7));
  CHECK(total_derivative(sym("mu"), Direction::T).is_zero());
  Expr e = total_derivative(sym("u_x") * sym("t"), Direction::T);
  CHECK(evaluate(e, {{"u_x", 2}, {"u_tx", 3}, {"t", 5}}) == doctest::Approx(2 + 15));
}

TEST_CASE("zero operator: time translation leaves every residual at zero") {
  RDSystem s = case2().system;
  QOperator Q{Expr(0), {Expr(0), Expr(0), Expr(0)}, "d_t"};
  auto R = prolong_residuals(Q, s);
  for (const auto& r : R) CHECK(r.is_zero());
}

TEST_CASE("case 2 Q1 against the hand-coded residual") {
  TableCase tc = case2();
  const QOperator& q1 = tc.operators[0];
  auto R = prolong_residuals(q1, tc.system);
  for (const auto& r : R)
    for (const auto& s : free_symbols(r)) CHECK((s == "t" || s == "x" || parse_jet(s)));

  Binding at{{"t", 0}, {"x", 0}, {"u", 0.5}, {"v", 0.5}, {"w", 0.5}, {"u_x", 0.5}, {"v_x", 0.5}, {"w_x", 0.5}};
  double A[3][3] = {{0, 0, 1}, {0, 0, -1}, {0, 0, -1}};
  double y[3] = {0.5, 0.5, 0.5};
  auto hand = hand_residual(A, y);
  for (int k = 0; k < 3; ++k) {
    CHECK(std::abs(evaluate(R[k], at)) < 1e-14);
    CHECK(std::abs(hand[k]) < 1e-14);
  }

  QOperator bent = q1;
  bent.eta[2] = num(-11, 10) * sym("w");
  auto Rb = prolong_residuals(bent, tc.system);
  A[2][2] = -1.1;
  hand = hand_residual(A, y);
  CHECK(std::max({std::abs(hand[0]), std::abs(hand[1]), std::abs(hand[2])}) > 1e-3);
  for (int k = 0; k < 3; ++k) CHECK(close(evaluate(Rb[k], at), hand[k], 1e-13));

  Report rep = verify_invariance(bent, tc.system, {.n_samples = 100});
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_abs_residual > 1e-3);
}

TEST_CASE("verify_invariance on table rows") {
  TableCase c1 = table_case(1, {{"d1", Number(1)}, {"d2", Number(2)}, {"d3", Number(1)}, {"mu", Number(0)},
                                {"alpha1", Number(1)}, {"alpha2", Number(1)}, {"a3", Number(1)}, {"a4", Number(1)}});
  Report r1 = verify_invariance(c1.operators[0], c1.system, {.n_samples = 200, .tol = 1e-9});
  CHECK(r1.pass);
  CHECK(r1.samples == 400);
  CHECK(r1.seeds.size() == 2);

  TableCase c2 = case2();
  Report r2 = verify_invariance(c2.operators[1], c2.system, {.n_samples = 200, .tol = 1e-9});
  CHECK(r2.pass);

  RDSystem flipped = c2.system;
  flipped.C[2] = -flipped.C[2];
  Report r3 = verify_invariance(c2.operators[0], flipped, {.n_samples = 100});
  CHECK_FALSE(r3.pass);
  CHECK(r3.max_abs_residual > 1e-2);
}

TEST_CASE("every row passes with random admissible parameters") {
  std::mt19937_64 rng(2024);
  for (int id = 1; id <= kCaseCount; ++id) {
    for (int draw = 0; draw < 3; ++draw) {
      TableCase tc = table_case(id, random_case_params(id, rng));
      for (const auto& q : tc.operators) {
        Report r = verify_invariance(q, tc.system, {.n_samples = 50});
        INFO(q.label, " scaled ", r.max_scaled_residual);
        CHECK(r.pass);
      }
    }
  }
}

TEST_CASE("P enters the rows that carry it") {
  ParamSet p{{"d1", Number(1)}, {"d", Number(2)}, {"mu", Number::ratio(1, 3)}};
  TableCase tc = table_case(13, p, parse("exp(2*t)*cosh(x) + x^2 + 4*t"));
  CHECK(verify_invariance(tc.operators[0], tc.system, {.n_samples = 50}).pass);
  ParamSet p11{{"d1", Number(1)}, {"d2", Number(2)}, {"d3", Number(3)}, {"a2", Number(0)}};
  TableCase t11 = table_case(11, p11, parse("exp(-2*t)*sin(x)"));
  for (const auto& q : t11.operators) CHECK(verify_invariance(q, t11.system, {.n_samples = 50}).pass);
  // A P that is not a heat solution breaks invariance, which is why the gate exists.
  TableCase t11b = table_case(11, p11);
  QOperator bad = t11b.operators[0];
  bad.eta[1] = bad.eta[1] + parse("x^2");
  CHECK_FALSE(verify_invariance(bad, t11b.system, {.n_samples = 50}).pass);
}

TEST_CASE("equivalence-class stability") {
  TableCase c6 = table_case(6, {{"d1", Number(1)}, {"d2", Number(2)}, {"d3", Number(3)}, {"a2", Number::ratio(1, 3)},
                                {"a4", Number(1)}, {"alpha1", Number(-1)}});
  // alpha1 = -a2 d3 = -1: the operator is d_t - λ (v d_v + w d_w).
  const QOperator& q = c6.operators[0];
  CHECK(verify_invariance(q, c6.system, {.n_samples = 50}).pass);
  Number lam(7);
  QOperator scaled{q.xi * Expr(lam) / Expr(lam), {}, "scaled"};
  for (int k = 0; k < 3; ++k) scaled.eta[k] = q.eta[k] * Expr(lam) / Expr(lam);
  CHECK(verify_invariance(scaled, c6.system, {.n_samples = 50}).pass);
  for (double kappa : {-2.0, 0.5, 3.0}) {
    QOperator shifted = q;
    shifted.eta[1] = q.eta[1] + Expr(Number(kappa)) * sym("v");
    shifted.eta[2] = q.eta[2] + Expr(Number(kappa)) * sym("w");
    CHECK(verify_invariance(shifted, c6.system, {.n_samples = 50}).pass);
  }
}

TEST_CASE("field-dependent xi is accepted") {
  TableCase c2 = case2();
  QOperator q{sym("u"), {Expr(0), Expr(0), Expr(0)}, "xi = u"};
  CHECK_NOTHROW(prolong_residuals(q, c2.system));
  CHECK_FALSE(verify_invariance(q, c2.system, {.n_samples = 20}).pass);
}

TEST_CASE("decompose and reassemble") {
  TableCase c9 = table_case(9, {{"d1", Number(1)}, {"d2", Number(2)}, {"d3", Number(3)}, {"mu", Number::ratio(1, 2)}});
  const QOperator& q = c9.operators[0];
  LinearCoefficients L = decompose(q);
  auto eta = L.eta();
  std::mt19937_64 rng(8);
  for (int i = 0; i < 20; ++i) {
    Binding b = rdsym::testing::random_binding(q.eta[1] + sym("u") + sym("w") + sym("t") + sym("x"), rng);
    for (int k = 0; k < 3; ++k) CHECK(close(evaluate(eta[k], b), evaluate(q.eta[k], b), 1e-12));
  }
  QOperator nonlinear{Expr(0), {sym("u") * sym("v"), Expr(0), Expr(0)}, ""};
  CHECK_THROWS_AS(decompose(nonlinear), ConsistencyError);
}

TEST_CASE("determining equations") {
  HGFParams p{Number(1), Number(2), Number(3), Number(0), Number(2), Number(1), Number(1), Number(0)};
  LinearCoefficients zero{{Expr(0), Expr(0), Expr(0)}, {Expr(0), Expr(0), Expr(0)},
                          {Expr(0), Expr(0), Expr(0)}, {Expr(0), Expr(0), Expr(0)}};
  for (const auto& r : determining_residuals(zero, Expr(Number::ratio(2, 3)), p)) CHECK(r.expr.is_zero());

  ParamSet c1p{{"d1", Number(1)}, {"d2", Number(2)}, {"d3", Number(1)}, {"mu", Number(0)},
               {"alpha1", Number(1)}, {"alpha2", Number(1)}, {"a3", Number(1)}, {"a4", Number(1)}};
  TableCase c1 = table_case(1, c1p);
  auto res = determining_residuals(decompose(c1.operators[0]), c1.operators[0].xi, *c1.system.hgf);
  CHECK(res.size() == 12);
  CHECK(check_residuals(res, {.n_samples = 100, .tol = 1e-8}).pass);

  // Exponent d2/d1 replaced by 2·d2/d1: residual "10" equals 1 at t = x = 0, u = v = w = 1/2.
  Expr t = sym("t"), u = sym("u");
  Expr g = exp(4 * t);
  LinearCoefficients bad = zero;
  bad.q[1] = 1 + g;
  bad.p[1] = -g;
  auto rb = determining_residuals(bad, Expr(0), *c1.system.hgf);
  Binding at{{"t", 0}, {"x", 0}, {"u", 0.5}, {"v", 0.5}, {"w", 0.5}};
  for (const auto& r : rb) {
    if (r.name == "10")
      CHECK(evaluate(r.expr, at) == doctest::Approx(1.0));
    else
      CHECK(std::abs(evaluate(r.expr, at)) < 1e-14);
  }
}

TEST_CASE("criterion and determining equations agree") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> amp(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    int id = 1 + trial % kCaseCount;
    TableCase tc = table_case(id, random_case_params(id, rng));
    QOperator q = tc.operators.front();
    if (trial % 2 == 1) q.eta[2] = q.eta[2] + Expr(Number(amp(rng))) * sym("u") * exp(sym("t"));
    bool a = verify_invariance(q, tc.system, {.n_samples = 50}).pass;
    bool b = check_residuals(determining_residuals(decompose(q), q.xi, *tc.system.hgf), {.n_samples = 50, .tol = 1e-8}).pass;
    INFO(q.label);
    CHECK(a == b);
    CHECK(a == (trial % 2 == 0));
  }
}
