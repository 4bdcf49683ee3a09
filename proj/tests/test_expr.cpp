#include "doctest.h"
#include "test_util.hpp"

#include "rdsym/compiled.hpp"
#include "rdsym/errors.hpp"
#include "rdsym/expr.hpp"

#include <numbers>

using namespace rdsym;
using rdsym::testing::close;
using rdsym::testing::random_binding;

namespace {

// Reaction terms of every table row, written out by hand.
const char* kCorpus[] = {
    "u*(1-u-a1*v)",
    "a2*v*(1-u-a1*v)+u*w+a1*v*w",
    "a3*w*(1-w)-a4*u*w-a5*v*w",
    "u*(1-u)",
    "(d2/d1)*v*(1-u)+u*w",
    "a3*w*(1-w)-a4*u*w",
    "exp(-(d3/(d1*(d1-d3)))*t)*sin(sqrt(d3/(d1*(d1-d3)))*x)",
    "(3/2)*(1+tan(x/2)^2)",
    "(1/2)*(-1+3*tanh(x/2)^2)",
    "cos(x/2)^3*exp(-5*t/4)",
    "sinh(x/2)*cosh(x/2)^3*exp(4*t)",
    "ln(1+u^2)*sqrt(2+v)",
    "u^(1/2)/(1+w)^(-3/2)",
};

}  // namespace

TEST_CASE("parse builds the expected tree") {
  Expr c1 = parse("u*(1-u-a1*v)");
  CHECK(free_symbols(c1) == std::set<std::string>{"a1", "u", "v"});
  CHECK(evaluate(c1, {{"u", 0.3}, {"v", 0.4}, {"a1", 1.0}}) == doctest::Approx(0.3 * 0.3));

  Expr zero = parse("0");
  CHECK(zero.is_zero());

  Expr mode = parse("exp(-(d3/(d1*(d1-d3)))*t)*sin(sqrt(d3/(d1*(d1-d3)))*x)");
  double v = evaluate(mode, {{"d1", 1.0}, {"d3", 0.5}, {"t", 0.0}, {"x", std::numbers::pi / 2}});
  CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("parse errors carry positions") {
  try {
    parse("u*(1-v");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() == 6);
  }
  CHECK_THROWS_AS(parse("foo(x)"), ParseError);
  CHECK_THROWS_AS(parse("1 +"), ParseError);
  CHECK_THROWS_AS(parse("x^y"), ParseError);
  CHECK_THROWS_AS(parse("3 $ 4"), ParseError);
  CHECK_THROWS_AS(parse("1/0"), ParseError);
}

TEST_CASE("exact rationals survive parsing") {
  Expr e = parse("5/9 + 4/27");
  REQUIRE(e.is_constant());
  REQUIRE(e.value().is_exact());
  CHECK(*e.value().exact() == Rational{19, 27});
  CHECK(parse("0.25").value().exact() == Rational{1, 4});
  CHECK(parse("1e-3").value().exact() == Rational{1, 1000});
}

TEST_CASE("differentiate small examples") {
  Expr u = sym("u"), v = sym("v"), t = sym("t"), x = sym("x");
  Expr d = differentiate(u * (1 - u - v), "u");
  Binding b{{"u", 0.3}, {"v", 0.4}};
  CHECK(evaluate(d, b) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(evaluate(d, {{"u", 0.1}, {"v", 0.2}}) == doctest::Approx(1 - 0.2 - 0.2));

  Expr e2 = differentiate(exp(2 * t), "t");
  CHECK(evaluate(e2, {{"t", 0.7}}) == doctest::Approx(2 * std::exp(1.4)));

  Expr tn = differentiate(tan(x / 2), "x");
  double fd = (std::tan((1 + 1e-6) / 2) - std::tan((1 - 1e-6) / 2)) / 2e-6;
  CHECK(evaluate(tn, {{"x", 1.0}}) == doctest::Approx(fd).epsilon(1e-8));
  CHECK(evaluate(tn, {{"x", 1.0}}) == doctest::Approx(0.649223).epsilon(1e-6));

  CHECK(differentiate(parse("a1*a2+3"), "u").is_zero());
}

TEST_CASE("finite-difference consistency over the corpus") {
  std::mt19937_64 rng(7);
  for (const char* text : kCorpus) {
    Expr e = parse(text);
    for (const auto& s : free_symbols(e)) {
      Expr de = differentiate(e, s);
      for (int trial = 0; trial < 20; ++trial) {
        Binding b = random_binding(e, rng);
        b["d1"] = 1.0 + b["d1"];  // keep d1 > d3 so the square root is real
        const double h = 1e-5;
        Binding bp = b, bm = b;
        bp[s] += h;
        bm[s] -= h;
        double fd = (evaluate(e, bp) - evaluate(e, bm)) / (2 * h);
        INFO(text, " d/d", s);
        CHECK(close(evaluate(de, b), fd, 1e-6));
      }
    }
  }
}

TEST_CASE("differentiation is linear") {
  std::mt19937_64 rng(11);
  Expr e1 = parse("a2*v*(1-u-a1*v)+u*w+a1*v*w");
  Expr e2 = parse("sin(u*v)*exp(w)");
  Expr a = num(3, 7), c = num(-2);
  Expr lhs = differentiate(a * e1 + c * e2, "v");
  Expr rhs = a * differentiate(e1, "v") + c * differentiate(e2, "v");
  for (int i = 0; i < 100; ++i) {
    Binding b = random_binding(lhs + rhs, rng, -1.0, 1.0);
    CHECK(close(evaluate(lhs, b), evaluate(rhs, b), 1e-12));
  }
}

TEST_CASE("print/parse round trip preserves evaluation") {
  std::mt19937_64 rng(3);
  std::vector<Expr> exprs;
  for (const char* text : kCorpus) exprs.push_back(parse(text));
  Expr u = sym("u"), v = sym("v");
  exprs.push_back(-u / (num(2) * v) - num(5, 9) * pow(u, -2) + Expr(Number(-0.125)) * v);
  exprs.push_back(pow(u + v, Rational{-1, 2}) - pow(v, 3) / 4);
  exprs.push_back(Expr(Number(1.2345678901234567e-20)) * u - Expr(Number(3.5e20)));
  for (const auto& e : exprs) {
    Expr back = parse(to_string(e));
    INFO(to_string(e));
    for (int i = 0; i < 100; ++i) {
      Binding b = random_binding(e, rng, 0.2, 0.9);
      if (b.count("d1")) b["d1"] += 1.0;
      CHECK(close(evaluate(e, b), evaluate(back, b), 1e-12));
    }
  }
}

TEST_CASE("substitution is simultaneous") {
  Expr u = sym("u"), v = sym("v");
  Expr swapped = substitute(u - v, {{"u", v}, {"v", u}});
  CHECK(evaluate(swapped, {{"u", 1.0}, {"v", 3.0}}) == doctest::Approx(2.0));

  Expr c2 = parse("a2*v*(1-u-a1*v)+u*w+a1*v*w");
  Expr at0 = substitute(c2, {{"w", Expr(0)}});
  CHECK_FALSE(depends_on(at0, "w"));
  std::mt19937_64 rng(5);
  Expr oracle = parse("a2*v*(1-u-a1*v)");
  for (int i = 0; i < 50; ++i) {
    Binding b = random_binding(c2, rng, -1, 1);
    CHECK(close(evaluate(at0, b), evaluate(oracle, b), 1e-14));
  }

  Expr pde = parse("d1*u_xx - u_t + u*(1-u)");
  Expr on = substitute(pde, {{"u_t", parse("eta - xi*u_x")}});
  CHECK_FALSE(depends_on(on, "u_t"));
}

TEST_CASE("evaluation errors") {
  CHECK(evaluate(parse("1-2*u-v"), {{"u", 0.3}, {"v", 0.4}}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(evaluate(parse("(3/2)*(1+tan(x/2)^2)"), {{"x", 0.0}}) == 1.5);
  CHECK(evaluate(parse("exp(mu*(d2-d1)/(2*d1*d2)*(x+mu*(d2-d1)/(2*d1)*t))"),
                 {{"mu", 0.0}, {"d1", 1.0}, {"d2", 2.0}, {"x", 3.0}, {"t", 4.0}}) == 1.0);
  CHECK_THROWS_AS(evaluate(parse("u+v"), {{"u", 1.0}}), UnboundSymbol);
  CHECK_THROWS_AS(evaluate(parse("tan(x)"), {{"x", std::numbers::pi / 2}}), DomainError);
  CHECK_THROWS_AS(evaluate(parse("sqrt(x)"), {{"x", -1.0}}), DomainError);
  CHECK_THROWS_AS(evaluate(parse("ln(x)"), {{"x", 0.0}}), DomainError);
  CHECK_THROWS_AS(evaluate(parse("1/x"), {{"x", 0.0}}), DomainError);
}

TEST_CASE("constant folding keeps values") {
  Expr e = parse("(2/3)*(9/4) + sin(0) + 2^3 - 5/9*(9/5)");
  REQUIRE(e.is_constant());
  CHECK(*e.value().exact() == Rational{17, 2});
  Expr f = parse("exp(1/3)*exp(2/3)");
  CHECK(evaluate(f, {}) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  Expr g = parse("x*x*x/x");
  CHECK(evaluate(g, {{"x", 1.7}}) == doctest::Approx(1.7 * 1.7).epsilon(1e-14));
}

TEST_CASE("compiled evaluator agrees with the tree walker") {
  std::mt19937_64 rng(13);
  std::vector<Expr> outs;
  for (const char* text : kCorpus) outs.push_back(parse(text));
  std::set<std::string> names;
  for (const auto& e : outs)
    for (const auto& s : free_symbols(e)) names.insert(s);
  std::vector<std::string> inputs(names.begin(), names.end());
  CompiledExpr prog(outs, inputs);
  auto work = prog.workspace();
  std::vector<double> in(inputs.size()), out(outs.size());
  std::uniform_real_distribution<double> dist(0.1, 0.9);
  for (int trial = 0; trial < 50; ++trial) {
    Binding b;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      in[i] = dist(rng) + (inputs[i] == "d1" ? 1.0 : 0.0);
      b[inputs[i]] = in[i];
    }
    REQUIRE(prog.eval(in, out, work));
    for (std::size_t k = 0; k < outs.size(); ++k) CHECK(close(out[k], evaluate(outs[k], b), 1e-14));
  }

  CompiledExpr bad({parse("sqrt(x)")}, {"x"});
  double x = -1.0, y = 0.0;
  CHECK_FALSE(bad.eval(std::span<const double>(&x, 1), std::span<double>(&y, 1)));
  CHECK_THROWS_AS(CompiledExpr({parse("x+y")}, {"x"}), UnboundSymbol);
}
