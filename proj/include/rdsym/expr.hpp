#pragma once

#include "rdsym/number.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rdsym {

enum class NodeKind { Constant, Symbol, Add, Mul, Pow, Func };

enum class Function { Exp, Sin, Cos, Tan, Sinh, Cosh, Tanh, Sqrt, Ln };

std::string_view function_name(Function f);

class Expr;

/// Symbol -> value map used for evaluation.
using Binding = std::map<std::string, double, std::less<>>;
using SubstitutionRules = std::map<std::string, Expr, std::less<>>;

namespace detail {
struct Node;
}
struct ExprFactory;

/// Immutable expression tree. Copies share structure; construction applies a
/// shallow normalization (constant folding, 0/1 identities, flattening,
/// merging of repeated terms and factors) but no canonicalization.
class Expr {
 public:
  Expr();  // constant 0
  Expr(int v);
  Expr(const Number& v);

  static Expr constant(const Number& v) { return Expr(v); }
  static Expr symbol(std::string_view name);
  static Expr sum(std::vector<Expr> terms);
  static Expr product(std::vector<Expr> factors);
  static Expr power(const Expr& base, const Rational& exponent);
  static Expr apply(Function f, const Expr& arg);

  NodeKind kind() const;
  bool is_constant() const { return kind() == NodeKind::Constant; }
  bool is_zero() const;
  bool is_one() const;
  /// Constant value; only valid when is_constant().
  const Number& value() const;
  /// Symbol name; only valid for Symbol nodes.
  const std::string& name() const;
  std::span<const Expr> args() const;
  const Rational& exponent() const;
  Function function() const;

  std::size_t hash() const;
  /// Bit set over hashed symbol names; a cleared bit proves absence.
  std::uint64_t symbol_mask() const;
  bool may_contain(std::string_view symbol) const;

  bool same_as(const Expr& other) const;
  const void* id() const { return node_.get(); }

  /// Top-level additive terms (a single-element list for non-sums).
  std::vector<Expr> terms() const;

 private:
  friend struct ExprFactory;
  explicit Expr(std::shared_ptr<const detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const detail::Node> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

Expr pow(const Expr& base, const Rational& exponent);
Expr pow(const Expr& base, std::int64_t exponent);
Expr exp(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr tan(const Expr& a);
Expr sinh(const Expr& a);
Expr cosh(const Expr& a);
Expr tanh(const Expr& a);
Expr sqrt(const Expr& a);
Expr ln(const Expr& a);

Expr sym(std::string_view name);
Expr num(std::int64_t p, std::int64_t q = 1);

std::set<std::string> free_symbols(const Expr& e);
bool depends_on(const Expr& e, std::string_view symbol);

Expr differentiate(const Expr& e, std::string_view symbol);
/// Simultaneous substitution: replacement expressions are not themselves rewritten.
Expr substitute(const Expr& e, const SubstitutionRules& rules);

/// Throws UnboundSymbol for a missing binding and DomainError for
/// evaluations outside a function's domain or non-finite results.
double evaluate(const Expr& e, const Binding& binding);

/// Text form accepted by parse(); print/parse preserves evaluation.
std::string to_string(const Expr& e);
std::ostream& operator<<(std::ostream& os, const Expr& e);

/// Grammar:
///   expr   := term (('+'|'-') term)*
///   term   := unary (('*'|'/') unary)*
///   unary  := ('-'|'+') unary | factor
///   factor := base ('^' rational)?
///   base   := number | symbol | func '(' expr ')' | '(' expr ')'
Expr parse(std::string_view text);

}  // namespace rdsym
