#include "rdsym/expr.hpp"

#include "eval_detail.hpp"
#include "rdsym/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>

namespace rdsym {

namespace detail {

struct Node {
  NodeKind kind = NodeKind::Constant;
  Number value;
  std::string name;
  std::vector<Expr> args;
  Rational exponent{1, 1};
  Function func = Function::Exp;
  std::size_t hash = 0;
  std::uint64_t mask = 0;
};

}  // namespace detail

using detail::Node;

std::string_view function_name(Function f) {
  switch (f) {
    case Function::Exp: return "exp";
    case Function::Sin: return "sin";
    case Function::Cos: return "cos";
    case Function::Tan: return "tan";
    case Function::Sinh: return "sinh";
    case Function::Cosh: return "cosh";
    case Function::Tanh: return "tanh";
    case Function::Sqrt: return "sqrt";
    case Function::Ln: return "ln";
  }
  return "?";
}

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::uint64_t mask_of(std::string_view name) {
  return std::uint64_t{1} << (std::hash<std::string_view>{}(name) % 64);
}

std::size_t number_hash(const Number& n) {
  if (n.is_exact()) return mix(std::hash<std::int64_t>{}(n.exact()->num), std::hash<std::int64_t>{}(n.exact()->den));
  return std::hash<double>{}(n.value());
}

void finalize(Node& n) {
  std::size_t h = std::hash<int>{}(static_cast<int>(n.kind));
  std::uint64_t m = 0;
  switch (n.kind) {
    case NodeKind::Constant: h = mix(h, number_hash(n.value)); break;
    case NodeKind::Symbol:
      h = mix(h, std::hash<std::string>{}(n.name));
      m = mask_of(n.name);
      break;
    case NodeKind::Pow:
      h = mix(h, std::hash<std::int64_t>{}(n.exponent.num));
      h = mix(h, std::hash<std::int64_t>{}(n.exponent.den));
      break;
    case NodeKind::Func: h = mix(h, static_cast<std::size_t>(n.func)); break;
    default: break;
  }
  for (const auto& a : n.args) {
    h = mix(h, a.hash());
    m |= a.symbol_mask();
  }
  n.hash = h;
  n.mask = m;
}

std::shared_ptr<const Node> make_node(Node n) {
  finalize(n);
  return std::make_shared<const Node>(std::move(n));
}

}  // namespace

// Raw node construction without normalization, used by the normalizing builders.
struct ExprFactory {
  static Expr raw(NodeKind kind, std::vector<Expr> args) {
    Node n;
    n.kind = kind;
    n.args = std::move(args);
    return Expr(make_node(std::move(n)));
  }
  static Expr raw_pow(const Expr& base, const Rational& r) {
    Node n;
    n.kind = NodeKind::Pow;
    n.args = {base};
    n.exponent = r;
    return Expr(make_node(std::move(n)));
  }
  static Expr raw_func(Function f, const Expr& arg) {
    Node n;
    n.kind = NodeKind::Func;
    n.func = f;
    n.args = {arg};
    return Expr(make_node(std::move(n)));
  }
};

Expr::Expr() : Expr(Number(0)) {}

Expr::Expr(int v) : Expr(Number(v)) {}

Expr::Expr(const Number& v) {
  Node n;
  n.kind = NodeKind::Constant;
  n.value = v;
  node_ = make_node(std::move(n));
}

Expr Expr::symbol(std::string_view name) {
  Node n;
  n.kind = NodeKind::Symbol;
  n.name = std::string(name);
  return Expr(make_node(std::move(n)));
}

NodeKind Expr::kind() const { return node_->kind; }
bool Expr::is_zero() const { return node_->kind == NodeKind::Constant && node_->value.is_zero(); }
bool Expr::is_one() const { return node_->kind == NodeKind::Constant && node_->value.is_one(); }
const Number& Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
std::span<const Expr> Expr::args() const { return node_->args; }
const Rational& Expr::exponent() const { return node_->exponent; }
Function Expr::function() const { return node_->func; }
std::size_t Expr::hash() const { return node_->hash; }
std::uint64_t Expr::symbol_mask() const { return node_->mask; }
bool Expr::may_contain(std::string_view symbol) const { return (node_->mask & mask_of(symbol)) != 0; }

bool Expr::same_as(const Expr& other) const {
  if (node_ == other.node_) return true;
  const Node& a = *node_;
  const Node& b = *other.node_;
  if (a.hash != b.hash || a.kind != b.kind || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case NodeKind::Constant: return a.value == b.value;
    case NodeKind::Symbol: return a.name == b.name;
    case NodeKind::Pow:
      if (!(a.exponent == b.exponent)) return false;
      break;
    case NodeKind::Func:
      if (a.func != b.func) return false;
      break;
    default: break;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!a.args[i].same_as(b.args[i])) return false;
  return true;
}

std::vector<Expr> Expr::terms() const {
  if (kind() == NodeKind::Add) return {args().begin(), args().end()};
  return {*this};
}

namespace {

// Hash-bucketed list of distinct expressions preserving first-occurrence order.
template <typename Payload>
class OrderedExprMap {
 public:
  Payload& at(const Expr& key, const Payload& init) {
    auto range = index_.equal_range(key.hash());
    for (auto it = range.first; it != range.second; ++it)
      if (entries_[it->second].first.same_as(key)) return entries_[it->second].second;
    index_.emplace(key.hash(), entries_.size());
    entries_.emplace_back(key, init);
    return entries_.back().second;
  }
  std::vector<std::pair<Expr, Payload>>& entries() { return entries_; }

 private:
  std::unordered_multimap<std::size_t, std::size_t> index_;
  std::vector<std::pair<Expr, Payload>> entries_;
};

// Splits c*rest; rest is 1 for a bare constant.
std::pair<Number, Expr> split_coefficient(const Expr& e) {
  if (e.is_constant()) return {e.value(), Expr(1)};
  if (e.kind() == NodeKind::Mul && e.args()[0].is_constant()) {
    auto args = e.args();
    if (args.size() == 2) return {args[0].value(), args[1]};
    return {args[0].value(), ExprFactory::raw(NodeKind::Mul, {args.begin() + 1, args.end()})};
  }
  return {Number(1), e};
}

Expr scale(const Number& c, const Expr& rest) {
  if (c.is_zero()) return Expr(0);
  if (c.is_one()) return rest;
  if (rest.kind() == NodeKind::Mul) {
    std::vector<Expr> f;
    f.reserve(rest.args().size() + 1);
    f.emplace_back(c);
    f.insert(f.end(), rest.args().begin(), rest.args().end());
    return ExprFactory::raw(NodeKind::Mul, std::move(f));
  }
  return ExprFactory::raw(NodeKind::Mul, {Expr(c), rest});
}

}  // namespace

Expr Expr::sum(std::vector<Expr> terms) {
  Number constant(0);
  OrderedExprMap<Number> collected;
  std::function<void(const Expr&)> push = [&](const Expr& t) {
    if (t.kind() == NodeKind::Add) {
      for (const auto& a : t.args()) push(a);
      return;
    }
    if (t.is_constant()) {
      constant = constant + t.value();
      return;
    }
    auto [c, rest] = split_coefficient(t);
    Number& slot = collected.at(rest, Number(0));
    slot = slot + c;
  };
  for (const auto& t : terms) push(t);

  std::vector<Expr> out;
  if (!constant.is_zero()) out.emplace_back(constant);
  for (auto& [rest, c] : collected.entries()) {
    if (c.is_zero()) continue;
    out.push_back(scale(c, rest));
  }
  if (out.empty()) return Expr(0);
  if (out.size() == 1) return out.front();
  return ExprFactory::raw(NodeKind::Add, std::move(out));
}

Expr Expr::product(std::vector<Expr> factors) {
  Number coef(1);
  OrderedExprMap<Rational> bases;
  std::vector<Expr> exp_args;
  std::vector<Expr> unmerged;
  std::function<void(const Expr&)> push = [&](const Expr& f) {
    switch (f.kind()) {
      case NodeKind::Mul:
        for (const auto& a : f.args()) push(a);
        return;
      case NodeKind::Constant: coef = coef * f.value(); return;
      case NodeKind::Func:
        if (f.function() == Function::Exp) {
          exp_args.push_back(f.args()[0]);
          return;
        }
        break;
      default: break;
    }
    Expr base = f;
    Rational r{1, 1};
    if (f.kind() == NodeKind::Pow) {
      base = f.args()[0];
      r = f.exponent();
    }
    Rational& slot = bases.at(base, Rational{0, 1});
    if (auto s = add(slot, r)) {
      slot = *s;
    } else {
      unmerged.push_back(f);
    }
  };
  for (const auto& f : factors) push(f);
  if (coef.is_zero()) return Expr(0);

  std::vector<Expr> rebuilt;
  bool needs_renormalize = false;
  for (auto& [base, r] : bases.entries()) {
    if (r.is_zero()) continue;
    Expr p = r.is_one() ? base : Expr::power(base, r);
    if (p.kind() == NodeKind::Func && p.function() == Function::Exp) {
      exp_args.push_back(p.args()[0]);
      continue;
    }
    if (p.kind() == NodeKind::Mul || p.is_constant()) needs_renormalize = true;
    rebuilt.push_back(p);
  }
  if (!exp_args.empty()) {
    Expr e = exp_args.size() == 1 ? ExprFactory::raw_func(Function::Exp, exp_args[0])
                                  : Expr::apply(Function::Exp, Expr::sum(exp_args));
    if (e.is_constant()) needs_renormalize = true;
    rebuilt.push_back(e);
  }
  rebuilt.insert(rebuilt.end(), unmerged.begin(), unmerged.end());

  if (needs_renormalize) {
    // A rebuilt power folded into a constant or a product: flatten once more.
    std::vector<Expr> again;
    again.reserve(rebuilt.size() + 1);
    again.emplace_back(coef);
    again.insert(again.end(), rebuilt.begin(), rebuilt.end());
    return Expr::product(std::move(again));
  }

  if (rebuilt.empty()) return Expr(coef);
  if (rebuilt.size() == 1 && coef.is_one()) return rebuilt.front();
  std::vector<Expr> out;
  out.reserve(rebuilt.size() + 1);
  if (!coef.is_one()) out.emplace_back(coef);
  out.insert(out.end(), rebuilt.begin(), rebuilt.end());
  return ExprFactory::raw(NodeKind::Mul, std::move(out));
}

Expr Expr::power(const Expr& base, const Rational& r) {
  if (r.is_zero()) return Expr(1);
  if (r.is_one()) return base;
  if (base.is_constant()) {
    const Number& b = base.value();
    if (b.is_one()) return Expr(1);
    if (b.is_zero() && r.num > 0) return Expr(0);
    if (b.is_exact() && r.is_integer()) {
      if (auto v = ipow(*b.exact(), r.num)) return Expr(Number(*v));
    } else if (!b.is_exact()) {
      double x = b.value();
      if ((x > 0.0 || r.is_integer()) && !(x == 0.0 && r.num < 0)) {
        double v = std::pow(x, r.value());
        if (std::isfinite(v)) return Expr(Number(v));
      }
    }
    return ExprFactory::raw_pow(base, r);
  }
  if (base.kind() == NodeKind::Pow && r.is_integer()) {
    if (auto s = mul(base.exponent(), r)) return Expr::power(base.args()[0], *s);
  }
  if (base.kind() == NodeKind::Mul && r.is_integer()) {
    std::vector<Expr> f;
    for (const auto& a : base.args()) f.push_back(Expr::power(a, r));
    return Expr::product(std::move(f));
  }
  if (base.kind() == NodeKind::Func && base.function() == Function::Exp && r.is_integer()) {
    return Expr::apply(Function::Exp, Expr(Number(r)) * base.args()[0]);
  }
  return ExprFactory::raw_pow(base, r);
}

namespace {

std::optional<Rational> exact_sqrt(const Rational& r) {
  if (r.num < 0) return std::nullopt;
  auto isqrt = [](std::int64_t v) -> std::optional<std::int64_t> {
    auto s = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(v))));
    for (std::int64_t c = std::max<std::int64_t>(0, s - 1); c <= s + 1; ++c)
      if (static_cast<__int128>(c) * c == v) return c;
    return std::nullopt;
  };
  auto n = isqrt(r.num);
  auto d = isqrt(r.den);
  if (!n || !d) return std::nullopt;
  return Rational{*n, *d};
}

std::optional<double> eval_function(Function f, double a) {
  switch (f) {
    case Function::Exp: return std::exp(a);
    case Function::Sin: return std::sin(a);
    case Function::Cos: return std::cos(a);
    case Function::Tan:
      if (std::abs(std::cos(a)) < 1e-12) return std::nullopt;
      return std::tan(a);
    case Function::Sinh: return std::sinh(a);
    case Function::Cosh: return std::cosh(a);
    case Function::Tanh: return std::tanh(a);
    case Function::Sqrt:
      if (a < 0.0) return std::nullopt;
      return std::sqrt(a);
    case Function::Ln:
      if (a <= 0.0) return std::nullopt;
      return std::log(a);
  }
  return std::nullopt;
}

}  // namespace

Expr Expr::apply(Function f, const Expr& arg) {
  if (arg.is_constant()) {
    const Number& a = arg.value();
    if (a.is_exact() && a.is_zero()) {
      switch (f) {
        case Function::Exp:
        case Function::Cos:
        case Function::Cosh: return Expr(1);
        case Function::Ln: break;
        default: return Expr(0);
      }
    }
    if (f == Function::Ln && a.is_exact() && a.is_one()) return Expr(0);
    if (f == Function::Sqrt && a.is_exact())
      if (auto r = exact_sqrt(*a.exact())) return Expr(Number(*r));
    if (auto v = eval_function(f, a.value()); v && std::isfinite(*v)) return Expr(Number(*v));
    return ExprFactory::raw_func(f, arg);
  }
  if (f == Function::Ln && arg.kind() == NodeKind::Func && arg.function() == Function::Exp)
    return arg.args()[0];
  return ExprFactory::raw_func(f, arg);
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::sum({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::sum({a, -b}); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::product({a, b}); }
Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_zero()) throw DomainError("division by the zero expression");
  return Expr::product({a, Expr::power(b, Rational{-1, 1})});
}
Expr operator-(const Expr& a) { return Expr::product({Expr(-1), a}); }

Expr pow(const Expr& base, const Rational& exponent) { return Expr::power(base, exponent); }
Expr pow(const Expr& base, std::int64_t exponent) { return Expr::power(base, Rational{exponent, 1}); }
Expr exp(const Expr& a) { return Expr::apply(Function::Exp, a); }
Expr sin(const Expr& a) { return Expr::apply(Function::Sin, a); }
Expr cos(const Expr& a) { return Expr::apply(Function::Cos, a); }
Expr tan(const Expr& a) { return Expr::apply(Function::Tan, a); }
Expr sinh(const Expr& a) { return Expr::apply(Function::Sinh, a); }
Expr cosh(const Expr& a) { return Expr::apply(Function::Cosh, a); }
Expr tanh(const Expr& a) { return Expr::apply(Function::Tanh, a); }
Expr sqrt(const Expr& a) { return Expr::apply(Function::Sqrt, a); }
Expr ln(const Expr& a) { return Expr::apply(Function::Ln, a); }

Expr sym(std::string_view name) { return Expr::symbol(name); }
Expr num(std::int64_t p, std::int64_t q) { return Expr(Number::ratio(p, q)); }

std::set<std::string> free_symbols(const Expr& e) {
  std::set<std::string> out;
  std::unordered_map<const void*, bool> seen;
  std::function<void(const Expr&)> walk = [&](const Expr& n) {
    if (!seen.emplace(n.id(), true).second) return;
    if (n.kind() == NodeKind::Symbol) out.insert(n.name());
    for (const auto& a : n.args()) walk(a);
  };
  walk(e);
  return out;
}

bool depends_on(const Expr& e, std::string_view symbol) {
  if (!e.may_contain(symbol)) return false;
  if (e.kind() == NodeKind::Symbol) return e.name() == symbol;
  for (const auto& a : e.args())
    if (depends_on(a, symbol)) return true;
  return false;
}

namespace {

class Differentiator {
 public:
  explicit Differentiator(std::string_view s) : s_(s) {}

  Expr operator()(const Expr& e) {
    if (!e.may_contain(s_)) return Expr(0);
    if (auto it = memo_.find(e.id()); it != memo_.end()) return it->second;
    Expr d = compute(e);
    memo_.emplace(e.id(), d);
    keep_.push_back(e);
    return d;
  }

 private:
  Expr compute(const Expr& e) {
    switch (e.kind()) {
      case NodeKind::Constant: return Expr(0);
      case NodeKind::Symbol: return Expr(e.name() == s_ ? 1 : 0);
      case NodeKind::Add: {
        std::vector<Expr> t;
        for (const auto& a : e.args()) t.push_back((*this)(a));
        return Expr::sum(std::move(t));
      }
      case NodeKind::Mul: {
        auto args = e.args();
        std::vector<Expr> t;
        for (std::size_t i = 0; i < args.size(); ++i) {
          Expr di = (*this)(args[i]);
          if (di.is_zero()) continue;
          std::vector<Expr> f;
          f.reserve(args.size());
          for (std::size_t j = 0; j < args.size(); ++j) f.push_back(j == i ? di : args[j]);
          t.push_back(Expr::product(std::move(f)));
        }
        return Expr::sum(std::move(t));
      }
      case NodeKind::Pow: {
        const Expr& b = e.args()[0];
        const Rational& r = e.exponent();
        Expr db = (*this)(b);
        if (db.is_zero()) return Expr(0);
        auto r1 = add(r, Rational{-1, 1});
        if (!r1) throw Error("exponent overflow while differentiating");
        return Expr::product({Expr(Number(r)), Expr::power(b, *r1), db});
      }
      case NodeKind::Func: {
        const Expr& a = e.args()[0];
        Expr da = (*this)(a);
        if (da.is_zero()) return Expr(0);
        Expr outer;
        switch (e.function()) {
          case Function::Exp: outer = e; break;
          case Function::Sin: outer = cos(a); break;
          case Function::Cos: outer = -sin(a); break;
          case Function::Tan: outer = Expr(1) + pow(e, 2); break;
          case Function::Sinh: outer = cosh(a); break;
          case Function::Cosh: outer = sinh(a); break;
          case Function::Tanh: outer = Expr(1) - pow(e, 2); break;
          case Function::Sqrt: outer = Expr(Number::ratio(1, 2)) * pow(e, -1); break;
          case Function::Ln: outer = pow(a, -1); break;
        }
        return outer * da;
      }
    }
    return Expr(0);
  }

  std::string s_;
  std::unordered_map<const void*, Expr> memo_;
  std::vector<Expr> keep_;  // pins memo keys
};

}  // namespace

Expr differentiate(const Expr& e, std::string_view symbol) {
  Differentiator d(symbol);
  return d(e);
}

Expr substitute(const Expr& e, const SubstitutionRules& rules) {
  if (rules.empty()) return e;
  std::uint64_t rule_mask = 0;
  for (const auto& [name, _] : rules) rule_mask |= mask_of(name);
  std::unordered_map<const void*, Expr> memo;
  std::vector<Expr> keep;
  std::function<Expr(const Expr&)> go = [&](const Expr& n) -> Expr {
    if ((n.symbol_mask() & rule_mask) == 0) return n;
    if (auto it = memo.find(n.id()); it != memo.end()) return it->second;
    Expr out = n;
    switch (n.kind()) {
      case NodeKind::Constant: break;
      case NodeKind::Symbol:
        if (auto it = rules.find(n.name()); it != rules.end()) out = it->second;
        break;
      case NodeKind::Add:
      case NodeKind::Mul: {
        std::vector<Expr> a;
        bool changed = false;
        for (const auto& c : n.args()) {
          a.push_back(go(c));
          changed |= a.back().id() != c.id();
        }
        if (changed) out = n.kind() == NodeKind::Add ? Expr::sum(std::move(a)) : Expr::product(std::move(a));
        break;
      }
      case NodeKind::Pow: {
        Expr b = go(n.args()[0]);
        if (b.id() != n.args()[0].id()) out = Expr::power(b, n.exponent());
        break;
      }
      case NodeKind::Func: {
        Expr a = go(n.args()[0]);
        if (a.id() != n.args()[0].id()) out = Expr::apply(n.function(), a);
        break;
      }
    }
    memo.emplace(n.id(), out);
    keep.push_back(n);
    return out;
  };
  return go(e);
}

namespace {

double checked_pow(double b, const Rational& r) {
  if (r.is_integer()) {
    if (b == 0.0 && r.num < 0) throw DomainError("division by zero in power");
    switch (r.num) {
      case 2: return b * b;
      case 3: return b * b * b;
      case -1: return 1.0 / b;
      case -2: return 1.0 / (b * b);
      default: return std::pow(b, static_cast<double>(r.num));
    }
  }
  if (b < 0.0) throw DomainError("fractional power of a negative number");
  if (b == 0.0 && r.num < 0) throw DomainError("division by zero in power");
  if (r.num == 1 && r.den == 2) return std::sqrt(b);
  return std::pow(b, r.value());
}

double eval_rec(const Expr& e, const Binding& b, std::unordered_map<const void*, double>& memo) {
  if (e.kind() == NodeKind::Constant) return e.value().value();
  if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
  double v = 0.0;
  switch (e.kind()) {
    case NodeKind::Constant: break;
    case NodeKind::Symbol: {
      auto it = b.find(e.name());
      if (it == b.end()) throw UnboundSymbol(e.name());
      v = it->second;
      break;
    }
    case NodeKind::Add:
      for (const auto& a : e.args()) v += eval_rec(a, b, memo);
      break;
    case NodeKind::Mul:
      v = 1.0;
      for (const auto& a : e.args()) v *= eval_rec(a, b, memo);
      break;
    case NodeKind::Pow: v = checked_pow(eval_rec(e.args()[0], b, memo), e.exponent()); break;
    case NodeKind::Func: {
      double a = eval_rec(e.args()[0], b, memo);
      auto r = eval_function(e.function(), a);
      if (!r) throw DomainError(std::string(function_name(e.function())) + " evaluated outside its domain");
      v = *r;
      break;
    }
  }
  if (!std::isfinite(v)) throw DomainError("non-finite value during evaluation");
  memo.emplace(e.id(), v);
  return v;
}

}  // namespace

namespace detail {

std::optional<double> apply_function(Function f, double a) { return eval_function(f, a); }

std::optional<double> apply_power(double base, const Rational& exponent) {
  try {
    return checked_pow(base, exponent);
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

}  // namespace detail

double evaluate(const Expr& e, const Binding& binding) {
  std::unordered_map<const void*, double> memo;
  return eval_rec(e, binding, memo);
}

}  // namespace rdsym
