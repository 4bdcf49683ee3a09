// Printing and parsing of the expression language.

#include "rdsym/errors.hpp"
#include "rdsym/expr.hpp"

#include <array>
#include <cctype>
#include <ostream>
#include <sstream>

namespace rdsym {

namespace {

std::string constant_text(const Number& n) { return n.str(); }

// Whether a constant prints as a plain non-negative literal (no sign, no '/').
bool is_plain_literal(const Number& n) {
  if (n.is_negative()) return false;
  if (n.is_exact()) return n.exact()->is_integer();
  std::string s = n.str();
  return s.find_first_of("eE") == std::string::npos;
}

std::string exponent_text(const Rational& r) {
  if (r.is_integer() && r.num > 0) return std::to_string(r.num);
  return "(" + r.str() + ")";
}

void print(std::ostream& os, const Expr& e);

void print_atom(std::ostream& os, const Expr& e) {
  bool atomic = e.kind() == NodeKind::Symbol || e.kind() == NodeKind::Func ||
                (e.is_constant() && is_plain_literal(e.value()));
  if (atomic) {
    print(os, e);
  } else {
    os << '(';
    print(os, e);
    os << ')';
  }
}

void print_factors(std::ostream& os, const Number& coef, std::span<const Expr> factors) {
  std::vector<Expr> numer;
  std::vector<Expr> denom;
  for (const auto& f : factors) {
    if (f.kind() == NodeKind::Pow && f.exponent().num < 0) {
      Rational inv{-f.exponent().num, f.exponent().den};
      denom.push_back(inv.is_one() ? f.args()[0] : Expr::power(f.args()[0], inv));
    } else {
      numer.push_back(f);
    }
  }
  bool first = true;
  if (!coef.is_one() || numer.empty()) {
    if (is_plain_literal(coef))
      os << constant_text(coef);
    else
      os << '(' << constant_text(coef) << ')';
    first = false;
  }
  for (const auto& f : numer) {
    if (!first) os << '*';
    first = false;
    if (f.kind() == NodeKind::Add)
      os << '(', print(os, f), os << ')';
    else
      print(os, f);
  }
  if (!denom.empty()) {
    os << '/';
    if (denom.size() == 1 && denom[0].kind() == NodeKind::Pow) {
      print(os, denom[0]);
    } else if (denom.size() == 1 && denom[0].kind() != NodeKind::Add && denom[0].kind() != NodeKind::Mul) {
      print_atom(os, denom[0]);
    } else {
      os << '(';
      for (std::size_t i = 0; i < denom.size(); ++i) {
        if (i) os << '*';
        if (denom[i].kind() == NodeKind::Add)
          os << '(', print(os, denom[i]), os << ')';
        else
          print(os, denom[i]);
      }
      os << ')';
    }
  }
}

// Sets `negative` when the term has a negative leading coefficient; only the
// magnitude is printed then, so the caller can emit " - ".
void print_term(std::ostream& os, const Expr& t, bool& negative) {
  negative = false;
  if (t.is_constant()) {
    negative = t.value().is_negative();
    Number mag = negative ? -t.value() : t.value();
    if (is_plain_literal(mag))
      os << constant_text(mag);
    else
      os << '(' << constant_text(mag) << ')';
    return;
  }
  if (t.kind() == NodeKind::Mul && t.args()[0].is_constant()) {
    Number c = t.args()[0].value();
    negative = c.is_negative();
    if (negative) c = -c;
    print_factors(os, c, t.args().subspan(1));
    return;
  }
  if (t.kind() == NodeKind::Mul) {
    print_factors(os, Number(1), t.args());
    return;
  }
  print(os, t);
}

void print(std::ostream& os, const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Constant: os << constant_text(e.value()); return;
    case NodeKind::Symbol: os << e.name(); return;
    case NodeKind::Add: {
      bool first = true;
      for (const auto& t : e.args()) {
        std::ostringstream body;
        bool neg = false;
        print_term(body, t, neg);
        if (first)
          os << (neg ? "-" : "") << body.str();
        else
          os << (neg ? " - " : " + ") << body.str();
        first = false;
      }
      return;
    }
    case NodeKind::Mul: {
      bool neg = false;
      std::ostringstream body;
      print_term(body, e, neg);
      os << (neg ? "-" : "") << body.str();
      return;
    }
    case NodeKind::Pow: {
      if (e.exponent().num < 0) {
        print_factors(os, Number(1), std::span<const Expr>(&e, 1));
        return;
      }
      print_atom(os, e.args()[0]);
      os << '^' << exponent_text(e.exponent());
      return;
    }
    case NodeKind::Func:
      os << function_name(e.function()) << '(';
      print(os, e.args()[0]);
      os << ')';
      return;
  }
}

constexpr std::array<std::pair<std::string_view, Function>, 9> kFunctions{{
    {"exp", Function::Exp},
    {"sin", Function::Sin},
    {"cos", Function::Cos},
    {"tan", Function::Tan},
    {"sinh", Function::Sinh},
    {"cosh", Function::Cosh},
    {"tanh", Function::Tanh},
    {"sqrt", Function::Sqrt},
    {"ln", Function::Ln},
}};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr run() {
    Expr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_, what); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expr expr() {
    std::vector<Expr> terms{term()};
    for (;;) {
      if (accept('+'))
        terms.push_back(term());
      else if (accept('-'))
        terms.push_back(-term());
      else
        break;
    }
    return Expr::sum(std::move(terms));
  }

  Expr term() {
    Expr acc = unary();
    for (;;) {
      if (accept('*')) {
        acc = acc * unary();
      } else if (accept('/')) {
        std::size_t at = pos_;
        Expr d = unary();
        if (d.is_zero()) throw ParseError(at, "division by zero");
        acc = acc / d;
      } else {
        break;
      }
    }
    return acc;
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return factor();
  }

  Expr factor() {
    Expr b = base();
    if (accept('^')) return Expr::power(b, rational_exponent());
    return b;
  }

  Rational rational_exponent() {
    skip_ws();
    bool paren = accept('(');
    bool neg = false;
    if (accept('-'))
      neg = true;
    else
      accept('+');
    std::size_t at = pos_;
    Number n = number();
    if (paren && accept('/')) n = n / number();
    if (paren) expect(')');
    if (!n.is_exact()) throw ParseError(at, "exponent must be rational");
    Rational r = *n.exact();
    if (neg) r.num = -r.num;
    return r;
  }

  Number number() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
    if (pos_ == start) fail("expected a number");
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      std::size_t digits = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == digits) pos_ = save;
    }
    try {
      return Number::parse(text_.substr(start, pos_ - start));
    } catch (const Error& e) {
      throw ParseError(start, e.what());
    }
  }

  Expr base() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Expr(number());
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string_view ident = text_.substr(start, pos_ - start);
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '(') {
        for (const auto& [name, f] : kFunctions) {
          if (name == ident) {
            expect('(');
            Expr arg = expr();
            expect(')');
            return Expr::apply(f, arg);
          }
        }
        throw ParseError(start, "unknown function '" + std::string(ident) + "'");
      }
      return Expr::symbol(ident);
    }
    if (accept('(')) {
      Expr e = expr();
      expect(')');
      return e;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print(os, e);
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Expr& e) {
  print(os, e);
  return os;
}

Expr parse(std::string_view text) { return Parser(text).run(); }

}  // namespace rdsym
