#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace rdsym {

/// Exact rational p/q with q > 0 and gcd(p, q) = 1. Arithmetic is checked:
/// operations that would overflow 64-bit storage return std::nullopt.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static std::optional<Rational> make(__int128 num, __int128 den);

  bool is_zero() const { return num == 0; }
  bool is_one() const { return num == 1 && den == 1; }
  bool is_integer() const { return den == 1; }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;

  friend bool operator==(const Rational&, const Rational&) = default;
};

std::optional<Rational> add(const Rational& a, const Rational& b);
std::optional<Rational> mul(const Rational& a, const Rational& b);
std::optional<Rational> div(const Rational& a, const Rational& b);
std::optional<Rational> ipow(const Rational& base, std::int64_t exponent);
int compare(const Rational& a, const Rational& b);

/// A real constant that stays exact while it can. Parameters entered as
/// `p/q` or short decimals are exact; randomly drawn values are doubles.
/// Mixed or overflowing arithmetic degrades to double.
class Number {
 public:
  Number() = default;
  Number(int v) : exact_(Rational{v, 1}) {}
  Number(std::int64_t v) : exact_(Rational{v, 1}) {}
  Number(Rational r) : exact_(r) {}
  explicit Number(double v);

  static Number ratio(std::int64_t num, std::int64_t den);
  /// Accepts "p/q", integers, decimals and scientific notation.
  static Number parse(std::string_view text);

  bool is_exact() const { return exact_.has_value(); }
  const std::optional<Rational>& exact() const { return exact_; }
  double value() const { return exact_ ? exact_->value() : real_; }

  bool is_zero() const { return exact_ ? exact_->is_zero() : real_ == 0.0; }
  bool is_one() const { return exact_ ? exact_->is_one() : real_ == 1.0; }
  bool is_negative() const { return exact_ ? exact_->num < 0 : real_ < 0.0; }

  std::string str() const;

  friend Number operator+(const Number& a, const Number& b);
  friend Number operator-(const Number& a, const Number& b);
  friend Number operator*(const Number& a, const Number& b);
  friend Number operator/(const Number& a, const Number& b);
  friend Number operator-(const Number& a);
  friend bool operator==(const Number& a, const Number& b);

 private:
  std::optional<Rational> exact_ = Rational{};
  double real_ = 0.0;
};

/// Equality used for restriction gates: exact when both sides are exact,
/// otherwise within `rel_tol` relative to max(1, |a|, |b|).
bool numerically_equal(const Number& a, const Number& b, double rel_tol = 1e-12);

}  // namespace rdsym
