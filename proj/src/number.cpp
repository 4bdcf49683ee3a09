#include "rdsym/number.hpp"

#include "rdsym/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

namespace rdsym {

namespace {

__int128 gcd128(__int128 a, __int128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

constexpr __int128 kMax = std::numeric_limits<std::int64_t>::max();

}  // namespace

std::optional<Rational> Rational::make(__int128 num, __int128 den) {
  if (den == 0) return std::nullopt;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  __int128 g = gcd128(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (num > kMax || num < -kMax || den > kMax) return std::nullopt;
  return Rational{static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

std::optional<Rational> add(const Rational& a, const Rational& b) {
  return Rational::make(static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den,
                        static_cast<__int128>(a.den) * b.den);
}

std::optional<Rational> mul(const Rational& a, const Rational& b) {
  return Rational::make(static_cast<__int128>(a.num) * b.num, static_cast<__int128>(a.den) * b.den);
}

std::optional<Rational> div(const Rational& a, const Rational& b) {
  if (b.num == 0) return std::nullopt;
  return Rational::make(static_cast<__int128>(a.num) * b.den, static_cast<__int128>(a.den) * b.num);
}

std::optional<Rational> ipow(const Rational& base, std::int64_t exponent) {
  if (exponent < 0) {
    if (base.num == 0) return std::nullopt;
    auto inv = Rational::make(base.den, base.num);
    if (!inv) return std::nullopt;
    return ipow(*inv, -exponent);
  }
  Rational result{1, 1};
  Rational b = base;
  while (exponent > 0) {
    if (exponent & 1) {
      auto r = mul(result, b);
      if (!r) return std::nullopt;
      result = *r;
    }
    exponent >>= 1;
    if (exponent > 0) {
      auto sq = mul(b, b);
      if (!sq) return std::nullopt;
      b = *sq;
    }
  }
  return result;
}

int compare(const Rational& a, const Rational& b) {
  __int128 lhs = static_cast<__int128>(a.num) * b.den;
  __int128 rhs = static_cast<__int128>(b.num) * a.den;
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

Number::Number(double v) : exact_(std::nullopt), real_(v) {}

Number Number::ratio(std::int64_t num, std::int64_t den) {
  auto r = Rational::make(num, den);
  if (!r) throw Error("invalid rational " + std::to_string(num) + "/" + std::to_string(den));
  return Number(*r);
}

namespace {

// Decimal literal -> exact rational when mantissa and exponent are small.
std::optional<Rational> decimal_to_rational(std::string_view s) {
  __int128 mantissa = 0;
  int scale = 0;
  std::size_t i = 0;
  bool neg = false;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg = s[i++] == '-';
  bool any_digit = false;
  bool after_point = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      any_digit = true;
      if (mantissa > static_cast<__int128>(1) << 100) return std::nullopt;
      mantissa = mantissa * 10 + (c - '0');
      if (after_point) --scale;
    } else if (c == '.' && !after_point) {
      after_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) return std::nullopt;
  if (i < s.size()) {
    if (s[i] != 'e' && s[i] != 'E') return std::nullopt;
    ++i;
    int exp = 0;
    auto [ptr, ec] = std::from_chars(s.data() + i + (i < s.size() && s[i] == '+' ? 1 : 0),
                                     s.data() + s.size(), exp);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    scale += exp;
  }
  if (scale > 18 || scale < -18) return std::nullopt;
  __int128 den = 1;
  while (scale > 0) {
    mantissa *= 10;
    --scale;
  }
  while (scale < 0) {
    den *= 10;
    ++scale;
  }
  if (neg) mantissa = -mantissa;
  return Rational::make(mantissa, den);
}

}  // namespace

Number Number::parse(std::string_view text) {
  auto trim = [](std::string_view v) {
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    return v;
  };
  text = trim(text);
  if (text.empty()) throw Error("empty number");
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Number p = parse(text.substr(0, slash));
    Number q = parse(text.substr(slash + 1));
    if (q.is_zero()) throw Error("zero denominator in '" + std::string(text) + "'");
    return p / q;
  }
  if (auto r = decimal_to_rational(text)) return Number(*r);
  double v = 0.0;
  std::string copy(text);
  char* end = nullptr;
  v = std::strtod(copy.c_str(), &end);
  if (end != copy.c_str() + copy.size() || !std::isfinite(v))
    throw Error("malformed number '" + copy + "'");
  return Number(v);
}

std::string Number::str() const {
  if (exact_) return exact_->str();
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", real_);
  return buf;
}

Number operator+(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_)
    if (auto r = add(*a.exact_, *b.exact_)) return Number(*r);
  return Number(a.value() + b.value());
}

Number operator-(const Number& a, const Number& b) { return a + (-b); }

Number operator*(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_)
    if (auto r = mul(*a.exact_, *b.exact_)) return Number(*r);
  return Number(a.value() * b.value());
}

Number operator/(const Number& a, const Number& b) {
  if (b.is_zero()) throw DomainError("division by zero constant");
  if (a.exact_ && b.exact_)
    if (auto r = div(*a.exact_, *b.exact_)) return Number(*r);
  return Number(a.value() / b.value());
}

Number operator-(const Number& a) {
  if (a.exact_) return Number(Rational{-a.exact_->num, a.exact_->den});
  return Number(-a.real_);
}

bool operator==(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) return *a.exact_ == *b.exact_;
  if (a.exact_.has_value() != b.exact_.has_value()) return false;
  return a.real_ == b.real_;
}

bool numerically_equal(const Number& a, const Number& b, double rel_tol) {
  if (a.is_exact() && b.is_exact()) return *a.exact() == *b.exact();
  double x = a.value();
  double y = b.value();
  double scale = std::max({1.0, std::abs(x), std::abs(y)});
  return std::abs(x - y) <= rel_tol * scale;
}

}  // namespace rdsym
