#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rdsym {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& what)
      : Error("parse error at " + std::to_string(position) + ": " + what), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class UnboundSymbol : public Error {
 public:
  explicit UnboundSymbol(const std::string& name)
      : Error("unbound symbol '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Evaluation outside a function's domain (tan pole, sqrt/ln of a bad argument).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A named parameter restriction or operation precondition was violated.
class RestrictionError : public Error {
 public:
  using Error::Error;
};

/// Internal consistency failure, e.g. a jet symbol that survived manifold substitution.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double last_valid)
      : Error(what), last_valid_(last_valid) {}
  /// Last abscissa (or time) at which the state was still finite and bounded.
  double last_valid() const { return last_valid_; }

 private:
  double last_valid_;
};

}  // namespace rdsym
