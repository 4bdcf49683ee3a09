#pragma once

#include "rdsym/expr.hpp"

#include <optional>

namespace rdsym::detail {

// Scalar kernels shared by the tree evaluator and CompiledExpr. An empty
// result means the argument is outside the function's domain.
std::optional<double> apply_function(Function f, double a);
std::optional<double> apply_power(double base, const Rational& exponent);

}  // namespace rdsym::detail
