#pragma once

#include "rdsym/expr.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rdsym {

/// Flat register program for evaluating several expressions at many points.
/// Shared subtrees are evaluated once per point. Every free symbol of the
/// outputs must appear in `inputs`.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const std::vector<Expr>& outputs, const std::vector<std::string>& inputs);

  std::size_t input_count() const { return n_inputs_; }
  std::size_t output_count() const { return outputs_.size(); }

  /// Scratch space sized for this program; one per thread.
  std::vector<double> workspace() const { return std::vector<double>(n_registers_); }

  /// Returns false when any intermediate leaves a function domain or is
  /// non-finite; `out` is then unspecified.
  bool eval(std::span<const double> in, std::span<double> out, std::vector<double>& work) const;
  bool eval(std::span<const double> in, std::span<double> out) const;

 private:
  enum class Op : std::uint8_t { Add, Mul, Square, Cube, Recip, Pow, Func };
  struct Instr {
    Op op;
    Function func;
    Rational exponent;
    std::uint32_t first;  // operand range into operands_
    std::uint32_t count;
  };

  std::size_t n_inputs_ = 0;
  std::size_t n_registers_ = 0;
  std::vector<double> constants_;  // registers [n_inputs_, n_inputs_+constants_.size())
  std::vector<Instr> code_;        // results land in the registers after the constants
  std::vector<std::uint32_t> operands_;
  std::vector<std::uint32_t> outputs_;
};

/// Residual expressions compiled term by term so each evaluation also yields
/// the scale 1 + Σ|additive terms| used by the scaled tolerance.
class ScaledResidual {
 public:
  ScaledResidual() = default;
  ScaledResidual(const std::vector<Expr>& residuals, const std::vector<std::string>& inputs);

  std::size_t size() const { return ranges_.size(); }
  std::vector<double> workspace() const { return program_.workspace(); }

  /// Writes R_k and its scale for every residual; false on a domain error.
  bool eval(std::span<const double> in, std::span<double> value, std::span<double> scale,
            std::vector<double>& work) const;

 private:
  CompiledExpr program_;
  std::vector<std::pair<std::size_t, std::size_t>> ranges_;  // term slice per residual
  std::size_t n_terms_ = 0;
};

}  // namespace rdsym
