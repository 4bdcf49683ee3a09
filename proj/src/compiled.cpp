#include "rdsym/compiled.hpp"

#include "eval_detail.hpp"
#include "rdsym/errors.hpp"

#include <cmath>
#include <functional>
#include <unordered_map>

namespace rdsym {

CompiledExpr::CompiledExpr(const std::vector<Expr>& outputs, const std::vector<std::string>& inputs)
    : n_inputs_(inputs.size()) {
  std::unordered_map<std::string, std::uint32_t> input_slot;
  for (std::uint32_t i = 0; i < inputs.size(); ++i) input_slot.emplace(inputs[i], i);

  // Constants are discovered while walking, so node registers are numbered
  // provisionally and shifted once the constant count is known.
  std::unordered_map<const void*, std::int64_t> slot;  // >=0 final input, <0 encoded
  std::unordered_map<double, std::uint32_t> const_slot;
  std::vector<std::uint32_t> node_ids;
  std::vector<Expr> keep;
  constexpr std::uint32_t kNodeTag = 0x80000000u;

  std::function<std::uint32_t(const Expr&)> visit = [&](const Expr& e) -> std::uint32_t {
    if (e.kind() == NodeKind::Constant) {
      double v = e.value().value();
      auto [it, fresh] = const_slot.emplace(v, static_cast<std::uint32_t>(constants_.size()));
      if (fresh) constants_.push_back(v);
      return static_cast<std::uint32_t>(n_inputs_) + it->second;
    }
    if (e.kind() == NodeKind::Symbol) {
      auto it = input_slot.find(e.name());
      if (it == input_slot.end()) throw UnboundSymbol(e.name());
      return it->second;
    }
    if (auto it = slot.find(e.id()); it != slot.end()) return static_cast<std::uint32_t>(it->second);
    std::vector<std::uint32_t> ops;
    for (const auto& a : e.args()) ops.push_back(visit(a));
    Instr in{};
    switch (e.kind()) {
      case NodeKind::Add: in.op = Op::Add; break;
      case NodeKind::Mul: in.op = Op::Mul; break;
      case NodeKind::Pow: {
        const Rational& r = e.exponent();
        in.exponent = r;
        if (r == Rational{2, 1})
          in.op = Op::Square;
        else if (r == Rational{3, 1})
          in.op = Op::Cube;
        else if (r == Rational{-1, 1})
          in.op = Op::Recip;
        else
          in.op = Op::Pow;
        break;
      }
      case NodeKind::Func:
        in.op = Op::Func;
        in.func = e.function();
        break;
      default: break;
    }
    in.first = static_cast<std::uint32_t>(operands_.size());
    in.count = static_cast<std::uint32_t>(ops.size());
    operands_.insert(operands_.end(), ops.begin(), ops.end());
    auto id = kNodeTag | static_cast<std::uint32_t>(code_.size());
    code_.push_back(in);
    slot.emplace(e.id(), id);
    keep.push_back(e);
    return id;
  };

  for (const auto& e : outputs) outputs_.push_back(visit(e));

  auto base = static_cast<std::uint32_t>(n_inputs_ + constants_.size());
  auto fix = [&](std::uint32_t& r) {
    if (r & kNodeTag) r = base + (r & ~kNodeTag);
  };
  for (auto& r : operands_) fix(r);
  for (auto& r : outputs_) fix(r);
  n_registers_ = base + code_.size();
}

bool CompiledExpr::eval(std::span<const double> in, std::span<double> out) const {
  auto work = workspace();
  return eval(in, out, work);
}

bool CompiledExpr::eval(std::span<const double> in, std::span<double> out,
                        std::vector<double>& work) const {
  if (work.size() < n_registers_) work.resize(n_registers_);
  double* r = work.data();
  for (std::size_t i = 0; i < n_inputs_; ++i) r[i] = in[i];
  for (std::size_t i = 0; i < constants_.size(); ++i) r[n_inputs_ + i] = constants_[i];
  double* dst = r + n_inputs_ + constants_.size();
  for (const Instr& ins : code_) {
    const std::uint32_t* a = operands_.data() + ins.first;
    double v = 0.0;
    switch (ins.op) {
      case Op::Add:
        for (std::uint32_t i = 0; i < ins.count; ++i) v += r[a[i]];
        break;
      case Op::Mul:
        v = 1.0;
        for (std::uint32_t i = 0; i < ins.count; ++i) v *= r[a[i]];
        break;
      case Op::Square: v = r[a[0]] * r[a[0]]; break;
      case Op::Cube: v = r[a[0]] * r[a[0]] * r[a[0]]; break;
      case Op::Recip:
        if (r[a[0]] == 0.0) return false;
        v = 1.0 / r[a[0]];
        break;
      case Op::Pow: {
        auto p = detail::apply_power(r[a[0]], ins.exponent);
        if (!p) return false;
        v = *p;
        break;
      }
      case Op::Func: {
        auto f = detail::apply_function(ins.func, r[a[0]]);
        if (!f) return false;
        v = *f;
        break;
      }
    }
    if (!std::isfinite(v)) return false;
    *dst++ = v;
  }
  for (std::size_t i = 0; i < outputs_.size(); ++i) out[i] = r[outputs_[i]];
  return true;
}

}  // namespace rdsym

namespace rdsym {

ScaledResidual::ScaledResidual(const std::vector<Expr>& residuals, const std::vector<std::string>& inputs) {
  std::vector<Expr> terms;
  for (const auto& r : residuals) {
    std::size_t first = terms.size();
    for (auto& t : r.terms()) terms.push_back(std::move(t));
    ranges_.emplace_back(first, terms.size() - first);
  }
  program_ = CompiledExpr(terms, inputs);
  n_terms_ = terms.size();
}

bool ScaledResidual::eval(std::span<const double> in, std::span<double> value, std::span<double> scale,
                          std::vector<double>& work) const {
  thread_local std::vector<double> terms;
  terms.resize(n_terms_);
  if (!program_.eval(in, terms, work)) return false;
  for (std::size_t k = 0; k < ranges_.size(); ++k) {
    auto [first, count] = ranges_[k];
    double sum = 0.0, mag = 1.0;
    for (std::size_t i = first; i < first + count; ++i) {
      sum += terms[i];
      mag += std::abs(terms[i]);
    }
    value[k] = sum;
    scale[k] = mag;
  }
  return true;
}

}  // namespace rdsym
