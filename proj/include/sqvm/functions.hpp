#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sqvm/value.hpp"

namespace sqvm {

/// Expression tree the engine can evaluate itself, and therefore inline into
/// traces. Native callables are the opaque alternative.
///
/// Text form is a prefix s-expression:
///   (if (lt (arg 0) (const 0)) (neg (arg 0)) (arg 0))
/// Constants: (const 1), (const 2.5), (const 'text'), (const null).
/// (acc) is the aggregate accumulator, (count) the number of step calls made
/// so far on the current aggregate context.
class ScriptedExpr {
 public:
  enum class Op { kConst, kArg, kAcc, kCount, kAdd, kSub, kMul, kDiv, kNeg, kAbs, kLt, kLe, kEq, kIf, kToReal, kIsNull };

  static ScriptedExpr constant(ValueCell v);
  static ScriptedExpr arg(int index);
  static ScriptedExpr acc();
  static ScriptedExpr count();
  static ScriptedExpr unary(Op op, ScriptedExpr operand);
  static ScriptedExpr binary(Op op, ScriptedExpr lhs, ScriptedExpr rhs);
  static ScriptedExpr if_then_else(ScriptedExpr cond, ScriptedExpr then_expr, ScriptedExpr else_expr);

  /// Throws SyntaxError.
  static ScriptedExpr parse(std::string_view text);

  Op op() const { return op_; }
  const ValueCell &value() const { return value_; }
  int arg_index() const { return arg_; }
  const std::vector<ScriptedExpr> &children() const { return children_; }

  /// Largest (arg i) index referenced, or -1.
  int max_arg_index() const;
  std::size_t node_count() const;
  std::string to_string() const;

 private:
  Op op_ = Op::kConst;
  ValueCell value_;
  int arg_ = 0;
  std::vector<ScriptedExpr> children_;
};

/// Arithmetic nodes propagate NULL and switch to reals on overflow; division
/// by zero yields NULL.
ValueCell eval_scripted(const ScriptedExpr &expr, std::span<const ValueCell> args, const ValueCell *acc = nullptr,
                        std::int64_t count = 0);

using NativeFunction = std::function<ValueCell(std::span<const ValueCell>)>;

struct HostFunction {
  std::string name;
  int n_args = 0;
  std::variant<NativeFunction, ScriptedExpr> impl;

  bool scripted() const { return std::holds_alternative<ScriptedExpr>(impl); }
};

using NativeStep = std::function<ValueCell(const ValueCell &acc, std::span<const ValueCell> args)>;
using NativeFinalize = std::function<ValueCell(const ValueCell &acc, std::int64_t count)>;

/// Step folds one row into the accumulator; finalize maps the accumulator
/// to the result. Each query execution starts from `init`.
struct HostAggregate {
  std::string name;
  int n_args = 0;
  ValueCell init = ValueCell::integer(0);
  std::variant<NativeStep, ScriptedExpr> step;
  std::variant<NativeFinalize, ScriptedExpr> finalize = ScriptedExpr::acc();
  /// Rows with a NULL argument are not passed to step (SQL convention for
  /// the built-ins).
  bool skip_nulls = false;
  /// Engine-provided aggregate: its calls are not host callbacks.
  bool builtin = false;

  bool scripted() const {
    return std::holds_alternative<ScriptedExpr>(step) && std::holds_alternative<ScriptedExpr>(finalize);
  }
};

/// Direct invocation, used by the interpreter and the trace executor alike.
ValueCell invoke_function(const HostFunction &fn, std::span<const ValueCell> args);
ValueCell invoke_step(const HostAggregate &agg, const ValueCell &acc, std::span<const ValueCell> args,
                      std::int64_t count);
ValueCell invoke_finalize(const HostAggregate &agg, const ValueCell &acc, std::int64_t count);

/// sum/1, avg/1, count/1 and count/0 as scripted aggregates.
std::vector<HostAggregate> builtin_aggregates();

/// Name resolution used by the code generator.
class FunctionCatalog {
 public:
  virtual ~FunctionCatalog() = default;
  virtual std::shared_ptr<const HostFunction> find_function(std::string_view name, int n_args) const = 0;
  virtual std::shared_ptr<const HostAggregate> find_aggregate(std::string_view name, int n_args) const = 0;
};

}  // namespace sqvm
