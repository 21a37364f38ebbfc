#include <new>

#include "sqvm/connection.hpp"
#include "sqvm/errors.hpp"
#include "sqvm/trace.hpp"
#include "sqvm/vm.hpp"

namespace sqvm {

struct TraceRuntime {
  static TraceOutcome run(Statement &stmt, const Trace &trace, bool use_recorded);
  static bool inline_eval(Statement &stmt, const TraceOp &op, std::span<const ValueCell> args);
};

namespace {

bool compare_holds(Opcode op, int c) {
  switch (op) {
    case Opcode::kEq: return c == 0;
    case Opcode::kNe: return c != 0;
    case Opcode::kLt: return c < 0;
    case Opcode::kLe: return c <= 0;
    case Opcode::kGt: return c > 0;
    default: return c >= 0;
  }
}

}  // namespace

bool TraceRuntime::inline_eval(Statement &stmt, const TraceOp &op, std::span<const ValueCell> args) {
  const Instruction &ins = stmt.program_->instructions[op.origin_pc];
  const auto &ref = std::get<FunctionRef>(ins.p4);
  try {
    if (ins.opcode == Opcode::kFunction) {
      stmt.conn_->count_crossing(args.size() + 1);
      stmt.regs_[op.reg] = eval_scripted(std::get<ScriptedExpr>(ref.function->impl), args);
      return true;
    }
    const HostAggregate &agg = *ref.aggregate;
    AggContext &ctx = stmt.agg_slot(op.reg);
    if (!ctx.initialized) {
      ctx.acc = agg.init;
      ctx.count = 0;
      ctx.initialized = true;
    }
    ++ctx.count;
    if (!agg.builtin) stmt.conn_->count_crossing(args.size() + 1);
    ctx.acc = eval_scripted(std::get<ScriptedExpr>(agg.step), args, &ctx.acc, ctx.count);
    return true;
  } catch (const std::bad_alloc &) {
    stmt.no_mem("out of memory in " + ref.name);
  } catch (const std::exception &e) {
    stmt.abort_due_to_error(ref.name + ": " + e.what());
  }
  return false;
}

TraceOutcome TraceRuntime::run(Statement &stmt, const Trace &trace, bool use_recorded) {
  const std::vector<TraceOp> &ops = use_recorded ? trace.recorded : trace.ops;
  ExecStats &stats = stmt.conn_->stats_;
  std::vector<ValueCell> slots(static_cast<std::size_t>(trace.n_slots));
  std::vector<ValueCell> args;
  bool overflow = false;

  auto value = [&](const TraceOp &op, int i) -> const ValueCell & {
    const int s = op.inputs[i];
    return s < 0 ? op.constant : slots[s];
  };
  auto error = [&] { return TraceOutcome{TraceOutcome::kError, stmt.pc_, -1}; };

  for (std::size_t idx = 0; idx < ops.size(); ++idx) {
    const TraceOp &op = ops[idx];
    ++stats.trace_ops_executed;
    bool pass = true;
    switch (op.kind) {
      case TraceOpKind::kReadColumn: {
        auto &cur = stmt.cursors_[op.cursor];
        if (!cur) {
          stmt.error_exit(ErrorKind::kUsage, "cursor " + std::to_string(op.cursor) + " is not open");
          return error();
        }
        try {
          ColumnRead r = cur->column(static_cast<std::size_t>(op.column));
          stmt.regs_[op.reg] = std::move(r.cell);
          slots[op.result] = ValueCell::integer(r.encoded);
        } catch (const UsageError &e) {
          stmt.error_exit(ErrorKind::kUsage, e.what());
          return error();
        }
        break;
      }
      case TraceOpKind::kCursorNext: {
        auto &cur = stmt.cursors_[op.cursor];
        if (!cur) {
          stmt.error_exit(ErrorKind::kUsage, "cursor " + std::to_string(op.cursor) + " is not open");
          return error();
        }
        slots[op.result] = ValueCell::integer(cur->next() ? 1 : 0);
        break;
      }
      case TraceOpKind::kReadFlags:
        ++stats.read_flags_executed;
        slots[op.result] = ValueCell::integer(stmt.regs_[op.reg].flags());
        break;
      case TraceOpKind::kReadInt:
      case TraceOpKind::kReadReal:
      case TraceOpKind::kReadStr: slots[op.result] = stmt.regs_[op.reg]; break;
      case TraceOpKind::kWriteCell: stmt.regs_[op.reg] = op.constant; break;
      case TraceOpKind::kArith: {
        const ValueCell &a = value(op, 0);
        const ValueCell &b = value(op, 1);
        ValueCell r = arith_with_overflow(static_cast<ArithKind>(op.sub), to_numeric(a), to_numeric(b));
        const bool ints = a.has(kFlagInt) && !a.has(kFlagReal) && b.has(kFlagInt) && !b.has(kFlagReal);
        overflow = ints && r.has(kFlagReal);
        if (!overflow) stmt.regs_[op.reg] = r;
        slots[op.result] = std::move(r);
        break;
      }
      case TraceOpKind::kCompare: {
        const int c = compare_values(value(op, 0), value(op, 1));
        slots[op.result] = ValueCell::integer(compare_holds(static_cast<Opcode>(op.sub), c) ? 1 : 0);
        break;
      }
      case TraceOpKind::kAffinityReal: stmt.regs_[op.reg] = apply_real_affinity(stmt.regs_[op.reg]); break;
      case TraceOpKind::kPackRecord: {
        const Instruction &ins = stmt.program_->instructions[op.origin_pc];
        if (stmt.op_make_record(ins, op.origin_pc).kind == Statement::Outcome::kError) return error();
        break;
      }
      case TraceOpKind::kCallOpaque: {
        const Opcode opc = stmt.program_->instructions[op.origin_pc].opcode;
        if (opc == Opcode::kFunction || opc == Opcode::kAggStep) ++stats.opaque_calls_executed;
        if (stmt.exec(op.origin_pc).kind == Statement::Outcome::kError) return error();
        break;
      }
      case TraceOpKind::kInlineEval: {
        args.clear();
        for (std::size_t i = 0; i < op.inputs.size(); ++i) args.push_back(value(op, static_cast<int>(i)));
        if (!inline_eval(stmt, op, args)) return error();
        break;
      }
      case TraceOpKind::kEmitRow: {
        stmt.row_.clear();
        for (std::size_t i = 0; i < op.inputs.size(); ++i) stmt.row_.push_back(value(op, static_cast<int>(i)));
        stmt.pc_ = op.origin_pc + 1;
        return {TraceOutcome::kEmittedRow, stmt.pc_, -1};
      }
      case TraceOpKind::kGuardValue:
      case TraceOpKind::kGuardFlags: pass = value(op, 0).int_val() == op.expected; break;
      case TraceOpKind::kGuardTrue: pass = value(op, 0).int_val() != 0; break;
      case TraceOpKind::kGuardFalse: pass = value(op, 0).int_val() == 0; break;
      case TraceOpKind::kGuardNoOverflow: pass = !overflow; break;
    }
    if (!pass) return {TraceOutcome::kSideExit, op.exit_pc, static_cast<int>(idx)};
  }
  stmt.pc_ = trace.header_pc;
  return {TraceOutcome::kContinueLoop, trace.header_pc, -1};
}

TraceOutcome execute_trace(Statement &stmt, const Trace &trace, bool use_recorded) {
  return TraceRuntime::run(stmt, trace, use_recorded);
}

}  // namespace sqvm
