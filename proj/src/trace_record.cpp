#include <array>

#include "sqvm/functions.hpp"
#include "sqvm/trace.hpp"
#include "sqvm/vm.hpp"

namespace sqvm {

namespace {

constexpr std::array<std::string_view, 4> kModeNames = {"interp", "full", "no-inline", "no-flags"};

ArithKind arith_kind(Opcode op) {
  switch (op) {
    case Opcode::kAdd: return ArithKind::kAdd;
    case Opcode::kSub: return ArithKind::kSub;
    default: return ArithKind::kMul;
  }
}

bool is_compare(Opcode op) {
  switch (op) {
    case Opcode::kEq:
    case Opcode::kNe:
    case Opcode::kLt:
    case Opcode::kLe:
    case Opcode::kGt:
    case Opcode::kGe: return true;
    default: return false;
  }
}

bool lone_int(const ValueCell &c) { return c.has(kFlagInt) && !c.has(kFlagReal); }

}  // namespace

std::string_view mode_name(ExecMode mode) { return kModeNames[static_cast<int>(mode)]; }

std::optional<ExecMode> parse_mode(std::string_view name) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i) {
    if (kModeNames[i] == name) return static_cast<ExecMode>(i);
  }
  return std::nullopt;
}

std::string_view trace_op_name(TraceOpKind kind) {
  switch (kind) {
    case TraceOpKind::kReadColumn: return "read_column";
    case TraceOpKind::kCursorNext: return "cursor_next";
    case TraceOpKind::kReadFlags: return "read_flags";
    case TraceOpKind::kReadInt: return "read_int";
    case TraceOpKind::kReadReal: return "read_real";
    case TraceOpKind::kReadStr: return "read_str";
    case TraceOpKind::kWriteCell: return "write_cell";
    case TraceOpKind::kArith: return "arith";
    case TraceOpKind::kCompare: return "compare";
    case TraceOpKind::kAffinityReal: return "affinity_real";
    case TraceOpKind::kPackRecord: return "pack_record";
    case TraceOpKind::kCallOpaque: return "call_opaque";
    case TraceOpKind::kInlineEval: return "inline_eval";
    case TraceOpKind::kEmitRow: return "emit_row";
    case TraceOpKind::kGuardValue: return "guard_value";
    case TraceOpKind::kGuardTrue: return "guard_true";
    case TraceOpKind::kGuardFalse: return "guard_false";
    case TraceOpKind::kGuardNoOverflow: return "guard_no_overflow";
    case TraceOpKind::kGuardFlags: return "guard_flags";
  }
  return "?";
}

bool is_guard(TraceOpKind kind) {
  switch (kind) {
    case TraceOpKind::kGuardValue:
    case TraceOpKind::kGuardTrue:
    case TraceOpKind::kGuardFalse:
    case TraceOpKind::kGuardNoOverflow:
    case TraceOpKind::kGuardFlags: return true;
    default: return false;
  }
}

std::string_view trace_state_name(TraceState state) {
  switch (state) {
    case TraceState::kRecorded: return "recorded";
    case TraceState::kOptimized: return "optimized";
    case TraceState::kInvalid: return "invalid";
  }
  return "?";
}

JitEntry::JitEntry(std::shared_ptr<const Program> p) : program(std::move(p)) {
  const std::size_t n = program->instructions.size();
  counters.assign(n, 0);
  blacklisted.assign(n, 0);
  traces.resize(n);
  watch.assign(n, 0);
}

std::vector<int> opaque_mutations(const Instruction &ins) {
  switch (ins.opcode) {
    case Opcode::kString:
    case Opcode::kVariable:
    case Opcode::kNewRowid:
    case Opcode::kInteger:
    case Opcode::kReal:
    case Opcode::kNull: return {ins.p2};
    case Opcode::kFunction:
    case Opcode::kAdd:
    case Opcode::kSub:
    case Opcode::kMul:
    case Opcode::kMakeRecord:
    case Opcode::kColumn: return {ins.p3};
    case Opcode::kRealAffinity: return {ins.p1};
    default: return {};
  }
}

TraceRecorder::TraceRecorder(std::shared_ptr<const Program> program, int header_pc, ExecMode mode) {
  trace_.program = std::move(program);
  trace_.header_pc = header_pc;
  trace_.mode = mode;
  trace_.state = TraceState::kRecorded;
}

TraceOp &TraceRecorder::push(TraceOpKind kind, int pc) {
  TraceOp &op = trace_.recorded.emplace_back();
  op.kind = kind;
  op.origin_pc = pc;
  return op;
}

int TraceRecorder::read_flags_guarded(int reg, Flags flags, int pc) {
  const int slot = new_slot();
  TraceOp &read = push(TraceOpKind::kReadFlags, pc);
  read.result = slot;
  read.reg = reg;
  TraceOp &guard = push(TraceOpKind::kGuardFlags, pc);
  guard.inputs = {slot};
  guard.reg = reg;
  guard.expected = flags;
  guard.exit_pc = pc;
  return slot;
}

int TraceRecorder::read_payload(int reg, const ValueCell &cell, int pc) {
  if (cell.is_null()) return -1;
  TraceOpKind kind = lone_int(cell) ? TraceOpKind::kReadInt
                     : cell.has(kFlagReal) ? TraceOpKind::kReadReal
                                           : TraceOpKind::kReadStr;
  const int slot = new_slot();
  TraceOp &op = push(kind, pc);
  op.result = slot;
  op.reg = reg;
  return slot;
}

TraceRecorder::Status TraceRecorder::abort(std::string reason) {
  abort_reason_ = std::move(reason);
  return Status::kAborted;
}

void TraceRecorder::before(const Statement &stmt, int pc) {
  const Instruction &ins = trace_.program->instructions[pc];
  const auto &regs = stmt.regs_;
  inputs_.clear();
  auto take = [&](int first, int n) { inputs_.assign(regs.begin() + first, regs.begin() + first + n); };
  switch (ins.opcode) {
    case Opcode::kEq:
    case Opcode::kNe:
    case Opcode::kLt:
    case Opcode::kLe:
    case Opcode::kGt:
    case Opcode::kGe: inputs_ = {regs[ins.p1], regs[ins.p3]}; break;
    case Opcode::kAdd:
    case Opcode::kSub:
    case Opcode::kMul: inputs_ = {regs[ins.p1], regs[ins.p2]}; break;
    case Opcode::kRealAffinity:
    case Opcode::kIsNull:
    case Opcode::kNotNull:
    case Opcode::kIfPos: take(ins.p1, 1); break;
    case Opcode::kResultRow:
    case Opcode::kMakeRecord: take(ins.p1, ins.p2); break;
    case Opcode::kFunction:
    case Opcode::kAggStep: take(ins.p2, ins.p5); break;
    default: break;
  }
}

TraceRecorder::Status TraceRecorder::after(const Statement &stmt, int pc, int next_pc, bool error) {
  if (error) {
    abort_reason_ = "error during recording";
    return Status::kCancelled;
  }
  const Instruction &ins = trace_.program->instructions[pc];
  const ExecMode mode = trace_.mode;
  if (next_pc >= 0 && next_pc <= pc && pc != trace_.header_pc) {
    return abort("back-jump from pc " + std::to_string(pc) + " inside the loop");
  }
  trace_.visited_pcs.push_back(pc);

  switch (ins.opcode) {
    case Opcode::kNext: {
      if (pc != trace_.header_pc) return abort("inner loop Next at pc " + std::to_string(pc));
      if (next_pc != ins.p2) {
        abort_reason_ = "loop exited while recording";
        return Status::kCancelled;
      }
      const int s = new_slot();
      TraceOp &next = push(TraceOpKind::kCursorNext, pc);
      next.result = s;
      next.cursor = ins.p1;
      TraceOp &guard = push(TraceOpKind::kGuardValue, pc);
      guard.inputs = {s};
      guard.expected = 1;
      guard.exit_pc = pc + 1;
      guard.loop_exit = true;
      return Status::kContinue;
    }
    case Opcode::kColumn: {
      const int s = new_slot();
      TraceOp &read = push(TraceOpKind::kReadColumn, pc);
      read.result = s;
      read.cursor = ins.p1;
      read.column = ins.p2;
      read.reg = ins.p3;
      TraceOp &guard = push(TraceOpKind::kGuardValue, pc);
      guard.inputs = {s};
      guard.reg = ins.p3;
      guard.expected = encode_column_result(kStatusOk, stmt.regs_[ins.p3].flags());
      guard.exit_pc = pc + 1;
      return Status::kContinue;
    }
    case Opcode::kRealAffinity: {
      const int s = new_slot();
      TraceOp &read = push(TraceOpKind::kReadFlags, pc);
      read.result = s;
      read.reg = ins.p1;
      TraceOp &aff = push(TraceOpKind::kAffinityReal, pc);
      aff.inputs = {s};
      aff.reg = ins.p1;
      return Status::kContinue;
    }
    case Opcode::kResultRow: {
      std::vector<int> slots;
      for (int i = 0; i < ins.p2; ++i) {
        read_flags_guarded(ins.p1 + i, inputs_[i].flags(), pc);
        slots.push_back(read_payload(ins.p1 + i, inputs_[i], pc));
      }
      TraceOp &emit = push(TraceOpKind::kEmitRow, pc);
      emit.inputs = std::move(slots);
      emit.reg = ins.p1;
      emit.count = ins.p2;
      trace_.emits_row = true;
      return Status::kFinished;
    }
    case Opcode::kIsNull:
    case Opcode::kNotNull: read_flags_guarded(ins.p1, inputs_[0].flags(), pc); return Status::kContinue;
    case Opcode::kIfPos: {
      read_flags_guarded(ins.p1, inputs_[0].flags(), pc);
      if (lone_int(inputs_[0])) {
        const int v = read_payload(ins.p1, inputs_[0], pc);
        const int c = new_slot();
        TraceOp &cmp = push(TraceOpKind::kCompare, pc);
        cmp.result = c;
        cmp.inputs = {v, -1};
        cmp.constant = ValueCell::integer(0);
        cmp.sub = static_cast<int>(Opcode::kGt);
        const bool jumped = next_pc == ins.p2;
        if (ins.p2 != pc + 1) {
          TraceOp &guard = push(jumped ? TraceOpKind::kGuardTrue : TraceOpKind::kGuardFalse, pc);
          guard.inputs = {c};
          guard.exit_pc = jumped ? pc + 1 : ins.p2;
        }
      }
      return Status::kContinue;
    }
    case Opcode::kInteger:
    case Opcode::kReal:
    case Opcode::kNull: {
      TraceOp &w = push(TraceOpKind::kWriteCell, pc);
      w.reg = ins.p2;
      w.constant = stmt.regs_[ins.p2];
      return Status::kContinue;
    }
    case Opcode::kString:
    case Opcode::kVariable:
    case Opcode::kNewRowid:
    case Opcode::kInsert: {
      TraceOp &call = push(TraceOpKind::kCallOpaque, pc);
      call.mutated = opaque_mutations(ins);
      return Status::kContinue;
    }
    case Opcode::kAdd:
    case Opcode::kSub:
    case Opcode::kMul: {
      const ValueCell &a = inputs_[0];
      const ValueCell &b = inputs_[1];
      read_flags_guarded(ins.p1, a.flags(), pc);
      read_flags_guarded(ins.p2, b.flags(), pc);
      if (a.is_null() || b.is_null()) {
        TraceOp &w = push(TraceOpKind::kWriteCell, pc);
        w.reg = ins.p3;
        w.constant = ValueCell::null();
        return Status::kContinue;
      }
      if (!a.is_numeric() || !b.is_numeric()) {
        TraceOp &call = push(TraceOpKind::kCallOpaque, pc);
        call.mutated = opaque_mutations(ins);
        return Status::kContinue;
      }
      const bool int_int = lone_int(a) && lone_int(b);
      if (int_int && !lone_int(stmt.regs_[ins.p3])) return abort("integer overflow while recording");
      const int sa = read_payload(ins.p1, a, pc);
      const int sb = read_payload(ins.p2, b, pc);
      const int r = new_slot();
      TraceOp &op = push(TraceOpKind::kArith, pc);
      op.result = r;
      op.inputs = {sa, sb};
      op.reg = ins.p3;
      op.sub = static_cast<int>(arith_kind(ins.opcode));
      op.result_flags = stmt.regs_[ins.p3].flags();
      if (int_int) {
        TraceOp &guard = push(TraceOpKind::kGuardNoOverflow, pc);
        guard.exit_pc = pc;
      }
      return Status::kContinue;
    }
    case Opcode::kFunction: {
      const auto &ref = std::get<FunctionRef>(ins.p4);
      if (ref.function && ref.function->scripted() && mode != ExecMode::kNoInline) {
        std::vector<int> args;
        for (int i = 0; i < ins.p5; ++i) {
          read_flags_guarded(ins.p2 + i, inputs_[i].flags(), pc);
          args.push_back(read_payload(ins.p2 + i, inputs_[i], pc));
        }
        TraceOp &op = push(TraceOpKind::kInlineEval, pc);
        op.inputs = std::move(args);
        op.reg = ins.p3;
        return Status::kContinue;
      }
      TraceOp &call = push(TraceOpKind::kCallOpaque, pc);
      call.mutated = opaque_mutations(ins);
      return Status::kContinue;
    }
    case Opcode::kAggStep: {
      const auto &ref = std::get<FunctionRef>(ins.p4);
      if (ref.aggregate && std::holds_alternative<ScriptedExpr>(ref.aggregate->step) &&
          mode != ExecMode::kNoInline) {
        bool any_null = false;
        for (int i = 0; i < ins.p5; ++i) {
          read_flags_guarded(ins.p2 + i, inputs_[i].flags(), pc);
          any_null = any_null || inputs_[i].is_null();
        }
        if (ref.aggregate->skip_nulls && any_null) return Status::kContinue;
        std::vector<int> args;
        for (int i = 0; i < ins.p5; ++i) args.push_back(read_payload(ins.p2 + i, inputs_[i], pc));
        TraceOp &op = push(TraceOpKind::kInlineEval, pc);
        op.inputs = std::move(args);
        op.reg = ins.p3;
        return Status::kContinue;
      }
      TraceOp &call = push(TraceOpKind::kCallOpaque, pc);
      call.mutated = opaque_mutations(ins);
      return Status::kContinue;
    }
    case Opcode::kMakeRecord: {
      for (int i = 0; i < ins.p2; ++i) read_flags_guarded(ins.p1 + i, inputs_[i].flags(), pc);
      TraceOp &op = push(TraceOpKind::kPackRecord, pc);
      op.reg = ins.p1;
      op.count = ins.p2;
      op.dest = ins.p3;
      return Status::kContinue;
    }
    case Opcode::kGoto: return Status::kContinue;
    default:
      if (is_compare(ins.opcode)) {
        const ValueCell &a = inputs_[0];
        const ValueCell &b = inputs_[1];
        read_flags_guarded(ins.p1, a.flags(), pc);
        read_flags_guarded(ins.p3, b.flags(), pc);
        if (a.is_null() || b.is_null() || ins.p2 == pc + 1) return Status::kContinue;
        const int sa = read_payload(ins.p1, a, pc);
        const int sb = read_payload(ins.p3, b, pc);
        const int c = new_slot();
        TraceOp &cmp = push(TraceOpKind::kCompare, pc);
        cmp.result = c;
        cmp.inputs = {sa, sb};
        cmp.sub = static_cast<int>(ins.opcode);
        const bool jumped = next_pc == ins.p2;
        TraceOp &guard = push(jumped ? TraceOpKind::kGuardTrue : TraceOpKind::kGuardFalse, pc);
        guard.inputs = {c};
        guard.exit_pc = jumped ? pc + 1 : ins.p2;
        return Status::kContinue;
      }
      return abort("opcode " + std::string(opcode_name(ins.opcode)) + " cannot be traced");
  }
}

}  // namespace sqvm
