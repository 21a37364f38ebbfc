#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "sqvm/trace.hpp"

namespace sqvm {

namespace {

bool removable_when_dead(TraceOpKind kind) {
  switch (kind) {
    case TraceOpKind::kReadFlags:
    case TraceOpKind::kReadInt:
    case TraceOpKind::kReadReal:
    case TraceOpKind::kReadStr:
    case TraceOpKind::kCompare: return true;
    default: return false;
  }
}

/// Passes 1-3: flags cache, guard folding and RealAffinity removal.
std::vector<TraceOp> flags_passes(const std::vector<TraceOp> &ops) {
  std::map<int, Flags> known;        // register -> flags
  std::map<int, Flags> slot_flags;   // READ_FLAGS slot replaced by a known value
  std::map<int, int> flags_slot_reg; // READ_FLAGS slot -> register
  std::map<int, int> column_slot_reg;
  std::vector<TraceOp> out;
  out.reserve(ops.size());

  for (const TraceOp &src : ops) {
    TraceOp op = src;
    switch (op.kind) {
      case TraceOpKind::kReadColumn:
        known.erase(op.reg);
        column_slot_reg[op.result] = op.reg;
        break;
      case TraceOpKind::kGuardValue:
        if (auto it = column_slot_reg.find(op.inputs[0]); it != column_slot_reg.end()) {
          known[it->second] = decode_column_result(static_cast<std::uint32_t>(op.expected)).flags;
        }
        break;
      case TraceOpKind::kReadFlags:
        flags_slot_reg[op.result] = op.reg;
        if (auto it = known.find(op.reg); it != known.end()) {
          slot_flags[op.result] = it->second;
          continue;
        }
        break;
      case TraceOpKind::kGuardFlags: {
        const int slot = op.inputs[0];
        if (auto it = slot_flags.find(slot); it != slot_flags.end()) {
          if (it->second == op.expected) continue;
          // The path contradicts itself; keep a guard that always fails.
          op.inputs = {-1};
          op.constant = ValueCell::integer(it->second);
        }
        if (auto it = flags_slot_reg.find(slot); it != flags_slot_reg.end()) {
          known[it->second] = static_cast<Flags>(op.expected);
        }
        break;
      }
      case TraceOpKind::kAffinityReal: {
        auto it = known.find(op.reg);
        if (it == known.end()) break;
        if (it->second != kFlagInt) continue;
        op.inputs.clear();
        it->second = kFlagReal;
        break;
      }
      case TraceOpKind::kWriteCell: known[op.reg] = op.constant.flags(); break;
      case TraceOpKind::kArith: known[op.reg] = op.result_flags; break;
      case TraceOpKind::kCallOpaque:
        for (int r : op.mutated) known.erase(r);
        break;
      case TraceOpKind::kInlineEval: known.erase(op.reg); break;
      case TraceOpKind::kPackRecord: known[op.dest] = kFlagBlob; break;
      default: break;
    }
    // An AFFINITY_REAL kept without a known flags value still converts
    // conditionally, so the register's flags become unknown.
    if (op.kind == TraceOpKind::kAffinityReal && !op.inputs.empty()) known.erase(op.reg);
    out.push_back(std::move(op));
  }
  return out;
}

std::vector<TraceOp> dead_value_elimination(std::vector<TraceOp> ops) {
  for (;;) {
    std::set<int> used;
    for (const TraceOp &op : ops) used.insert(op.inputs.begin(), op.inputs.end());
    std::vector<TraceOp> kept;
    kept.reserve(ops.size());
    for (TraceOp &op : ops) {
      if (removable_when_dead(op.kind) && op.result >= 0 && !used.count(op.result)) continue;
      kept.push_back(std::move(op));
    }
    if (kept.size() == ops.size()) return kept;
    ops = std::move(kept);
  }
}

std::string slot_text(const TraceOp &op, int slot) {
  if (slot < 0) return render_sql(op.constant);
  return "s" + std::to_string(slot);
}

std::string flags_hex(std::int64_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%04llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string join_inputs(const TraceOp &op) {
  std::string s;
  for (std::size_t i = 0; i < op.inputs.size(); ++i) {
    if (i) s += ", ";
    s += slot_text(op, op.inputs[i]);
  }
  return s;
}

std::string render_op(const TraceOp &op) {
  std::ostringstream o;
  if (op.result >= 0) o << "s" << op.result << " = ";
  o << trace_op_name(op.kind);
  switch (op.kind) {
    case TraceOpKind::kReadColumn: o << "(c" << op.cursor << ", " << op.column << ") -> r" << op.reg; break;
    case TraceOpKind::kCursorNext: o << "(c" << op.cursor << ")"; break;
    case TraceOpKind::kReadFlags:
    case TraceOpKind::kReadInt:
    case TraceOpKind::kReadReal:
    case TraceOpKind::kReadStr: o << "(r" << op.reg << ")"; break;
    case TraceOpKind::kWriteCell: o << "(r" << op.reg << ", " << render_sql(op.constant) << ")"; break;
    case TraceOpKind::kArith: {
      static constexpr const char *kNames[] = {"add", "sub", "mul"};
      o << "_" << kNames[op.sub] << "(" << join_inputs(op) << ") -> r" << op.reg;
      break;
    }
    case TraceOpKind::kCompare:
      o << "_" << opcode_name(static_cast<Opcode>(op.sub)) << "(" << join_inputs(op) << ")";
      break;
    case TraceOpKind::kAffinityReal:
      o << "(r" << op.reg;
      if (!op.inputs.empty()) o << ", " << join_inputs(op);
      o << ")";
      break;
    case TraceOpKind::kPackRecord: o << "(r" << op.reg << ", " << op.count << ") -> r" << op.dest; break;
    case TraceOpKind::kCallOpaque: {
      o << "(pc" << op.origin_pc << ")";
      if (!op.mutated.empty()) {
        o << " mutates";
        for (int r : op.mutated) o << " r" << r;
      }
      break;
    }
    case TraceOpKind::kInlineEval: o << "(" << join_inputs(op) << ") -> r" << op.reg; break;
    case TraceOpKind::kEmitRow: o << "(r" << op.reg << ", " << op.count << "; " << join_inputs(op) << ")"; break;
    case TraceOpKind::kGuardValue:
    case TraceOpKind::kGuardTrue:
    case TraceOpKind::kGuardFalse:
      o << "(" << join_inputs(op);
      if (op.kind == TraceOpKind::kGuardValue) o << ", " << op.expected;
      o << ") exit=" << op.exit_pc;
      break;
    case TraceOpKind::kGuardNoOverflow: o << "() exit=" << op.exit_pc; break;
    case TraceOpKind::kGuardFlags:
      o << "(" << join_inputs(op) << ", " << flags_hex(op.expected) << ") exit=" << op.exit_pc;
      break;
  }
  return o.str();
}

}  // namespace

Trace optimize_trace(const Trace &trace, ExecMode mode) {
  Trace out = trace;
  std::vector<TraceOp> ops = trace.recorded;
  if (mode != ExecMode::kNoFlags) ops = flags_passes(ops);
  out.ops = dead_value_elimination(std::move(ops));
  out.state = TraceState::kOptimized;
  out.mode = mode;
  out.guard_fail_counts.assign(out.ops.size(), 0);
  return out;
}

std::string dump_ops(const std::vector<TraceOp> &ops) {
  std::string s;
  for (const TraceOp &op : ops) s += render_op(op) + "\n";
  return s;
}

std::string dump_trace(const Trace &trace) {
  std::ostringstream o;
  o << "# trace header_pc=" << trace.header_pc << " mode=" << mode_name(trace.mode)
    << " state=" << trace_state_name(trace.state) << "\n";
  const std::vector<TraceOp> &ops = trace.state == TraceState::kRecorded ? trace.recorded : trace.ops;
  std::size_t j = 0;
  for (int pc : trace.visited_pcs) {
    std::string_view name = "?";
    if (trace.program && pc < static_cast<int>(trace.program->instructions.size())) {
      name = opcode_name(trace.program->instructions[pc].opcode);
    }
    o << "# opcode " << name << "\n";
    while (j < ops.size() && ops[j].origin_pc == pc) o << render_op(ops[j++]) << "\n";
  }
  for (; j < ops.size(); ++j) o << render_op(ops[j]) << "\n";
  o << "ops: " << trace.recorded.size() << " -> " << trace.ops.size() << "\n";
  return o.str();
}

}  // namespace sqvm
