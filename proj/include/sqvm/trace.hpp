#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sqvm/program.hpp"
#include "sqvm/value.hpp"

namespace sqvm {

class Statement;

enum class ExecMode { kInterp, kFull, kNoInline, kNoFlags };

std::string_view mode_name(ExecMode mode);
std::optional<ExecMode> parse_mode(std::string_view name);

enum class TraceOpKind : std::uint8_t {
  kReadColumn,
  kCursorNext,
  kReadFlags,
  kReadInt,
  kReadReal,
  kReadStr,
  kWriteCell,
  kArith,
  kCompare,
  kAffinityReal,
  kPackRecord,
  kCallOpaque,
  kInlineEval,
  kEmitRow,
  kGuardValue,
  kGuardTrue,
  kGuardFalse,
  kGuardNoOverflow,
  kGuardFlags,
};

std::string_view trace_op_name(TraceOpKind kind);
bool is_guard(TraceOpKind kind);

/// One operation of the trace IR. Values flow through numbered slots; the
/// interpreter's registers and cursors are the only other state.
struct TraceOp {
  TraceOpKind kind = TraceOpKind::kReadFlags;
  int origin_pc = 0;
  /// Slot written by this op, or -1.
  int result = -1;
  /// Slots read by this op; -1 stands for `constant`. AFFINITY_REAL with
  /// no input converts unconditionally.
  std::vector<int> inputs;
  /// Register operand (destination for writes, source for reads, first
  /// register for EMIT_ROW and PACK_RECORD).
  int reg = 0;
  int cursor = 0;
  int column = 0;
  /// PACK_RECORD destination register.
  int dest = 0;
  /// EMIT_ROW / PACK_RECORD width.
  int count = 0;
  /// ARITH: ArithKind. COMPARE: Opcode of the comparison (kGt for IfPos).
  int sub = 0;
  /// Guards: the recorded value (encoded Column result, flags bitmask or
  /// boolean).
  std::int64_t expected = 0;
  int exit_pc = -1;
  /// The guard that ends the loop when the cursor runs out; its failures are
  /// the normal way out and do not count towards invalidation.
  bool loop_exit = false;
  ValueCell constant;
  /// CALL_OPAQUE: registers whose flags the call may change.
  std::vector<int> mutated;
  /// ARITH: flags of the result on the recorded path.
  Flags result_flags = 0;
};

enum class TraceState { kRecorded, kOptimized, kInvalid };

std::string_view trace_state_name(TraceState state);

struct Trace {
  std::shared_ptr<const Program> program;
  int header_pc = 0;
  ExecMode mode = ExecMode::kFull;
  TraceState state = TraceState::kRecorded;
  /// Ops as recorded, kept for dumps and twin execution.
  std::vector<TraceOp> recorded;
  /// Ops as executed (equal to `recorded` until optimized).
  std::vector<TraceOp> ops;
  int n_slots = 0;
  /// Program counters visited while recording, in order.
  std::vector<int> visited_pcs;
  /// Ends with EMIT_ROW (true) or jumps back to the header (false).
  bool emits_row = false;
  std::vector<int> guard_fail_counts;
};

/// Flags-cache pass, guard folding, RealAffinity removal and dead-value
/// elimination. ExecMode::kNoFlags runs only dead-value elimination.
Trace optimize_trace(const Trace &trace, ExecMode mode);

/// `# opcode <Name>` sections in visit order and an `ops: U -> O` footer.
std::string dump_trace(const Trace &trace);
std::string dump_ops(const std::vector<TraceOp> &ops);

struct TraceOutcome {
  enum Kind { kContinueLoop, kSideExit, kEmittedRow, kError } kind = kContinueLoop;
  int pc = 0;
  /// Index of the failed guard for kSideExit.
  int guard = -1;
};

/// Runs one pass over the trace against a live statement. `use_recorded`
/// selects the unoptimized op list (twin-execution tests). Guard failure
/// bookkeeping is left to the caller.
TraceOutcome execute_trace(Statement &stmt, const Trace &trace, bool use_recorded = false);

/// Per-program hot-loop and trace state, shared by all statements executing
/// the same Program.
struct JitEntry {
  explicit JitEntry(std::shared_ptr<const Program> p);

  std::shared_ptr<const Program> program;
  std::vector<std::uint32_t> counters;
  std::vector<std::uint8_t> blacklisted;
  std::vector<std::shared_ptr<Trace>> traces;
  /// Set for pcs that need a check on arrival: a pending header or an
  /// attached trace.
  std::vector<std::uint8_t> watch;
  int pending = -1;
};

/// Registers whose flags an opaque call may change, by the role of the
/// operand that names them.
std::vector<int> opaque_mutations(const Instruction &ins);

/// Records one loop iteration as the interpreter executes it.
class TraceRecorder {
 public:
  enum class Status { kContinue, kFinished, kAborted, kCancelled };

  TraceRecorder(std::shared_ptr<const Program> program, int header_pc, ExecMode mode);

  /// Called before the interpreter executes `pc`.
  void before(const Statement &stmt, int pc);
  /// Called after; `next_pc` is where control goes (or -1 for a suspension,
  /// halt or error).
  Status after(const Statement &stmt, int pc, int next_pc, bool error);

  int header_pc() const { return trace_.header_pc; }
  const std::string &abort_reason() const { return abort_reason_; }
  Trace take() {
    trace_.ops = trace_.recorded;
    trace_.guard_fail_counts.assign(trace_.ops.size(), 0);
    return std::move(trace_);
  }

 private:
  int new_slot() { return trace_.n_slots++; }
  TraceOp &push(TraceOpKind kind, int pc);
  int read_flags_guarded(int reg, Flags flags, int pc);
  int read_payload(int reg, const ValueCell &cell, int pc);
  Status abort(std::string reason);

  Trace trace_;
  std::vector<ValueCell> inputs_;
  std::string abort_reason_;
};

}  // namespace sqvm
