#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sqvm/program.hpp"
#include "sqvm/storage.hpp"
#include "sqvm/value.hpp"

namespace sqvm {

class Connection;
struct JitEntry;
struct Trace;
class TraceRecorder;

enum class StepStatus { kRow, kDone, kError };

enum class ErrorKind { kNone, kNoMem, kTooBig, kAbortDueToError, kUsage, kConstraint };

std::string_view error_kind_name(ErrorKind kind);

struct StepResult {
  StepStatus status = StepStatus::kDone;
  ErrorKind error = ErrorKind::kNone;
  std::string message;
};

enum class StatementState { kReady, kRunning, kSuspended, kFinished };

struct AggContext {
  ValueCell acc;
  std::int64_t count = 0;
  bool initialized = false;
};

/// Packs cells into the byte string carried by a MakeRecord result.
std::string pack_record(const ValueCell *cells, std::size_t n);
std::size_t packed_record_size(const ValueCell *cells, std::size_t n);
Row unpack_record(std::string_view bytes);

/// One execution of a Program against a Connection's database. Copies are
/// independent executions sharing the same tables (used by twin-execution
/// tests); the Connection must outlive every Statement.
class Statement {
 public:
  Statement(Connection &conn, std::shared_ptr<const Program> program, std::shared_ptr<JitEntry> jit);

  Statement(const Statement &) = default;
  Statement &operator=(const Statement &) = default;
  Statement(Statement &&) noexcept = default;
  Statement &operator=(Statement &&) noexcept = default;
  ~Statement() = default;

  /// 1-based; only in READY state. Throws UsageError otherwise.
  void bind(int index, ValueCell value);

  /// Runs until a row is available, the program halts or an error exit.
  /// Throws UsageError when called after FINISHED or while already running.
  StepResult step();

  /// Cells of the row produced by the last ROW step. SUSPENDED only.
  const std::vector<ValueCell> &result_row() const;

  StatementState state() const { return state_; }
  const Program &program() const { return *program_; }
  std::shared_ptr<const Program> program_ptr() const { return program_; }
  int column_count() const;

  int pc() const { return pc_; }
  const std::vector<ValueCell> &registers() const { return regs_; }
  const ValueCell &reg(int r) const { return regs_.at(r); }
  const std::optional<Cursor> &cursor(int c) const { return cursors_.at(c); }
  const AggContext *agg_context(int reg) const;

  /// The traces attached to this statement's program, by header pc.
  std::vector<std::shared_ptr<const Trace>> attached_traces() const;

 private:
  friend class Connection;
  friend class TraceRecorder;
  friend struct TraceRuntime;

  /// Result of one opcode handler.
  struct Outcome {
    enum Kind { kNext, kRow, kDone, kError } kind = kNext;
    int next_pc = 0;
  };

  StepResult run();
  Outcome exec(int pc);
  Outcome error_exit(ErrorKind kind, std::string message);
  Outcome no_mem(std::string message) { return error_exit(ErrorKind::kNoMem, std::move(message)); }
  Outcome too_big(std::string message) { return error_exit(ErrorKind::kTooBig, std::move(message)); }
  Outcome abort_due_to_error(std::string message) {
    return error_exit(ErrorKind::kAbortDueToError, std::move(message));
  }
  void close_cursors();
  void tick_back_jump(int from_pc);
  StepResult finish_error();

  Cursor *open_cursor(int c);
  Outcome op_column(const Instruction &ins, int pc);
  Outcome op_compare(const Instruction &ins, int pc);
  Outcome op_arith(const Instruction &ins, int pc);
  Outcome op_function(const Instruction &ins, int pc);
  Outcome op_agg_step(const Instruction &ins, int pc);
  Outcome op_agg_final(const Instruction &ins, int pc);
  Outcome op_make_record(const Instruction &ins, int pc);
  Outcome op_insert(const Instruction &ins, int pc);

  AggContext &agg_slot(int reg);

  Connection *conn_;
  std::shared_ptr<const Program> program_;
  std::shared_ptr<JitEntry> jit_;
  std::vector<ValueCell> regs_;
  std::vector<std::optional<Cursor>> cursors_;
  std::vector<ValueCell> params_;
  std::vector<std::optional<AggContext>> aggs_;
  std::vector<ValueCell> row_;
  int pc_ = 0;
  StatementState state_ = StatementState::kReady;
  ErrorKind error_ = ErrorKind::kNone;
  std::string error_message_;
  /// Header pc whose trace entry is skipped once, after a side exit there.
  int skip_entry_pc_ = -1;
};

}  // namespace sqvm
