#include <cstring>
#include <new>

#include "sqvm/connection.hpp"
#include "sqvm/errors.hpp"
#include "sqvm/trace.hpp"
#include "sqvm/vm.hpp"

namespace sqvm {

namespace {

enum RecordTag : std::uint8_t { kTagNull, kTagInt, kTagReal, kTagText, kTagBlob };

void put_u64(std::string &out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(std::string_view bytes, std::size_t &pos, int width) {
  if (pos + width > bytes.size()) throw FormatError("truncated record");
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= std::uint64_t{static_cast<unsigned char>(bytes[pos + i])} << (8 * i);
  pos += width;
  return v;
}

/// Clears the connection's recording flag however run() leaves.
struct RecordingScope {
  bool *recording = nullptr;
  std::unique_ptr<TraceRecorder> recorder;

  void stop();
  ~RecordingScope() { stop(); }
};

}  // namespace

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNone: return "none";
    case ErrorKind::kNoMem: return "NoMem";
    case ErrorKind::kTooBig: return "TooBig";
    case ErrorKind::kAbortDueToError: return "AbortDueToError";
    case ErrorKind::kUsage: return "Usage";
    case ErrorKind::kConstraint: return "Constraint";
  }
  return "?";
}

std::size_t packed_record_size(const ValueCell *cells, std::size_t n) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const ValueCell &c = cells[i];
    total += 1;
    if (c.is_null()) continue;
    if (c.has(kFlagInt) && !c.has(kFlagReal)) {
      total += 8;
    } else if (c.has(kFlagReal)) {
      total += 8;
    } else {
      total += 4 + c.str_val().size();
    }
  }
  return total;
}

// Numbers keep their numeric payload; a cached text rendering is dropped.
std::string pack_record(const ValueCell *cells, std::size_t n) {
  std::string out;
  out.reserve(packed_record_size(cells, n));
  for (std::size_t i = 0; i < n; ++i) {
    const ValueCell &c = cells[i];
    if (c.is_null()) {
      out.push_back(static_cast<char>(kTagNull));
    } else if (c.has(kFlagInt) && !c.has(kFlagReal)) {
      out.push_back(static_cast<char>(kTagInt));
      put_u64(out, static_cast<std::uint64_t>(c.int_val()));
    } else if (c.has(kFlagReal)) {
      out.push_back(static_cast<char>(kTagReal));
      std::uint64_t bits;
      double d = c.real_val();
      std::memcpy(&bits, &d, sizeof bits);
      put_u64(out, bits);
    } else {
      out.push_back(static_cast<char>(c.has(kFlagBlob) ? kTagBlob : kTagText));
      put_u32(out, static_cast<std::uint32_t>(c.str_val().size()));
      out += c.str_val();
    }
  }
  return out;
}

Row unpack_record(std::string_view bytes) {
  Row row;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    auto tag = static_cast<std::uint8_t>(bytes[pos++]);
    switch (tag) {
      case kTagNull: row.push_back(ValueCell::null()); break;
      case kTagInt: row.push_back(ValueCell::integer(static_cast<std::int64_t>(get_le(bytes, pos, 8)))); break;
      case kTagReal: {
        std::uint64_t bits = get_le(bytes, pos, 8);
        double d;
        std::memcpy(&d, &bits, sizeof d);
        row.push_back(ValueCell::real(d));
        break;
      }
      case kTagText:
      case kTagBlob: {
        auto len = static_cast<std::size_t>(get_le(bytes, pos, 4));
        if (pos + len > bytes.size()) throw FormatError("truncated record");
        std::string s(bytes.substr(pos, len));
        pos += len;
        row.push_back(tag == kTagText ? ValueCell::text(std::move(s)) : ValueCell::blob(std::move(s)));
        break;
      }
      default: throw FormatError("bad record tag " + std::to_string(tag));
    }
  }
  return row;
}

void RecordingScope::stop() {
  if (recorder) {
    recorder.reset();
    *recording = false;
  }
}

Statement::Statement(Connection &conn, std::shared_ptr<const Program> program, std::shared_ptr<JitEntry> jit)
    : conn_(&conn),
      program_(std::move(program)),
      jit_(std::move(jit)),
      regs_(static_cast<std::size_t>(program_->n_registers)),
      cursors_(static_cast<std::size_t>(program_->n_cursors)),
      params_(static_cast<std::size_t>(program_->param_count)),
      aggs_(static_cast<std::size_t>(program_->n_registers)) {}

void Statement::bind(int index, ValueCell value) {
  if (state_ != StatementState::kReady) throw UsageError("bind is only allowed before the first step");
  if (index < 1 || index > static_cast<int>(params_.size())) {
    throw UsageError("parameter index " + std::to_string(index) + " out of range 1.." +
                     std::to_string(params_.size()));
  }
  conn_->count_crossing(1);
  params_[index - 1] = std::move(value);
}

StepResult Statement::step() {
  if (state_ == StatementState::kFinished) throw UsageError("statement has already finished");
  if (state_ == StatementState::kRunning) throw UsageError("statement is already running");
  StepResult r = run();
  conn_->count_crossing(r.status == StepStatus::kRow ? row_.size() : 0);
  return r;
}

const std::vector<ValueCell> &Statement::result_row() const {
  if (state_ != StatementState::kSuspended) throw UsageError("no row is available");
  return row_;
}

int Statement::column_count() const {
  if (!program_->column_names.empty()) return static_cast<int>(program_->column_names.size());
  for (const Instruction &ins : program_->instructions) {
    if (ins.opcode == Opcode::kResultRow) return ins.p2;
  }
  return 0;
}

const AggContext *Statement::agg_context(int reg) const {
  if (reg < 0 || reg >= static_cast<int>(aggs_.size()) || !aggs_[reg]) return nullptr;
  return &*aggs_[reg];
}

std::vector<std::shared_ptr<const Trace>> Statement::attached_traces() const {
  std::vector<std::shared_ptr<const Trace>> out;
  if (!jit_) return out;
  for (const auto &t : jit_->traces) {
    if (t) out.push_back(t);
  }
  return out;
}

Statement::Outcome Statement::error_exit(ErrorKind kind, std::string message) {
  close_cursors();
  state_ = StatementState::kFinished;
  error_ = kind;
  error_message_ = std::move(message);
  return {Outcome::kError, -1};
}

StepResult Statement::finish_error() { return {StepStatus::kError, error_, error_message_}; }

void Statement::close_cursors() {
  for (auto &c : cursors_) c.reset();
}

void Statement::tick_back_jump(int from_pc) {
  JitEntry &jit = *jit_;
  if (jit.blacklisted[from_pc] || jit.traces[from_pc]) return;
  if (++jit.counters[from_pc] >= conn_->options_.hot_threshold && jit.pending != from_pc) {
    if (jit.pending >= 0 && !jit.traces[jit.pending]) jit.watch[jit.pending] = 0;
    jit.pending = from_pc;
    jit.watch[from_pc] = 1;
  }
}

StepResult Statement::run() {
  if (state_ == StatementState::kReady) {
    state_ = StatementState::kRunning;
    pc_ = 0;
    if (program_->create_table) {
      try {
        conn_->db_.create_table(program_->create_table->table, program_->create_table->columns);
        conn_->modified_ = true;
      } catch (const SchemaError &e) {
        error_exit(ErrorKind::kConstraint, e.what());
        return finish_error();
      }
    }
    if (program_->instructions.empty()) {
      state_ = StatementState::kFinished;
      return {};
    }
  } else {
    state_ = StatementState::kRunning;
  }

  const ExecMode mode = conn_->options_.mode;
  JitEntry *jit = mode != ExecMode::kInterp ? jit_.get() : nullptr;
  ExecStats &stats = conn_->stats_;
  RecordingScope rec{&conn_->recording_, nullptr};

  auto attach = [&](Trace recorded) {
    const int header = recorded.header_pc;
    Trace opt = optimize_trace(recorded, mode);
    stats.trace_opcount_unoptimized += opt.recorded.size();
    stats.trace_opcount_optimized += opt.ops.size();
    ++stats.traces_formed;
    jit->traces[header] = std::make_shared<Trace>(std::move(opt));
    jit->watch[header] = 1;
  };

  for (;;) {
    const int pc = pc_;
    if (jit && jit->watch[pc]) {
      if (rec.recorder) {
        if (pc == rec.recorder->header_pc()) {
          attach(rec.recorder->take());
          rec.stop();
        }
      } else if (jit->traces[pc] && pc != skip_entry_pc_) {
        std::shared_ptr<Trace> trace = jit->traces[pc];
        for (;;) {
          TraceOutcome o = execute_trace(*this, *trace);
          if (o.kind == TraceOutcome::kContinueLoop) continue;
          if (o.kind == TraceOutcome::kEmittedRow) {
            ++stats.rows_from_traces;
            state_ = StatementState::kSuspended;
            return {StepStatus::kRow, ErrorKind::kNone, {}};
          }
          if (o.kind == TraceOutcome::kError) return finish_error();
          ++stats.side_exits;
          const TraceOp &guard = trace->ops[o.guard];
          if (!guard.loop_exit && ++trace->guard_fail_counts[o.guard] >= conn_->options_.guard_failure_limit) {
            trace->state = TraceState::kInvalid;
            jit->traces[pc].reset();
            jit->watch[pc] = 0;
            jit->counters[pc] = 0;
            ++stats.invalidations;
          }
          pc_ = o.pc;
          skip_entry_pc_ = o.pc;
          break;
        }
        continue;
      } else if (jit->pending == pc && !conn_->recording_ && !jit->traces[pc]) {
        rec.recorder = std::make_unique<TraceRecorder>(program_, pc, mode);
        conn_->recording_ = true;
        jit->pending = -1;
      }
    }
    skip_entry_pc_ = -1;

    ++stats.interp_opcount;
    if (rec.recorder) rec.recorder->before(*this, pc);
    Outcome out = exec(pc);
    if (rec.recorder) {
      const int next = out.kind == Outcome::kNext ? out.next_pc : -1;
      switch (rec.recorder->after(*this, pc, next, out.kind == Outcome::kError)) {
        case TraceRecorder::Status::kContinue: break;
        case TraceRecorder::Status::kFinished:
          attach(rec.recorder->take());
          rec.stop();
          break;
        case TraceRecorder::Status::kAborted:
          jit->blacklisted[rec.recorder->header_pc()] = 1;
          jit->watch[rec.recorder->header_pc()] = 0;
          ++stats.recording_aborts;
          rec.stop();
          break;
        case TraceRecorder::Status::kCancelled:
          if (!jit->traces[rec.recorder->header_pc()]) jit->watch[rec.recorder->header_pc()] = 0;
          rec.stop();
          break;
      }
    }

    switch (out.kind) {
      case Outcome::kNext:
        if (jit && !rec.recorder && out.next_pc <= pc) tick_back_jump(pc);
        pc_ = out.next_pc;
        break;
      case Outcome::kRow:
        pc_ = pc + 1;
        state_ = StatementState::kSuspended;
        return {StepStatus::kRow, ErrorKind::kNone, {}};
      case Outcome::kDone:
        state_ = StatementState::kFinished;
        return {};
      case Outcome::kError: return finish_error();
    }
  }
}

Cursor *Statement::open_cursor(int c) {
  auto &slot = cursors_.at(c);
  if (!slot) throw UsageError("cursor " + std::to_string(c) + " is not open");
  return &*slot;
}

AggContext &Statement::agg_slot(int reg) {
  auto &slot = aggs_.at(reg);
  if (!slot) slot.emplace();
  return *slot;
}

Statement::Outcome Statement::exec(int pc) {
  const Instruction &ins = program_->instructions[pc];
  const Outcome next{Outcome::kNext, pc + 1};
  try {
    switch (ins.opcode) {
      case Opcode::kInit:
      case Opcode::kGoto: return {Outcome::kNext, ins.p2};
      case Opcode::kGosub:
        regs_[ins.p1] = ValueCell::integer(pc + 1);
        return {Outcome::kNext, ins.p2};
      case Opcode::kReturn: {
        const ValueCell &r = regs_[ins.p1];
        const auto size = static_cast<std::int64_t>(program_->instructions.size());
        if (!r.has(kFlagInt) || r.int_val() < 0 || r.int_val() >= size) {
          return error_exit(ErrorKind::kUsage, "Return through a register without a return address");
        }
        return {Outcome::kNext, static_cast<int>(r.int_val())};
      }
      case Opcode::kHalt:
        close_cursors();
        return {Outcome::kDone, -1};
      case Opcode::kTransaction:
      case Opcode::kTableLock: return next;
      case Opcode::kOpenRead:
      case Opcode::kOpenWrite: {
        Table *table = conn_->db_.find_table_by_root(ins.p2);
        if (!table) return error_exit(ErrorKind::kUsage, "no table with root " + std::to_string(ins.p2));
        auto &slot = cursors_.at(ins.p1);
        slot.reset();
        slot.emplace(*table, ins.opcode == Opcode::kOpenRead ? CursorMode::kRead : CursorMode::kWrite);
        return next;
      }
      case Opcode::kRewind:
        if (open_cursor(ins.p1)->rewind()) return {Outcome::kNext, ins.p2};
        return next;
      case Opcode::kNext:
        if (open_cursor(ins.p1)->next()) return {Outcome::kNext, ins.p2};
        return next;
      case Opcode::kColumn: return op_column(ins, pc);
      case Opcode::kRealAffinity:
        regs_[ins.p1] = apply_real_affinity(regs_[ins.p1]);
        return next;
      case Opcode::kResultRow:
        row_.assign(regs_.begin() + ins.p1, regs_.begin() + ins.p1 + ins.p2);
        return {Outcome::kRow, pc + 1};
      case Opcode::kClose:
        cursors_.at(ins.p1).reset();
        return next;
      case Opcode::kIfPos: {
        const ValueCell &v = regs_[ins.p1];
        if (v.has(kFlagInt) && !v.has(kFlagReal) && v.int_val() > 0) return {Outcome::kNext, ins.p2};
        return next;
      }
      case Opcode::kNotNull: return regs_[ins.p1].is_null() ? next : Outcome{Outcome::kNext, ins.p2};
      case Opcode::kIsNull: return regs_[ins.p1].is_null() ? Outcome{Outcome::kNext, ins.p2} : next;
      case Opcode::kMakeRecord: return op_make_record(ins, pc);
      case Opcode::kInsert: return op_insert(ins, pc);
      case Opcode::kNewRowid:
        regs_[ins.p2] = ValueCell::integer(open_cursor(ins.p1)->table().next_rowid());
        return next;
      case Opcode::kInteger:
        if (const auto *v = std::get_if<std::int64_t>(&ins.p4)) {
          regs_[ins.p2] = ValueCell::integer(*v);
        } else {
          regs_[ins.p2] = ValueCell::integer(ins.p1);
        }
        return next;
      case Opcode::kReal: regs_[ins.p2] = ValueCell::real(std::get<double>(ins.p4)); return next;
      case Opcode::kString: regs_[ins.p2] = ValueCell::text(std::get<std::string>(ins.p4)); return next;
      case Opcode::kNull: regs_[ins.p2] = ValueCell::null(); return next;
      case Opcode::kVariable: regs_[ins.p2] = params_.at(ins.p1 - 1); return next;
      case Opcode::kAdd:
      case Opcode::kSub:
      case Opcode::kMul: return op_arith(ins, pc);
      case Opcode::kEq:
      case Opcode::kNe:
      case Opcode::kLt:
      case Opcode::kLe:
      case Opcode::kGt:
      case Opcode::kGe: return op_compare(ins, pc);
      case Opcode::kFunction: return op_function(ins, pc);
      case Opcode::kAggStep: return op_agg_step(ins, pc);
      case Opcode::kAggFinal: return op_agg_final(ins, pc);
    }
  } catch (const UsageError &e) {
    return error_exit(ErrorKind::kUsage, e.what());
  } catch (const std::bad_alloc &) {
    return no_mem("out of memory in " + std::string(opcode_name(ins.opcode)));
  }
  return error_exit(ErrorKind::kUsage, "unknown opcode");
}

Statement::Outcome Statement::op_column(const Instruction &ins, int pc) {
  regs_[ins.p3] = open_cursor(ins.p1)->column(static_cast<std::size_t>(ins.p2)).cell;
  return {Outcome::kNext, pc + 1};
}

Statement::Outcome Statement::op_compare(const Instruction &ins, int pc) {
  const ValueCell &a = regs_[ins.p1];
  const ValueCell &b = regs_[ins.p3];
  bool jump;
  if (a.is_null() || b.is_null()) {
    jump = (ins.p5 & kJumpIfNull) != 0;
  } else {
    const int c = compare_values(a, b);
    switch (ins.opcode) {
      case Opcode::kEq: jump = c == 0; break;
      case Opcode::kNe: jump = c != 0; break;
      case Opcode::kLt: jump = c < 0; break;
      case Opcode::kLe: jump = c <= 0; break;
      case Opcode::kGt: jump = c > 0; break;
      default: jump = c >= 0; break;
    }
  }
  return {Outcome::kNext, jump ? ins.p2 : pc + 1};
}

Statement::Outcome Statement::op_arith(const Instruction &ins, int pc) {
  const ValueCell &a = regs_[ins.p1];
  const ValueCell &b = regs_[ins.p2];
  if (a.is_null() || b.is_null()) {
    regs_[ins.p3] = ValueCell::null();
  } else {
    const ArithKind kind = ins.opcode == Opcode::kAdd   ? ArithKind::kAdd
                           : ins.opcode == Opcode::kSub ? ArithKind::kSub
                                                        : ArithKind::kMul;
    regs_[ins.p3] = arith_with_overflow(kind, to_numeric(a), to_numeric(b));
  }
  return {Outcome::kNext, pc + 1};
}

Statement::Outcome Statement::op_function(const Instruction &ins, int pc) {
  const auto &ref = std::get<FunctionRef>(ins.p4);
  if (!ref.function) return abort_due_to_error("function " + ref.name + " is not resolved");
  std::span<const ValueCell> args(regs_.data() + ins.p2, static_cast<std::size_t>(ins.p5));
  conn_->count_crossing(args.size() + 1);
  try {
    ValueCell result = invoke_function(*ref.function, args);
    regs_[ins.p3] = std::move(result);
  } catch (const std::bad_alloc &) {
    throw;
  } catch (const std::exception &e) {
    return abort_due_to_error(ref.name + ": " + e.what());
  }
  return {Outcome::kNext, pc + 1};
}

Statement::Outcome Statement::op_agg_step(const Instruction &ins, int pc) {
  const auto &ref = std::get<FunctionRef>(ins.p4);
  if (!ref.aggregate) return abort_due_to_error("aggregate " + ref.name + " is not resolved");
  const HostAggregate &agg = *ref.aggregate;
  AggContext &ctx = agg_slot(ins.p3);
  if (!ctx.initialized) {
    ctx.acc = agg.init;
    ctx.count = 0;
    ctx.initialized = true;
  }
  std::span<const ValueCell> args(regs_.data() + ins.p2, static_cast<std::size_t>(ins.p5));
  if (agg.skip_nulls) {
    for (const ValueCell &a : args) {
      if (a.is_null()) return {Outcome::kNext, pc + 1};
    }
  }
  ++ctx.count;
  if (!agg.builtin) conn_->count_crossing(args.size() + 1);
  try {
    ctx.acc = invoke_step(agg, ctx.acc, args, ctx.count);
  } catch (const std::bad_alloc &) {
    throw;
  } catch (const std::exception &e) {
    return abort_due_to_error(ref.name + ": " + e.what());
  }
  return {Outcome::kNext, pc + 1};
}

Statement::Outcome Statement::op_agg_final(const Instruction &ins, int pc) {
  const auto &ref = std::get<FunctionRef>(ins.p4);
  if (!ref.aggregate) return abort_due_to_error("aggregate " + ref.name + " is not resolved");
  const HostAggregate &agg = *ref.aggregate;
  AggContext ctx = aggs_.at(ins.p1).value_or(AggContext{agg.init, 0, true});
  aggs_[ins.p1].reset();
  if (!agg.builtin) conn_->count_crossing(1);
  try {
    regs_[ins.p1] = invoke_finalize(agg, ctx.acc, ctx.count);
  } catch (const std::bad_alloc &) {
    throw;
  } catch (const std::exception &e) {
    return abort_due_to_error(ref.name + ": " + e.what());
  }
  return {Outcome::kNext, pc + 1};
}

Statement::Outcome Statement::op_make_record(const Instruction &ins, int pc) {
  const ValueCell *cells = regs_.data() + ins.p1;
  const std::size_t n = static_cast<std::size_t>(ins.p2);
  const std::size_t size = packed_record_size(cells, n);
  if (size > conn_->options_.max_record_bytes) {
    return too_big("record of " + std::to_string(size) + " bytes exceeds the limit of " +
                   std::to_string(conn_->options_.max_record_bytes));
  }
  if (conn_->allocation_fails()) return no_mem("record allocation failed");
  regs_[ins.p3] = ValueCell::blob(pack_record(cells, n));
  return {Outcome::kNext, pc + 1};
}

Statement::Outcome Statement::op_insert(const Instruction &ins, int pc) {
  Cursor *cur = open_cursor(ins.p1);
  if (cur->mode() != CursorMode::kWrite) return error_exit(ErrorKind::kUsage, "Insert through a read cursor");
  const ValueCell &rec = regs_[ins.p2];
  if (!rec.has(kFlagBlob)) return error_exit(ErrorKind::kUsage, "Insert operand is not a record");
  try {
    cur->table().insert_row(unpack_record(rec.str_val()));
  } catch (const UsageError &e) {
    return error_exit(ErrorKind::kConstraint, e.what());
  } catch (const SchemaError &e) {
    return error_exit(ErrorKind::kConstraint, e.what());
  }
  conn_->modified_ = true;
  return {Outcome::kNext, pc + 1};
}

}  // namespace sqvm
