#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sqvm/errors.hpp"
#include "sqvm/functions.hpp"
#include "sqvm/program.hpp"
#include "sqvm/storage.hpp"
#include "sqvm/trace.hpp"
#include "sqvm/vm.hpp"

namespace sqvm {

struct ConnectionOptions {
  ExecMode mode = ExecMode::kFull;
  /// Back-jumps from one instruction before its loop is traced.
  std::uint32_t hot_threshold = 16;
  /// Failures of a single guard before its trace is retired.
  int guard_failure_limit = 8;
  /// Records larger than this make MakeRecord fail with TooBig.
  std::size_t max_record_bytes = std::size_t{1} << 30;
};

/// Engine work counters. Trace op counts are static sizes summed over every
/// trace formed; the *_executed counters are dynamic.
struct ExecStats {
  std::uint64_t interp_opcount = 0;
  std::uint64_t trace_opcount_unoptimized = 0;
  std::uint64_t trace_opcount_optimized = 0;
  std::uint64_t traces_formed = 0;
  std::uint64_t trace_ops_executed = 0;
  std::uint64_t read_flags_executed = 0;
  std::uint64_t opaque_calls_executed = 0;
  std::uint64_t side_exits = 0;
  std::uint64_t invalidations = 0;
  std::uint64_t recording_aborts = 0;
  std::uint64_t rows_from_traces = 0;
};

/// Host/engine boundary traffic: one crossing per host API call that carries
/// statement work (connect, prepare/execute, bind, each step return,
/// registration) and one per host callback round trip. Values count cells
/// passed in either direction.
struct CrossingCounters {
  std::uint64_t crossings = 0;
  std::uint64_t values_converted = 0;

  friend bool operator==(const CrossingCounters &, const CrossingCounters &) = default;
};

/// The host-facing entry point. Single-threaded; host callbacks may
/// re-enter it to prepare and step further statements.
class Connection : public FunctionCatalog {
 public:
  explicit Connection(Database db = {}, ConnectionOptions options = {});
  /// Opens (or starts) the database document at `path`.
  explicit Connection(const std::string &path, ConnectionOptions options = {});

  Connection(const Connection &) = delete;
  Connection &operator=(const Connection &) = delete;

  /// Compiles (or reuses the cached program for) `sql`. One crossing.
  Statement prepare(std::string_view sql);
  /// prepare + bind in a single crossing.
  Statement execute(std::string_view sql, std::span<const ValueCell> params = {});
  /// Runs `sql` to completion in a single crossing and returns its rows.
  /// Throws Error subclasses for compile errors and RuntimeError for ERROR
  /// statuses.
  std::vector<Row> run(std::string_view sql, std::span<const ValueCell> params = {});
  /// Executes a hand-built program (validated first).
  Statement prepare_program(Program program);

  void create_function(HostFunction fn);
  void create_aggregate(HostAggregate agg);

  std::shared_ptr<const HostFunction> find_function(std::string_view name, int n_args) const override;
  std::shared_ptr<const HostAggregate> find_aggregate(std::string_view name, int n_args) const override;

  Database &database() { return db_; }
  const Database &database() const { return db_; }
  bool modified() const { return modified_; }
  /// Writes the database back to its path. Throws UsageError without one.
  void save();

  const ConnectionOptions &options() const { return options_; }
  void set_mode(ExecMode mode);

  const ExecStats &stats() const { return stats_; }
  const CrossingCounters &crossings() const { return crossings_; }
  void reset_counters();

  /// Every trace currently attached, across programs.
  std::vector<std::shared_ptr<const Trace>> traces() const;
  /// Drops cached programs and all JIT state.
  void clear_caches();

  /// Fault injection: the n-th record allocation from now fails with NoMem.
  void fail_allocation_after(int n) { alloc_failure_countdown_ = n; }

 private:
  friend class Statement;
  friend struct TraceRuntime;

  std::shared_ptr<JitEntry> jit_entry(const std::shared_ptr<const Program> &program);
  std::shared_ptr<const Program> compiled(std::string_view sql);
  void count_crossing(std::uint64_t values) {
    ++crossings_.crossings;
    crossings_.values_converted += values;
  }
  /// True when the injected allocation failure fires now.
  bool allocation_fails();

  Database db_;
  ConnectionOptions options_;
  bool modified_ = false;
  std::map<std::pair<std::string, int>, std::shared_ptr<const HostFunction>> functions_;
  std::map<std::pair<std::string, int>, std::shared_ptr<const HostAggregate>> aggregates_;
  std::unordered_map<std::string, std::shared_ptr<const Program>> program_cache_;
  std::unordered_map<const Program *, std::shared_ptr<JitEntry>> jit_;
  bool recording_ = false;
  ExecStats stats_;
  CrossingCounters crossings_;
  int alloc_failure_countdown_ = -1;
};

/// Raised by Connection::run when a statement ends in an ERROR status.
class RuntimeError : public Error {
 public:
  RuntimeError(ErrorKind kind, const std::string &message)
      : Error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace sqvm
