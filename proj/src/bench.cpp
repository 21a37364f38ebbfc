#include "sqvm/bench.hpp"

#include <array>
#include <chrono>
#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sqvm/errors.hpp"

namespace sqvm {

namespace {

constexpr std::array<std::pair<Suite, std::string_view>, 6> kSuiteNames = {{
    {Suite::kSelect, "select"},
    {Suite::kInnerJoin, "innerjoin"},
    {Suite::kHostJoin, "hostjoin"},
    {Suite::kHostFunction, "hostfunction"},
    {Suite::kHostAggregate, "hostaggregate"},
    {Suite::kFillTable, "filltable"},
}};

double as_double(const ValueCell &cell) {
  const ValueCell n = to_numeric(cell);
  return n.has(kFlagInt) ? static_cast<double>(n.int_val()) : n.real_val();
}

/// Steps `stmt` once; a NULL cell stands in for "no row".
ValueCell first_cell(Statement &stmt) {
  StepResult r = stmt.step();
  if (r.status == StepStatus::kError) throw RuntimeError(r.error, r.message);
  if (r.status == StepStatus::kDone) return ValueCell::null();
  return stmt.result_row().at(0);
}

class SuiteRunner {
 public:
  SuiteRunner(const Database &fixture, const BenchOptions &options, BenchReport &report)
      : fixture_(fixture), options_(options), report_(report) {}

  void run(Suite suite) {
    switch (suite) {
      case Suite::kSelect: return select();
      case Suite::kInnerJoin: return inner_join();
      case Suite::kHostJoin: return host_join();
      case Suite::kHostFunction: return host_function();
      case Suite::kHostAggregate: return host_aggregate();
      case Suite::kFillTable: return fill_table();
    }
  }

 private:
  ConnectionOptions connection_options() const {
    ConnectionOptions o;
    o.mode = options_.mode;
    o.hot_threshold = options_.hot_threshold;
    return o;
  }

  /// Opened before counting starts.
  std::unique_ptr<Connection> shared_connection() {
    auto conn = std::make_unique<Connection>(fixture_, connection_options());
    conn->reset_counters();
    return conn;
  }

  std::unique_ptr<Connection> private_connection() {
    return std::make_unique<Connection>(fixture_, connection_options());
  }

  void emit(Row row) {
    checksum_.add(row);
    ++report_.result_rows;
    if (options_.capture) options_.capture->push_back(std::move(row));
  }

  template <typename OnRow>
  void drain(Statement &stmt, OnRow on_row) {
    for (;;) {
      StepResult r = stmt.step();
      if (r.status == StepStatus::kDone) return;
      if (r.status == StepStatus::kError) throw RuntimeError(r.error, r.message);
      on_row(stmt.result_row());
    }
  }

  void finish(const Connection &conn) {
    report_.counters = conn.crossings();
    report_.stats = conn.stats();
    report_.results_checksum = checksum_.value();
  }

  void select() {
    auto conn = shared_connection();
    Statement stmt = conn->execute(bench_sql::kSelect);
    drain(stmt, [&](const Row &row) {
      report_.host_total += as_double(row[0]) * as_double(row[1]) * (1.0 - as_double(row[2]));
      emit(row);
    });
    finish(*conn);
  }

  void inner_join() {
    auto conn = shared_connection();
    Statement stmt = conn->execute(bench_sql::kInnerJoin);
    drain(stmt, [&](const Row &row) { emit(row); });
    finish(*conn);
  }

  void host_join() {
    auto conn = shared_connection();
    Statement outer = conn->execute(bench_sql::kHostJoinOuter);
    drain(outer, [&](const Row &row) {
      const ValueCell partkey = row[0];
      const ValueCell suppkey = row[1];
      Statement part = conn->execute(bench_sql::kHostJoinPart, std::span(&partkey, 1));
      ValueCell part_name = first_cell(part);
      Statement supplier = conn->execute(bench_sql::kHostJoinSupplier, std::span(&suppkey, 1));
      ValueCell supplier_name = first_cell(supplier);
      emit({partkey, suppkey, std::move(part_name), std::move(supplier_name)});
    });
    finish(*conn);
  }

  void host_function() {
    auto conn = private_connection();
    conn->create_function({"host_abs", 1, ScriptedExpr::parse("(if (lt (arg 0) (const 0)) (neg (arg 0)) (arg 0))")});
    Statement stmt = conn->execute(bench_sql::kHostFunction);
    drain(stmt, [&](const Row &row) { emit(row); });
    finish(*conn);
  }

  void host_aggregate() {
    auto conn = private_connection();
    HostAggregate agg;
    agg.name = "host_sum";
    agg.n_args = 1;
    agg.step = ScriptedExpr::parse("(add (acc) (arg 0))");
    conn->create_aggregate(std::move(agg));
    Statement stmt = conn->execute(bench_sql::kHostAggregate);
    drain(stmt, [&](const Row &row) { emit(row); });
    finish(*conn);
  }

  void fill_table() {
    auto conn = private_connection();
    conn->run(bench_sql::kFillCreate);
    Statement source = conn->execute(bench_sql::kFillSource);
    drain(source, [&](const Row &row) { conn->run(bench_sql::kFillInsert, row); });
    // The checksum covers what the engine stored, read back outside the
    // counted API.
    const Table *table = conn->database().find_table("filltable");
    for (std::size_t i = 0; i < table->row_count(); ++i) emit(table->row(i));
    finish(*conn);
  }

  const Database &fixture_;
  const BenchOptions &options_;
  BenchReport &report_;
  ResultChecksum checksum_;
};

std::uint64_t table_rows(const Database &db, std::string_view name) {
  const Table *t = db.find_table(name);
  if (!t) throw UsageError("fixture has no " + std::string(name) + " table");
  return t->row_count();
}

}  // namespace

std::string_view suite_name(Suite suite) {
  for (const auto &[s, name] : kSuiteNames) {
    if (s == suite) return name;
  }
  return "?";
}

std::optional<Suite> parse_suite(std::string_view name) {
  for (const auto &[s, n] : kSuiteNames) {
    if (n == name) return s;
  }
  return std::nullopt;
}

const std::vector<Suite> &all_suites() {
  static const std::vector<Suite> suites = [] {
    std::vector<Suite> out;
    for (const auto &entry : kSuiteNames) out.push_back(entry.first);
    return out;
  }();
  return suites;
}

void ResultChecksum::mix(const void *data, std::size_t n) {
  const auto *bytes = static_cast<const unsigned char *>(data);
  for (std::size_t i = 0; i < n; ++i) {
    hash_ ^= bytes[i];
    hash_ *= 1099511628211ull;
  }
}

void ResultChecksum::add(const ValueCell &cell) {
  const std::uint16_t flags = cell.flags();
  mix(&flags, sizeof flags);
  if (cell.has(kFlagInt)) {
    const std::int64_t v = cell.int_val();
    mix(&v, sizeof v);
  } else if (cell.has(kFlagReal)) {
    const double v = cell.real_val();
    mix(&v, sizeof v);
  } else if (!cell.is_null()) {
    const std::uint64_t n = cell.str_val().size();
    mix(&n, sizeof n);
    mix(cell.str_val().data(), cell.str_val().size());
  }
}

BenchReport run_bench(Suite suite, const Database &fixture, const BenchOptions &options) {
  BenchReport report;
  report.suite = std::string(suite_name(suite));
  report.mode = options.mode;
  const bool joins = suite == Suite::kInnerJoin || suite == Suite::kHostJoin;
  report.rows = table_rows(fixture, joins ? "partsupp" : "lineitem");
  const auto start = std::chrono::steady_clock::now();
  SuiteRunner(fixture, options, report).run(suite);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

CrossingCounters crossing_formula(Suite suite, std::uint64_t rows, std::uint64_t result_rows) {
  switch (suite) {
    case Suite::kSelect: return {rows + 2, 3 * rows};
    case Suite::kInnerJoin: return {result_rows + 2, 2 * result_rows};
    case Suite::kHostJoin: return {5 * result_rows + 2, 6 * result_rows};
    case Suite::kHostFunction: return {2 * rows + 4, 3 * rows};
    case Suite::kHostAggregate: return {rows + 6, 2 * rows + 2};
    case Suite::kFillTable: return {2 * rows + 4, 4 * rows};
  }
  return {};
}

std::string report_json(const BenchReport &r) {
  nlohmann::ordered_json j;
  j["bench_format"] = 1;
  j["benchmark"] = r.suite;
  j["mode"] = std::string(mode_name(r.mode));
  j["rows"] = r.rows;
  j["result_rows"] = r.result_rows;
  j["crossings"] = r.counters.crossings;
  j["values_converted"] = r.counters.values_converted;
  j["results_checksum"] = r.results_checksum;
  j["interp_opcount"] = r.stats.interp_opcount;
  j["trace_opcount_unoptimized"] = r.stats.trace_opcount_unoptimized;
  j["trace_opcount_optimized"] = r.stats.trace_opcount_optimized;
  j["read_flags_executed"] = r.stats.read_flags_executed;
  j["opaque_calls_executed"] = r.stats.opaque_calls_executed;
  j["traces_formed"] = r.stats.traces_formed;
  j["side_exits"] = r.stats.side_exits;
  j["rows_from_traces"] = r.stats.rows_from_traces;
  j["host_total"] = r.host_total;
  j["wall_seconds"] = r.wall_seconds;
  return j.dump(2);
}

std::string report_text(const BenchReport &r) {
  std::ostringstream out;
  out << r.suite << " mode=" << mode_name(r.mode) << " rows=" << r.rows << " result_rows=" << r.result_rows << "\n"
      << "  crossings " << r.counters.crossings << "  values " << r.counters.values_converted << "\n"
      << "  checksum " << std::hex << r.results_checksum << std::dec << "\n"
      << "  interp ops " << r.stats.interp_opcount << "  trace ops " << r.stats.trace_opcount_unoptimized << " -> "
      << r.stats.trace_opcount_optimized << "  traces " << r.stats.traces_formed << "\n"
      << "  read_flags " << r.stats.read_flags_executed << "  opaque calls " << r.stats.opaque_calls_executed
      << "  side exits " << r.stats.side_exits << "\n"
      << "  wall " << r.wall_seconds << " s\n";
  return out.str();
}

}  // namespace sqvm
