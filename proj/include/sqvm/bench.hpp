#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sqvm/connection.hpp"
#include "sqvm/storage.hpp"
#include "sqvm/trace.hpp"

namespace sqvm {

/// Seeded fixture: part (rows/4), supplier (rows/10), partsupp (rows) and
/// lineitem (rows), in that creation order. Minimum table size is 1.
/// Throws UsageError for rows <= 0.
Database generate_fixture(std::int64_t rows, std::uint64_t seed);

enum class Suite { kSelect, kInnerJoin, kHostJoin, kHostFunction, kHostAggregate, kFillTable };

std::string_view suite_name(Suite suite);
std::optional<Suite> parse_suite(std::string_view name);
const std::vector<Suite> &all_suites();

/// The queries each suite issues.
namespace bench_sql {
inline constexpr const char *kSelect = "SELECT quantity, extendedprice, discount FROM lineitem";
inline constexpr const char *kInnerJoin =
    "SELECT part.name, supplier.name FROM partsupp JOIN part ON partsupp.partkey = part.partkey "
    "JOIN supplier ON partsupp.suppkey = supplier.suppkey";
inline constexpr const char *kHostJoinOuter = "SELECT partkey, suppkey FROM partsupp";
inline constexpr const char *kHostJoinPart = "SELECT name FROM part WHERE partkey = ?";
inline constexpr const char *kHostJoinSupplier = "SELECT name FROM supplier WHERE suppkey = ?";
inline constexpr const char *kHostFunction = "SELECT host_abs(quantity - 25) FROM lineitem";
inline constexpr const char *kHostAggregate = "SELECT host_sum(quantity) FROM lineitem";
inline constexpr const char *kFillCreate = "CREATE TABLE filltable (a INTEGER, b REAL)";
inline constexpr const char *kFillSource = "SELECT quantity, discount FROM lineitem";
inline constexpr const char *kFillInsert = "INSERT INTO filltable VALUES (?, ?)";
}  // namespace bench_sql

/// Order-sensitive FNV-1a over each cell's flags and payload bytes.
class ResultChecksum {
 public:
  void add(const ValueCell &cell);
  void add(const Row &row) {
    for (const auto &cell : row) add(cell);
  }
  std::uint64_t value() const { return hash_; }

 private:
  void mix(const void *data, std::size_t n);

  std::uint64_t hash_ = 14695981039346656037ull;
};

struct BenchOptions {
  ExecMode mode = ExecMode::kFull;
  std::uint32_t hot_threshold = 16;
  /// When set, receives the emitted rows. hostjoin rows are
  /// (partkey, suppkey, part name, supplier name); filltable rows are the
  /// table contents after the run.
  std::vector<Row> *capture = nullptr;
};

struct BenchReport {
  std::string suite;
  ExecMode mode = ExecMode::kFull;
  std::uint64_t rows = 0;
  std::uint64_t result_rows = 0;
  CrossingCounters counters;
  std::uint64_t results_checksum = 0;
  ExecStats stats;
  /// Host-side arithmetic over the select suite's rows; zero elsewhere.
  double host_total = 0;
  double wall_seconds = 0;
};

/// Runs one suite on a private copy of `fixture`. select, innerjoin and
/// hostjoin share a connection opened before counting starts; the other
/// suites open their own connection inside the counted region.
BenchReport run_bench(Suite suite, const Database &fixture, const BenchOptions &options = {});

/// Closed-form boundary traffic. `rows` is the lineitem/partsupp size;
/// `result_rows` is the join output size (innerjoin) or the outer row count
/// (hostjoin) and is ignored elsewhere.
CrossingCounters crossing_formula(Suite suite, std::uint64_t rows, std::uint64_t result_rows);

std::string report_json(const BenchReport &report);
std::string report_text(const BenchReport &report);

}  // namespace sqvm
