#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "sqvm/bench.hpp"
#include "sqvm/connection.hpp"
#include "sqvm/value.hpp"

namespace sqvm::testing {

// Independent reference: exact 128-bit arithmetic, then the 64-bit range test.
struct OracleResult {
  bool fits;
  std::int64_t int_result;
  double real_result;
};

inline OracleResult oracle(ArithKind kind, std::int64_t a, std::int64_t b) {
  __int128 wide = 0;
  double real = 0;
  switch (kind) {
    case ArithKind::kAdd:
      wide = static_cast<__int128>(a) + b;
      real = static_cast<double>(a) + static_cast<double>(b);
      break;
    case ArithKind::kSub:
      wide = static_cast<__int128>(a) - b;
      real = static_cast<double>(a) - static_cast<double>(b);
      break;
    case ArithKind::kMul:
      wide = static_cast<__int128>(a) * b;
      real = static_cast<double>(a) * static_cast<double>(b);
      break;
  }
  const bool fits = wide >= INT64_MIN && wide <= INT64_MAX;
  return {fits, fits ? static_cast<std::int64_t>(wide) : 0, real};
}

/// Tallies the boundary events each suite's host code performs, derived
/// from the fixture contents rather than from the engine.
class ProtocolTally {
 public:
  void event(std::uint64_t values) {
    ++counters.crossings;
    counters.values_converted += values;
  }
  CrossingCounters counters;
};

inline CrossingCounters hand_count(Suite suite, const Database &db) {
  ProtocolTally t;
  const Table &lineitem = *db.find_table("lineitem");
  const Table &partsupp = *db.find_table("partsupp");
  const Table &part = *db.find_table("part");
  const Table &supplier = *db.find_table("supplier");
  auto has_key = [](const Table &tbl, const ValueCell &key) {
    for (std::size_t i = 0; i < tbl.row_count(); ++i) {
      if (tbl.row(i)[0] == key) return true;
    }
    return false;
  };
  switch (suite) {
    case Suite::kSelect:
      t.event(0);  // execute
      for (std::size_t i = 0; i < lineitem.row_count(); ++i) t.event(3);
      t.event(0);  // DONE
      break;
    case Suite::kInnerJoin:
      t.event(0);
      for (std::size_t i = 0; i < partsupp.row_count(); ++i) {
        if (has_key(part, partsupp.row(i)[0]) && has_key(supplier, partsupp.row(i)[1])) t.event(2);
      }
      t.event(0);
      break;
    case Suite::kHostJoin:
      t.event(0);
      for (std::size_t i = 0; i < partsupp.row_count(); ++i) {
        t.event(2);  // outer row
        t.event(1);  // execute with partkey
        t.event(has_key(part, partsupp.row(i)[0]) ? 1 : 0);
        t.event(1);  // execute with suppkey
        t.event(has_key(supplier, partsupp.row(i)[1]) ? 1 : 0);
      }
      t.event(0);
      break;
    case Suite::kHostFunction:
      t.event(0);  // connect
      t.event(0);  // create_function
      t.event(0);  // execute
      for (std::size_t i = 0; i < lineitem.row_count(); ++i) {
        t.event(2);  // callback: argument in, result out
        t.event(1);  // row
      }
      t.event(0);
      break;
    case Suite::kHostAggregate:
      t.event(0);  // connect
      t.event(0);  // create_aggregate
      t.event(0);  // execute
      for (std::size_t i = 0; i < lineitem.row_count(); ++i) t.event(2);  // step callback
      t.event(1);  // finalize callback
      t.event(1);  // the single row
      t.event(0);
      break;
    case Suite::kFillTable:
      t.event(0);  // connect
      t.event(0);  // CREATE TABLE
      t.event(0);  // execute source
      for (std::size_t i = 0; i < lineitem.row_count(); ++i) {
        t.event(2);  // source row
        t.event(2);  // INSERT with two parameters
      }
      t.event(0);
      break;
  }
  return t.counters;
}

/// hostjoin's expected output from in-memory hashes of part and supplier.
inline std::vector<Row> host_join_oracle(const Database &db) {
  std::unordered_map<std::int64_t, ValueCell> part_names;
  std::unordered_map<std::int64_t, ValueCell> supplier_names;
  const Table &part = *db.find_table("part");
  const Table &supplier = *db.find_table("supplier");
  for (std::size_t i = 0; i < part.row_count(); ++i) part_names.emplace(part.row(i)[0].int_val(), part.row(i)[1]);
  for (std::size_t i = 0; i < supplier.row_count(); ++i) {
    supplier_names.emplace(supplier.row(i)[0].int_val(), supplier.row(i)[1]);
  }
  std::vector<Row> expected;
  const Table &ps = *db.find_table("partsupp");
  for (std::size_t i = 0; i < ps.row_count(); ++i) {
    const Row &r = ps.row(i);
    auto p = part_names.find(r[0].int_val());
    auto s = supplier_names.find(r[1].int_val());
    expected.push_back({r[0], r[1], p == part_names.end() ? ValueCell::null() : p->second,
                        s == supplier_names.end() ? ValueCell::null() : s->second});
  }
  return expected;
}

/// Tables a(k), b(k, j) and c(j, v) for three levels of statements: the
/// outer query calls level1(k), which runs a query calling level2(j), which
/// runs a third query.
inline Database nested_callback_db() {
  Database db;
  Table &a = db.create_table("a", {{"k", Affinity::kInteger}});
  Table &b = db.create_table("b", {{"k", Affinity::kInteger}, {"j", Affinity::kInteger}});
  Table &c = db.create_table("c", {{"j", Affinity::kInteger}, {"v", Affinity::kInteger}});
  std::mt19937_64 rng(3);
  for (int i = 0; i < 30; ++i) a.insert_row({ValueCell::integer(i % 6)});
  for (int i = 0; i < 25; ++i) {
    b.insert_row({ValueCell::integer(static_cast<std::int64_t>(rng() % 6)), ValueCell::integer(static_cast<std::int64_t>(rng() % 5))});
  }
  for (int i = 0; i < 20; ++i) {
    c.insert_row({ValueCell::integer(static_cast<std::int64_t>(rng() % 5)), ValueCell::integer(static_cast<std::int64_t>(rng() % 100))});
  }
  return db;
}

inline std::vector<Row> nested_callback_oracle(const Database &db) {
  const Table &a = *db.find_table("a");
  const Table &b = *db.find_table("b");
  const Table &c = *db.find_table("c");
  std::map<std::int64_t, std::int64_t> level2;
  for (std::size_t i = 0; i < c.row_count(); ++i) level2[c.row(i)[0].int_val()] += c.row(i)[1].int_val();
  std::vector<Row> expected;
  for (std::size_t i = 0; i < a.row_count(); ++i) {
    std::int64_t total = 0;
    for (std::size_t r = 0; r < b.row_count(); ++r) {
      if (b.row(r)[0] == a.row(i)[0]) total += level2[b.row(r)[1].int_val()];
    }
    expected.push_back({a.row(i)[0], ValueCell::integer(total)});
  }
  return expected;
}

struct NestedRun {
  std::vector<Row> rows;
  /// Deepest nesting of statements below the outer one.
  int max_depth = 0;
};

inline NestedRun run_nested_callbacks(const Database &db, ConnectionOptions options) {
  Connection conn(db, options);
  NestedRun out;
  int depth = 0;
  auto nested_sum = [&conn, &depth, &out](const char *sql, const ValueCell &key) {
    ++depth;
    out.max_depth = std::max(out.max_depth, depth);
    const ValueCell params[] = {key};
    Statement s = conn.execute(sql, params);
    ValueCell total = ValueCell::integer(0);
    for (;;) {
      StepResult r = s.step();
      if (r.status == StepStatus::kError) throw std::runtime_error(r.message);
      if (r.status == StepStatus::kDone) break;
      total = arith_with_overflow(ArithKind::kAdd, total, s.result_row()[0]);
    }
    --depth;
    return total;
  };
  conn.create_function({"level2", 1, NativeFunction([&](std::span<const ValueCell> args) {
                          return nested_sum("SELECT v FROM c WHERE j = ?", args[0]);
                        })});
  conn.create_function({"level1", 1, NativeFunction([&](std::span<const ValueCell> args) {
                          return nested_sum("SELECT level2(j) FROM b WHERE k = ?", args[0]);
                        })});
  out.rows = conn.run("SELECT k, level1(k) FROM a");
  return out;
}

}  // namespace sqvm::testing
