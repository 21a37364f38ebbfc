#include <gtest/gtest.h>

#include <cstdlib>

#include "oracles.hpp"
#include "sqvm/bench.hpp"
#include "sqvm/errors.hpp"

namespace sqvm {
namespace {

const std::vector<ExecMode> kModes = {ExecMode::kInterp, ExecMode::kFull, ExecMode::kNoInline, ExecMode::kNoFlags};

using testing::hand_count;

const Table &table(const Database &db, const char *name) { return *db.find_table(name); }

TEST(Fixture, TableSizesFollowRowCount) {
  Database db = generate_fixture(10, 42);
  EXPECT_EQ(table(db, "lineitem").row_count(), 10u);
  EXPECT_EQ(table(db, "partsupp").row_count(), 10u);
  EXPECT_EQ(table(db, "part").row_count(), 2u);
  EXPECT_EQ(table(db, "supplier").row_count(), 1u);

  Database small = generate_fixture(3, 1);
  EXPECT_EQ(table(small, "part").row_count(), 1u);
  EXPECT_EQ(table(small, "supplier").row_count(), 1u);
}

TEST(Fixture, DeterministicPerSeed) {
  EXPECT_EQ(serialize_database(generate_fixture(10, 42)), serialize_database(generate_fixture(10, 42)));
  EXPECT_NE(serialize_database(generate_fixture(10, 42)), serialize_database(generate_fixture(10, 43)));
}

TEST(Fixture, ZeroRowsRejected) {
  EXPECT_THROW(generate_fixture(0, 1), UsageError);
  EXPECT_THROW(generate_fixture(-5, 1), UsageError);
}

TEST(Fixture, ValueRangesAndReferences) {
  Database db = generate_fixture(500, 9);
  const Table &lineitem = table(db, "lineitem");
  for (std::size_t i = 0; i < lineitem.row_count(); ++i) {
    const Row &r = lineitem.row(i);
    ASSERT_EQ(r[0].flags(), kFlagInt);
    EXPECT_GE(r[0].int_val(), 1);
    EXPECT_LE(r[0].int_val(), 50);
    ASSERT_EQ(r[1].flags(), kFlagReal);
    ASSERT_EQ(r[2].flags(), kFlagReal);
    EXPECT_GE(r[2].real_val(), 0.0);
    EXPECT_LT(r[2].real_val(), 0.1);
  }
  const Table &partsupp = table(db, "partsupp");
  for (std::size_t i = 0; i < partsupp.row_count(); ++i) {
    const Row &r = partsupp.row(i);
    EXPECT_GE(r[0].int_val(), 1);
    EXPECT_LE(r[0].int_val(), 125);
    EXPECT_GE(r[1].int_val(), 1);
    EXPECT_LE(r[1].int_val(), 50);
  }
}

TEST(Bench, SuiteNamesRoundTrip) {
  ASSERT_EQ(all_suites().size(), 6u);
  for (Suite s : all_suites()) EXPECT_EQ(parse_suite(suite_name(s)), s);
  EXPECT_FALSE(parse_suite("pythonjoin"));
}

class CrossingOracle : public ::testing::TestWithParam<std::int64_t> {};

TEST_P(CrossingOracle, CountersMatchHandCountInEveryMode) {
  const Database db = generate_fixture(GetParam(), 5);
  for (Suite suite : all_suites()) {
    const CrossingCounters expected = hand_count(suite, db);
    for (ExecMode mode : kModes) {
      BenchReport r = run_bench(suite, db, {mode});
      EXPECT_EQ(r.counters.crossings, expected.crossings) << suite_name(suite) << " " << mode_name(mode);
      EXPECT_EQ(r.counters.values_converted, expected.values_converted) << suite_name(suite) << " " << mode_name(mode);
    }
    const std::uint64_t n = static_cast<std::uint64_t>(GetParam());
    EXPECT_EQ(crossing_formula(suite, n, n), expected) << suite_name(suite);
  }
}

INSTANTIATE_TEST_SUITE_P(Rows, CrossingOracle, ::testing::Values(10, 100));

TEST(Bench, PublishedCountAnchors) {
  EXPECT_EQ(crossing_formula(Suite::kSelect, 6001215, 0), (CrossingCounters{6001217, 18003645}));
  EXPECT_EQ(crossing_formula(Suite::kHostFunction, 6001215, 0), (CrossingCounters{12002434, 18003645}));
  EXPECT_EQ(crossing_formula(Suite::kFillTable, 100000, 0), (CrossingCounters{200004, 400000}));
  EXPECT_EQ(crossing_formula(Suite::kInnerJoin, 0, 800000), (CrossingCounters{800002, 1600000}));
  EXPECT_EQ(crossing_formula(Suite::kHostJoin, 0, 800000), (CrossingCounters{4000002, 4800000}));
  // The published aggregate row is (6001218, 12002431); the counting model
  // adds the connect, the registration, the finalize callback and DONE.
  EXPECT_EQ(crossing_formula(Suite::kHostAggregate, 6001215, 0), (CrossingCounters{6001221, 12002432}));
}

TEST(Bench, ChecksumsAgreeAcrossModes) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Database db = generate_fixture(100, seed);
    for (Suite suite : all_suites()) {
      const std::uint64_t reference = run_bench(suite, db, {ExecMode::kInterp}).results_checksum;
      for (ExecMode mode : kModes) {
        EXPECT_EQ(run_bench(suite, db, {mode}).results_checksum, reference)
            << suite_name(suite) << " " << mode_name(mode) << " seed " << seed;
      }
    }
  }
}

TEST(Bench, TracesFormInFullMode) {
  const Database db = generate_fixture(200, 4);
  for (Suite suite : all_suites()) {
    BenchReport r = run_bench(suite, db, {ExecMode::kFull});
    EXPECT_GT(r.stats.traces_formed, 0u) << suite_name(suite);
    EXPECT_GT(r.stats.rows_from_traces + r.stats.trace_ops_executed, 0u) << suite_name(suite);
    BenchReport i = run_bench(suite, db, {ExecMode::kInterp});
    EXPECT_EQ(i.stats.traces_formed, 0u);
    EXPECT_EQ(i.stats.read_flags_executed, 0u);
  }
}

TEST(Bench, AblationMetricOrdering) {
  const Database db = generate_fixture(1000, 2);
  for (Suite suite : all_suites()) {
    BenchReport full = run_bench(suite, db, {ExecMode::kFull});
    BenchReport no_flags = run_bench(suite, db, {ExecMode::kNoFlags});
    EXPECT_LE(full.stats.read_flags_executed, no_flags.stats.read_flags_executed) << suite_name(suite);
  }
  for (Suite suite : {Suite::kHostFunction, Suite::kHostAggregate}) {
    EXPECT_EQ(run_bench(suite, db, {ExecMode::kFull}).stats.opaque_calls_executed, 0u) << suite_name(suite);
    EXPECT_GT(run_bench(suite, db, {ExecMode::kNoInline}).stats.opaque_calls_executed, 0u) << suite_name(suite);
  }
}

TEST(Bench, SelectEmitsLineitemAndHostArithmetic) {
  const Database db = generate_fixture(100, 8);
  std::vector<Row> rows;
  BenchReport r = run_bench(Suite::kSelect, db, {ExecMode::kFull, 16, &rows});
  const Table &lineitem = table(db, "lineitem");
  ASSERT_EQ(rows.size(), lineitem.row_count());
  double total = 0;
  ResultChecksum expected;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row &src = lineitem.row(i);
    EXPECT_EQ(rows[i], src);
    expected.add(src);
    total += static_cast<double>(src[0].int_val()) * src[1].real_val() * (1.0 - src[2].real_val());
  }
  EXPECT_EQ(r.results_checksum, expected.value());
  EXPECT_DOUBLE_EQ(r.host_total, total);
}

TEST(Bench, InnerJoinMatchesNestedLoopOracle) {
  const Database db = generate_fixture(120, 3);
  std::vector<Row> rows;
  run_bench(Suite::kInnerJoin, db, {ExecMode::kFull, 16, &rows});
  std::vector<Row> expected;
  const Table &ps = table(db, "partsupp");
  const Table &part = table(db, "part");
  const Table &supplier = table(db, "supplier");
  for (std::size_t i = 0; i < ps.row_count(); ++i) {
    for (std::size_t j = 0; j < part.row_count(); ++j) {
      if (!(part.row(j)[0] == ps.row(i)[0])) continue;
      for (std::size_t k = 0; k < supplier.row_count(); ++k) {
        if (supplier.row(k)[0] == ps.row(i)[1]) expected.push_back({part.row(j)[1], supplier.row(k)[1]});
      }
    }
  }
  EXPECT_EQ(rows, expected);
}

TEST(Bench, HostJoinMatchesHashJoinOracle) {
  const Database db = generate_fixture(100, 6);
  const std::vector<Row> expected = testing::host_join_oracle(db);
  for (ExecMode mode : kModes) {
    std::vector<Row> rows;
    run_bench(Suite::kHostJoin, db, {mode, 16, &rows});
    EXPECT_EQ(rows, expected) << mode_name(mode);
  }
}

TEST(Bench, HostFunctionAndAggregateOracles) {
  const Database db = generate_fixture(300, 12);
  const Table &lineitem = table(db, "lineitem");
  std::vector<Row> expected_abs;
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < lineitem.row_count(); ++i) {
    const std::int64_t q = lineitem.row(i)[0].int_val();
    expected_abs.push_back({ValueCell::integer(std::llabs(q - 25))});
    sum += q;
  }
  for (ExecMode mode : kModes) {
    std::vector<Row> rows;
    run_bench(Suite::kHostFunction, db, {mode, 16, &rows});
    EXPECT_EQ(rows, expected_abs) << mode_name(mode);
    rows.clear();
    run_bench(Suite::kHostAggregate, db, {mode, 16, &rows});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0][0], ValueCell::integer(sum)) << mode_name(mode);
  }
}

TEST(Bench, FillTableStoresSourceRows) {
  const Database db = generate_fixture(150, 10);
  std::vector<Row> rows;
  run_bench(Suite::kFillTable, db, {ExecMode::kFull, 16, &rows});
  const Table &lineitem = table(db, "lineitem");
  ASSERT_EQ(rows.size(), lineitem.row_count());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i], (Row{lineitem.row(i)[0], lineitem.row(i)[2]}));
  }
  // The fixture itself is untouched.
  EXPECT_EQ(db.find_table("filltable"), nullptr);
}

TEST(Bench, JsonReportIsVersioned) {
  BenchReport r = run_bench(Suite::kSelect, generate_fixture(10, 1), {ExecMode::kFull});
  const std::string json = report_json(r);
  EXPECT_NE(json.find("\"bench_format\": 1"), std::string::npos);
  EXPECT_NE(json.find("\"benchmark\": \"select\""), std::string::npos);
  EXPECT_NE(json.find("\"crossings\": 12"), std::string::npos);
  EXPECT_NE(report_text(r).find("crossings 12"), std::string::npos);
}

}  // namespace
}  // namespace sqvm
