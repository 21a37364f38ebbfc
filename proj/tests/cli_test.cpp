#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sqvm/cli.hpp"
#include "sqvm/errors.hpp"
#include "sqvm/storage.hpp"

namespace sqvm {
namespace {

namespace fs = std::filesystem;

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "sqvm");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sqvm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string &name) const { return (dir_ / name).string(); }

  std::string fixture(int rows = 100) {
    const std::string db = path("fixture.json");
    EXPECT_EQ(invoke({"gen", "--db", db, "--rows", std::to_string(rows), "--seed", "7"}).code, 0);
    return db;
  }

  fs::path dir_;
};

constexpr const char *kRunningExample = "SELECT quantity, extendedprice, discount FROM lineitem";

TEST(CliSpecs, FunctionSpec) {
  HostFunction fn = cli::parse_function_spec("myabs/1=(if (lt (arg 0) (const 0)) (neg (arg 0)) (arg 0))");
  EXPECT_EQ(fn.name, "myabs");
  EXPECT_EQ(fn.n_args, 1);
  EXPECT_TRUE(fn.scripted());
  EXPECT_THROW(cli::parse_function_spec("noarity=(arg 0)"), UsageError);
  EXPECT_THROW(cli::parse_function_spec("f/x=(arg 0)"), UsageError);
  EXPECT_THROW(cli::parse_function_spec("f/1=(arg"), SyntaxError);
}

TEST(CliSpecs, AggregateSpec) {
  HostAggregate agg = cli::parse_aggregate_spec("mean/1=(add (acc) (arg 0));(div (acc) (count));0.0");
  EXPECT_EQ(agg.name, "mean");
  EXPECT_EQ(agg.init, ValueCell::real(0.0));
  EXPECT_TRUE(agg.scripted());
  HostAggregate plain = cli::parse_aggregate_spec("s/1=(add (acc) (arg 0))");
  EXPECT_EQ(plain.init, ValueCell::integer(0));
  EXPECT_THROW(cli::parse_aggregate_spec("s/1=(acc);(acc);0;extra"), UsageError);
}

TEST(CliSpecs, Values) {
  EXPECT_EQ(cli::parse_value("NULL"), ValueCell::null());
  EXPECT_EQ(cli::parse_value("-12"), ValueCell::integer(-12));
  EXPECT_EQ(cli::parse_value("2.5"), ValueCell::real(2.5));
  EXPECT_EQ(cli::parse_value("12abc"), ValueCell::text("12abc"));
  EXPECT_EQ(cli::parse_value(""), ValueCell::text(""));
}

TEST_F(CliTest, RunPrintsTabSeparatedRows) {
  const std::string db = path("db.json");
  ASSERT_EQ(invoke({"run", "--db", db, "CREATE TABLE t (a INTEGER, b TEXT, c REAL)"}).code, 0);
  ASSERT_EQ(invoke({"run", "--db", db, "INSERT INTO t VALUES (1, 'x', 1.5)"}).code, 0);
  ASSERT_EQ(invoke({"run", "--db", db, "INSERT INTO t VALUES (?, ?, ?)", "2", "NULL", "3"}).code, 0);
  Invocation r = invoke({"run", "--db", db, "SELECT a, b, c FROM t"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "1\tx\t1.5\n2\tNULL\t3.0\n");
}

TEST_F(CliTest, RunReportsSyntaxErrorOffset) {
  Invocation r = invoke({"run", "--db", fixture(), "SELECT quantity FROM"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("offset 20"), std::string::npos) << r.err;
}

TEST_F(CliTest, RunReportsUnknownTable) {
  Invocation r = invoke({"run", "--db", fixture(), "--function", "boom/1=(arg 0)", "SELECT boom(quantity) FROM nope"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, RunWithScriptedFunction) {
  Invocation r = invoke({"run", "--db", fixture(10), "--function", "twice/1=(mul (arg 0) (const 2))",
                         "SELECT twice(quantity) FROM lineitem"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 10);
}

TEST_F(CliTest, ExplainDoesNotExecute) {
  const std::string db = path("db.json");
  ASSERT_EQ(invoke({"run", "--db", db, "CREATE TABLE t (a INTEGER)"}).code, 0);
  Invocation r = invoke({"run", "--db", db, "--explain", "INSERT INTO t VALUES (1)"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("|Insert|"), std::string::npos);
  EXPECT_EQ(open_database(db).find_table("t")->row_count(), 0u);
  Invocation e = invoke({"explain", "--db", db, "SELECT a FROM t"});
  EXPECT_NE(e.out.find("0|Init|"), std::string::npos);
}

TEST_F(CliTest, GenIsByteIdentical) {
  ASSERT_EQ(invoke({"gen", "--db", path("a.json"), "--rows", "10", "--seed", "42"}).code, 0);
  ASSERT_EQ(invoke({"gen", "--db", path("b.json"), "--rows", "10", "--seed", "42"}).code, 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  Database db = open_database(path("a.json"));
  EXPECT_EQ(db.find_table("part")->row_count(), 2u);
  EXPECT_EQ(db.find_table("supplier")->row_count(), 1u);
  EXPECT_EQ(invoke({"gen", "--db", path("c.json"), "--rows", "0"}).code, 1);
}

TEST_F(CliTest, TraceDumpRunningExample) {
  Invocation r = invoke({"trace-dump", "--db", fixture(), "--warm", "32", "--threshold", "16", kRunningExample});
  ASSERT_EQ(r.code, 0) << r.err;
  // RealAffinity sections are empty in full mode.
  EXPECT_NE(r.out.find("# opcode RealAffinity\n# opcode"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.find("affinity_real"), std::string::npos);
  EXPECT_NE(r.out.find("ops: 22 -> 12"), std::string::npos) << r.out;

  Invocation nf = invoke({"trace-dump", "--db", fixture(), "--mode", "no-flags", kRunningExample});
  ASSERT_EQ(nf.code, 0);
  EXPECT_NE(nf.out.find("affinity_real"), std::string::npos);
}

TEST_F(CliTest, TraceDumpWithoutTraceFails) {
  Invocation r = invoke({"trace-dump", "--db", fixture(), "--warm", "4", "--threshold", "16", kRunningExample});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("no trace"), std::string::npos);
}

TEST_F(CliTest, BenchJsonAndVerify) {
  Invocation r = invoke({"bench", "select", "--rows", "10", "--format", "json", "--verify"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\"bench_format\": 1"), std::string::npos);
  EXPECT_NE(r.out.find("\"crossings\": 12"), std::string::npos);
  EXPECT_NE(r.out.find("\"values_converted\": 30"), std::string::npos);

  Invocation all = invoke({"bench", "all", "--mode", "all", "--rows", "50", "--verify"});
  EXPECT_EQ(all.code, 0) << all.err;

  EXPECT_EQ(invoke({"bench", "pythonjoin"}).code, 1);
  EXPECT_EQ(invoke({"bench", "select", "--mode", "turbo"}).code, 1);
}

TEST_F(CliTest, BenchUsesFixtureFile) {
  Invocation r = invoke({"bench", "hostfunction", "--db", fixture(10), "--format", "json"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\"crossings\": 24"), std::string::npos) << r.out;
}

TEST_F(CliTest, LoadCsv) {
  const std::string csv = path("in.csv");
  std::ofstream(csv) << "a,b\n1,\"x,y\"\n2,\n";
  const std::string db = path("db.json");
  Invocation r = invoke({"load", "--db", db, "--table", "t", "--csv", csv, "--schema", "a:INTEGER,b:TEXT", "--header"});
  ASSERT_EQ(r.code, 0) << r.err;
  Invocation q = invoke({"run", "--db", db, "SELECT a, b FROM t"});
  EXPECT_EQ(q.out, "1\tx,y\n2\tNULL\n");
  EXPECT_EQ(invoke({"load", "--db", db, "--table", "u", "--csv", csv}).code, 1);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(invoke({}).code, 1);
  EXPECT_EQ(invoke({"run"}).code, 1);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

}  // namespace
}  // namespace sqvm
