#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "sqvm/codegen.hpp"
#include "sqvm/errors.hpp"
#include "sqvm/program.hpp"
#include "sqvm/sql.hpp"
#include "sql_generator.hpp"
#include "test_support.hpp"

namespace sqvm {
namespace {

using testing::kReferenceListing;
using testing::SqlGenerator;
using testing::kRunningQuery;
using testing::MapCatalog;

std::vector<std::string> lines(const std::string &text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    out.push_back(l);
  }
  return out;
}

std::vector<Opcode> opcodes(const Program &p) {
  std::vector<Opcode> out;
  for (const auto &ins : p.instructions) {
    out.push_back(ins.opcode);
  }
  return out;
}

TEST(Parser, RunningQuery) {
  const sql::Statement st = sql::parse(kRunningQuery);
  const auto &sel = std::get<sql::Select>(st.body);
  EXPECT_EQ(sel.items.size(), 3u);
  EXPECT_TRUE(sel.where.empty());
  EXPECT_EQ(sel.from.at(0).name, "lineitem");
}

TEST(Parser, Placeholder) {
  const sql::Statement st = sql::parse("SELECT Part.name FROM Part WHERE Part.PartKey = ?");
  EXPECT_EQ(st.param_count, 1);
  const auto &sel = std::get<sql::Select>(st.body);
  ASSERT_EQ(sel.where.size(), 1u);
  EXPECT_EQ(sel.where[0].rhs.kind, sql::Expr::Kind::kParam);
  EXPECT_EQ(sel.items[0].qualifier, "Part");
}

TEST(Parser, SyntaxErrorOffsets) {
  auto offset_of = [](const char *text) -> std::size_t {
    try {
      sql::parse(text);
    } catch (const SyntaxError &e) {
      return e.offset();
    }
    return std::string::npos;
  };
  EXPECT_EQ(offset_of("SELEKT x"), 0u);
  EXPECT_EQ(offset_of("SELECT a FROM"), 13u);
  EXPECT_EQ(offset_of("SELECT a FROM t WHERE a"), 23u);
  EXPECT_EQ(offset_of("SELECT a FROM t extra"), 16u);
  EXPECT_EQ(offset_of("CREATE TABLE t (a VARCHAR)"), 18u);
  EXPECT_EQ(offset_of("SELECT 'open FROM t"), 7u);
}

TEST(Parser, OtherStatements) {
  const auto ins = sql::parse("INSERT INTO t VALUES (?, 'x''y', -5, 2.5e1, NULL);");
  EXPECT_EQ(ins.param_count, 1);
  const auto &values = std::get<sql::Insert>(ins.body).values;
  ASSERT_EQ(values.size(), 5u);
  EXPECT_EQ(values[1].literal, ValueCell::text("x'y"));
  EXPECT_EQ(values[2].literal, ValueCell::integer(-5));
  EXPECT_EQ(values[3].literal, ValueCell::real(25.0));
  EXPECT_TRUE(values[4].literal.is_null());
  const auto ct = sql::parse("create table t (a integer, b real, c text, d)");
  const auto &cols = std::get<sql::CreateTable>(ct.body).columns;
  ASSERT_EQ(cols.size(), 4u);
  EXPECT_EQ(cols[3].affinity, Affinity::kNone);
  const auto minint = sql::parse("SELECT -9223372036854775808 FROM t");
  EXPECT_EQ(std::get<sql::Select>(minint.body).items[0].literal, ValueCell::integer(INT64_MIN));
}

TEST(Codegen, ReferenceListing) {
  const Database db = testing::tpch_shaped_schema();
  const Program p = compile(kRunningQuery, db, MapCatalog{});
  EXPECT_EQ(p.instructions.size(), 15u);
  const auto got = lines(explain(p));
  const auto want = lines(kReferenceListing);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (i == 12) {
      // The schema-cookie operand is not modelled: p3 is 0 instead of 23.
      EXPECT_EQ(got[i], "12|Transaction|0|0|0|0|01|");
    } else {
      EXPECT_EQ(got[i], want[i]) << "line " << i;
    }
  }
}

TEST(Codegen, ThreeColumnLineitem) {
  Database db;
  db.create_table("lineitem", {{"quantity", Affinity::kInteger},
                               {"extendedprice", Affinity::kReal},
                               {"discount", Affinity::kReal}});
  const Program p = compile(kRunningQuery, db, MapCatalog{});
  EXPECT_EQ(opcodes(p), (std::vector<Opcode>{Opcode::kInit, Opcode::kOpenRead, Opcode::kRewind, Opcode::kColumn,
                                             Opcode::kColumn, Opcode::kRealAffinity, Opcode::kColumn,
                                             Opcode::kRealAffinity, Opcode::kResultRow, Opcode::kNext,
                                             Opcode::kClose, Opcode::kHalt, Opcode::kTransaction,
                                             Opcode::kTableLock, Opcode::kGoto}));
  EXPECT_EQ(p.instructions[0].p2, 12);
  EXPECT_EQ(p.instructions[2].p2, 10);
  EXPECT_EQ(p.instructions[9].p2, 3);
  EXPECT_EQ(p.instructions[14].p2, 1);
  EXPECT_EQ(p.column_names, (std::vector<std::string>{"quantity", "extendedprice", "discount"}));
}

TEST(Codegen, NoRealColumnsNoAffinity) {
  Database db;
  db.create_table("t", {{"a", Affinity::kInteger}});
  const Program p = compile("SELECT a FROM t", db, MapCatalog{});
  const auto ops = opcodes(p);
  EXPECT_EQ(std::count(ops.begin(), ops.end(), Opcode::kColumn), 1);
  EXPECT_EQ(std::count(ops.begin(), ops.end(), Opcode::kRealAffinity), 0);
}

TEST(Codegen, JoinIsNestedLoops) {
  const Database db = testing::tpch_shaped_schema();
  const Program p = compile(
      "SELECT part.name, supplier.name FROM partsupp JOIN part ON partsupp.partkey = part.partkey "
      "JOIN supplier ON partsupp.suppkey = supplier.suppkey",
      db, MapCatalog{});
  const auto ops = opcodes(p);
  EXPECT_EQ(std::count(ops.begin(), ops.end(), Opcode::kOpenRead), 3);
  EXPECT_EQ(std::count(ops.begin(), ops.end(), Opcode::kRewind), 3);
  EXPECT_EQ(std::count(ops.begin(), ops.end(), Opcode::kNext), 3);
  EXPECT_EQ(std::count(ops.begin(), ops.end(), Opcode::kNe), 2);
  // Inner Next instructions come first and loop back to later bodies.
  std::vector<int> next_targets;
  for (const auto &ins : p.instructions) {
    if (ins.opcode == Opcode::kNext) {
      next_targets.push_back(ins.p2);
      EXPECT_EQ(ins.p5, 1);
    }
  }
  EXPECT_GT(next_targets[0], next_targets[1]);
  EXPECT_GT(next_targets[1], next_targets[2]);
}

TEST(Codegen, PredicateJumpsToNextOnFailure) {
  const Database db = testing::tpch_shaped_schema();
  const Program p = compile("SELECT part.name FROM part WHERE part.partkey = ?", db, MapCatalog{});
  EXPECT_EQ(p.param_count, 1);
  int next_pc = -1;
  for (std::size_t pc = 0; pc < p.instructions.size(); ++pc) {
    if (p.instructions[pc].opcode == Opcode::kNext) {
      next_pc = static_cast<int>(pc);
    }
  }
  bool saw_ne = false;
  for (const auto &ins : p.instructions) {
    if (ins.opcode == Opcode::kNe) {
      saw_ne = true;
      EXPECT_EQ(ins.p2, next_pc);
      EXPECT_EQ(ins.p5, kJumpIfNull);
    }
  }
  EXPECT_TRUE(saw_ne);
}

TEST(Codegen, AggregatesAndFunctions) {
  Database db;
  db.create_table("t", {{"a", Affinity::kInteger}, {"b", Affinity::kReal}});
  MapCatalog cat;
  cat.add(HostFunction{"abs", 1, ScriptedExpr::parse("(if (lt (arg 0) (const 0)) (neg (arg 0)) (arg 0))")});
  const Program agg = compile("SELECT sum(a), count(*), avg(b) FROM t", db, cat);
  const auto ops = opcodes(agg);
  EXPECT_EQ(std::count(ops.begin(), ops.end(), Opcode::kAggStep), 3);
  EXPECT_EQ(std::count(ops.begin(), ops.end(), Opcode::kAggFinal), 3);
  EXPECT_EQ(ops[1], Opcode::kNull);
  const Program fn = compile("SELECT abs(a) FROM t", db, cat);
  EXPECT_NE(explain(fn).find("|Function|0|"), std::string::npos);
  EXPECT_NE(explain(fn).find("abs(1)|01|"), std::string::npos);
  EXPECT_THROW(compile("SELECT sum(a), a FROM t", db, cat), BindError);
  EXPECT_THROW(compile("SELECT nosuch(a) FROM t", db, cat), BindError);
  EXPECT_THROW(compile("SELECT abs(sum(a)) FROM t", db, cat), BindError);
}

TEST(Codegen, InsertShape) {
  Database db;
  db.create_table("filltable", {{"a", Affinity::kInteger}, {"b", Affinity::kText}});
  const Program p = compile("INSERT INTO filltable VALUES (?, ?)", db, MapCatalog{});
  EXPECT_EQ(opcodes(p), (std::vector<Opcode>{Opcode::kInit, Opcode::kOpenWrite, Opcode::kVariable,
                                             Opcode::kVariable, Opcode::kMakeRecord, Opcode::kNewRowid,
                                             Opcode::kInsert, Opcode::kClose, Opcode::kHalt,
                                             Opcode::kTransaction, Opcode::kTableLock, Opcode::kGoto}));
  EXPECT_TRUE(p.writes);
  EXPECT_EQ(p.param_count, 2);
  EXPECT_THROW(compile("INSERT INTO filltable VALUES (1)", db, MapCatalog{}), BindError);
  EXPECT_THROW(compile("INSERT INTO filltable VALUES (a, 1)", db, MapCatalog{}), BindError);
}

TEST(Codegen, BindErrors) {
  const Database db = testing::tpch_shaped_schema();
  EXPECT_THROW(compile("SELECT x FROM nosuch", db, MapCatalog{}), BindError);
  EXPECT_THROW(compile("SELECT nosuch FROM part", db, MapCatalog{}), BindError);
  EXPECT_THROW(compile("SELECT name FROM part JOIN supplier ON part.partkey = supplier.suppkey", db, MapCatalog{}),
               BindError);
  EXPECT_THROW(compile("SELECT x.name FROM part", db, MapCatalog{}), BindError);
  EXPECT_THROW(compile("CREATE TABLE part (a INTEGER)", db, MapCatalog{}), SchemaError);
}

TEST(Program, ValidationCatchesBadOperands) {
  Program p = parse_program_listing("0|Init|0|5|0||00|\n1|Halt|0|0|0||00|\n");
  EXPECT_THROW(validate_program(p), UsageError);
  p = parse_program_listing("0|Init|0|1|0||00|\n1|Halt|0|0|0||00|\n");
  EXPECT_NO_THROW(validate_program(p));
  p.instructions.push_back({Opcode::kColumn, 3, 0, 1});
  EXPECT_THROW(validate_program(p), UsageError);
}

TEST(Program, ListingRoundTrip) {
  const Program p = parse_program_listing(kReferenceListing);
  EXPECT_EQ(explain(p), kReferenceListing);
  EXPECT_EQ(p.n_cursors, 1);
  EXPECT_EQ(p.n_registers, 4);
  EXPECT_NO_THROW(validate_program(p));
  EXPECT_EQ(explain(Program{}), "");
}

TEST(Program, ListingRejectsUnknownOpcodes) {
  EXPECT_THROW(parse_program_listing("0|Init|0|1|0||00|\n1|Frobnicate|0|0|0||00|\n"), FormatError);
  EXPECT_THROW(parse_program_listing("0|Init|0|1|0||0|\n"), FormatError);
  EXPECT_THROW(parse_program_listing("0|Init|0|1|0||00\n"), FormatError);
}

TEST(Codegen, GeneratedSelectsAlwaysCompile) {
  Database db;
  for (const char *name : {"t1", "t2"}) {
    db.create_table(name, {{"k", Affinity::kInteger},
                           {"a", Affinity::kInteger},
                           {"b", Affinity::kReal},
                           {"c", Affinity::kText}});
  }
  MapCatalog cat;
  cat.add(HostFunction{"twice", 1, ScriptedExpr::parse("(mul (arg 0) (const 2))")});
  SqlGenerator gen(5);
  for (int i = 0; i < 500; ++i) {
    const std::string text = gen.select();
    Program p;
    ASSERT_NO_THROW(p = compile(text, db, cat)) << text;
    // Every REAL column read is immediately followed by RealAffinity.
    for (std::size_t pc = 0; pc < p.instructions.size(); ++pc) {
      const Instruction &ins = p.instructions[pc];
      if (ins.opcode == Opcode::kColumn && ins.p2 == 2) {
        ASSERT_LT(pc + 1, p.instructions.size());
        EXPECT_EQ(p.instructions[pc + 1].opcode, Opcode::kRealAffinity) << text;
        EXPECT_EQ(p.instructions[pc + 1].p1, ins.p3) << text;
      }
    }
  }
}

}  // namespace
}  // namespace sqvm
