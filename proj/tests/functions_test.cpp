#include <gtest/gtest.h>

#include "sqvm/errors.hpp"
#include "sqvm/functions.hpp"

namespace sqvm {
namespace {

const char *kAbs = "(if (lt (arg 0) (const 0)) (neg (arg 0)) (arg 0))";

ValueCell eval1(const std::string &text, ValueCell a) {
  const ValueCell args[] = {std::move(a)};
  return eval_scripted(ScriptedExpr::parse(text), args);
}

TEST(ScriptedExpr, AbsOverIntegers) {
  EXPECT_EQ(eval1(kAbs, ValueCell::integer(-7)), ValueCell::integer(7));
  EXPECT_EQ(eval1(kAbs, ValueCell::integer(3)), ValueCell::integer(3));
  EXPECT_EQ(eval1(kAbs, ValueCell::real(-0.5)), ValueCell::real(0.5));
  EXPECT_TRUE(eval1(kAbs, ValueCell::null()).is_null());
}

TEST(ScriptedExpr, AccumulatorAndCount) {
  const ScriptedExpr step = ScriptedExpr::parse("(add (acc) (arg 0))");
  const ValueCell acc = ValueCell::integer(1);
  const ValueCell args[] = {ValueCell::integer(2)};
  EXPECT_EQ(eval_scripted(step, args, &acc), ValueCell::integer(3));
  const ValueCell sum = ValueCell::integer(3);
  EXPECT_EQ(eval_scripted(ScriptedExpr::parse("(div (to_real (acc)) (count))"), {}, &sum, 2), ValueCell::real(1.5));
}

TEST(ScriptedExpr, DivisionByZeroIsNull) {
  EXPECT_TRUE(eval_scripted(ScriptedExpr::parse("(div (const 1) (const 0))"), {}).is_null());
}

TEST(ScriptedExpr, ArithmeticOverflowsToReal) {
  const ValueCell big = eval1("(add (arg 0) (const 1))", ValueCell::integer(INT64_MAX));
  EXPECT_EQ(big.flags(), kFlagReal);
  const ValueCell neg = eval1("(neg (arg 0))", ValueCell::integer(INT64_MIN));
  EXPECT_EQ(neg.flags(), kFlagReal);
}

TEST(ScriptedExpr, NullPropagatesThroughArithmetic) {
  for (const char *op : {"add", "sub", "mul", "div"}) {
    EXPECT_TRUE(eval1(std::string("(") + op + " (arg 0) (const 2))", ValueCell::null()).is_null()) << op;
  }
  EXPECT_EQ(eval1("(isnull (arg 0))", ValueCell::null()), ValueCell::integer(1));
}

TEST(ScriptedExpr, TextRoundTrip) {
  for (const char *text : {kAbs, "(add (acc) (arg 0))", "(eq (const 'it''s') (arg 1))", "(const null)",
                           "(le (const 2.5) (to_real (count)))"}) {
    const ScriptedExpr e = ScriptedExpr::parse(text);
    EXPECT_EQ(e.to_string(), text);
    EXPECT_EQ(ScriptedExpr::parse(e.to_string()).to_string(), text);
  }
  EXPECT_EQ(ScriptedExpr::parse(kAbs).max_arg_index(), 0);
  EXPECT_EQ(ScriptedExpr::parse("(eq (arg 2) (arg 1))").max_arg_index(), 2);
}

TEST(ScriptedExpr, ParseErrorsCarryOffsets) {
  try {
    ScriptedExpr::parse("(add (arg 0))");
    FAIL();
  } catch (const SyntaxError &e) {
    EXPECT_EQ(e.offset(), 12u);
  }
  EXPECT_THROW(ScriptedExpr::parse("(frob (arg 0))"), SyntaxError);
  EXPECT_THROW(ScriptedExpr::parse("(arg -1)"), SyntaxError);
  EXPECT_THROW(ScriptedExpr::parse("(const 'open)"), SyntaxError);
  EXPECT_THROW(ScriptedExpr::parse("(acc) extra"), SyntaxError);
}

TEST(Builtins, FoldAgreesWithValueArithmetic) {
  const std::vector<ValueCell> column = {ValueCell::integer(1), ValueCell::null(), ValueCell::real(2.5),
                                         ValueCell::integer(4)};
  for (const HostAggregate &agg : builtin_aggregates()) {
    ValueCell acc = agg.init;
    std::int64_t count = 0;
    ValueCell oracle_acc = ValueCell::integer(0);
    std::int64_t oracle_count = 0;
    for (const ValueCell &v : column) {
      if (agg.skip_nulls && v.is_null()) {
        continue;
      }
      std::vector<ValueCell> args;
      if (agg.n_args == 1) {
        args.push_back(v);
      }
      ++count;
      acc = invoke_step(agg, acc, args, count);
      ++oracle_count;
      if (agg.name == "count") {
        oracle_acc = ValueCell::integer(oracle_count);
      } else {
        oracle_acc = arith_with_overflow(ArithKind::kAdd, oracle_acc, v);
      }
    }
    const ValueCell result = invoke_finalize(agg, acc, count);
    if (agg.name == "avg") {
      EXPECT_EQ(result, ValueCell::real(7.5 / 3));
    } else {
      EXPECT_EQ(result, oracle_acc) << agg.name << "/" << agg.n_args;
    }
  }
}

TEST(Builtins, AvgOfNothingIsNull) {
  for (const HostAggregate &agg : builtin_aggregates()) {
    if (agg.name == "avg") {
      EXPECT_TRUE(invoke_finalize(agg, agg.init, 0).is_null());
    }
  }
}

TEST(HostFunction, NativeArityChecked) {
  HostFunction f{"twice", 1, NativeFunction([](std::span<const ValueCell> a) {
                   return arith_with_overflow(ArithKind::kMul, a[0], ValueCell::integer(2));
                 })};
  const ValueCell args[] = {ValueCell::integer(21)};
  EXPECT_EQ(invoke_function(f, args), ValueCell::integer(42));
  EXPECT_THROW(invoke_function(f, {}), std::invalid_argument);
  EXPECT_FALSE(f.scripted());
}

}  // namespace
}  // namespace sqvm
