#include "sqvm/functions.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "sqvm/errors.hpp"

namespace sqvm {

ScriptedExpr ScriptedExpr::constant(ValueCell v) {
  ScriptedExpr e;
  e.op_ = Op::kConst;
  e.value_ = std::move(v);
  return e;
}

ScriptedExpr ScriptedExpr::arg(int index) {
  ScriptedExpr e;
  e.op_ = Op::kArg;
  e.arg_ = index;
  return e;
}

ScriptedExpr ScriptedExpr::acc() {
  ScriptedExpr e;
  e.op_ = Op::kAcc;
  return e;
}

ScriptedExpr ScriptedExpr::count() {
  ScriptedExpr e;
  e.op_ = Op::kCount;
  return e;
}

ScriptedExpr ScriptedExpr::unary(Op op, ScriptedExpr operand) {
  ScriptedExpr e;
  e.op_ = op;
  e.children_.push_back(std::move(operand));
  return e;
}

ScriptedExpr ScriptedExpr::binary(Op op, ScriptedExpr lhs, ScriptedExpr rhs) {
  ScriptedExpr e;
  e.op_ = op;
  e.children_.push_back(std::move(lhs));
  e.children_.push_back(std::move(rhs));
  return e;
}

ScriptedExpr ScriptedExpr::if_then_else(ScriptedExpr cond, ScriptedExpr then_expr, ScriptedExpr else_expr) {
  ScriptedExpr e;
  e.op_ = Op::kIf;
  e.children_.push_back(std::move(cond));
  e.children_.push_back(std::move(then_expr));
  e.children_.push_back(std::move(else_expr));
  return e;
}

int ScriptedExpr::max_arg_index() const {
  int m = op_ == Op::kArg ? arg_ : -1;
  for (const auto &c : children_) {
    m = std::max(m, c.max_arg_index());
  }
  return m;
}

std::size_t ScriptedExpr::node_count() const {
  std::size_t n = 1;
  for (const auto &c : children_) {
    n += c.node_count();
  }
  return n;
}

namespace {

struct OpInfo {
  ScriptedExpr::Op op;
  const char *name;
  int arity;
};

constexpr OpInfo kOps[] = {
    {ScriptedExpr::Op::kAdd, "add", 2},      {ScriptedExpr::Op::kSub, "sub", 2},
    {ScriptedExpr::Op::kMul, "mul", 2},      {ScriptedExpr::Op::kDiv, "div", 2},
    {ScriptedExpr::Op::kNeg, "neg", 1},      {ScriptedExpr::Op::kAbs, "abs", 1},
    {ScriptedExpr::Op::kLt, "lt", 2},        {ScriptedExpr::Op::kLe, "le", 2},
    {ScriptedExpr::Op::kEq, "eq", 2},        {ScriptedExpr::Op::kIf, "if", 3},
    {ScriptedExpr::Op::kToReal, "to_real", 1}, {ScriptedExpr::Op::kIsNull, "isnull", 1},
};

const char *op_name(ScriptedExpr::Op op) {
  switch (op) {
    case ScriptedExpr::Op::kConst:
      return "const";
    case ScriptedExpr::Op::kArg:
      return "arg";
    case ScriptedExpr::Op::kAcc:
      return "acc";
    case ScriptedExpr::Op::kCount:
      return "count";
    default:
      break;
  }
  for (const auto &info : kOps) {
    if (info.op == op) {
      return info.name;
    }
  }
  return "?";
}

std::string quote(const std::string &s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

class SexprParser {
 public:
  explicit SexprParser(std::string_view text) : text_(text) {}

  ScriptedExpr parse_all() {
    ScriptedExpr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) {
      throw SyntaxError(pos_, "end of expression");
    }
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) {
      throw SyntaxError(pos_, std::string("'") + c + "'");
    }
    ++pos_;
  }

  std::string atom() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
           text_[pos_] != ')') {
      ++pos_;
    }
    if (start == pos_) {
      throw SyntaxError(pos_, "atom");
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  ValueCell literal() {
    skip_ws();
    if (pos_ < text_.size() && (text_[pos_] == '\'' || text_[pos_] == '"')) {
      const char q = text_[pos_++];
      std::string s;
      while (true) {
        if (pos_ >= text_.size()) {
          throw SyntaxError(pos_, "closing quote");
        }
        if (text_[pos_] == q) {
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == q) {
            s += q;
            pos_ += 2;
            continue;
          }
          ++pos_;
          break;
        }
        s += text_[pos_++];
      }
      return ValueCell::text(std::move(s));
    }
    const std::size_t at = pos_;
    const std::string a = atom();
    if (a == "null" || a == "NULL") {
      return ValueCell::null();
    }
    std::int64_t i = 0;
    auto ri = std::from_chars(a.data(), a.data() + a.size(), i);
    if (ri.ec == std::errc() && ri.ptr == a.data() + a.size()) {
      return ValueCell::integer(i);
    }
    double d = 0;
    auto rd = std::from_chars(a.data(), a.data() + a.size(), d);
    if (rd.ec == std::errc() && rd.ptr == a.data() + a.size()) {
      return ValueCell::real(d);
    }
    throw SyntaxError(at, "literal");
  }

  ScriptedExpr parse_expr() {
    expect('(');
    const std::size_t at = pos_;
    const std::string head = atom();
    ScriptedExpr out;
    if (head == "const") {
      out = ScriptedExpr::constant(literal());
    } else if (head == "arg") {
      const std::size_t num_at = pos_;
      const std::string n = atom();
      int idx = -1;
      auto r = std::from_chars(n.data(), n.data() + n.size(), idx);
      if (r.ec != std::errc() || r.ptr != n.data() + n.size() || idx < 0) {
        throw SyntaxError(num_at, "argument index");
      }
      out = ScriptedExpr::arg(idx);
    } else if (head == "acc") {
      out = ScriptedExpr::acc();
    } else if (head == "count") {
      out = ScriptedExpr::count();
    } else {
      const OpInfo *info = nullptr;
      for (const auto &candidate : kOps) {
        if (head == candidate.name) {
          info = &candidate;
        }
      }
      if (info == nullptr) {
        throw SyntaxError(at, "expression operator");
      }
      std::vector<ScriptedExpr> kids;
      for (int i = 0; i < info->arity; ++i) {
        kids.push_back(parse_expr());
      }
      if (info->arity == 1) {
        out = ScriptedExpr::unary(info->op, std::move(kids[0]));
      } else if (info->arity == 2) {
        out = ScriptedExpr::binary(info->op, std::move(kids[0]), std::move(kids[1]));
      } else {
        out = ScriptedExpr::if_then_else(std::move(kids[0]), std::move(kids[1]), std::move(kids[2]));
      }
    }
    expect(')');
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

ScriptedExpr ScriptedExpr::parse(std::string_view text) { return SexprParser(text).parse_all(); }

std::string ScriptedExpr::to_string() const {
  switch (op_) {
    case Op::kConst:
      if (value_.is_null()) {
        return "(const null)";
      }
      if (value_.has(kFlagStr) && !value_.is_numeric()) {
        return "(const " + quote(value_.str_val()) + ")";
      }
      return "(const " + render_sql(value_) + ")";
    case Op::kArg:
      return "(arg " + std::to_string(arg_) + ")";
    case Op::kAcc:
      return "(acc)";
    case Op::kCount:
      return "(count)";
    default:
      break;
  }
  std::string out = "(";
  out += op_name(op_);
  for (const auto &c : children_) {
    out += ' ';
    out += c.to_string();
  }
  return out + ")";
}

namespace {

ValueCell arith(ArithKind kind, const ValueCell &a, const ValueCell &b) {
  if (a.is_null() || b.is_null()) {
    return ValueCell::null();
  }
  return arith_with_overflow(kind, to_numeric(a), to_numeric(b));
}

ValueCell compare(ScriptedExpr::Op op, const ValueCell &a, const ValueCell &b) {
  if (a.is_null() || b.is_null()) {
    return ValueCell::null();
  }
  const int c = compare_values(a, b);
  bool r = false;
  switch (op) {
    case ScriptedExpr::Op::kLt:
      r = c < 0;
      break;
    case ScriptedExpr::Op::kLe:
      r = c <= 0;
      break;
    default:
      r = c == 0;
      break;
  }
  return ValueCell::integer(r ? 1 : 0);
}

ValueCell negate(const ValueCell &v) {
  if (v.is_null()) {
    return v;
  }
  const ValueCell n = to_numeric(v);
  if (n.has(kFlagReal)) {
    return ValueCell::real(-n.real_val());
  }
  return arith_with_overflow(ArithKind::kSub, ValueCell::integer(0), n);
}

}  // namespace

ValueCell eval_scripted(const ScriptedExpr &expr, std::span<const ValueCell> args, const ValueCell *acc,
                        std::int64_t count) {
  using Op = ScriptedExpr::Op;
  const auto &kids = expr.children();
  auto sub = [&](std::size_t i) { return eval_scripted(kids[i], args, acc, count); };
  switch (expr.op()) {
    case Op::kConst:
      return expr.value();
    case Op::kArg:
      if (expr.arg_index() >= static_cast<int>(args.size())) {
        throw std::out_of_range("scripted expression reads missing argument " + std::to_string(expr.arg_index()));
      }
      return args[expr.arg_index()];
    case Op::kAcc:
      return acc != nullptr ? *acc : ValueCell::null();
    case Op::kCount:
      return ValueCell::integer(count);
    case Op::kAdd:
      return arith(ArithKind::kAdd, sub(0), sub(1));
    case Op::kSub:
      return arith(ArithKind::kSub, sub(0), sub(1));
    case Op::kMul:
      return arith(ArithKind::kMul, sub(0), sub(1));
    case Op::kDiv: {
      const ValueCell a = sub(0);
      const ValueCell b = sub(1);
      if (a.is_null() || b.is_null()) {
        return ValueCell::null();
      }
      return divide_values(to_numeric(a), to_numeric(b));
    }
    case Op::kNeg:
      return negate(sub(0));
    case Op::kAbs: {
      const ValueCell v = sub(0);
      if (v.is_null()) {
        return v;
      }
      const ValueCell n = to_numeric(v);
      if (n.has(kFlagReal)) {
        return ValueCell::real(std::fabs(n.real_val()));
      }
      return n.int_val() < 0 ? negate(n) : n;
    }
    case Op::kLt:
    case Op::kLe:
    case Op::kEq:
      return compare(expr.op(), sub(0), sub(1));
    case Op::kIf:
      return is_truthy(sub(0)) ? sub(1) : sub(2);
    case Op::kToReal: {
      const ValueCell v = sub(0);
      return v.is_null() ? v : apply_real_affinity(to_numeric(v));
    }
    case Op::kIsNull:
      return ValueCell::integer(sub(0).is_null() ? 1 : 0);
  }
  return ValueCell::null();
}

ValueCell invoke_function(const HostFunction &fn, std::span<const ValueCell> args) {
  if (static_cast<int>(args.size()) != fn.n_args) {
    throw std::invalid_argument(fn.name + " expects " + std::to_string(fn.n_args) + " arguments");
  }
  if (const auto *expr = std::get_if<ScriptedExpr>(&fn.impl)) {
    return eval_scripted(*expr, args);
  }
  return std::get<NativeFunction>(fn.impl)(args);
}

ValueCell invoke_step(const HostAggregate &agg, const ValueCell &acc, std::span<const ValueCell> args,
                      std::int64_t count) {
  if (const auto *expr = std::get_if<ScriptedExpr>(&agg.step)) {
    return eval_scripted(*expr, args, &acc, count);
  }
  return std::get<NativeStep>(agg.step)(acc, args);
}

ValueCell invoke_finalize(const HostAggregate &agg, const ValueCell &acc, std::int64_t count) {
  if (const auto *expr = std::get_if<ScriptedExpr>(&agg.finalize)) {
    return eval_scripted(*expr, {}, &acc, count);
  }
  return std::get<NativeFinalize>(agg.finalize)(acc, count);
}

std::vector<HostAggregate> builtin_aggregates() {
  std::vector<HostAggregate> out;
  out.push_back({"sum", 1, ValueCell::integer(0), ScriptedExpr::parse("(add (acc) (arg 0))"),
                 ScriptedExpr::parse("(acc)"), true, true});
  out.push_back({"avg", 1, ValueCell::integer(0), ScriptedExpr::parse("(add (acc) (arg 0))"),
                 ScriptedExpr::parse("(div (to_real (acc)) (count))"), true, true});
  out.push_back({"count", 1, ValueCell::integer(0), ScriptedExpr::parse("(add (acc) (const 1))"),
                 ScriptedExpr::parse("(acc)"), true, true});
  out.push_back({"count", 0, ValueCell::integer(0), ScriptedExpr::parse("(add (acc) (const 1))"),
                 ScriptedExpr::parse("(acc)"), false, true});
  return out;
}

}  // namespace sqvm
