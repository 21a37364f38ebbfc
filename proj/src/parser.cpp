#include <cctype>
#include <charconv>
#include <initializer_list>
#include <system_error>

#include "sqvm/errors.hpp"
#include "sqvm/sql.hpp"
#include "strutil.hpp"

namespace sqvm::sql {

std::string_view compare_op_text(CompareOp op) {
  switch (op) {
    case CompareOp::kEq:
      return "=";
    case CompareOp::kNe:
      return "!=";
    case CompareOp::kLt:
      return "<";
    case CompareOp::kLe:
      return "<=";
    case CompareOp::kGt:
      return ">";
    case CompareOp::kGe:
      return ">=";
  }
  return "?";
}

namespace {

enum class Tok { kIdent, kQuotedIdent, kInt, kReal, kString, kPunct, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  std::size_t offset = 0;
};

constexpr std::string_view kKeywords[] = {"select", "from", "where", "and",    "join",   "inner", "on",
                                          "insert", "into", "values", "create", "table", "null"};

bool is_keyword(std::string_view word) {
  for (auto k : kKeywords) {
    if (detail::iequals(word, k)) {
      return true;
    }
  }
  return false;
}

std::vector<Token> lex(std::string_view sql) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = sql.size();
  auto is_ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  while (true) {
    while (i < n && std::isspace(static_cast<unsigned char>(sql[i]))) {
      ++i;
    }
    if (i + 1 < n && sql[i] == '-' && sql[i + 1] == '-') {
      while (i < n && sql[i] != '\n') {
        ++i;
      }
      continue;
    }
    if (i >= n) {
      break;
    }
    const std::size_t start = i;
    const char c = sql[i];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < n && is_ident_char(sql[i])) {
        ++i;
      }
      out.push_back({Tok::kIdent, std::string(sql.substr(start, i - start)), start});
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      bool real = false;
      while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) {
        ++i;
      }
      if (i < n && sql[i] == '.') {
        real = true;
        ++i;
        while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) {
          ++i;
        }
      }
      if (i < n && (sql[i] == 'e' || sql[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < n && (sql[j] == '+' || sql[j] == '-')) {
          ++j;
        }
        if (j < n && std::isdigit(static_cast<unsigned char>(sql[j]))) {
          real = true;
          i = j;
          while (i < n && std::isdigit(static_cast<unsigned char>(sql[i]))) {
            ++i;
          }
        }
      }
      if (i < n && is_ident_char(sql[i])) {
        throw SyntaxError(i, "end of number");
      }
      out.push_back({real ? Tok::kReal : Tok::kInt, std::string(sql.substr(start, i - start)), start});
    } else if (c == '\'' || c == '"') {
      std::string text;
      ++i;
      while (true) {
        if (i >= n) {
          throw SyntaxError(start, c == '\'' ? "closing quote" : "closing double quote");
        }
        if (sql[i] == c) {
          if (i + 1 < n && sql[i + 1] == c) {
            text += c;
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        text += sql[i++];
      }
      out.push_back({c == '\'' ? Tok::kString : Tok::kQuotedIdent, std::move(text), start});
    } else {
      static constexpr std::string_view kTwo[] = {"<=", ">=", "!=", "<>", "=="};
      std::string p(1, c);
      if (i + 1 < n) {
        const std::string_view two = sql.substr(i, 2);
        for (auto t : kTwo) {
          if (two == t) {
            p = std::string(two);
          }
        }
      }
      static constexpr std::string_view kOne = "(),;.*+-=<>?";
      if (p.size() == 1 && kOne.find(c) == std::string_view::npos) {
        throw SyntaxError(i, "a token");
      }
      i += p.size();
      out.push_back({Tok::kPunct, std::move(p), start});
    }
  }
  out.push_back({Tok::kEnd, "", n});
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view sql) : tokens_(lex(sql)) {}

  Statement parse_statement() {
    Statement st;
    if (at_keyword("select")) {
      st.body = parse_select();
    } else if (at_keyword("insert")) {
      st.body = parse_insert();
    } else if (at_keyword("create")) {
      st.body = parse_create();
    } else {
      fail("SELECT, INSERT or CREATE");
    }
    accept_punct(";");
    if (peek().kind != Tok::kEnd) {
      fail("end of statement");
    }
    st.param_count = params_;
    return st;
  }

 private:
  const Token &peek() const { return tokens_[pos_]; }
  const Token &take() { return tokens_[pos_++]; }

  [[noreturn]] void fail(const std::string &expected) const { throw SyntaxError(peek().offset, expected); }

  bool at_keyword(std::string_view kw) const {
    return peek().kind == Tok::kIdent && detail::iequals(peek().text, kw);
  }

  bool accept_keyword(std::string_view kw) {
    if (at_keyword(kw)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) {
      fail(detail::to_upper(kw));
    }
  }

  bool at_punct(std::string_view p) const { return peek().kind == Tok::kPunct && peek().text == p; }

  bool accept_punct(std::string_view p) {
    if (at_punct(p)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) {
      fail("'" + std::string(p) + "'");
    }
  }

  std::string identifier(const char *what) {
    const Token &t = peek();
    if (t.kind == Tok::kQuotedIdent || (t.kind == Tok::kIdent && !is_keyword(t.text))) {
      ++pos_;
      return t.text;
    }
    fail(what);
  }

  Select parse_select() {
    expect_keyword("select");
    Select s;
    do {
      s.items.push_back(parse_expr());
    } while (accept_punct(","));
    expect_keyword("from");
    TableRef first;
    first.offset = peek().offset;
    first.name = identifier("table name");
    s.from.push_back(std::move(first));
    while (true) {
      if (accept_keyword("inner")) {
        expect_keyword("join");
      } else if (!accept_keyword("join")) {
        break;
      }
      TableRef ref;
      ref.offset = peek().offset;
      ref.name = identifier("table name");
      expect_keyword("on");
      ref.on = parse_conjunction();
      s.from.push_back(std::move(ref));
    }
    if (accept_keyword("where")) {
      s.where = parse_conjunction();
    }
    return s;
  }

  Insert parse_insert() {
    expect_keyword("insert");
    expect_keyword("into");
    Insert ins;
    ins.table_offset = peek().offset;
    ins.table = identifier("table name");
    expect_keyword("values");
    expect_punct("(");
    do {
      ins.values.push_back(parse_expr());
    } while (accept_punct(","));
    expect_punct(")");
    return ins;
  }

  CreateTable parse_create() {
    expect_keyword("create");
    expect_keyword("table");
    CreateTable ct;
    ct.table = identifier("table name");
    expect_punct("(");
    do {
      ColumnSchema col;
      col.name = identifier("column name");
      if (peek().kind == Tok::kIdent && !is_keyword(peek().text)) {
        const auto aff = parse_affinity(peek().text);
        if (!aff) {
          fail("column affinity (INTEGER, REAL, TEXT or NONE)");
        }
        col.affinity = *aff;
        ++pos_;
      }
      ct.columns.push_back(std::move(col));
    } while (accept_punct(","));
    expect_punct(")");
    return ct;
  }

  std::vector<Comparison> parse_conjunction() {
    std::vector<Comparison> out;
    do {
      out.push_back(parse_comparison());
    } while (accept_keyword("and"));
    return out;
  }

  Comparison parse_comparison() {
    Comparison c;
    c.offset = peek().offset;
    c.lhs = parse_expr();
    const Token &t = peek();
    if (t.kind != Tok::kPunct) {
      fail("comparison operator");
    }
    if (t.text == "=" || t.text == "==") {
      c.op = CompareOp::kEq;
    } else if (t.text == "!=" || t.text == "<>") {
      c.op = CompareOp::kNe;
    } else if (t.text == "<") {
      c.op = CompareOp::kLt;
    } else if (t.text == "<=") {
      c.op = CompareOp::kLe;
    } else if (t.text == ">") {
      c.op = CompareOp::kGt;
    } else if (t.text == ">=") {
      c.op = CompareOp::kGe;
    } else {
      fail("comparison operator");
    }
    ++pos_;
    c.rhs = parse_expr();
    return c;
  }

  Expr parse_expr() {
    Expr lhs = parse_term();
    while (at_punct("+") || at_punct("-")) {
      const Token &op = take();
      Expr rhs = parse_term();
      lhs = binary(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Expr parse_term() {
    Expr lhs = parse_factor();
    while (at_punct("*")) {
      const Token &op = take();
      Expr rhs = parse_factor();
      lhs = binary(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  static Expr binary(const Token &op, Expr lhs, Expr rhs) {
    Expr e;
    e.kind = Expr::Kind::kBinary;
    e.offset = op.offset;
    e.op = op.text[0];
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    return e;
  }

  static Expr literal(ValueCell v, std::size_t offset) {
    Expr e;
    e.kind = Expr::Kind::kLiteral;
    e.literal = std::move(v);
    e.offset = offset;
    return e;
  }

  ValueCell number(const Token &t, bool negative) {
    if (t.kind == Tok::kInt) {
      std::uint64_t u = 0;
      auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), u);
      const std::uint64_t limit = negative ? (std::uint64_t{1} << 63) : (std::uint64_t{1} << 63) - 1;
      if (r.ec == std::errc() && u <= limit) {
        return ValueCell::integer(negative ? static_cast<std::int64_t>(0 - u) : static_cast<std::int64_t>(u));
      }
    }
    double d = 0;
    std::from_chars(t.text.data(), t.text.data() + t.text.size(), d);
    return ValueCell::real(negative ? -d : d);
  }

  Expr parse_factor() {
    const Token &t = peek();
    switch (t.kind) {
      case Tok::kInt:
      case Tok::kReal:
        ++pos_;
        return literal(number(t, false), t.offset);
      case Tok::kString:
        ++pos_;
        return literal(ValueCell::text(t.text), t.offset);
      case Tok::kPunct:
        if (t.text == "-") {
          ++pos_;
          const Token &n = peek();
          if (n.kind == Tok::kInt || n.kind == Tok::kReal) {
            ++pos_;
            return literal(number(n, true), t.offset);
          }
          Expr zero = literal(ValueCell::integer(0), t.offset);
          return binary(t, std::move(zero), parse_factor());
        }
        if (t.text == "(") {
          ++pos_;
          Expr inner = parse_expr();
          expect_punct(")");
          return inner;
        }
        if (t.text == "?") {
          ++pos_;
          Expr e;
          e.kind = Expr::Kind::kParam;
          e.offset = t.offset;
          e.param = ++params_;
          return e;
        }
        break;
      case Tok::kIdent:
        if (detail::iequals(t.text, "null")) {
          ++pos_;
          return literal(ValueCell::null(), t.offset);
        }
        [[fallthrough]];
      case Tok::kQuotedIdent:
        return parse_name();
      case Tok::kEnd:
        break;
    }
    fail("expression");
  }

  Expr parse_name() {
    Expr e;
    e.offset = peek().offset;
    const std::string first = identifier("expression");
    if (accept_punct("(")) {
      e.kind = Expr::Kind::kCall;
      e.name = first;
      if (accept_punct("*")) {
        e.star = true;
      } else if (!at_punct(")")) {
        do {
          e.args.push_back(parse_expr());
        } while (accept_punct(","));
      }
      expect_punct(")");
      return e;
    }
    e.kind = Expr::Kind::kColumn;
    if (accept_punct(".")) {
      e.qualifier = first;
      e.name = identifier("column name");
    } else {
      e.name = first;
    }
    return e;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  int params_ = 0;
};

}  // namespace

Statement parse(std::string_view sql) { return Parser(sql).parse_statement(); }

}  // namespace sqvm::sql
