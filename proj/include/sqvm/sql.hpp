#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sqvm/storage.hpp"
#include "sqvm/value.hpp"

namespace sqvm::sql {

struct Expr {
  enum class Kind { kColumn, kLiteral, kParam, kBinary, kCall };

  Kind kind = Kind::kLiteral;
  std::size_t offset = 0;
  /// kColumn: optional qualifier and column name. kCall: function name.
  std::string qualifier;
  std::string name;
  ValueCell literal;
  /// kParam: 1-based position among all '?' placeholders of the statement.
  int param = 0;
  /// kBinary: '+', '-' or '*'.
  char op = 0;
  /// kBinary: two operands. kCall: arguments (empty for count(*)).
  std::vector<Expr> args;
  /// kCall written as f(*).
  bool star = false;
};

enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe };

std::string_view compare_op_text(CompareOp op);

struct Comparison {
  Expr lhs;
  CompareOp op = CompareOp::kEq;
  Expr rhs;
  std::size_t offset = 0;
};

struct TableRef {
  std::string name;
  std::size_t offset = 0;
  /// Join condition; empty for the first table.
  std::vector<Comparison> on;
};

struct Select {
  std::vector<Expr> items;
  std::vector<TableRef> from;
  std::vector<Comparison> where;
};

struct Insert {
  std::string table;
  std::size_t table_offset = 0;
  std::vector<Expr> values;
};

struct CreateTable {
  std::string table;
  std::vector<ColumnSchema> columns;
};

struct Statement {
  std::variant<Select, Insert, CreateTable> body;
  int param_count = 0;
};

/// Throws SyntaxError with the byte offset of the first unexpected token.
Statement parse(std::string_view sql);

}  // namespace sqvm::sql
