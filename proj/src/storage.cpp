#include "sqvm/storage.hpp"

#include <utility>

#include "sqvm/errors.hpp"
#include "strutil.hpp"

namespace sqvm {

std::string_view affinity_name(Affinity a) {
  switch (a) {
    case Affinity::kInteger:
      return "INTEGER";
    case Affinity::kReal:
      return "REAL";
    case Affinity::kText:
      return "TEXT";
    case Affinity::kNone:
      return "NONE";
  }
  return "NONE";
}

std::optional<Affinity> parse_affinity(std::string_view name) {
  const std::string n = detail::to_lower(name);
  if (n == "integer" || n == "int") {
    return Affinity::kInteger;
  }
  if (n == "real" || n == "float" || n == "double") {
    return Affinity::kReal;
  }
  if (n == "text") {
    return Affinity::kText;
  }
  if (n == "none" || n == "blob") {
    return Affinity::kNone;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Table
// ---------------------------------------------------------------------------

Table::Table(std::string name, std::vector<ColumnSchema> schema, int root)
    : name_(std::move(name)), schema_(std::move(schema)), root_(root) {}

std::optional<std::size_t> Table::column_index(std::string_view column) const {
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (detail::iequals(schema_[i].name, column)) {
      return i;
    }
  }
  return std::nullopt;
}

std::int64_t Table::insert_row(Row cells) {
  if (cells.size() != schema_.size()) {
    throw SchemaError("table '" + name_ + "' has " + std::to_string(schema_.size()) + " columns but " +
                      std::to_string(cells.size()) + " values were supplied");
  }
  if (readers_ > 0) {
    throw UsageError("table '" + name_ + "' is being read; writes are rejected while a read cursor is open");
  }
  rows_.push_back(std::move(cells));
  return static_cast<std::int64_t>(rows_.size());
}

bool operator==(const Table &a, const Table &b) {
  return a.name_ == b.name_ && a.schema_ == b.schema_ && a.rows_ == b.rows_;
}

// ---------------------------------------------------------------------------
// Database
// ---------------------------------------------------------------------------

Database::Database(const Database &other) : path_(other.path_) {
  for (const auto &t : other.tables_) {
    auto copy = std::make_unique<Table>(t->name(), t->schema(), t->root());
    for (std::size_t i = 0; i < t->row_count(); ++i) {
      copy->insert_row(t->row(i));
    }
    tables_.push_back(std::move(copy));
  }
}

Database &Database::operator=(const Database &other) {
  if (this != &other) {
    Database tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

Table &Database::create_table(std::string name, std::vector<ColumnSchema> schema) {
  if (name.empty()) {
    throw SchemaError("table name must not be empty");
  }
  if (find_table(name) != nullptr) {
    throw SchemaError("table '" + name + "' already exists");
  }
  if (schema.empty()) {
    throw SchemaError("table '" + name + "' needs at least one column");
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (detail::iequals(schema[i].name, schema[j].name)) {
        throw SchemaError("duplicate column '" + schema[i].name + "' in table '" + name + "'");
      }
    }
  }
  const int root = static_cast<int>(tables_.size()) + 1;
  tables_.push_back(std::make_unique<Table>(std::move(name), std::move(schema), root));
  return *tables_.back();
}

Table *Database::find_table(std::string_view name) {
  for (auto &t : tables_) {
    if (detail::iequals(t->name(), name)) {
      return t.get();
    }
  }
  return nullptr;
}

const Table *Database::find_table(std::string_view name) const {
  return const_cast<Database *>(this)->find_table(name);
}

Table *Database::find_table_by_root(int root) {
  if (root < 1 || root > static_cast<int>(tables_.size())) {
    return nullptr;
  }
  return tables_[root - 1].get();
}

std::vector<const Table *> Database::tables() const {
  std::vector<const Table *> out;
  out.reserve(tables_.size());
  for (const auto &t : tables_) {
    out.push_back(t.get());
  }
  return out;
}

bool operator==(const Database &a, const Database &b) {
  if (a.tables_.size() != b.tables_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.tables_.size(); ++i) {
    if (!(*a.tables_[i] == *b.tables_[i])) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Cursor
// ---------------------------------------------------------------------------

Cursor::Cursor(Table &table, CursorMode mode) : table_(&table), mode_(mode) {
  if (mode_ == CursorMode::kRead) {
    ++table_->readers_;
  }
}

Cursor::~Cursor() { release(); }

Cursor::Cursor(const Cursor &other)
    : table_(other.table_), mode_(other.mode_), pos_(other.pos_), at_end_(other.at_end_), open_(other.open_) {
  if (open_ && mode_ == CursorMode::kRead) {
    ++table_->readers_;
  }
}

Cursor &Cursor::operator=(const Cursor &other) {
  if (this != &other) {
    Cursor tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

Cursor::Cursor(Cursor &&other) noexcept
    : table_(other.table_), mode_(other.mode_), pos_(other.pos_), at_end_(other.at_end_), open_(other.open_) {
  other.open_ = false;
}

Cursor &Cursor::operator=(Cursor &&other) noexcept {
  if (this != &other) {
    release();
    table_ = other.table_;
    mode_ = other.mode_;
    pos_ = other.pos_;
    at_end_ = other.at_end_;
    open_ = other.open_;
    other.open_ = false;
  }
  return *this;
}

void Cursor::release() {
  if (open_ && mode_ == CursorMode::kRead) {
    --table_->readers_;
  }
  open_ = false;
}

void Cursor::require_open() const {
  if (!open_) {
    throw UsageError("cursor on '" + table_->name() + "' is closed");
  }
}

bool Cursor::rewind() {
  require_open();
  pos_ = 0;
  at_end_ = table_->row_count() == 0;
  return at_end_;
}

bool Cursor::next() {
  require_open();
  if (at_end_) {
    return false;
  }
  ++pos_;
  if (pos_ >= table_->row_count()) {
    at_end_ = true;
    return false;
  }
  return true;
}

ColumnRead Cursor::column(std::size_t col) const {
  require_open();
  if (at_end_) {
    throw UsageError("cursor on '" + table_->name() + "' is not positioned on a row");
  }
  if (col >= table_->arity()) {
    throw UsageError("column " + std::to_string(col) + " out of range for '" + table_->name() + "'");
  }
  const ValueCell &cell = table_->rows_[pos_][col];
  return {cell, encode_column_result(kStatusOk, cell.flags())};
}

void Cursor::close() {
  require_open();
  release();
}

}  // namespace sqvm
