#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sqvm/value.hpp"

namespace sqvm {

enum class Affinity { kInteger, kReal, kText, kNone };

std::string_view affinity_name(Affinity a);
std::optional<Affinity> parse_affinity(std::string_view name);

struct ColumnSchema {
  std::string name;
  Affinity affinity = Affinity::kNone;

  friend bool operator==(const ColumnSchema &, const ColumnSchema &) = default;
};

using Row = std::vector<ValueCell>;

/// Append-ordered row list. Rowids are implicit: row i has rowid i + 1.
class Table {
 public:
  Table(std::string name, std::vector<ColumnSchema> schema, int root);

  const std::string &name() const { return name_; }
  const std::vector<ColumnSchema> &schema() const { return schema_; }
  /// Creation ordinal, 1-based. Plays the part of a root page number in
  /// program listings.
  int root() const { return root_; }
  std::size_t arity() const { return schema_.size(); }
  std::size_t row_count() const { return rows_.size(); }
  const Row &row(std::size_t i) const { return rows_.at(i); }
  std::int64_t next_rowid() const { return static_cast<std::int64_t>(rows_.size()) + 1; }
  int open_readers() const { return readers_; }

  std::optional<std::size_t> column_index(std::string_view column) const;

  /// Throws SchemaError on arity mismatch and UsageError while a READ cursor
  /// is open on this table.
  std::int64_t insert_row(Row cells);

  friend bool operator==(const Table &a, const Table &b);

 private:
  friend class Cursor;

  std::string name_;
  std::vector<ColumnSchema> schema_;
  int root_;
  std::vector<Row> rows_;
  int readers_ = 0;
};

class Database {
 public:
  Database() = default;
  Database(const Database &other);
  Database &operator=(const Database &other);
  Database(Database &&) noexcept = default;
  Database &operator=(Database &&) noexcept = default;

  Table &create_table(std::string name, std::vector<ColumnSchema> schema);

  Table *find_table(std::string_view name);
  const Table *find_table(std::string_view name) const;
  Table *find_table_by_root(int root);

  /// Tables in creation order.
  std::vector<const Table *> tables() const;
  std::size_t table_count() const { return tables_.size(); }

  const std::optional<std::string> &path() const { return path_; }
  void set_path(std::optional<std::string> path) { path_ = std::move(path); }

  /// Structural equality: same tables, schemas and cells (flags included).
  /// The bound path is not compared.
  friend bool operator==(const Database &a, const Database &b);

 private:
  std::vector<std::unique_ptr<Table>> tables_;
  std::optional<std::string> path_;
};

enum class CursorMode { kRead, kWrite };

struct ColumnRead {
  ValueCell cell;
  std::uint32_t encoded;
};

/// Iteration state over one table. A fresh or exhausted cursor is AT_END.
class Cursor {
 public:
  Cursor(Table &table, CursorMode mode);
  ~Cursor();
  Cursor(const Cursor &other);
  Cursor &operator=(const Cursor &other);
  Cursor(Cursor &&other) noexcept;
  Cursor &operator=(Cursor &&other) noexcept;

  /// Positions on the first row. Returns true when the table is empty.
  bool rewind();
  /// Advances one row. Returns false exactly when AT_END is reached.
  bool next();
  ColumnRead column(std::size_t col) const;
  void close();

  bool is_open() const { return open_; }
  bool at_end() const { return at_end_; }
  std::size_t position() const { return pos_; }
  CursorMode mode() const { return mode_; }
  Table &table() const { return *table_; }

 private:
  void release();
  void require_open() const;

  Table *table_;
  CursorMode mode_;
  std::size_t pos_ = 0;
  bool at_end_ = true;
  bool open_ = true;
};

/// Loads a database document; a missing file yields an empty database bound
/// to `path`.
Database open_database(const std::string &path);
void save_database(const Database &db, const std::string &path);

std::string serialize_database(const Database &db);
Database parse_database(std::string_view document);

struct CsvOptions {
  bool header = false;
};

/// Appends the rows of a CSV file to `table`, creating it with `schema` when
/// absent. Fields are parsed according to each column's affinity and an empty
/// unquoted field becomes NULL. Returns the number of rows loaded.
std::size_t load_csv(Database &db, const std::string &table, const std::string &csv_path,
                     const std::vector<ColumnSchema> &schema, CsvOptions options = {});

/// RFC-4180 record splitter, exposed for tests.
struct CsvField {
  std::string text;
  bool quoted = false;
};
std::vector<std::vector<CsvField>> parse_csv(std::string_view data, std::vector<std::size_t> *line_numbers = nullptr);

}  // namespace sqvm
