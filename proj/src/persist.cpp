// Database document (JSON) and CSV ingestion.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "sqvm/errors.hpp"
#include "sqvm/storage.hpp"

namespace sqvm {

namespace {

using json = nlohmann::ordered_json;

constexpr int kFormatVersion = 1;

json real_to_json(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  return v;
}

double real_from_json(const json &j, const std::string &where) {
  if (j.is_number()) {
    return j.get<double>();
  }
  if (j.is_string()) {
    const auto &s = j.get_ref<const std::string &>();
    if (s == "nan") {
      return std::numeric_limits<double>::quiet_NaN();
    }
    if (s == "inf") {
      return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf") {
      return -std::numeric_limits<double>::infinity();
    }
  }
  throw FormatError(where + ": malformed real payload");
}

std::string to_hex(const std::string &bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out += kDigits[c >> 4];
    out += kDigits[c & 0xF];
  }
  return out;
}

std::string from_hex(const std::string &hex, const std::string &where) {
  if (hex.size() % 2 != 0) {
    throw FormatError(where + ": odd-length blob payload");
  }
  std::string out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    unsigned v = 0;
    auto [p, ec] = std::from_chars(hex.data() + i, hex.data() + i + 2, v, 16);
    if (ec != std::errc() || p != hex.data() + i + 2) {
      throw FormatError(where + ": bad blob payload");
    }
    out += static_cast<char>(v);
  }
  return out;
}

json cell_to_json(const ValueCell &c) {
  if (c.is_null()) {
    return nullptr;
  }
  json o = json::object();
  if (c.has(kFlagInt)) {
    o["i"] = c.int_val();
  }
  if (c.has(kFlagReal)) {
    o["r"] = real_to_json(c.real_val());
  }
  if (c.has(kFlagStr)) {
    o["s"] = c.str_val();
  }
  if (c.has(kFlagBlob)) {
    o["b"] = to_hex(c.str_val());
  }
  return o;
}

ValueCell cell_from_json(const json &j, const std::string &where) {
  if (j.is_null()) {
    return ValueCell::null();
  }
  if (!j.is_object() || j.empty()) {
    throw FormatError(where + ": cell must be null or a tagged object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "i" && it.key() != "r" && it.key() != "s" && it.key() != "b") {
      throw FormatError(where + ": unknown cell tag '" + it.key() + "'");
    }
  }
  ValueCell out;
  bool have_numeric = false;
  if (j.contains("i")) {
    const json &v = j["i"];
    if (!v.is_number_integer() || (v.is_number_unsigned() && v.get<std::uint64_t>() > INT64_MAX)) {
      throw FormatError(where + ": integer payload out of range");
    }
    out = ValueCell::integer(v.get<std::int64_t>());
    have_numeric = true;
  }
  if (j.contains("r")) {
    if (have_numeric) {
      throw FormatError(where + ": cell cannot be both integer and real");
    }
    out = ValueCell::real(real_from_json(j["r"], where));
    have_numeric = true;
  }
  if (j.contains("b")) {
    if (have_numeric || j.contains("s")) {
      throw FormatError(where + ": blob cell cannot carry other payloads");
    }
    if (!j["b"].is_string()) {
      throw FormatError(where + ": blob payload must be a string");
    }
    return ValueCell::blob(from_hex(j["b"].get<std::string>(), where));
  }
  if (j.contains("s")) {
    if (!j["s"].is_string()) {
      throw FormatError(where + ": text payload must be a string");
    }
    if (have_numeric) {
      out.attach_text(j["s"].get<std::string>());
    } else {
      out = ValueCell::text(j["s"].get<std::string>());
    }
  }
  return out;
}

}  // namespace

std::string serialize_database(const Database &db) {
  json doc = json::object();
  doc["format"] = kFormatVersion;
  json tables = json::object();
  for (const Table *t : db.tables()) {
    json schema = json::array();
    for (const auto &col : t->schema()) {
      schema.push_back({{"name", col.name}, {"affinity", std::string(affinity_name(col.affinity))}});
    }
    json rows = json::array();
    for (std::size_t i = 0; i < t->row_count(); ++i) {
      json row = json::array();
      for (const auto &cell : t->row(i)) {
        row.push_back(cell_to_json(cell));
      }
      rows.push_back(std::move(row));
    }
    tables[t->name()] = {{"schema", std::move(schema)}, {"rows", std::move(rows)}};
  }
  doc["tables"] = std::move(tables);
  try {
    return doc.dump() + "\n";
  } catch (const json::type_error &e) {
    throw FormatError(std::string("text cell is not valid UTF-8: ") + e.what());
  }
}

Database parse_database(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error &e) {
    throw FormatError(std::string("database document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format") || !doc.contains("tables")) {
    throw FormatError("database document needs 'format' and 'tables'");
  }
  if (!doc["format"].is_number_integer() || doc["format"].get<int>() != kFormatVersion) {
    throw FormatError("unsupported database format version");
  }
  if (!doc["tables"].is_object()) {
    throw FormatError("'tables' must be an object");
  }
  Database db;
  for (auto it = doc["tables"].begin(); it != doc["tables"].end(); ++it) {
    const std::string &name = it.key();
    const json &t = it.value();
    const std::string where = "table '" + name + "'";
    if (!t.is_object() || !t.contains("schema") || !t.contains("rows") || !t["schema"].is_array() ||
        !t["rows"].is_array()) {
      throw FormatError(where + ": needs 'schema' and 'rows' arrays");
    }
    std::vector<ColumnSchema> schema;
    for (const auto &col : t["schema"]) {
      if (!col.is_object() || !col.contains("name") || !col.contains("affinity") || !col["name"].is_string() ||
          !col["affinity"].is_string()) {
        throw FormatError(where + ": malformed column entry");
      }
      auto aff = parse_affinity(col["affinity"].get<std::string>());
      if (!aff) {
        throw FormatError(where + ": unknown affinity '" + col["affinity"].get<std::string>() + "'");
      }
      schema.push_back({col["name"].get<std::string>(), *aff});
    }
    Table *table = nullptr;
    try {
      table = &db.create_table(name, std::move(schema));
    } catch (const SchemaError &e) {
      throw FormatError(where + ": " + e.what());
    }
    std::size_t row_no = 0;
    for (const auto &r : t["rows"]) {
      const std::string row_where = where + " row " + std::to_string(row_no);
      if (!r.is_array() || r.size() != table->arity()) {
        throw FormatError(row_where + ": expected " + std::to_string(table->arity()) + " cells");
      }
      Row row;
      row.reserve(r.size());
      for (const auto &cell : r) {
        row.push_back(cell_from_json(cell, row_where));
      }
      table->insert_row(std::move(row));
      ++row_no;
    }
  }
  return db;
}

Database open_database(const std::string &path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    Database db;
    db.set_path(path);
    return db;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "' for reading");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  Database db = parse_database(buf.str());
  db.set_path(path);
  return db;
}

void save_database(const Database &db, const std::string &path) {
  const std::string text = serialize_database(db);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  out << text;
  out.flush();
  if (!out) {
    throw IoError("write to '" + path + "' failed");
  }
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

std::vector<std::vector<CsvField>> parse_csv(std::string_view data, std::vector<std::size_t> *line_numbers) {
  std::vector<std::vector<CsvField>> records;
  std::vector<CsvField> record;
  CsvField field;
  std::size_t line = 1;
  std::size_t record_line = 1;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field = {};
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
    if (line_numbers != nullptr) {
      line_numbers->push_back(record_line);
    }
  };

  for (std::size_t i = 0; i < data.size(); ++i) {
    const char c = data[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field.text += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') {
          ++line;
        }
        field.text += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field.quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < data.size() && data[i + 1] == '\n') {
        ++i;
      }
      end_record();
      ++line;
      record_line = line;
    } else {
      field.text += c;
      field_started = true;
    }
  }
  if (in_quotes) {
    throw FormatError("line " + std::to_string(record_line) + ": unterminated quoted field");
  }
  if (field_started || !record.empty() || field.quoted) {
    end_record();
  }
  return records;
}

namespace {

ValueCell parse_field(const CsvField &f, Affinity aff, std::size_t line, const std::string &column) {
  if (f.text.empty() && !f.quoted) {
    return ValueCell::null();
  }
  auto fail = [&](const char *what) {
    return FormatError("line " + std::to_string(line) + ": column '" + column + "': '" + f.text + "' is not " +
                       what);
  };
  const char *first = f.text.data();
  const char *last = first + f.text.size();
  switch (aff) {
    case Affinity::kInteger: {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || p != last) {
        throw fail("an integer");
      }
      return ValueCell::integer(v);
    }
    case Affinity::kReal: {
      double v = 0;
      auto [p, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || p != last) {
        throw fail("a real");
      }
      return ValueCell::real(v);
    }
    case Affinity::kText:
      return ValueCell::text(f.text);
    case Affinity::kNone: {
      if (f.quoted) {
        return ValueCell::text(f.text);
      }
      std::int64_t i = 0;
      auto ri = std::from_chars(first, last, i);
      if (ri.ec == std::errc() && ri.ptr == last) {
        return ValueCell::integer(i);
      }
      double d = 0;
      auto rd = std::from_chars(first, last, d);
      if (rd.ec == std::errc() && rd.ptr == last) {
        return ValueCell::real(d);
      }
      return ValueCell::text(f.text);
    }
  }
  return ValueCell::null();
}

}  // namespace

std::size_t load_csv(Database &db, const std::string &table, const std::string &csv_path,
                     const std::vector<ColumnSchema> &schema, CsvOptions options) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + csv_path + "' for reading");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  std::vector<std::size_t> lines;
  auto records = parse_csv(buf.str(), &lines);

  Table *t = db.find_table(table);
  if (t == nullptr) {
    t = &db.create_table(table, schema);
  } else if (t->arity() != schema.size()) {
    throw SchemaError("table '" + table + "' has " + std::to_string(t->arity()) + " columns, CSV schema has " +
                      std::to_string(schema.size()));
  }

  std::vector<Row> parsed;
  for (std::size_t r = options.header ? 1 : 0; r < records.size(); ++r) {
    const auto &rec = records[r];
    if (rec.size() != schema.size()) {
      throw FormatError("line " + std::to_string(lines[r]) + ": expected " + std::to_string(schema.size()) +
                        " fields, found " + std::to_string(rec.size()));
    }
    Row row;
    row.reserve(rec.size());
    for (std::size_t c = 0; c < rec.size(); ++c) {
      row.push_back(parse_field(rec[c], schema[c].affinity, lines[r], schema[c].name));
    }
    parsed.push_back(std::move(row));
  }
  for (auto &row : parsed) {
    t->insert_row(std::move(row));
  }
  return parsed.size();
}

}  // namespace sqvm
