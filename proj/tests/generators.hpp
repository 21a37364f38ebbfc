#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "sqvm/storage.hpp"
#include "test_support.hpp"

namespace sqvm::testing {

// Hand-rolled generators for the persistence property.
inline ValueCell random_cell(std::mt19937_64 &rng) {
  switch (rng() % 7) {
    case 0:
      return ValueCell::null();
    case 1:
      return ValueCell::integer(static_cast<std::int64_t>(rng()));
    case 2:
      return ValueCell::integer(static_cast<std::int64_t>(rng() % 100) - 50);
    case 3: {
      const double specials[] = {0.0, -0.0, 1.5, 1e308, -2.5e-310, std::numeric_limits<double>::infinity(),
                                 -std::numeric_limits<double>::infinity()};
      return ValueCell::real(specials[rng() % 7]);
    }
    case 4:
      return ValueCell::real(std::bit_cast<double>(rng() & 0x7FEFFFFFFFFFFFFFull));
    case 5: {
      std::string s;
      const std::size_t n = rng() % 12;
      for (std::size_t i = 0; i < n; ++i) {
        const char *pieces[] = {"a", "b", "\"", "\\", ",", "\n", "\t", " ", "\x01", "\xc3\xa9", "\xe2\x82\xac"};
        s += pieces[rng() % std::size(pieces)];
      }
      return ValueCell::text(s);
    }
    default:
      return cast_to_text_cached(ValueCell::integer(static_cast<std::int64_t>(rng() % 1000)));
  }
}

inline Database random_database(std::mt19937_64 &rng) {
  Database db;
  const std::size_t n_tables = rng() % 4;
  for (std::size_t t = 0; t < n_tables; ++t) {
    std::vector<ColumnSchema> schema;
    const std::size_t n_cols = 1 + rng() % 4;
    for (std::size_t c = 0; c < n_cols; ++c) {
      schema.push_back({"c" + std::to_string(c), static_cast<Affinity>(rng() % 4)});
    }
    Table &table = db.create_table("t" + std::to_string(t), schema);
    const std::size_t n_rows = rng() % 6;
    for (std::size_t r = 0; r < n_rows; ++r) {
      Row row;
      for (std::size_t c = 0; c < n_cols; ++c) {
        row.push_back(random_cell(rng));
      }
      table.insert_row(std::move(row));
    }
  }
  return db;
}

/// The running-example table with the quantity of each row in `string_rows`
/// replaced by text and the discount of each row in `null_discount_rows` by
/// NULL.
inline Database polymorphic_db(int rows, const std::vector<int> &string_rows, const std::vector<int> &null_discount_rows = {}) {
  Database db = running_example_db(rows, 21);
  Table &old = *db.find_table("lineitem");
  Database out;
  Table &t = out.create_table("lineitem", old.schema());
  for (int i = 0; i < rows; ++i) {
    Row r = old.row(static_cast<std::size_t>(i));
    if (std::find(string_rows.begin(), string_rows.end(), i) != string_rows.end()) r[0] = ValueCell::text("many");
    if (std::find(null_discount_rows.begin(), null_discount_rows.end(), i) != null_discount_rows.end()) {
      r[2] = ValueCell::null();
    }
    t.insert_row(std::move(r));
  }
  return out;
}

}  // namespace sqvm::testing
