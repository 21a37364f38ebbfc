#include <cmath>
#include <random>

#include "sqvm/bench.hpp"
#include "sqvm/errors.hpp"

namespace sqvm {

namespace {

double cents(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

Database generate_fixture(std::int64_t rows, std::uint64_t seed) {
  if (rows <= 0) throw UsageError("fixture needs at least one row, got " + std::to_string(rows));
  std::mt19937_64 rng(seed);
  const std::int64_t parts = std::max<std::int64_t>(1, rows / 4);
  const std::int64_t suppliers = std::max<std::int64_t>(1, rows / 10);
  const auto I = Affinity::kInteger;
  const auto R = Affinity::kReal;
  const auto T = Affinity::kText;

  Database db;
  Table &part = db.create_table("part", {{"partkey", I}, {"name", T}});
  for (std::int64_t k = 1; k <= parts; ++k) {
    part.insert_row({ValueCell::integer(k), ValueCell::text("part#" + std::to_string(k))});
  }
  Table &supplier = db.create_table("supplier", {{"suppkey", I}, {"name", T}});
  for (std::int64_t k = 1; k <= suppliers; ++k) {
    supplier.insert_row({ValueCell::integer(k), ValueCell::text("supplier#" + std::to_string(k))});
  }

  std::uniform_int_distribution<std::int64_t> supp_key(1, suppliers);
  Table &partsupp = db.create_table("partsupp", {{"partkey", I}, {"suppkey", I}});
  for (std::int64_t i = 0; i < rows; ++i) {
    partsupp.insert_row({ValueCell::integer(i % parts + 1), ValueCell::integer(supp_key(rng))});
  }

  std::uniform_int_distribution<std::int64_t> quantity(1, 50);
  std::uniform_real_distribution<double> unit_price(900.0, 2000.0);
  std::uniform_int_distribution<int> discount_cents(0, 9);
  Table &lineitem = db.create_table("lineitem", {{"quantity", I}, {"extendedprice", R}, {"discount", R}});
  for (std::int64_t i = 0; i < rows; ++i) {
    const std::int64_t q = quantity(rng);
    const double price = cents(static_cast<double>(q) * cents(unit_price(rng)));
    const double discount = discount_cents(rng) / 100.0;
    lineitem.insert_row({ValueCell::integer(q), ValueCell::real(price), ValueCell::real(discount)});
  }
  return db;
}

}  // namespace sqvm
