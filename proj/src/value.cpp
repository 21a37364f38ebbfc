#include "sqvm/value.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <system_error>

namespace sqvm {

ValueCell ValueCell::integer(std::int64_t v) {
  ValueCell c;
  c.flags_ = kFlagInt;
  c.int_ = v;
  return c;
}

ValueCell ValueCell::real(double v) {
  ValueCell c;
  c.flags_ = kFlagReal;
  c.real_ = v;
  return c;
}

ValueCell ValueCell::text(std::string s) {
  ValueCell c;
  c.flags_ = kFlagStr;
  c.str_ = std::move(s);
  return c;
}

ValueCell ValueCell::blob(std::string bytes) {
  ValueCell c;
  c.flags_ = kFlagBlob;
  c.str_ = std::move(bytes);
  return c;
}

void ValueCell::attach_text(std::string s) {
  if (is_null()) {
    throw std::logic_error("cannot attach text to a NULL cell");
  }
  str_ = std::move(s);
  flags_ |= kFlagStr;
}

bool operator==(const ValueCell &a, const ValueCell &b) {
  if (a.flags_ != b.flags_) {
    return false;
  }
  if (a.has(kFlagInt) && a.int_ != b.int_) {
    return false;
  }
  if (a.has(kFlagReal) && std::bit_cast<std::uint64_t>(a.real_) != std::bit_cast<std::uint64_t>(b.real_)) {
    return false;
  }
  if (a.has(kFlagStr | kFlagBlob) && a.str_ != b.str_) {
    return false;
  }
  return true;
}

ValueCell apply_real_affinity(const ValueCell &cell) {
  if (cell.has(kFlagInt) && !cell.has(kFlagReal)) {
    return ValueCell::real(static_cast<double>(cell.int_val()));
  }
  return cell;
}

namespace {

double as_double(const ValueCell &c) {
  return c.has(kFlagReal) ? c.real_val() : static_cast<double>(c.int_val());
}

bool is_pure_int(const ValueCell &c) { return c.has(kFlagInt) && !c.has(kFlagReal); }

}  // namespace

ValueCell arith_with_overflow(ArithKind kind, const ValueCell &a, const ValueCell &b) {
  if (!a.is_numeric() || !b.is_numeric()) {
    throw std::invalid_argument("arith_with_overflow needs numeric operands");
  }
  if (is_pure_int(a) && is_pure_int(b)) {
    std::int64_t out = 0;
    bool overflow = false;
    switch (kind) {
      case ArithKind::kAdd:
        overflow = __builtin_add_overflow(a.int_val(), b.int_val(), &out);
        break;
      case ArithKind::kSub:
        overflow = __builtin_sub_overflow(a.int_val(), b.int_val(), &out);
        break;
      case ArithKind::kMul:
        overflow = __builtin_mul_overflow(a.int_val(), b.int_val(), &out);
        break;
    }
    if (!overflow) {
      return ValueCell::integer(out);
    }
  }
  const double x = as_double(a);
  const double y = as_double(b);
  switch (kind) {
    case ArithKind::kAdd:
      return ValueCell::real(x + y);
    case ArithKind::kSub:
      return ValueCell::real(x - y);
    case ArithKind::kMul:
      return ValueCell::real(x * y);
  }
  return ValueCell::null();
}

ValueCell divide_values(const ValueCell &a, const ValueCell &b) {
  if (!a.is_numeric() || !b.is_numeric()) {
    throw std::invalid_argument("divide_values needs numeric operands");
  }
  if (is_pure_int(a) && is_pure_int(b)) {
    if (b.int_val() == 0) {
      return ValueCell::null();
    }
    if (a.int_val() == INT64_MIN && b.int_val() == -1) {
      return ValueCell::real(-static_cast<double>(INT64_MIN));
    }
    return ValueCell::integer(a.int_val() / b.int_val());
  }
  const double y = as_double(b);
  if (y == 0.0) {
    return ValueCell::null();
  }
  return ValueCell::real(as_double(a) / y);
}

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string out(buf, end);
  if (out.find_first_of(".eEn") == std::string::npos) {
    out += ".0";
  }
  return out;
}

ValueCell cast_to_text_cached(const ValueCell &cell) {
  if (cell.has(kFlagStr) || !cell.is_numeric()) {
    return cell;
  }
  ValueCell out = cell;
  if (cell.has(kFlagInt)) {
    out.attach_text(std::to_string(cell.int_val()));
  } else {
    out.attach_text(format_real(cell.real_val()));
  }
  return out;
}

std::uint32_t encode_column_result(int rc, Flags flags) {
  return (static_cast<std::uint32_t>(flags) << 16) | (static_cast<std::uint32_t>(rc) & 0xFFFFu);
}

ColumnResult decode_column_result(std::uint32_t encoded) {
  return {static_cast<int>(encoded & 0xFFFFu), static_cast<Flags>(encoded >> 16)};
}

ValueCell to_numeric(const ValueCell &cell) {
  if (cell.is_null() || cell.is_numeric()) {
    return cell;
  }
  std::string_view s = cell.str_val();
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  const char *first = s.data();
  const char *last = s.data() + s.size();
  std::int64_t i = 0;
  auto ri = std::from_chars(first, last, i);
  if (!s.empty() && ri.ec == std::errc() && ri.ptr == last) {
    return ValueCell::integer(i);
  }
  double d = 0.0;
  auto rd = std::from_chars(first, last, d);
  if (!s.empty() && rd.ec == std::errc() && rd.ptr == last) {
    return ValueCell::real(d);
  }
  return ValueCell::integer(0);
}

namespace {

int type_rank(const ValueCell &c) {
  if (c.is_numeric()) {
    return 0;
  }
  if (c.has(kFlagStr)) {
    return 1;
  }
  return 2;
}

}  // namespace

int compare_values(const ValueCell &a, const ValueCell &b) {
  const int ra = type_rank(a);
  const int rb = type_rank(b);
  if (ra != rb) {
    return ra < rb ? -1 : 1;
  }
  if (ra == 0) {
    if (is_pure_int(a) && is_pure_int(b)) {
      return a.int_val() < b.int_val() ? -1 : (a.int_val() > b.int_val() ? 1 : 0);
    }
    const double x = as_double(a);
    const double y = as_double(b);
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  const int c = a.str_val().compare(b.str_val());
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

bool is_truthy(const ValueCell &cell) {
  if (cell.is_null()) {
    return false;
  }
  const ValueCell n = to_numeric(cell);
  return n.has(kFlagReal) ? n.real_val() != 0.0 : n.int_val() != 0;
}

std::string render_sql(const ValueCell &cell) {
  if (cell.is_null()) {
    return "NULL";
  }
  if (cell.has(kFlagInt)) {
    return std::to_string(cell.int_val());
  }
  if (cell.has(kFlagReal)) {
    return format_real(cell.real_val());
  }
  return cell.str_val();
}

std::string flags_name(Flags flags) {
  static constexpr std::pair<Flags, const char *> kNames[] = {
      {kFlagNull, "NULL"}, {kFlagStr, "STR"}, {kFlagInt, "INT"}, {kFlagReal, "REAL"}, {kFlagBlob, "BLOB"}};
  std::string out;
  for (auto [bit, name] : kNames) {
    if ((flags & bit) != 0) {
      if (!out.empty()) {
        out += '|';
      }
      out += name;
    }
  }
  return out.empty() ? "0" : out;
}

}  // namespace sqvm
