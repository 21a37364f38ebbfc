#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace sqvm {

/// Dynamic type bits of a register value. Several bits may be set at once
/// when a value carries a cached conversion (an integer that has also been
/// rendered as text keeps both kFlagInt and kFlagStr).
using Flags = std::uint16_t;

inline constexpr Flags kFlagNull = 0x0001;
inline constexpr Flags kFlagStr = 0x0002;
inline constexpr Flags kFlagInt = 0x0004;
inline constexpr Flags kFlagReal = 0x0008;
/// Engine-internal packed records (MakeRecord output). Never stored in tables.
inline constexpr Flags kFlagBlob = 0x0010;

inline constexpr Flags kNumericFlags = kFlagInt | kFlagReal;

/// Status code carried in the low half of an encoded Column result.
inline constexpr int kStatusOk = 0;

class ValueCell {
 public:
  ValueCell() = default;

  static ValueCell null() { return {}; }
  static ValueCell integer(std::int64_t v);
  static ValueCell real(double v);
  static ValueCell text(std::string s);
  static ValueCell blob(std::string bytes);

  Flags flags() const { return flags_; }
  bool has(Flags f) const { return (flags_ & f) != 0; }
  bool is_null() const { return flags_ == kFlagNull; }
  bool is_numeric() const { return has(kNumericFlags); }

  std::int64_t int_val() const { return int_; }
  double real_val() const { return real_; }
  const std::string &str_val() const { return str_; }

  /// Adds a text rendering next to the numeric payload. Only
  /// cast_to_text_cached should need this.
  void attach_text(std::string s);

  /// Identity comparison: same flags and same meaningful payloads. Reals are
  /// compared by bit pattern so NaNs and signed zeros round-trip exactly.
  friend bool operator==(const ValueCell &a, const ValueCell &b);

 private:
  Flags flags_ = kFlagNull;
  std::int64_t int_ = 0;
  double real_ = 0.0;
  std::string str_;
};

/// Converts a lone integer to a real; everything else passes through.
ValueCell apply_real_affinity(const ValueCell &cell);

enum class ArithKind { kAdd, kSub, kMul };

/// Integer arithmetic that switches to floating point when the 64-bit result
/// would overflow. Both operands must carry kFlagInt or kFlagReal; an operand
/// with both bits is treated as a real.
ValueCell arith_with_overflow(ArithKind kind, const ValueCell &a, const ValueCell &b);

/// Integer division truncates; division by zero yields NULL. Operands must be
/// numeric.
ValueCell divide_values(const ValueCell &a, const ValueCell &b);

/// Adds the canonical decimal text next to the numeric payload. Idempotent.
ValueCell cast_to_text_cached(const ValueCell &cell);

/// Shortest decimal text that parses back to the same double. Always contains
/// a '.' or an exponent so it never reads as an integer.
std::string format_real(double v);

std::uint32_t encode_column_result(int rc, Flags flags);

struct ColumnResult {
  int rc;
  Flags flags;
  friend bool operator==(const ColumnResult &, const ColumnResult &) = default;
};

ColumnResult decode_column_result(std::uint32_t encoded);

/// Numeric reading of a cell: numbers pass through, text is parsed as an
/// integer or real literal (0 when it is neither). NULL stays NULL.
ValueCell to_numeric(const ValueCell &cell);

/// Total order over non-NULL values: numbers < text < blobs. Int/int compares
/// exactly, mixed int/real compares as doubles, text compares bytewise.
int compare_values(const ValueCell &a, const ValueCell &b);

/// True for non-NULL numbers that are non-zero (text is read numerically).
bool is_truthy(const ValueCell &cell);

/// SQL-style rendering used by the CLI: NULL, decimal numbers, raw text.
std::string render_sql(const ValueCell &cell);

std::string flags_name(Flags flags);

}  // namespace sqvm
