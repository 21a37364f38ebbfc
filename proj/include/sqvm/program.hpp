#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sqvm/functions.hpp"
#include "sqvm/storage.hpp"

namespace sqvm {

enum class Opcode : std::uint8_t {
  kInit,
  kGoto,
  kGosub,
  kReturn,
  kHalt,
  kTransaction,
  kTableLock,
  kOpenRead,
  kOpenWrite,
  kRewind,
  kNext,
  kColumn,
  kRealAffinity,
  kResultRow,
  kClose,
  kIfPos,
  kNotNull,
  kIsNull,
  kMakeRecord,
  kInsert,
  kNewRowid,
  kInteger,
  kReal,
  kString,
  kNull,
  kVariable,
  kAdd,
  kSub,
  kMul,
  kEq,
  kNe,
  kLt,
  kLe,
  kGt,
  kGe,
  kFunction,
  kAggStep,
  kAggFinal,
};

inline constexpr int kOpcodeCount = static_cast<int>(Opcode::kAggFinal) + 1;

std::string_view opcode_name(Opcode op);
std::optional<Opcode> opcode_from_name(std::string_view name);

/// Reference to a host function or aggregate. Listings parsed from text may
/// carry only the name and arity.
struct FunctionRef {
  std::string name;
  int n_args = 0;
  std::shared_ptr<const HostFunction> function;
  std::shared_ptr<const HostAggregate> aggregate;

  friend bool operator==(const FunctionRef &a, const FunctionRef &b) {
    return a.name == b.name && a.n_args == b.n_args;
  }
};

struct RecordArity {
  int n = 0;
  friend bool operator==(const RecordArity &, const RecordArity &) = default;
};

using P4 = std::variant<std::monostate, std::int64_t, double, std::string, FunctionRef, RecordArity>;

/// Comparison opcodes jump when either operand is NULL iff p5 has this bit.
inline constexpr std::uint8_t kJumpIfNull = 0x10;

struct Instruction {
  Opcode opcode = Opcode::kHalt;
  std::int32_t p1 = 0;
  std::int32_t p2 = 0;
  std::int32_t p3 = 0;
  P4 p4;
  std::uint8_t p5 = 0;

  friend bool operator==(const Instruction &, const Instruction &) = default;
};

/// What an operand slot refers to, used by validation and the recorder.
enum class Operand { kUnused, kValue, kJump, kRegister, kCursor, kRoot };

struct OpcodeInfo {
  Operand p1;
  Operand p2;
  Operand p3;
};

const OpcodeInfo &opcode_info(Opcode op);

struct CreateTableAction {
  std::string table;
  std::vector<ColumnSchema> columns;
};

struct Program {
  std::vector<Instruction> instructions;
  int n_registers = 0;
  int n_cursors = 0;
  int param_count = 0;
  std::string source_sql;
  /// Names of the result columns for SELECT programs.
  std::vector<std::string> column_names;
  /// Applied when the statement first runs (CREATE TABLE).
  std::optional<CreateTableAction> create_table;
  bool writes = false;
};

/// Checks jump targets, register and cursor indices and operand kinds.
/// Throws UsageError describing the first violation.
void validate_program(const Program &program);

/// Recomputes n_registers, n_cursors and param_count from the instructions.
void compute_program_sizes(Program &program);

std::string render_p4(const P4 &p4);

/// One line per instruction: `pc|Opcode|p1|p2|p3|p4|p5|`.
std::string explain(const Program &program);

/// Inverse of explain, for hand-written test programs. Function references
/// are resolved against `catalog` when given. Throws FormatError on unknown
/// opcode names or malformed lines.
Program parse_program_listing(std::string_view text, const FunctionCatalog *catalog = nullptr);

}  // namespace sqvm
