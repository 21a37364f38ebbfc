#include "sqvm/program.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <sstream>
#include <system_error>

#include "sqvm/errors.hpp"

namespace sqvm {

namespace {

struct OpcodeRow {
  std::string_view name;
  OpcodeInfo info;
};

using O = Operand;

constexpr std::array<OpcodeRow, kOpcodeCount> kOpcodes = {{
    {"Init", {O::kUnused, O::kJump, O::kUnused}},
    {"Goto", {O::kUnused, O::kJump, O::kUnused}},
    {"Gosub", {O::kRegister, O::kJump, O::kUnused}},
    {"Return", {O::kRegister, O::kUnused, O::kUnused}},
    {"Halt", {O::kValue, O::kUnused, O::kUnused}},
    {"Transaction", {O::kValue, O::kValue, O::kValue}},
    {"TableLock", {O::kValue, O::kRoot, O::kValue}},
    {"OpenRead", {O::kCursor, O::kRoot, O::kValue}},
    {"OpenWrite", {O::kCursor, O::kRoot, O::kValue}},
    {"Rewind", {O::kCursor, O::kJump, O::kUnused}},
    {"Next", {O::kCursor, O::kJump, O::kUnused}},
    {"Column", {O::kCursor, O::kValue, O::kRegister}},
    {"RealAffinity", {O::kRegister, O::kUnused, O::kUnused}},
    {"ResultRow", {O::kRegister, O::kValue, O::kUnused}},
    {"Close", {O::kCursor, O::kUnused, O::kUnused}},
    {"IfPos", {O::kRegister, O::kJump, O::kUnused}},
    {"NotNull", {O::kRegister, O::kJump, O::kUnused}},
    {"IsNull", {O::kRegister, O::kJump, O::kUnused}},
    {"MakeRecord", {O::kRegister, O::kValue, O::kRegister}},
    {"Insert", {O::kCursor, O::kRegister, O::kRegister}},
    {"NewRowid", {O::kCursor, O::kRegister, O::kUnused}},
    {"Integer", {O::kValue, O::kRegister, O::kUnused}},
    {"Real", {O::kUnused, O::kRegister, O::kUnused}},
    {"String", {O::kValue, O::kRegister, O::kUnused}},
    {"Null", {O::kUnused, O::kRegister, O::kUnused}},
    {"Variable", {O::kValue, O::kRegister, O::kUnused}},
    {"Add", {O::kRegister, O::kRegister, O::kRegister}},
    {"Sub", {O::kRegister, O::kRegister, O::kRegister}},
    {"Mul", {O::kRegister, O::kRegister, O::kRegister}},
    {"Eq", {O::kRegister, O::kJump, O::kRegister}},
    {"Ne", {O::kRegister, O::kJump, O::kRegister}},
    {"Lt", {O::kRegister, O::kJump, O::kRegister}},
    {"Le", {O::kRegister, O::kJump, O::kRegister}},
    {"Gt", {O::kRegister, O::kJump, O::kRegister}},
    {"Ge", {O::kRegister, O::kJump, O::kRegister}},
    {"Function", {O::kUnused, O::kRegister, O::kRegister}},
    {"AggStep", {O::kUnused, O::kRegister, O::kRegister}},
    {"AggFinal", {O::kRegister, O::kValue, O::kUnused}},
}};

enum class P4Kind { kNone, kOptionalInt, kInt, kReal, kText, kFunction, kAggregate, kArity };

P4Kind p4_kind(Opcode op) {
  switch (op) {
    case Opcode::kTransaction:
    case Opcode::kInteger:
      return P4Kind::kOptionalInt;
    case Opcode::kOpenRead:
    case Opcode::kOpenWrite:
      return P4Kind::kInt;
    case Opcode::kReal:
      return P4Kind::kReal;
    case Opcode::kString:
    case Opcode::kTableLock:
      return P4Kind::kText;
    case Opcode::kFunction:
      return P4Kind::kFunction;
    case Opcode::kAggStep:
    case Opcode::kAggFinal:
      return P4Kind::kAggregate;
    case Opcode::kMakeRecord:
      return P4Kind::kArity;
    default:
      return P4Kind::kNone;
  }
}

std::string where(std::size_t pc, const Instruction &ins) {
  return "instruction " + std::to_string(pc) + " (" + std::string(opcode_name(ins.opcode)) + ")";
}

}  // namespace

std::string_view opcode_name(Opcode op) { return kOpcodes[static_cast<std::size_t>(op)].name; }

std::optional<Opcode> opcode_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kOpcodes.size(); ++i) {
    if (kOpcodes[i].name == name) {
      return static_cast<Opcode>(i);
    }
  }
  return std::nullopt;
}

const OpcodeInfo &opcode_info(Opcode op) { return kOpcodes[static_cast<std::size_t>(op)].info; }

void compute_program_sizes(Program &program) {
  int max_reg = 0;
  int max_cursor = -1;
  int params = 0;
  auto note_reg = [&](int r, int span = 1) { max_reg = std::max(max_reg, r + std::max(span, 1) - 1); };
  for (const Instruction &ins : program.instructions) {
    const OpcodeInfo &info = opcode_info(ins.opcode);
    const std::int32_t ps[] = {ins.p1, ins.p2, ins.p3};
    const Operand kinds[] = {info.p1, info.p2, info.p3};
    for (int i = 0; i < 3; ++i) {
      if (kinds[i] == Operand::kRegister) {
        note_reg(ps[i]);
      } else if (kinds[i] == Operand::kCursor) {
        max_cursor = std::max(max_cursor, ps[i]);
      }
    }
    switch (ins.opcode) {
      case Opcode::kResultRow:
        note_reg(ins.p1, ins.p2);
        break;
      case Opcode::kMakeRecord:
        note_reg(ins.p1, ins.p2);
        break;
      case Opcode::kFunction:
      case Opcode::kAggStep:
        note_reg(ins.p2, ins.p5);
        break;
      case Opcode::kVariable:
        params = std::max(params, ins.p1);
        break;
      default:
        break;
    }
  }
  program.n_registers = max_reg + 1;
  program.n_cursors = max_cursor + 1;
  program.param_count = params;
}

void validate_program(const Program &program) {
  const auto &code = program.instructions;
  if (code.empty()) {
    return;
  }
  if (code.front().opcode != Opcode::kInit) {
    throw UsageError("instruction 0 must be Init");
  }
  const auto n = static_cast<std::int64_t>(code.size());
  for (std::size_t pc = 0; pc < code.size(); ++pc) {
    const Instruction &ins = code[pc];
    if (static_cast<int>(ins.opcode) >= kOpcodeCount) {
      throw UsageError("instruction " + std::to_string(pc) + " has an unknown opcode");
    }
    const OpcodeInfo &info = opcode_info(ins.opcode);
    const std::int32_t ps[] = {ins.p1, ins.p2, ins.p3};
    const Operand kinds[] = {info.p1, info.p2, info.p3};
    for (int i = 0; i < 3; ++i) {
      const std::string operand = "p" + std::to_string(i + 1);
      switch (kinds[i]) {
        case Operand::kJump:
          if (ps[i] < 0 || ps[i] >= n) {
            throw UsageError(where(pc, ins) + ": jump target " + operand + "=" + std::to_string(ps[i]) +
                             " out of bounds");
          }
          break;
        case Operand::kRegister:
          if (ps[i] < 0 || ps[i] >= program.n_registers) {
            throw UsageError(where(pc, ins) + ": register " + operand + "=" + std::to_string(ps[i]) +
                             " out of bounds");
          }
          break;
        case Operand::kCursor:
          if (ps[i] < 0 || ps[i] >= program.n_cursors) {
            throw UsageError(where(pc, ins) + ": cursor " + operand + "=" + std::to_string(ps[i]) +
                             " out of bounds");
          }
          break;
        default:
          break;
      }
    }
    auto check_range = [&](int first, int count) {
      if (count < 0 || first < 0 || first + count > program.n_registers) {
        throw UsageError(where(pc, ins) + ": register range out of bounds");
      }
    };
    switch (ins.opcode) {
      case Opcode::kResultRow:
        check_range(ins.p1, ins.p2);
        break;
      case Opcode::kMakeRecord:
        check_range(ins.p1, ins.p2);
        if (!std::holds_alternative<RecordArity>(ins.p4) || std::get<RecordArity>(ins.p4).n != ins.p2) {
          throw UsageError(where(pc, ins) + ": record arity must equal p2");
        }
        break;
      case Opcode::kFunction:
      case Opcode::kAggStep:
        check_range(ins.p2, ins.p5);
        break;
      case Opcode::kVariable:
        if (ins.p1 < 1 || ins.p1 > program.param_count) {
          throw UsageError(where(pc, ins) + ": parameter index out of range");
        }
        break;
      default:
        break;
    }
    bool ok = true;
    switch (p4_kind(ins.opcode)) {
      case P4Kind::kNone:
        ok = std::holds_alternative<std::monostate>(ins.p4);
        break;
      case P4Kind::kOptionalInt:
        ok = std::holds_alternative<std::monostate>(ins.p4) || std::holds_alternative<std::int64_t>(ins.p4);
        break;
      case P4Kind::kInt:
        ok = std::holds_alternative<std::int64_t>(ins.p4);
        break;
      case P4Kind::kReal:
        ok = std::holds_alternative<double>(ins.p4);
        break;
      case P4Kind::kText:
        ok = std::holds_alternative<std::string>(ins.p4);
        break;
      case P4Kind::kFunction:
      case P4Kind::kAggregate:
        ok = std::holds_alternative<FunctionRef>(ins.p4);
        if (ok && ins.opcode != Opcode::kAggFinal && std::get<FunctionRef>(ins.p4).n_args != ins.p5) {
          throw UsageError(where(pc, ins) + ": p5 must equal the function arity");
        }
        break;
      case P4Kind::kArity:
        ok = std::holds_alternative<RecordArity>(ins.p4);
        break;
    }
    if (!ok) {
      throw UsageError(where(pc, ins) + ": p4 has the wrong kind");
    }
  }
}

std::string render_p4(const P4 &p4) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_real(v); }
    std::string operator()(const std::string &s) const { return s; }
    std::string operator()(const FunctionRef &f) const { return f.name + "(" + std::to_string(f.n_args) + ")"; }
    std::string operator()(const RecordArity &a) const { return std::to_string(a.n); }
  };
  return std::visit(Visitor{}, p4);
}

std::string explain(const Program &program) {
  std::string out;
  char p5[3];
  for (std::size_t pc = 0; pc < program.instructions.size(); ++pc) {
    const Instruction &ins = program.instructions[pc];
    std::snprintf(p5, sizeof p5, "%02x", static_cast<unsigned>(ins.p5));
    out += std::to_string(pc) + "|" + std::string(opcode_name(ins.opcode)) + "|" + std::to_string(ins.p1) + "|" +
           std::to_string(ins.p2) + "|" + std::to_string(ins.p3) + "|" + render_p4(ins.p4) + "|" + p5 + "|\n";
  }
  return out;
}

namespace {

template <typename T>
bool parse_number(std::string_view s, T &out) {
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && r.ec == std::errc() && r.ptr == s.data() + s.size();
}

P4 parse_p4(Opcode op, std::string_view text, const FunctionCatalog *catalog, const std::string &line) {
  const P4Kind kind = p4_kind(op);
  if (text.empty() && (kind == P4Kind::kNone || kind == P4Kind::kOptionalInt)) {
    return std::monostate{};
  }
  switch (kind) {
    case P4Kind::kNone:
      throw FormatError(line + ": opcode takes no p4");
    case P4Kind::kOptionalInt:
    case P4Kind::kInt: {
      std::int64_t v = 0;
      if (!parse_number(text, v)) {
        throw FormatError(line + ": p4 must be an integer");
      }
      return v;
    }
    case P4Kind::kReal: {
      double v = 0;
      if (!parse_number(text, v)) {
        throw FormatError(line + ": p4 must be a real");
      }
      return v;
    }
    case P4Kind::kText:
      return std::string(text);
    case P4Kind::kArity: {
      int v = 0;
      if (!parse_number(text, v)) {
        throw FormatError(line + ": p4 must be a record arity");
      }
      return RecordArity{v};
    }
    case P4Kind::kFunction:
    case P4Kind::kAggregate: {
      const auto open = text.find('(');
      int n = 0;
      if (open == std::string_view::npos || text.back() != ')' ||
          !parse_number(text.substr(open + 1, text.size() - open - 2), n)) {
        throw FormatError(line + ": p4 must read name(n)");
      }
      FunctionRef ref{std::string(text.substr(0, open)), n, nullptr, nullptr};
      if (catalog != nullptr) {
        if (kind == P4Kind::kFunction) {
          ref.function = catalog->find_function(ref.name, n);
        } else {
          ref.aggregate = catalog->find_aggregate(ref.name, n);
        }
        if (!ref.function && !ref.aggregate) {
          throw FormatError(line + ": unknown function " + render_p4(ref));
        }
      }
      return ref;
    }
  }
  return std::monostate{};
}

}  // namespace

Program parse_program_listing(std::string_view text, const FunctionCatalog *catalog) {
  Program program;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') {
      raw.pop_back();
    }
    if (raw.empty() || raw[0] == '#') {
      continue;
    }
    const std::string line = "line " + std::to_string(line_no);
    std::vector<std::string_view> fields;
    std::string_view rest = raw;
    while (true) {
      const auto bar = rest.find('|');
      if (bar == std::string_view::npos) {
        fields.push_back(rest);
        break;
      }
      fields.push_back(rest.substr(0, bar));
      rest.remove_prefix(bar + 1);
    }
    if (fields.size() != 8 || !fields[7].empty()) {
      throw FormatError(line + ": expected 'pc|Opcode|p1|p2|p3|p4|p5|'");
    }
    std::size_t pc = 0;
    if (!parse_number(fields[0], pc) || pc != program.instructions.size()) {
      throw FormatError(line + ": program counter out of sequence");
    }
    const auto op = opcode_from_name(fields[1]);
    if (!op) {
      throw FormatError(line + ": unknown opcode '" + std::string(fields[1]) + "'");
    }
    Instruction ins;
    ins.opcode = *op;
    if (!parse_number(fields[2], ins.p1) || !parse_number(fields[3], ins.p2) || !parse_number(fields[4], ins.p3)) {
      throw FormatError(line + ": p1..p3 must be integers");
    }
    ins.p4 = parse_p4(*op, fields[5], catalog, line);
    unsigned p5 = 0;
    auto r = std::from_chars(fields[6].data(), fields[6].data() + fields[6].size(), p5, 16);
    if (fields[6].size() != 2 || r.ec != std::errc() || r.ptr != fields[6].data() + 2) {
      throw FormatError(line + ": p5 must be two hex digits");
    }
    ins.p5 = static_cast<std::uint8_t>(p5);
    program.instructions.push_back(std::move(ins));
  }
  compute_program_sizes(program);
  for (const auto &ins : program.instructions) {
    if (ins.opcode == Opcode::kOpenWrite || ins.opcode == Opcode::kInsert) {
      program.writes = true;
    }
  }
  return program;
}

}  // namespace sqvm
