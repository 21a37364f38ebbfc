#include "sqvm/codegen.hpp"

#include <algorithm>
#include <limits>

#include "sqvm/errors.hpp"
#include "strutil.hpp"

namespace sqvm {

namespace {

using sql::CompareOp;
using sql::Expr;

struct BoundTable {
  const Table *table;
  int cursor;
};

struct ColumnBinding {
  int cursor;
  int column;
  Affinity affinity;
};

Opcode negated(CompareOp op) {
  switch (op) {
    case CompareOp::kEq:
      return Opcode::kNe;
    case CompareOp::kNe:
      return Opcode::kEq;
    case CompareOp::kLt:
      return Opcode::kGe;
    case CompareOp::kLe:
      return Opcode::kGt;
    case CompareOp::kGt:
      return Opcode::kLe;
    case CompareOp::kGe:
      return Opcode::kLt;
  }
  return Opcode::kNe;
}

class Generator {
 public:
  Generator(const Database &db, const FunctionCatalog &functions) : db_(db), functions_(functions) {}

  Program run(const sql::Statement &stmt, std::string_view source) {
    prog_.source_sql = std::string(source);
    prog_.param_count = stmt.param_count;
    if (const auto *s = std::get_if<sql::Select>(&stmt.body)) {
      select(*s);
    } else if (const auto *i = std::get_if<sql::Insert>(&stmt.body)) {
      insert(*i);
    } else {
      create(std::get<sql::CreateTable>(stmt.body));
    }
    const int params = prog_.param_count;
    compute_program_sizes(prog_);
    prog_.param_count = std::max(params, prog_.param_count);
    validate_program(prog_);
    return std::move(prog_);
  }

 private:
  int emit(Opcode op, int p1 = 0, int p2 = 0, int p3 = 0, P4 p4 = {}, std::uint8_t p5 = 0) {
    prog_.instructions.push_back({op, p1, p2, p3, std::move(p4), p5});
    return static_cast<int>(prog_.instructions.size()) - 1;
  }

  int here() const { return static_cast<int>(prog_.instructions.size()); }

  void patch_p2(int pc, int target) { prog_.instructions[pc].p2 = target; }

  int alloc(int n = 1) {
    const int first = next_reg_;
    next_reg_ += n;
    return first;
  }

  // -------------------------------------------------------------------------
  // Name resolution
  // -------------------------------------------------------------------------

  const Table &lookup_table(const std::string &name) const {
    const Table *t = db_.find_table(name);
    if (t == nullptr) {
      throw BindError("no such table: " + name);
    }
    return *t;
  }

  ColumnBinding bind_column(const Expr &e) const {
    std::optional<ColumnBinding> found;
    for (const BoundTable &bt : tables_) {
      if (!e.qualifier.empty() && !detail::iequals(bt.table->name(), e.qualifier)) {
        continue;
      }
      const auto idx = bt.table->column_index(e.name);
      if (!idx) {
        continue;
      }
      if (found) {
        throw BindError("ambiguous column name: " + e.name);
      }
      found = ColumnBinding{bt.cursor, static_cast<int>(*idx), bt.table->schema()[*idx].affinity};
    }
    if (!found) {
      if (!e.qualifier.empty() && std::none_of(tables_.begin(), tables_.end(), [&](const BoundTable &bt) {
            return detail::iequals(bt.table->name(), e.qualifier);
          })) {
        throw BindError("no such table in FROM clause: " + e.qualifier);
      }
      throw BindError("no such column: " + (e.qualifier.empty() ? e.name : e.qualifier + "." + e.name));
    }
    return *found;
  }

  int call_arity(const Expr &e) const { return e.star ? 0 : static_cast<int>(e.args.size()); }

  std::shared_ptr<const HostAggregate> aggregate_for(const Expr &e) const {
    if (e.kind != Expr::Kind::kCall) {
      return nullptr;
    }
    return functions_.find_aggregate(e.name, call_arity(e));
  }

  /// Deepest cursor referenced by an expression, or -1 for constants.
  int max_cursor(const Expr &e) const {
    if (e.kind == Expr::Kind::kColumn) {
      return bind_column(e).cursor;
    }
    int m = -1;
    for (const Expr &a : e.args) {
      m = std::max(m, max_cursor(a));
    }
    return m;
  }

  // -------------------------------------------------------------------------
  // Expressions
  // -------------------------------------------------------------------------

  void emit_literal(const ValueCell &v, int target) {
    if (v.is_null()) {
      emit(Opcode::kNull, 0, target);
    } else if (v.has(kFlagInt)) {
      const std::int64_t i = v.int_val();
      if (i >= std::numeric_limits<std::int32_t>::min() && i <= std::numeric_limits<std::int32_t>::max()) {
        emit(Opcode::kInteger, static_cast<int>(i), target);
      } else {
        emit(Opcode::kInteger, 0, target, 0, i);
      }
    } else if (v.has(kFlagReal)) {
      emit(Opcode::kReal, 0, target, 0, v.real_val());
    } else {
      emit(Opcode::kString, static_cast<int>(v.str_val().size()), target, 0, v.str_val());
    }
  }

  void emit_expr(const Expr &e, int target) {
    switch (e.kind) {
      case Expr::Kind::kColumn: {
        if (tables_.empty()) {
          throw BindError("column reference not allowed here: " + e.name);
        }
        const ColumnBinding b = bind_column(e);
        emit(Opcode::kColumn, b.cursor, b.column, target);
        if (b.affinity == Affinity::kReal) {
          emit(Opcode::kRealAffinity, target);
        }
        return;
      }
      case Expr::Kind::kLiteral:
        emit_literal(e.literal, target);
        return;
      case Expr::Kind::kParam:
        emit(Opcode::kVariable, e.param, target);
        return;
      case Expr::Kind::kBinary: {
        const int a = alloc();
        const int b = alloc();
        emit_expr(e.args[0], a);
        emit_expr(e.args[1], b);
        const Opcode op = e.op == '+' ? Opcode::kAdd : (e.op == '-' ? Opcode::kSub : Opcode::kMul);
        emit(op, a, b, target);
        return;
      }
      case Expr::Kind::kCall: {
        const int n = call_arity(e);
        auto fn = functions_.find_function(e.name, n);
        if (!fn) {
          if (functions_.find_aggregate(e.name, n)) {
            throw BindError("misuse of aggregate function " + e.name + "()");
          }
          throw BindError("no such function: " + e.name + "/" + std::to_string(n));
        }
        if (e.star) {
          throw BindError("'*' argument only allowed for count(*)");
        }
        const int first = alloc(n);
        for (int i = 0; i < n; ++i) {
          emit_expr(e.args[i], first + i);
        }
        emit(Opcode::kFunction, 0, first, target, FunctionRef{fn->name, n, fn, nullptr},
             static_cast<std::uint8_t>(n));
        return;
      }
    }
  }

  static std::string column_name(const Expr &e) {
    switch (e.kind) {
      case Expr::Kind::kColumn:
        return e.name;
      case Expr::Kind::kCall:
        return e.name + (e.star ? "(*)" : "(...)");
      case Expr::Kind::kLiteral:
        return render_sql(e.literal);
      case Expr::Kind::kParam:
        return "?";
      case Expr::Kind::kBinary:
        return std::string("expr");
    }
    return "expr";
  }

  // -------------------------------------------------------------------------
  // Statements
  // -------------------------------------------------------------------------

  void emit_trailer(int init_pc, bool write) {
    patch_p2(init_pc, here());
    emit(Opcode::kTransaction, 0, write ? 1 : 0, 0, std::int64_t{0}, 1);
    for (const BoundTable &bt : tables_) {
      emit(Opcode::kTableLock, 0, bt.table->root(), write ? 1 : 0, bt.table->name());
    }
    emit(Opcode::kGoto, 0, 1);
  }

  void select(const sql::Select &s) {
    for (const sql::TableRef &ref : s.from) {
      const Table &t = lookup_table(ref.name);
      for (const BoundTable &bt : tables_) {
        if (bt.table == &t) {
          throw BindError("table listed twice in FROM clause: " + ref.name);
        }
      }
      tables_.push_back({&t, static_cast<int>(tables_.size())});
    }

    struct Predicate {
      const sql::Comparison *cmp;
      int level;
    };
    std::vector<Predicate> predicates;
    auto add_predicates = [&](const std::vector<sql::Comparison> &list) {
      for (const sql::Comparison &c : list) {
        const int level = std::max({0, max_cursor(c.lhs), max_cursor(c.rhs)});
        predicates.push_back({&c, level});
      }
    };
    for (const sql::TableRef &ref : s.from) {
      add_predicates(ref.on);
    }
    add_predicates(s.where);

    std::vector<std::shared_ptr<const HostAggregate>> aggs;
    for (const Expr &item : s.items) {
      aggs.push_back(aggregate_for(item));
      prog_.column_names.push_back(column_name(item));
    }
    const bool aggregate = std::any_of(aggs.begin(), aggs.end(), [](const auto &a) { return a != nullptr; });
    if (aggregate && std::any_of(aggs.begin(), aggs.end(), [](const auto &a) { return a == nullptr; })) {
      throw BindError("aggregate and non-aggregate result columns cannot be mixed");
    }

    const int n_items = static_cast<int>(s.items.size());
    const int result = alloc(n_items);
    const int levels = static_cast<int>(tables_.size());

    const int init_pc = emit(Opcode::kInit);
    if (aggregate) {
      for (int i = 0; i < n_items; ++i) {
        emit(Opcode::kNull, 0, result + i);
      }
    }
    for (const BoundTable &bt : tables_) {
      emit(Opcode::kOpenRead, bt.cursor, bt.table->root(), 0, static_cast<std::int64_t>(bt.table->arity()));
    }
    const int rewind0 = emit(Opcode::kRewind, 0);

    std::vector<int> body(levels);
    std::vector<std::vector<int>> to_next(levels);
    for (int k = 0; k < levels; ++k) {
      body[k] = here();
      for (const Predicate &p : predicates) {
        if (p.level != k) {
          continue;
        }
        const int lhs = alloc();
        const int rhs = alloc();
        emit_expr(p.cmp->lhs, lhs);
        emit_expr(p.cmp->rhs, rhs);
        to_next[k].push_back(emit(negated(p.cmp->op), lhs, 0, rhs, {}, kJumpIfNull));
      }
      if (k + 1 < levels) {
        to_next[k].push_back(emit(Opcode::kRewind, k + 1));
      }
    }

    if (aggregate) {
      for (int i = 0; i < n_items; ++i) {
        const Expr &item = s.items[i];
        const int n = call_arity(item);
        const int first = n > 0 ? alloc(n) : 0;
        for (int a = 0; a < n; ++a) {
          if (aggregate_for(item.args[a]) != nullptr) {
            throw BindError("aggregate calls cannot be nested");
          }
          emit_expr(item.args[a], first + a);
        }
        emit(Opcode::kAggStep, 0, first, result + i, FunctionRef{aggs[i]->name, n, nullptr, aggs[i]},
             static_cast<std::uint8_t>(n));
      }
    } else {
      for (int i = 0; i < n_items; ++i) {
        emit_expr(s.items[i], result + i);
      }
      emit(Opcode::kResultRow, result, n_items);
    }

    for (int k = levels - 1; k >= 0; --k) {
      const int next_pc = emit(Opcode::kNext, k, body[k], 0, {}, 1);
      for (int pc : to_next[k]) {
        patch_p2(pc, next_pc);
      }
    }
    patch_p2(rewind0, here());
    for (const BoundTable &bt : tables_) {
      emit(Opcode::kClose, bt.cursor);
    }
    if (aggregate) {
      for (int i = 0; i < n_items; ++i) {
        emit(Opcode::kAggFinal, result + i, call_arity(s.items[i]), 0,
             FunctionRef{aggs[i]->name, call_arity(s.items[i]), nullptr, aggs[i]});
      }
      emit(Opcode::kResultRow, result, n_items);
    }
    emit(Opcode::kHalt);
    emit_trailer(init_pc, false);
  }

  void insert(const sql::Insert &ins) {
    const Table &t = lookup_table(ins.table);
    if (ins.values.size() != t.arity()) {
      throw BindError("table " + t.name() + " has " + std::to_string(t.arity()) + " columns but " +
                      std::to_string(ins.values.size()) + " values were supplied");
    }
    const int n = static_cast<int>(ins.values.size());
    const int values = alloc(n);
    const int record = alloc();
    const int rowid = alloc();
    const int init_pc = emit(Opcode::kInit);
    emit(Opcode::kOpenWrite, 0, t.root(), 0, static_cast<std::int64_t>(t.arity()));
    for (int i = 0; i < n; ++i) {
      emit_expr(ins.values[i], values + i);
    }
    emit(Opcode::kMakeRecord, values, n, record, RecordArity{n});
    emit(Opcode::kNewRowid, 0, rowid);
    emit(Opcode::kInsert, 0, record, rowid);
    emit(Opcode::kClose, 0);
    emit(Opcode::kHalt);
    tables_.push_back({&t, 0});
    emit_trailer(init_pc, true);
    prog_.writes = true;
  }

  void create(const sql::CreateTable &ct) {
    if (db_.find_table(ct.table) != nullptr) {
      throw SchemaError("table '" + ct.table + "' already exists");
    }
    for (std::size_t i = 0; i < ct.columns.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (detail::iequals(ct.columns[i].name, ct.columns[j].name)) {
          throw SchemaError("duplicate column '" + ct.columns[i].name + "' in table '" + ct.table + "'");
        }
      }
    }
    emit(Opcode::kInit, 0, 1);
    emit(Opcode::kHalt);
    prog_.create_table = CreateTableAction{ct.table, ct.columns};
    prog_.writes = true;
  }

  const Database &db_;
  const FunctionCatalog &functions_;
  Program prog_;
  std::vector<BoundTable> tables_;
  int next_reg_ = 1;
};

}  // namespace

Program codegen(const sql::Statement &stmt, const Database &db, const FunctionCatalog &functions,
                std::string_view source_sql) {
  return Generator(db, functions).run(stmt, source_sql);
}

Program compile(std::string_view sql, const Database &db, const FunctionCatalog &functions) {
  return codegen(sql::parse(sql), db, functions, sql);
}

}  // namespace sqvm
