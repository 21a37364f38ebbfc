#include "sqvm/connection.hpp"

#include "sqvm/codegen.hpp"
#include "strutil.hpp"

namespace sqvm {

namespace {

void check_scripted_arity(const ScriptedExpr &expr, int n_args, const std::string &name) {
  if (expr.max_arg_index() >= n_args) {
    throw UsageError(name + " references argument " + std::to_string(expr.max_arg_index()) + " but takes " +
                     std::to_string(n_args));
  }
}

}  // namespace

Connection::Connection(Database db, ConnectionOptions options) : db_(std::move(db)), options_(options) {
  for (HostAggregate &agg : builtin_aggregates()) {
    auto key = std::make_pair(agg.name, agg.n_args);
    aggregates_[key] = std::make_shared<const HostAggregate>(std::move(agg));
  }
  count_crossing(0);
}

Connection::Connection(const std::string &path, ConnectionOptions options)
    : Connection(open_database(path), options) {}

std::shared_ptr<const Program> Connection::compiled(std::string_view sql) {
  const std::string key(sql);
  if (auto it = program_cache_.find(key); it != program_cache_.end()) return it->second;
  auto program = std::make_shared<const Program>(compile(sql, db_, *this));
  // CREATE TABLE changes what later statements resolve to, so it is not cached.
  if (!program->create_table) program_cache_.emplace(key, program);
  return program;
}

std::shared_ptr<JitEntry> Connection::jit_entry(const std::shared_ptr<const Program> &program) {
  auto &entry = jit_[program.get()];
  if (!entry) entry = std::make_shared<JitEntry>(program);
  return entry;
}

Statement Connection::prepare(std::string_view sql) {
  count_crossing(0);
  auto program = compiled(sql);
  return Statement(*this, program, jit_entry(program));
}

Statement Connection::execute(std::string_view sql, std::span<const ValueCell> params) {
  count_crossing(params.size());
  auto program = compiled(sql);
  if (static_cast<int>(params.size()) != program->param_count) {
    throw UsageError("statement takes " + std::to_string(program->param_count) + " parameters, " +
                     std::to_string(params.size()) + " given");
  }
  Statement stmt(*this, program, jit_entry(program));
  stmt.params_.assign(params.begin(), params.end());
  return stmt;
}

std::vector<Row> Connection::run(std::string_view sql, std::span<const ValueCell> params) {
  Statement stmt = execute(sql, params);
  std::vector<Row> rows;
  for (;;) {
    StepResult r = stmt.run();
    if (r.status == StepStatus::kDone) break;
    if (r.status == StepStatus::kError) throw RuntimeError(r.error, r.message);
    rows.push_back(stmt.row_);
  }
  return rows;
}

Statement Connection::prepare_program(Program program) {
  validate_program(program);
  count_crossing(0);
  auto shared = std::make_shared<const Program>(std::move(program));
  return Statement(*this, shared, jit_entry(shared));
}

void Connection::create_function(HostFunction fn) {
  count_crossing(0);
  if (fn.n_args < 0) throw UsageError("function " + fn.name + " has a negative arity");
  if (const auto *expr = std::get_if<ScriptedExpr>(&fn.impl)) check_scripted_arity(*expr, fn.n_args, fn.name);
  fn.name = detail::to_lower(fn.name);
  auto key = std::make_pair(fn.name, fn.n_args);
  if (functions_.count(key)) {
    throw UsageError("function " + fn.name + "/" + std::to_string(fn.n_args) + " is already registered");
  }
  functions_[key] = std::make_shared<const HostFunction>(std::move(fn));
  clear_caches();
}

void Connection::create_aggregate(HostAggregate agg) {
  count_crossing(0);
  if (agg.n_args < 0) throw UsageError("aggregate " + agg.name + " has a negative arity");
  if (const auto *expr = std::get_if<ScriptedExpr>(&agg.step)) check_scripted_arity(*expr, agg.n_args, agg.name);
  agg.name = detail::to_lower(agg.name);
  agg.builtin = false;
  auto key = std::make_pair(agg.name, agg.n_args);
  if (aggregates_.count(key)) {
    throw UsageError("aggregate " + agg.name + "/" + std::to_string(agg.n_args) + " is already registered");
  }
  aggregates_[key] = std::make_shared<const HostAggregate>(std::move(agg));
  clear_caches();
}

std::shared_ptr<const HostFunction> Connection::find_function(std::string_view name, int n_args) const {
  auto it = functions_.find({detail::to_lower(name), n_args});
  return it == functions_.end() ? nullptr : it->second;
}

std::shared_ptr<const HostAggregate> Connection::find_aggregate(std::string_view name, int n_args) const {
  auto it = aggregates_.find({detail::to_lower(name), n_args});
  return it == aggregates_.end() ? nullptr : it->second;
}

void Connection::save() {
  if (!db_.path()) throw UsageError("connection has no database path");
  save_database(db_, *db_.path());
  modified_ = false;
}

void Connection::set_mode(ExecMode mode) {
  options_.mode = mode;
  jit_.clear();
}

void Connection::reset_counters() {
  stats_ = {};
  crossings_ = {};
}

std::vector<std::shared_ptr<const Trace>> Connection::traces() const {
  std::vector<std::shared_ptr<const Trace>> out;
  for (const auto &[program, entry] : jit_) {
    for (const auto &t : entry->traces) {
      if (t) out.push_back(t);
    }
  }
  return out;
}

void Connection::clear_caches() {
  program_cache_.clear();
  jit_.clear();
}

bool Connection::allocation_fails() {
  if (alloc_failure_countdown_ <= 0) return false;
  if (--alloc_failure_countdown_ > 0) return false;
  alloc_failure_countdown_ = -1;
  return true;
}

}  // namespace sqvm
