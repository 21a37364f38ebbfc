#include "sqvm/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <memory>
#include <string>
#include <vector>

#include "sqvm/bench.hpp"
#include "sqvm/codegen.hpp"
#include "sqvm/connection.hpp"
#include "sqvm/errors.hpp"
#include "strutil.hpp"

namespace sqvm::cli {

namespace {

struct Signature {
  std::string name;
  int n_args = 0;
  std::string body;
};

Signature split_signature(std::string_view spec) {
  const auto slash = spec.find('/');
  const auto eq = spec.find('=');
  if (slash == std::string_view::npos || eq == std::string_view::npos || slash > eq || slash == 0) {
    throw UsageError("expected name/n=EXPR, got '" + std::string(spec) + "'");
  }
  Signature sig;
  sig.name = std::string(spec.substr(0, slash));
  const std::string_view arity = spec.substr(slash + 1, eq - slash - 1);
  auto [ptr, ec] = std::from_chars(arity.data(), arity.data() + arity.size(), sig.n_args);
  if (ec != std::errc() || ptr != arity.data() + arity.size()) {
    throw UsageError("bad arity '" + std::string(arity) + "' in '" + std::string(spec) + "'");
  }
  sig.body = std::string(spec.substr(eq + 1));
  return sig;
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) return parts;
    start = pos + 1;
  }
}

std::vector<ColumnSchema> parse_schema(const std::string &text) {
  std::vector<ColumnSchema> schema;
  for (const std::string &item : split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("schema entry '" + item + "' is not name:AFFINITY");
    auto affinity = parse_affinity(item.substr(colon + 1));
    if (!affinity) throw UsageError("unknown affinity in '" + item + "'");
    schema.push_back({item.substr(0, colon), *affinity});
  }
  return schema;
}

ExecMode mode_or_throw(const std::string &name) {
  auto mode = parse_mode(name);
  if (!mode) throw UsageError("unknown mode '" + name + "'");
  return *mode;
}

struct CommonOptions {
  std::string db;
  std::string mode = "full";
  std::uint32_t threshold = 16;
  std::vector<std::string> functions;
  std::vector<std::string> aggregates;

  ConnectionOptions connection() const {
    ConnectionOptions o;
    o.mode = mode_or_throw(mode);
    o.hot_threshold = threshold;
    return o;
  }

  std::unique_ptr<Connection> open() const {
    auto conn = std::make_unique<Connection>(db, connection());
    for (const auto &f : functions) conn->create_function(parse_function_spec(f));
    for (const auto &a : aggregates) conn->create_aggregate(parse_aggregate_spec(a));
    return conn;
  }
};

void add_common(CLI::App *cmd, CommonOptions &o, bool need_db) {
  auto *db = cmd->add_option("--db", o.db, "Database document");
  if (need_db) db->required();
  cmd->add_option("--mode", o.mode, "interp, full, no-inline or no-flags")->capture_default_str();
  cmd->add_option("--threshold", o.threshold, "Back-jumps before a loop is traced")->capture_default_str();
  cmd->add_option("--function", o.functions, "Register name/n=EXPR");
  cmd->add_option("--aggregate", o.aggregates, "Register name/n=STEP[;FINAL[;INIT]]");
}

class Tool {
 public:
  Tool(std::ostream &out, std::ostream &err) : out_(out), err_(err) {}

  int main(int argc, const char *const *argv) {
    CLI::App app{"Embedded SQL engine with a tracing optimizer"};
    app.require_subcommand(1);

    CommonOptions run_opts;
    std::string run_sql;
    std::vector<std::string> run_params;
    bool run_explain = false;
    auto *run = app.add_subcommand("run", "Execute a statement and print its rows");
    add_common(run, run_opts, true);
    run->add_option("sql", run_sql)->required();
    run->add_option("params", run_params, "Values for ? placeholders");
    run->add_flag("--explain", run_explain, "Print the program instead of running it");

    CommonOptions explain_opts;
    std::string explain_sql;
    auto *explain_cmd = app.add_subcommand("explain", "Print the compiled program");
    add_common(explain_cmd, explain_opts, false);
    explain_cmd->add_option("sql", explain_sql)->required();

    std::string gen_db;
    std::int64_t gen_rows = 0;
    std::uint64_t gen_seed = 1;
    auto *gen = app.add_subcommand("gen", "Write a seeded benchmark fixture");
    gen->add_option("--db", gen_db)->required();
    gen->add_option("--rows", gen_rows)->required();
    gen->add_option("--seed", gen_seed)->capture_default_str();

    std::string bench_suite;
    std::string bench_mode = "full";
    std::string bench_db;
    std::string bench_format = "text";
    std::int64_t bench_rows = 1000;
    std::uint64_t bench_seed = 1;
    std::uint32_t bench_threshold = 16;
    bool bench_verify = false;
    auto *bench = app.add_subcommand("bench", "Run a micro-benchmark suite");
    bench->add_option("suite", bench_suite, "select, innerjoin, hostjoin, hostfunction, hostaggregate, filltable or all")
        ->required();
    bench->add_option("--mode", bench_mode, "interp, full, no-inline, no-flags or all")->capture_default_str();
    bench->add_option("--db", bench_db, "Fixture document (generated when absent)");
    bench->add_option("--rows", bench_rows)->capture_default_str();
    bench->add_option("--seed", bench_seed)->capture_default_str();
    bench->add_option("--threshold", bench_threshold)->capture_default_str();
    bench->add_option("--format", bench_format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();
    bench->add_flag("--verify", bench_verify, "Compare checksums against interp mode");

    CommonOptions dump_opts;
    std::string dump_sql;
    int dump_warm = 32;
    auto *dump = app.add_subcommand("trace-dump", "Warm a query up and print its traces");
    add_common(dump, dump_opts, true);
    dump->add_option("sql", dump_sql)->required();
    dump->add_option("--warm", dump_warm, "Rows to step before dumping")->capture_default_str();

    std::string load_db;
    std::string load_table;
    std::string load_csv_path;
    std::string load_schema;
    bool load_header = false;
    auto *load = app.add_subcommand("load", "Append CSV rows to a table");
    load->add_option("--db", load_db)->required();
    load->add_option("--table", load_table)->required();
    load->add_option("--csv", load_csv_path)->required();
    load->add_option("--schema", load_schema, "name:AFFINITY,... used when the table is created");
    load->add_flag("--header", load_header, "Skip the first record");

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
      const int code = app.exit(e, out_, err_);
      return code == 0 ? kExitOk : kExitError;
    }

    try {
      if (*run) return run_explain ? cmd_explain(run_opts, run_sql) : cmd_run(run_opts, run_sql, run_params);
      if (*explain_cmd) return cmd_explain(explain_opts, explain_sql);
      if (*gen) return cmd_gen(gen_db, gen_rows, gen_seed);
      if (*bench) {
        return cmd_bench(bench_suite, bench_mode, bench_db, bench_rows, bench_seed, bench_threshold, bench_format,
                         bench_verify);
      }
      if (*dump) return cmd_trace_dump(dump_opts, dump_sql, dump_warm);
      if (*load) return cmd_load(load_db, load_table, load_csv_path, load_schema, load_header);
    } catch (const std::exception &e) {
      err_ << "error: " << e.what() << "\n";
      return kExitError;
    }
    return kExitError;
  }

 private:
  int cmd_run(const CommonOptions &o, const std::string &sql, const std::vector<std::string> &params) {
    auto conn = o.open();
    std::vector<ValueCell> values;
    for (const auto &p : params) values.push_back(parse_value(p));
    Statement stmt = conn->execute(sql, values);
    for (;;) {
      StepResult r = stmt.step();
      if (r.status == StepStatus::kDone) break;
      if (r.status == StepStatus::kError) {
        err_ << "error: " << error_kind_name(r.error) << ": " << r.message << "\n";
        return kExitError;
      }
      const auto &row = stmt.result_row();
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i > 0) out_ << '\t';
        out_ << render_sql(row[i]);
      }
      out_ << '\n';
    }
    if (conn->modified() && conn->database().path()) conn->save();
    return kExitOk;
  }

  int cmd_explain(const CommonOptions &o, const std::string &sql) {
    std::unique_ptr<Connection> conn = o.db.empty() ? std::make_unique<Connection>(Database{}, o.connection())
                                                     : std::make_unique<Connection>(o.db, o.connection());
    for (const auto &f : o.functions) conn->create_function(parse_function_spec(f));
    for (const auto &a : o.aggregates) conn->create_aggregate(parse_aggregate_spec(a));
    out_ << explain(compile(sql, conn->database(), *conn));
    return kExitOk;
  }

  int cmd_gen(const std::string &path, std::int64_t rows, std::uint64_t seed) {
    Database db = generate_fixture(rows, seed);
    save_database(db, path);
    return kExitOk;
  }

  int cmd_bench(const std::string &suite_arg, const std::string &mode_arg, const std::string &db_path,
                std::int64_t rows, std::uint64_t seed, std::uint32_t threshold, const std::string &format,
                bool verify) {
    std::vector<Suite> suites;
    if (suite_arg == "all") {
      suites = all_suites();
    } else if (auto s = parse_suite(suite_arg)) {
      suites.push_back(*s);
    } else {
      throw UsageError("unknown suite '" + suite_arg + "'");
    }
    std::vector<ExecMode> modes;
    if (mode_arg == "all") {
      modes = {ExecMode::kInterp, ExecMode::kFull, ExecMode::kNoInline, ExecMode::kNoFlags};
    } else {
      modes.push_back(mode_or_throw(mode_arg));
    }
    const Database fixture = db_path.empty() ? generate_fixture(rows, seed) : open_database(db_path);

    bool mismatch = false;
    bool first = true;
    if (format == "json") out_ << "[\n";
    for (Suite suite : suites) {
      std::optional<std::uint64_t> reference;
      if (verify) reference = run_bench(suite, fixture, {ExecMode::kInterp, threshold}).results_checksum;
      for (ExecMode mode : modes) {
        BenchReport report = run_bench(suite, fixture, {mode, threshold});
        if (format == "json") {
          out_ << (first ? "" : ",\n") << report_json(report);
        } else {
          out_ << report_text(report);
        }
        first = false;
        if (reference && report.results_checksum != *reference) {
          err_ << "verify: " << suite_name(suite) << " checksum in " << mode_name(mode) << " differs from interp\n";
          mismatch = true;
        }
      }
    }
    if (format == "json") out_ << "\n]\n";
    return mismatch ? kExitVerifyFailed : kExitOk;
  }

  int cmd_trace_dump(const CommonOptions &o, const std::string &sql, int warm) {
    auto conn = o.open();
    Statement stmt = conn->execute(sql);
    for (int i = 0; i < warm; ++i) {
      StepResult r = stmt.step();
      if (r.status == StepStatus::kError) {
        err_ << "error: " << error_kind_name(r.error) << ": " << r.message << "\n";
        return kExitError;
      }
      if (r.status == StepStatus::kDone) break;
    }
    const auto traces = conn->traces();
    if (traces.empty()) {
      err_ << "no trace formed after " << warm << " rows (threshold " << o.threshold << ")\n";
      return kExitError;
    }
    for (const auto &t : traces) out_ << dump_trace(*t);
    return kExitOk;
  }

  int cmd_load(const std::string &path, const std::string &table, const std::string &csv, const std::string &schema,
               bool header) {
    Database db = open_database(path);
    std::vector<ColumnSchema> columns;
    if (!schema.empty()) {
      columns = parse_schema(schema);
    } else if (!db.find_table(table)) {
      throw UsageError("table " + table + " does not exist; pass --schema to create it");
    }
    const std::size_t n = load_csv(db, table, csv, columns, {header});
    save_database(db, path);
    out_ << n << " rows loaded into " << table << "\n";
    return kExitOk;
  }

  std::ostream &out_;
  std::ostream &err_;
};

}  // namespace

HostFunction parse_function_spec(std::string_view spec) {
  Signature sig = split_signature(spec);
  return {sig.name, sig.n_args, ScriptedExpr::parse(sig.body)};
}

HostAggregate parse_aggregate_spec(std::string_view spec) {
  Signature sig = split_signature(spec);
  const std::vector<std::string> parts = split(sig.body, ';');
  if (parts.size() > 3) throw UsageError("aggregate spec has more than STEP;FINAL;INIT");
  HostAggregate agg;
  agg.name = sig.name;
  agg.n_args = sig.n_args;
  agg.step = ScriptedExpr::parse(parts[0]);
  if (parts.size() > 1 && !detail::trim(parts[1]).empty()) agg.finalize = ScriptedExpr::parse(parts[1]);
  if (parts.size() > 2) agg.init = parse_value(detail::trim(parts[2]));
  return agg;
}

ValueCell parse_value(std::string_view text) {
  if (detail::iequals(text, "null")) return ValueCell::null();
  std::int64_t i = 0;
  const char *end = text.data() + text.size();
  if (auto [p, ec] = std::from_chars(text.data(), end, i); ec == std::errc() && p == end && !text.empty()) {
    return ValueCell::integer(i);
  }
  double d = 0;
  if (auto [p, ec] = std::from_chars(text.data(), end, d); ec == std::errc() && p == end && !text.empty()) {
    return ValueCell::real(d);
  }
  return ValueCell::text(std::string(text));
}

int main(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  return Tool(out, err).main(argc, argv);
}

}  // namespace sqvm::cli
