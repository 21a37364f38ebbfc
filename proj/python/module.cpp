#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sqvm/bench.hpp"
#include "sqvm/codegen.hpp"
#include "sqvm/connection.hpp"
#include "sqvm/errors.hpp"

namespace py = pybind11;

namespace {

using sqvm::ValueCell;

ValueCell to_cell(const py::handle &obj) {
  if (obj.is_none()) return ValueCell::null();
  if (py::isinstance<py::bool_>(obj)) return ValueCell::integer(obj.cast<bool>() ? 1 : 0);
  if (py::isinstance<py::int_>(obj)) return ValueCell::integer(obj.cast<std::int64_t>());
  if (py::isinstance<py::float_>(obj)) return ValueCell::real(obj.cast<double>());
  if (py::isinstance<py::bytes>(obj)) return ValueCell::blob(obj.cast<std::string>());
  if (py::isinstance<py::str>(obj)) return ValueCell::text(obj.cast<std::string>());
  throw py::type_error("cannot convert " + std::string(py::str(obj.get_type())) + " to a SQL value");
}

py::object from_cell(const ValueCell &cell) {
  if (cell.is_null()) return py::none();
  if (cell.has(sqvm::kFlagInt)) return py::int_(cell.int_val());
  if (cell.has(sqvm::kFlagReal)) return py::float_(cell.real_val());
  if (cell.has(sqvm::kFlagBlob)) return py::bytes(cell.str_val());
  return py::str(cell.str_val());
}

std::vector<ValueCell> to_cells(const py::sequence &seq) {
  std::vector<ValueCell> out;
  for (const auto &item : seq) out.push_back(to_cell(item));
  return out;
}

py::tuple to_tuple(const sqvm::Row &row) {
  py::tuple t(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) t[i] = from_cell(row[i]);
  return t;
}

sqvm::ExecMode mode_arg(const std::string &name) {
  auto mode = sqvm::parse_mode(name);
  if (!mode) throw py::value_error("unknown mode '" + name + "'");
  return *mode;
}

std::unique_ptr<sqvm::Connection> open_connection(const std::optional<std::string> &path, const std::string &mode,
                                                  std::uint32_t threshold) {
  sqvm::ConnectionOptions o;
  o.mode = mode_arg(mode);
  o.hot_threshold = threshold;
  if (path) return std::make_unique<sqvm::Connection>(*path, o);
  return std::make_unique<sqvm::Connection>(sqvm::Database{}, o);
}

py::object step(sqvm::Statement &stmt) {
  sqvm::StepResult r = stmt.step();
  if (r.status == sqvm::StepStatus::kDone) return py::none();
  if (r.status == sqvm::StepStatus::kError) throw sqvm::RuntimeError(r.error, r.message);
  return to_tuple(stmt.result_row());
}

py::dict stats_dict(const sqvm::ExecStats &s) {
  py::dict d;
  d["interp_opcount"] = s.interp_opcount;
  d["trace_opcount_unoptimized"] = s.trace_opcount_unoptimized;
  d["trace_opcount_optimized"] = s.trace_opcount_optimized;
  d["traces_formed"] = s.traces_formed;
  d["trace_ops_executed"] = s.trace_ops_executed;
  d["read_flags_executed"] = s.read_flags_executed;
  d["opaque_calls_executed"] = s.opaque_calls_executed;
  d["side_exits"] = s.side_exits;
  d["invalidations"] = s.invalidations;
  d["recording_aborts"] = s.recording_aborts;
  d["rows_from_traces"] = s.rows_from_traces;
  return d;
}

sqvm::NativeFunction wrap_callable(py::function fn) {
  return [fn](std::span<const ValueCell> args) {
    py::gil_scoped_acquire gil;
    py::tuple t(args.size());
    for (std::size_t i = 0; i < args.size(); ++i) t[i] = from_cell(args[i]);
    return to_cell(fn(*t));
  };
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Embedded SQL engine with a tracing optimizer";

  py::register_exception<sqvm::Error>(m, "Error");
  py::register_exception<sqvm::SyntaxError>(m, "SqlSyntaxError", m.attr("Error"));
  py::register_exception<sqvm::UsageError>(m, "UsageError", m.attr("Error"));
  py::register_exception<sqvm::RuntimeError>(m, "ExecutionError", m.attr("Error"));

  py::class_<sqvm::Statement>(m, "Statement")
      .def("bind", [](sqvm::Statement &s, int index, py::handle value) { s.bind(index, to_cell(value)); })
      .def("step", &step, "Next row as a tuple, or None when done")
      .def("__iter__", [](py::object self) { return self; })
      .def("__next__", [](sqvm::Statement &s) {
        py::object row = step(s);
        if (row.is_none()) throw py::stop_iteration();
        return row;
      });

  py::class_<sqvm::Connection>(m, "Connection")
      .def(py::init(&open_connection), py::arg("path") = std::nullopt, py::arg("mode") = "full",
           py::arg("threshold") = 16)
      .def(
          "execute",
          [](sqvm::Connection &c, const std::string &sql, const py::sequence &params) {
            auto cells = to_cells(params);
            return c.execute(sql, cells);
          },
          py::arg("sql"), py::arg("params") = py::tuple(), py::keep_alive<0, 1>())
      .def(
          "run",
          [](sqvm::Connection &c, const std::string &sql, const py::sequence &params) {
            auto cells = to_cells(params);
            py::list rows;
            for (const auto &row : c.run(sql, cells)) rows.append(to_tuple(row));
            return rows;
          },
          py::arg("sql"), py::arg("params") = py::tuple())
      .def("prepare", &sqvm::Connection::prepare, py::keep_alive<0, 1>())
      .def("explain",
           [](sqvm::Connection &c, const std::string &sql) { return sqvm::explain(sqvm::compile(sql, c.database(), c)); })
      .def(
          "create_function",
          [](sqvm::Connection &c, const std::string &name, int n_args, py::object impl) {
            if (py::isinstance<py::str>(impl)) {
              c.create_function({name, n_args, sqvm::ScriptedExpr::parse(impl.cast<std::string>())});
            } else {
              c.create_function({name, n_args, wrap_callable(impl.cast<py::function>())});
            }
          },
          py::arg("name"), py::arg("n_args"), py::arg("impl"),
          "impl is a scripted expression (str) or a Python callable")
      .def(
          "create_aggregate",
          [](sqvm::Connection &c, const std::string &name, int n_args, const std::string &step,
             const std::optional<std::string> &final, py::handle init) {
            sqvm::HostAggregate agg;
            agg.name = name;
            agg.n_args = n_args;
            agg.step = sqvm::ScriptedExpr::parse(step);
            if (final) agg.finalize = sqvm::ScriptedExpr::parse(*final);
            agg.init = to_cell(init);
            c.create_aggregate(std::move(agg));
          },
          py::arg("name"), py::arg("n_args"), py::arg("step"), py::arg("final") = std::nullopt,
          py::arg("init") = 0)
      .def("save", &sqvm::Connection::save)
      .def("traces",
           [](const sqvm::Connection &c) {
             std::vector<std::string> dumps;
             for (const auto &t : c.traces()) dumps.push_back(sqvm::dump_trace(*t));
             return dumps;
           })
      .def_property_readonly("crossings",
                             [](const sqvm::Connection &c) {
                               return std::make_pair(c.crossings().crossings, c.crossings().values_converted);
                             })
      .def_property_readonly("stats", [](const sqvm::Connection &c) { return stats_dict(c.stats()); })
      .def("reset_counters", &sqvm::Connection::reset_counters);

  m.def(
      "generate_fixture",
      [](std::int64_t rows, std::uint64_t seed, const std::string &path) {
        sqvm::save_database(sqvm::generate_fixture(rows, seed), path);
      },
      py::arg("rows"), py::arg("seed"), py::arg("path"));

  m.def(
      "bench",
      [](const std::string &suite, std::int64_t rows, std::uint64_t seed, const std::string &mode,
         std::uint32_t threshold) {
        auto s = sqvm::parse_suite(suite);
        if (!s) throw py::value_error("unknown suite '" + suite + "'");
        const sqvm::BenchReport r =
            sqvm::run_bench(*s, sqvm::generate_fixture(rows, seed), {mode_arg(mode), threshold});
        py::dict d;
        d["benchmark"] = r.suite;
        d["mode"] = std::string(sqvm::mode_name(r.mode));
        d["rows"] = r.rows;
        d["result_rows"] = r.result_rows;
        d["crossings"] = r.counters.crossings;
        d["values_converted"] = r.counters.values_converted;
        d["results_checksum"] = r.results_checksum;
        d["stats"] = stats_dict(r.stats);
        d["wall_seconds"] = r.wall_seconds;
        return d;
      },
      py::arg("suite"), py::arg("rows") = 1000, py::arg("seed") = 1, py::arg("mode") = "full",
      py::arg("threshold") = 16);
}
