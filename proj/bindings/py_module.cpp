// Copyright 2026 The Nettest Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nettest/analysis.hpp"
#include "nettest/batch.hpp"
#include "nettest/error.hpp"
#include "nettest/protocol.hpp"
#include "nettest/rate.hpp"
#include "nettest/results.hpp"

namespace py = pybind11;
using namespace nettest;

namespace {

// nlohmann documents cross into Python as plain dict/list values.
py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_nettest, m) {
  m.doc() = "Rate aggregation, curve analysis and result access for the "
            "nettest measurement toolkit";

  py::register_exception<ProtocolError>(m, "ProtocolError",
                                        PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  // --- protocol ------------------------------------------------------

  py::enum_<MessageKind>(m, "MessageKind")
      .value("Greeting", MessageKind::Greeting)
      .value("GetChunk", MessageKind::GetChunk)
      .value("GetTime", MessageKind::GetTime)
      .value("Ping", MessageKind::Ping)
      .value("Pong", MessageKind::Pong)
      .value("PingOk", MessageKind::PingOk)
      .value("PutNoResult", MessageKind::PutNoResult)
      .value("Put", MessageKind::Put)
      .value("TimeReport", MessageKind::TimeReport)
      .value("Ok", MessageKind::Ok)
      .value("Err", MessageKind::Err)
      .value("Quit", MessageKind::Quit);

  py::class_<ControlMessage>(m, "ControlMessage")
      .def(py::init<>())
      .def_readwrite("kind", &ControlMessage::kind)
      .def_readwrite("args", &ControlMessage::args)
      .def_readwrite("version", &ControlMessage::version)
      .def(py::self == py::self);

  m.def("parse_message",
        [](const std::string& line) { return parse_message(line); },
        py::arg("line"),
        "Parse one newline-terminated control line.");
  m.def("serialize_message", &serialize_message, py::arg("message"),
        "Serialize a control message to its wire line.");

  // --- rate aggregation ------------------------------------------------

  py::class_<FlowSample>(m, "FlowSample")
      .def(py::init<>())
      .def(py::init([](int64_t t_ns, int64_t bytes) {
             return FlowSample{t_ns, bytes};
           }),
           py::arg("t_ns"), py::arg("bytes"))
      .def_readwrite("t_ns", &FlowSample::t_ns)
      .def_readwrite("bytes", &FlowSample::bytes)
      .def(py::self == py::self);

  py::class_<FlowSeries>(m, "FlowSeries")
      .def(py::init<>())
      .def_readwrite("flow_id", &FlowSeries::flow_id)
      .def_readwrite("samples", &FlowSeries::samples)
      .def_readwrite("failed", &FlowSeries::failed)
      .def("validate", &FlowSeries::validate)
      .def("last_t_ns", &FlowSeries::last_t_ns)
      .def(py::self == py::self);

  py::enum_<FlowPolicy>(m, "FlowPolicy")
      .value("ExcludeFailed", FlowPolicy::ExcludeFailed)
      .value("Strict", FlowPolicy::Strict);

  py::class_<RateResult>(m, "RateResult")
      .def_readonly("t_star_ns", &RateResult::t_star_ns)
      .def_readonly("per_flow_bytes", &RateResult::per_flow_bytes)
      .def_readonly("rate_bytes_per_s", &RateResult::rate_bytes_per_s)
      .def_readonly("flows_used", &RateResult::flows_used)
      .def("rate_bits_per_s", &RateResult::rate_bits_per_s);

  py::class_<RateCurve>(m, "RateCurve")
      .def(py::init<>())
      .def_readwrite("grid_step_ns", &RateCurve::grid_step_ns)
      .def_readwrite("t_star_ns", &RateCurve::t_star_ns)
      .def_readwrite("rate_bytes_per_s", &RateCurve::rate_bytes_per_s)
      .def_readwrite("truncated", &RateCurve::truncated)
      .def("__len__", &RateCurve::size);

  m.attr("DEFAULT_GRID_STEP_NS") = kDefaultGridStepNs;

  m.def("compute_t_star",
        [](const std::vector<FlowSeries>& series) {
          return compute_t_star(series);
        },
        py::arg("series"),
        "Minimum over flows of the last sample time.");
  m.def("interpolate_bytes", &interpolate_bytes, py::arg("series"),
        py::arg("t_star_ns"),
        "Bytes received from 0 to t_star, linearly interpolated.");
  m.def("compute_rate",
        [](const std::vector<FlowSeries>& series,
           std::optional<int64_t> t_star_ns, FlowPolicy policy) {
          return compute_rate(series, t_star_ns, policy);
        },
        py::arg("series"), py::arg("t_star_ns") = std::nullopt,
        py::arg("policy") = FlowPolicy::ExcludeFailed,
        "Aggregate rate over all flows at t_star.");
  m.def("resample_curve",
        [](const std::vector<FlowSeries>& series, int64_t horizon_ns,
           int64_t grid_step_ns, FlowPolicy policy) {
          return resample_curve(series, grid_step_ns, horizon_ns, policy);
        },
        py::arg("series"), py::arg("horizon_ns"),
        py::arg("grid_step_ns") = kDefaultGridStepNs,
        py::arg("policy") = FlowPolicy::ExcludeFailed,
        "Aggregate rate on every grid point up to the horizon.");

  // --- analysis --------------------------------------------------------

  py::class_<CurveCollection>(m, "CurveCollection")
      .def(py::init<>())
      .def_readwrite("group_key", &CurveCollection::group_key)
      .def_readwrite("curves", &CurveCollection::curves)
      .def_readwrite("excluded_short_curves",
                     &CurveCollection::excluded_short_curves);

  py::class_<CurveDistance>(m, "CurveDistance")
      .def_readonly("percent", &CurveDistance::percent)
      .def_readonly("raw", &CurveDistance::raw);

  py::class_<TimedRate>(m, "TimedRate")
      .def(py::init<>())
      .def(py::init([](int64_t start_ns, double rate_bps) {
             return TimedRate{start_ns, rate_bps};
           }),
           py::arg("start_ns"), py::arg("rate_bps"))
      .def_readwrite("start_ns", &TimedRate::start_ns)
      .def_readwrite("rate_bps", &TimedRate::rate_bps);

  py::class_<TimeOfDayRow>(m, "TimeOfDayRow")
      .def(py::init<>())
      .def_readwrite("relative_hour", &TimeOfDayRow::relative_hour)
      .def_readwrite("rate_bps", &TimeOfDayRow::rate_bps);

  m.def("median_curve", &median_curve, py::arg("collection"),
        "Pointwise median curve across a collection.");
  m.def("saturation_fractions",
        [](const RateCurve& curve, int64_t saturation_t_ns,
           const std::vector<int64_t>& checkpoints) {
          return saturation_fractions(curve, saturation_t_ns, checkpoints);
        },
        py::arg("curve"), py::arg("saturation_t_ns"), py::arg("checkpoints"),
        "Percent of the saturation rate reached at each checkpoint.");
  m.def("curve_distance", &curve_distance, py::arg("a"), py::arg("b"),
        py::arg("normalizer"),
        "Normalized Euclidean distance between two curves.");
  m.def("curve_median_value", &curve_median_value, py::arg("curve"));
  m.def("timeofday_export",
        [](std::vector<TimedRate> runs, std::optional<int> bucket_minutes) {
          return timeofday_export(std::move(runs), bucket_minutes);
        },
        py::arg("runs"), py::arg("bucket_minutes") = std::nullopt,
        "Rate-vs-relative-hour table for daily-pattern inspection.");
  m.def("autocorrelation_peak_lag_hours",
        [](const std::vector<TimeOfDayRow>& rows, double min_lag_h,
           double max_lag_h) {
          return autocorrelation_peak_lag_hours(rows, min_lag_h, max_lag_h);
        },
        py::arg("rows"), py::arg("min_lag_h"), py::arg("max_lag_h"),
        "Lag of the autocorrelation peak of an evenly sampled series.");

  // --- batch expansion -------------------------------------------------

  m.def("expand_batch",
        [](const std::string& spec_json) {
          BatchSpec spec = parse_batch_spec(nlohmann::json::parse(spec_json));
          std::vector<py::dict> out;
          for (const auto& cfg : expand(spec)) {
            py::dict d;
            d["run_id"] = cfg.run_id;
            d["server_host"] = cfg.server_host;
            d["server_port"] = cfg.server_port;
            d["flows_dl"] = cfg.flows_dl;
            d["flows_ul"] = cfg.flows_ul;
            d["duration_dl_s"] = cfg.duration_dl_s;
            d["duration_ul_s"] = cfg.duration_ul_s;
            d["duration_pretest_s"] = cfg.duration_pretest_s;
            d["ping_count"] = cfg.ping_count;
            d["chunk_size"] = cfg.chunk_size;
            out.push_back(std::move(d));
          }
          return out;
        },
        py::arg("spec_json"),
        "Expand a JSON batch spec into the ordered list of run configs.");

  // --- result files ----------------------------------------------------

  m.def("load_run",
        [](const std::filesystem::path& dir) {
          RunArtifacts a = read_run(dir);
          py::dict d;
          d["summary"] = json_to_py(a.raw_summary);
          d["flows"] = json_to_py(a.raw_flows);
          d["stats"] = a.stats_missing ? py::object(py::none())
                                       : json_to_py(a.raw_stats);
          d["traceroute"] = json_to_py(a.raw_trace);
          d["dl_series"] = py::cast(a.record.dl_series);
          d["ul_series"] = py::cast(a.record.ul_series);
          return d;
        },
        py::arg("dir"),
        "Read one run directory; returns the four documents plus the "
        "timed flow series ready for compute_rate/resample_curve.");
}
