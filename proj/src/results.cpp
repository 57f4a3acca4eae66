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

#include "nettest/results.hpp"

#include <fstream>

#include "nettest/error.hpp"

namespace nettest {

using nlohmann::json;

namespace {

constexpr const char* kSummarySchema = "nettest-summary/1";
constexpr const char* kFlowsSchema = "nettest-flows/1";
constexpr const char* kStatsSchema = "nettest-stats/1";
constexpr const char* kTraceSchema = "nettest-traceroute/1";

json config_to_json(const MeasurementConfig& c) {
  return json{{"server_host", c.server_host},
              {"server_port", c.server_port},
              {"flows_dl", c.flows_dl},
              {"flows_ul", c.flows_ul},
              {"duration_dl_s", c.duration_dl_s},
              {"duration_ul_s", c.duration_ul_s},
              {"duration_pretest_s", c.duration_pretest_s},
              {"ping_count", c.ping_count},
              {"chunk_size_bytes", c.chunk_size},
              {"stats_interval_ns", c.stats_interval_ns},
              {"run_id", c.run_id}};
}

MeasurementConfig config_from_json(const json& j) {
  MeasurementConfig c;
  c.server_host = j.at("server_host").get<std::string>();
  c.server_port = j.at("server_port").get<uint16_t>();
  c.flows_dl = j.at("flows_dl").get<int>();
  c.flows_ul = j.at("flows_ul").get<int>();
  c.duration_dl_s = j.at("duration_dl_s").get<double>();
  c.duration_ul_s = j.at("duration_ul_s").get<double>();
  c.duration_pretest_s = j.at("duration_pretest_s").get<double>();
  c.ping_count = j.at("ping_count").get<int>();
  c.chunk_size = j.at("chunk_size_bytes").get<uint64_t>();
  c.stats_interval_ns = j.at("stats_interval_ns").get<int64_t>();
  c.run_id = j.at("run_id").get<std::string>();
  return c;
}

json series_to_json(const FlowSeries& s) {
  json samples = json::array();
  for (const auto& p : s.samples) {
    samples.push_back(json::array({p.t_ns, p.bytes}));
  }
  return json{{"flow_id", s.flow_id},
              {"failed", s.failed},
              {"samples_t_ns_bytes", std::move(samples)}};
}

FlowSeries series_from_json(const json& j, const std::string& stage) {
  FlowSeries s;
  s.flow_id = j.at("flow_id").get<int>();
  s.failed = j.at("failed").get<bool>();
  const json& samples = j.at("samples_t_ns_bytes");
  s.samples.reserve(samples.size());
  for (const auto& p : samples) {
    s.samples.push_back({p.at(0).get<int64_t>(), p.at(1).get<int64_t>()});
  }
  try {
    s.validate();
  } catch (const Error& e) {
    throw SchemaError("flows.json: stage " + stage + ": " + e.what());
  }
  return s;
}

json stage_to_json(const std::vector<FlowSeries>& series) {
  json arr = json::array();
  for (const auto& s : series) arr.push_back(series_to_json(s));
  return arr;
}

std::vector<FlowSeries> stage_from_json(const json& arr,
                                        const std::string& stage) {
  std::vector<FlowSeries> out;
  out.reserve(arr.size());
  for (const auto& j : arr) out.push_back(series_from_json(j, stage));
  return out;
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

template <typename T>
void set_optional(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("rename failed for " + path.string());
  }
}

SummaryRecord make_summary(const RunRecord& record,
                           const std::optional<RateResult>& dl_rate,
                           const std::optional<RateResult>& ul_rate) {
  SummaryRecord s;
  s.test_id = record.config.run_id;
  s.config = record.config;
  s.start_time_utc = record.start_wallclock_utc;
  s.end_time_utc = record.end_wallclock_utc;
  s.status = record.status;
  if (dl_rate) s.dl_rate_bps = dl_rate->rate_bits_per_s();
  if (ul_rate) s.ul_rate_bps = ul_rate->rate_bits_per_s();
  if (!record.ping.rtts_ns.empty()) s.ping_median_ns = record.ping.median_ns;
  s.server_host = record.config.server_host;
  s.server_resolved_address = record.server_address;
  s.chunk_size_used_bytes = record.chunk_size_used;
  s.pretest_final_chunk_size_bytes = record.pretest_final_chunk_size;
  s.total_downloaded_bytes = record.total_downloaded_bytes();
  s.total_uploaded_bytes = record.total_uploaded_bytes();
  return s;
}

json summary_to_json(const SummaryRecord& s) {
  json j{{"schema", kSummarySchema},
         {"test_id", s.test_id},
         {"config", config_to_json(s.config)},
         {"start_time_utc", s.start_time_utc},
         {"end_time_utc", s.end_time_utc},
         {"status", to_string(s.status)},
         {"server_host", s.server_host},
         {"server_resolved_address", s.server_resolved_address},
         {"chunk_size_used_bytes", s.chunk_size_used_bytes},
         {"pretest_final_chunk_size_bytes", s.pretest_final_chunk_size_bytes},
         {"total_downloaded_bytes", s.total_downloaded_bytes},
         {"total_uploaded_bytes", s.total_uploaded_bytes}};
  set_optional(j, "dl_rate_bps", s.dl_rate_bps);
  set_optional(j, "ul_rate_bps", s.ul_rate_bps);
  set_optional(j, "ping_median_ns", s.ping_median_ns);
  return j;
}

SummaryRecord summary_from_json(const json& j) {
  if (j.value("schema", "") != kSummarySchema) {
    throw SchemaError("summary.json: unexpected schema tag");
  }
  SummaryRecord s;
  s.test_id = j.at("test_id").get<std::string>();
  s.config = config_from_json(j.at("config"));
  s.start_time_utc = j.at("start_time_utc").get<std::string>();
  s.end_time_utc = j.at("end_time_utc").get<std::string>();
  s.status = run_status_from_string(j.at("status").get<std::string>());
  s.dl_rate_bps = get_optional<double>(j, "dl_rate_bps");
  s.ul_rate_bps = get_optional<double>(j, "ul_rate_bps");
  s.ping_median_ns = get_optional<int64_t>(j, "ping_median_ns");
  s.server_host = j.at("server_host").get<std::string>();
  s.server_resolved_address =
      j.at("server_resolved_address").get<std::string>();
  s.chunk_size_used_bytes = j.at("chunk_size_used_bytes").get<uint64_t>();
  s.pretest_final_chunk_size_bytes =
      j.at("pretest_final_chunk_size_bytes").get<uint64_t>();
  s.total_downloaded_bytes = j.at("total_downloaded_bytes").get<int64_t>();
  s.total_uploaded_bytes = j.at("total_uploaded_bytes").get<int64_t>();
  return s;
}

json flows_to_json(const RunRecord& record) {
  json ping{{"rtts_ns", record.ping.rtts_ns},
            {"lost", record.ping.lost},
            {"median_ns", record.ping.median_ns}};
  return json{{"schema", kFlowsSchema},
              {"stages",
               {{"pretest_dl", stage_to_json(record.pretest_dl_series)},
                {"dl", stage_to_json(record.dl_series)},
                {"pretest_ul", stage_to_json(record.pretest_ul_series)},
                {"ul", stage_to_json(record.ul_series)}}},
              {"ping", std::move(ping)}};
}

void flows_from_json(const json& j, RunRecord& record) {
  if (j.value("schema", "") != kFlowsSchema) {
    throw SchemaError("flows.json: unexpected schema tag");
  }
  const json& stages = j.at("stages");
  record.pretest_dl_series =
      stage_from_json(stages.at("pretest_dl"), "pretest_dl");
  record.dl_series = stage_from_json(stages.at("dl"), "dl");
  record.pretest_ul_series =
      stage_from_json(stages.at("pretest_ul"), "pretest_ul");
  record.ul_series = stage_from_json(stages.at("ul"), "ul");
  const json& ping = j.at("ping");
  record.ping.rtts_ns = ping.at("rtts_ns").get<std::vector<int64_t>>();
  record.ping.lost = ping.at("lost").get<int>();
  record.ping.median_ns = ping.at("median_ns").get<int64_t>();
}

json stats_to_json(const std::vector<SocketStatsSample>& samples) {
  json arr = json::array();
  for (const auto& s : samples) {
    json e{{"flow_id", s.flow_id}, {"stage", s.stage}, {"t_ns", s.t_ns}};
    set_optional(e, "rtt_us", s.rtt_us);
    set_optional(e, "rtt_var_us", s.rtt_var_us);
    set_optional(e, "retransmits_total", s.retransmits_total);
    set_optional(e, "slow_start_threshold", s.slow_start_threshold);
    set_optional(e, "congestion_window", s.congestion_window);
    set_optional(e, "bytes_acked", s.bytes_acked);
    arr.push_back(std::move(e));
  }
  return json{{"schema", kStatsSchema}, {"samples", std::move(arr)}};
}

std::vector<SocketStatsSample> stats_from_json(const json& j) {
  if (j.value("schema", "") != kStatsSchema) {
    throw SchemaError("stats.json: unexpected schema tag");
  }
  std::vector<SocketStatsSample> out;
  for (const auto& e : j.at("samples")) {
    SocketStatsSample s;
    s.flow_id = e.at("flow_id").get<int>();
    s.stage = e.at("stage").get<std::string>();
    s.t_ns = e.at("t_ns").get<int64_t>();
    s.rtt_us = get_optional<int64_t>(e, "rtt_us");
    s.rtt_var_us = get_optional<int64_t>(e, "rtt_var_us");
    s.retransmits_total = get_optional<int64_t>(e, "retransmits_total");
    s.slow_start_threshold = get_optional<int64_t>(e, "slow_start_threshold");
    s.congestion_window = get_optional<int64_t>(e, "congestion_window");
    s.bytes_acked = get_optional<int64_t>(e, "bytes_acked");
    out.push_back(std::move(s));
  }
  return out;
}

json trace_to_json(const TraceResult& trace) {
  json hops = json::array();
  for (const auto& h : trace.hops) {
    json e{{"ttl", h.ttl}};
    set_optional(e, "address", h.address);
    set_optional(e, "rtt_us", h.rtt_us);
    set_optional(e, "asn", h.asn);
    hops.push_back(std::move(e));
  }
  return json{{"schema", kTraceSchema},
              {"target", trace.target},
              {"status", trace.status},
              {"hops", std::move(hops)}};
}

TraceResult trace_from_json(const json& j) {
  if (j.value("schema", "") != kTraceSchema) {
    throw SchemaError("traceroute.json: unexpected schema tag");
  }
  TraceResult t;
  t.target = j.at("target").get<std::string>();
  t.status = j.at("status").get<std::string>();
  for (const auto& e : j.at("hops")) {
    TracerouteHop h;
    h.ttl = e.at("ttl").get<int>();
    h.address = get_optional<std::string>(e, "address");
    h.rtt_us = get_optional<int64_t>(e, "rtt_us");
    h.asn = get_optional<uint32_t>(e, "asn");
    t.hops.push_back(std::move(h));
  }
  return t;
}

std::array<std::filesystem::path, 4> write_run(
    const RunRecord& record, const std::optional<RateResult>& dl_rate,
    const std::optional<RateResult>& ul_rate, const TraceResult& trace,
    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  SummaryRecord summary = make_summary(record, dl_rate, ul_rate);
  std::array<std::filesystem::path, 4> paths = {
      out_dir / "summary.json", out_dir / "flows.json",
      out_dir / "stats.json", out_dir / "traceroute.json"};
  write_file_atomic(paths[0], summary_to_json(summary).dump(2) + "\n");
  write_file_atomic(paths[1], flows_to_json(record).dump(2) + "\n");
  write_file_atomic(paths[2], stats_to_json(record.stats).dump(2) + "\n");
  write_file_atomic(paths[3], trace_to_json(trace).dump(2) + "\n");
  return paths;
}

RunArtifacts read_run(const std::filesystem::path& dir) {
  RunArtifacts art;
  art.raw_summary = load_json_file(dir / "summary.json");
  art.summary = summary_from_json(art.raw_summary);

  art.raw_flows = load_json_file(dir / "flows.json");
  flows_from_json(art.raw_flows, art.record);

  art.record.config = art.summary.config;
  art.record.start_wallclock_utc = art.summary.start_time_utc;
  art.record.end_wallclock_utc = art.summary.end_time_utc;
  art.record.status = art.summary.status;
  art.record.server_address = art.summary.server_resolved_address;
  art.record.chunk_size_used = art.summary.chunk_size_used_bytes;
  art.record.pretest_final_chunk_size =
      art.summary.pretest_final_chunk_size_bytes;

  if (std::filesystem::exists(dir / "stats.json")) {
    art.raw_stats = load_json_file(dir / "stats.json");
    art.stats = stats_from_json(art.raw_stats);
    art.record.stats = art.stats;
  } else {
    art.stats_missing = true;
  }

  art.raw_trace = load_json_file(dir / "traceroute.json");
  art.trace = trace_from_json(art.raw_trace);
  return art;
}

}  // namespace nettest
