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

#include <csignal>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nettest/analysis.hpp"
#include "nettest/batch.hpp"
#include "nettest/client.hpp"
#include "nettest/path_probe.hpp"
#include "nettest/results.hpp"
#include "nettest/server.hpp"

namespace {

using namespace nettest;

Server* g_server = nullptr;

void handle_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int cmd_serve(const ServerConfig& config) {
  Server server(config);
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  server.start();
  std::cerr << "listening on " << config.listen_host << ":" << server.port()
            << "\n";
  server.serve();
  return 0;
}

TraceResult run_trace(const MeasurementConfig& config,
                      const std::string& asn_db_path) {
  TraceResult trace = trace_path(config.server_host);
  if (!asn_db_path.empty()) {
    AsnDatabase db = AsnDatabase::load(asn_db_path);
    trace.hops = annotate_asn(std::move(trace.hops), db);
  }
  return trace;
}

int cmd_measure(const MeasurementConfig& config, const std::string& out_dir,
                const std::string& asn_db_path, bool do_trace) {
  TraceResult trace;
  trace.target = config.server_host;
  trace.status = "skipped";
  if (do_trace) {
    try {
      trace = run_trace(config, asn_db_path);
    } catch (const Error& e) {
      trace.status = e.what();
    }
  }

  RunRecord record = run_measurement(config);

  std::optional<RateResult> dl_rate;
  std::optional<RateResult> ul_rate;
  try {
    dl_rate = compute_rate(record.dl_series);
  } catch (const Error&) {
  }
  try {
    ul_rate = compute_rate(record.ul_series);
  } catch (const Error&) {
  }
  write_run(record, dl_rate, ul_rate, trace, out_dir);

  std::cout << "status: " << to_string(record.status) << "\n";
  if (dl_rate) {
    std::cout << "download: " << dl_rate->rate_bits_per_s() / 1e6
              << " Mbit/s over " << dl_rate->flows_used << " flows\n";
  }
  if (ul_rate) {
    std::cout << "upload: " << ul_rate->rate_bits_per_s() / 1e6
              << " Mbit/s over " << ul_rate->flows_used << " flows\n";
  }
  if (!record.ping.rtts_ns.empty()) {
    std::cout << "ping median: " << record.ping.median_ns / 1e6 << " ms ("
              << record.ping.lost << " lost)\n";
  }
  std::cout << "results in " << out_dir << "\n";
  return record.status == RunStatus::Aborted ? 1 : 0;
}

int cmd_batch(const std::string& spec_path, const std::string& out_root,
              const std::string& asn_db_path, bool do_trace) {
  BatchSpec spec = load_batch_spec(spec_path);
  RealClock clock;
  TraceResult trace;
  trace.target = spec.base.server_host;
  trace.status = "skipped";
  if (do_trace) {
    try {
      trace = run_trace(spec.base, asn_db_path);
    } catch (const Error& e) {
      trace.status = e.what();
    }
  }
  MeasurementExecutor executor = [](const MeasurementConfig& config) {
    return run_measurement(config);
  };
  BatchReport report = run_batch(spec, out_root, executor, clock, trace);
  for (const auto& run : report.runs) {
    std::cout << run.run_id << ": " << to_string(run.status) << " ("
              << run.bytes_consumed << " bytes)\n";
  }
  std::cout << report.runs.size() << "/" << spec.total_runs() << " runs, "
            << report.total_bytes_consumed << " bytes total";
  if (report.budget_exhausted) std::cout << " (byte budget exhausted)";
  std::cout << "\n";
  return 0;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string group_key_for(const MeasurementConfig& config,
                          const std::vector<std::string>& keys) {
  std::string key;
  for (const auto& k : keys) {
    if (!key.empty()) key += "|";
    key += k + "=";
    if (k == "flows" || k == "flows_dl") {
      key += std::to_string(config.flows_dl);
    } else if (k == "flows_ul") {
      key += std::to_string(config.flows_ul);
    } else if (k == "duration_dl_s") {
      key += std::to_string(config.duration_dl_s);
    } else if (k == "duration_ul_s") {
      key += std::to_string(config.duration_ul_s);
    } else if (k == "chunk_size") {
      key += std::to_string(config.chunk_size);
    } else if (k == "server_host" || k == "server") {
      key += config.server_host;
    } else {
      throw ConfigError("unknown group-by key: " + k);
    }
  }
  return key.empty() ? "all" : key;
}

int64_t parse_utc_ns(const std::string& stamp) {
  std::tm tm{};
  std::istringstream ss(stamp);
  ss >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  if (ss.fail()) throw SchemaError("bad UTC timestamp: " + stamp);
  return static_cast<int64_t>(timegm(&tm)) * kNanosPerSecond;
}

int cmd_analyze(const std::vector<std::string>& in_dirs,
                const std::string& group_by, int grid_ms, double horizon_s,
                double saturation_s, const std::string& checkpoints_arg,
                const std::string& stage, const std::string& out_dir,
                int bucket_minutes) {
  if (stage != "dl" && stage != "ul") {
    throw ConfigError("stage must be dl or ul");
  }
  std::vector<std::string> keys = split(group_by, ',');
  int64_t grid_ns = static_cast<int64_t>(grid_ms) * kNanosPerMilli;
  int64_t horizon_ns = static_cast<int64_t>(horizon_s * kNanosPerSecond);
  int64_t saturation_ns = static_cast<int64_t>(saturation_s * kNanosPerSecond);
  std::vector<int64_t> checkpoints_ns;
  for (const auto& c : split(checkpoints_arg, ',')) {
    checkpoints_ns.push_back(
        static_cast<int64_t>(std::stod(c) * kNanosPerSecond));
  }

  std::map<std::string, CurveCollection> groups;
  std::vector<TimedRate> timed;
  for (const auto& dir : in_dirs) {
    RunArtifacts art = read_run(dir);
    const auto& series =
        stage == "dl" ? art.record.dl_series : art.record.ul_series;
    if (series.empty()) continue;
    std::string key = group_key_for(art.record.config, keys);
    RateCurve curve;
    try {
      curve = resample_curve(series, grid_ns, horizon_ns);
    } catch (const Error& e) {
      std::cerr << dir << ": skipped (" << e.what() << ")\n";
      continue;
    }
    auto& group = groups[key];
    group.group_key = key;
    if (curve.truncated) {
      ++group.excluded_short_curves;
    } else {
      group.curves.push_back(std::move(curve));
    }
    double rate = stage == "dl"
                      ? art.summary.dl_rate_bps.value_or(0.0)
                      : art.summary.ul_rate_bps.value_or(0.0);
    if (rate > 0 && !art.summary.start_time_utc.empty()) {
      timed.push_back({parse_utc_ns(art.summary.start_time_utc), rate});
    }
  }
  if (groups.empty()) throw ConfigError("no usable runs found");

  std::filesystem::create_directories(out_dir);
  std::filesystem::path out(out_dir);

  std::map<std::string, RateCurve> medians;
  {
    std::ofstream f(out / "median_curves.csv");
    f << "group,t_s,rate_bps\n";
    for (auto& [key, group] : groups) {
      if (group.curves.empty()) {
        std::cerr << key << ": no full-length curves, skipped\n";
        continue;
      }
      RateCurve median = median_curve(group);
      for (size_t i = 0; i < median.size(); ++i) {
        f << key << "," << median.t_star_ns[i] / 1e9 << ","
          << median.rate_bytes_per_s[i] * 8.0 << "\n";
      }
      medians[key] = std::move(median);
    }
  }
  {
    std::ofstream f(out / "saturation.csv");
    f << "group,checkpoint_s,percent_of_final\n";
    for (const auto& [key, median] : medians) {
      auto fractions =
          saturation_fractions(median, saturation_ns, checkpoints_ns);
      for (size_t i = 0; i < fractions.size(); ++i) {
        f << key << "," << checkpoints_ns[i] / 1e9 << "," << fractions[i]
          << "\n";
      }
    }
  }
  {
    std::ofstream f(out / "distances.csv");
    f << "group_a,group_b,distance_percent,distance_raw\n";
    for (auto a = medians.begin(); a != medians.end(); ++a) {
      for (auto b = std::next(a); b != medians.end(); ++b) {
        double norm = curve_median_value(a->second);
        CurveDistance d = curve_distance(a->second, b->second, norm);
        f << a->first << "," << b->first << "," << d.percent << "," << d.raw
          << "\n";
      }
    }
  }
  if (!timed.empty()) {
    std::ofstream f(out / "timeofday.csv");
    f << "relative_hour,rate_bps\n";
    std::optional<int> bucket;
    if (bucket_minutes > 0) bucket = bucket_minutes;
    for (const auto& row : timeofday_export(timed, bucket)) {
      f << row.relative_hour << "," << row.rate_bps << "\n";
    }
  }
  std::cout << "analysis written to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TCP broadband measurement toolkit"};
  app.require_subcommand(1);

  // serve
  ServerConfig server_config;
  auto* serve = app.add_subcommand("serve", "run the measurement server");
  serve->add_option("--listen", server_config.listen_host, "bind address");
  serve->add_option("--port", server_config.listen_port, "listen port");
  serve->add_option("--max-flows", server_config.max_concurrent_flows,
                    "connection cap");
  serve->add_option("--seed", server_config.chunk_seed, "chunk payload seed");
  double idle_timeout_s = 45.0;
  serve->add_option("--idle-timeout", idle_timeout_s,
                    "per-connection idle timeout (s)");

  // measure
  MeasurementConfig config;
  std::string out_dir = "results";
  std::string asn_db_path;
  bool no_trace = false;
  int flows_both = 0;
  auto* measure = app.add_subcommand("measure", "run one measurement");
  measure->add_option("--server", config.server_host, "server host");
  measure->add_option("--port", config.server_port, "server port");
  measure->add_option("--flows", flows_both,
                      "parallel flows for both directions");
  measure->add_option("--flows-dl", config.flows_dl, "download flows");
  measure->add_option("--flows-ul", config.flows_ul, "upload flows");
  measure->add_option("--duration", config.duration_dl_s,
                      "download duration (s)");
  measure->add_option("--duration-ul", config.duration_ul_s,
                      "upload duration (s)");
  measure->add_option("--pretest", config.duration_pretest_s,
                      "pre-test duration (s)");
  measure->add_option("--pings", config.ping_count, "ping exchanges");
  measure->add_option("--chunk", config.chunk_size,
                      "chunk size in bytes (0 = from pre-test)");
  int64_t stats_interval_ms = 100;
  measure->add_option("--stats-interval", stats_interval_ms,
                      "socket stats sampling interval (ms)");
  measure->add_option("--run-id", config.run_id, "identifier for this run");
  measure->add_option("--out", out_dir, "output directory");
  measure->add_option("--asn-db", asn_db_path,
                      "IPv4 prefix-to-ASN table for hop annotation");
  measure->add_flag("--no-trace", no_trace, "skip the path probe");

  // batch
  std::string spec_path;
  std::string batch_out = "batch-results";
  auto* batch = app.add_subcommand("batch", "run a configuration grid");
  batch->add_option("--spec", spec_path, "batch spec (JSON)")->required();
  batch->add_option("--out", batch_out, "output root directory");
  batch->add_option("--asn-db", asn_db_path,
                    "IPv4 prefix-to-ASN table for hop annotation");
  batch->add_flag("--no-trace", no_trace, "skip the path probe");

  // analyze
  std::vector<std::string> in_dirs;
  std::string group_by = "flows";
  int grid_ms = 10;
  double horizon_s = 15.0;
  double saturation_s = 15.0;
  std::string checkpoints = "2,4,6,8,10";
  std::string stage = "dl";
  std::string analyze_out = "analysis";
  int bucket_minutes = 0;
  auto* analyze = app.add_subcommand("analyze", "aggregate finished runs");
  analyze->add_option("--in", in_dirs, "run directories")->required();
  analyze->add_option("--group-by", group_by,
                      "comma-separated config keys to group on");
  analyze->add_option("--grid-ms", grid_ms, "resampling grid step (ms)");
  analyze->add_option("--horizon", horizon_s, "curve horizon (s)");
  analyze->add_option("--saturation", saturation_s,
                      "reference time for saturation fractions (s)");
  analyze->add_option("--checkpoints", checkpoints,
                      "comma-separated checkpoint times (s)");
  analyze->add_option("--stage", stage, "dl or ul");
  analyze->add_option("--out", analyze_out, "output directory");
  analyze->add_option("--bucket-minutes", bucket_minutes,
                      "average time-of-day rates into buckets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      server_config.idle_timeout_ns =
          static_cast<int64_t>(idle_timeout_s * kNanosPerSecond);
      server_config.validate();
      return cmd_serve(server_config);
    }
    if (*measure) {
      if (flows_both > 0) {
        config.flows_dl = flows_both;
        config.flows_ul = flows_both;
      }
      config.stats_interval_ns = stats_interval_ms * kNanosPerMilli;
      config.validate();
      return cmd_measure(config, out_dir, asn_db_path, !no_trace);
    }
    if (*batch) {
      return cmd_batch(spec_path, batch_out, asn_db_path, !no_trace);
    }
    if (*analyze) {
      return cmd_analyze(in_dirs, group_by, grid_ms, horizon_s, saturation_s,
                         checkpoints, stage, analyze_out, bucket_minutes);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
