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

#include "nettest/batch.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "nettest/results.hpp"

namespace nettest {

using nlohmann::json;

namespace {

void apply_axis(MeasurementConfig& config, const std::string& name,
                const json& value) {
  if (name == "flows") {
    config.flows_dl = value.get<int>();
    config.flows_ul = value.get<int>();
  } else if (name == "flows_dl") {
    config.flows_dl = value.get<int>();
  } else if (name == "flows_ul") {
    config.flows_ul = value.get<int>();
  } else if (name == "duration_dl_s") {
    config.duration_dl_s = value.get<double>();
  } else if (name == "duration_ul_s") {
    config.duration_ul_s = value.get<double>();
  } else if (name == "duration_pretest_s") {
    config.duration_pretest_s = value.get<double>();
  } else if (name == "ping_count") {
    config.ping_count = value.get<int>();
  } else if (name == "chunk_size") {
    config.chunk_size = value.get<uint64_t>();
  } else if (name == "stats_interval_ms") {
    config.stats_interval_ns = value.get<int64_t>() * kNanosPerMilli;
  } else if (name == "server_host" || name == "server") {
    config.server_host = value.get<std::string>();
  } else if (name == "server_port") {
    config.server_port = value.get<uint16_t>();
  } else {
    throw ConfigError("unknown batch axis: " + name);
  }
}

std::string value_token(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

}  // namespace

void BatchSpec::validate() const {
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (inter_run_gap_s < 0) throw ConfigError("inter_run_gap must be >= 0");
  for (const auto& [name, values] : axes) {
    if (values.empty()) {
      throw ConfigError("axis '" + name + "' has no values");
    }
    MeasurementConfig probe = base;
    for (const auto& v : values) apply_axis(probe, name, v);
  }
}

size_t BatchSpec::total_runs() const {
  size_t n = static_cast<size_t>(repetitions);
  for (const auto& [name, values] : axes) n *= values.size();
  return n;
}

std::vector<MeasurementConfig> expand(const BatchSpec& spec) {
  spec.validate();
  std::vector<MeasurementConfig> configs;
  configs.reserve(spec.total_runs());

  // Odometer over the axes (map order; last axis spins fastest).
  std::vector<std::pair<std::string, const std::vector<json>*>> axis_list;
  for (const auto& [name, values] : spec.axes) {
    axis_list.emplace_back(name, &values);
  }
  std::vector<size_t> idx(axis_list.size(), 0);

  for (int rep = 0; rep < spec.repetitions; ++rep) {
    std::fill(idx.begin(), idx.end(), 0);
    for (;;) {
      MeasurementConfig c = spec.base;
      std::string id = spec.batch_id;
      for (size_t a = 0; a < axis_list.size(); ++a) {
        const auto& [name, values] = axis_list[a];
        apply_axis(c, name, (*values)[idx[a]]);
        id += "-" + name + "=" + value_token((*values)[idx[a]]);
      }
      id += "-rep" + std::to_string(rep);
      c.run_id = id;
      configs.push_back(std::move(c));

      // Advance the odometer.
      bool done = true;
      for (size_t a = axis_list.size(); a-- > 0;) {
        if (++idx[a] < axis_list[a].second->size()) {
          done = false;
          break;
        }
        idx[a] = 0;
      }
      if (done) break;
    }
  }

  if (spec.order == BatchSpec::Order::Shuffled) {
    std::mt19937_64 rng(spec.shuffle_seed);
    std::shuffle(configs.begin(), configs.end(), rng);
  }
  return configs;
}

BatchReport run_batch(const BatchSpec& spec,
                      const std::filesystem::path& out_root,
                      const MeasurementExecutor& executor, Clock& clock,
                      const TraceResult& trace) {
  std::filesystem::create_directories(out_root);
  auto configs = expand(spec);
  int64_t gap_ns = static_cast<int64_t>(spec.inter_run_gap_s * kNanosPerSecond);

  BatchReport report;
  bool first = true;
  for (const auto& config : configs) {
    if (spec.byte_budget && report.total_bytes_consumed >= *spec.byte_budget) {
      report.budget_exhausted = true;
      break;
    }
    if (!first && gap_ns > 0) clock.sleep_for(gap_ns);
    first = false;

    BatchReport::RunOutcome outcome;
    outcome.run_id = config.run_id;
    outcome.start_ns = clock.now_ns();
    std::filesystem::path run_dir = out_root / config.run_id;
    try {
      RunRecord record = executor(config);
      outcome.status = record.status;
      outcome.bytes_consumed =
          record.total_downloaded_bytes() + record.total_uploaded_bytes();

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
      write_run(record, dl_rate, ul_rate, trace, run_dir);
      outcome.out_dir = run_dir.string();
    } catch (const std::exception&) {
      outcome.status = RunStatus::Aborted;
    }
    outcome.end_ns = clock.now_ns();
    report.total_bytes_consumed += outcome.bytes_consumed;
    report.runs.push_back(std::move(outcome));
  }
  return report;
}

BatchSpec parse_batch_spec(const json& j) {
  BatchSpec spec;
  spec.batch_id = j.value("batch_id", std::string("batch"));
  if (j.contains("base")) {
    const json& b = j.at("base");
    if (b.contains("server_host")) {
      spec.base.server_host = b.at("server_host").get<std::string>();
    }
    if (b.contains("server_port")) {
      spec.base.server_port = b.at("server_port").get<uint16_t>();
    }
    if (b.contains("flows_dl")) spec.base.flows_dl = b.at("flows_dl").get<int>();
    if (b.contains("flows_ul")) spec.base.flows_ul = b.at("flows_ul").get<int>();
    if (b.contains("flows")) {
      spec.base.flows_dl = b.at("flows").get<int>();
      spec.base.flows_ul = b.at("flows").get<int>();
    }
    if (b.contains("duration_dl_s")) {
      spec.base.duration_dl_s = b.at("duration_dl_s").get<double>();
    }
    if (b.contains("duration_ul_s")) {
      spec.base.duration_ul_s = b.at("duration_ul_s").get<double>();
    }
    if (b.contains("duration_pretest_s")) {
      spec.base.duration_pretest_s = b.at("duration_pretest_s").get<double>();
    }
    if (b.contains("ping_count")) {
      spec.base.ping_count = b.at("ping_count").get<int>();
    }
    if (b.contains("chunk_size")) {
      spec.base.chunk_size = b.at("chunk_size").get<uint64_t>();
    }
    if (b.contains("stats_interval_ms")) {
      spec.base.stats_interval_ns =
          b.at("stats_interval_ms").get<int64_t>() * kNanosPerMilli;
    }
  }
  if (j.contains("axes")) {
    for (const auto& [name, values] : j.at("axes").items()) {
      spec.axes[name] = values.get<std::vector<json>>();
    }
  }
  spec.repetitions = j.value("repetitions", 1);
  spec.inter_run_gap_s = j.value("inter_run_gap_s", 0.0);
  std::string order = j.value("order", std::string("grid"));
  if (order == "grid") {
    spec.order = BatchSpec::Order::Grid;
  } else if (order == "shuffled") {
    spec.order = BatchSpec::Order::Shuffled;
    spec.shuffle_seed = j.value("shuffle_seed", 0);
  } else {
    throw ConfigError("unknown batch order: " + order);
  }
  if (j.contains("byte_budget")) {
    spec.byte_budget = j.at("byte_budget").get<int64_t>();
  }
  spec.validate();
  return spec;
}

BatchSpec load_batch_spec(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open batch spec " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(file.string() + ": " + e.what());
  }
  return parse_batch_spec(j);
}

}  // namespace nettest
