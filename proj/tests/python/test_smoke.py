# Copyright 2026 The Nettest Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import math
import os
import pathlib

import pytest

import nettest


def make_series(flow_id, samples):
    s = nettest.FlowSeries()
    s.flow_id = flow_id
    s.samples = [nettest.FlowSample(t, b) for t, b in samples]
    return s


def test_message_round_trip():
    msg = nettest.parse_message("GETTIME 15000000000 32768\n")
    assert msg.kind == nettest.MessageKind.GetTime
    assert msg.args == [15_000_000_000, 32768]
    assert nettest.serialize_message(msg) == "GETTIME 15000000000 32768\n"


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        nettest.parse_message("GETTIME zero\n")


def test_compute_rate_worked_example():
    series = [
        make_series(1, [(2_000_000_000, 100), (4_000_000_000, 200)]),
        make_series(2, [(3_000_000_000, 300)]),
    ]
    result = nettest.compute_rate(series)
    assert result.t_star_ns == 3_000_000_000
    assert result.per_flow_bytes == {1: 150.0, 2: 300.0}
    assert result.rate_bytes_per_s == 150.0


def test_resample_curve_grid():
    series = [make_series(1, [(1_000_000_000, 1000)])]
    curve = nettest.resample_curve(series, horizon_ns=1_000_000_000)
    assert len(curve) == 100
    assert curve.grid_step_ns == nettest.DEFAULT_GRID_STEP_NS
    assert math.isclose(curve.rate_bytes_per_s[-1], 1000.0)


def test_analysis_helpers():
    curves = []
    for scale in (1.0, 2.0, 3.0):
        c = nettest.RateCurve()
        c.grid_step_ns = 10_000_000
        c.t_star_ns = [(k + 1) * 10_000_000 for k in range(10)]
        c.rate_bytes_per_s = [scale * 100.0] * 10
        curves.append(c)
    coll = nettest.CurveCollection()
    coll.curves = curves
    med = nettest.median_curve(coll)
    assert med.rate_bytes_per_s == [200.0] * 10

    fractions = nettest.saturation_fractions(
        med, med.t_star_ns[-1], [med.t_star_ns[0]]
    )
    assert fractions == [100.0]

    dist = nettest.curve_distance(curves[0], curves[1], 100.0)
    assert math.isclose(dist.percent, 100.0)
    assert nettest.curve_median_value(curves[2]) == 300.0


def test_expand_batch_campaign_grid():
    spec = {
        "batch_id": "c1",
        "base": {"server_host": "192.0.2.10", "server_port": 5000},
        "axes": {"flows": [1, 3, 5, 7]},
        "repetitions": 2,
    }
    configs = nettest.expand_batch(json.dumps(spec))
    assert len(configs) == 8
    assert configs[0]["run_id"] == "c1-flows=1-rep0"
    assert [c["flows_dl"] for c in configs] == [1, 3, 5, 7, 1, 3, 5, 7]
    assert configs[4]["run_id"] == "c1-flows=1-rep1"


def test_load_run_golden_fixture():
    fixtures = os.environ.get("NETTEST_FIXTURES")
    if not fixtures:
        pytest.skip("NETTEST_FIXTURES not set")
    run = nettest.load_run(pathlib.Path(fixtures) / "golden_run")
    assert run["summary"]["test_id"] == "golden-run"
    assert len(run["dl_series"]) == 2
    rate = nettest.compute_rate(run["dl_series"])
    assert rate.rate_bytes_per_s > 0
