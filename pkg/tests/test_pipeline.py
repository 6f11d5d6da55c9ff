import json

import numpy as np
import pytest

from icaprep.errors import ConfigurationError
from icaprep.io import report_json, save_signals
from icaprep.matrices import SignalMatrix
from icaprep.oracle import generate_bss
from icaprep.pipeline import RunConfig, cmd_run, cmd_sweep, format_summary, sweep_csv

SEEDS = range(6)


@pytest.fixture(scope="module")
def default_report():
    return cmd_run(RunConfig())


def mean_over_seeds(axis, value, key):
    return np.mean([cmd_sweep(RunConfig(seed=s), axis, [value])[0].accuracy[key] for s in SEEDS])


def test_default_period_and_throughput(default_report):
    r = default_report
    assert r.ledger.period == 6144
    assert r.throughput_matrices_per_sec == 250e6 / 6144
    assert r.to_dict()["throughput"]["display"] == "40.7k"
    assert r.to_dict()["throughput"]["exact"] == "1953125/48"


def test_default_latency(default_report):
    lat = default_report.ledger.latency
    assert lat == 10240 + 4520 and abs(lat - 15237) <= 0.05 * 15237


def test_default_passes(default_report):
    assert default_report.passed, default_report.checks
    assert default_report.accuracy["saturation_count"] == 0


def test_report_shape(default_report):
    d = default_report.to_dict()
    assert d["schema"] == 1 and d["config"]["N"] == 8
    assert d["ledger"]["bottleneck_period"] == 6144
    assert all(isinstance(d["ledger"][k], int) for k in ("latency", "period", "prep_latency", "evd_latency"))
    json.loads(report_json(d))


def test_report_deterministic():
    a = report_json(cmd_run(RunConfig(seed=3)).to_dict())
    b = report_json(cmd_run(RunConfig(seed=3)).to_dict())
    assert a == b


def test_small_config():
    r = cmd_run(RunConfig(N=4, M=64))
    assert r.passed and r.ledger.period == 384
    assert r.bottleneck_period == r.evd_ledger.period


def test_summary_mentions_latency(default_report):
    text = format_summary(default_report)
    assert "14760" in text and "6144" in text and "PASS" in text


def test_sweep_m_periods():
    reports = cmd_sweep(RunConfig(), "M", [64, 128, 256, 512])
    assert [r.ledger.period for r in reports] == [768, 1536, 3072, 6144]
    csv = sweep_csv("M", reports).splitlines()
    assert csv[0].startswith("M,latency,period") and csv[1].split(",")[2] == "768"


def test_sweep_parallel_matches_serial():
    serial = cmd_sweep(RunConfig(N=4, M=64), "seed", [1, 2])
    par = cmd_sweep(RunConfig(N=4, M=64), "seed", [1, 2], workers=2)
    assert [report_json(r.to_dict()) for r in serial] == [report_json(r.to_dict()) for r in par]


def test_sweep_frac_bits_non_increasing():
    errs = [mean_over_seeds("frac_bits", f, "eigenvalue_max_err") for f in (6, 7, 8)]
    assert errs[0] >= errs[1] >= errs[2]


def test_sweep_cordic_iters_plateau():
    floor = 2.0  # LSB: rounding of D and E to the working format
    res = [mean_over_seeds("cordic_iters", k, "reconstruction_max_err_lsb") for k in range(6, 13)]
    assert res[0] > floor
    assert all(b <= a or b <= floor for a, b in zip(res, res[1:]))


def test_bad_sweep_axis():
    with pytest.raises(ConfigurationError):
        cmd_sweep(RunConfig(), "colour", [1])


@pytest.mark.parametrize("kw", [dict(N=7), dict(M=100), dict(M=4), dict(frac_bits=10), dict(clock_hz=0.0),
                                dict(scenario_kind="x"), dict(evd_sweeps=0)])
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        RunConfig(**kw)


def test_file_input(tmp_path):
    Y = SignalMatrix.from_complex(generate_bss(4, 64, 9).Y)
    path = tmp_path / "y.raw"
    save_signals(Y, path)
    r = cmd_run(RunConfig(N=4, M=64, input_path=str(path)))
    assert r.passed
    with pytest.raises(ConfigurationError):
        cmd_run(RunConfig(N=8, M=64, input_path=str(path)))
