"""CLI surface: configs, exit codes, output determinism, report."""

import json

import pytest

from tiersim.cli import main
from tiersim.config import (
    ConfigError,
    load_run_config,
    parse_flops,
    parse_rate,
    parse_size,
    parse_time,
)

SMALL_SYSTEM = {
    "fast": {"capacity": "4 MiB", "read_bandwidth": "80 GB/s",
             "write_bandwidth": "80 GB/s"},
    "slow": {"capacity": "1 GiB", "read_bandwidth": "10 GB/s",
             "write_bandwidth": "8 GB/s", "access_latency": "10 us"},
    "page_size": "4 KiB",
    "threads": 4,
    "per_core_compute": "35.2 GFLOP/s",
}


def write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2))
    return str(path)


@pytest.fixture
def run_cfg(tmp_path):
    cfg = {
        "system": SMALL_SYSTEM,
        "workload": {
            "family": "polynomial",
            "parameters": {"elements": 262144, "degree": 16,
                           "streams": "one", "threads": 4, "chunk": 32768},
        },
        "policy": {"name": "sequential", "k": 8},
        "mode": {"tiered": True, "numa": False, "warmup": True},
        "seed": 1,
    }
    return write_json(tmp_path / "run.json", cfg)


def test_unit_parsing():
    assert parse_size("256 GB", "k") == 256 * 10**9
    assert parse_size("4 KiB", "k") == 4096
    assert parse_size(8192, "k") == 8192
    assert parse_rate("80 GB/s", "k") == 80 * 10**9
    assert parse_time("10 us", "k") == pytest.approx(10e-6)
    assert parse_flops("35.2 GFLOP/s", "k") == 35_200_000_000
    with pytest.raises(ConfigError):
        parse_size("80 furlongs", "k")


def test_run_minimal_config(tmp_path, run_cfg, capsys):
    out = tmp_path / "results"
    assert main(["run", run_cfg, "--out", str(out)]) == 0
    csv_text = (out / "run_result.csv").read_text()
    assert csv_text.startswith("# tiersim-run-v1\n")
    lines = csv_text.strip().splitlines()
    assert lines[1] == "thread,time_s"
    assert lines[-1].startswith("total,")
    assert len(lines) == 2 + 4 + 1  # schema, header, 4 threads, total
    summary = json.loads((out / "run_summary.json").read_text())
    assert summary["demand_faults"] == 0  # fits in cache, warmed
    assert summary["workload"] == "polynomial"


def test_run_outputs_are_deterministic(tmp_path, run_cfg):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", run_cfg, "--out", str(out1)]) == 0
    assert main(["run", run_cfg, "--out", str(out2)]) == 0
    assert (out1 / "run_result.csv").read_bytes() == \
        (out2 / "run_result.csv").read_bytes()
    assert (out1 / "run_summary.json").read_bytes() == \
        (out2 / "run_summary.json").read_bytes()


def test_run_unknown_key_is_config_error(tmp_path, capsys):
    cfg = {
        "system": dict(SMALL_SYSTEM, turbo=True),
        "workload": {"family": "polynomial",
                     "parameters": {"elements": 4096, "degree": 0}},
    }
    path = write_json(tmp_path / "bad.json", cfg)
    assert main(["run", path, "--out", str(tmp_path / "o")]) == 2
    assert "system.turbo" in capsys.readouterr().err


def test_run_footprint_over_slow_capacity_is_runtime_error(tmp_path, capsys):
    cfg = {
        "system": SMALL_SYSTEM,
        "workload": {"family": "polynomial",
                     "parameters": {"elements": 2 * 2**30 // 8, "degree": 0,
                                    "streams": "one", "threads": 1,
                                    "chunk": 65536}},
    }
    path = write_json(tmp_path / "big.json", cfg)
    assert main(["run", path, "--out", str(tmp_path / "o")]) == 3
    assert "capacity" in capsys.readouterr().err


def test_sweep_and_report(tmp_path, capsys):
    cfg = {
        "system": SMALL_SYSTEM,
        "sweep": {"family": "polynomial",
                  "footprint_ratios": [0.5, 2.0],
                  "ai_params": [0, 64],
                  "threads": 4},
        "policy": {"name": "sequential", "k": 8},
        "mode": {"numa": False, "warmup": False},
    }
    path = write_json(tmp_path / "sweep.json", cfg)
    out = tmp_path / "sw"
    assert main(["sweep", path, "--out", str(out), "--jobs", "1"]) == 0
    csv_path = out / "sweep.csv"
    assert csv_path.exists()
    features = json.loads((out / "sweep_features.json").read_text())
    assert features["floor"] == 0.125

    bands = write_json(tmp_path / "bands.json", {
        "floor": [0.115, 0.135],
        "knee_ai": [5.0, 10.0],
        "workloads": {"polynomial": [0.9, 1.1]},
    })
    capsys.readouterr()
    assert main(["report", str(csv_path), "--bands", bands]) == 0
    text = capsys.readouterr().out
    assert "floor: 0.125" in text
    assert "band floor [0.115, 0.135]: PASS" in text
    assert "band knee_ai [5, 10]: FAIL" in text
    assert "efficiency[polynomial]" in text

    # identical re-run produces identical bytes
    out2 = tmp_path / "sw2"
    assert main(["sweep", path, "--out", str(out2), "--jobs", "2"]) == 0
    assert csv_path.read_bytes() == (out2 / "sweep.csv").read_bytes()


def test_report_rejects_bad_csv(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["report", str(empty)]) == 2
    wrong = tmp_path / "wrong.csv"
    wrong.write_text("# other-schema\n")
    assert main(["report", str(wrong)]) == 2


def test_numa_mode_requires_numa_spec(tmp_path, capsys):
    cfg = {
        "system": SMALL_SYSTEM,
        "workload": {"family": "stream", "parameters": {"kernel": "copy",
                                                        "elements": 4096}},
        "mode": {"numa": True},
    }
    path = write_json(tmp_path / "n.json", cfg)
    assert main(["run", path, "--out", str(tmp_path / "o")]) == 2
    assert "system.numa" in capsys.readouterr().err


def test_config_round_trip_equivalence(tmp_path, run_cfg):
    from tiersim.config import dump_run_config

    cfg = load_run_config(run_cfg)
    assert load_run_config(run_cfg) == cfg
    rewritten = write_json(tmp_path / "round.json", dump_run_config(cfg))
    assert load_run_config(rewritten) == cfg


def test_config_round_trip_with_numa(tmp_path):
    from tiersim.config import dump_run_config

    cfg_json = {
        "system": dict(SMALL_SYSTEM,
                       numa={"cross_link_bandwidth": "10 GB/s",
                             "write_placement": "local"}),
        "workload": {"family": "stream",
                     "parameters": {"kernel": "copy", "elements": 8192,
                                    "threads": 2}},
        "mode": {"numa": True},
    }
    path = write_json(tmp_path / "n.json", cfg_json)
    cfg = load_run_config(path)
    assert cfg.system.numa is not None
    rewritten = write_json(tmp_path / "n2.json", dump_run_config(cfg))
    assert load_run_config(rewritten) == cfg
