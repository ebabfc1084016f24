"""
Test suite for the command-line interface.
"""

import json
import sys
import tempfile
from pathlib import Path

import numpy as np

from rangewalk.cli import main, parse_kernel
from rangewalk.harness import RESULTS_FILE, read_results
from rangewalk.regvar import KernelSpec
from rangewalk.walks import WalkSpec, calibrate_sigma_hat


def run_cli(monkeypatch, *args) -> int:
    monkeypatch.setattr(sys, "argv", ["rangewalk", *args])
    return main()


def test_parse_kernel():
    """Kernel arguments"""
    print("Testing kernel parsing...")

    assert parse_kernel("2,0.25") == KernelSpec(L=2.0, delta=0.25)

    with tempfile.TemporaryDirectory() as temp_dir:
        filename = Path(temp_dir) / "kernel.txt"
        np.savetxt(filename, [[0.0, 1.0], [1.0, 0.5], [2.0, 0.25]])
        k = parse_kernel(kernel_file=str(filename), chi=-1.0)
        assert k.tabulated and k.chi_m == -1.0

        for kwargs in (dict(text="1"), dict(), dict(kernel_file=str(filename))):
            try:
                parse_kernel(**kwargs)
                assert False, f"Should have raised ValueError for {kwargs}"
            except ValueError:
                pass

    print("✓ Kernel parsing")


def test_no_command(monkeypatch, capsys):
    """Without a command the help is printed"""
    print("Testing empty command line...")

    assert run_cli(monkeypatch) == 1
    assert "Available commands" in capsys.readouterr().out

    print("✓ Empty command line")


def test_young_selftest(monkeypatch, capsys):
    """The Young oracles pass"""
    print("Testing young-selftest...")

    assert run_cli(monkeypatch, "young-selftest") == 0
    out = capsys.readouterr().out
    assert "Young integral self-test" in out
    assert "8/8 checks passed" in out

    print("✓ young-selftest")


def test_simulate_and_report(monkeypatch, capsys):
    """simulate writes replicas, report summarises them"""
    print("Testing simulate and report...")

    monkeypatch.delenv("RANGEWALK_OUTPUT_DIR", raising=False)
    monkeypatch.delenv("RANGEWALK_THREADS", raising=False)
    with tempfile.TemporaryDirectory() as temp_dir:
        exports = Path(temp_dir) / "paths"
        code = run_cli(monkeypatch, "simulate", "--law", "LAZY_SRW", "--d", "2", "--n", "64",
                       "--replicas", "4", "--functionals", "R,Rcal,I", "--output-dir", temp_dir,
                       "--export-paths", str(exports), "--export-count", "2")
        assert code == 0
        results = read_results(Path(temp_dir) / RESULTS_FILE)
        assert len(results) == 4 and all(r.ok for r in results)
        assert sorted(p.name for p in exports.iterdir()) == ["path_00000.bin", "path_00001.bin"]

        dat = Path(temp_dir) / "R.dat"
        code = run_cli(monkeypatch, "report", str(Path(temp_dir) / RESULTS_FILE), "--key", "Rcal",
                       "--dat", str(dat))
        assert code == 0
        table = np.loadtxt(Path(temp_dir) / "replicas.Rcal.csv", delimiter=",", skiprows=1)
        assert table.shape == (17, 8)
        assert np.allclose(table[:, 0], np.arange(17) / 16)
        assert dat.exists()

        assert run_cli(monkeypatch, "report", str(Path(temp_dir) / RESULTS_FILE), "--key", "E") == 1
        assert run_cli(monkeypatch, "report", str(Path(temp_dir) / "missing.jsonl")) == 1

        out = capsys.readouterr().out
        assert "Simulating 4 replicas" in out
        assert "Error writing report" in out

    print("✓ Simulate and report")


def test_calibrated_walk(monkeypatch, capsys):
    """Pareto walks without --sigma-hat are calibrated and recorded in the config"""
    print("Testing calibrated walks...")

    monkeypatch.delenv("RANGEWALK_OUTPUT_DIR", raising=False)
    monkeypatch.delenv("RANGEWALK_THREADS", raising=False)
    with tempfile.TemporaryDirectory() as temp_dir:
        code = run_cli(monkeypatch, "simulate", "--law", "DISCRETE_PARETO", "--d", "1", "--beta", "1.5",
                       "--n", "64", "--replicas", "2", "--calibration-n", "500",
                       "--calibration-replicas", "60", "--output-dir", temp_dir)
        assert code == 0
        saved = json.loads((Path(temp_dir) / "config.json").read_text())
        expected = calibrate_sigma_hat(WalkSpec.discrete_pareto(1.5), 500, 60, 0)
        assert saved["walk"]["sigma_hat"] == expected
        assert "Calibrated sigma_hat" in capsys.readouterr().out

        code = run_cli(monkeypatch, "simulate", "--law", "DISCRETE_PARETO", "--d", "1", "--beta", "1.5",
                       "--n", "64", "--replicas", "2", "--sigma-hat", "1.25", "--output-dir", temp_dir)
        assert code == 0
        saved = json.loads((Path(temp_dir) / "config.json").read_text())
        assert saved["walk"]["sigma_hat"] == 1.25
        assert "Calibrating" not in capsys.readouterr().out

    print("✓ Calibrated walks")


def test_energy_command(monkeypatch, capsys):
    """energy runs E and Ecal for a parametric kernel"""
    print("Testing energy command...")

    monkeypatch.delenv("RANGEWALK_OUTPUT_DIR", raising=False)
    with tempfile.TemporaryDirectory() as temp_dir:
        code = run_cli(monkeypatch, "energy", "--d", "3", "--n", "64", "--replicas", "3",
                       "--kernel", "1,0.5", "--output-dir", temp_dir)
        assert code == 0
        results = read_results(Path(temp_dir) / RESULTS_FILE)
        assert results[0].kernel == {'L': 1.0, 'delta': 0.5}
        assert "Max |Ecal - E|" in capsys.readouterr().out

        assert run_cli(monkeypatch, "energy", "--n", "64", "--output-dir", temp_dir) == 1
        assert "No kernel given" in capsys.readouterr().out

    print("✓ Energy command")


def test_bad_arguments(monkeypatch, capsys):
    """Configuration errors give exit code 1"""
    print("Testing bad arguments...")

    with tempfile.TemporaryDirectory() as temp_dir:
        assert run_cli(monkeypatch, "simulate", "--n", "64", "--functionals", "R,area",
                       "--output-dir", temp_dir) == 1
        assert "Error building configuration" in capsys.readouterr().out

        assert run_cli(monkeypatch, "simulate", "--config", str(Path(temp_dir) / "none.json")) == 1

    assert run_cli(monkeypatch, "verify", "--profile", "nightly") == 1
    assert "Unknown tolerance profile" in capsys.readouterr().out

    print("✓ Bad arguments")
