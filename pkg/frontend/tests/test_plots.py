"""Plot-suite tests, including the read-only acceptance check.

The fixture builds one combined run directory through the primary CLI
(run + convergence + compare), exactly the way a user would; this package
touches those files read-only.
"""

import hashlib
import json
import subprocess
import sys

import pytest

from chtumor_plots.cli import main
from chtumor_plots.figures import FIGURES, PlotJob, render, render_job
from chtumor_plots.reader import PlotDataError, load_run, read_csv_columns


def _primary(*args):
    proc = subprocess.run([sys.executable, "-m", "chtumor.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


def _dir_hash(path):
    digest = hashlib.sha256()
    for p in sorted(path.rglob("*")):
        if p.is_file():
            digest.update(p.name.encode())
            digest.update(p.read_bytes())
    return digest.hexdigest()


@pytest.fixture(scope="module")
def benchmark_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("rundir")
    cfg = tmp / "cfg.json"
    cfg.write_text(json.dumps({
        "grid": {"extents": [1.0], "modes": [32]},
        "scheme": {"dt": 1e-3, "t_end": 0.05},
        "output": {"snapshot_stride": 10, "diagnostic_stride": 2},
        "convergence": {"taus": [2e-3, 1e-3], "t_end": 0.01, "modes": [16, 32],
                        "ref_modes": 64, "ref_factor": 4},
        "compare": {"deltas": [1e-3, 5e-4], "t_end": 0.005, "dt": 5e-4},
    }))
    out = tmp / "run"
    _primary("run", "--config", str(cfg), "--out", str(out), "--quiet")
    _primary("convergence", "--config", str(cfg), "--out", str(out), "--quiet")
    _primary("compare", "--config", str(cfg), "--out", str(out), "--quiet")
    return out


def test_acceptance_criterion_10_all_figures_read_only(benchmark_dir, tmp_path):
    before = _dir_hash(benchmark_dir)
    paths = render(benchmark_dir, "all", tmp_path / "figs", "png")
    all_ok = len(paths) == 5 and all(p.exists() and p.stat().st_size > 0 for p in paths)
    unchanged = _dir_hash(benchmark_dir) == before
    print(f"[{'PASS' if all_ok and unchanged else 'FAIL'}] criterion 10: "
          f"five figures rendered, input hash unchanged")
    assert all_ok
    assert unchanged
    assert {p.stem for p in paths} == set(FIGURES)


def test_cli_renders_selected_figures(benchmark_dir, tmp_path):
    rc = main(["--run", str(benchmark_dir), "--figs", "energy,mass",
               "--out", str(tmp_path / "f"), "--format", "svg", "--quiet"])
    assert rc == 0
    assert (tmp_path / "f" / "energy.svg").exists()
    assert (tmp_path / "f" / "mass.svg").exists()


def test_figures_deterministic(benchmark_dir, tmp_path):
    a = render(benchmark_dir, ["energy"], tmp_path / "a", "png")[0]
    b = render(benchmark_dir, ["energy"], tmp_path / "b", "png")[0]
    assert a.read_bytes() == b.read_bytes()
    a = render(benchmark_dir, ["mass"], tmp_path / "a", "svg")[0]
    b = render(benchmark_dir, ["mass"], tmp_path / "b", "svg")[0]
    assert a.read_bytes() == b.read_bytes()


def test_missing_diagnostics_is_descriptive(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    rc = main(["--run", str(empty), "--figs", "energy", "--out", str(tmp_path / "f")])
    assert rc == 1
    err = capsys.readouterr().err
    assert "diagnostics.csv" in err


def test_malformed_csv_reports_row(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,energy\n0.0,1.0\n0.1,not_a_number\n")
    with pytest.raises(PlotDataError) as err:
        read_csv_columns(bad)
    assert "row 3" in str(err.value)
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("t,energy\n0.0,1.0\n0.1\n")
    with pytest.raises(PlotDataError) as err:
        read_csv_columns(ragged)
    assert "row 3" in str(err.value)


def test_unknown_figure_rejected(benchmark_dir, tmp_path):
    with pytest.raises(PlotDataError):
        render(benchmark_dir, ["volume_render"], tmp_path / "f", "png")


def test_plot_job_validates_inputs(benchmark_dir, tmp_path):
    with pytest.raises(PlotDataError):
        PlotJob(run_dir=tmp_path, figures=("energy",))  # no diagnostics.csv
    with pytest.raises(PlotDataError):
        PlotJob(run_dir=benchmark_dir, fmt="pdf")
    job = PlotJob(run_dir=benchmark_dir, figures=("energy",), out_dir=tmp_path / "f")
    paths = render_job(job)
    assert paths[0].name == "energy.png"


def test_equilibrium_run_series(tmp_path):
    cfg = tmp_path / "eq.json"
    cfg.write_text(json.dumps({
        "grid": {"extents": [1.0], "modes": [16]},
        "scheme": {"dt": 1e-3, "t_end": 0.01},
        "initial": {"phi_mean": 1.0, "noise_amp": 0.0, "psi_value": 0.0},
        "output": {"snapshot_stride": 5, "diagnostic_stride": 1},
    }))
    out = tmp_path / "eq"
    _primary("run", "--config", str(cfg), "--out", str(out), "--quiet")
    run = load_run(out)
    energy = run.diagnostics["energy"]
    mass_dev = abs(run.diagnostics["mass"] - run.diagnostics["mass"][0])
    assert energy.max() - energy.min() < 1e-12   # flat energy line
    assert mass_dev.max() < 1e-14                # machine-precision floor
    paths = render(out, ["energy", "mass", "fields"], tmp_path / "figs", "png")
    assert len(paths) == 3
