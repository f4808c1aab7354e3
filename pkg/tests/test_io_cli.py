import json

import numpy as np
import pytest

from chtumor.cli import main
from chtumor.config import (
    ConfigError,
    from_dict,
    load_config,
    save_config,
    standard_benchmark,
)
from chtumor.outputs import DIAGNOSTICS_HEADER, read_diagnostics_csv


def _write_cfg(path, **overrides):
    base = {
        "grid": {"extents": [1.0], "modes": [32]},
        "scheme": {"dt": 1e-3, "t_end": 0.01},
        "output": {"snapshot_stride": 5, "diagnostic_stride": 2},
    }
    base.update(overrides)
    path.write_text(json.dumps(base))
    return path


def test_minimal_config_fills_defaults(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"grid": {"extents": [1.0], "modes": [16]}}))
    cfg = load_config(p)
    assert cfg.potential.name == "double_well"
    assert cfg.prolif.name == "truncated_quadratic"
    assert cfg.scheme.nonlinear == "newton"
    assert cfg.initial.seed == 12345


def test_config_round_trip(tmp_path):
    cfg = standard_benchmark()
    save_config(cfg, tmp_path / "echo.json")
    assert load_config(tmp_path / "echo.json") == cfg
    assert from_dict(cfg.to_dict()) == cfg


def test_config_validation_paths():
    with pytest.raises(ConfigError) as err:
        from_dict({"scheme": {"dt": 0.0}})
    assert err.value.path == "scheme.dt"
    with pytest.raises(ConfigError) as err:
        from_dict({"potential": {"name": "septic_well"}})
    assert err.value.path == "potential.name"
    assert "double_well" in str(err.value)  # lists the available potentials
    with pytest.raises(ConfigError) as err:
        from_dict({"grid": {"modes": [64, 64]}})
    assert err.value.path == "grid.modes"
    with pytest.raises(ConfigError) as err:
        from_dict({"scheme": {"cfl": 0.5}})
    assert err.value.path == "scheme.cfl"


def test_config_parse_error_reports_location(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{ not json")
    with pytest.raises(ConfigError) as err:
        load_config(p)
    assert "line" in str(err.value)


def test_run_writes_expected_files(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json")
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    names = {p.name for p in out.iterdir()}
    assert "diagnostics.csv" in names
    assert "run_summary.json" in names
    assert "phi_00000000.f64" in names and "phi_00000000.json" in names
    cols = read_diagnostics_csv(out / "diagnostics.csv")
    assert list(cols) == DIAGNOSTICS_HEADER.split(",")
    n_rows = len(cols["t"])
    assert n_rows == 1 + 10 // 2  # initial row + every 2nd of 10 steps
    assert np.all(np.isfinite(cols["energy"]))
    summary = json.loads((out / "run_summary.json").read_text())
    assert summary["seed"] == 12345
    assert summary["n_steps"] == 10


def test_zero_step_run_csv_has_initial_row_only(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json", scheme={"dt": 1e-3, "t_end": 0.0})
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    lines = (out / "diagnostics.csv").read_text().strip().splitlines()
    assert len(lines) == 2
    assert lines[0] == DIAGNOSTICS_HEADER
    assert lines[1].startswith("0.0,")


def test_snapshot_format_constant_field(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json",
                     grid={"extents": [1.0], "modes": [8]},
                     scheme={"dt": 1e-3, "t_end": 0.0},
                     initial={"phi_mean": 1.0, "noise_amp": 0.0, "psi_value": 0.0})
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    raw = (out / "phi_00000000.f64").read_bytes()
    assert len(raw) == 64  # 8 float64 values
    vals = np.frombuffer(raw, dtype="<f8")
    assert np.abs(vals - 1.0).max() < 1e-12
    sidecar = json.loads((out / "phi_00000000.json").read_text())
    assert sidecar["grid"]["modes"] == [8]
    assert sidecar["field"] == "phi"
    assert sidecar["time"] == 0.0


def test_rerun_identical_config_is_byte_identical(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg), "--out", str(out1), "--quiet"]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(out2), "--quiet"]) == 0
    assert (out1 / "diagnostics.csv").read_bytes() == (out2 / "diagnostics.csv").read_bytes()


def test_seed_override_changes_initial_data(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["run", "--config", str(cfg), "--out", str(out1), "--quiet"])
    main(["run", "--config", str(cfg), "--out", str(out2), "--quiet", "--seed", "99"])
    assert (out1 / "diagnostics.csv").read_bytes() != (out2 / "diagnostics.csv").read_bytes()
    summary = json.loads((out2 / "run_summary.json").read_text())
    assert summary["seed"] == 99


def test_csv_rows_constant_width_and_finite(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json")
    out = tmp_path / "out"
    main(["run", "--config", str(cfg), "--out", str(out), "--quiet"])
    lines = (out / "diagnostics.csv").read_text().strip().splitlines()
    widths = {len(line.split(",")) for line in lines}
    assert widths == {len(DIAGNOSTICS_HEADER.split(","))}
    for line in lines[1:]:
        assert all(np.isfinite(float(v)) for v in line.split(","))


def test_cli_exit_codes(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"scheme": {"dt": -1.0}}))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 1
    missing = tmp_path / "missing.json"
    assert main(["run", "--config", str(missing), "--out", str(tmp_path / "x")]) == 1
    # a solver-hostile setup: dt so large that even 5 halvings leave the
    # fixed-point sweep divergent
    hostile = _write_cfg(tmp_path / "hostile.json",
                         scheme={"dt": 100.0, "t_end": 100.0, "nonlinear": "fixed_point",
                                 "max_iter": 10, "tol_n": 1e-12},
                         initial={"noise_amp": 0.4, "phi_mean": 0.0, "psi_value": 0.1,
                                  "seed": 2})
    assert main(["run", "--config", str(hostile), "--out", str(tmp_path / "y"),
                 "--quiet"]) == 2


def test_verify_commands_write_reports(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json")
    for cmd, stem in (("verify-potential", "verify_potential"),
                      ("verify-yosida", "verify_yosida"),
                      ("verify-p", "verify_p")):
        out = tmp_path / cmd
        assert main([cmd, "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
        assert (out / f"{stem}.txt").exists()
        assert (out / f"{stem}.csv").exists()
        text = (out / f"{stem}.txt").read_text()
        assert "PASS" in text


def test_compare_command_outputs(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json",
                     compare={"deltas": [1e-3, 5e-4], "t_end": 0.004, "dt": 4e-4})
    out = tmp_path / "cmp"
    rc = main(["compare", "--config", str(cfg), "--out", str(out), "--quiet"])
    assert rc == 0
    amp = (out / "amplification.csv").read_text().splitlines()
    assert amp[0] == "delta,t,R,phi_dual,psi_dual,phi_v_l2t,psi_l2t"
    summary = json.loads((out / "compare_summary.json").read_text())
    assert summary["passed"] is True


def test_attractor_command_outputs(tmp_path):
    # horizon must clear the spinodal transient or saturation honestly fails
    cfg = _write_cfg(tmp_path / "cfg.json",
                     attractor={"ensemble": 2, "energy_bound": 2.0, "transient": 2.0,
                                "horizon": 10.0, "dt": 0.02, "noise_amp": 0.3})
    out = tmp_path / "att"
    rc = main(["attractor", "--config", str(cfg), "--out", str(out), "--quiet"])
    assert rc == 0
    rows = (out / "attractor.csv").read_text().splitlines()
    assert rows[0] == "member,t,energy,phi_v,h3_proxy,psi_v,mass"
    summary = json.loads((out / "attractor_summary.json").read_text())
    assert set(summary["ensemble_sup_half"]) == {"energy", "phi_v", "h3_proxy", "psi_v",
                                                 "mass_abs"}


def test_convergence_command_outputs(tmp_path):
    cfg = _write_cfg(tmp_path / "cfg.json",
                     convergence={"taus": [2e-3, 1e-3], "t_end": 0.01,
                                  "modes": [16, 32], "ref_modes": 64, "ref_factor": 4})
    out = tmp_path / "conv"
    rc = main(["convergence", "--config", str(cfg), "--out", str(out), "--quiet"])
    assert rc == 0
    rows = (out / "convergence.csv").read_text().splitlines()
    assert rows[0] == "study,value,err_phi,err_psi,residual_geomean"
    studies = {line.split(",")[0] for line in rows[1:]}
    assert studies == {"tau", "modes"}
