"""Deterministic output formats: diagnostics CSV, raw float64 snapshots with
JSON sidecars, and JSON summaries for the experiment drivers.

diagnostics.csv columns (one row per diagnostic stride, plus the initial row):

    t,energy,grad_phi_half,psi_half,f_integral,dissipation,source_dissipation,
    mass,energy_identity_residual,inner_iters

Snapshots are flat little-endian float64 nodal arrays (<field>_<step>.f64)
with a sidecar <field>_<step>.json recording grid, time and field name.
Floats are serialized with repr (shortest round-trip), so identical runs give
byte-identical CSV files on one platform.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import diagnostics
from .basis import from_spectral, mean_value
from .dynamics import SimState, StepReport

DIAGNOSTICS_HEADER = (
    "t,energy,grad_phi_half,psi_half,f_integral,dissipation,source_dissipation,"
    "mass,energy_identity_residual,inner_iters"
)


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _row(values) -> str:
    return ",".join(_fmt(v) for v in values)


class RunWriter:
    """Collects stride-sampled diagnostics and snapshots for one run."""

    def __init__(self, out_dir, grid, pot, prolif, cfg_echo: dict, seed: int,
                 diagnostic_stride: int = 1, snapshot_stride: int | None = None):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.grid = grid
        self.pot = pot
        self.prolif = prolif
        self.cfg_echo = cfg_echo
        self.seed = seed
        self.diagnostic_stride = diagnostic_stride
        self.snapshot_stride = snapshot_stride
        self.rows: list[str] = []
        self.final: dict = {}
        self._n_steps = 0

    def record_initial(self, state: SimState) -> None:
        parts = diagnostics.energy(state, self.pot)
        diss = diagnostics.dissipation(state, self.pot, self.prolif)
        mass = mean_value(state.phi.coeffs, self.grid) + mean_value(state.psi.coeffs, self.grid)
        self.rows.append(_row([
            state.t, parts.total, parts.grad_phi_half, parts.psi_half, parts.f_integral,
            diss.grad_mu_sq + diss.grad_psi_sq, diss.source, mass, 0.0, 0,
        ]))
        self.final = {"t": state.t, "energy": parts.total, "mass": mass}
        if self.snapshot_stride is not None:
            self.write_snapshot(state, 0)

    def observe(self, i: int, state: SimState, report: StepReport) -> None:
        self._n_steps = i
        if i % self.diagnostic_stride == 0:
            parts = diagnostics.energy(state, self.pot)
            self.rows.append(_row([
                state.t, report.energy, parts.grad_phi_half, parts.psi_half, parts.f_integral,
                report.dissipation, report.source_dissipation, report.mass,
                report.energy_identity_residual, report.inner_iters,
            ]))
        if self.snapshot_stride is not None and i % self.snapshot_stride == 0:
            self.write_snapshot(state, i)
        self.final = {"t": state.t, "energy": report.energy, "mass": report.mass,
                      "energy_identity_residual": report.energy_identity_residual}

    def write_snapshot(self, state: SimState, index: int) -> None:
        for name, fld in (("phi", state.phi), ("psi", state.psi)):
            stem = f"{name}_{index:08d}"
            nodal = np.ascontiguousarray(from_spectral(fld), dtype="<f8")
            (self.out / f"{stem}.f64").write_bytes(nodal.tobytes())
            sidecar = {
                "field": name,
                "time": state.t,
                "step_index": index,
                "grid": {"extents": list(self.grid.extents), "modes": list(self.grid.modes)},
                "dtype": "<f8",
                "order": "C",
            }
            (self.out / f"{stem}.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")

    def finalize(self, wall_time_s: float) -> None:
        csv = DIAGNOSTICS_HEADER + "\n" + "\n".join(self.rows) + "\n"
        (self.out / "diagnostics.csv").write_text(csv)
        summary = {
            "config": self.cfg_echo,
            "seed": self.seed,
            "n_steps": self._n_steps,
            "wall_time_s": wall_time_s,
            "final": self.final,
        }
        (self.out / "run_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def write_assumption_report(report, out_dir, name: str) -> tuple[Path, Path]:
    """Plain-text + CSV pair for a validator report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"{name} report: {'PASS' if report.passed else 'FAIL'}"]
    csv_rows = ["check,slack,worst_s,passed,skipped,note"]
    for c in report.checks:
        status = "skipped" if c.skipped else ("ok" if c.passed else "VIOLATED")
        lines.append(f"  {c.name:<26s} {status:<9s} slack={c.slack:.6g} at s={c.worst_s:.6g} {c.note}")
        csv_rows.append(",".join([
            c.name, _fmt(c.slack), _fmt(c.worst_s), str(c.passed), str(c.skipped),
            '"' + c.note.replace('"', "'") + '"',
        ]))
    for key, val in report.extra.items():
        lines.append(f"  {key} = {val:.8g}" if isinstance(val, float) else f"  {key} = {val}")
    txt = out / f"{name}.txt"
    csv = out / f"{name}.csv"
    txt.write_text("\n".join(lines) + "\n")
    csv.write_text("\n".join(csv_rows) + "\n")
    return txt, csv


def write_convergence(tau_report, modes_report, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["study,value,err_phi,err_psi,residual_geomean"]
    for rep in (tau_report, modes_report):
        if rep is None:
            continue
        for r in rep.rows:
            rows.append(",".join([r.study, _fmt(r.value), _fmt(r.err_phi),
                                  _fmt(r.err_psi), _fmt(r.residual_geomean)]))
    (out / "convergence.csv").write_text("\n".join(rows) + "\n")
    summary = {}
    if tau_report is not None:
        summary["tau"] = {"orders": list(tau_report.orders),
                          "residual_ratios": list(tau_report.residual_ratios)}
    if modes_report is not None:
        summary["modes"] = {"orders": list(modes_report.orders)}
    (out / "convergence_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def write_compare(report, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["delta,t,R,phi_dual,psi_dual,phi_v_l2t,psi_l2t"]
    for d in report.deltas:
        for s, r in zip(report.samples[d], report.ratios[d]):
            rows.append(",".join(_fmt(v) for v in
                                 [d, s.t, r, s.phi_dual, s.psi_dual, s.phi_v_l2t, s.psi_l2t]))
    (out / "amplification.csv").write_text("\n".join(rows) + "\n")
    summary = {
        "deltas": list(report.deltas),
        "r_final": {repr(d): report.r_final[d] for d in report.deltas},
        "r_envelope": {repr(d): report.r_envelope[d] for d in report.deltas},
        "pairwise_ratios": [[a, b, r] for a, b, r in report.pairwise],
        "passed": report.passed,
    }
    (out / "compare_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def write_attractor(report, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = ["member,t,energy,phi_v,h3_proxy,psi_v,mass"]
    for tr in report.trajectories:
        for t, energy, phi_v, h3, psi_v, mass in tr.series:
            rows.append(",".join(_fmt(v) for v in [tr.member, t, energy, phi_v, h3, psi_v, mass]))
    (out / "attractor.csv").write_text("\n".join(rows) + "\n")
    summary = {
        "energy_bound": report.energy_bound,
        "transient": report.transient,
        "horizon": report.horizon,
        "ensemble_sup_half": report.ensemble_half,
        "ensemble_sup_full": report.ensemble_full,
        "rel_change": report.rel_change,
        "energy_decayed": report.energy_decayed,
        "saturated": report.saturated,
        "passed": report.passed,
        "members": [
            {"member": tr.member, "seed": tr.seed, "noise_amp": tr.noise_amp,
             "energy_initial": tr.energy_initial, "energy_at_transient": tr.energy_at_transient}
            for tr in report.trajectories
        ],
    }
    (out / "attractor_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def read_diagnostics_csv(path) -> dict[str, np.ndarray]:
    """Column-dict reader used by tests (and anything downstream)."""
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in text[1:]])
    return {name: data[:, i] for i, name in enumerate(header)}
