"""The five figure builders.

energy        - E(t) with the reconstructed E(0) - int D overlay, so the
                energy identity's closure is visible at a glance
mass          - |mass(t) - mass(0)| on a log axis (machine-precision floor)
convergence   - log-log error vs dt (and vs modes when present) with slopes
fields        - snapshot curves (1-D) or heatmaps (2-D)
amplification - continuous-dependence ratio curves R(t) per delta

Figures are deterministic for fixed inputs: fixed size/dpi, pinned SVG hash
salt, no embedded dates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "chtumor-plots"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .reader import PlotDataError, RunData, load_amplification, load_convergence, load_run

FIGSIZE = (6.4, 4.2)
DPI = 120
FLOOR = 1e-18


def _save(fig, out_dir: Path, name: str, fmt: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.{fmt}"
    metadata = {"Date": None} if fmt == "svg" else None
    fig.savefig(path, dpi=DPI, metadata=metadata)
    plt.close(fig)
    return path


def energy_figure(run: RunData, out_dir: Path, fmt: str) -> Path:
    d = run.diagnostics
    t = d["t"]
    e = d["energy"]
    diss = d["dissipation"] + d["source_dissipation"]
    cumulative = np.concatenate(([0.0], np.cumsum(0.5 * (diss[1:] + diss[:-1]) * np.diff(t))))
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(t, e, label="E(t)", color="tab:blue")
    ax.plot(t, e[0] - cumulative, "--", label="E(0) - cumulative dissipation",
            color="tab:orange")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.legend()
    ax.set_title("energy decay vs dissipation closure")
    fig.tight_layout()
    return _save(fig, out_dir, "energy", fmt)


def mass_figure(run: RunData, out_dir: Path, fmt: str) -> Path:
    d = run.diagnostics
    t = d["t"]
    dev = np.abs(d["mass"] - d["mass"][0])
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.semilogy(t, np.maximum(dev, FLOOR), color="tab:green")
    ax.set_xlabel("t")
    ax.set_ylabel("|mass(t) - mass(0)|")
    ax.set_title("total-mass conservation error")
    fig.tight_layout()
    return _save(fig, out_dir, "mass", fmt)


def _fit_slope(x, y):
    good = (x > 0) & (y > 0)
    if good.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[good]), np.log(y[good]), 1)[0])


def convergence_figure(run: RunData, out_dir: Path, fmt: str) -> Path:
    cols = load_convergence(run.directory)
    study = cols["study"]
    fig, ax = plt.subplots(figsize=FIGSIZE)
    tau_mask = study == "tau"
    if tau_mask.any():
        x = cols["value"][tau_mask]
        y = cols["err_phi"][tau_mask]
        slope = _fit_slope(x, y)
        ax.loglog(x, y, "o-", color="tab:blue", label=f"phi error, slope = {slope:.2f}")
    modes_mask = study == "modes"
    if modes_mask.any():
        x = cols["value"][modes_mask]
        y = np.maximum(cols["err_phi"][modes_mask], FLOOR)
        ax.loglog(x, y, "s--", color="tab:red", label="phi error vs modes")
    ax.set_xlabel("dt (tau study) / modes")
    ax.set_ylabel("L2 error at T")
    ax.legend()
    ax.set_title("refinement study")
    fig.tight_layout()
    return _save(fig, out_dir, "convergence", fmt)


def fields_figure(run: RunData, out_dir: Path, fmt: str) -> Path:
    snaps = [s for s in run.snapshots if s.field == "phi"]
    if not snaps:
        raise PlotDataError(f"no phi snapshots in {run.directory}")
    dim = len(snaps[0].modes)
    if dim == 1:
        fig, ax = plt.subplots(figsize=FIGSIZE)
        cmap = plt.get_cmap("viridis")
        L, n = snaps[0].extents[0], snaps[0].modes[0]
        x = L * (np.arange(n) + 0.5) / n
        for i, s in enumerate(snaps):
            ax.plot(x, s.values, color=cmap(i / max(len(snaps) - 1, 1)),
                    label=f"t = {s.time:g}")
        ax.set_xlabel("x")
        ax.set_ylabel("phi")
        if len(snaps) <= 8:
            ax.legend(fontsize=8)
        ax.set_title("tumor fraction snapshots")
    elif dim == 2:
        k = min(len(snaps), 4)
        picks = [snaps[int(round(i * (len(snaps) - 1) / max(k - 1, 1)))] for i in range(k)]
        fig, axes = plt.subplots(1, k, figsize=(3.0 * k, 3.2))
        axes = np.atleast_1d(axes)
        for ax, s in zip(axes, picks):
            im = ax.imshow(s.values.T, origin="lower", cmap="RdBu_r",
                           extent=(0, s.extents[0], 0, s.extents[1]))
            ax.set_title(f"t = {s.time:g}", fontsize=9)
        fig.colorbar(im, ax=list(axes), shrink=0.8)
    else:
        raise PlotDataError("field snapshots support 1-D and 2-D grids only")
    return _save(fig, out_dir, "fields", fmt)


def amplification_figure(run: RunData, out_dir: Path, fmt: str) -> Path:
    cols = load_amplification(run.directory)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for d in np.unique(cols["delta"]):
        mask = cols["delta"] == d
        ax.plot(cols["t"][mask], cols["R"][mask], label=f"delta = {d:g}")
    ax.set_xlabel("t")
    ax.set_ylabel("R(t)")
    ax.legend()
    ax.set_title("continuous-dependence amplification")
    fig.tight_layout()
    return _save(fig, out_dir, "amplification", fmt)


FIGURES = {
    "energy": energy_figure,
    "mass": mass_figure,
    "convergence": convergence_figure,
    "fields": fields_figure,
    "amplification": amplification_figure,
}


@dataclass(frozen=True)
class PlotJob:
    """One rendering request: input run directory, figure list, output spot.

    The input directory must contain diagnostics.csv and run_summary.json;
    individual figures may require further files (convergence.csv,
    amplification.csv, snapshots).
    """

    run_dir: Path
    figures: tuple[str, ...] = field(default_factory=lambda: tuple(FIGURES))
    out_dir: Path = Path("figs")
    fmt: str = "png"

    def __post_init__(self):
        object.__setattr__(self, "run_dir", Path(self.run_dir))
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if self.fmt not in ("png", "svg"):
            raise PlotDataError(f"unsupported format {self.fmt!r}; use png or svg")
        unknown = [n for n in self.figures if n not in FIGURES]
        if unknown:
            raise PlotDataError(f"unknown figure(s) {unknown}; available: {sorted(FIGURES)}")
        for required in ("diagnostics.csv", "run_summary.json"):
            if not (self.run_dir / required).exists():
                raise PlotDataError(f"missing input file: {self.run_dir / required}")


def render_job(job: PlotJob) -> list[Path]:
    """Render a job's figures (read-only over the input directory)."""
    run = load_run(job.run_dir)
    return [FIGURES[name](run, job.out_dir, job.fmt) for name in job.figures]


def render(run_dir, figures, out_dir, fmt: str = "png") -> list[Path]:
    names = tuple(FIGURES) if figures in ("all", ["all"]) else tuple(figures)
    return render_job(PlotJob(run_dir=run_dir, figures=names, out_dir=out_dir, fmt=fmt))
