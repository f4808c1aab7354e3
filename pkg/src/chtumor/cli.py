"""Command-line surface.

Subcommands: run, verify-potential, verify-yosida, verify-p, convergence,
compare, attractor. Every subcommand takes --config PATH and --out DIR plus
optional --seed INT (overrides initial.seed) and --quiet.

Exit codes: 0 success, 1 validation failure (bad config or a failed
verification/experiment check), 2 solver failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import experiments, outputs
from .config import (
    ConfigError,
    RunConfig,
    build_grid,
    build_initial,
    build_potential,
    build_prolif,
    build_scheme,
    load_config,
)
from .dynamics import StepError, run
from .potentials import (
    ResolventError,
    YosidaPotential,
    pointwise_convergence,
    validate_F,
    verify_lemma_bounds,
)
from .proliferation import validate_p


def _say(quiet: bool, *parts):
    if not quiet:
        print(*parts)


def _cmd_run(cfg: RunConfig, out: Path, quiet: bool) -> int:
    grid = build_grid(cfg)
    scheme = build_scheme(cfg)
    initial = build_initial(cfg, grid)
    writer = outputs.RunWriter(
        out, grid, scheme.potential, scheme.prolif,
        cfg_echo=cfg.to_dict(), seed=cfg.initial.seed,
        diagnostic_stride=cfg.output.diagnostic_stride,
        snapshot_stride=cfg.output.snapshot_stride,
    )
    t0 = time.perf_counter()
    writer.record_initial(initial)
    run(initial, scheme, observers=(writer.observe,))
    writer.finalize(time.perf_counter() - t0)
    _say(quiet, f"run complete: {writer.final}")
    _say(quiet, f"outputs in {out}")
    return 0


def _cmd_verify_potential(cfg: RunConfig, out: Path, quiet: bool) -> int:
    pot = build_potential(cfg)
    base = pot.base if isinstance(pot, YosidaPotential) else pot
    report = validate_F(base)
    txt, _ = outputs.write_assumption_report(report, out, "verify_potential")
    _say(quiet, txt.read_text().rstrip())
    return 0 if report.passed else 1


def _cmd_verify_yosida(cfg: RunConfig, out: Path, quiet: bool) -> int:
    pot = build_potential(cfg)
    if isinstance(pot, YosidaPotential):
        y = pot
    else:
        y = YosidaPotential(pot, m=100.0)
    report = verify_lemma_bounds(y)
    conv = pointwise_convergence(y.base, ms=(10.0, 100.0, 1000.0, 10000.0))
    report.extra["pointwise_monotone"] = conv["monotone"]
    txt, _ = outputs.write_assumption_report(report, out, "verify_yosida")
    _say(quiet, txt.read_text().rstrip())
    ok = report.passed and conv["monotone"]
    return 0 if ok else 1


def _cmd_verify_p(cfg: RunConfig, out: Path, quiet: bool) -> int:
    pf = build_prolif(cfg)
    report = validate_p(pf)
    txt, _ = outputs.write_assumption_report(report, out, "verify_p")
    _say(quiet, txt.read_text().rstrip())
    return 0 if report.passed else 1


def _cmd_convergence(cfg: RunConfig, out: Path, quiet: bool) -> int:
    grid = build_grid(cfg)
    scheme = build_scheme(cfg)
    initial = build_initial(cfg, grid)
    v = cfg.convergence
    tau_rep = experiments.tau_refinement(initial, scheme, v.taus, v.t_end, v.ref_factor)
    modes_rep = experiments.modes_refinement(initial, scheme, v.modes, v.ref_modes, v.t_end)
    outputs.write_convergence(tau_rep, modes_rep, out)
    _say(quiet, f"tau orders: {[round(o, 3) for o in tau_rep.orders]}")
    _say(quiet, f"residual ratios: {[round(r, 3) for r in tau_rep.residual_ratios]}")
    _say(quiet, f"mode errors: {[(int(r.value), r.err_phi) for r in modes_rep.rows]}")
    return 0


def _cmd_compare(cfg: RunConfig, out: Path, quiet: bool) -> int:
    grid = build_grid(cfg)
    scheme = build_scheme(cfg, dt=cfg.compare.dt, t_end=cfg.compare.t_end)
    initial = build_initial(cfg, grid)
    report = experiments.continuous_dependence_experiment(initial, scheme, cfg.compare.deltas)
    outputs.write_compare(report, out)
    for d in report.deltas:
        _say(quiet, f"delta={d:g}: R(T)={report.r_final[d]:.4f} max_t R={report.r_envelope[d]:.4f}")
    _say(quiet, f"pairwise ratios in band: {report.passed}")
    return 0 if report.passed else 1


def _cmd_attractor(cfg: RunConfig, out: Path, quiet: bool) -> int:
    grid = build_grid(cfg)
    a = cfg.attractor
    scheme = build_scheme(cfg, dt=a.dt, t_end=a.horizon)
    report = experiments.attractor_probe(
        grid, scheme, a.ensemble, a.energy_bound, a.transient, a.horizon,
        phi_mean=cfg.initial.phi_mean, psi_value=cfg.initial.psi_value,
        noise_amp=a.noise_amp, seed=cfg.initial.seed,
    )
    outputs.write_attractor(report, out)
    _say(quiet, f"ensemble sup over [T0, T1]: {report.ensemble_half}")
    _say(quiet, f"relative change on doubling: { {k: round(v, 4) for k, v in report.rel_change.items()} }")
    _say(quiet, f"energy decayed: {report.energy_decayed}  saturated: {report.saturated}")
    return 0 if report.passed else 1


_COMMANDS = {
    "run": _cmd_run,
    "verify-potential": _cmd_verify_potential,
    "verify-yosida": _cmd_verify_yosida,
    "verify-p": _cmd_verify_p,
    "convergence": _cmd_convergence,
    "compare": _cmd_compare,
    "attractor": _cmd_attractor,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chtumor",
        description="Spectral Cahn-Hilliard / nutrient solver and verification harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override initial.seed")
        p.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        return _COMMANDS[args.command](cfg, Path(args.out), args.quiet)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 1
    except (StepError, ResolventError) as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
