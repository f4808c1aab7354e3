"""Stability and long-time experiments: continuous dependence, the
absorbing-set probe, and time-step / mode refinement studies.

These are drivers over the integrator; each returns a report object that the
CLI serializes to CSV + JSON. All runs are deterministic for fixed seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import diagnostics
from .basis import Grid, SpectralField
from .dynamics import SchemeConfig, SimState, StepReport, noisy_state, run


def perturbation_direction(grid: Grid) -> SpectralField:
    """Deterministic zero-mean direction with unit V' norm.

    Equal weight on the two lowest nonconstant modes; zero mean keeps the
    perturbed trajectory at the same total mass.
    """
    lam = grid.lambdas
    flat_order = np.argsort(lam, axis=None, kind="stable")
    idx = [np.unravel_index(i, grid.shape) for i in flat_order[1:3]]
    coeffs = np.zeros(grid.shape)
    dual_sq = 0.0
    for k in idx:
        coeffs[k] = 1.0
        dual_sq += 1.0 / lam[k]
    coeffs /= np.sqrt(dual_sq)
    return SpectralField(grid, coeffs)


@dataclass(frozen=True)
class AmplificationSample:
    t: float
    phi_dual: float
    psi_dual: float
    phi_v_l2t: float
    psi_l2t: float

    @property
    def combined(self) -> float:
        return self.phi_dual + self.psi_dual + self.phi_v_l2t + self.psi_l2t


@dataclass(frozen=True)
class ContinuousDependenceReport:
    deltas: tuple[float, ...]
    times: tuple[float, ...]
    ratios: dict            # delta -> tuple of R(t)
    samples: dict           # delta -> tuple of AmplificationSample
    r_final: dict           # delta -> R(T)
    r_envelope: dict        # delta -> max_t R(t)
    pairwise: tuple         # ((d_i, d_j, r_final_i / r_final_j), ...)
    passed: bool


class _TrajectoryRecorder:
    """Stores phi/psi coefficient snapshots at a fixed stride."""

    def __init__(self, initial: SimState, stride: int):
        self.stride = stride
        self.times = [initial.t]
        self.phis = [initial.phi.coeffs]
        self.psis = [initial.psi.coeffs]

    def __call__(self, i: int, state: SimState, report: StepReport):
        if i % self.stride == 0:
            self.times.append(state.t)
            self.phis.append(state.phi.coeffs)
            self.psis.append(state.psi.coeffs)


def continuous_dependence_experiment(
    initial: SimState,
    scheme: SchemeConfig,
    deltas: Sequence[float],
    direction: SpectralField | None = None,
    sample_stride: int = 1,
    ratio_band: tuple[float, float] = (0.8, 1.25),
) -> ContinuousDependenceReport:
    """Trajectory pairs from (phi0, psi0) and (phi0 + delta eta, psi0).

    R(t; delta) = [ |phi_d|_{V'} + |psi_d|_{V'} + |phi_d|_{L2(0,t;V)}
                    + |psi_d|_{L2(0,t;H)} ] / delta,
    the uniqueness estimate's left-hand side over the initial separation.
    Passes when R(T) agrees pairwise across the delta ladder within the band.
    """
    if not getattr(scheme.prolif, "lipschitz_flag", False):
        raise ValueError("continuous dependence requires a (P1) proliferation (q <= 4)")
    deltas = tuple(float(d) for d in deltas)
    if any(d <= 0 for d in deltas):
        raise ValueError("perturbation sizes must be positive")
    grid = initial.grid
    eta = direction if direction is not None else perturbation_direction(grid)

    base = _TrajectoryRecorder(initial, sample_stride)
    run(initial, scheme, observers=(base,))

    ratios: dict = {}
    samples: dict = {}
    for d in deltas:
        pert = SimState(
            SpectralField(grid, initial.phi.coeffs + d * eta.coeffs), initial.psi, initial.t
        )
        rec = _TrajectoryRecorder(pert, sample_stride)
        run(pert, replace(scheme), observers=(rec,))
        lam = grid.lambdas
        v2_prev = h2_prev = None
        acc_v2 = acc_h2 = 0.0
        t_prev = rec.times[0]
        rows = []
        for t, bp, bs, pp, ps in zip(rec.times, base.phis, base.psis, rec.phis, rec.psis):
            dphi = pp - bp
            dpsi = ps - bs
            v2 = float((lam * dphi**2).sum())
            h2 = float((dpsi**2).sum())
            if v2_prev is not None:
                acc_v2 += 0.5 * (v2 + v2_prev) * (t - t_prev)
                acc_h2 += 0.5 * (h2 + h2_prev) * (t - t_prev)
            v2_prev, h2_prev, t_prev = v2, h2, t
            rows.append(
                AmplificationSample(
                    t=t,
                    phi_dual=float(np.sqrt((dphi**2 / lam).sum())),
                    psi_dual=float(np.sqrt((dpsi**2 / lam).sum())),
                    phi_v_l2t=float(np.sqrt(acc_v2)),
                    psi_l2t=float(np.sqrt(acc_h2)),
                )
            )
        samples[d] = tuple(rows)
        ratios[d] = tuple(r.combined / d for r in rows)

    r_final = {d: ratios[d][-1] for d in deltas}
    r_env = {d: max(ratios[d]) for d in deltas}
    pairwise = []
    ok = True
    for i, di in enumerate(deltas):
        for dj in deltas[i + 1:]:
            rr = r_final[di] / r_final[dj]
            pairwise.append((di, dj, rr))
            ok = ok and (ratio_band[0] <= rr <= ratio_band[1])
    return ContinuousDependenceReport(
        deltas=deltas,
        times=tuple(base.times),
        ratios=ratios,
        samples=samples,
        r_final=r_final,
        r_envelope=r_env,
        pairwise=tuple(pairwise),
        passed=ok,
    )


@dataclass(frozen=True)
class TrajectoryStats:
    member: int
    seed: int
    noise_amp: float
    energy_initial: float
    energy_at_transient: float
    sup_half: dict    # stat name -> sup over [T0, T1]
    sup_full: dict    # stat name -> sup over [T0, 2 T1]
    series: tuple     # (t, energy, phi_v, h3_proxy, psi_v, mass) rows


STAT_NAMES = ("energy", "phi_v", "h3_proxy", "psi_v", "mass_abs")


@dataclass(frozen=True)
class AttractorReport:
    energy_bound: float
    transient: float
    horizon: float
    trajectories: tuple[TrajectoryStats, ...]
    ensemble_half: dict
    ensemble_full: dict
    rel_change: dict
    energy_decayed: bool
    saturated: bool
    passed: bool


ENSEMBLE_SEED_STRIDE = 100


def _fit_amplitude(grid: Grid, phi_mean: float, psi_value: float, seed: int,
                   amp0: float, energy_bound: float, pot) -> tuple[SimState, float]:
    """Largest noise amplitude <= amp0 with E <= bound, by bisection."""
    def make(a: float) -> SimState:
        return noisy_state(grid, phi_mean, a, seed, psi_value)

    def e_of(a: float) -> float:
        st = make(a)
        return diagnostics.energy(st, pot).total

    if e_of(0.0) > energy_bound:
        raise ValueError(
            f"mean state already exceeds the energy bound ({e_of(0.0):.3g} > {energy_bound:g})"
        )
    if e_of(amp0) <= energy_bound:
        return make(amp0), amp0
    lo, hi = 0.0, amp0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if e_of(mid) <= energy_bound:
            lo = mid
        else:
            hi = mid
    return make(lo), lo


def attractor_probe(
    grid: Grid,
    scheme: SchemeConfig,
    ensemble: int,
    energy_bound: float,
    transient: float,
    horizon: float,
    *,
    phi_mean: float = 0.0,
    psi_value: float = 0.0,
    noise_amp: float = 0.5,
    seed: int = 0,
    sample_stride: int = 1,
    saturation_tol: float = 0.05,
) -> AttractorReport:
    """Long-horizon boundedness probe over an ensemble with E(0) <= bound.

    Each trajectory integrates once to 2 * horizon; sup-statistics over
    [transient, horizon] are compared against [transient, 2 * horizon].
    """
    if ensemble < 1:
        raise ValueError("ensemble size must be >= 1")
    if not (0 <= transient < horizon):
        raise ValueError("need 0 <= transient < horizon")
    pot, prolif = scheme.potential, scheme.prolif
    trajectories = []
    for member in range(ensemble):
        member_seed = seed + ENSEMBLE_SEED_STRIDE + member
        state0, amp = _fit_amplitude(grid, phi_mean, psi_value, member_seed,
                                     noise_amp, energy_bound, pot)
        e0 = diagnostics.energy(state0, pot).total
        cfg = replace(scheme, t_end=2.0 * horizon)

        series = []
        lam = grid.lambdas

        def sample(t, phi_hat, psi_hat, energy_total):
            series.append((
                t,
                energy_total,
                float(np.sqrt((lam * phi_hat**2).sum())),
                diagnostics.h3_proxy(phi_hat, grid),
                float(np.sqrt((lam * psi_hat**2).sum())),
                float(phi_hat[(0,) * grid.dim] + psi_hat[(0,) * grid.dim]) / np.sqrt(grid.volume),
            ))

        sample(0.0, state0.phi.coeffs, state0.psi.coeffs, e0)

        def observer(i, state, report, _sample=sample):
            if i % sample_stride == 0:
                _sample(state.t, state.phi.coeffs, state.psi.coeffs, report.energy)

        run(state0, cfg, observers=(observer,))
        arr = np.array(series)
        t_col = arr[:, 0]
        e_transient = float(arr[np.searchsorted(t_col, transient), 1])

        def window_sup(t_hi: float) -> dict:
            sel = (t_col >= transient) & (t_col <= t_hi + 1e-12)
            window = arr[sel]
            return {
                "energy": float(window[:, 1].max()),
                "phi_v": float(window[:, 2].max()),
                "h3_proxy": float(window[:, 3].max()),
                "psi_v": float(window[:, 4].max()),
                "mass_abs": float(np.abs(window[:, 5]).max()),
            }

        trajectories.append(TrajectoryStats(
            member=member,
            seed=member_seed,
            noise_amp=amp,
            energy_initial=e0,
            energy_at_transient=e_transient,
            sup_half=window_sup(horizon),
            sup_full=window_sup(2.0 * horizon),
            series=tuple(map(tuple, series)),
        ))

    ensemble_half = {k: max(tr.sup_half[k] for tr in trajectories) for k in STAT_NAMES}
    ensemble_full = {k: max(tr.sup_full[k] for tr in trajectories) for k in STAT_NAMES}
    rel_change = {
        k: abs(ensemble_full[k] - ensemble_half[k]) / max(abs(ensemble_half[k]), 1e-30)
        for k in STAT_NAMES
    }
    energy_decayed = all(
        tr.energy_at_transient <= tr.energy_initial + 1e-10 * (1.0 + abs(tr.energy_initial))
        for tr in trajectories
    )
    finite = bool(np.all(np.isfinite(list(ensemble_full.values()))))
    saturated = finite and all(rel_change[k] <= saturation_tol for k in STAT_NAMES)
    return AttractorReport(
        energy_bound=energy_bound,
        transient=transient,
        horizon=horizon,
        trajectories=tuple(trajectories),
        ensemble_half=ensemble_half,
        ensemble_full=ensemble_full,
        rel_change=rel_change,
        energy_decayed=energy_decayed,
        saturated=saturated,
        passed=energy_decayed and saturated,
    )


@dataclass(frozen=True)
class RefinementRow:
    study: str          # "tau" or "modes"
    value: float
    err_phi: float
    err_psi: float
    residual_geomean: float


@dataclass(frozen=True)
class RefinementReport:
    rows: tuple[RefinementRow, ...]
    orders: tuple[float, ...]            # log2 error contractions, adjacent pairs
    residual_ratios: tuple[float, ...]   # geomean residual ratios, adjacent pairs


def _geomean(values) -> float:
    v = np.array([max(x, 1e-300) for x in values])
    return float(np.exp(np.mean(np.log(v)))) if v.size else float("nan")


def tau_refinement(initial: SimState, scheme: SchemeConfig,
                   taus: Sequence[float], t_end: float, ref_factor: int = 16) -> RefinementReport:
    """Global error at t_end against a reference at min(tau)/ref_factor."""
    taus = sorted((float(t) for t in taus), reverse=True)
    ref_tau = taus[-1] / ref_factor

    def solve(tau: float):
        holder: dict = {}

        def keep(_i, state, _report):
            holder["state"] = state

        recs = run(initial, replace(scheme, dt=tau, t_end=t_end), observers=(keep,))
        state = holder["state"]
        return state, _geomean([r.report.energy_identity_residual for r in recs])

    ref_state, _ = solve(ref_tau)
    rows = []
    for tau in taus:
        state, res_geo = solve(tau)
        rows.append(RefinementRow(
            study="tau",
            value=tau,
            err_phi=float(np.linalg.norm(state.phi.coeffs - ref_state.phi.coeffs)),
            err_psi=float(np.linalg.norm(state.psi.coeffs - ref_state.psi.coeffs)),
            residual_geomean=res_geo,
        ))
    orders = tuple(
        float(np.log2(rows[i].err_phi / max(rows[i + 1].err_phi, 1e-300)))
        for i in range(len(rows) - 1)
    )
    ratios = tuple(
        rows[i].residual_geomean / max(rows[i + 1].residual_geomean, 1e-300)
        for i in range(len(rows) - 1)
    )
    return RefinementReport(tuple(rows), orders, ratios)


def embed_coeffs(coeffs: np.ndarray, src: Grid, dst: Grid) -> np.ndarray:
    """Zero-pad (or truncate) coefficients between nested cosine bases."""
    if src.extents != dst.extents:
        raise ValueError("grids must share extents for coefficient embedding")
    out = np.zeros(dst.shape)
    sl = tuple(slice(0, min(a, b)) for a, b in zip(src.shape, dst.shape))
    out[sl] = coeffs[sl]
    return out


def modes_refinement(initial: SimState, scheme: SchemeConfig,
                     modes_list: Sequence[int], ref_modes: int,
                     t_end: float) -> RefinementReport:
    """Spatial study on nested grids.

    The initial data is band-limited to the coarsest study grid first, so
    every resolution starts from the same resolvable function and the errors
    measure the dynamics' spatial truncation only.
    """
    grid0 = initial.grid
    if grid0.dim != 1:
        raise ValueError("the modes study is wired for 1-D benchmarks")
    base_n = min(int(n) for n in modes_list)
    base_grid = Grid(grid0.extents, (base_n,))
    phi_base = embed_coeffs(initial.phi.coeffs, grid0, base_grid)
    psi_base = embed_coeffs(initial.psi.coeffs, grid0, base_grid)

    def solve(n: int):
        g = Grid(grid0.extents, (n,))
        st = SimState(
            SpectralField(g, embed_coeffs(phi_base, base_grid, g)),
            SpectralField(g, embed_coeffs(psi_base, base_grid, g)),
            initial.t,
        )
        holder: dict = {}

        def keep(_i, state, _report):
            holder["state"] = state

        recs = run(st, replace(scheme, t_end=t_end), observers=(keep,))
        return holder["state"], _geomean([r.report.energy_identity_residual for r in recs]), g

    ref_state, _, ref_grid = solve(ref_modes)
    rows = []
    for n in sorted(int(n) for n in modes_list):
        state, res_geo, g = solve(n)
        dphi = embed_coeffs(state.phi.coeffs, g, ref_grid) - ref_state.phi.coeffs
        dpsi = embed_coeffs(state.psi.coeffs, g, ref_grid) - ref_state.psi.coeffs
        rows.append(RefinementRow(
            study="modes",
            value=float(n),
            err_phi=float(np.linalg.norm(dphi)),
            err_psi=float(np.linalg.norm(dpsi)),
            residual_geomean=res_geo,
        ))
    orders = tuple(
        float(np.log2(rows[i].err_phi / max(rows[i + 1].err_phi, 1e-300)))
        for i in range(len(rows) - 1)
    )
    return RefinementReport(tuple(rows), orders, tuple())
