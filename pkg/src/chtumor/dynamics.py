"""Coupled time integrator for the tumor-fraction / nutrient system.

Continuous model: phi_t = lap(mu) + p(phi)(psi - mu), mu = -lap(phi) + F'(phi),
psi_t = lap(psi) - p(phi)(psi - mu), all with no-flux boundaries.

One step of the first-order convex-splitting scheme (tau = dt, S^n evaluated
at the step start so the total mass cancels exactly between the updates):

    (phi1 - phi0)/tau = lap_h mu1 + P_h S0,        S0 = p(phi0)(psi0 - mu0)
    mu1 = -lap_h phi1 + P_h F0'(phi1) + P_h lam'(phi0)
    (psi1 - psi0)/tau = lap_h psi1 - P_h S0

The psi update is a diagonal solve in coefficient space. The phi update is a
nonlinear solve: Newton on nodal values with matrix-free spectral operators,
or a damped fixed-point sweep. With K = -lap_h (diagonal, >= 0) the Newton
system (I + tau K^2 + tau K D) delta = -G is nonsymmetric, but on the
zero-mean subspace the substitution delta = K^(1/2) eta turns it into the SPD
system (I + tau K^2 + tau K^(1/2) D K^(1/2)) eta = K^(-1/2)(-G), solved here
by diagonally preconditioned CG; the mean mode is pinned exactly from the
scheme's own mass identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse.linalg

from . import diagnostics
from .basis import (
    Grid,
    SpectralField,
    coeffs_to_nodal,
    dealias_mask,
    mean_value,
    nodal_to_coeffs,
)


class StepError(RuntimeError):
    """Inner nonlinear solve failed; carries the last residual and time."""

    def __init__(self, message: str, residual: float, t: float):
        super().__init__(message)
        self.residual = residual
        self.t = t


@dataclass(frozen=True)
class SimState:
    phi: SpectralField
    psi: SpectralField
    t: float

    def __post_init__(self):
        if self.phi.grid != self.psi.grid:
            raise ValueError("phi and psi must share one grid")

    @property
    def grid(self) -> Grid:
        return self.phi.grid


@dataclass(frozen=True)
class SchemeConfig:
    potential: object          # SplitPotential or YosidaPotential
    prolif: object             # ProliferationFn
    dt: float
    t_end: float
    nonlinear: str = "newton"
    tol_n: float = 1e-10
    max_iter: int = 50
    dealias: bool = False
    implicit_mu_source: bool = False
    cg_rtol: float = 1e-8
    cg_max_iter: int = 500

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (0.0 < self.tol_n <= 1e-6):
            raise ValueError(f"tol_n must lie in (0, 1e-6], got {self.tol_n}")
        if self.max_iter < 10:
            raise ValueError(f"max_iter must be >= 10, got {self.max_iter}")
        if self.nonlinear not in ("newton", "fixed_point"):
            raise ValueError(f"nonlinear must be 'newton' or 'fixed_point', got {self.nonlinear!r}")


@dataclass(frozen=True)
class StepReport:
    energy: float
    dissipation: float          # |grad mu|^2 + |grad psi|^2 at the post-step state
    source_dissipation: float   # int p(phi) (mu - psi)^2 at the post-step state
    mass: float
    energy_identity_residual: float
    inner_iters: int
    inner_residual: float


class _Ops:
    """Per-grid spectral operator bundle shared across steps."""

    def __init__(self, grid: Grid, dealias: bool):
        self.grid = grid
        self.zero = (0,) * grid.dim
        self.kappa = grid.lambdas - 1.0
        self.sqk = np.sqrt(self.kappa)
        safe = np.where(self.kappa > 0.0, self.sqk, 1.0)
        self.inv_sqk = np.where(self.kappa > 0.0, 1.0 / safe, 0.0)
        self.mask = dealias_mask(grid) if dealias else None

    def fwd(self, nodal):
        return nodal_to_coeffs(nodal, self.grid)

    def inv(self, coeffs):
        return coeffs_to_nodal(coeffs, self.grid)

    def project(self, nodal):
        c = self.fwd(nodal)
        if self.mask is not None:
            c = np.where(self.mask, c, 0.0)
        return c


def chemical_potential(phi: SpectralField, pot) -> SpectralField:
    """mu = -lap phi + F'(phi), with F' evaluated at nodes and projected."""
    nodal = coeffs_to_nodal(phi.coeffs, phi.grid)
    if not np.all(np.isfinite(nodal)):
        raise ValueError("phi has non-finite nodal values")
    mu = (phi.grid.lambdas - 1.0) * phi.coeffs + nodal_to_coeffs(pot.prime(nodal), phi.grid)
    return SpectralField(phi.grid, mu)


def _l2(c: np.ndarray) -> float:
    return float(np.sqrt(np.vdot(c, c).real))


def _pcg(matvec, b, inv_diag, rtol, max_iter):
    """Preconditioned CG; returns (x, iterations). b = 0 short-circuits."""
    x = np.zeros_like(b)
    bnorm = _l2(b)
    if bnorm == 0.0:
        return x, 0
    r = b.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(np.vdot(r, z).real)
    for it in range(max_iter):
        Ap = matvec(p)
        pAp = float(np.vdot(p, Ap).real)
        if pAp <= 0.0:
            break  # loss of positive definiteness; return current iterate
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if _l2(r) <= rtol * bnorm:
            return x, it + 1
        z = inv_diag * r
        rz_new = float(np.vdot(r, z).real)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, max_iter


class _PhiSolve:
    """Residual machinery for the implicit phi update.

    G(phi) = phi + tau K (K phi + P_h F0'(phi) + lam_expl) - b,
    b = phi^n + tau S_hat. All arguments are coefficient arrays.
    """

    def __init__(self, ops: _Ops, cfg: SchemeConfig, dt: float, b: np.ndarray, lam_expl: np.ndarray):
        self.ops = ops
        self.cfg = cfg
        self.dt = dt
        self.b = b
        self.lam_expl = lam_expl
        self.denom = 1.0 + dt * ops.kappa**2

    def residual(self, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ops = self.ops
        nodal = ops.inv(phi)
        n_term = ops.project(self.cfg.potential.convex_prime(nodal))
        G = phi + self.dt * ops.kappa * (ops.kappa * phi + n_term + self.lam_expl) - self.b
        return G, nodal

    def newton_direction(self, G: np.ndarray, nodal: np.ndarray) -> np.ndarray:
        ops, dt = self.ops, self.dt
        w2 = self.cfg.potential.convex_second(nodal)
        rhs = -G.copy()
        rhs[ops.zero] = 0.0
        b_eta = ops.inv_sqk * rhs
        w2_mean = float(np.mean(w2))
        inv_diag = 1.0 / (self.denom + dt * ops.kappa * w2_mean)

        def matvec(eta):
            z = ops.sqk * eta
            if ops.mask is not None:
                z = np.where(ops.mask, z, 0.0)
            dz = ops.project(w2 * ops.inv(z))
            out = self.denom * eta + dt * ops.sqk * dz
            out[ops.zero] = 0.0
            return out

        eta, _ = _pcg(matvec, b_eta, inv_diag, self.cfg.cg_rtol, self.cfg.cg_max_iter)
        return ops.sqk * eta


def _solve_phi(phi0: np.ndarray, b: np.ndarray, lam_expl: np.ndarray,
               ops: _Ops, cfg: SchemeConfig, dt: float, t: float) -> tuple[np.ndarray, int, float]:
    solver = _PhiSolve(ops, cfg, dt, b, lam_expl)
    phi = phi0.copy()
    phi[ops.zero] = b[ops.zero]  # mass identity pins the mean exactly
    G, nodal = solver.residual(phi)
    res = _l2(G)
    iters = 0
    use_newton = cfg.nonlinear == "newton"

    while res > cfg.tol_n and iters < cfg.max_iter:
        if use_newton:
            delta = solver.newton_direction(G, nodal)
        else:
            delta = -G / solver.denom  # preconditioned Richardson sweep
        accepted = False
        scale = 1.0
        for _ in range(8):
            cand = phi + scale * delta
            cand[ops.zero] = b[ops.zero]
            G_c, nodal_c = solver.residual(cand)
            res_c = _l2(G_c)
            if res_c < res:
                phi, G, nodal, res = cand, G_c, nodal_c, res_c
                accepted = True
                break
            scale *= 0.5
        iters += 1
        if not accepted:
            if use_newton:
                use_newton = False  # stagnation: damped fixed-point fallback
                continue
            break

    if res > cfg.tol_n:
        raise StepError(
            f"inner solve did not reach tol {cfg.tol_n:g} at t = {t:g} (residual {res:.3e})",
            residual=res, t=t,
        )
    return phi, iters, res


def _solve_phi_implicit_source(phi0, psi_nodal, p_nodal, b_base, lam_expl,
                               ops: _Ops, cfg: SchemeConfig, dt: float, t: float):
    """Variant with S = p(phi^n)(psi^n - mu^{n+1}): mu is implicit in the source.

    The Jacobian gains tau (K + P)(K + D)-type terms without a K^(1/2)
    symmetrization, so the Newton step uses matrix-free lgmres instead of CG.
    Returns (phi1, S_hat1, iters, res) where S_hat1 reuses the implicit mu so
    the psi update cancels the source exactly.
    """
    pot = cfg.potential
    denom = 1.0 + dt * ops.kappa**2

    def mu_and_source(phi):
        nodal = ops.inv(phi)
        mu_hat = ops.kappa * phi + ops.project(pot.convex_prime(nodal)) + lam_expl
        s_hat = ops.project(p_nodal * (psi_nodal - ops.inv(mu_hat)))
        return nodal, mu_hat, s_hat

    def residual(phi):
        nodal, mu_hat, s_hat = mu_and_source(phi)
        G = phi + dt * ops.kappa * mu_hat - dt * s_hat - b_base
        return G, nodal, s_hat

    phi = phi0.copy()
    G, nodal, s_hat = residual(phi)
    res = _l2(G)
    iters = 0
    n = phi.size
    shape = phi.shape

    while res > cfg.tol_n and iters < cfg.max_iter:
        w2 = pot.convex_second(nodal)

        def jac_mv(v_flat):
            v = v_flat.reshape(shape)
            dmu = ops.kappa * v + ops.project(w2 * ops.inv(v))
            dS = ops.project(-p_nodal * ops.inv(dmu))
            return (v + dt * ops.kappa * dmu - dt * dS).ravel()

        op = scipy.sparse.linalg.LinearOperator((n, n), matvec=jac_mv)
        pre = scipy.sparse.linalg.LinearOperator(
            (n, n), matvec=lambda v: (v.reshape(shape) / denom).ravel()
        )
        delta_flat, _ = scipy.sparse.linalg.lgmres(
            op, -G.ravel(), M=pre, rtol=cfg.cg_rtol, atol=0.0, maxiter=cfg.cg_max_iter
        )
        delta = delta_flat.reshape(shape)
        accepted = False
        scale = 1.0
        for _ in range(8):
            cand = phi + scale * delta
            G_c, nodal_c, s_c = residual(cand)
            res_c = _l2(G_c)
            if res_c < res:
                phi, G, nodal, s_hat, res = cand, G_c, nodal_c, s_c, res_c
                accepted = True
                break
            scale *= 0.5
        iters += 1
        if not accepted:
            break

    if res > cfg.tol_n:
        raise StepError(
            f"implicit-source inner solve stalled at t = {t:g} (residual {res:.3e})",
            residual=res, t=t,
        )
    return phi, s_hat, iters, res


def _advance(phi_hat, psi_hat, ops: _Ops, cfg: SchemeConfig, dt: float, t: float):
    """One scheme step on raw coefficient arrays."""
    pot, pf = cfg.potential, cfg.prolif
    phi_nodal = ops.inv(phi_hat)
    if not np.all(np.isfinite(phi_nodal)):
        raise StepError(f"non-finite state at t = {t:g}", residual=float("inf"), t=t)
    psi_nodal = ops.inv(psi_hat)
    mu_hat = ops.kappa * phi_hat + ops.project(pot.prime(phi_nodal))
    p_nodal = pf.p(phi_nodal)
    lam_expl = ops.project(pot.pert_prime(phi_nodal))

    if cfg.implicit_mu_source:
        b_base = phi_hat.copy()
        phi1, s_hat, iters, res = _solve_phi_implicit_source(
            phi_hat, psi_nodal, p_nodal, b_base, lam_expl, ops, cfg, dt, t
        )
        psi1 = (psi_hat - dt * s_hat) / (1.0 + dt * ops.kappa)
    else:
        s_hat = ops.project(p_nodal * (psi_nodal - ops.inv(mu_hat)))
        psi1 = (psi_hat - dt * s_hat) / (1.0 + dt * ops.kappa)
        b = phi_hat + dt * s_hat
        phi1, iters, res = _solve_phi(phi_hat, b, lam_expl, ops, cfg, dt, t)
    return phi1, psi1, iters, res


def _make_report(phi1, psi1, grid, cfg, energy_before, dt, iters, res) -> StepReport:
    parts = diagnostics.energy_arrays(phi1, psi1, grid, cfg.potential)
    diss = diagnostics.dissipation_arrays(phi1, psi1, grid, cfg.potential, cfg.prolif)
    energy_after = parts.total
    residual = abs((energy_after - energy_before) / dt + diss.total)
    mass = mean_value(phi1, grid) + mean_value(psi1, grid)
    return StepReport(
        energy=energy_after,
        dissipation=diss.grad_mu_sq + diss.grad_psi_sq,
        source_dissipation=diss.source,
        mass=mass,
        energy_identity_residual=residual,
        inner_iters=iters,
        inner_residual=res,
    )


def step(state: SimState, cfg: SchemeConfig) -> tuple[SimState, StepReport]:
    """Advance one step of size cfg.dt; raises StepError on solver failure."""
    ops = _Ops(state.grid, cfg.dealias)
    energy_before = diagnostics.energy_arrays(
        state.phi.coeffs, state.psi.coeffs, state.grid, cfg.potential
    ).total
    phi1, psi1, iters, res = _advance(
        state.phi.coeffs, state.psi.coeffs, ops, cfg, cfg.dt, state.t
    )
    new_state = SimState(SpectralField(state.grid, phi1), SpectralField(state.grid, psi1),
                         state.t + cfg.dt)
    report = _make_report(phi1, psi1, state.grid, cfg, energy_before, cfg.dt, iters, res)
    return new_state, report


MAX_DT_HALVINGS = 5

Observer = Callable[[int, SimState, StepReport], None]


@dataclass(frozen=True)
class StepRecord:
    t: float
    report: StepReport


def run(initial: SimState, cfg: SchemeConfig,
        observers: Sequence[Observer] = ()) -> list[StepRecord]:
    """Integrate to cfg.t_end on the fixed dt grid.

    A failing interval is retried with halved substeps (up to 2^5); reports
    stay on the original dt grid. Deterministic for a fixed config.
    """
    span = cfg.t_end - initial.t
    if span < 0:
        raise ValueError("t_end must be >= initial time")
    n_steps = int(round(span / cfg.dt))
    if abs(n_steps * cfg.dt - span) > 1e-9 * max(cfg.dt, abs(span)):
        raise ValueError("t_end - t0 must be an integer multiple of dt")

    ops = _Ops(initial.grid, cfg.dealias)
    grid = initial.grid
    phi, psi = initial.phi.coeffs, initial.psi.coeffs
    energy_before = diagnostics.energy_arrays(phi, psi, grid, cfg.potential).total
    records: list[StepRecord] = []

    for i in range(n_steps):
        t_i = initial.t + i * cfg.dt
        phi1 = psi1 = None
        iters_total, worst_res = 0, 0.0
        last_err: StepError | None = None
        for halving in range(MAX_DT_HALVINGS + 1):
            sub_dt = cfg.dt / (1 << halving)
            try:
                p_c, s_c = phi, psi
                iters_total, worst_res = 0, 0.0
                for j in range(1 << halving):
                    p_c, s_c, it, res = _advance(p_c, s_c, ops, cfg, sub_dt, t_i + j * sub_dt)
                    iters_total += it
                    worst_res = max(worst_res, res)
                phi1, psi1 = p_c, s_c
                break
            except StepError as err:
                last_err = err
        if phi1 is None:
            raise StepError(
                f"step failed at t = {t_i:g} after {MAX_DT_HALVINGS} dt-halvings: {last_err}",
                residual=last_err.residual if last_err else float("nan"), t=t_i,
            )
        phi, psi = phi1, psi1
        report = _make_report(phi, psi, grid, cfg, energy_before, cfg.dt, iters_total, worst_res)
        energy_before = report.energy
        records.append(StepRecord(t=t_i + cfg.dt, report=report))
        if observers:
            state = SimState(SpectralField(grid, phi), SpectralField(grid, psi), t_i + cfg.dt)
            for obs in observers:
                obs(i + 1, state, report)

    return records


def final_state(initial: SimState, cfg: SchemeConfig) -> tuple[SimState, list[StepRecord]]:
    """run() plus the end state, for callers that need the fields."""
    holder: dict = {}

    def keep(_i, state, _report):
        holder["state"] = state

    records = run(initial, cfg, observers=(keep,))
    return holder.get("state", initial), records


def noisy_state(grid: Grid, phi_mean: float, noise_amp: float, seed: int,
                psi_value: float, t: float = 0.0) -> SimState:
    """phi = mean + seeded uniform noise in [-amp, amp] at nodes; psi constant."""
    rng = np.random.default_rng(seed)
    phi_nodal = phi_mean + noise_amp * rng.uniform(-1.0, 1.0, size=grid.shape)
    phi = SpectralField(grid, nodal_to_coeffs(phi_nodal, grid))
    psi_coeffs = np.zeros(grid.shape)
    psi_coeffs[(0,) * grid.dim] = psi_value * np.sqrt(grid.volume)
    return SimState(phi, SpectralField(grid, psi_coeffs), t)
