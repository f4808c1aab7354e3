"""Energy, dissipation, the energy-identity residual, and V' metrics.

The continuous system satisfies

    d/dt E(phi, psi) + |grad mu|^2 + |grad psi|^2 + int p(phi)(mu - psi)^2 = 0,
    E(phi, psi) = 1/2 |grad phi|^2 + 1/2 |psi|^2 + int F(phi),

and conserves the total mass mean(phi) + mean(psi). These functions compute
the discrete counterparts spectrally: |grad u|^2 = sum (lambda_k - 1) u_k^2,
dual norms |u|_{V'}^2 = sum u_k^2 / lambda_k, and int F(phi) by midpoint
quadrature at the collocation nodes. The dissipation convention evaluates mu
at the post-step state with the full F' (not the scheme's lagged split), so
the residual measures the scheme against the continuous identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .basis import Grid, coeffs_to_nodal, nodal_to_coeffs


@dataclass(frozen=True)
class EnergyBreakdown:
    grad_phi_half: float
    psi_half: float
    f_integral: float
    total: float


class DissipationParts(NamedTuple):
    grad_mu_sq: float
    grad_psi_sq: float
    source: float

    @property
    def total(self) -> float:
        return self.grad_mu_sq + self.grad_psi_sq + self.source


@dataclass(frozen=True)
class DualDistance:
    phi_dual: float
    psi_dual: float
    phi_v_l2t: float = 0.0
    psi_l2t: float = 0.0

    @property
    def combined(self) -> float:
        """The uniqueness estimate's left-hand side at time t."""
        return self.phi_dual + self.psi_dual + self.phi_v_l2t + self.psi_l2t


def energy_arrays(phi_hat: np.ndarray, psi_hat: np.ndarray, grid: Grid, pot) -> EnergyBreakdown:
    kappa = grid.lambdas - 1.0
    grad_half = 0.5 * float((kappa * phi_hat**2).sum())
    psi_half = 0.5 * float((psi_hat**2).sum())
    phi_nodal = coeffs_to_nodal(phi_hat, grid)
    f_int = grid.quad_weight * float(np.sum(pot.value(phi_nodal)))
    return EnergyBreakdown(grad_half, psi_half, f_int, grad_half + psi_half + f_int)


def dissipation_arrays(phi_hat: np.ndarray, psi_hat: np.ndarray, grid: Grid,
                       pot, prolif) -> DissipationParts:
    kappa = grid.lambdas - 1.0
    phi_nodal = coeffs_to_nodal(phi_hat, grid)
    mu_hat = kappa * phi_hat + nodal_to_coeffs(pot.prime(phi_nodal), grid)
    grad_mu_sq = float((kappa * mu_hat**2).sum())
    grad_psi_sq = float((kappa * psi_hat**2).sum())
    mu_nodal = coeffs_to_nodal(mu_hat, grid)
    psi_nodal = coeffs_to_nodal(psi_hat, grid)
    source = grid.quad_weight * float(
        np.sum(prolif.p(phi_nodal) * (mu_nodal - psi_nodal) ** 2)
    )
    return DissipationParts(grad_mu_sq, grad_psi_sq, source)


def energy(state, pot) -> EnergyBreakdown:
    """E = 1/2 |grad phi|^2 + 1/2 |psi|^2 + int F(phi)."""
    return energy_arrays(state.phi.coeffs, state.psi.coeffs, state.grid, pot)


def dissipation(state, pot, prolif) -> DissipationParts:
    return dissipation_arrays(state.phi.coeffs, state.psi.coeffs, state.grid, pot, prolif)


def energy_identity_residual(before, after, pot, prolif, dt: float | None = None) -> float:
    """| [E(after) - E(before)] / dt + D(after) | for consecutive states.

    D is the full dissipation |grad mu|^2 + |grad psi|^2 + int p (mu - psi)^2
    evaluated at the post-step state. O(dt) for the first-order scheme.
    """
    if dt is None:
        dt = after.t - before.t
    if dt <= 0:
        raise ValueError(f"states must be one positive step apart, got dt = {dt}")
    e0 = energy(before, pot).total
    e1 = energy(after, pot).total
    d1 = dissipation(after, pot, prolif).total
    return abs((e1 - e0) / dt + d1)


def dual_distance(a, b) -> DualDistance:
    """Instantaneous V' distances between two states on one grid."""
    if a.grid != b.grid:
        raise ValueError("states live on different grids")
    lam = a.grid.lambdas
    dphi = b.phi.coeffs - a.phi.coeffs
    dpsi = b.psi.coeffs - a.psi.coeffs
    return DualDistance(
        phi_dual=float(np.sqrt((dphi**2 / lam).sum())),
        psi_dual=float(np.sqrt((dpsi**2 / lam).sum())),
    )


def v_norm_sq(coeffs: np.ndarray, grid: Grid) -> float:
    return float((grid.lambdas * coeffs**2).sum())


def h3_proxy(coeffs: np.ndarray, grid: Grid) -> float:
    """Spectral moment sum lambda_k^3 u_k^2, the computable H^3 surrogate."""
    return float((grid.lambdas**3 * coeffs**2).sum())
