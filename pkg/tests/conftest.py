"""Shared fixtures and the dense-matrix reference implementation of the scheme.

The dense oracle rebuilds the identical semi-implicit step from explicit
basis matrices and numpy.linalg.solve, sharing no code with the production
spectral path; it is the independent side of the oracle-equivalence checks.
"""

import numpy as np
import pytest

from chtumor.basis import Grid


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def dense_matrices(grid: Grid):
    """Explicit 1-D basis matrices: B maps coeffs -> nodal, F nodal -> coeffs."""
    assert grid.dim == 1
    L, N = grid.extents[0], grid.modes[0]
    j = np.arange(N)
    k = np.arange(N)
    c = np.where(k == 0, np.sqrt(1.0 / L), np.sqrt(2.0 / L))
    B = c[None, :] * np.cos(np.outer((j + 0.5) * np.pi / N, k))
    F = (L / N) * B.T
    kap = (k * np.pi / L) ** 2
    return B, F, kap


def dense_step(phi0, psi0, grid, pot, pf, dt, newton_tol=1e-13):
    """One scheme step via dense linear algebra (independent of chtumor.dynamics)."""
    B, F, kap = dense_matrices(grid)
    N = grid.modes[0]
    K = np.diag(kap)
    phi_nodal = B @ phi0
    mu0 = kap * phi0 + F @ pot.prime(phi_nodal)
    S0 = F @ (pf.p(phi_nodal) * (B @ psi0 - B @ mu0))
    psi1 = (psi0 - dt * S0) / (1.0 + dt * kap)
    b = phi0 + dt * S0
    lam_expl = F @ pot.pert_prime(phi_nodal)
    phi = phi0.copy()
    for _ in range(100):
        G = phi + dt * kap * (kap * phi + F @ pot.convex_prime(B @ phi) + lam_expl) - b
        if np.linalg.norm(G) < newton_tol:
            break
        J = np.eye(N) + dt * K @ K + dt * K @ (F @ np.diag(pot.convex_second(B @ phi)) @ B)
        phi = phi - np.linalg.solve(J, G)
    return phi, psi1
