"""Cosine eigenbasis of the shifted Neumann Laplacian A = -lap + I on a box.

On an axis-aligned box the eigenfunctions of A with no-flux boundary
conditions are tensor products of cosines,

    w_k(x) = prod_i c(k_i) cos(k_i pi x_i / L_i),    A w_k = lambda_k w_k,
    lambda_k = 1 + sum_i (k_i pi / L_i)^2,

with c chosen so that {w_k} is orthonormal in L2. Collocation at the
midpoint nodes x_j = L (j + 1/2) / N makes the discrete transform an exact
L2 projection onto the resolved modes (DCT-II/III pair), so nodal -> spectral
-> nodal round-trips to machine precision.

Everything here is a pure function of its inputs; fields are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
import scipy.fft


class ShapeError(ValueError):
    """Nodal or coefficient array does not match the grid."""


def _as_tuple(values, kind) -> tuple:
    if np.isscalar(values):
        values = (values,)
    return tuple(kind(v) for v in values)


@dataclass(frozen=True)
class Grid:
    """Axis-aligned box with a per-axis cosine mode truncation.

    extents: box side lengths L_i > 0.
    modes:   per-axis truncation N_i >= 2; total basis size is prod(N_i) and
             the collocation nodes are the midpoints x_j = L (j + 1/2) / N.
    """

    extents: tuple[float, ...]
    modes: tuple[int, ...]

    def __init__(self, extents: Sequence[float] | float, modes: Sequence[int] | int):
        object.__setattr__(self, "extents", _as_tuple(extents, float))
        object.__setattr__(self, "modes", _as_tuple(modes, int))
        if len(self.extents) != len(self.modes):
            raise ShapeError(
                f"extents ({len(self.extents)}) and modes ({len(self.modes)}) differ in length"
            )
        if self.dim not in (1, 2, 3):
            raise ShapeError(f"dim must be 1, 2 or 3, got {self.dim}")
        if any(L <= 0 for L in self.extents):
            raise ValueError(f"extents must be positive, got {self.extents}")
        if any(N < 2 for N in self.modes):
            raise ValueError(f"modes must be >= 2 per axis, got {self.modes}")

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.modes

    @property
    def size(self) -> int:
        return int(np.prod(self.modes))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    @property
    def quad_weight(self) -> float:
        # midpoint rule: uniform weight |Omega| / prod(N_i)
        return self.volume / self.size

    def axis_nodes(self, axis: int) -> np.ndarray:
        L, N = self.extents[axis], self.modes[axis]
        return L * (np.arange(N) + 0.5) / N

    def nodes(self) -> tuple[np.ndarray, ...]:
        """Meshgrid ('ij') of collocation nodes, one array per axis."""
        return tuple(np.meshgrid(*(self.axis_nodes(i) for i in range(self.dim)), indexing="ij"))

    @cached_property
    def lambdas(self) -> np.ndarray:
        """Eigenvalues of A, shaped like a coefficient array."""
        axes = []
        for L, N in zip(self.extents, self.modes):
            axes.append((np.arange(N) * np.pi / L) ** 2)
        lam = np.zeros(self.modes)
        for i, a in enumerate(axes):
            shape = [1] * self.dim
            shape[i] = self.modes[i]
            lam = lam + a.reshape(shape)
        lam = lam + 1.0
        lam.flags.writeable = False
        return lam

    @cached_property
    def _fwd_scale(self) -> np.ndarray:
        # nodal -> spectral: coeffs = dctn(u, type=2) * scale
        factors = []
        for L, N in zip(self.extents, self.modes):
            c = np.full(N, np.sqrt(2.0 / L))
            c[0] = np.sqrt(1.0 / L)
            factors.append(c * L / (2.0 * N))
        return _outer(factors)

    @cached_property
    def _inv_scale(self) -> np.ndarray:
        # spectral -> nodal: u = dctn(coeffs * scale, type=3)
        factors = []
        for L, N in zip(self.extents, self.modes):
            c = np.full(N, np.sqrt(2.0 / L) / 2.0)
            c[0] = np.sqrt(1.0 / L)
            factors.append(c)
        return _outer(factors)


def _outer(factors: list[np.ndarray]) -> np.ndarray:
    out = factors[0]
    for f in factors[1:]:
        out = np.multiply.outer(out, f)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class EigenvalueTable:
    """Eigenvalues lambda_k of A, indexed like coefficient arrays."""

    grid: Grid
    lam: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "lam", self.grid.lambdas)


@dataclass(frozen=True)
class SpectralField:
    """Coefficients of u = sum_k u_k w_k on a grid's cosine basis."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=float)
        if arr.shape != self.grid.shape:
            if arr.size == self.grid.size:
                arr = arr.reshape(self.grid.shape)
            else:
                raise ShapeError(
                    f"coefficient array of size {arr.size} does not match grid size {self.grid.size}"
                )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)


class FieldNorms(NamedTuple):
    l2: float
    v: float
    v_dual: float
    mean: float


# low-level transforms on raw arrays (dynamics hot path); public ops wrap these


def nodal_to_coeffs(nodal: np.ndarray, grid: Grid) -> np.ndarray:
    return scipy.fft.dctn(nodal, type=2) * grid._fwd_scale


def coeffs_to_nodal(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    return scipy.fft.dctn(coeffs * grid._inv_scale, type=3)


def to_spectral(nodal: np.ndarray, grid: Grid) -> SpectralField:
    """L2-orthogonal projection of nodal samples onto the cosine basis."""
    nodal = np.asarray(nodal, dtype=float)
    if nodal.shape != grid.shape:
        if nodal.size != grid.size:
            raise ShapeError(
                f"nodal array of size {nodal.size} does not match grid size {grid.size}"
            )
        nodal = nodal.reshape(grid.shape)
    return SpectralField(grid, nodal_to_coeffs(nodal, grid))


def from_spectral(u: SpectralField) -> np.ndarray:
    """Nodal samples of the field at the collocation nodes."""
    return coeffs_to_nodal(u.coeffs, u.grid)


def apply_A(u: SpectralField) -> SpectralField:
    """A u = -lap u + u, diagonal in the eigenbasis."""
    return SpectralField(u.grid, u.coeffs * u.grid.lambdas)


def apply_A_inv(u: SpectralField) -> SpectralField:
    return SpectralField(u.grid, u.coeffs / u.grid.lambdas)


def apply_neg_laplacian(u: SpectralField) -> SpectralField:
    """-lap u; eigenvalue lambda_k - 1 (zero on the constant mode)."""
    return SpectralField(u.grid, u.coeffs * (u.grid.lambdas - 1.0))


def norms(u: SpectralField) -> FieldNorms:
    """L2, V = H1, dual V' norms and the spatial mean.

    l2^2 = sum u_k^2, v^2 = sum lambda_k u_k^2, v_dual^2 = sum u_k^2 / lambda_k,
    mean = u_0 / sqrt(|Omega|).
    """
    c2 = u.coeffs**2
    lam = u.grid.lambdas
    zero = (0,) * u.grid.dim
    return FieldNorms(
        l2=float(np.sqrt(c2.sum())),
        v=float(np.sqrt((lam * c2).sum())),
        v_dual=float(np.sqrt((c2 / lam).sum())),
        mean=float(u.coeffs[zero] / np.sqrt(u.grid.volume)),
    )


def mean_value(coeffs: np.ndarray, grid: Grid) -> float:
    zero = (0,) * grid.dim
    return float(coeffs[zero] / np.sqrt(grid.volume))


def constant_field(grid: Grid, value: float) -> SpectralField:
    coeffs = np.zeros(grid.shape)
    coeffs[(0,) * grid.dim] = value * np.sqrt(grid.volume)
    return SpectralField(grid, coeffs)


def dealias_mask(grid: Grid) -> np.ndarray:
    """2/3-rule mask: True on kept (low) modes, per axis k_i < 2 N_i / 3."""
    keep = np.ones(grid.shape, dtype=bool)
    for i, N in enumerate(grid.modes):
        cut = (2 * N) // 3
        idx = np.arange(N) < cut
        shape = [1] * grid.dim
        shape[i] = N
        keep = keep & idx.reshape(shape)
    return keep


def evaluate_modes(grid: Grid, coeffs: np.ndarray, points: Sequence[np.ndarray]) -> np.ndarray:
    """Direct cosine-sum evaluation at arbitrary points (oracle-grade, O(N * P))."""
    coeffs = np.asarray(coeffs).reshape(grid.shape)
    pts = [np.asarray(p, dtype=float).ravel() for p in points]
    npts = pts[0].size
    out = np.zeros(npts)
    for k in np.ndindex(*grid.shape):
        w = np.ones(npts)
        for i, (L, ki) in enumerate(zip(grid.extents, k)):
            c = np.sqrt(1.0 / L) if ki == 0 else np.sqrt(2.0 / L)
            w *= c * np.cos(ki * np.pi * pts[i] / L)
        out += coeffs[k] * w
    return out
