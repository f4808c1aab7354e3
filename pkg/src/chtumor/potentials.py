"""Split potentials F = F0 + lam and their Yosida-regularized family F_m.

F0 is the convex part (F0'' >= c1 > 0, normalized so F0(0) = F0'(0) = 0) and
lam a bounded-curvature perturbation (|lam''| <= alpha). The regularization
replaces H0 = F0' by the Lipschitz function

    H0m(s) = m (s - Jm(s)),    Jm(s) = (I + H0/m)^(-1)(s),

and integrates it in closed form,

    F0m(s) = H0m(s)^2 / (2m) + F0(Jm(s)),
    F0m''(s) = F0''(Jm(s)) / (1 + F0''(Jm(s)) / m),

so F_m = F0m + lam needs no quadrature. Equi-coercivity F_m(s) >= s^2 - C
kicks in at the threshold index m0 = 16 (1 + alpha).

All callables are vectorized over numpy arrays. Assumption checks are
sample-based sweeps on [-S, S]; they return reports rather than raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

ScalarFn = Callable[[np.ndarray], np.ndarray]

SLACK_TOL = -1e-10


class ResolventError(RuntimeError):
    """Resolvent root-finding failed to converge."""


class PotentialValues(NamedTuple):
    F: float
    Fp: float
    Fpp: float


@dataclass(frozen=True)
class CheckResult:
    name: str
    slack: float        # min over samples of (bound - quantity); >= ~0 means holds
    worst_s: float
    passed: bool
    skipped: bool = False
    note: str = ""


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple[CheckResult, ...]
    passed: bool
    extra: dict = field(default_factory=dict)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _worst(values: np.ndarray, s: np.ndarray) -> tuple[float, float]:
    i = int(np.argmin(values))
    return float(values[i]), float(s[i])


def _check(name: str, margin: np.ndarray, s: np.ndarray, note: str = "") -> CheckResult:
    slack, worst_s = _worst(margin, s)
    return CheckResult(name, slack, worst_s, passed=slack >= SLACK_TOL, note=note)


@dataclass(frozen=True)
class SplitPotential:
    """Potential F = F0 + lam with the growth data of assumption (F).

    f0, f0p, f0pp: convex part and derivatives; lam, lamp, lampp likewise.
    rho in [2, 6) is the growth exponent, alpha bounds |lam''|, and c1..c4
    are the constants of (F1)/(F2).
    """

    f0: ScalarFn
    f0p: ScalarFn
    f0pp: ScalarFn
    lam: ScalarFn
    lamp: ScalarFn
    lampp: ScalarFn
    rho: float
    alpha: float
    c1: float
    c2: float
    c3: float
    c4: float
    name: str = "custom"

    def __post_init__(self):
        if not (2.0 <= self.rho < 6.0):
            raise ValueError(f"rho must lie in [2, 6), got {self.rho}")
        if self.alpha < 0 or self.c1 <= 0 or self.c2 <= 0 or self.c3 <= 0:
            raise ValueError("need alpha >= 0 and c1, c2, c3 > 0")
        if abs(float(self.f0(0.0))) > 1e-14 or abs(float(self.f0p(0.0))) > 1e-14:
            raise ValueError("convex part must be normalized: F0(0) = F0'(0) = 0")

    # full potential
    def value(self, s):
        return self.f0(s) + self.lam(s)

    def prime(self, s):
        return self.f0p(s) + self.lamp(s)

    def second(self, s):
        return self.f0pp(s) + self.lampp(s)

    # split pieces used by the semi-implicit scheme
    def convex_prime(self, s):
        return self.f0p(s)

    def convex_second(self, s):
        return self.f0pp(s)

    def pert_prime(self, s):
        return self.lamp(s)


def eval_F(pot: SplitPotential, s: float) -> PotentialValues:
    """Value and first two derivatives of F at a point."""
    if not np.isfinite(s):
        raise ValueError(f"potential argument must be finite, got {s}")
    return PotentialValues(float(pot.value(s)), float(pot.prime(s)), float(pot.second(s)))


def validate_F(pot: SplitPotential, S: float = 10.0, nsamples: int = 10_000) -> AssumptionReport:
    """Sweep the (F1), (F2) and |lam''| <= alpha inequalities on [-S, S]."""
    if S <= 0 or nsamples < 100:
        raise ValueError("need S > 0 and nsamples >= 100")
    s = np.linspace(-S, S, nsamples)
    growth = 1.0 + np.abs(s) ** (pot.rho - 2.0)
    f0pp = pot.f0pp(s)
    checks = (
        _check("F1_lower", f0pp - pot.c1 * growth, s),
        _check("F1_upper", pot.c2 * growth - f0pp, s),
        _check("F2_coercive", pot.value(s) - (pot.c3 * np.abs(s) - pot.c4), s),
        _check("lam_curvature", pot.alpha - np.abs(pot.lampp(s)), s),
    )
    # empirical c1_hat with F0 >= c1_hat (|s|^rho + s^2), fitted away from 0
    mask = np.abs(s) > 1e-8
    denom = np.abs(s[mask]) ** pot.rho + s[mask] ** 2
    c1_hat = float(np.min(pot.f0(s[mask]) / denom)) if mask.any() else float("nan")
    return AssumptionReport(checks, passed=all(c.passed for c in checks), extra={"c1_hat": c1_hat})


@dataclass(frozen=True)
class YosidaPotential:
    """Regularized potential F_m built from a SplitPotential."""

    base: SplitPotential
    m: float
    tol_r: float = 1e-12

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"regularization index m must be >= 1, got {self.m}")
        if not (0.0 < self.tol_r <= 1e-8):
            raise ValueError(f"tol_r must lie in (0, 1e-8], got {self.tol_r}")

    @property
    def m0(self) -> float:
        """Equi-coercivity threshold 16 (1 + alpha)."""
        return 16.0 * (1.0 + self.base.alpha)

    @property
    def name(self) -> str:
        return f"yosida(m={self.m:g}, base={self.base.name})"

    def resolvent(self, s):
        """Jm(s): the root r of r + F0'(r)/m = s (vectorized)."""
        scalar = np.isscalar(s)
        r = _resolvent_array(self.base.f0p, self.base.f0pp, self.m, np.asarray(s, float), self.tol_r)
        return float(r) if scalar else r

    def h0m(self, s):
        return self.m * (np.asarray(s, float) - self.resolvent(s))

    def value(self, s):
        s = np.asarray(s, float)
        r = self.resolvent(s)
        h = self.m * (s - r)
        return h * h / (2.0 * self.m) + self.base.f0(r) + self.base.lam(s)

    def prime(self, s):
        return self.h0m(s) + self.base.lamp(s)

    def second(self, s):
        r = self.resolvent(s)
        f0pp_r = self.base.f0pp(r)
        return f0pp_r / (1.0 + f0pp_r / self.m) + self.base.lampp(np.asarray(s, float))

    def convex_prime(self, s):
        return self.h0m(s)

    def convex_second(self, s):
        r = self.resolvent(s)
        f0pp_r = self.base.f0pp(r)
        return f0pp_r / (1.0 + f0pp_r / self.m)

    def pert_prime(self, s):
        return self.base.lamp(s)


def _resolvent_array(f0p, f0pp, m, s, tol, max_iter: int = 100):
    """Safeguarded Newton for g(r) = r + F0'(r)/m - s = 0, elementwise.

    H0 = F0' is strictly increasing with H0(0) = 0, so the root is bracketed
    by [min(0, s), max(0, s)]; Newton steps leaving the bracket fall back to
    bisection. g' >= 1, hence |g(r)| bounds the distance to the root and
    |g| <= tol is an absolute root tolerance.
    """
    shape = np.shape(s)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if not np.all(np.isfinite(s)):
        raise ValueError("resolvent argument must be finite")
    lo = np.minimum(0.0, s)
    hi = np.maximum(0.0, s)
    r = s.copy()
    for _ in range(max_iter):
        g = r + f0p(r) / m - s
        if np.all(np.abs(g) <= tol):
            break
        # keep the bracket g(lo) <= 0 <= g(hi) tight
        pos = g > 0
        hi = np.where(pos, r, hi)
        lo = np.where(pos, lo, r)
        gp = 1.0 + f0pp(r) / m
        cand = r - g / gp
        bad = ~np.isfinite(cand) | (cand < lo) | (cand > hi)
        cand = np.where(bad, 0.5 * (lo + hi), cand)
        # exact stagnation (rounding) also bisects
        stuck = (cand == r) & (np.abs(g) > tol)
        r = np.where(stuck, 0.5 * (lo + hi), cand)
    else:
        g = np.abs(r + f0p(r) / m - s)
        i = int(np.argmax(g))
        raise ResolventError(
            f"resolvent failed to converge: m={m}, s={s.flat[i]}, residual={g.flat[i]:.3e}"
        )
    return r.reshape(shape) if shape else r[0]


def resolvent(y: YosidaPotential, s: float) -> float:
    """Scalar Jm(s) with the finite-input contract."""
    if not np.isfinite(s):
        raise ValueError(f"resolvent argument must be finite, got {s}")
    return float(y.resolvent(float(s)))


def eval_Fm(y: YosidaPotential, s: float) -> PotentialValues:
    """Closed-form F_m, F_m' and F_m'' at a point (no quadrature)."""
    if not np.isfinite(s):
        raise ValueError(f"potential argument must be finite, got {s}")
    return PotentialValues(float(y.value(s)), float(y.prime(s)), float(y.second(s)))


def verify_lemma_bounds(y: YosidaPotential, S: float = 10.0, nsamples: int = 10_000) -> AssumptionReport:
    """Sampled bounds satisfied by the Yosida regularization on [-S, S].

    Checks |F0m'| <= |F0'|, F0m'' <= (c2/c1) F0'', F0m'' >= c1/(1+c1), and,
    for m >= m0 = 16(1+alpha), fits the equi-coercivity constant
    C = max(s^2 - F_m(s)). Below m0 the coercivity check is skipped.
    """
    if S <= 0 or nsamples < 100:
        raise ValueError("need S > 0 and nsamples >= 100")
    base = y.base
    s = np.linspace(-S, S, nsamples)
    r = y.resolvent(s)
    h0m = y.m * (s - r)
    f0pp_r = base.f0pp(r)
    f0m_pp = f0pp_r / (1.0 + f0pp_r / y.m)
    checks = [
        _check("convex_prime_dominated", np.abs(base.f0p(s)) - np.abs(h0m), s),
        _check("second_upper", (base.c2 / base.c1) * base.f0pp(s) - f0m_pp, s),
        _check("second_lower", f0m_pp - base.c1 / (1.0 + base.c1), s),
    ]
    extra: dict = {"m": y.m, "m0": y.m0}
    if y.m >= y.m0:
        fm = h0m * h0m / (2.0 * y.m) + base.f0(r) + base.lam(s)
        C = float(np.max(s**2 - fm))
        extra["coercivity_C"] = C
        checks.append(_check("equi_coercive", (fm + C) - s**2, s, note=f"C fitted = {C:.6g}"))
    else:
        checks.append(
            CheckResult("equi_coercive", float("nan"), float("nan"), passed=True, skipped=True,
                        note=f"below m0 = {y.m0:g}")
        )
    report_checks = tuple(checks)
    return AssumptionReport(report_checks, passed=all(c.passed for c in report_checks), extra=extra)


def pointwise_convergence(base: SplitPotential,
                          ms: tuple[float, ...] = (10.0, 100.0, 1000.0, 10000.0),
                          probes: tuple[float, ...] = (-3.0, -1.5, -0.5, 0.5, 1.5, 3.0)) -> dict:
    """|F_m(s) - F(s)| along an m ladder; monotone decrease at every probe."""
    s = np.asarray(probes, float)
    f_exact = base.value(s)
    gaps = np.array([np.abs(YosidaPotential(base, m=m).value(s) - f_exact) for m in ms])
    monotone = bool(np.all(np.diff(gaps, axis=0) <= 1e-14))
    return {
        "ms": tuple(ms),
        "probes": tuple(probes),
        "max_gap_per_m": tuple(float(g) for g in gaps.max(axis=1)),
        "gaps": gaps,
        "monotone": monotone,
    }


# built-in potentials


def double_well() -> SplitPotential:
    """F(s) = (1 - s^2)^2 / 4 split as F0 = s^4/4 + s^2/2, lam = 1/4 - s^2."""
    return SplitPotential(
        f0=lambda s: 0.25 * np.asarray(s, float) ** 4 + 0.5 * np.asarray(s, float) ** 2,
        f0p=lambda s: np.asarray(s, float) ** 3 + np.asarray(s, float),
        f0pp=lambda s: 3.0 * np.asarray(s, float) ** 2 + 1.0,
        lam=lambda s: 0.25 - np.asarray(s, float) ** 2,
        lamp=lambda s: -2.0 * np.asarray(s, float),
        lampp=lambda s: np.full_like(np.asarray(s, float), -2.0),
        rho=4.0,
        alpha=2.0,
        c1=1.0,
        c2=3.0,
        c3=0.5,
        c4=1.0,
        name="double_well",
    )


def quadratic(a: float = 1.0) -> SplitPotential:
    """Convex F(s) = a s^2 with lam = 0 (control case for contraction runs)."""
    if a <= 0:
        raise ValueError("quadratic coefficient must be positive")
    z = lambda s: np.zeros_like(np.asarray(s, float))
    return SplitPotential(
        f0=lambda s: a * np.asarray(s, float) ** 2,
        f0p=lambda s: 2.0 * a * np.asarray(s, float),
        f0pp=lambda s: np.full_like(np.asarray(s, float), 2.0 * a),
        lam=z,
        lamp=z,
        lampp=z,
        rho=2.0,
        alpha=0.0,
        c1=a,
        c2=a,
        c3=a,
        c4=a,
        name="quadratic",
    )


def exponential(S_fit: float = 10.0) -> SplitPotential:
    """Superpolynomial example F(s) = exp(s) - s - 1, lam = 0.

    exp growth cannot satisfy (F1) globally for any finite rho; the constants
    here make the sampled checks pass on the window [-S_fit, S_fit] only
    (rho = 2, c1 = exp(-S)/2, c2 = exp(S)/2).
    """
    z = lambda s: np.zeros_like(np.asarray(s, float))
    return SplitPotential(
        f0=lambda s: np.exp(np.asarray(s, float)) - np.asarray(s, float) - 1.0,
        f0p=lambda s: np.exp(np.asarray(s, float)) - 1.0,
        f0pp=lambda s: np.exp(np.asarray(s, float)),
        lam=z,
        lamp=z,
        lampp=z,
        rho=2.0,
        alpha=0.0,
        c1=np.exp(-S_fit) / 2.0,
        c2=np.exp(S_fit) / 2.0,
        c3=0.5,
        c4=1.0,
        name="exponential",
    )


BUILTIN_POTENTIALS: dict[str, Callable[..., SplitPotential]] = {
    "double_well": double_well,
    "quadratic": quadratic,
    "exponential": exponential,
}
