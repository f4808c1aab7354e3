"""Proliferation functions p and the growth assumptions (P)/(P1).

p >= 0 couples the two equations through p(phi)(psi - mu). (P) bounds the
value, 0 <= p(s) <= c5 (1 + |s|^q) with q in [1, 9); (P1) additionally bounds
the a.e. derivative, |p'(s)| <= c5 (1 + |s|^(q-1)) with q <= 4, and is what
the uniqueness estimate needs. At kink points the stored derivative is the
one-sided limit from inside the support.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .potentials import AssumptionReport, _check


class ProlifValues(NamedTuple):
    p: float
    pp: float


@dataclass(frozen=True)
class ProliferationFn:
    p: Callable[[np.ndarray], np.ndarray]
    pp: Callable[[np.ndarray], np.ndarray]
    c5: float
    q: float
    lipschitz_flag: bool = True
    name: str = "custom"
    kinks: tuple[float, ...] = ()

    def __post_init__(self):
        if self.c5 <= 0:
            raise ValueError("c5 must be positive")
        hi = 4.0 if self.lipschitz_flag else 9.0
        if not (1.0 <= self.q <= hi) or (not self.lipschitz_flag and self.q >= 9.0):
            raise ValueError(
                f"q = {self.q} outside [1, {'4] for (P1)' if self.lipschitz_flag else '9) for (P)'}"
            )


def eval_p(pf: ProliferationFn, s: float) -> ProlifValues:
    if not np.isfinite(s):
        raise ValueError(f"proliferation argument must be finite, got {s}")
    return ProlifValues(float(pf.p(s)), float(pf.pp(s)))


def validate_p(pf: ProliferationFn, S: float = 10.0, nsamples: int = 10_000) -> AssumptionReport:
    """Sweep nonnegativity, (P) growth and, when claimed, (P1) on [-S, S]."""
    if S <= 0 or nsamples < 100:
        raise ValueError("need S > 0 and nsamples >= 100")
    s = np.linspace(-S, S, nsamples)
    pv = pf.p(s)
    checks = [
        _check("nonnegative", pv - 0.0, s),
        _check("P_growth", pf.c5 * (1.0 + np.abs(s) ** pf.q) - pv, s),
    ]
    if pf.lipschitz_flag:
        bound = pf.c5 * (1.0 + np.abs(s) ** (pf.q - 1.0))
        checks.append(_check("P1_derivative", bound - np.abs(pf.pp(s)), s))
        # empirical local Lipschitz: divided differences against the same envelope
        h = (s[1] - s[0]) / 2.0
        dd = np.abs(pf.p(s + h) - pf.p(s - h)) / (2.0 * h)
        checks.append(_check("P1_divided_diff", bound + 1e-8 - dd, s))
    report = tuple(checks)
    return AssumptionReport(report, passed=all(c.passed for c in report))


def truncated_quadratic(p0: float = 1.0) -> ProliferationFn:
    """p(s) = p0 (1 - s^2) on [-1, 1], zero outside; C^{0,1} with kinks at +-1."""
    if p0 <= 0:
        raise ValueError("p0 must be positive")

    def p(s):
        s = np.asarray(s, float)
        return np.where(np.abs(s) <= 1.0, p0 * (1.0 - s**2), 0.0)

    def pp(s):
        # one-sided derivative from inside the support at |s| = 1
        s = np.asarray(s, float)
        return np.where(np.abs(s) <= 1.0, -2.0 * p0 * s, 0.0)

    return ProliferationFn(p, pp, c5=p0, q=2.0, lipschitz_flag=True,
                           name="truncated_quadratic", kinks=(-1.0, 1.0))


def smooth_bump(p0: float = 1.0) -> ProliferationFn:
    """C^1 surrogate p(s) = p0 ((1 - s^2)_+)^2 for Newton-friendly runs."""
    if p0 <= 0:
        raise ValueError("p0 must be positive")

    def p(s):
        s = np.asarray(s, float)
        w = np.maximum(1.0 - s**2, 0.0)
        return p0 * w * w

    def pp(s):
        s = np.asarray(s, float)
        w = np.maximum(1.0 - s**2, 0.0)
        return -4.0 * p0 * s * w

    return ProliferationFn(p, pp, c5=p0, q=2.0, lipschitz_flag=True, name="smooth_bump")


def constant(p0: float = 1.0) -> ProliferationFn:
    if p0 <= 0:
        raise ValueError("p0 must be positive")
    return ProliferationFn(
        p=lambda s: np.full_like(np.asarray(s, float), p0),
        pp=lambda s: np.zeros_like(np.asarray(s, float)),
        c5=p0, q=1.0, lipschitz_flag=True, name="constant",
    )


def zero() -> ProliferationFn:
    """p = 0: decouples the system into pure Cahn-Hilliard plus heat flow."""
    return ProliferationFn(
        p=lambda s: np.zeros_like(np.asarray(s, float)),
        pp=lambda s: np.zeros_like(np.asarray(s, float)),
        c5=1.0, q=1.0, lipschitz_flag=True, name="zero",
    )


BUILTIN_PROLIFERATIONS: dict[str, Callable[..., ProliferationFn]] = {
    "truncated_quadratic": truncated_quadratic,
    "smooth_bump": smooth_bump,
    "constant": constant,
    "zero": zero,
}
