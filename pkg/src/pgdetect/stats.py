"""Two-sample location test for unequal variances.

The p value comes from the Student-t distribution evaluated through the
regularized incomplete beta function (continued-fraction form), so the
module has no dependency beyond the standard library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_MAX_ITER = 500
_CF_TOL = 1e-15


@dataclass(frozen=True)
class WelchResult:
    t: float
    dof: float
    p: float

    def to_dict(self) -> dict:
        return {"t": self.t, "dof": self.dof, "p": self.p}


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_TOL:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a} b={b} x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if a <= 0.0 or b <= 0.0:
        raise ValueError("a and b must be positive")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # use the representation that converges fast on each side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, dof: float) -> float:
    """P(|T| >= |t|) for T ~ Student-t with `dof` degrees of freedom."""
    if dof <= 0.0:
        raise ValueError("degrees of freedom must be positive")
    if t == 0.0:
        return 1.0
    if math.isinf(t):
        return 0.0
    x = dof / (dof + t * t)
    return min(1.0, max(0.0, regularized_incomplete_beta(0.5 * dof, 0.5, x)))


def welch_t_test(a, b) -> WelchResult:
    """Welch's t-test: unequal variances, Welch-Satterthwaite dof, two-sided p.

    Both samples constant and equal is a defined no-difference case
    (t = 0, p = 1); constant samples with different means give an
    infinite t and p = 0. In either degenerate case the dof falls back
    to n_a + n_b - 2 so it stays positive.
    """
    xs = [float(v) for v in a]
    ys = [float(v) for v in b]
    na, nb = len(xs), len(ys)
    if na < 2 or nb < 2:
        raise ValueError("welch_t_test needs at least two observations per sample")
    ma = math.fsum(xs) / na
    mb = math.fsum(ys) / nb
    va = math.fsum((v - ma) ** 2 for v in xs) / (na - 1)
    vb = math.fsum((v - mb) ** 2 for v in ys) / (nb - 1)
    sea = va / na
    seb = vb / nb
    se2 = sea + seb
    if se2 == 0.0:
        fallback_dof = float(na + nb - 2)
        if ma == mb:
            return WelchResult(0.0, fallback_dof, 1.0)
        return WelchResult(math.copysign(math.inf, ma - mb), fallback_dof, 0.0)
    t = (ma - mb) / math.sqrt(se2)
    dof = se2 * se2 / (sea * sea / (na - 1) + seb * seb / (nb - 1))
    return WelchResult(t, dof, student_t_two_sided_p(t, dof))
