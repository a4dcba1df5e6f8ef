"""Welch test against a high-precision incomplete-beta oracle (mpmath)."""

import math
import random

import mpmath
import pytest

from pgdetect.stats import WelchResult, regularized_incomplete_beta, welch_t_test

mpmath.mp.dps = 50


def oracle_welch(a, b):
    """Recompute t, dof and the two-sided p with 50-digit arithmetic."""
    xa = [mpmath.mpf(v) for v in a]
    xb = [mpmath.mpf(v) for v in b]
    na, nb = len(xa), len(xb)
    ma = mpmath.fsum(xa) / na
    mb = mpmath.fsum(xb) / nb
    va = mpmath.fsum((v - ma) ** 2 for v in xa) / (na - 1)
    vb = mpmath.fsum((v - mb) ** 2 for v in xb) / (nb - 1)
    se2 = va / na + vb / nb
    t = (ma - mb) / mpmath.sqrt(se2)
    dof = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    x = dof / (dof + t**2)
    p = mpmath.betainc(dof / 2, mpmath.mpf(1) / 2, 0, x, regularized=True)
    return float(t), float(dof), float(p)


def test_hand_derived_case():
    # a=[1..4], b=[2..5]: mean diff -1, both variances 5/3, se = sqrt(5/6)
    res = welch_t_test([1, 2, 3, 4], [2, 3, 4, 5])
    assert res.t == pytest.approx(-1.0954451150103321, abs=1e-12)
    assert res.dof == pytest.approx(6.0, abs=1e-12)
    assert res.p == pytest.approx(0.315, abs=5e-4)
    t, dof, p = oracle_welch([1, 2, 3, 4], [2, 3, 4, 5])
    assert abs(res.t - t) <= 1e-9
    assert abs(res.p - p) <= 1e-9


def test_identical_constant_samples():
    res = welch_t_test([5, 5, 5], [5, 5, 5])
    assert res.t == 0.0
    assert res.p == 1.0


def test_swap_negates_t_keeps_p():
    rng = random.Random(7)
    for _ in range(25):
        a = [rng.gauss(0, 2) for _ in range(rng.randint(2, 30))]
        b = [rng.gauss(0.5, 1) for _ in range(rng.randint(2, 30))]
        r1 = welch_t_test(a, b)
        r2 = welch_t_test(b, a)
        assert r1.t == pytest.approx(-r2.t, rel=1e-12)
        assert r1.dof == pytest.approx(r2.dof, rel=1e-12)
        assert r1.p == pytest.approx(r2.p, rel=1e-12)
        assert 0.0 <= r1.p <= 1.0


def test_one_sample_zero_variance_is_allowed():
    res = welch_t_test([3.0, 3.0, 3.0, 3.0], [1.0, 2.0, 3.0])
    assert math.isfinite(res.t)
    assert res.dof > 0
    t, dof, p = oracle_welch([3.0, 3.0, 3.0, 3.0], [1.0, 2.0, 3.0])
    assert abs(res.t - t) <= 1e-9
    assert abs(res.p - p) <= 1e-9


def test_oracle_grid():
    rng = random.Random(20240811)
    cases = []
    for _ in range(100):
        na = rng.randint(2, 40)
        nb = rng.randint(2, 40)
        mu = rng.uniform(-3, 3)
        scale_a = rng.uniform(0.1, 5)
        scale_b = rng.uniform(0.1, 5)
        a = [rng.gauss(0, scale_a) for _ in range(na)]
        b = [rng.gauss(mu, scale_b) for _ in range(nb)]
        if len(set(a)) == 1 or len(set(b)) == 1:
            a[0] += 0.5
        cases.append((a, b))
    for a, b in cases:
        got = welch_t_test(a, b)
        t, dof, p = oracle_welch(a, b)
        assert abs(got.t - t) <= 1e-9, (got.t, t)
        assert abs(got.dof - dof) <= 1e-6 * max(1.0, dof)
        assert abs(got.p - p) <= 1e-9, (got.p, p)


def test_incomplete_beta_matches_mpmath():
    rng = random.Random(3)
    for _ in range(200):
        a = rng.uniform(0.2, 60)
        b = rng.uniform(0.2, 60)
        x = rng.random()
        got = regularized_incomplete_beta(a, b, x)
        want = float(mpmath.betainc(a, b, 0, x, regularized=True))
        assert abs(got - want) <= 1e-11, (a, b, x)
    assert regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0
    assert regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0


def test_preconditions():
    with pytest.raises(ValueError):
        welch_t_test([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        welch_t_test([1.0, 2.0], [])


def test_result_serialization():
    res = welch_t_test([1, 2, 3], [4, 5, 6])
    d = res.to_dict()
    assert set(d) == {"t", "dof", "p"}
    assert WelchResult(**d) == res
