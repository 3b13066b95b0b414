import math

import numpy as np
import pytest

from bochner_lab.exponents import (INF, Region, alpha_nu, beta_star, classify_region,
                                   emit_boundary_curve, emit_region_data, gamma_subcritical,
                                   known_necessary_bgsy, necessary_alpha, p_thresholds, rows_to_csv,
                                   REGION_HEADER)


def test_beta_star_examples():
    assert beta_star(0, 3) == 1.0
    assert beta_star(0.25, 2) == 0.0
    assert beta_star(0.5, 5) == -0.5
    with pytest.raises(ValueError):
        beta_star(1.5, 2)


def test_beta_star_sign_matches_critical_p():
    for d in range(2, 7):
        for p in np.linspace(1.01, 30, 200):
            assert (beta_star(1 / p, d) > 0) == (p > 2 * d / (d - 1))


@pytest.mark.parametrize("u,v,region", [(0.1, 0.1, Region.DELTA1), (0.375, 0.375, Region.DELTA2),
                                        (0.1, 0.4, Region.DELTA3), (0.25, 0.25, Region.DELTA1)])
def test_classify_region(u, v, region):
    assert classify_region(u, v, 0.25) is region


def test_classify_rejects_bad_input():
    with pytest.raises(ValueError):
        classify_region(0.6, 0.1, 0.25)
    with pytest.raises(ValueError):
        alpha_nu(0.1, 0.1, 0.5, 2)


def test_alpha_nu_examples():
    assert alpha_nu(0, 0, 0.25, 2).alpha == 1.0
    assert alpha_nu(0.375, 0.375, 0.25, 2).alpha == 0.0
    assert alpha_nu(0.125, 0.375, 0.25, 2).alpha == pytest.approx(0.25, abs=1e-15)


def test_alpha_nu_corner_agreement():
    for d in range(2, 8):
        for nu in (0.1, 0.2, 0.3, 0.45):
            bn = beta_star(nu, d)
            d1 = (d - 1) - 2 * d * nu
            d2 = (2 - 4 * nu) / (1 - 2 * nu) * bn
            assert d1 == pytest.approx(d2, abs=1e-12)


def test_alpha_nu_symmetric_and_monotone():
    # monotonicity needs beta_star(nu) >= 0, so nu stays at or below 1/p_s(d)
    lat = np.linspace(0, 0.5, 21)
    for d, nu in ((2, 0.25), (2, 0.1), (3, 0.3), (3, 0.2), (5, 0.3)):
        A = np.array([[alpha_nu(u, v, nu, d).alpha for v in lat] for u in lat])
        assert np.array_equal(A, A.T)
        assert np.all(np.diff(A, axis=0) <= 1e-12)
        assert np.all(np.diff(A, axis=1) <= 1e-12)


def test_p_thresholds():
    assert p_thresholds(2) == (INF, 4.0)
    p0, ps = p_thresholds(3)
    assert (p0, ps) == (pytest.approx(4.0), pytest.approx(10 / 3))
    p0, ps = p_thresholds(4)
    assert (p0, ps) == (pytest.approx(10 / 3), pytest.approx(3.0))


def test_gamma_subcritical_first_branch():
    assert gamma_subcritical(2, 2, INF, 3) == pytest.approx(-1.0)


def test_gamma_subcritical_branches():
    # d = 3: r1 = 4 gives 1/r = 1/4 <= 1/r1 + 1/r2 = 1/4 + 1/6, so the first branch applies
    assert gamma_subcritical(2, 2, 4, 3) == pytest.approx(-1.0)
    # 1/r = 1/2 = 2/r1 is in the second branch: -1 - 5/8 + 3/4
    assert gamma_subcritical(2, 2, 2, 3) == pytest.approx(-0.875)
    # d = 2: 1/r2 = 0, second branch at 1/r in (1/6, 1/3]
    assert gamma_subcritical(4, 4, 3, 2) == pytest.approx(0.0 - 1 / 6 + 1 / 3)


def test_gamma_subcritical_range_errors():
    with pytest.raises(ValueError, match="outside theorem range"):
        gamma_subcritical(INF, INF, 6, 2)  # 1/p + 1/q < 1/r
    with pytest.raises(ValueError, match="outside theorem range"):
        gamma_subcritical(2, 2, 1.5, 3)  # r below (d+1)/(d-1)
    with pytest.raises(ValueError):
        gamma_subcritical(1.5, 2, 2, 3)


def test_necessary_alpha_examples():
    assert necessary_alpha(2, 2, 2) == 0
    assert necessary_alpha(INF, INF, 3) == 1.0
    assert necessary_alpha(INF, 2, 2) == 0


def test_known_necessary_examples():
    rec = known_necessary_bgsy(2, 2, 1, 2)
    assert rec[0].value == pytest.approx(-0.5)
    rec = known_necessary_bgsy(1, INF, 1, 3)
    assert rec[1].applies and rec[1].value == pytest.approx(1.0)
    assert known_necessary_bgsy(4, 4, 2, 2)[0].value == pytest.approx(-1.5)


def test_emit_region_data():
    rows = emit_region_data(2, 0.25, 1 / 8)
    assert len(rows) == 25
    row = next(r for r in rows if r["u"] == 0.375 and r["v"] == 0.375)
    assert row["alpha"] == 0.0
    corner = next(r for r in emit_region_data(2, 0.25, 0.5) if r["u"] == 0 and r["v"] == 0)
    assert corner["alpha"] == 1.0
    text = rows_to_csv(rows, REGION_HEADER)
    assert text.splitlines()[0] == "u,v,region,alpha"


def test_diagonal_monotone_toward_nu():
    curve = [r for r in emit_boundary_curve(3, 0.3, 0.1)]
    vals = [r["alpha_thm"] for r in curve if r["inv_p"] <= 0.3 + 1e-12]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_continuity_across_region_boundaries():
    rng = np.random.default_rng(1)
    nu, d = 0.25, 2
    for _ in range(2000):
        t = rng.uniform(0, 0.5)
        for u0, v0, du, dv in ((nu, t, 1e-9, 0), (t, nu, 0, 1e-9)):
            lo = alpha_nu(max(u0 - du, 0), max(v0 - dv, 0), nu, d).alpha
            hi = alpha_nu(min(u0 + du, .5), min(v0 + dv, .5), nu, d).alpha
            assert abs(lo - hi) <= 1e-6 * (1 + abs(lo))


def test_sufficiency_dominates_necessity():
    for d in (2, 3, 4):
        nu = 1 / p_thresholds(d)[1]
        for p in (2, 2.5, 3, 4, 6, 10, INF):
            for q in (2, 3, 5, INF):
                assert necessary_alpha(p, q, d) <= alpha_nu(1 / p, 1 / q, nu, d).alpha + 1e-9


def test_step_must_divide_half():
    with pytest.raises(ValueError):
        emit_region_data(2, 0.25, 0.3)
