import math

import numpy as np
import pytest

from bochner_lab.bumps import (affine, calibration_error, cn_normalize, derivative_bump,
                               derivative_sups, dyadic_psi, from_record, moment_bump,
                               partition_phi, psi_zero, smooth_step, standard_bump,
                               taylor_remainder)


def test_standard_bump_values():
    b = standard_bump(-1, 1)
    assert b(np.array([0.0]))[0] == 1.0
    assert np.all(b(np.array([-1.0, 1.0])) == 0)
    for k in range(0, 13):
        assert np.all(b.derivative(np.array([-1.0001, 1.0001]), k) == 0)
    assert b.derivative(np.array([0.0]), 1)[0] == pytest.approx(0, abs=1e-15)
    assert np.all(b(np.linspace(-0.999, 0.999, 101)) > 0)


def test_standard_bump_rejects_degenerate():
    with pytest.raises(ValueError):
        standard_bump(1, 1)


def test_cn_normalize():
    b = standard_bump(-1, 1)
    same, _ = cn_normalize(b, 0)
    assert same.scale == 1.0
    normed, raw = cn_normalize(b, 4)
    cert = derivative_sups(normed, 4)
    assert np.all(cert <= 1 + 1e-12)
    assert cert[0] < 1
    assert np.max(raw) > 1
    with pytest.raises(ValueError):
        cn_normalize(b, 40)
    with pytest.raises(ValueError, match="degenerate"):
        cn_normalize(b.scaled(0.0), 2)


def test_dyadic_calibration_examples():
    assert calibration_error(1.0, np.array([0.7]), -20, 1) <= 1e-12
    assert calibration_error(2.0, np.array([1.0]), -20, 1) <= 1e-12
    psi = dyadic_psi(1.0)
    assert psi(np.array([0.4]))[0] == 0 and psi(np.array([2.1]))[0] == 0
    with pytest.raises(ValueError):
        dyadic_psi(0.0)


@pytest.mark.parametrize("alpha", [0.25, 1.0, 2.5])
def test_dyadic_calibration_sweep(alpha):
    t = np.geomspace(2.0 ** -18, 1.0, 20001)
    assert calibration_error(alpha, t, -24, 1) <= 1e-10


def test_psi_zero():
    alpha = 1.0
    p0, psi = psi_zero(alpha), dyadic_psi(alpha)
    assert p0(np.array([0.8]))[0] == 0
    assert p0(np.array([-0.3]))[0] == 0
    assert np.all(p0(np.linspace(0.5, 1.0, 50)) == 0)
    t = 0.9
    total = p0(np.array([t]))[0] + sum(2.0 ** k * psi(np.array([(1 - t) / 2.0 ** k]))[0]
                                       for k in range(-40, 0))
    assert total == pytest.approx(0.1, abs=1e-10)


def test_partition_phi():
    phi = partition_phi()
    assert sum(phi(np.array([0.37 + k]))[0] for k in range(-3, 4)) == pytest.approx(1, abs=1e-12)
    assert phi(np.array([0.9]))[0] == 0
    assert phi(np.array([0.0]))[0] == 1.0
    t = np.random.default_rng(0).uniform(-10, 10, 100_000)
    total = sum(phi(t + k) for k in range(-11, 12))
    assert np.max(np.abs(total - 1)) <= 1e-12


def test_moment_bump():
    phi = partition_phi()
    t = np.linspace(-1, 1, 801)
    assert np.array_equal(moment_bump(phi, 0)(t), phi(t))
    assert moment_bump(phi, 1)(np.array([0.0]))[0] == 0
    assert np.max(np.abs(moment_bump(phi, 2)(t))) <= np.max(np.abs(phi(t)))
    with pytest.raises(ValueError):
        moment_bump(phi, -1)


def _family():
    phi = partition_phi()
    return [standard_bump(-1, 1), standard_bump(-1, 1, sharpness=4), phi, dyadic_psi(0.25),
            dyadic_psi(1.0), psi_zero(1.0), moment_bump(phi, 3), affine(phi, -1.0, 0.2),
            derivative_bump(phi, 2), smooth_step()]


@pytest.mark.parametrize("bump", _family(), ids=lambda b: b.kind)
def test_derivatives_match_richardson(bump):
    a, b = bump.support
    t = np.linspace(a, b, 258)[1:-1]
    h = 1e-5
    for k in range(1, 9):
        def diff(step):
            return (bump.derivative(t + step, k - 1) - bump.derivative(t - step, k - 1)) / (2 * step)

        fd = (4 * diff(h / 2) - diff(h)) / 3
        exact = bump.derivative(t, k)
        scale = max(np.max(np.abs(exact)), 1e-300)
        assert np.max(np.abs(fd - exact)) <= 1e-6 * scale, k


def test_record_round_trip():
    b = affine(moment_bump(partition_phi(), 2), -1.0).scaled(0.5)
    again = from_record(b.to_record())
    t = np.linspace(-1, 1, 33)
    assert np.array_equal(again(t), b(t))


def test_taylor_remainder_examples():
    for N in (1, 4, 6):
        E = taylor_remainder(N)
        for k in range(N + 1):
            assert abs(E.derivative(np.array([0j]), k)[0]) == 0
    E = taylor_remainder(4)
    t = 0.5j
    assert abs(E(np.array([t]))[0]) <= abs(t) ** 5 / 120 * math.exp(abs(t))
    c0 = taylor_remainder(6).measured_constants(1.0)[0]
    assert np.isfinite(c0) and c0 <= math.e / math.factorial(7) * 7


def test_taylor_remainder_growth_bounded():
    c = taylor_remainder(5).measured_constants(2.0)
    assert np.all(np.isfinite(c)) and np.all(c < 10)


def test_taylor_remainder_rejects_zero_order():
    with pytest.raises(ValueError):
        taylor_remainder(0)
