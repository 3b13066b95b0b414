import json
import math

import numpy as np
import pytest

from bochner_lab.bilinear import (BilinearSymbol, BudgetExceeded, bilinear_exact,
                                  bilinear_shell_product, bochner_riesz_bilinear,
                                  bochner_riesz_bilinear_symbol, btilde_delta, btilde_zero,
                                  cauchy_schwarz_factors, separable_kernel_check, shell_sum_symbol,
                                  taylor_expansion_operator, taylor_reconstruct,
                                  tensor_bump_symbol, unit_symbol)
from bochner_lab.bumps import dyadic_psi, partition_phi, psi_zero, standard_bump
from bochner_lab.grid import SPECTRAL, Field, TorusGrid, random_bandlimited
from bochner_lab.special import kernel_closed_form

G1 = TorusGrid(1, 16.0, 1024)
G2 = TorusGrid(2, 16.0, 64)


def pair(grid, radius, seed):
    return random_bandlimited(grid, radius, 2 * seed), random_bandlimited(grid, radius, 2 * seed + 1)


def rel(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


@pytest.mark.parametrize("grid", [G1, G2], ids=["d1", "d2"])
def test_unit_symbol_is_pointwise_product(grid):
    f, g = pair(grid, 1.2, 0)
    out = bilinear_exact(f, g, unit_symbol()).values
    assert rel(out, f.spatial().values * g.spatial().values) <= 1e-10


def test_general_path_matches_radial_path():
    f, g = pair(G2, 1.0, 1)
    radial = bochner_riesz_bilinear_symbol(1.5)
    general = BilinearSymbol(radial.evaluator, "general")
    assert rel(bilinear_exact(f, g, general).values, bilinear_exact(f, g, radial).values) <= 1e-12


def test_symbol_vanishes_outside_ball():
    f = random_bandlimited(G1, 1.4, 3, inner=0.75)
    g = random_bandlimited(G1, 1.4, 4, inner=0.75)
    assert not np.any(bochner_riesz_bilinear(f, g, 1.0).values)


def test_ball_witness_matches_bessel_kernel():
    grid = TorusGrid(1, 64.0, 512)
    ones = Field(grid, (grid.xi_sq <= 4).astype(complex), SPECTRAL)
    alpha = 1.0
    out = bochner_riesz_bilinear(ones, ones, alpha).values.real
    x = grid.x[0][:40]
    # the kernel on R^2 evaluated at the diagonal point (x, x)
    exact = kernel_closed_form(np.sqrt(2) * np.abs(x), alpha, 1)
    assert np.max(np.abs(out[:40] - exact)) <= 1e-3 * np.max(np.abs(exact))


def test_budget_guard():
    f, g = pair(G2, 1.9, 2)
    with pytest.raises(BudgetExceeded, match="shell"):
        bilinear_exact(f, g, unit_symbol(), budget=1000)


def test_translation_and_symmetry():
    f, g = pair(G2, 1.0, 5)
    psi = dyadic_psi(1.0)
    out = btilde_delta(f, g, 1 / 8, psi).values
    swapped = btilde_delta(g, f, 1 / 8, psi).values
    assert rel(swapped, out) <= 1e-12
    shift = (3, -5)
    fs = Field(G2, np.roll(f.spatial().values, shift, axis=(0, 1)))
    gs = Field(G2, np.roll(g.spatial().values, shift, axis=(0, 1)))
    moved = btilde_delta(fs, gs, 1 / 8, psi).values
    assert rel(moved, np.roll(out, shift, axis=(0, 1))) <= 1e-12


def test_btilde_support():
    delta = 1 / 8
    # |xi|^2 + |eta|^2 <= 2 * 0.18 < 1 - 2 delta, so the piece never sees the pair
    f, g = pair(G1, math.sqrt(0.18), 6)
    assert not np.any(btilde_delta(f, g, delta, dyadic_psi(1.0)).values)


def test_dyadic_decomposition():
    alpha = 1.0
    psi, psi0 = dyadic_psi(alpha), psi_zero(alpha)
    for seed in range(3):
        f, g = pair(G1, 1.2, seed)
        full = bochner_riesz_bilinear(f, g, alpha).values
        acc = btilde_zero(f, g, psi0).values
        for k in range(1, 10):
            delta = 2.0 ** -k
            acc = acc + delta ** alpha * btilde_delta(f, g, delta, psi).values
        assert rel(acc, full) <= 1e-8


class TestShellProduct:
    phi = standard_bump()

    def test_matches_exact_path(self):
        f, g = pair(G1, 1.45, 7)
        S = bilinear_shell_product(f, g, 1 / 16, 1.0, self.phi, self.phi).values
        E = bilinear_exact(f, g, shell_sum_symbol(1 / 16, 1.0, self.phi, self.phi)).values
        assert rel(S, E) <= 1e-9

    def test_mismatched_shells_vanish(self):
        f = Field(G1, np.where(np.abs(G1.xi_sq - 0.25) < 0.01, 1.0, 0.0) + 0j, SPECTRAL)
        g = Field(G1, np.where(np.abs(G1.xi_sq - 0.25) < 0.01, 1.0, 0.0) + 0j, SPECTRAL)
        out = bilinear_shell_product(f, g, 1 / 16, 1.5, self.phi, self.phi).values
        assert not np.any(out)

    def test_cauchy_schwarz(self):
        f, g = pair(G2, 1.3, 8)
        for varrho in (0.5, 1.0, 2.0):
            B, sf, sg = cauchy_schwarz_factors(f, g, 1 / 8, varrho, partition_phi(), self.phi)
            excess = float((np.abs(B.values) - sf * sg).max())
            assert excess <= 1e-12 * float((sf * sg).max())

    def test_preconditions(self):
        f, g = pair(G1, 1.0, 9)
        with pytest.raises(ValueError):
            bilinear_shell_product(f, g, 1 / 16, 3.0, self.phi, self.phi)
        with pytest.raises(ValueError):
            bilinear_shell_product(f, g, 1 / 4, 1.0, self.phi, self.phi)


class TestTaylorReconstruction:
    psi, phi = dyadic_psi(1.0), partition_phi()

    def test_converges_for_small_step(self):
        errs = [taylor_reconstruct(1 / 64, 1.0, N, self.psi, self.phi).sup_error for N in (1, 2, 8)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] <= errs[1] / 10
        assert errs[2] < 1e-6

    def test_partition_complete(self):
        rep = taylor_reconstruct(1 / 32, 0.5, 2, self.psi, self.phi)
        assert rep.partition_error <= 1e-10
        assert rep.delta_tilde == pytest.approx((1 / 32) ** 1.5)
        rec = json.loads(rep.to_json())
        assert rec["N"] == 2 and len(rec["varrho"]) == len(rec["coefficients"])

    def test_large_step_does_not_converge(self):
        # delta^eps |a + b| exceeds the transition width of psi here
        e2 = taylor_reconstruct(1 / 32, 0.2, 2, self.psi, self.phi).sup_error
        e8 = taylor_reconstruct(1 / 32, 0.2, 8, self.psi, self.phi).sup_error
        assert e8 > e2 / 10

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            taylor_reconstruct(1 / 32, 0.0, 2, self.psi, self.phi)
        with pytest.raises(ValueError):
            taylor_reconstruct(1 / 32, 0.5, 40, self.psi, self.phi)

    def test_operator_form_matches_piece(self):
        delta, eps = 1 / 16, 1.0
        grid = TorusGrid(1, 64.0, 256)
        f, g = pair(grid, 0.99, 10)
        exact = btilde_delta(f, g, delta, self.psi).values
        approx = taylor_expansion_operator(f, g, delta, eps, 6, self.psi, self.phi).values
        assert rel(approx, exact) <= 1e-3


class TestSeparableKernel:
    grid = TorusGrid(1, 256.0, 2048)
    phi = standard_bump(sharpness=4)

    def report(self, tau=0.0, dilation=1.0):
        m = tensor_bump_symbol(1 / 8, tau, 1.0, 0.5, self.phi, dilation)
        return separable_kernel_check(m, 1 / 8, tau, self.grid)

    def test_constant_finite(self):
        assert 0 < self.report().constant < np.inf

    def test_dilation_scales_decay_length(self):
        base = self.report().decay_length_y
        assert self.report(dilation=2.0).decay_length_y == pytest.approx(base / 2, rel=0.1)
        assert self.report(dilation=0.5).decay_length_y == pytest.approx(base * 2, rel=0.1)

    def test_tau_growth(self):
        c1, c2 = self.report(1.0).constant, self.report(2.0).constant
        assert c2 / c1 <= 2 ** 3
