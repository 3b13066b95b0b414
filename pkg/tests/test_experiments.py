import math

import numpy as np
import pytest

from bochner_lab.exponents import INF
from bochner_lab.experiments import (OperatorSpec, ScalingFit, antipodal_caps,
                                     delta_scaling_scan, estimate_bilinear_norm,
                                     estimate_bilinear_norms, experiment_grid, floor_witness,
                                     holder_r, knapp_plates, theory_kappa)
from bochner_lab.grid import SPECTRAL, Field, lp_norm


def test_grid_resolution():
    g = experiment_grid(2, 1 / 16)
    assert g.L == 128 and g.dxi <= (1 / 16) / 8 and g.nyquist >= 1.5


def test_operator_validation():
    with pytest.raises(ValueError):
        OperatorSpec("unknown", 2, 1 / 8)
    with pytest.raises(ValueError):
        OperatorSpec("shell_product", 2, 1 / 2)


def test_scaling_fit_needs_four_points():
    with pytest.raises(ValueError):
        ScalingFit([(0, 0)] * 3, -1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        delta_scaling_scan("shell_product", 1, [(2, 2, 1)], [1 / 8, 1 / 16, 1 / 32])
    with pytest.raises(ValueError):
        delta_scaling_scan("shell_product", 1, [(2, 2, 1)], [1 / 8, 1 / 16, 1 / 32, 0.05])


def test_holder_r():
    assert holder_r(2, 2) == 1 and holder_r(4, 4) == 2 and holder_r(INF, INF) == INF


def test_theory_kappa_d2():
    assert theory_kappa(2, 2, 2) == pytest.approx(0.0, abs=1e-15)
    assert theory_kappa(4, 4, 2) == pytest.approx(0.0, abs=1e-15)
    assert theory_kappa(INF, INF, 2) == pytest.approx(1.0)
    assert theory_kappa(2, INF, 2) == pytest.approx(0.5)


def test_disjoint_supports_give_zero():
    op = OperatorSpec("shell_product", 2, 1 / 8, varrho=1.5)
    g = op.grid
    small = Field(g, (g.xi_sq < 0.1).astype(complex), SPECTRAL)
    assert lp_norm(op.apply(small, small), 1) == 0


def test_witnesses_live_near_the_shells():
    op = OperatorSpec("shell_product", 2, 1 / 16)
    s0, u0 = op.centres()
    for f, g in (antipodal_caps(op), knapp_plates(op)):
        fs, gs = f.grid.xi_sq[f.values != 0], g.grid.xi_sq[g.values != 0]
        assert fs.size and gs.size
        assert np.all(np.abs(fs - s0) <= op.delta) and np.all(np.abs(gs - u0) <= op.delta)


def test_l2_ceiling():
    op = OperatorSpec("shell_product", 2, 1 / 8)
    est = estimate_bilinear_norm(op, 2, 2, 1, budget=12, restarts=6)
    assert 0 < est.value <= 2.0
    assert est.reliable


def test_deterministic():
    op = OperatorSpec("btilde_delta", 2, 1 / 8)
    a = estimate_bilinear_norms(op, [(2, 2, 1), (INF, INF, INF)], budget=6, seed=3, restarts=4)
    b = estimate_bilinear_norms(op, [(2, 2, 1), (INF, INF, INF)], budget=6, seed=3, restarts=4)
    assert [e.value for e in a] == [e.value for e in b]
    assert "focusing_phase" in a[0].skipped


def test_budget_flag():
    op = OperatorSpec("shell_product", 1, 1 / 8)
    est = estimate_bilinear_norm(op, 2, 2, 1, budget=3, restarts=8)
    assert est.exhausted


def test_two_run_consistency_d1():
    deltas = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
    scan = delta_scaling_scan("shell_product", 1, [(2, 2, 1)], deltas, budget=8, restarts=4)
    fit = scan.fits[0]
    est = {dl: e[0].value for dl, e in zip(deltas, scan.estimates)}
    predicted = est[1 / 32] * 2.0 ** fit.slope
    assert 0.25 <= est[1 / 16] / predicted <= 4
    assert len(scan.rows()) == 4


@pytest.mark.parametrize("delta", [1 / 8, 1 / 16])
def test_floor_witness(delta):
    assert floor_witness(delta) >= 0.1 * delta
