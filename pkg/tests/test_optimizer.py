import math

import numpy as np
import pytest

from ddcoherence.noise import TWO_PI, white
from ddcoherence.optimizer import compare_protocols, evaluate_timing, grid_search_sym5
from ddcoherence.sequences import SymmetricFiveTiming, make_udd, intervals

WHITE = white(30.0, TWO_PI * 0.1, TWO_PI * 2e6)
ZERO = white(0.0, 1.0, 1e6)


def test_white_surface_is_flat():
    res = grid_search_sym5(1e-3, WHITE, step=0.05)
    _, _, w = res.map.feasible_points()
    assert np.ptp(w) <= 1e-3
    assert w.max() == pytest.approx(math.exp(-2 * 30.0 * 1e-3), rel=1e-3)


def test_optimum_dominates_map(calibrated_model):
    res = grid_search_sym5(1.5e-3, calibrated_model, step=0.02)
    _, _, w = res.map.feasible_points()
    assert res.w_best >= w.max()
    assert res.w_best in w
    t = res.timing
    assert t.tau0_frac + t.tau1_frac + t.tau2_frac == pytest.approx(0.5)
    # the map leaves tau0 <= 0 undefined
    a, b = np.meshgrid(res.map.tau1, res.map.tau2, indexing="ij")
    assert np.all(np.isnan(res.map.w[a + b >= 0.5 - 1e-12]))
    assert np.all(np.isfinite(res.map.w[a + b < 0.5 - 1e-9]))


def test_deterministic_and_tie_break():
    a = grid_search_sym5(1e-3, ZERO, step=0.05)
    b = grid_search_sym5(1e-3, ZERO, step=0.05)
    np.testing.assert_array_equal(a.map.w, b.map.w)
    # every point ties at W = 1; the first (lowest tau1, then tau2) wins
    assert a.timing.tau1_frac == pytest.approx(0.05)
    assert a.timing.tau2_frac == pytest.approx(0.05)


def test_subrange():
    res = grid_search_sym5(1.5e-3, WHITE, step=0.01, tau1_range=(0.15, 0.25), tau2_range=(0.15, 0.25))
    assert res.map.tau1.min() == pytest.approx(0.15)
    assert res.map.tau2.max() == pytest.approx(0.25)


@pytest.mark.parametrize("step", [0.0, -0.01, 0.06])
def test_step_validation(step):
    with pytest.raises(ValueError):
        grid_search_sym5(1e-3, WHITE, step=step)


def test_infeasible_grid_rejected():
    with pytest.raises(ValueError):
        grid_search_sym5(1e-3, WHITE, step=0.05, tau1_range=(0.3, 0.5), tau2_range=(0.3, 0.5))
    with pytest.raises(ValueError):
        grid_search_sym5(0.0, WHITE)


def test_udd5_timing_matches_family(calibrated_model):
    # the symmetric five-pulse form reproduces UDD(5) at its own fractions
    d = intervals(make_udd(5))
    t = SymmetricFiveTiming(d[0], d[1], d[2])
    from ddcoherence.coherence import coherence_w
    assert evaluate_timing(1e-3, calibrated_model, t) == pytest.approx(
        coherence_w(make_udd(5), 1e-3, calibrated_model), rel=1e-9)


def test_compare_protocols_zero_noise():
    rows = compare_protocols(3, np.linspace(1e-5, 1e-3, 5), ZERO)
    assert [r.protocol for r in rows] == ["pdd", "udd", "cpmg"]
    assert all(not r.t2.reached for r in rows)
    with pytest.raises(ValueError):
        compare_protocols(3, [1e-4, 2e-4], ZERO, protocols=("xy4",))


def test_udd_beats_pdd(calibrated_model):
    grid = np.geomspace(200e-6, 3e-3, 400)
    for n in (3, 5):
        t2 = {r.protocol: r.t2.t2 for r in compare_protocols(n, grid, calibrated_model, ("pdd", "udd"))}
        assert t2["udd"] > t2["pdd"]
