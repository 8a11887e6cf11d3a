import math

import numpy as np
import pytest

from magdisp.flux import FluxProfile
from magdisp.resolvent import PolarPoint, distance
from magdisp.verify import (angle_grid, b_l1_growth, b_l1_sweep, decay_sweep,
                            default_sample_set, envelope_check, envelope_sweep, loglog_fit,
                            pointwise_free_check, resolve_threads, vdc_check)


def test_loglog_fit_recovers_power_law():
    x = np.geomspace(1, 100, 10)
    fit = loglog_fit(x, 3.0 * x ** -0.5)
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert math.exp(fit.intercept) == pytest.approx(3.0, rel=1e-12)
    assert fit.slope_se < 1e-12


def test_default_sample_set():
    pairs = default_sample_set()
    assert len(pairs) == 12 + 24
    assert all(distance(x, y) > 0 for x, y in pairs)
    dense = default_sample_set(density=2)
    assert len(dense) > len(pairs)
    radii = {round(x.r, 12) for x, _ in pairs}
    assert max(radii) == 20.0


def test_resolve_threads(monkeypatch):
    monkeypatch.delenv("DK_THREADS", raising=False)
    assert resolve_threads(3) == 3
    monkeypatch.setenv("DK_THREADS", "2")
    assert resolve_threads(7) == 2


def test_free_decay_at_origin():
    rep = decay_sweep(None, np.geomspace(0.5, 50, 8), [0.0], free=True, threads=1)
    assert rep.slope == pytest.approx(-0.5, abs=0.01)
    assert rep.constant == pytest.approx(1 / (8 * math.sqrt(math.pi)), rel=1e-4)


def test_decay_sweep_records_failures():
    x = PolarPoint(1.0, 0.0)
    samples = [(x, PolarPoint(2.0, 1.0)), (x, x)]
    rep = decay_sweep(FluxProfile(0.5), np.geomspace(1, 10, 8), samples, threads=1)
    assert len(rep.failures) == 8
    assert all(math.isfinite(v) for v in rep.sup_abs)
    with pytest.raises(ValueError):
        decay_sweep(FluxProfile(0.5), [1.0, 0.5], samples)


def test_envelope_check_integer_flux_diffracted_is_zero():
    x, y = PolarPoint(1.0, 0.0), PolarPoint(2.0, 1.0)
    assert envelope_check(2, 1.0, x, y, 0, p=FluxProfile(1.0)) == 0.0
    assert envelope_check(1, 1.0, x, y, 0) > 0


def test_envelope_sweep_is_reproducible():
    a = envelope_sweep(FluxProfile(0.3), n_draws=16, seed=5, threads=1)
    b = envelope_sweep(FluxProfile(0.3), n_draws=16, seed=5, threads=2)
    assert a.to_dict() == b.to_dict()
    assert {d["regime"] for d in a.draws} == {"near", "far"}
    assert all(math.isfinite(d["ratio"]) for d in a.draws)
    for d in a.draws:
        j0_ok = abs(d["j"] - d["j0"]) <= 2
        assert j0_ok == (d["regime"] == "near")


def test_pointwise_origin_column():
    rep = pointwise_free_check([0.5, 2.0, 8.0], [0.0, 1.0])
    col = np.array(rep.ratios)[:, 0]
    assert np.allclose(col, 1 / (8 * math.sqrt(math.pi)), rtol=1e-4)


def test_vdc_zero_amplitude():
    slope, mags, fit = vdc_check(4, [1e2, 1e3, 1e4], amplitude=lambda s: np.zeros_like(s),
                                 full_output=True)
    assert np.all(mags == 0) and math.isnan(slope) and fit is None
    with pytest.raises(ValueError):
        vdc_check(2, [1e2, 1e3])


def test_b_l1_sweep_small_grid():
    assert b_l1_sweep([1.0, 2.0], n_grid=8) == 0.0
    best, per = b_l1_sweep([0.1, 0.5, 0.9], n_grid=16, full_output=True)
    assert best == max(per.values()) and math.isfinite(best)
    assert per[0.1] == pytest.approx(per[0.9], rel=1e-10)
    assert b_l1_growth(per) <= best


def test_angle_grid_avoids_opposite_points():
    tx, ty = angle_grid(64)
    d = np.abs(np.mod(tx[:, None] - ty[None, :], 2 * math.pi) - math.pi)
    assert d.min() > 1e-3


@pytest.mark.slow
def test_sample_density_doubling_is_stable():
    p = FluxProfile(0.5)
    t_grid = [1.0, 4.0]
    base = decay_sweep(p, t_grid, default_sample_set(), threads=1)
    dense = decay_sweep(p, t_grid, default_sample_set(density=2), threads=1)
    for a, b in zip(base.sup_abs, dense.sup_abs):
        assert abs(b / a - 1) < 0.05
