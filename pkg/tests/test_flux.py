import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from hypothesis import given, settings
from hypothesis import strategies as st

from magdisp.flux import (FluxProfile, alpha_of_theta, flux_distance_to_integers, partial_flux,
                          reduced_flux, total_flux, vector_potential)

PROFILE = FluxProfile(0.3, ((2, 0.1, 0.0),))
angles = st.floats(-20, 20, allow_nan=False)


def trapezoid_mean(p, n=2 ** 12):
    th = 2 * math.pi * np.arange(n) / n
    return float(np.mean(alpha_of_theta(p, th)))


def test_alpha_of_theta_examples():
    assert alpha_of_theta(FluxProfile(0.3), 1.7) == 0.3
    assert alpha_of_theta(FluxProfile(0.0, ((1, 1.0, 0.0),)), 0.0) == 1.0
    for th in np.linspace(-5, 5, 21):
        assert math.isclose(alpha_of_theta(PROFILE, th + 2 * math.pi), alpha_of_theta(PROFILE, th),
                            abs_tol=1e-15)


def test_total_flux():
    assert total_flux(FluxProfile(0.3)) == 0.3
    assert total_flux(FluxProfile(0.0, ((2, 1.0, 0.0),))) == 0.0
    assert abs(total_flux(PROFILE) - trapezoid_mean(PROFILE)) < 1e-12


def test_partial_flux_examples():
    assert math.isclose(partial_flux(FluxProfile(0.7), 0.4, 2.9), 0.7 * 2.5, rel_tol=1e-15)
    assert partial_flux(PROFILE, 1.3, 1.3) == 0.0
    th = np.linspace(0.0, math.pi / 2, 4097)
    quad = trapezoid(alpha_of_theta(PROFILE, th), th)
    assert abs(partial_flux(PROFILE, 0.0, math.pi / 2) - 0.15 * math.pi) < 1e-12
    assert abs(quad - 0.15 * math.pi) < 1e-7


@settings(max_examples=100, deadline=None)
@given(angles, angles, angles)
def test_partial_flux_additive(a, b, c):
    lhs = partial_flux(PROFILE, a, b) + partial_flux(PROFILE, b, c)
    assert abs(lhs - partial_flux(PROFILE, a, c)) <= 1e-13 * max(1.0, abs(a) + abs(b) + abs(c))


@settings(max_examples=50, deadline=None)
@given(angles)
def test_full_turn(th):
    assert abs(partial_flux(PROFILE, th, th + 2 * math.pi) - 2 * math.pi * total_flux(PROFILE)) <= 1e-13


def test_vector_potential():
    ax, ay = vector_potential(PROFILE, 0.0)
    assert ax == 0.0 and ay == alpha_of_theta(PROFILE, 0.0)
    th = np.random.default_rng(7).uniform(-10, 10, 10_000)
    ax, ay = vector_potential(PROFILE, th)
    assert np.max(np.abs(ax * np.cos(th) + ay * np.sin(th))) < 1e-15
    ax, ay = vector_potential(FluxProfile(0.4), th)
    assert np.allclose(ax, -0.4 * np.sin(th)) and np.allclose(ay, 0.4 * np.cos(th))


def test_reduction_and_json(tmp_path):
    assert math.isclose(reduced_flux(FluxProfile(2.3)), 0.3, abs_tol=1e-15)
    assert math.isclose(reduced_flux(FluxProfile(-0.3)), 0.7, abs_tol=1e-15)
    assert math.isclose(flux_distance_to_integers(FluxProfile(0.8)), 0.2, abs_tol=1e-15)
    text = '{"a0": 0.3, "harmonics": [[2, 0.1, 0.0]]}'
    assert FluxProfile.from_json(text) == PROFILE
    path = tmp_path / "flux.json"
    path.write_text(text)
    assert FluxProfile.from_json(str(path)) == PROFILE
    assert FluxProfile.from_dict(PROFILE.to_dict()) == PROFILE
    with pytest.raises(ValueError):
        FluxProfile.from_dict({"a0": 0.3, "extra": 1})
    with pytest.raises(ValueError):
        FluxProfile(0.3, ((0, 1.0, 0.0),))
