import math

import numpy as np
import pytest
from scipy.integrate import quad

from magdisp.flux import FluxProfile
from magdisp.oscquad import Cutoff, DyadicBump, phi0
from magdisp.propagator import (KernelConfig, envelope, free_kernel, free_kernel_closed_form,
                                j0_index, k1j, k2j, kernel)
from magdisp.resolvent import DegenerateInput, PolarPoint, SIntegralSpec, distance, f_pm

from conftest import as_complex

CFG = KernelConfig()


def test_free_kernel_closed_form(oracles):
    for row in oracles["free_closed"]:
        t = row["t"]
        v = free_kernel(t, 0.0)
        assert abs(v - as_complex(row["value"])) <= 1e-5 * abs(v)
        assert abs(free_kernel_closed_form(t) - as_complex(row["value"])) < 1e-15
        assert abs(abs(v) - t ** -0.5 / (8 * math.sqrt(math.pi))) <= 1e-4 * abs(v)


def test_free_kernel_rotated_contour_oracle(oracles):
    for row in oracles["free_rotated"]:
        v = free_kernel(row["t"], row["r"])
        assert abs(v - as_complex(row["value"])) < 1e-6


def test_free_kernel_even_and_conjugate():
    for t, r in [(0.8, 1.5), (3.0, 7.0)]:
        assert free_kernel(t, r) == free_kernel(t, -r)
        assert abs(free_kernel(-t, r) - np.conj(free_kernel(t, r))) < 1e-12
    with pytest.raises(DegenerateInput):
        free_kernel(0.0, 1.0)


def test_magnetic_kernel_partial_wave_oracle(oracles):
    for row in oracles["propagator"]:
        x, y = PolarPoint(*row["x"]), PolarPoint(*row["y"])
        res = kernel(row["t"], x, y, FluxProfile(row["alpha"]))
        assert abs(res.value - as_complex(row["value"])) < CFG.tol
        assert res.trunc_err < CFG.tol


def test_hermitian_pairing():
    rng = np.random.default_rng(12)
    p = FluxProfile(0.3, ((1, 0.1, -0.05),))
    for _ in range(4):
        x = PolarPoint(rng.uniform(0.3, 3), rng.uniform(0, 2 * math.pi))
        y = PolarPoint(rng.uniform(0.3, 3), rng.uniform(0, 2 * math.pi))
        t = 10 ** rng.uniform(-0.3, 1)
        a = kernel(t, x, y, p).value
        b = kernel(-t, y, x, p).value
        assert abs(a - np.conj(b)) <= CFG.tol


@pytest.mark.parametrize("alpha", [1.0, 2.0, -1.0])
def test_integer_flux_matches_free(alpha):
    rng = np.random.default_rng(int(10 * alpha) + 50)
    for _ in range(3):
        x = PolarPoint(rng.uniform(0.3, 3), rng.uniform(0, 2 * math.pi))
        y = PolarPoint(rng.uniform(0.3, 3), rng.uniform(0, 2 * math.pi))
        t = 10 ** rng.uniform(-0.3, 1)
        k = abs(kernel(t, x, y, FluxProfile(alpha)).value)
        f = abs(free_kernel(t, distance(x, y)))
        assert abs(k / f - 1) < 1e-4


def test_dyadic_grid_shift_invariance():
    p = FluxProfile(0.5)
    x, y = PolarPoint(1.0, 0.3), PolarPoint(1.7, 2.5)
    shifted = KernelConfig(cutoff=Cutoff(dilation=math.sqrt(2)))
    a = kernel(2.0, x, y, p).value
    b = kernel(2.0, x, y, p, shifted).value
    assert abs(a - b) < 2 * CFG.tol


def test_truncation_extension():
    p = FluxProfile(0.3)
    x, y = PolarPoint(0.8, 1.0), PolarPoint(2.0, 4.0)
    res = kernel(1.5, x, y, p)
    wider = KernelConfig(j_min=res.j_min - 2, j_max=res.j_max + 2)
    assert abs(kernel(1.5, x, y, p, wider).value - res.value) < 2 * CFG.tol


def test_k1j_matches_lambda_form():
    t, j, r = 1.0, 0, 2.0
    x, y = PolarPoint(1.0, 0.0), PolarPoint(1.0 + r, 0.0)
    bump = DyadicBump()
    for sign in (1, -1):
        f = lambda lam: lam * np.exp(-1j * t * lam ** 4) * phi0(bump, np.array([lam]))[0] * f_pm(sign, lam * r)
        re = quad(lambda lam: f(lam).real, 0.25, 1.0, limit=200, epsabs=1e-13)[0]
        im = quad(lambda lam: f(lam).imag, 0.25, 1.0, limit=200, epsabs=1e-13)[0]
        assert abs(k1j(sign, t, j, x, y) - (re + 1j * im)) < 1e-9


def test_k1j_small_t_bound():
    x, y = PolarPoint(1.0, 0.0), PolarPoint(2.0, 1.0)
    r = distance(x, y)
    s = np.linspace(0.25, 1, 400)
    for j in [-3, -1, 0, 1]:
        t = 0.5 / 2.0 ** (4 * j)
        for sign in (1, -1):
            sup = np.max(np.abs(s * f_pm(sign, 2.0 ** j * s * r)))
            assert abs(k1j(sign, t, j, x, y)) <= 2.0 ** (2 * j) * sup


def test_far_regime_envelope_uniform():
    rng = np.random.default_rng(8)
    ratios = []
    for _ in range(50):
        x = PolarPoint(rng.uniform(0.3, 3), rng.uniform(0, 2 * math.pi))
        y = PolarPoint(rng.uniform(0.3, 3), rng.uniform(0, 2 * math.pi))
        t = 10 ** rng.uniform(-1, 1)
        j0 = j0_index(t, distance(x, y))
        j = j0 + int(rng.choice([-4, -3, 3, 4]))
        if 2.0 ** (4 * j) * t > 1e4:
            j = j0 - 3
        ratios.append(abs(k1j(1, t, j, x, y)) / envelope(j, j0, t))
    assert np.all(np.isfinite(ratios)) and max(ratios) < 10


def test_k2j_integer_flux_and_refinement():
    x, y = PolarPoint(1.0, 0.2), PolarPoint(1.5, 2.0)
    assert k2j(1, 1.0, 0, x, y, p=FluxProfile(1.0)) == 0
    p = FluxProfile(0.3)
    fine = KernelConfig(spec=SIntegralSpec(tol=1e-12, initial_panels=2))
    for j in [-1, 0, 1]:
        a = k2j(1, 1.0, j, x, y, p=p)
        b = k2j(1, 1.0, j, x, y, fine, p=p)
        assert abs(a - b) < CFG.tol


def test_k2j_envelope():
    rng = np.random.default_rng(21)
    p = FluxProfile(0.3)
    ratios = []
    for _ in range(50):
        x = PolarPoint(rng.uniform(0.3, 3), rng.uniform(0, 2 * math.pi))
        y = PolarPoint(rng.uniform(0.3, 3), rng.uniform(0, 2 * math.pi))
        t = 10 ** rng.uniform(-1, 1)
        j = int(rng.integers(-2, 2))
        j0 = j0_index(t, x.r + y.r)
        ratios.append(abs(k2j(int(rng.choice([1, -1])), t, j, x, y, p=p)) / envelope(j, j0, t))
    assert np.all(np.isfinite(ratios)) and max(ratios) < 10


def test_dyadic_terms_and_envelope_dominance():
    p = FluxProfile(0.5)
    res = kernel(1.0, PolarPoint(1.0, 0.0), PolarPoint(2.0, 1.0), p, with_terms=True)
    assert res.terms
    c_global = max(term.ratio for term in res.terms)
    assert np.isfinite(c_global) and c_global < 10
    assert {term.ell for term in res.terms} == {1, 2}


def test_envelope_sum_scales_like_inverse_sqrt_t():
    ts = np.geomspace(0.01, 100, 9)
    sums = []
    for t in ts:
        j0 = j0_index(t, 1.0)
        sums.append(sum(envelope(j, j0, t) for j in range(-40, 40)) * math.sqrt(t))
    assert max(sums) / min(sums) < 3


def test_kernel_degenerate_inputs():
    p = FluxProfile(0.3)
    x = PolarPoint(1.0, 1.0)
    with pytest.raises(DegenerateInput):
        kernel(1.0, x, x, p)
    with pytest.raises(DegenerateInput):
        kernel(0.0, x, PolarPoint(2.0, 1.0), p)
