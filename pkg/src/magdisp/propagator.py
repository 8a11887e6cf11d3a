"""Propagator kernel of the fourth-order magnetic operator.

The spectral representation gives

    K(t, x, y) = pi * sum_{+-} int_0^inf lam e^{-i t lam^4}
                 [A(x, y) F(lam |x-y|) + G(lam)] d lam

with ``pi = kappa / (4 pi^2)`` and ``A``, ``G`` carrying their own constants.
The frequency axis is cut into dyadic shells by ``phi_0(2^{-j} lam)``.  After
``lam = 2^j s`` each shell becomes an integral over s in [1/4, 1] with the
phase ``t 2^{4j} s^4 -+ 2^j R s``, which is handled by
:mod:`magdisp.oscquad`.  ``R`` is ``|x - y|`` for the direct wave and
``|x| + |y|`` for the diffracted wave, whose slowly varying part is
interpolated once per octave and reused for every ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as cheb

from . import specfun
from .flux import FluxProfile, reduced_flux
from .oscquad import (DEFAULT_CUTOFF, BudgetExceeded, Cutoff, DyadicBump, PhaseSpec,
                      oscillatory_integral, phi0)
from .resolvent import (KAPPA, DegenerateInput, PolarPoint, SIntegralSpec, a_alpha,
                        b_l1, diffracted_integral, distance)

__all__ = [
    "KernelConfig", "DyadicTerm", "KernelResult", "TruncationUncertified",
    "k1j", "k2j", "kernel", "free_kernel", "free_kernel_closed_form", "envelope",
    "j0_index", "BudgetExceeded",
]

# sup over z > 0 of |F(z)|; attained as z -> 0
F_SUP = 1.0
STONE_WEIGHT = KAPPA / (4.0 * math.pi ** 2)


class TruncationUncertified(ArithmeticError):
    """The dyadic sum could not be truncated within the requested tolerance."""


@dataclass(frozen=True)
class KernelConfig:
    """Dyadic truncation and quadrature controls.

    ``j_min``/``j_max`` of None are chosen automatically: the lower end from
    the low-frequency tail bound, the upper end once the terms have decayed
    below ``tol / 10`` past the stationary and crossover indices.  ``a_cap``
    bounds ``2^{4j} |t|``.  ``strict`` turns an uncertified truncation into
    an error instead of a reported estimate.
    """

    tol: float = 1e-6
    j_min: int | None = None
    j_max: int | None = None
    spec: SIntegralSpec = field(default_factory=lambda: SIntegralSpec(tol=1e-11))
    a_cap: float = 1e4
    panel_cap: int = 200_000
    cheb_tol: float = 1e-11
    cheb_max_degree: int = 256
    cutoff: Cutoff = DEFAULT_CUTOFF
    strict: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.j_min is not None and self.j_max is not None and self.j_min > self.j_max:
            raise ValueError("j_min must not exceed j_max")
        if not self.a_cap > 0:
            raise ValueError("a_cap must be positive")

    @property
    def bump(self) -> DyadicBump:
        return DyadicBump(self.cutoff)

    def to_dict(self) -> dict:
        return {
            "tol": self.tol, "j_min": self.j_min, "j_max": self.j_max,
            "a_cap": self.a_cap, "panel_cap": self.panel_cap,
            "cheb_tol": self.cheb_tol, "cheb_max_degree": self.cheb_max_degree,
            "cutoff": {"inner": self.cutoff.inner, "outer": self.cutoff.outer,
                       "dilation": self.cutoff.dilation},
            "strict": self.strict,
            "s_integral": {"tol": self.spec.tol, "s_max_cap": self.spec.s_max_cap,
                           "initial_panels": self.spec.initial_panels,
                           "wavelengths": self.spec.wavelengths,
                           "tail_decay": self.spec.tail_decay,
                           "flux_orientation": self.spec.flux_orientation},
        }


DEFAULT_CONFIG = KernelConfig()


@dataclass(frozen=True)
class DyadicTerm:
    ell: int
    branch: int
    j: int
    value: complex
    envelope: float

    @property
    def ratio(self) -> float:
        return abs(self.value) / self.envelope


@dataclass(frozen=True)
class KernelResult:
    value: complex
    trunc_err: float
    j_min: int
    j_max: int
    terms: tuple[DyadicTerm, ...] = ()

    def __complex__(self):
        return complex(self.value)


def j0_index(t: float, r: float) -> int:
    """floor(log2(r/|t|)/3): the shell where the phase has its critical point."""
    return math.floor(math.log2(r / abs(t)) / 3.0)


def envelope(j: int, j0: int, t: float) -> float:
    """2^{2j} (1 + 2^{4j}|t|)^{-1/2} near j0, exponent -1 away from it."""
    base = 1.0 + 2.0 ** (4 * j) * abs(t)
    power = -0.5 if abs(j - j0) <= 2 else -1.0
    return 2.0 ** (2 * j) * base ** power


def _support(cfg: KernelConfig):
    return cfg.bump.support


# --------------------------------------------------------------------------
# peeled amplitudes
# --------------------------------------------------------------------------

def _peeled_f(sign: int, z):
    """exp(-+ i z) F^{+-}(z) for z > 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape, dtype=complex)
    big = z >= 1.0
    if big.any():
        zb = z[big]
        out[big] = (specfun.omega(sign, zb)
                    - np.exp(-sign * 1j * zb) * specfun.hankel0(sign, "imaginary", zb))
    if (~big).any():
        zs = z[~big]
        out[~big] = np.exp(-sign * 1j * zs) * specfun.hankel0_ray_difference(sign, zs)
    return out


def _peeled_hankel(sign: int, z):
    """exp(-+ i z) H_0^{+-}(z) for z > 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape, dtype=complex)
    big = z >= 1.0
    if big.any():
        out[big] = specfun.omega(sign, z[big])
    if (~big).any():
        zs = z[~big]
        out[~big] = np.exp(-sign * 1j * zs) * specfun.hankel0(sign, "real", zs)
    return out


def _shell_integral(t, j, b, amplitude, cfg: KernelConfig):
    """2^{2j} int s e^{-i(t 2^{4j} s^4 + b s)} phi_0(s) amp(s) ds."""
    a = t * 2.0 ** (4 * j)
    if abs(a) > cfg.a_cap:
        raise BudgetExceeded(
            f"shell j={j} has 2^(4j)|t| = {abs(a):.3g} above the cap {cfg.a_cap:g}")
    bump = cfg.bump
    scale = 2.0 ** (2 * j)

    def amp(s):
        return s * phi0(bump, s) * amplitude(s)

    val = oscillatory_integral(PhaseSpec(a, b), amp, tol=1e-3 * cfg.tol / scale,
                               interval=_support(cfg), panel_cap=cfg.panel_cap)
    return scale * val


def k1j(branch, t: float, j: int, x: PolarPoint, y: PolarPoint,
        cfg: KernelConfig = DEFAULT_CONFIG) -> complex:
    """Shell j of int lam e^{-i t lam^4} F(lam |x - y|) d lam."""
    sign = specfun._sign_of(branch)
    if t == 0:
        raise DegenerateInput("t must be nonzero")
    r = distance(x, y)
    if r == 0.0:
        raise DegenerateInput("x and y coincide")
    scale = 2.0 ** j
    return _shell_integral(t, j, -sign * scale * r,
                           lambda s: _peeled_f(sign, scale * s * r), cfg)


# --------------------------------------------------------------------------
# diffracted wave: octave-wise Chebyshev interpolation of exp(-+ i lam n0) G
# --------------------------------------------------------------------------

@lru_cache(maxsize=8192)
def _octave_interpolant(sign, p, x, y, lo, spec, cheb_tol, max_degree):
    """Chebyshev coefficients of exp(-+ i lam n0) G(lam) on [lo, 2 lo]."""
    n0 = x.r + y.r
    degree = 16
    cache: dict[int, complex] = {}
    while True:
        k = np.arange(degree + 1)
        # Chebyshev-Lobatto points are nested under doubling of the degree
        missing = [i for i in k if (i * (max_degree // degree)) not in cache]
        if missing:
            xi = np.cos(np.pi * np.asarray(missing) / degree)
            lams = lo * (1.5 + 0.5 * xi)
            vals = diffracted_integral("F", sign, p, lams, x, y, spec)
            vals = vals * np.exp(-sign * 1j * lams * n0)
            for i, v in zip(missing, vals):
                cache[i * (max_degree // degree)] = v
        nodes = np.cos(np.pi * k / degree)
        vals = np.array([cache[i * (max_degree // degree)] for i in k])
        coef = cheb.chebfit(nodes, vals, degree)
        tail = np.abs(coef[-max(2, degree // 8):]).max()
        if tail <= cheb_tol or degree >= max_degree:
            return coef, float(tail)
        degree *= 2


def _g_peeled(sign, p, x, y, lam, cfg: KernelConfig):
    """exp(-+ i lam n0) G(lam) on any lam > 0 via cached octave interpolants."""
    lam = np.asarray(lam, dtype=float)
    base = cfg.cutoff.dilation
    octave = np.floor(np.log2(lam / base) + 1e-12).astype(int)
    out = np.empty(lam.shape, dtype=complex)
    for k in np.unique(octave):
        lo = base * 2.0 ** int(k)
        coef, _ = _octave_interpolant(sign, p, x, y, lo, cfg.spec,
                                      cfg.cheb_tol, cfg.cheb_max_degree)
        sel = octave == k
        out[sel] = cheb.chebval(2.0 * lam[sel] / lo - 3.0, coef)
    return out


def k2j(branch, t: float, j: int, x: PolarPoint, y: PolarPoint,
        cfg: KernelConfig = DEFAULT_CONFIG, *, p: FluxProfile) -> complex:
    """Shell j of int lam e^{-i t lam^4} G(lam) d lam."""
    sign = specfun._sign_of(branch)
    if t == 0:
        raise DegenerateInput("t must be nonzero")
    if reduced_flux(p) == 0.0:
        return 0.0j
    if distance(x, y) == 0.0:
        raise DegenerateInput("x and y coincide")
    scale = 2.0 ** j
    n0 = x.r + y.r
    return _shell_integral(t, j, -sign * scale * n0,
                           lambda s: _g_peeled(sign, p, x, y, scale * s, cfg), cfg)


# --------------------------------------------------------------------------
# assembly
# --------------------------------------------------------------------------

def _low_tail_bound(j_min: int, weight: float) -> float:
    """Bound for the shells below j_min: weight * sum_{j<j_min} 2^{2j} / 2."""
    return weight * 0.5 * 4.0 ** j_min / 3.0


def _auto_j_min(weight: float, tol: float) -> int:
    j = 0
    while _low_tail_bound(j, weight) > 0.25 * tol:
        j -= 1
    return j


def _crossover_index(t: float) -> int:
    """j'_0 with 2^{4 j'_0} |t| ~ 1."""
    return math.floor(-math.log2(abs(t)) / 4.0)


def _omitted_high(recent) -> float:
    """Geometric extrapolation of the shells past the last one summed."""
    if not recent:
        return 0.0
    last = recent[-1]
    if len(recent) < 2 or recent[-2] == 0.0:
        return last
    q = last / recent[-2]
    return last * q / (1.0 - q) if q < 0.5 else last


def _dyadic_sum(shell_terms, t, j_min, j_hint, cfg: KernelConfig, low_bound):
    """Sum shells from j_min upward until they have decayed.

    ``shell_terms(j)`` returns (value, [DyadicTerm...]).  Returns the sum,
    the truncation estimate, the last shell used and the term list.
    """
    total = 0.0j
    terms: list[DyadicTerm] = []
    recent: list[float] = []
    j = j_min
    certified = False
    while True:
        if cfg.j_max is not None and j > cfg.j_max:
            certified = cfg.j_max >= j_hint
            break
        if abs(t) * 2.0 ** (4 * j) > cfg.a_cap:
            break
        value, pieces = shell_terms(j)
        total += value
        terms.extend(pieces)
        recent.append(abs(value))
        if (cfg.j_max is None and j >= j_hint + 3 and len(recent) >= 2
                and recent[-1] + recent[-2] < 0.1 * cfg.tol):
            certified = True
            break
        j += 1
    j_last = j if certified and cfg.j_max is None else j - 1
    trunc = low_bound + _omitted_high(recent)
    if cfg.strict and (not certified or trunc > cfg.tol):
        raise TruncationUncertified(
            f"dyadic truncation estimate {trunc:.3g} exceeds tol {cfg.tol:g}")
    return total, trunc, j_last, terms


def kernel(t: float, x: PolarPoint, y: PolarPoint, p: FluxProfile,
           cfg: KernelConfig = DEFAULT_CONFIG, *, with_terms: bool = False) -> KernelResult:
    """Propagator kernel e^{-itL}(x, y) with a truncation estimate."""
    if t == 0:
        raise DegenerateInput("t must be nonzero")
    r = distance(x, y)
    if r == 0.0:
        raise DegenerateInput("x and y coincide")
    amp_a = a_alpha(p, x.theta, y.theta, orientation=cfg.spec.flux_orientation)
    has_diffraction = reduced_flux(p) != 0.0
    l1 = b_l1(p, x.theta, y.theta, cfg.spec) if has_diffraction else 0.0
    weight = STONE_WEIGHT * 2.0 * (abs(amp_a) * F_SUP + F_SUP * l1)
    j_min = cfg.j_min if cfg.j_min is not None else _auto_j_min(weight, cfg.tol)
    low = 0.0 if cfg.j_min is not None else _low_tail_bound(j_min, weight)
    n0 = x.r + y.r
    j_hint = max(j0_index(t, r), j0_index(t, n0), _crossover_index(t))
    j0_direct = j0_index(t, r)
    j0_diff = j0_index(t, n0)

    def shell(j):
        pieces = []
        value = 0.0j
        for sign in (1, -1):
            v1 = k1j(sign, t, j, x, y, cfg)
            value += amp_a * v1
            if with_terms:
                pieces.append(DyadicTerm(1, sign, j, v1, envelope(j, j0_direct, t)))
            if has_diffraction:
                v2 = k2j(sign, t, j, x, y, cfg, p=p)
                value += v2
                if with_terms:
                    pieces.append(DyadicTerm(2, sign, j, v2, envelope(j, j0_diff, t)))
        return STONE_WEIGHT * value, pieces

    total, trunc, j_last, terms = _dyadic_sum(shell, t, j_min, j_hint, cfg, low)
    return KernelResult(complex(total), float(trunc), j_min, j_last, tuple(terms))


def free_kernel_closed_form(t: float) -> complex:
    """Value at r = 0: (1/(2 pi)) (sqrt(pi)/4) (i t)^{-1/2}."""
    return math.sqrt(math.pi) / (8.0 * math.pi) * (1j * t) ** -0.5


def free_kernel(t: float, r: float, cfg: KernelConfig = DEFAULT_CONFIG,
                *, full_output: bool = False):
    """(1/(2 pi)) int_0^inf lam e^{-i t lam^4} J_0(lam r) d lam by dyadic shells.

    J_0 is split into the two Hankel waves for shells where ``2^j r`` is
    large, so each oscillatory integral sees a single linear phase.
    """
    if t == 0:
        raise DegenerateInput("t must be nonzero")
    r = abs(float(r))
    weight = 1.0 / (2.0 * math.pi)
    j_min = cfg.j_min if cfg.j_min is not None else _auto_j_min(weight, cfg.tol)
    low = 0.0 if cfg.j_min is not None else _low_tail_bound(j_min, weight)
    j_hint = _crossover_index(t) if r == 0 else max(j0_index(t, r), _crossover_index(t))

    def shell(j):
        scale = 2.0 ** j
        if scale * r <= 1.0:
            val = _shell_integral(t, j, 0.0,
                                  lambda s: specfun.bessel_j0(scale * s * r), cfg)
        else:
            val = 0.0j
            for sign in (1, -1):
                val += 0.5 * _shell_integral(
                    t, j, -sign * scale * r,
                    lambda s, sg=sign: _peeled_hankel(sg, scale * s * r), cfg)
        return weight * val, []

    total, trunc, j_last, _ = _dyadic_sum(shell, t, j_min, j_hint, cfg, low)
    if full_output:
        return KernelResult(complex(total), float(trunc), j_min, j_last)
    return complex(total)
