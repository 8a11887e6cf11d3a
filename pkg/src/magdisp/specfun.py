"""Order-zero Bessel and Hankel functions on the two rays used by the kernel.

Small arguments use the ascending power series; large arguments use the
Hankel asymptotic expansion truncated near its smallest term.  ``K_0`` and
``I_0`` come from scipy's Cephes wrappers.

All functions accept scalars or arrays and are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

EULER_GAMMA = 0.57721566490153286061
_TWO_OVER_PI = 2.0 / math.pi


class DomainError(ValueError):
    """Argument outside the domain of the requested function."""


@dataclass(frozen=True)
class SeriesRegimeConfig:
    crossover: float = 12.0
    series_terms: int = 60
    asymptotic_terms: int = 40

    def __post_init__(self):
        if not self.crossover >= 1.0:
            raise ValueError("crossover must be >= 1")
        if self.series_terms < 1 or self.asymptotic_terms < 1:
            raise ValueError("term counts must be positive")


DEFAULT_REGIME = SeriesRegimeConfig()


def _asarray(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return arr[()] if scalar else arr


def _check_positive(x, name):
    if np.any(~(x > 0)):
        raise DomainError(f"{name} requires a positive argument")


# --------------------------------------------------------------------------
# ascending power series
# --------------------------------------------------------------------------

def _series_terms(x, n_terms):
    """Yield (k, t_k) with t_k = (-1)^k (x/2)^{2k} / (k!)^2."""
    q = 0.25 * x * x
    t = np.ones_like(x)
    yield 0, t
    for k in range(1, n_terms):
        t = -t * q / (k * k)
        yield k, t
        if np.all(np.abs(t) < 1e-18):
            break


def _j0_y0_series(x, n_terms, derivs=False):
    """J0, Y0 (and derivatives) from the ascending series, x > 0."""
    j0 = np.zeros_like(x)
    s = np.zeros_like(x)       # sum H_k t_k
    dj0 = np.zeros_like(x)     # sum 2k t_k / x
    ds = np.zeros_like(x)
    harmonic = 0.0
    for k, t in _series_terms(x, n_terms):
        j0 += t
        if k:
            harmonic += 1.0 / k
            s += harmonic * t
            if derivs:
                dj0 += 2 * k * t
                ds += 2 * k * harmonic * t
    log_part = np.log(0.5 * x) + EULER_GAMMA
    y0 = _TWO_OVER_PI * (log_part * j0 - s)
    if not derivs:
        return j0, y0
    dj0 /= x
    ds /= x
    dy0 = _TWO_OVER_PI * (j0 / x + log_part * dj0 - ds)
    return j0, y0, dj0, dy0


# --------------------------------------------------------------------------
# Hankel asymptotic expansion
# --------------------------------------------------------------------------

def _asym_sum(z, nu, n_terms, sign):
    """sum_k (sign i)^k a_k(nu) / z^k, truncated at the smallest term.

    Works for complex ``z``; each element stops independently once its
    terms stop decreasing.
    """
    z = np.asarray(z, dtype=complex)
    mu = 4.0 * nu * nu
    total = np.ones_like(z)
    term = np.ones_like(z)
    prev_mag = np.full(z.shape, np.inf)
    active = np.ones(z.shape, dtype=bool)
    unit = 1j * sign
    for k in range(1, n_terms):
        term = term * unit * (mu - (2 * k - 1) ** 2) / (8.0 * k * z)
        mag = np.abs(term)
        active &= mag < prev_mag
        if not active.any():
            break
        total = np.where(active, total + term, total)
        prev_mag = mag
        active &= mag > 1e-17 * np.abs(total)
    return total


def _hankel_asym(z, nu, sign, n_terms):
    """H_nu^{sign}(z) for large |z| (sign = +1 or -1), complex z allowed."""
    z = np.asarray(z, dtype=complex)
    phase = np.exp(sign * 1j * (z - 0.5 * nu * math.pi - 0.25 * math.pi))
    return np.sqrt(_TWO_OVER_PI / z) * phase * _asym_sum(z, nu, n_terms, sign)


def _asym_sum_real(x, nu, n_terms):
    """(P, Q) with sum_k (+-i)^k a_k(nu)/x^k = P +- i Q, for real x > 0.

    Same truncation rule as :func:`_asym_sum`, in real arithmetic.
    """
    x = np.asarray(x, dtype=float)
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    prev_mag = np.full(x.shape, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, n_terms):
        term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        mag = np.abs(term)
        active &= mag < prev_mag
        if not active.any():
            break
        # (i)^k cycles through i, -1, -i, 1
        signed = np.where(active, term, 0.0)
        if k % 4 == 1:
            q += signed
        elif k % 4 == 2:
            p -= signed
        elif k % 4 == 3:
            q -= signed
        else:
            p += signed
        prev_mag = mag
        active &= mag > 1e-17 * np.abs(p)
    return p, q


def _hankel_asym_real(x, nu, n_terms):
    """H_nu^+(x) for real x > 0 via the real-arithmetic series."""
    p, q = _asym_sum_real(x, nu, n_terms)
    phase = np.exp(1j * (x - 0.5 * nu * math.pi - 0.25 * math.pi))
    return np.sqrt(_TWO_OVER_PI / x) * phase * (p + 1j * q)


def _amplitude_asym(x, sign, n_terms):
    """omega_sign(x) = exp(-sign i x) H_0^sign(x) from the asymptotic series."""
    x = np.asarray(x, dtype=float)
    p, q = _asym_sum_real(x, 0.0, n_terms)
    return (np.sqrt(_TWO_OVER_PI / x) * np.exp(-sign * 0.25j * math.pi)
            * (p + sign * 1j * q))


# --------------------------------------------------------------------------
# public real-axis functions
# --------------------------------------------------------------------------

def _j0_y0(x, cfg, derivs=False):
    """J0, Y0 (and J0', Y0') for positive x, regime-split."""
    small = x <= cfg.crossover
    j0 = np.empty_like(x)
    y0 = np.empty_like(x)
    if derivs:
        dj0 = np.empty_like(x)
        dy0 = np.empty_like(x)
    if small.any():
        res = _j0_y0_series(x[small], cfg.series_terms, derivs)
        j0[small], y0[small] = res[0], res[1]
        if derivs:
            dj0[small], dy0[small] = res[2], res[3]
    big = ~small
    if big.any():
        h0 = _hankel_asym_real(x[big], 0.0, cfg.asymptotic_terms)
        j0[big], y0[big] = h0.real, h0.imag
        if derivs:
            h1 = _hankel_asym_real(x[big], 1.0, cfg.asymptotic_terms)
            dj0[big], dy0[big] = -h1.real, -h1.imag
    if derivs:
        return j0, y0, dj0, dy0
    return j0, y0


def bessel_j0(x, cfg: SeriesRegimeConfig = DEFAULT_REGIME):
    """Bessel function J_0 (even, entire)."""
    arr, scalar = _asarray(x)
    ax = np.abs(arr)
    out = np.ones_like(ax)
    nz = ax > 0
    if nz.any():
        out[nz] = _j0_y0(ax[nz], cfg)[0]
    return _out(out, scalar)


def bessel_y0(x, cfg: SeriesRegimeConfig = DEFAULT_REGIME):
    """Bessel function Y_0 for x > 0."""
    arr, scalar = _asarray(x)
    _check_positive(arr, "bessel_y0")
    return _out(_j0_y0(arr, cfg)[1], scalar)


def bessel_j0_y0_derivs(x, cfg: SeriesRegimeConfig = DEFAULT_REGIME):
    """Return (J0, Y0, J0', Y0') at x > 0.

    The derivatives come from term-by-term differentiation of the series
    and from the order-one Hankel expansion (J0' = -J1, Y0' = -Y1).
    """
    arr, scalar = _asarray(x)
    _check_positive(arr, "bessel_j0_y0_derivs")
    return tuple(_out(v, scalar) for v in _j0_y0(arr, cfg, derivs=True))


def bessel_k0(x):
    """Modified Bessel function K_0 for x > 0 (Cephes, through scipy)."""
    arr, scalar = _asarray(x)
    _check_positive(arr, "bessel_k0")
    return _out(special.k0(arr), scalar)


def bessel_i0(x):
    """Modified Bessel function I_0."""
    arr, scalar = _asarray(x)
    return _out(special.i0(arr), scalar)


# --------------------------------------------------------------------------
# Hankel functions on the real and imaginary rays
# --------------------------------------------------------------------------

def _sign_of(branch) -> int:
    if branch in (1, "+", "plus"):
        return 1
    if branch in (-1, "-", "minus"):
        return -1
    raise ValueError(f"branch must be '+' or '-', got {branch!r}")


def hankel0(branch, axis, rho, *, minus_continuation="decaying",
            cfg: SeriesRegimeConfig = DEFAULT_REGIME):
    """H_0^{+-} at argument ``rho`` (axis='real') or ``i rho`` (axis='imaginary').

    On the imaginary ray the ``+`` branch is ``(2/(i pi)) K_0(rho)``.  For the
    ``-`` branch two continuations are available:

    ``decaying`` (default)
        ``conj(H_0^+(i rho)) = (2i/pi) K_0(rho)``; this is the value that
        makes the fourth-order splitting reproduce ``(-Delta + lambda^2)^{-1}``
        for both boundary values.
    ``principal``
        the ascending series continued with ``ln(i rho/2) = ln(rho/2) + i pi/2``,
        i.e. ``2 I_0(rho) + (2i/pi) K_0(rho)``, which grows exponentially.
    """
    sign = _sign_of(branch)
    arr, scalar = _asarray(rho)
    _check_positive(arr, "hankel0")
    if axis in ("real", "re"):
        j0, y0 = _j0_y0(arr, cfg)
        out = j0 + sign * 1j * y0
    elif axis in ("imaginary", "imag", "im"):
        k0 = bessel_k0(arr)
        out = (-_TWO_OVER_PI * 1j) * k0 * np.ones_like(arr)
        if sign < 0:
            out = -out
            if minus_continuation == "principal":
                out = out + 2.0 * bessel_i0(arr)
            elif minus_continuation != "decaying":
                raise ValueError("minus_continuation must be 'decaying' or 'principal'")
    else:
        raise ValueError(f"axis must be 'real' or 'imaginary', got {axis!r}")
    return _out(np.asarray(out, dtype=complex), scalar)


def omega(branch, x, cfg: SeriesRegimeConfig = DEFAULT_REGIME):
    """Slowly varying amplitude exp(-+ i x) H_0^{+-}(x) for x >= 1."""
    sign = _sign_of(branch)
    arr, scalar = _asarray(x)
    if np.any(~(arr >= 1.0)):
        raise DomainError("omega requires x >= 1")
    out = np.empty(arr.shape, dtype=complex)
    small = arr <= cfg.crossover
    if small.any():
        j0, y0 = _j0_y0(arr[small], cfg)
        out[small] = np.exp(-sign * 1j * arr[small]) * (j0 + sign * 1j * y0)
    if (~small).any():
        out[~small] = _amplitude_asym(arr[~small], sign, cfg.asymptotic_terms)
    return _out(out, scalar)


def hankel0_complex_asym(sign, z, cfg: SeriesRegimeConfig = DEFAULT_REGIME):
    """H_0^{sign}(z) for complex z with |z| well above the crossover.

    Internal helper for contour-rotated tails; accuracy is that of the
    truncated asymptotic series, about exp(-2|z|).
    """
    return _hankel_asym(z, 0.0, sign, cfg.asymptotic_terms)


_DIFF_SERIES_MAX = 2.0


def _ray_difference_series(rho, n_terms=40):
    """H_0^+(rho) - H_0^+(i rho) from the ascending series.

    The logarithms cancel exactly: only odd powers of q = rho^2/4 survive
    in the Y/K part, so F - 1 ~ rho^2 log(rho) comes out without the
    cancellation of two O(log rho) numbers.
    """
    q = 0.25 * rho * rho
    log_part = np.log(0.5 * rho) + EULER_GAMMA
    j0 = np.ones_like(rho)
    odd = np.zeros_like(rho)
    t = np.ones_like(rho)          # q^k / (k!)^2
    harmonic = 0.0
    for k in range(1, n_terms):
        t = t * q / (k * k)
        harmonic += 1.0 / k
        if k % 2:
            j0 -= t
            odd += (harmonic - log_part) * t
        else:
            j0 += t
        if np.all(t < 1e-18):
            break
    return j0 + 2.0 * _TWO_OVER_PI * 1j * odd


def hankel0_ray_difference(branch, rho, cfg: SeriesRegimeConfig = DEFAULT_REGIME):
    """H_0^{+-}(rho) - H_0^{+-}(i rho) with the decaying continuation.

    Finite at rho = 0 (value 1).  Small arguments use a series in which the
    logarithmic singularities cancel term by term.
    """
    sign = _sign_of(branch)
    arr, scalar = _asarray(rho)
    _check_positive(arr, "hankel0_ray_difference")
    out = np.empty(arr.shape, dtype=complex)
    small = arr <= _DIFF_SERIES_MAX
    if small.any():
        out[small] = _ray_difference_series(arr[small])
    if (~small).any():
        big = arr[~small]
        out[~small] = hankel0(1, "real", big, cfg=cfg) - hankel0(1, "imaginary", big, cfg=cfg)
    if sign < 0:
        out = np.conj(out)
    return _out(out, scalar)
