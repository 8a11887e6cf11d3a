"""Resolvent kernels of the 2D Aharonov-Bohm-type operator.

The second-order kernel splits into a direct wave, weighted by the angular
factor ``A``, and a diffracted wave, an integral over ``s >= 0`` of the
Hankel function at ``lambda |n(s)|`` against the weight ``B(s)``.  The
fourth-order kernel follows from the partial-fraction splitting

    (L^2 - lambda^4)^{-1} = (2 lambda^2)^{-1} [(L - lambda^2)^{-1} - (L + lambda^2)^{-1}].

Angular weights
---------------
With ``D = theta_x - theta_y``, ``a12`` the flux integral from ``theta_y`` to
``theta_x`` and ``ab`` the total flux reduced to [0, 1):

    A = exp(i * flux from theta_y to theta_y + wrap(D)) / (4 pi^2)
    B = -exp(i (a12 - ab D)) / (4 pi^3)
        * sin(ab pi) [cosh((1-ab) s) + e^{iD} cosh(ab s)] / (cosh s + cos D)

where ``wrap`` maps into [-pi, pi).  These are the forms that reproduce
the partial-wave expansion of the Aharonov-Bohm resolvent for every flux
and both orientations of the angle pair.  ``b_alpha(..., literal=True)``
returns the uncorrected textbook display instead.

Integration in s
----------------
On the real axis the integrand is integrated up to the point where
``|n(s)| = U``, with ``U`` a few wavelengths past ``|x| + |y|``.  Beyond that the
integral is rewritten in ``u = |n(s)|`` and the contour is turned into the
upper (``+``) or lower (``-``) half plane, where ``H_0^{+-}(lambda u)`` decays
exponentially.  ``B`` is analytic there: its singularities sit at
``u = |x - y|``, ``||x| - |y||`` and ``|x| + |y|``, all left of ``U``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .flux import FluxProfile, partial_flux, reduced_flux
from .quadrature import gauss_legendre, graded_edges, integrate_adaptive

TWO_PI = 2.0 * math.pi
# zero-flux calibration: kappa (i/(4 pi)) H / (4 pi^2) = (i/4) H
KAPPA = 4.0 * math.pi ** 3
EPS_DEN = 1e-12


class SingularDenominator(ArithmeticError):
    """cosh s + cos(theta_x - theta_y) vanished (s = 0 with opposite angles)."""


class DegenerateInput(ValueError):
    """Coincident points, or another input outside the kernel's domain."""


@dataclass(frozen=True)
class PolarPoint:
    r: float
    theta: float

    def __post_init__(self):
        if not (self.r > 0 and math.isfinite(self.r)):
            raise DegenerateInput("points must lie off the origin (r > 0)")
        if not math.isfinite(self.theta):
            raise DegenerateInput("angle must be finite")
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)
        object.__setattr__(self, "r", float(self.r))

    @classmethod
    def parse(cls, text: str) -> "PolarPoint":
        r, theta = (float(v) for v in text.split(","))
        return cls(r, theta)

    def cartesian(self):
        return self.r * math.cos(self.theta), self.r * math.sin(self.theta)


def distance(x: PolarPoint, y: PolarPoint) -> float:
    """|x - y| without cancellation for nearby points."""
    d = x.theta - y.theta
    # |x-y|^2 = (rx - ry)^2 + 4 rx ry sin^2(d/2)
    return math.sqrt((x.r - y.r) ** 2 + 4.0 * x.r * y.r * math.sin(0.5 * d) ** 2)


@dataclass(frozen=True)
class SIntegralSpec:
    """Controls for the s-integrals.

    ``tol`` is an absolute target for each integral; ``s_max_cap`` bounds the
    real-axis range; ``initial_panels`` scales the starting panel density;
    ``wavelengths`` is how far past |x|+|y| the real-axis part runs before
    the contour turns; ``tail_decay`` is the e-folding depth of the
    rotated tail.  ``flux_orientation`` picks the direction of the partial
    flux (``"y_to_x"`` or ``"x_to_y"``).
    """

    tol: float = 1e-10
    s_max_cap: float = 60.0
    initial_panels: int = 1
    wavelengths: float = 4.0
    tail_decay: float = 40.0
    flux_orientation: str = "x_to_y"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.s_max_cap > 0:
            raise ValueError("s_max_cap must be positive")
        if self.initial_panels < 1:
            raise ValueError("initial_panels must be >= 1")
        if self.flux_orientation not in ("y_to_x", "x_to_y"):
            raise ValueError("flux_orientation must be 'y_to_x' or 'x_to_y'")


DEFAULT_SPEC = SIntegralSpec()


def _wrap(d):
    """Map angle differences into [-pi, pi)."""
    return (np.asarray(d) + math.pi) % TWO_PI - math.pi


def _oriented(theta_x, theta_y, orientation):
    """Angles ordered so the flux is collected from the second to the first."""
    if orientation == "y_to_x":
        return theta_x, theta_y
    if orientation == "x_to_y":
        return theta_y, theta_x
    raise ValueError("orientation must be 'y_to_x' or 'x_to_y'")


def a_alpha(p: FluxProfile, theta_x, theta_y, *, orientation="y_to_x"):
    """Angular weight of the direct wave; modulus 1/(4 pi^2).

    The phase is the flux collected along the shorter arc from theta_y to
    theta_x.  For constant flux this equals
    ``e^{i a12} (1 if |D| < pi else e^{-2 pi i a sgn D})``; at |D| = pi the
    arc is taken to run clockwise.
    """
    t1, t2 = _oriented(theta_x, theta_y, orientation)
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    phase = partial_flux(p, t2, t2 + _wrap(t1 - t2))
    out = np.exp(1j * phase) / (4.0 * math.pi ** 2)
    return out[()] if np.ndim(out) == 0 else out


def _cos_half_sq(d):
    return np.cos(0.5 * d) ** 2


def _b_bracket(s, ab, d):
    """sin(ab pi)[cosh((1-ab)s) + e^{iD}cosh(ab s)] / (cosh s + cos D).

    Numerator and denominator are assembled from 2 sinh^2 terms and
    cos^2(D/2) so nothing cancels as s -> 0 and D -> pi.  ``s`` may be
    complex.
    """
    c2 = _cos_half_sq(d)
    den = 2.0 * np.sinh(0.5 * s) ** 2 + 2.0 * c2
    e = np.exp(1j * d)
    num = (2.0 * np.sinh(0.5 * (1.0 - ab) * s) ** 2
           + e * 2.0 * np.sinh(0.5 * ab * s) ** 2
           + 2.0 * np.cos(0.5 * d) * np.exp(0.5j * d))
    return math.sin(ab * math.pi) * num / den, den


def _b_phase(p: FluxProfile, t1, t2):
    """exp(i (flux from t2 to t1 - reduced flux * (t1 - t2)))."""
    return np.exp(1j * (partial_flux(p, t2, t1) - reduced_flux(p) * (t1 - t2)))


def _literal_b(p, s, theta_x, theta_y):
    al = p.a0
    d = theta_x - theta_y
    a12 = partial_flux(p, theta_y, theta_x)
    pref = -np.exp(-1j * al * d - 1j * a12) / (4.0 * math.pi ** 2)
    den = np.cosh(s) + np.cos(d)
    frac = ((np.exp(-s) + np.cos(d)) * np.sinh(s * al)
            + 1j * np.sin(d) * np.cosh(s * al)) / den
    return pref * (math.sin(math.pi * abs(al)) * np.exp(-s * abs(al))
                   + math.sin(al * math.pi) * frac)


def b_alpha(p: FluxProfile, s, theta_x, theta_y, *, literal=False,
            orientation="y_to_x"):
    """Angular weight of the diffracted wave at parameter ``s > 0``.

    ``literal=True`` evaluates the uncorrected display with the raw flux;
    it agrees with the default only for 0 < flux < 1 up to the phase and
    the 1/pi factor.
    """
    s_arr = np.asarray(s)
    if np.any(np.real(s_arr) < 0):
        raise DegenerateInput("b_alpha needs s >= 0")
    t1, t2 = _oriented(float(theta_x), float(theta_y), orientation)
    d = t1 - t2
    den_check = 2.0 * np.sinh(0.5 * np.real(s_arr)) ** 2 + 2.0 * _cos_half_sq(d)
    if np.any(den_check < EPS_DEN):
        raise SingularDenominator(
            "cosh s + cos(theta_x - theta_y) is below 1e-12 (s near 0, angles opposite)")
    if literal:
        out = _literal_b(p, s_arr, theta_x, theta_y)
        return out[()] if np.ndim(out) == 0 else out
    ab = reduced_flux(p)
    if ab == 0.0:
        out = np.zeros(s_arr.shape, dtype=complex)
        return out[()] if out.ndim == 0 else out
    bracket, _ = _b_bracket(s_arr, ab, d)
    out = -_b_phase(p, t1, t2) * bracket / (4.0 * math.pi ** 3)
    return out[()] if np.ndim(out) == 0 else out


def n_norm(s, rx, ry):
    """|n(s)| = sqrt((rx+ry)^2 + 2 rx ry (cosh s - 1)), cancellation-free."""
    s = np.asarray(s, dtype=float)
    out = np.sqrt((rx + ry) ** 2 + 4.0 * rx * ry * np.sinh(0.5 * s) ** 2)
    return out[()] if out.ndim == 0 else out


def _b_envelope(ab, s):
    """Upper bound of |B| for s > 0, uniform in the angles."""
    num = math.sin(ab * math.pi) * (np.cosh((1 - ab) * s) + np.cosh(ab * s))
    return num / (2.0 * np.sinh(0.5 * s) ** 2) / (4.0 * math.pi ** 3)


def _spike_width(d):
    """Scale in s of the peak of 1/(cosh s + cos D) near s = 0."""
    return max(2.0 * abs(math.cos(0.5 * d)), 1e-8)


def b_l1(p: FluxProfile, theta_x, theta_y, spec: SIntegralSpec = DEFAULT_SPEC) -> float:
    """int_0^inf |B(s)| ds, truncated where the analytic tail is below tol/10."""
    ab = reduced_flux(p)
    if ab == 0.0:
        return 0.0
    d = float(theta_x) - float(theta_y)
    if 2.0 * _cos_half_sq(d) < EPS_DEN:
        raise SingularDenominator("integrand is not integrable at s = 0 for opposite angles")
    rate = min(ab, 1.0 - ab)
    s_end = _tail_point(ab, rate, spec.tol / 10.0)
    h = 0.5 / spec.initial_panels
    edges = graded_edges(0.0, s_end, _spike_width(d) / 8.0, h)
    val, _ = integrate_adaptive(
        lambda s: np.abs(b_alpha(p, s, theta_x, theta_y)), edges, spec.tol / 2.0)
    return float(val.real)


def _tail_point(ab, rate, target, cap=600.0):
    """Smallest s (on a grid) with envelope(s)/rate < target."""
    s = 1.0
    while s < cap:
        if _b_envelope(ab, s) / rate < target:
            return s
        s += 1.0
    return cap


# --------------------------------------------------------------------------
# s-integrals of Hankel-type functions against B
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Geometry:
    rx: float
    ry: float
    n0: float
    prod: float

    @classmethod
    def of(cls, x: PolarPoint, y: PolarPoint):
        return cls(x.r, y.r, x.r + y.r, x.r * y.r)

    def s_of_u(self, u):
        w = np.sqrt((u * u - self.n0 ** 2) / (4.0 * self.prod))
        return 2.0 * np.arcsinh(w)

    def ds_du(self, u, s):
        return u / (self.prod * np.sinh(s))


def _kernel_values(kind, sign, arg, cfg):
    """H_0^{sign}(arg) (kind 'H') or F^{sign}(arg) (kind 'F'), arg > 0."""
    if kind == "H":
        return specfun.hankel0(sign, "real", arg, cfg=cfg)
    return specfun.hankel0_ray_difference(sign, arg, cfg=cfg)


def _doubled(edges, level):
    """Split every panel of ``edges`` into 2**level equal parts."""
    if level == 0:
        return edges
    k = 2 ** level
    frac = np.arange(k) / k
    inner = (edges[:-1, None] + np.diff(edges)[:, None] * frac).ravel()
    return np.append(inner, edges[-1])


def _gl_grid(edges, n=15):
    x, w = gauss_legendre(n)
    half = 0.5 * np.diff(edges)[:, None]
    nodes = edges[:-1, None] + half * (x + 1.0)
    return nodes.ravel(), (half * w).ravel()


def diffracted_integral(kind, sign, p: FluxProfile, lams, x: PolarPoint, y: PolarPoint,
                        spec: SIntegralSpec = DEFAULT_SPEC, cfg=specfun.DEFAULT_REGIME,
                        full_output=False):
    """int_0^inf K(lam |n(s)|) B(s) ds for a batch of ``lams``.

    ``kind`` is ``"H"`` for the Hankel function or ``"F"`` for the
    difference F.  All wavenumbers share one s-grid; the grid is doubled
    until two successive levels agree to ``spec.tol``.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    if np.any(~(lams > 0)):
        raise DegenerateInput("lambda must be positive")
    ab = reduced_flux(p)
    if ab == 0.0:
        zeros = np.zeros(lams.shape, dtype=complex)
        return (zeros, 0.0) if full_output else zeros
    geo = _Geometry.of(x, y)
    t1, t2 = _oriented(x.theta, y.theta, spec.flux_orientation)
    d = t1 - t2
    if 2.0 * _cos_half_sq(d) < EPS_DEN:
        raise SingularDenominator("diffracted-wave integral diverges for opposite angles")
    pref = -_b_phase(p, t1, t2) * math.sin(ab * math.pi) / (4.0 * math.pi ** 3)
    sin_ab = math.sin(ab * math.pi)
    lam_min, lam_max = lams.min(), lams.max()

    # real axis up to u = U; past U the contour turns off the axis
    u_turn = max(geo.n0 + spec.wavelengths * TWO_PI / lam_min,
                 1.5 * cfg.crossover / lam_min)
    s_turn = min(float(geo.s_of_u(u_turn)), spec.s_max_cap)
    u_turn = float(n_norm(s_turn, geo.rx, geo.ry))
    h = min(0.5, s_turn / 4.0) / spec.initial_panels
    base = graded_edges(0.0, s_turn, _spike_width(d) / 8.0, h)
    u_marks = np.arange(geo.n0, u_turn, math.pi / lam_max)[1:]
    base = np.union1d(base, geo.s_of_u(u_marks))
    tail_base = np.linspace(0.0, spec.tail_decay, int(spec.tail_decay / 2) + 1)
    with_tail = s_turn < spec.s_max_cap

    def evaluate(level):
        s, w = _gl_grid(_doubled(base, level))
        u = n_norm(s, geo.rx, geo.ry)
        weight = w * _b_bracket(s, ab, d)[0] / sin_ab
        args = np.multiply.outer(lams, u)
        vals = _kernel_values(kind, sign, args.ravel(), cfg).reshape(args.shape)
        total = vals @ weight
        if with_tail:
            tau, wt = _gl_grid(_doubled(tail_base, level))
            uc = u_turn + 1j * sign * np.divide.outer(tau, lams).T
            sc = geo.s_of_u(uc)
            hk = specfun.hankel0_complex_asym(sign, lams[:, None] * uc, cfg)
            g = hk * _b_bracket(sc, ab, d)[0] / sin_ab * geo.ds_du(uc, sc)
            total = total + (g * (1j * sign / lams[:, None])) @ wt
        return pref * total

    prev = evaluate(0)
    err = np.inf
    for level in range(1, 6):
        cur = evaluate(level)
        err = float(np.max(np.abs(cur - prev)))
        prev = cur
        if err <= spec.tol:
            break
    return (prev, err) if full_output else prev


def _check_points(x: PolarPoint, y: PolarPoint):
    if distance(x, y) == 0.0:
        raise DegenerateInput("x and y coincide")


def resolvent2(branch, p: FluxProfile, lam: float, x: PolarPoint, y: PolarPoint,
               spec: SIntegralSpec = DEFAULT_SPEC):
    """Boundary value of (L_2 - (lam^2 +- i0))^{-1}(x, y)."""
    sign = specfun._sign_of(branch)
    if not lam > 0:
        raise DegenerateInput("lambda must be positive")
    _check_points(x, y)
    direct = specfun.hankel0(sign, "real", lam * distance(x, y)) * a_alpha(
        p, x.theta, y.theta, orientation=spec.flux_orientation)
    diffracted = diffracted_integral("H", sign, p, lam, x, y, spec)[0]
    return complex(KAPPA * sign * 1j / (4.0 * math.pi) * (direct + diffracted))


def f_pm(branch, rho):
    """F(rho) = H_0(rho) - H_0(i rho); the logarithms cancel at rho = 0."""
    return specfun.hankel0_ray_difference(branch, rho)


def f_pm_limit(branch) -> complex:
    """Value of F at rho = 0+, equal to 1 for both branches."""
    specfun._sign_of(branch)
    return 1.0 + 0.0j


def g_pm(branch, p: FluxProfile, lam: float, x: PolarPoint, y: PolarPoint,
         spec: SIntegralSpec = DEFAULT_SPEC):
    """int_0^inf F(lam |n(s)|) B(s) ds."""
    sign = specfun._sign_of(branch)
    if not lam > 0:
        raise DegenerateInput("lambda must be positive")
    return complex(diffracted_integral("F", sign, p, lam, x, y, spec)[0])


def resolvent4(branch, p: FluxProfile, lam: float, x: PolarPoint, y: PolarPoint,
               spec: SIntegralSpec = DEFAULT_SPEC):
    """Boundary value of (L_2^2 - (lam^4 +- i0))^{-1}(x, y)."""
    sign = specfun._sign_of(branch)
    if not lam > 0:
        raise DegenerateInput("lambda must be positive")
    _check_points(x, y)
    a = a_alpha(p, x.theta, y.theta, orientation=spec.flux_orientation)
    direct = a * f_pm(sign, lam * distance(x, y))
    diffracted = g_pm(sign, p, lam, x, y, spec)
    return complex(KAPPA * sign * 1j / (8.0 * math.pi * lam * lam) * (direct + diffracted))


def free_resolvent2(branch, lam, r):
    """Free kernel +-(i/4) H_0^{+-}(lam r)."""
    sign = specfun._sign_of(branch)
    return sign * 0.25j * specfun.hankel0(sign, "real", lam * r)


def free_resolvent4(branch, lam, r):
    """Free splitting (1/(2 lam^2)) (+-(i/4) H_0(lam r) - K_0(lam r)/(2 pi))."""
    return (free_resolvent2(branch, lam, r)
            - specfun.bessel_k0(lam * r) / TWO_PI) / (2.0 * lam * lam)


def calibration_constant(lam=1.0, r=1.0) -> float:
    """Ratio of the free resolvent to the zero-flux display without kappa."""
    display = 1j / (4.0 * math.pi) * specfun.hankel0(1, "real", lam * r) / (4.0 * math.pi ** 2)
    return float((free_resolvent2(1, lam, r) / display).real)
