"""Numerical checks of the decay and envelope bounds.

Every sweep is deterministic: random configurations come from a seeded
``numpy.random.Generator`` and results are assembled in input order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .flux import FluxProfile, flux_distance_to_integers, reduced_flux
from .oscquad import DEFAULT_CUTOFF, PhaseSpec, chi, oscillatory_integral
from .propagator import (DEFAULT_CONFIG, KernelConfig, envelope, free_kernel, j0_index,
                         k1j, k2j, kernel)
from .resolvent import DEFAULT_SPEC, PolarPoint, SIntegralSpec, b_l1, distance

__all__ = [
    "DecayReport", "EnvelopeReport", "PointwiseReport", "loglog_fit",
    "default_sample_set", "envelope_check", "envelope_sweep", "decay_sweep",
    "pointwise_free_check", "vdc_check", "b_l1_sweep", "resolve_threads",
]


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: DK_THREADS wins, then the argument, then the CPU count."""
    env = os.environ.get("DK_THREADS")
    if env:
        return max(1, int(env))
    if threads:
        return max(1, int(threads))
    return os.cpu_count() or 1


def _map(fn, items, threads):
    n = resolve_threads(threads)
    if n == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    slope_se: float
    intercept: float


def loglog_fit(x, y) -> LogLogFit:
    """Ordinary least squares of log y on log x."""
    res = stats.linregress(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)))
    return LogLogFit(float(res.slope), float(res.stderr), float(res.intercept))


# --------------------------------------------------------------------------
# dispersive decay
# --------------------------------------------------------------------------

@dataclass
class DecayReport:
    t_grid: list
    sup_abs: list
    slope: float
    slope_ci: float
    constant: float
    envelope_ratios: dict
    argmax: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.t_grid) != len(self.sup_abs):
            raise ValueError("t_grid and sup_abs differ in length")

    def to_dict(self) -> dict:
        return asdict(self)


def default_sample_set(r_max: float = 20.0, density: int = 1):
    """Point pairs for approximating a supremum over the plane.

    Off-diagonal part: radii log-spaced in [r_max/40, r_max] (3 per
    density step), every pair of radii combined with angle gaps that avoid
    exactly opposite points.  Near-diagonal part: a finer log grid of 24
    radii per density step, each paired with a point 2% further out and
    slightly rotated.  The supremum sits on the near-diagonal family, at a
    radius that grows like t^{1/4}, hence the finer radial grid there.
    """
    radii = np.geomspace(r_max / 40.0, r_max, 3 * density)
    gaps = (np.arange(2 * density) + 0.5) * math.pi / (2 * density)
    pairs = []
    for i, ri in enumerate(radii):
        for rj in radii[i:]:
            for g in gaps:
                pairs.append((PolarPoint(ri, 0.0), PolarPoint(rj, g)))
    for r in np.geomspace(r_max / 40.0, r_max, 24 * density):
        pairs.append((PolarPoint(r, 0.0), PolarPoint(r * 1.02, 0.02 / density)))
    return pairs


def decay_sweep(p: FluxProfile, t_grid, sample_points=None,
                cfg: KernelConfig = DEFAULT_CONFIG, threads: int | None = None,
                free: bool = False) -> DecayReport:
    """sup over the sample set of |kernel(t, x, y)| for each t, and its slope.

    With ``free=True`` the free kernel is used and the samples are radii
    (so r = 0 is allowed).  Failed evaluations are recorded and skipped.
    """
    t_grid = [float(t) for t in t_grid]
    if len(t_grid) < 2 or any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError("t_grid must be strictly increasing")
    if sample_points is None:
        sample_points = [0.0] if free else default_sample_set()

    def run(sample):
        row, errs = [], []
        for t in t_grid:
            try:
                if free:
                    row.append(abs(free_kernel(t, sample, cfg)))
                else:
                    row.append(abs(kernel(t, sample[0], sample[1], p, cfg).value))
            except Exception as exc:  # recorded, the sweep goes on
                row.append(float("nan"))
                errs.append({"t": t, "sample": _describe(sample), "error": repr(exc)})
        return row, errs

    results = _map(run, list(sample_points), threads)
    table = np.array([r for r, _ in results])
    failures = [e for _, errs in results for e in errs]
    with np.errstate(invalid="ignore"):
        sup = np.nanmax(table, axis=0)
        arg = np.nanargmax(np.where(np.isnan(table), -np.inf, table), axis=0)
    fit = loglog_fit(t_grid, sup)
    scaled = sup * np.sqrt(t_grid)
    return DecayReport(
        t_grid=t_grid,
        sup_abs=[float(v) for v in sup],
        slope=fit.slope,
        slope_ci=fit.slope_se,
        constant=float(math.exp(fit.intercept)),
        envelope_ratios={"sup_times_sqrt_t_min": float(scaled.min()),
                         "sup_times_sqrt_t_max": float(scaled.max()),
                         "sup_times_sqrt_t_mean": float(scaled.mean())},
        argmax=[_describe(sample_points[i]) for i in arg],
        failures=failures,
        config=cfg.to_dict(),
    )


def _describe(sample):
    if isinstance(sample, tuple):
        x, y = sample
        return [x.r, x.theta, y.r, y.theta]
    return float(sample)


# --------------------------------------------------------------------------
# dyadic envelopes
# --------------------------------------------------------------------------

def _term(ell, sign, t, j, x, y, cfg, p):
    if ell == 1:
        return k1j(sign, t, j, x, y, cfg)
    if ell == 2:
        return k2j(sign, t, j, x, y, cfg, p=p)
    raise ValueError("ell must be 1 or 2")


def _reference_distance(ell, x, y):
    """Distance whose critical shell governs the term.

    The direct wave travels |x - y|; the diffracted wave's phase is set by
    |x| + |y|.
    """
    return distance(x, y) if ell == 1 else x.r + y.r


def envelope_check(ell: int, t: float, x: PolarPoint, y: PolarPoint, j: int,
                   cfg: KernelConfig = DEFAULT_CONFIG, p: FluxProfile | None = None,
                   branches=(1, -1)) -> float:
    """max over branches of |K_{ell,j}| / envelope(j, j_0, t)."""
    if ell == 2 and p is None:
        raise ValueError("the diffracted term needs a flux profile")
    j0 = j0_index(t, _reference_distance(ell, x, y))
    env = envelope(j, j0, t)
    return max(abs(_term(ell, s, t, j, x, y, cfg, p)) / env for s in branches)


@dataclass
class EnvelopeReport:
    draws: list
    max_ratio: dict
    decade_maxima: dict
    decade_spread: dict
    within_factor_two: dict
    no_growth: dict
    seed: int
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _place_pair(ell, R, rng):
    """Random x, y whose reference distance equals R."""
    if ell == 2:
        v = rng.uniform(0.2, 0.8)
        tx, ty = rng.uniform(0.0, 2 * math.pi, 2)
        return PolarPoint(R * v, tx), PolarPoint(R * (1 - v), ty)
    rx = R * math.exp(rng.uniform(math.log(0.2), math.log(2.0)))
    tx, phi = rng.uniform(0.0, 2 * math.pi, 2)
    x = PolarPoint(rx, tx)
    cx, cy = x.cartesian()
    yx, yy = cx + R * math.cos(phi), cy + R * math.sin(phi)
    return x, PolarPoint(math.hypot(yx, yy), math.atan2(yy, yx))


def envelope_sweep(p: FluxProfile, n_draws: int = 200, seed: int = 20240531,
                   cfg: KernelConfig = DEFAULT_CONFIG, log10_a=(-2.0, 2.0),
                   j_range=(-2, 3), r_range=(0.05, 50.0), near_offsets=(-2, 2),
                   far_offsets=(3, 5), threads: int | None = None) -> EnvelopeReport:
    """Envelope ratios over random (ell, branch, t, j, x, y).

    Draws alternate between the two regimes (``near``: |j - j_0| <= 2,
    ``far`` otherwise).  For each draw ``a = 2^{4j} t`` is log-uniform over
    ``log10_a``, the offset j - j_0 is drawn from the regime's range (with a
    random sign in the far case), and the points are placed so that their
    reference distance produces exactly that j_0.  Draws whose distance
    falls outside ``r_range`` are redrawn.

    Ratios are grouped by regime and by decade of ``a``.
    ``within_factor_two`` compares the largest and smallest decade maxima;
    ``no_growth`` only asks that no later decade exceed the first by more
    than a factor 2.
    """
    rng = np.random.default_rng(seed)
    draws = []
    while len(draws) < n_draws:
        far = len(draws) % 2 == 1
        ell = int(rng.integers(1, 3))
        sign = int(rng.choice([1, -1]))
        j = int(rng.integers(j_range[0], j_range[1] + 1))
        a = 10.0 ** rng.uniform(*log10_a)
        t = a / 2.0 ** (4 * j)
        if far:
            k = int(rng.integers(far_offsets[0], far_offsets[1] + 1)) * int(rng.choice([1, -1]))
        else:
            k = int(rng.integers(near_offsets[0], near_offsets[1] + 1))
        j0 = j - k
        R = t * 2.0 ** (3 * (j0 + rng.uniform(0.05, 0.95)))
        if not (r_range[0] <= R <= r_range[1]):
            continue
        x, y = _place_pair(ell, R, rng)
        draws.append((ell, sign, t, j, x, y, a))

    def run(d):
        ell, sign, t, j, x, y, a = d
        j0 = j0_index(t, _reference_distance(ell, x, y))
        ratio = envelope_check(ell, t, x, y, j, cfg, p, branches=(sign,))
        regime = "near" if abs(j - j0) <= 2 else "far"
        return {"ell": ell, "branch": sign, "t": t, "j": j, "j0": j0,
                "x": [x.r, x.theta], "y": [y.r, y.theta], "a": a,
                "decade": int(math.floor(math.log10(a))), "regime": regime,
                "ratio": float(ratio)}

    rows = _map(run, draws, threads)
    max_ratio, maxima, spread, factor2, no_growth = {}, {}, {}, {}, {}
    for regime in ("near", "far"):
        sel = [r for r in rows if r["regime"] == regime]
        max_ratio[regime] = max((r["ratio"] for r in sel), default=float("nan"))
        per = {}
        for r in sel:
            per[r["decade"]] = max(per.get(r["decade"], 0.0), r["ratio"])
        per = dict(sorted(per.items()))
        maxima[regime] = {str(k): v for k, v in per.items()}
        vals = list(per.values())
        if len(vals) >= 2 and min(vals) > 0:
            spread[regime] = max(vals) / min(vals)
            factor2[regime] = spread[regime] <= 2.0
            no_growth[regime] = all(v <= 2.0 * vals[0] for v in vals[1:])
        else:
            spread[regime] = float("nan")
            factor2[regime] = False
            no_growth[regime] = False
    return EnvelopeReport(rows, max_ratio, maxima, spread, factor2, no_growth, seed,
                          cfg.to_dict())


# --------------------------------------------------------------------------
# free pointwise bound
# --------------------------------------------------------------------------

@dataclass
class PointwiseReport:
    max_ratio: float
    location: tuple
    ratios: list
    sup_slope: float
    sup_slope_se: float

    def to_dict(self) -> dict:
        return asdict(self)


def pointwise_free_check(t_grid, r_grid, cfg: KernelConfig = DEFAULT_CONFIG,
                         threads: int | None = None) -> PointwiseReport:
    """max of |free_kernel| t^{1/2} (1 + t^{-1/4} r)^{2/3} over the grid.

    Also fits the slope of sup_r |free_kernel(t, r)| against t.
    """
    t_grid = np.asarray(t_grid, float)
    r_grid = np.asarray(r_grid, float)
    if np.any(t_grid <= 0) or np.any(r_grid < 0):
        raise ValueError("grids must be positive (r may be zero)")

    def row(t):
        return [abs(free_kernel(t, r, cfg)) for r in r_grid]

    mags = np.array(_map(row, list(t_grid), threads))
    weight = np.sqrt(t_grid)[:, None] * (1.0 + np.outer(t_grid ** -0.25, r_grid)) ** (2.0 / 3.0)
    ratios = mags * weight
    i, k = np.unravel_index(np.argmax(ratios), ratios.shape)
    fit = loglog_fit(t_grid, mags.max(axis=1))
    return PointwiseReport(float(ratios[i, k]), (float(t_grid[i]), float(r_grid[k])),
                           ratios.tolist(), fit.slope, fit.slope_se)


# --------------------------------------------------------------------------
# Van der Corput scaling
# --------------------------------------------------------------------------

def _half_bump(s):
    return chi(DEFAULT_CUTOFF, s)


def vdc_check(k: int, lam_list, amplitude=_half_bump, *, full_output=False):
    """Slope of log|int_0^1 e^{i lam phi} psi| against log lam.

    ``phi(s) = s`` for k = 1 and ``s^4`` for k = 4; both have k-th
    derivative at least one.  The default amplitude equals one near s = 0 and
    vanishes smoothly at s = 1, so the only contribution is from s = 0.
    """
    lam = np.asarray(lam_list, float)
    if k == 1:
        phases = [PhaseSpec(0.0, -v) for v in lam]
    elif k == 4:
        phases = [PhaseSpec(-v, 0.0) for v in lam]
    else:
        raise ValueError("k must be 1 or 4")
    vals = np.array([oscillatory_integral(ph, amplitude, tol=1e-12, interval=(0.0, 1.0))
                     for ph in phases])
    mags = np.abs(vals)
    if np.all(mags == 0):
        slope = float("nan")
        fit = None
    else:
        fit = loglog_fit(lam, mags)
        slope = fit.slope
    if full_output:
        return slope, mags, fit
    return slope


# --------------------------------------------------------------------------
# integrability of B
# --------------------------------------------------------------------------

def angle_grid(n: int = 64):
    """n equispaced angles, offset by a quarter step from the y-grid.

    ``theta_x`` and ``theta_y`` grids differ by a quarter step so no pair is
    exactly opposite (where B is not integrable at s = 0).
    """
    base = 2 * math.pi * np.arange(n) / n
    return base + 0.5 * math.pi / n, base


def b_l1_sweep(alpha_list, n_grid: int = 64, spec: SIntegralSpec = DEFAULT_SPEC,
               *, full_output=False):
    """max of int |B| ds over an n x n angle grid and the flux list.

    |B| depends on the angles only through their difference, so each
    distinct difference on the grid is integrated once.
    """
    tx, ty = angle_grid(n_grid)
    diffs = np.round(np.mod(tx[:, None] - ty[None, :], 2 * math.pi), 12)
    unique = np.unique(diffs)
    per_alpha = {}
    for a in alpha_list:
        p = a if isinstance(a, FluxProfile) else FluxProfile(float(a))
        if reduced_flux(p) == 0.0:
            per_alpha[p.a0] = 0.0
            continue
        per_alpha[p.a0] = max(b_l1(p, d, 0.0, spec) for d in unique)
    best = max(per_alpha.values()) if per_alpha else 0.0
    if full_output:
        return best, per_alpha
    return best


def b_l1_growth(per_alpha: dict) -> float:
    """max over fluxes of b_l1 * dist(alpha, Z); bounded if growth <= C/dist."""
    return max(v * flux_distance_to_integers(FluxProfile(a)) for a, v in per_alpha.items())
