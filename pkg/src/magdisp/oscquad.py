"""Smooth dyadic cutoffs and quadrature for quartic-plus-linear phases.

The integrals handled here have the form

    int_lo^hi exp(-i (a s^4 + b s)) g(s) ds

with a smooth amplitude ``g``.  Panels are placed by inverting the total
variation of the phase, so every panel spans a fixed fraction of one
oscillation no matter where the phase is fast or slow, and each panel gets
a 15-point Gauss-Kronrod rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import BudgetExceeded

__all__ = [
    "BudgetExceeded", "Cutoff", "DyadicBump", "PhaseSpec", "OscResult",
    "chi", "phi0", "oscillatory_integral", "stationary_point",
    "phase_second_derivative_min",
]


def _psi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


@dataclass(frozen=True)
class Cutoff:
    """Smooth step: 1 on |s| <= inner*dilation, 0 on |s| >= outer*dilation.

    The transition is exp(-1/x) partitioning, so the step is C-infinity.
    ``dilation`` rescales the argument, which shifts the dyadic grid.
    """

    inner: float = 0.5
    outer: float = 1.0
    dilation: float = 1.0

    def __post_init__(self):
        if not (0 < self.inner < self.outer):
            raise ValueError("need 0 < inner < outer")
        if not self.dilation > 0:
            raise ValueError("dilation must be positive")


@dataclass(frozen=True)
class DyadicBump:
    """phi_0(s) = chi(s) - chi(2s); its dyadic dilates sum to one on s > 0."""

    cutoff: Cutoff = Cutoff()

    @property
    def support(self) -> tuple[float, float]:
        c = self.cutoff
        return 0.5 * c.inner * c.dilation, c.outer * c.dilation


DEFAULT_CUTOFF = Cutoff()
DEFAULT_BUMP = DyadicBump()


def chi(c: Cutoff, s):
    s = np.asarray(s, dtype=float)
    u = (np.abs(s) / c.dilation - c.inner) / (c.outer - c.inner)
    left = _psi(1.0 - u)
    right = _psi(u)
    out = left / (left + right)
    return out[()] if out.ndim == 0 else out


def phi0(b: DyadicBump, s):
    s = np.asarray(s, dtype=float)
    return chi(b.cutoff, s) - chi(b.cutoff, 2.0 * s)


@dataclass(frozen=True)
class PhaseSpec:
    """Phase s -> a s^4 + b s."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("phase coefficients must be finite")

    @property
    def n_osc(self) -> float:
        return (abs(self.a) + abs(self.b)) / (2 * math.pi)

    def value(self, s):
        return self.a * s ** 4 + self.b * s

    def derivative(self, s):
        return 4.0 * self.a * s ** 3 + self.b


@dataclass(frozen=True)
class OscResult:
    value: complex
    error: float
    panels: int


def _critical_point(phase: PhaseSpec, lo: float, hi: float):
    if phase.a == 0:
        return None
    c = -phase.b / (4.0 * phase.a)
    s = math.copysign(abs(c) ** (1.0 / 3.0), c)
    return s if lo < s < hi else None


def _panel_edges(phase: PhaseSpec, lo, hi, fraction, max_width, refine, panel_cap):
    """Edges with at most ``fraction`` of an oscillation per panel."""
    pieces = [lo, hi]
    crit = _critical_point(phase, lo, hi)
    if crit is not None:
        pieces = [lo, crit, hi]
    step = 2 * math.pi * fraction / refine
    width = max_width / refine
    # cheap count first, so hopeless requests fail before any allocation
    estimate = sum(abs(phase.value(b) - phase.value(a)) / step
                   for a, b in zip(pieces[:-1], pieces[1:]))
    if estimate > panel_cap:
        raise BudgetExceeded(
            f"oscillatory integral needs about {int(estimate)} panels (cap {panel_cap}); "
            "reduce the quartic coefficient")
    edges = [lo]
    for p0, p1 in zip(pieces[:-1], pieces[1:]):
        var = abs(phase.value(p1) - phase.value(p0))
        n = int(math.ceil(var / step))
        if n > 0:
            # phase is monotone on the piece, so invert it on a dense grid
            grid = np.linspace(p0, p1, max(257, 4 * n + 1))
            cum = np.abs(phase.value(grid) - phase.value(p0))
            levels = np.linspace(0.0, var, n + 1)[1:-1]
            inner = np.interp(levels, cum, grid)
        else:
            inner = np.empty(0)
        piece = np.concatenate([[p0], inner, [p1]])
        # enforce the width cap
        gaps = np.diff(piece)
        splits = np.maximum(1, np.ceil(gaps / width).astype(int))
        starts = np.repeat(piece[:-1], splits)
        steps = np.repeat(gaps / splits, splits)
        offsets = np.arange(splits.sum()) - np.repeat(np.cumsum(splits) - splits, splits) + 1
        edges.append(starts + steps * offsets)
    edges = np.concatenate([np.atleast_1d(e) for e in edges])
    edges[-1] = hi
    return edges


# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15)
_XK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                0.207784955007898467600689403773245, 0.0])
_WK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
KRONROD_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def _rule(phase, amplitude, edges):
    """Kronrod sum and QUADPACK-style error estimate over all panels."""
    a = edges[:-1, None]
    half = 0.5 * (edges[1:, None] - a)
    nodes = a + half * (KRONROD_NODES + 1.0)
    flat = nodes.ravel()
    vals = np.exp(-1j * phase.value(flat)) * np.asarray(amplitude(flat), dtype=complex)
    vals = vals.reshape(nodes.shape)
    kron = (vals @ KRONROD_WEIGHTS) * half[:, 0]
    gauss = (vals @ GAUSS_WEIGHTS) * half[:, 0]
    scale = (np.abs(vals) @ KRONROD_WEIGHTS) * half[:, 0]
    diff = np.abs(kron - gauss)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(scale > 0, np.minimum(1.0, np.sqrt(200.0 * diff / scale)), 1.0)
    return kron.sum(), float((diff * factor).sum())


def oscillatory_integral(phase: PhaseSpec, amplitude, tol: float = 1e-10, *,
                         interval=(0.25, 1.0), fraction: float = 0.125,
                         max_width: float = 1.0 / 16, panel_cap: int = 200_000,
                         full_output: bool = False):
    """int exp(-i(a s^4 + b s)) amplitude(s) ds over ``interval``.

    ``amplitude`` must accept a 1-D array of nodes.  The error estimate
    compares the Kronrod sum with its embedded 7-point Gauss sum; the panels
    are halved until it drops below ``tol``.
    """
    lo, hi = map(float, interval)
    refine = 1
    while True:
        edges = _panel_edges(phase, lo, hi, fraction, max_width, refine, panel_cap)
        n_panels = edges.size - 1
        if n_panels > panel_cap:
            raise BudgetExceeded(
                f"oscillatory integral needs {n_panels} panels (cap {panel_cap}); "
                "reduce the quartic coefficient")
        fine, err = _rule(phase, amplitude, edges)
        if err <= tol or refine >= 64:
            break
        refine *= 2
    if full_output:
        return OscResult(complex(fine), float(err), int(n_panels))
    return complex(fine)


def stationary_point(t: float, j: int, r: float):
    """Critical point of t 2^{4j} s^4 - 2^j r s and the index j_0.

    Returns ``(sigma0, j0)``; ``sigma0`` is None when it falls outside
    [1/4, 1].
    """
    if not (t > 0 and r > 0):
        raise ValueError("stationary_point needs t > 0 and r > 0")
    sigma0 = 2.0 ** (-j - 2.0 / 3.0) * (r / t) ** (1.0 / 3.0)
    j0 = math.floor(math.log2(r / t) / 3.0)
    return (sigma0 if 0.25 <= sigma0 <= 1.0 else None), j0


def phase_second_derivative_min(a: float, interval=(0.25, 1.0)) -> float:
    """min of |12 a s^2| over the interval (12a/16 on [1/4, 1])."""
    lo, hi = interval
    s = 0.0 if lo <= 0 <= hi else min(abs(lo), abs(hi))
    return 12.0 * abs(a) * s * s
