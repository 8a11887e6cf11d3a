"""Composite Gauss-Legendre panels with bisection refinement."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


class BudgetExceeded(RuntimeError):
    """A quadrature needed more panels than its configured cap."""


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_nodes(edges, n=15):
    """Nodes and weights for GL-n on every panel of ``edges``.

    Returns arrays of shape (n_panels, n).
    """
    edges = np.asarray(edges)
    x, w = gauss_legendre(n)
    a = edges[:-1, None]
    b = edges[1:, None]
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def integrate_fixed(f, edges, n=15):
    """Sum of GL-n panel rules; ``f`` maps a node array to values."""
    nodes, weights = panel_nodes(edges, n)
    vals = f(nodes.ravel()).reshape(nodes.shape)
    return np.sum(vals * weights)


def integrate_adaptive(f, edges, tol, n=15, max_panels=200_000, max_rounds=30):
    """Adaptive composite GL-n.

    Each panel's error is estimated as the difference between its own rule
    and the rule on its two halves; panels whose estimate exceeds their
    share of ``tol`` are bisected.  Returns (value, error_estimate).
    """
    edges = np.asarray(edges, dtype=float)
    total_len = edges[-1] - edges[0]
    done_val = 0.0 + 0.0j
    done_err = 0.0
    a, b = edges[:-1], edges[1:]
    for _ in range(max_rounds):
        mid = 0.5 * (a + b)
        whole = _panel_values(f, a, b, n)
        left = _panel_values(f, a, mid, n)
        right = _panel_values(f, mid, b, n)
        fine = left + right
        err = np.abs(fine - whole)
        share = tol * (b - a) / total_len
        ok = err <= np.maximum(share, 1e-300)
        done_val += fine[ok].sum()
        done_err += err[ok].sum()
        if ok.all():
            return done_val, done_err
        a_bad, b_bad, m_bad = a[~ok], b[~ok], mid[~ok]
        a = np.concatenate([a_bad, m_bad])
        b = np.concatenate([m_bad, b_bad])
        if a.size > max_panels:
            raise BudgetExceeded(f"adaptive quadrature needs more than {max_panels} panels")
    # out of rounds: accept what we have, reporting the residual estimate
    mid = 0.5 * (a + b)
    fine = _panel_values(f, a, mid, n) + _panel_values(f, mid, b, n)
    whole = _panel_values(f, a, b, n)
    return done_val + fine.sum(), done_err + np.abs(fine - whole).sum()


def _panel_values(f, a, b, n):
    if a.size == 0:
        return np.zeros(0, dtype=complex)
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    nodes = 0.5 * (a + b)[:, None] + half[:, None] * x
    vals = np.asarray(f(nodes.ravel())).reshape(nodes.shape)
    return (vals * w).sum(axis=1) * half


def graded_edges(start, stop, width, h_max, ratio=2.0, floor=1e-12):
    """Edges on [start, stop]: geometric near ``start`` down to ``width``.

    Uniform spacing of at most ``h_max`` beyond the graded zone.
    """
    width = max(width, floor)
    pts = [start]
    if width < h_max:
        w = width
        while start + w < min(stop, start + h_max):
            pts.append(start + w)
            w *= ratio
    last = pts[-1]
    if stop > last:
        n = max(1, int(np.ceil((stop - last) / h_max)))
        pts.extend(np.linspace(last, stop, n + 1)[1:])
    return np.unique(np.asarray(pts, dtype=float))
