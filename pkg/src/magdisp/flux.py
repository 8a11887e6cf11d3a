"""Angular flux density of a transversal, degree -1 homogeneous potential.

The potential is ``A(x)/|x|`` with ``A(cos t, sin t) = alpha(t) (-sin t, cos t)``.
``alpha`` is a trigonometric polynomial

    alpha(t) = a0 + sum_k (c_k cos(k t) + s_k sin(k t)),

so means and partial integrals are exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FluxProfile:
    a0: float
    harmonics: tuple[tuple[int, float, float], ...] = field(default=())

    def __post_init__(self):
        cleaned = []
        for h in self.harmonics:
            k, c, s = h
            if int(k) != k or k < 1:
                raise ValueError(f"harmonic index must be an integer >= 1, got {k!r}")
            cleaned.append((int(k), float(c), float(s)))
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "harmonics", tuple(cleaned))

    @property
    def kind(self) -> str:
        return "constant" if not self.harmonics else "trig-polynomial"

    @classmethod
    def constant(cls, alpha: float) -> "FluxProfile":
        return cls(alpha)

    @classmethod
    def from_dict(cls, data: dict) -> "FluxProfile":
        unknown = set(data) - {"a0", "harmonics"}
        if unknown:
            raise ValueError(f"unknown flux keys: {sorted(unknown)}")
        if "a0" not in data:
            raise ValueError("flux profile needs 'a0'")
        harmonics = data.get("harmonics", [])
        for h in harmonics:
            if len(h) != 3:
                raise ValueError("each harmonic is [k, cos_coeff, sin_coeff]")
        return cls(data["a0"], tuple(tuple(h) for h in harmonics))

    @classmethod
    def from_json(cls, text_or_path: str) -> "FluxProfile":
        """Parse inline JSON, or read it from a file path."""
        text = text_or_path.strip()
        if not text.startswith("{"):
            text = Path(text_or_path).read_text(encoding="utf-8")
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {"a0": self.a0, "harmonics": [list(h) for h in self.harmonics]}


def alpha_of_theta(p: FluxProfile, theta):
    theta = np.asarray(theta, dtype=float)
    out = np.full(theta.shape, p.a0)
    for k, c, s in p.harmonics:
        out = out + c * np.cos(k * theta) + s * np.sin(k * theta)
    return out[()] if out.ndim == 0 else out


def total_flux(p: FluxProfile) -> float:
    """Mean of alpha over the circle; harmonics integrate to zero."""
    return p.a0


def reduced_flux(p: FluxProfile) -> float:
    """Total flux modulo 1, in [0, 1)."""
    frac = p.a0 - math.floor(p.a0)
    return 0.0 if frac >= 1.0 else frac


def flux_distance_to_integers(p: FluxProfile) -> float:
    frac = reduced_flux(p)
    return min(frac, 1.0 - frac)


def _antiderivative(p: FluxProfile, theta):
    out = p.a0 * theta
    for k, c, s in p.harmonics:
        out = out + (c * np.sin(k * theta) - s * np.cos(k * theta)) / k
    return out


def partial_flux(p: FluxProfile, theta_from, theta_to):
    """Signed integral of alpha from ``theta_from`` to ``theta_to``."""
    a = np.asarray(theta_from, dtype=float)
    b = np.asarray(theta_to, dtype=float)
    out = _antiderivative(p, b) - _antiderivative(p, a)
    out = np.where(a == b, 0.0, out)
    return out[()] if out.ndim == 0 else out


def vector_potential(p: FluxProfile, theta):
    """A(cos t, sin t) = alpha(t) (-sin t, cos t); transversal by construction."""
    al = alpha_of_theta(p, theta)
    return -al * np.sin(theta), al * np.cos(theta)
