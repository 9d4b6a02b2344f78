"""ℓp norms, bisector tests and the closed-form ℓ3 plane distance."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidNorm

SQRT2 = math.sqrt(2.0)

# rotation by 45 degrees about the y-axis
R_Y = np.array(
    [
        [1 / SQRT2, 0.0, 1 / SQRT2],
        [0.0, 1.0, 0.0],
        [-1 / SQRT2, 0.0, 1 / SQRT2],
    ]
)

_NORM_RE = re.compile(r"^l(inf|[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)$")


@dataclass(frozen=True)
class NormSpec:
    """An ℓp norm with ``1 <= p <= inf``."""

    p: float

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p < 1:
            raise InvalidNorm(f"p must lie in [1, inf], got {self.p!r}")
        object.__setattr__(self, "p", p)

    @property
    def strictly_convex(self) -> bool:
        return 1 < self.p < math.inf

    @property
    def smooth(self) -> bool:
        return 1 < self.p < math.inf

    @property
    def is_euclidean(self) -> bool:
        return self.p == 2

    @classmethod
    def parse(cls, text: str) -> "NormSpec":
        m = _NORM_RE.match(text.strip().lower())
        if not m:
            raise InvalidNorm(f"cannot parse norm {text!r}; expected e.g. 'l3', 'l1.5', 'linf'")
        p = math.inf if m.group(1) == "inf" else float(m.group(1))
        return cls(p)

    def label(self) -> str:
        if self.p == math.inf:
            return "linf"
        if self.p.is_integer():
            return f"l{int(self.p)}"
        return f"l{self.p!r}"

    def __str__(self):
        return self.label()

    def __call__(self, x) -> np.ndarray | float:
        """Norm along the last axis."""
        x = np.asarray(x, dtype=float)
        p = self.p
        if p == 1:
            out = np.sum(np.abs(x), axis=-1)
        elif p == math.inf:
            out = np.max(np.abs(x), axis=-1) if x.shape[-1] else np.zeros(x.shape[:-1])
        else:
            a = np.abs(x)
            # scale by the max entry so |x|^p cannot overflow or underflow
            s = np.max(a, axis=-1, keepdims=True) if x.shape[-1] else np.ones(x.shape[:-1] + (1,))
            safe = np.where(s > 0, s, 1.0)
            y = a / safe
            out = safe[..., 0] * (np.sqrt(np.sum(y * y, axis=-1)) if p == 2 else np.sum(y ** p, axis=-1) ** (1.0 / p))
        return float(out) if np.ndim(out) == 0 else out

    def gradient(self, x) -> np.ndarray:
        """Gradient along the last axis; only defined for smooth norms away from 0."""
        if not self.smooth:
            raise InvalidNorm(f"{self.label()} is not differentiable")
        x = np.asarray(x, dtype=float)
        n = np.asarray(self(x))[..., None]
        safe = np.where(n > 0, n, 1.0)
        return np.where(n > 0, np.sign(x) * (np.abs(x) / safe) ** (self.p - 1.0), 0.0)

    def euclid_factor(self, n: int) -> float:
        """Smallest c with ``||x||_2 <= c * ||x||_p`` on R^n."""
        if self.p <= 2:
            return 1.0
        if self.p == math.inf:
            return math.sqrt(n)
        return n ** (0.5 - 1.0 / self.p)

    def from_euclid_factor(self, n: int) -> float:
        """Smallest c with ``||x||_p <= c * ||x||_2`` on R^n."""
        if self.p >= 2:
            return 1.0
        return n ** (1.0 / self.p - 0.5)


def norm_eval(norm: NormSpec, x) -> float:
    return norm(x)


def bisector_margin(norm: NormSpec, v, x):
    """``||x|| - ||x - v||``: zero on the bisector of 0 and v, negative on 0's side."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return norm(x) - norm(x - v)


def ray_bisector_crossing(norm: NormSpec, v, x0, direction, t_max: float, samples: int = 1024,
                          tol: float = 1e-12):
    """Smallest t in [0, t_max] where ``x0 + t*direction`` meets the bisector of 0 and v.

    Scans a uniform grid for the first sign change of the margin and bisects it.
    Returns None when the grid shows no sign change; that does not prove there
    is no crossing.
    """
    v = np.asarray(v, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    d = np.asarray(direction, dtype=float)
    ts = np.linspace(0.0, t_max, samples + 1)
    g = bisector_margin(norm, v, x0[None, :] + ts[:, None] * d[None, :])
    s = np.sign(g)
    hits = np.flatnonzero(s == 0)
    changes = np.flatnonzero(s[:-1] * s[1:] < 0)
    first_zero = hits[0] if hits.size else None
    first_change = changes[0] if changes.size else None
    if first_zero is None and first_change is None:
        return None
    if first_change is None or (first_zero is not None and first_zero <= first_change):
        return float(ts[first_zero])
    lo, hi = ts[first_change], ts[first_change + 1]
    glo = g[first_change]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        gm = bisector_margin(norm, v, x0 + mid * d)
        if gm == 0:
            return float(mid)
        if (gm < 0) == (glo < 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return float(0.5 * (lo + hi))


@dataclass(frozen=True)
class PlaneDistanceResult:
    closest_point: np.ndarray
    cubed_distance: float


def distance_to_plane_l3(C: float, v) -> PlaneDistanceResult:
    """ℓ3-closest point of ``R_y (R e1 + R e2 + C e3)`` to v, and the cubed distance."""
    alpha, beta, gamma = (float(t) for t in v)
    closest = R_Y @ np.array([(alpha - gamma) / SQRT2, beta, C])
    cubed = 0.25 * abs(SQRT2 * C - alpha - gamma) ** 3
    return PlaneDistanceResult(closest_point=closest, cubed_distance=cubed)
