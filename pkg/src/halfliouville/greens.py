"""
Fundamental solution, Green function and regular part on interval unions.

Conventions: Gamma(x) = -2 log|x|, so that (-Delta)^{1/2} Gamma = 2 pi delta_0.
G(., z) vanishes outside I and H = G - Gamma(. - z) solves the Dirichlet
problem with exterior data -Gamma(. - z) = 2 log|. - z|.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import Exterior, IntervalUnion
from .fracops import DirichletSolution, DirichletSystem

__all__ = [
    "gamma",
    "green_single",
    "regular_part_single",
    "robin_single",
    "GreenTable",
    "green_multi",
    "green_lower_bound_check",
    "kelvin_bound",
]


def gamma(x):
    """Gamma(x) = -2 log|x|."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise ValueError("singular input: Gamma(0)")
    out = -2.0 * np.log(np.abs(x))
    return float(out) if out.ndim == 0 else out


def _to_unit(x, a, b):
    c, l = 0.5 * (a + b), 0.5 * (b - a)
    return (np.asarray(x, dtype=float) - c) / l, l


def green_single(x, z, a, b):
    """Closed-form Green function of (a, b), zero for x outside."""
    x = np.asarray(x, dtype=float)
    if not a < z < b:
        raise ValueError("source must lie inside (a, b)")
    if np.any(x == z):
        raise ValueError("singular input: x = z")
    s, l = _to_unit(x, a, b)
    t, _ = _to_unit(z, a, b)
    inside = np.abs(s) < 1
    si = np.where(inside, s, 0.0)
    num = 1.0 - si * t + np.sqrt((1.0 - si * si) * (1.0 - t * t))
    with np.errstate(divide="ignore"):
        val = 2.0 * np.log(num / np.abs(si - t))
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def regular_part_single(x, z, a, b):
    """H = G - Gamma(x - z) on (a, b), continuous across x = z.

    Written as 2 log(1 - st + sqrt((1-s^2)(1-t^2))) + 2 log l in unit
    coordinates, which has no singularity at s = t. Outside (a, b) it equals
    2 log|x - z|.
    """
    x = np.asarray(x, dtype=float)
    if not a < z < b:
        raise ValueError("source must lie inside (a, b)")
    s, l = _to_unit(x, a, b)
    t, _ = _to_unit(z, a, b)
    inside = np.abs(s) < 1
    si = np.where(inside, s, 0.0)
    val = 2.0 * np.log(1.0 - si * t + np.sqrt((1.0 - si * si) * (1.0 - t * t))) + 2.0 * np.log(l)
    with np.errstate(divide="ignore"):
        outside = 2.0 * np.log(np.abs(x - z))
    out = np.where(inside, val, outside)
    return float(out) if out.ndim == 0 else out


def robin_single(x, a, b):
    """H(x, x) = 2 log(2 (1 - s^2) l) on (a, b), s the unit coordinate."""
    s, l = _to_unit(x, a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 2.0 * np.log(2.0 * (1.0 - s * s) * l)
    out = np.where(np.abs(s) < 1, out, -np.inf)
    return float(out) if np.ndim(out) == 0 else out


def kelvin_bound(z):
    """Upper bound 2 log(2 (z^2 - 1)) for H(z, z) when I avoids [-1, 1]."""
    return 2.0 * np.log(2.0 * (np.asarray(z, dtype=float) ** 2 - 1.0))


@dataclass
class GreenTable:
    """Green function of an interval union, numerical or closed form.

    Regular parts H(., z) are computed on demand by the Dirichlet solver and
    cached per source. For d = 1 the closed form can be used instead
    (``exact=True``), or compared against (see :meth:`closed_form_error`).
    """

    domain: IntervalUnion
    h: float = 2.5e-3
    exact: bool = False
    margin: float = 3.0
    _system: DirichletSystem | None = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.exact and self.domain.d != 1:
            raise ValueError("closed form available only for one interval")

    @property
    def system(self):
        if self._system is None:
            self._system = DirichletSystem(self.domain, self.h, margin=self.margin)
        return self._system

    def source(self, z):
        """DirichletSolution for H(., z)."""
        z = float(z)
        if not self.domain.contains(z):
            raise ValueError("source must lie inside I")
        if self.domain.dist_to_complement(z) < 2 * self.h:
            raise ValueError("source unresolved")
        sol = self._cache.get(z)
        if sol is None:
            ext = Exterior("function", func=lambda t, z=z: 2.0 * np.log(np.abs(t - z)))
            sol = self.system.solve(None, ext)
            self._cache[z] = sol
        return sol

    def H(self, x, z):
        x = np.asarray(x, dtype=float)
        if self.exact:
            a, b = self.domain.endpoints[0]
            return regular_part_single(x, z, a, b)
        out = self.source(z)(x)
        return float(out) if out.ndim == 0 else out

    def G(self, x, z):
        """G(x, z); zero for x outside I."""
        x = np.asarray(x, dtype=float)
        if np.any(x == z):
            raise ValueError("singular input: x = z")
        inside = self.domain.contains(x)
        out = np.where(inside, np.asarray(self.H(x, z)) - 2.0 * np.log(np.abs(x - z)), 0.0)
        return float(out) if out.ndim == 0 else out

    def robin(self, z):
        return float(self.H(np.asarray(z, dtype=float), z))

    def tabulate(self, sources, xs):
        """Rows (x, z, G, H) for all x in xs not equal to z."""
        rows = []
        for z in sources:
            Hv = np.asarray(self.H(xs, z))
            for x, hv in zip(xs, Hv):
                if x == z:
                    continue
                gv = hv - 2.0 * np.log(abs(x - z)) if self.domain.contains(x) else 0.0
                rows.append((float(x), float(z), float(gv), float(hv)))
        return rows

    def symmetry_error(self, points):
        pts = np.asarray(points, dtype=float)
        err = 0.0
        for i, x in enumerate(pts):
            for z in pts[i + 1:]:
                err = max(err, abs(self.G(x, z) - self.G(z, x)))
        return err

    def closed_form_error(self, z, min_sep=None, n=2001):
        """Sup error of the numerical G(., z) against the closed form (d = 1)."""
        if self.domain.d != 1:
            raise ValueError("closed form available only for one interval")
        a, b = self.domain.endpoints[0]
        sys_ = self.system
        xs = sys_.x
        if min_sep is None:
            min_sep = 10 * self.h
        xs = xs[np.abs(xs - z) >= min_sep]
        num = self.source(z)(xs) - 2.0 * np.log(np.abs(xs - z))
        return float(np.max(np.abs(num - green_single(xs, z, a, b))))


def green_multi(I, z, table: GreenTable | None = None, h=2.5e-3):
    """(G(., z), H(., z)) as callables on the real line."""
    table = table or GreenTable(I, h)
    sol = table.source(z)
    return (lambda x: table.G(x, z)), sol


def green_lower_bound_check(table: GreenTable, pairs):
    """Minimal ratio G(x,y) / log(1 + sqrt(d(x) d(y)) / |x - y|) over the pairs."""
    I = table.domain
    ratios = []
    for x, y in pairs:
        if abs(x - y) < 2 * table.h:
            raise ValueError("pairs must be separated by at least 2h")
        dx, dy = I.dist_to_complement(x), I.dist_to_complement(y)
        den = np.log1p(np.sqrt(dx * dy) / abs(x - y))
        ratios.append(table.G(x, y) / den)
    ratios = np.array(ratios)
    return {"min_ratio": float(ratios.min()), "max_ratio": float(ratios.max()),
            "n": int(ratios.size), "pass": bool(ratios.min() > 0)}
