"""
Domains, uniform grids, sampled functions and the weighted sup norm.

Everything here is immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "IntervalUnion",
    "Grid",
    "Exterior",
    "GridFunction",
    "KappaField",
    "ConfigPoint",
    "expand_domain",
    "star_norm",
    "star_weight",
]


@dataclass(frozen=True)
class IntervalUnion:
    """Finite union of open intervals with disjoint, ordered closures."""

    endpoints: tuple

    def __post_init__(self):
        pts = tuple((float(a), float(b)) for a, b in self.endpoints)
        if len(pts) == 0:
            raise ValueError("need at least one interval")
        flat = [v for ab in pts for v in ab]
        if not all(np.isfinite(flat)):
            raise ValueError("endpoints must be finite")
        if any(flat[i] >= flat[i + 1] for i in range(len(flat) - 1)):
            raise ValueError("endpoints not increasing")
        object.__setattr__(self, "endpoints", pts)

    @classmethod
    def from_flat(cls, text):
        """Parse ``"a1,b1,a2,b2,..."`` (or a flat sequence of numbers)."""
        if isinstance(text, str):
            vals = [float(t) for t in text.replace(" ", "").split(",") if t]
        else:
            vals = [float(t) for t in text]
        if len(vals) < 2 or len(vals) % 2:
            raise ValueError("domain needs an even number of endpoints")
        return cls(tuple(zip(vals[0::2], vals[1::2])))

    def to_flat(self):
        return ",".join(repr(v) for ab in self.endpoints for v in ab)

    @property
    def d(self):
        return len(self.endpoints)

    @property
    def diameter(self):
        """D = max(|a_1|, |b_d|)."""
        return max(abs(self.endpoints[0][0]), abs(self.endpoints[-1][1]))

    @property
    def measure(self):
        return sum(b - a for a, b in self.endpoints)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for a, b in self.endpoints:
            out |= (x > a) & (x < b)
        return out

    def component_of(self, x):
        """Index of the component containing ``x`` (-1 if none)."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, -1, dtype=int)
        for k, (a, b) in enumerate(self.endpoints):
            out[(x > a) & (x < b)] = k
        return out

    def dist_to_complement(self, x):
        """dist(x, R \\ I); zero outside I."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for a, b in self.endpoints:
            inside = (x > a) & (x < b)
            out = np.where(inside, np.minimum(x - a, b - x), out)
        return out

    def scaled(self, factor):
        return IntervalUnion(tuple((a * factor, b * factor) for a, b in self.endpoints))

    def shifted(self, offset):
        return IntervalUnion(tuple((a + offset, b + offset) for a, b in self.endpoints))


def expand_domain(I, eps):
    """Expanded domain I_eps = {x/eps : x in I}."""
    if not eps > 0:
        raise ValueError("invalid parameter: eps must be positive")
    return I.scaled(1.0 / eps)


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``A + k h``, ``k = 0..N-1``, covering the window [A, B]."""

    A: float
    h: float
    N: int

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("grid spacing must be positive")
        if self.N < 3:
            raise ValueError("grid needs at least 3 nodes")

    @classmethod
    def for_domain(cls, I, h, margin=3.0):
        """Window [a_1 - margin D, b_d + margin D], extended by at most h on the right."""
        ext = margin * I.diameter
        A = I.endpoints[0][0] - ext
        B = I.endpoints[-1][1] + ext
        N = int(np.ceil((B - A) / h - 1e-9)) + 1
        return cls(A, float(h), N)

    @property
    def B(self):
        return self.A + (self.N - 1) * self.h

    @property
    def nodes(self):
        return self.A + self.h * np.arange(self.N)

    def index_of(self, x):
        """Nearest node index."""
        return int(np.rint((x - self.A) / self.h))


@dataclass(frozen=True)
class Exterior:
    """Closure rule outside the grid window.

    kind is ``"zero"``, ``"constant"`` or ``"function"``. For ``"function"``
    the callable must accept arrays; its growth must be integrable against
    1/(1+x^2) (e.g. logarithmic or algebraic decay |x|^{-p}).
    """

    kind: str = "zero"
    value: float = 0.0
    func: Callable | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "function"):
            raise ValueError(f"unknown closure {self.kind!r}")
        if self.kind == "function" and self.func is None:
            raise ValueError("function closure needs a callable")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros(x.shape)
        if self.kind == "constant":
            return np.full(x.shape, float(self.value))
        return np.asarray(self.func(x), dtype=float) * np.ones(x.shape)

    @classmethod
    def algebraic(cls, coef, power):
        """c |x|^{-power} decay."""
        return cls("function", func=lambda x: coef * np.abs(x) ** (-power))


@dataclass(frozen=True)
class GridFunction:
    """Samples on a uniform grid plus a closure rule beyond the window."""

    grid: Grid
    values: np.ndarray
    exterior: Exterior = field(default_factory=Exterior)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.N,):
            raise ValueError("values must match the grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, grid, f, exterior=None):
        """Sample a callable; by default the callable also closes the tails."""
        if exterior is None:
            exterior = Exterior("function", func=f)
        return cls(grid, f(grid.nodes), exterior)

    @property
    def x(self):
        return self.grid.nodes

    def restricted(self, I):
        mask = I.contains(self.x)
        return self.x[mask], self.values[mask]


@dataclass(frozen=True)
class KappaField:
    """Positive weight kappa with its derivative."""

    f: Callable
    df: Callable
    label: str = "custom"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.f(x), dtype=float) * np.ones(x.shape)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.df(x), dtype=float) * np.ones(x.shape)

    @classmethod
    def constant(cls, c=1.0):
        c = float(c)
        return cls(lambda x: c + 0.0 * x, lambda x: 0.0 * x, f"const:{c!r}")

    @classmethod
    def polynomial(cls, coeffs):
        """kappa(x) = sum_k coeffs[k] x^k."""
        p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
        dp = p.deriv()
        label = "poly:" + ",".join(repr(float(c)) for c in coeffs)
        return cls(p, dp, label)

    @classmethod
    def tabulated(cls, xs, ks):
        from scipy.interpolate import CubicSpline

        cs = CubicSpline(np.asarray(xs, float), np.asarray(ks, float))
        return cls(cs, cs.derivative(), "table")

    @classmethod
    def from_spec(cls, text):
        """Parse ``const:c``, ``poly:c0,c1,...`` or ``table:x0:k0,x1:k1,...``."""
        text = text.strip()
        if ":" not in text:
            return cls.constant(float(text))
        kind, rest = text.split(":", 1)
        if kind == "const":
            return cls.constant(float(rest))
        if kind == "poly":
            return cls.polynomial([float(t) for t in rest.split(",")])
        if kind == "table":
            pairs = [p.split(":") for p in rest.split(",")]
            return cls.tabulated([float(a) for a, _ in pairs], [float(b) for _, b in pairs])
        raise ValueError(f"unknown kappa spec {text!r}")

    def check_positive(self, I, n=200):
        xs = np.concatenate([np.linspace(a, b, n) for a, b in I.endpoints])
        lo = float(np.min(self(xs)))
        if not lo > 0:
            raise ValueError(f"kappa must be positive on the closure of I (min {lo:g})")
        return lo


@dataclass(frozen=True)
class ConfigPoint:
    """Concentration points xi_1..xi_m with separation parameter delta0."""

    xi: tuple
    delta0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "xi", tuple(float(v) for v in self.xi))

    @property
    def m(self):
        return len(self.xi)

    def violations(self, I):
        """List of reasons the point is outside the admissible set (empty if fine)."""
        out = []
        xi = np.asarray(self.xi)
        d = I.dist_to_complement(xi)
        for k, dk in enumerate(d):
            if dk < self.delta0 or dk <= 0:
                out.append(f"xi_{k + 1}={xi[k]:g} within {self.delta0:g} of the boundary")
        for k in range(len(xi)):
            for l in range(k + 1, len(xi)):
                if abs(xi[k] - xi[l]) < max(self.delta0, 0.0) or xi[k] == xi[l]:
                    out.append(f"xi_{k + 1} and xi_{l + 1} closer than {self.delta0:g}")
        return out

    def check(self, I):
        bad = self.violations(I)
        if bad:
            raise ValueError("; ".join(bad))
        return self


def star_weight(y, sigma, eta, eps):
    y = np.asarray(y, dtype=float)
    w = np.full(y.shape, float(eps))
    for e in np.atleast_1d(eta):
        w = w + (1.0 + np.abs(y - e)) ** (-1.0 - sigma)
    return w


def star_norm(f, y, sigma, eta, eps):
    """Weighted sup norm sup |f| / (eps + sum_j (1+|y-eta_j|)^{-1-sigma}).

    ``f`` and ``y`` are the values and nodes of a function on I_eps (nodes
    outside I_eps must already be dropped).
    """
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    f = np.asarray(f, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("domain unresolved at this eps/h")
    return float(np.max(np.abs(f) / star_weight(y, sigma, eta, eps)))
