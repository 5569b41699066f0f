"""
Reduced energy Xi, the energy functional J_eps and the selection of xi.

    Xi(xi) = -sum_j (2 log kappa(xi_j) + H(xi_j, xi_j) + sum_{i != j} G(xi_j, xi_i))
    J_eps(u) = (1/4 pi) [u]^2 - eps int_I kappa e^u,

with [u]^2 the Gagliardo double integral. Since u vanishes outside I,
(1/4 pi)[u]^2 = (1/2) int_I u (-Delta)^{1/2} u, which is how it is evaluated.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .domain import ConfigPoint, GridFunction, IntervalUnion, KappaField
from .fracops import PVQuadrature, halflap_nodes
from .greens import GreenTable

__all__ = [
    "xi_energy",
    "XiLandscape",
    "minimize_xi",
    "full_energy",
    "ansatz_energy",
    "trapezoid_on",
]


def xi_energy(xi, kappa: KappaField, gt: GreenTable):
    """Xi(xi); +inf on or beyond the boundary, -inf on coincident points."""
    pts = np.asarray(xi.xi if isinstance(xi, ConfigPoint) else xi, dtype=float)
    I = gt.domain
    d = I.dist_to_complement(pts)
    if np.any(d <= 0):
        return np.inf
    if np.any(d < 2 * gt.h) and not gt.exact:
        return np.inf
    if len(set(pts.tolist())) < len(pts):
        return -np.inf
    total = 0.0
    for j, x in enumerate(pts):
        s = 2.0 * np.log(float(kappa(x))) + gt.robin(x)
        for i, z in enumerate(pts):
            if i != j:
                s += gt.G(x, z)
        total -= s
    return float(total)


@dataclass
class XiLandscape:
    """Xi restricted to S_beta (point j lives in component beta[j])."""

    domain: IntervalUnion
    kappa: KappaField
    gt: GreenTable
    beta: tuple
    delta: float | None = None
    cache: dict = field(default_factory=dict)
    xi_hat: tuple | None = None
    value: float | None = None

    def __post_init__(self):
        self.beta = tuple(int(b) for b in self.beta)
        if any(b < 0 or b >= self.domain.d for b in self.beta):
            raise ValueError("assignment refers to a missing component")
        if self.delta is None:
            self.delta = 2 * self.gt.h

    @property
    def m(self):
        return len(self.beta)

    def box(self):
        """Q_delta as a list of (lo, hi)."""
        return [(self.domain.endpoints[b][0] + self.delta, self.domain.endpoints[b][1] - self.delta)
                for b in self.beta]

    def __call__(self, xi):
        key = tuple(float(v) for v in xi)
        if key not in self.cache:
            for (lo, hi), v in zip(self.box(), key):
                if not lo < v < hi:
                    self.cache[key] = np.inf
                    break
            else:
                self.cache[key] = xi_energy(key, self.kappa, self.gt)
        return self.cache[key]

    def grid(self, n=21):
        """Rows (xi_1, ..., xi_m, Xi) over a product grid of Q_delta."""
        axes = [np.linspace(lo, hi, n + 2)[1:-1] for lo, hi in self.box()]
        rows = []
        for pt in itertools.product(*axes):
            rows.append((*pt, self(pt)))
        return rows


def _fd_grad(f, x, step):
    g = np.zeros(len(x))
    for k in range(len(x)):
        e = np.zeros(len(x))
        e[k] = step
        g[k] = (f(x + e) - f(x - e)) / (2 * step)
    return g


def minimize_xi(landscape: XiLandscape, tol=1e-6, x0=None):
    """Local minimizer of Xi in Q_delta.

    Nelder-Mead with +inf outside Q_delta, then coordinate-wise golden-section
    polish. Raises if the minimizer sits on the boundary of Q_delta.
    """
    if len(set(landscape.beta)) != landscape.m:
        raise ValueError("assignment must put one point per component")
    box = landscape.box()
    if x0 is None:
        x0 = np.array([0.5 * (lo + hi) for lo, hi in box])
    x0 = np.asarray(x0, dtype=float)
    f = lambda x: landscape(tuple(x))
    widths = np.array([hi - lo for lo, hi in box])
    simplex = [x0] + [x0 + 0.1 * widths[k] * np.eye(len(x0))[k] for k in range(len(x0))]
    res = minimize(f, x0, method="Nelder-Mead",
                   options={"initial_simplex": np.array(simplex), "xatol": 1e-10,
                            "fatol": 1e-14, "maxiter": 4000})
    x = np.array(res.x)
    for _ in range(4):
        x_old = x.copy()
        for k in range(len(x)):
            lo, hi = box[k]
            def fk(t, k=k):
                z = x.copy()
                z[k] = t
                return f(z)
            s = min(1e-3 * widths[k], 0.5 * (x[k] - lo), 0.5 * (hi - x[k]))
            try:
                r = minimize_scalar(fk, bracket=(x[k] - s, x[k], x[k] + s), method="golden",
                                    tol=1e-12)
                cand = r.x
            except ValueError:
                cand = minimize_scalar(fk, bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-12}).x
            if fk(cand) <= fk(x[k]):
                x[k] = cand
        if np.max(np.abs(x - x_old)) < 1e-12:
            break
    for (lo, hi), v in zip(box, x):
        if min(v - lo, hi - v) < 1e-3 * (hi - lo):
            raise RuntimeError("no interior minimum at this resolution")
    step = 1e-4 * float(np.min(widths))
    grad = _fd_grad(f, x, step)
    if np.linalg.norm(grad) > max(tol, 1e-4):
        raise RuntimeError(f"minimizer not stationary (|grad| = {np.linalg.norm(grad):.2e})")
    landscape.xi_hat = tuple(float(v) for v in x)
    landscape.value = float(f(x))
    return ConfigPoint(landscape.xi_hat, landscape.delta)


def trapezoid_on(I: IntervalUnion, nodes, values, end_fn=None):
    """Trapezoid rule on each component over [a, nodes inside, b].

    ``end_fn(t)`` gives the integrand at the endpoints (zero by default).
    """
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    total = 0.0
    for a, b in I.endpoints:
        mask = (nodes > a) & (nodes < b)
        ends = np.zeros(2) if end_fn is None else np.asarray(end_fn(np.array([a, b])), dtype=float)
        xs = np.concatenate([[a], nodes[mask], [b]])
        ys = np.concatenate([[ends[0]], values[mask], [ends[1]]])
        total += float(np.trapezoid(ys, xs))
    return total


def full_energy(u: GridFunction, eps, kappa: KappaField, I: IntervalUnion, q=PVQuadrature()):
    """J_eps(u) for u vanishing outside I.

    The seminorm term is (1/2) sum_i h u_i (D_h u)_i with D_h the grid
    half-Laplacian, i.e. the symmetric double sum with the same
    second-difference treatment of the diagonal.
    """
    x = u.grid.nodes
    idx = np.flatnonzero(I.contains(x))
    vals = np.asarray(u.values)
    semi = 0.0
    if np.any(vals[idx] != 0):
        Du = halflap_nodes(u, q, idx)
        semi = 0.5 * u.grid.h * float(np.sum(vals[idx] * Du))
    mass = trapezoid_on(I, x[idx], kappa(x[idx]) * np.exp(vals[idx]), end_fn=kappa)
    return semi - eps * mass


def ansatz_energy(bundle, phi=None, Dphi=None):
    """J_eps(U + phi(./eps)) through the weak form on the expanded grid.

    (1/4 pi)[u]^2 = (1/2) int_{I_eps} (U(eps y) + phi) (sum_j e^{w_j} + D phi) dy,
    eps int_I kappa e^u = int_{I_eps} kappa(eps y) e^{V + phi} dy.
    """
    cfg = bundle.cfg
    eps = cfg.eps
    Ieps = bundle.ysys.I
    y = bundle.y
    Uy = bundle.V - 2.0 * np.log(eps)
    if phi is None:
        phi = np.zeros_like(y)
        Dphi = np.zeros_like(y)
    semi = 0.5 * trapezoid_on(Ieps, y, (Uy + phi) * (bundle.bubbles + Dphi))
    mass = trapezoid_on(Ieps, y, cfg.kappa(eps * y) * np.exp(bundle.V + phi),
                        end_fn=lambda t: cfg.kappa(eps * t) * eps**2)
    return semi - mass
