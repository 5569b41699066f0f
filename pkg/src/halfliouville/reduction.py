"""
Projected linear problem, Picard iteration for the correction phi and the
outer loop that drives the multipliers c_j to zero.

In the expanded variable the correction solves

    (-Delta)^{1/2} phi - W phi = g + sum_j c_j chi_j Z_{1j}   in I_eps,
    phi = 0 outside I_eps,        int phi chi_j Z_{1j} = 0,

assembled as one bordered (KKT) system on top of the Dirichlet collocation
matrix. The nonlinear problem is the fixed point phi = T(phi) with
T(phi) = L^{-1}(-E + N(phi)).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.optimize import minimize, root

from .ansatz import AnsatzBundle, BlowupConfig, build_bundle, nonlinearity
from .domain import ConfigPoint, expand_domain
from .fracops import DirichletSystem
from .greens import GreenTable
from .reduced import ansatz_energy, trapezoid_on

__all__ = [
    "cutoff",
    "KernelBasis",
    "ProjectedSystem",
    "ReductionState",
    "NonContraction",
    "solve_projected",
    "fixed_point",
    "outer_reduce",
    "Construction",
    "construct",
]


class NonContraction(RuntimeError):
    pass


def cutoff(t, Rbar):
    """Even C^2 bump: 1 on [-Rbar, Rbar], 0 outside (-Rbar-1, Rbar+1), quintic smoothstep between."""
    s = np.clip(np.abs(np.asarray(t, dtype=float)) - Rbar, 0.0, 1.0)
    return 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


@dataclass
class KernelBasis:
    """Z_{0j}, Z_{1j} and chi_j sampled at the interior nodes of I_eps."""

    y: np.ndarray
    mu: np.ndarray
    eta: np.ndarray
    Rbar: float = 10.0

    @classmethod
    def from_bundle(cls, b: AnsatzBundle, Rbar=10.0):
        return cls(b.y, np.asarray(b.mu), np.asarray(b.eta), Rbar)

    @property
    def m(self):
        return len(self.mu)

    def Z0(self, j):
        mu, d = self.mu[j], self.y - self.eta[j]
        return 1.0 / mu - 2.0 * mu / (mu * mu + d * d)

    def Z1(self, j):
        mu, d = self.mu[j], self.y - self.eta[j]
        return 2.0 * d / (mu * mu + d * d)

    def chi(self, j):
        return cutoff(self.y - self.eta[j], self.Rbar)

    def chiZ1(self):
        return np.array([self.chi(j) * self.Z1(j) for j in range(self.m)]).T

    def M(self, h):
        """M_jk = int chi_k Z_{1k} Z_{1j}."""
        cz = self.chiZ1()
        Z = np.array([self.Z1(j) for j in range(self.m)]).T
        return h * Z.T @ cz


@dataclass
class ReductionState:
    """Correction phi (nodes of I_eps), multipliers c and diagnostics."""

    y: np.ndarray
    phi: np.ndarray
    r: np.ndarray
    a: np.ndarray
    c: np.ndarray
    Dphi: np.ndarray
    residual_eq: float
    residual_orth: float
    iterations: int = 0
    log: list = field(default_factory=list)
    flagged: bool = False

    @property
    def phi_sup(self):
        return float(np.max(np.abs(self.phi)))

    def to_json(self, **extra):
        d = {"c": [float(v) for v in self.c], "phi_sup": self.phi_sup,
             "iterations": self.iterations,
             "residuals": {"equation": self.residual_eq, "orthogonality": self.residual_orth},
             "increments": [float(v) for v in self.log]}
        d.update(extra)
        return json.dumps(d, indent=1, sort_keys=True)


class ProjectedSystem:
    """Factorized bordered system for L = (-Delta)^{1/2} - W with constraints."""

    def __init__(self, sys_: DirichletSystem, W, basis: KernelBasis):
        self.sys = sys_
        self.basis = basis
        n, p, m = sys_.n, sys_.n_extra, basis.m
        nc = sys_.cons.shape[0]
        h = sys_.grid.h
        self.W = np.asarray(W, dtype=float)
        cz = basis.chiZ1()
        self.cz = cz
        K = np.zeros((n + nc + m, n + p + m))
        K[: n + nc, : n + p] = sys_.block(potential=self.W)
        K[:n, n + p:] = -cz
        K[n + nc:, :n] = h * cz.T
        K[n + nc:, n:n + p] = h * cz.T @ sys_.sing_vals
        self.K = K
        self.dims = (n, p, m, nc)
        lu = lu_factor(K)
        piv = np.abs(np.diag(lu[0]))
        if not np.all(np.isfinite(lu[0])) or piv.min() <= 1e-13 * piv.max():
            raise np.linalg.LinAlgError("resonance at this discretization")
        self.lu = lu

    def solve(self, g, tol=1e-8):
        n, p, m, nc = self.dims
        b = np.concatenate([np.asarray(g, dtype=float), np.zeros(nc + m)])
        sol = lu_solve(self.lu, b)
        res = self.K @ sol - b
        r, a, c = sol[:n], sol[n:n + p], sol[n + p:]
        phi = r + self.sys.sing_vals @ a
        Dphi = self.sys.apply(r, a)
        scale = max(1.0, float(np.max(np.abs(b))))
        eq = float(np.max(np.abs(res[:n]))) / scale
        orth = float(np.max(np.abs(res[n:])) if res[n:].size else 0.0)
        return ReductionState(self.sys.x, phi, r, a, c, Dphi, eq, orth, flagged=eq > tol)


def solve_projected(g, basis: KernelBasis, W, sys_: DirichletSystem):
    return ProjectedSystem(sys_, W, basis).solve(g)


def fixed_point(bundle: AnsatzBundle, basis: KernelBasis | None = None, tol_fp=1e-10, maxit=50,
                phi0=None, ps: ProjectedSystem | None = None, E=None):
    """Picard iteration phi_{k+1} = L^{-1}(-E + N(phi_k))."""
    basis = basis or KernelBasis.from_bundle(bundle)
    ps = ps or ProjectedSystem(bundle.ysys, bundle.W, basis)
    E = bundle.E if E is None else E
    phi = np.zeros_like(bundle.y) if phi0 is None else np.asarray(phi0, dtype=float)
    log = []
    worse = 0
    st = None
    for it in range(1, maxit + 1):
        st = ps.solve(-E + nonlinearity(bundle.W, phi))
        if it == 1 and phi0 is None and st.phi_sup > 1.0:
            raise NonContraction("outside contraction regime; decrease eps or refine grid")
        d = float(np.max(np.abs(st.phi - phi)))
        if log and d > log[-1]:
            worse += 1
            if worse >= 2:
                raise NonContraction("outside contraction regime; decrease eps or refine grid")
        else:
            worse = 0
        log.append(d)
        phi = st.phi
        if d < tol_fp:
            break
    st.iterations = len(log)
    st.log = log
    if log[-1] >= tol_fp:
        st.flagged = True
    return st


@dataclass
class Construction:
    """Outcome of one construction at fixed eps."""

    cfg: BlowupConfig
    bundle: AnsatzBundle
    state: ReductionState
    xi_start: tuple
    converged: bool

    @property
    def eps(self):
        return self.cfg.eps

    @property
    def v(self):
        return self.bundle.V + self.state.phi

    def u_values(self):
        """(x, u) at the interior nodes of I."""
        eps = self.eps
        return eps * self.bundle.y, self.v - 2.0 * np.log(eps)

    def residual_y(self):
        b, s = self.bundle, self.state
        return b.bubbles + s.Dphi - self.cfg.kappa(self.eps * b.y) * np.exp(self.v)

    def residual_x(self):
        """sup_I |(-Delta)^{1/2} u - eps kappa e^u| in the original variable."""
        return float(np.max(np.abs(self.residual_y()))) / self.eps

    def mass(self):
        eps = self.eps
        b = self.bundle
        return trapezoid_on(b.ysys.I, b.y, self.cfg.kappa(eps * b.y) * np.exp(self.v),
                            end_fn=lambda t: self.cfg.kappa(eps * t) * eps**2)

    def energy(self):
        return ansatz_energy(self.bundle, self.state.phi, self.state.Dphi)

    def c_max(self):
        return float(np.max(np.abs(self.state.c)))

    def sqrt_coefficient(self, k, side):
        """u ~ c sqrt(dist) at endpoint ``side`` of component k (original variable)."""
        eps = self.eps
        c = sum(H.sqrt_coefficient(k, side) for H in self.bundle.H)
        # phi(x/eps) contributes c_y sqrt(tau/eps)
        p = self.bundle.ysys.n_sing
        sys_ = self.bundle.ysys
        cy, l = sys_.centers[k]
        a = self.state.a[k * p:(k + 1) * p]
        nn = np.arange(p)
        sign = 1.0 if side == "b" else (-1.0) ** nn
        c_phi = float(np.sqrt(2.0 / l) * np.sum(a * (nn + 1) * sign))
        return c + c_phi / np.sqrt(eps)


def _evaluate(cfg, gt, ysys, xi, Rbar, tol_fp, cache):
    key = tuple(float(v) for v in xi)
    if key not in cache:
        c2 = cfg.with_xi(key)
        b = build_bundle(c2, gt, ysys=ysys)
        basis = KernelBasis.from_bundle(b, Rbar)
        st = fixed_point(b, basis, tol_fp=tol_fp)
        cache[key] = (c2, b, st)
    return cache[key]


def outer_reduce(cfg: BlowupConfig, gt: GreenTable, xi0=None, hy=0.1, Rbar=10.0, tol_fp=1e-10,
                 tol_c=1e-6, ysys: DirichletSystem | None = None, max_simplex=40):
    """Adjust xi until max_j |c_j| < tol_c.

    A short Nelder-Mead run on |c|^2 (started from ``xi0``, typically the
    minimizer of Xi) is followed by a Newton-type root solve of c(xi) = 0.
    """
    if ysys is None:
        ysys = DirichletSystem(expand_domain(cfg.domain, cfg.eps), hy)
    xi0 = np.asarray(cfg.xi.xi if xi0 is None else xi0, dtype=float)
    cache = {}
    ev = lambda x: _evaluate(cfg, gt, ysys, x, Rbar, tol_fp, cache)
    cvec = lambda x: ev(x)[2].c
    best = xi0
    if np.max(np.abs(cvec(xi0))) >= tol_c:
        step = 0.05 * cfg.eps
        simplex = [xi0] + [xi0 + step * np.eye(len(xi0))[k] for k in range(len(xi0))]
        try:
            res = minimize(lambda x: float(np.sum(cvec(x) ** 2)), xi0, method="Nelder-Mead",
                           options={"initial_simplex": np.array(simplex), "maxfev": max_simplex,
                                    "xatol": 1e-12, "fatol": tol_c**2})
            best = np.array(res.x)
        except (ValueError, NonContraction):
            best = xi0
        if np.max(np.abs(cvec(best))) >= tol_c:
            try:
                sol = root(cvec, best, method="hybr", options={"xtol": 1e-13})
                if np.max(np.abs(cvec(sol.x))) < np.max(np.abs(cvec(best))):
                    best = np.array(sol.x)
            except (ValueError, NonContraction):
                pass
    c2, b, st = ev(best)
    ok = float(np.max(np.abs(st.c))) < tol_c
    if not ok:
        st.flagged = True
    return Construction(c2, b, st, tuple(float(v) for v in xi0), ok)


def construct(cfg: BlowupConfig, gt: GreenTable, xi0=None, **kw):
    """Full pipeline at one eps (xi0 defaults to cfg.xi)."""
    return outer_reduce(cfg, gt, xi0=xi0, **kw)
