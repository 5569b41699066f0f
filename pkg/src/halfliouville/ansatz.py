"""
Bubbles, boundary correctors and the approximate solution.

For concentration points xi_j with parameters mu_j

    u_j(x) = log(2 mu_j / (kappa(xi_j) (mu_j^2 eps^2 + (x - xi_j)^2))),
    H_j    : (-Delta)^{1/2} H_j = 0 in I,  H_j = -u_j outside I,
    U      = sum_j (u_j + H_j),            V(y) = U(eps y) + 2 log eps.

In the expanded variable y = x/eps the half-Laplacian of V inside I_eps is
exactly sum_j 2 mu_j / (mu_j^2 + (y - eta_j)^2), because H_j is
half-harmonic in I; the error E = (-Delta)^{1/2} V - kappa(eps y) e^V is
evaluated through that identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import ConfigPoint, Exterior, IntervalUnion, KappaField, expand_domain, star_norm
from .fracops import DirichletSolution, DirichletSystem
from .greens import GreenTable

__all__ = [
    "BubbleParams",
    "bubble",
    "BlowupConfig",
    "AnsatzBundle",
    "mu_vector",
    "build_bundle",
    "ansatz_fields",
    "error_field",
    "nonlinearity",
]


@dataclass(frozen=True)
class BubbleParams:
    mu: float
    xi: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")


def bubble(p: BubbleParams, x):
    """log(2 mu / (mu^2 + (x - xi)^2))."""
    x = np.asarray(x, dtype=float)
    return np.log(2.0 * p.mu / (p.mu**2 + (x - p.xi) ** 2))


def _bubble_density(mu, eta, y):
    return 2.0 * mu / (mu * mu + (y - eta) ** 2)


@dataclass(frozen=True)
class BlowupConfig:
    """One construction instance."""

    eps: float
    xi: ConfigPoint
    domain: IntervalUnion
    kappa: KappaField = field(default_factory=KappaField.constant)
    sigma: float = 0.25
    mode: str = "construct"

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if self.mode not in ("construct", "audit"):
            raise ValueError("mode is 'construct' or 'audit'")
        if self.mode == "construct" and self.m > self.domain.d:
            raise ValueError("m ≤ d required")
        self.xi.check(self.domain)
        self.kappa.check_positive(self.domain)

    @property
    def m(self):
        return self.xi.m

    @property
    def eta(self):
        return np.asarray(self.xi.xi) / self.eps

    def with_xi(self, xi):
        return BlowupConfig(self.eps, ConfigPoint(tuple(xi), self.xi.delta0), self.domain,
                            self.kappa, self.sigma, self.mode)


def mu_vector(xi: ConfigPoint, kappa: KappaField, gt: GreenTable):
    """mu_j = exp(log kappa(xi_j) + H(xi_j, xi_j) + sum_{i != j} G(xi_j, xi_i)) / 2."""
    pts = np.asarray(xi.xi, dtype=float)
    out = []
    for j, x in enumerate(pts):
        s = np.log(float(kappa(x))) + gt.robin(x)
        for i, z in enumerate(pts):
            if i != j:
                s += gt.G(x, z)
        if not np.isfinite(s):
            raise ValueError("Robin function not finite at xi_%d" % (j + 1))
        out.append(0.5 * np.exp(s))
    return np.array(out)


@dataclass
class AnsatzBundle:
    """Approximate solution sampled on the interior nodes of I_eps."""

    cfg: BlowupConfig
    mu: np.ndarray
    H: list
    ysys: DirichletSystem
    y: np.ndarray
    V: np.ndarray
    W: np.ndarray
    bubbles: np.ndarray
    E: np.ndarray
    flagged: bool = False

    @property
    def eta(self):
        return self.cfg.eta

    @property
    def theta(self):
        return self.W - self.bubbles

    def kappa_xi(self):
        return np.array([float(self.cfg.kappa(x)) for x in self.cfg.xi.xi])

    def u_j(self, j, x):
        eps = self.cfg.eps
        x = np.asarray(x, dtype=float)
        k = self.kappa_xi()[j]
        mu = self.mu[j]
        return np.log(2.0 * mu / (k * (mu * mu * eps * eps + (x - self.cfg.xi.xi[j]) ** 2)))

    def U(self, x):
        """Ansatz in the original variable; zero outside I."""
        x = np.asarray(x, dtype=float)
        inside = self.cfg.domain.contains(x)
        out = np.zeros(x.shape)
        for j in range(self.cfg.m):
            out = out + np.where(inside, self.u_j(j, x) + self.H[j](x), 0.0)
        return out

    def V_at(self, y):
        """Expanded ansatz in log form (stable for small eps)."""
        cfg = self.cfg
        eps = cfg.eps
        y = np.asarray(y, dtype=float)
        inside = expand_domain(cfg.domain, eps).contains(y)
        k = self.kappa_xi()
        out = np.full(y.shape, -2.0 * (cfg.m - 1) * np.log(eps))
        for j in range(cfg.m):
            out = out + np.log(_bubble_density(self.mu[j], self.eta[j], y)) - np.log(k[j]) + self.H[j](eps * y)
        return np.where(inside, out, 2.0 * np.log(eps))

    def star(self, f):
        return star_norm(f, self.y, self.cfg.sigma, self.eta, self.cfg.eps)


def build_bundle(cfg: BlowupConfig, gt: GreenTable, hy=0.1, ysys: DirichletSystem | None = None,
                 mu=None, mu_scale=1.0):
    """Assemble the ansatz for ``cfg``.

    ``gt`` supplies the x-grid Dirichlet system (for H_j) and the Robin data
    (for mu_j); ``ysys`` is the Dirichlet system on I_eps with spacing ``hy``.
    ``mu_scale`` perturbs the matching condition (falsification runs).
    """
    eps = cfg.eps
    if mu is None:
        mu = mu_vector(cfg.xi, cfg.kappa, gt) * mu_scale
    mu = np.asarray(mu, dtype=float)
    if ysys is None:
        ysys = DirichletSystem(expand_domain(cfg.domain, eps), hy)
    H, logV, bubbles, flagged = ansatz_fields(cfg, gt, ysys.x, mu)
    y = ysys.x
    W = cfg.kappa(eps * y) * np.exp(logV)
    E = bubbles - W
    return AnsatzBundle(cfg, mu, H, ysys, y, logV, W, bubbles, E, flagged)


def ansatz_fields(cfg: BlowupConfig, gt: GreenTable, y, mu):
    """Correctors H_j and, at the expanded nodes y, log V and sum_j e^{w_j}."""
    eps = cfg.eps
    k = np.array([float(cfg.kappa(x)) for x in cfg.xi.xi])
    H = []
    flagged = False
    for j, xj in enumerate(cfg.xi.xi):
        def minus_uj(t, mu=mu[j], xj=xj, kj=k[j]):
            return -np.log(2.0 * mu / (kj * (mu * mu * eps * eps + (t - xj) ** 2)))
        sol = gt.system.solve(None, Exterior("function", func=minus_uj))
        flagged |= sol.flagged
        H.append(sol)
    y = np.asarray(y, dtype=float)
    eta = np.asarray(cfg.xi.xi) / eps
    logV = np.full(y.shape, -2.0 * (cfg.m - 1) * np.log(eps))
    bubbles = np.zeros(y.shape)
    for j in range(cfg.m):
        dens = _bubble_density(mu[j], eta[j], y)
        bubbles += dens
        logV += np.log(dens) - np.log(k[j]) + H[j](eps * y)
    return H, logV, bubbles, flagged


def error_field(b: AnsatzBundle):
    """E(y) = (-Delta)^{1/2} V - kappa(eps y) e^V at the interior nodes of I_eps."""
    return b.E


def nonlinearity(W, phi):
    """N(phi) = W (e^phi - 1 - phi)."""
    phi = np.asarray(phi, dtype=float)
    if np.max(np.abs(phi), initial=0.0) > 30.0:
        raise OverflowError("correction out of contraction regime")
    return np.asarray(W) * (np.expm1(phi) - phi)
