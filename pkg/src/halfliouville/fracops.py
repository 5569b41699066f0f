"""
Half-Laplacian quadrature, the Dirichlet solver on interval unions, and the
Fourier multiplier on the circle.

The operator is

    (-Delta)^{1/2} f(x) = (1/pi) P.V. int (f(x) - f(x+z)) / z^2 dz.

On a uniform grid the principal value is discretized node by node; the cell
|z| < delta*h is replaced by the local quadratic (second difference) model and
the rest by the trapezoid rule. Beyond the grid window the declared exterior
closure is integrated in closed form or by Gauss-Laguerre.

Dirichlet solutions have a sqrt(dist) profile at every endpoint, which the
plain rule resolves only to O(sqrt(h)). The solver therefore splits

    u = r + sum_k sum_n a_{kn} S_n((x - c_k)/l_k),   S_n(t) = sqrt(1-t^2) U_n(t),

applies the operator to S_n exactly and discretizes only r. Bordered rows
remove the tau^{1/2} and tau^{3/2} terms from r at every endpoint; they come
from a local fit that also carries tau^{3/2} log tau, the term generated by
sqrt-type forcing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import lu_factor, lu_solve
from scipy.signal import fftconvolve
from scipy.special import eval_chebyu, roots_laguerre

from .domain import Exterior, Grid, GridFunction, IntervalUnion

__all__ = [
    "PVQuadrature",
    "halflap_nodes",
    "eval_halflap",
    "sing_profile",
    "sing_halflap",
    "DirichletSystem",
    "DirichletSolution",
    "solve_dirichlet",
    "CircleSpectrum",
    "circle_halflap",
]


@dataclass(frozen=True)
class PVQuadrature:
    """Principal-value rule on a uniform grid.

    ``delta`` is the radius (in nodes) of the cell handled by the quadratic
    model; ``n_tail`` the Gauss-Laguerre order for the exterior beyond the
    window.
    """

    delta: int = 1
    n_tail: int = 64
    fft_min: int = 4000

    def __post_init__(self):
        if self.delta < 1:
            raise ValueError("delta must be at least one node")

    def weights(self, n):
        """Dimensionless weights w_k, k = 0..n (multiply by 1/(pi h))."""
        d = self.delta
        k = np.arange(n + 1, dtype=float)
        w = np.zeros(n + 1)
        w[d + 1:] = 1.0 / k[d + 1:] ** 2
        if d < len(w):
            w[d] += 0.5 / d**2
        w[1] += d
        return w

    def tail_nodes(self):
        s, ws = roots_laguerre(self.n_tail)
        return s, ws


def _window_tail(x, A, B, ext, q):
    """int_{R \\ [A,B]} g(t) / (x - t)^2 dt for nodes x in (A, B)."""
    x = np.asarray(x, dtype=float)
    if ext.kind == "zero":
        return np.zeros(x.shape)
    if ext.kind == "constant":
        return ext.value * (1.0 / (x - A) + 1.0 / (B - x))
    s, ws = q.tail_nodes()
    es = np.exp(s)
    dR = B - x
    dL = x - A
    right = (ext(x[:, None] + dR[:, None] * es[None, :]) * ws).sum(axis=1) / dR
    left = (ext(x[:, None] - dL[:, None] * es[None, :]) * ws).sum(axis=1) / dL
    return right + left


def _conv(w, v):
    """(sum_j w_{|i-j|} v_j)_i for all i."""
    n = len(v)
    kern = np.concatenate([w[:0:-1], w])
    if n >= 4000:
        full = fftconvolve(v, kern, mode="full")
    else:
        full = np.convolve(v, kern, mode="full")
    c = len(w) - 1
    return full[c:c + n]


def _rowsums(w, N):
    """sum_j w_{|i-j|} f_j with f_j = 1/2 at both window ends, 1 elsewhere."""
    cum = np.concatenate([[0.0], np.cumsum(w[1:])])
    i = np.arange(N)
    left, right = i, N - 1 - i
    s = cum[left] + cum[right]
    s -= 0.5 * np.where(left > 0, w[left], 0.0)
    s -= 0.5 * np.where(right > 0, w[right], 0.0)
    return s


def halflap_nodes(f: GridFunction, q: PVQuadrature = PVQuadrature(), index=None):
    """Half-Laplacian of ``f`` at grid nodes strictly inside the window."""
    g = f.grid
    N, h, A, B = g.N, g.h, g.A, g.B
    if index is None:
        index = np.arange(1, N - 1)
    index = np.asarray(index, dtype=int)
    if np.any(index <= 0) or np.any(index >= N - 1):
        raise ValueError("evaluation point outside the window interior")
    w = q.weights(N)
    fac = np.ones(N)
    fac[0] = fac[-1] = 0.5
    v = f.values
    rows = _rowsums(w, N)
    conv = _conv(w, fac * v)
    x = g.nodes[index]
    loc = (v[index] * rows[index] - conv[index]) / (np.pi * h)
    tail = (v[index] * (1.0 / (x - A) + 1.0 / (B - x)) - _window_tail(x, A, B, f.exterior, q)) / np.pi
    return loc + tail


def eval_halflap(f: GridFunction, x, q: PVQuadrature = PVQuadrature()):
    """Half-Laplacian of ``f`` at a grid node ``x``."""
    if not np.all(np.isfinite(f.values)):
        raise ValueError("grid function is not finite")
    g = f.grid
    k = g.index_of(x)
    if abs(g.A + k * g.h - x) > 1e-6 * g.h:
        raise ValueError("x is not a grid node")
    return float(halflap_nodes(f, q, [k])[0])


# -- exact singular basis ---------------------------------------------------

def sing_profile(n, t):
    """S_n(t) = sqrt(1-t^2) U_n(t) on (-1,1), zero outside."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1
    out = np.zeros(t.shape)
    ti = t[inside]
    out[inside] = np.sqrt(1.0 - ti * ti) * eval_chebyu(n, ti)
    return out


def sing_halflap(n, t):
    """Exact half-Laplacian of S_n at t (unit half-length)."""
    t = np.asarray(t, dtype=float)
    at = np.abs(t)
    out = np.empty(t.shape)
    inside = at < 1
    out[inside] = (n + 1) * eval_chebyu(n, t[inside])
    o = ~inside
    r = np.sqrt(np.maximum(at[o] ** 2 - 1.0, 0.0))
    with np.errstate(divide="ignore"):
        val = -(n + 1) * (at[o] - r) ** (n + 1) / r
    val = np.where(t[o] < 0, (-1) ** n * val, val)
    out[o] = val
    return out


# -- Dirichlet problem --------------------------------------------------------

class DirichletSystem:
    """Collocation system for (-Delta)^{1/2} u = f in I, u = g outside I.

    Parameters
    ----------
    I : IntervalUnion
    h : float
        Grid spacing.
    margin : float
        Window half-width beyond I in units of the diameter D.
    n_sing : int
        Singular basis functions per component (even, at most 8).
    q : PVQuadrature
    """

    def __init__(self, I: IntervalUnion, h, margin=3.0, n_sing=4, q=PVQuadrature()):
        if n_sing < 0 or n_sing % 2 or n_sing > 8:
            raise ValueError("n_sing must be an even number between 0 and 8")
        self.I = I
        self.q = q
        self.n_sing = n_sing
        self.grid = Grid.for_domain(I, h, margin)
        g = self.grid
        x = g.nodes
        h = g.h
        tol = 1e-9 * h
        inside = np.zeros(g.N, dtype=bool)
        for a, b in I.endpoints:
            inside |= (x > a + tol) & (x < b - tol)
        self.inside = inside
        self.idx = np.flatnonzero(inside)
        self.ext_idx = np.flatnonzero(~inside)
        if self.idx.size == 0:
            raise ValueError("domain unresolved at this grid spacing")
        for a, b in I.endpoints:
            if np.count_nonzero((x > a + tol) & (x < b - tol)) < 8:
                raise ValueError("domain unresolved at this grid spacing")
        self.x = x[self.idx]
        n = self.idx.size
        w = q.weights(g.N)
        self._w = w
        fac = np.ones(g.N)
        fac[0] = fac[-1] = 0.5
        self._fac = fac
        self._matrix = None
        # singular basis: columns of the operator and samples at interior nodes
        cols, samples = [], []
        self.centers = [(0.5 * (a + b), 0.5 * (b - a)) for a, b in I.endpoints]
        for c, l in self.centers:
            for k in range(n_sing):
                cols.append(sing_halflap(k, (self.x - c) / l) / l)
                samples.append(sing_profile(k, (self.x - c) / l))
        self.sing_ops = np.array(cols).T.reshape(n, -1)
        self.sing_vals = np.array(samples).T.reshape(n, -1)
        self.cons, self.cons_ends = self._constraints()
        self._lu = None

    # constraint rows acting on r: kill tau^{1/2} (and tau^{3/2}) at endpoints,
    # read off from a fit over the nfit nodes nearest the endpoint
    def _constraints(self):
        p = self.n_sing
        if p == 0:
            return np.zeros((0, self.idx.size)), []
        nfit = p + 3
        powers = np.arange(1, p + 3) / 2.0
        half = [0, 2, 4, 6][: p // 2]
        h = self.grid.h
        rows, ends = [], []
        for a, b in self.I.endpoints:
            for end, sgn in ((a, 1.0), (b, -1.0)):
                tau = sgn * (self.x - end) / h
                sel = np.flatnonzero(tau > 0)
                sel = sel[np.argsort(tau[sel])][:nfit]
                t = tau[sel]
                # t^{3/2} log t: a sqrt-type forcing produces this term (t^{3/2} is half-harmonic
                # on the half-line), and leaving it out biases the sqrt coefficient by O(h)
                V = np.column_stack([t[:, None] ** powers[None, :], t**1.5 * np.log(t)])
                Vi = np.linalg.inv(V)
                for hi in half:
                    row = np.zeros(self.idx.size)
                    row[sel] = Vi[hi]
                    rows.append(row)
                    ends.append(end)
        return np.array(rows), ends

    @property
    def matrix(self):
        """Dense collocation matrix acting on r at the interior nodes (built on first use)."""
        if self._matrix is None:
            g, w, h = self.grid, self._w, self.grid.h
            rows = _rowsums(w, g.N)[self.idx]
            diag = (rows + h * (1.0 / (self.x - g.A) + 1.0 / (g.B - self.x))) / (np.pi * h)
            M = -w[np.abs(self.idx[:, None] - self.idx[None, :])] / (np.pi * h)
            M[np.arange(self.n), np.arange(self.n)] = diag
            self._matrix = M
        return self._matrix

    @property
    def n(self):
        return self.idx.size

    @property
    def n_extra(self):
        return self.sing_ops.shape[1]

    def constraint_rhs(self, g: Exterior):
        if not self.cons_ends:
            return np.zeros(0)
        gv = g(np.array(self.cons_ends))
        return gv * self.cons.sum(axis=1)

    def exterior_rhs(self, g: Exterior):
        """Contribution of the exterior data to the interior equations."""
        if g.kind == "zero":
            return np.zeros(self.n)
        grid = self.grid
        x = grid.nodes
        gv = np.zeros(grid.N)
        gv[self.ext_idx] = g(x[self.ext_idx])
        conv = _conv(self._w, self._fac * gv)[self.idx] / (np.pi * grid.h)
        tail = _window_tail(self.x, grid.A, grid.B, g, self.q) / np.pi
        return conv + tail

    def block(self, potential=None):
        """Bordered matrix [[M - V, S_op - V S], [C, 0]]."""
        n, p = self.n, self.n_extra
        M = self.matrix.copy()
        S = self.sing_ops.copy()
        if potential is not None:
            V = np.asarray(potential, dtype=float)
            M[np.arange(n), np.arange(n)] -= V
            S -= V[:, None] * self.sing_vals
        nc = self.cons.shape[0]
        K = np.zeros((n + nc, n + p))
        K[:n, :n] = M
        K[:n, n:] = S
        K[n:, :n] = self.cons
        return K

    def factor(self):
        if self._lu is None:
            K = self.block()
            lu = lu_factor(K, check_finite=True)
            if not np.all(np.isfinite(lu[0])) or np.min(np.abs(np.diag(lu[0]))) == 0:
                raise np.linalg.LinAlgError("discretization failure")
            self._lu = (lu, K)
        return self._lu

    def rhs_vector(self, f, g: Exterior):
        n = self.n
        if f is None:
            fv = np.zeros(n)
        elif callable(f):
            fv = np.asarray(f(self.x), dtype=float) * np.ones(n)
        else:
            fv = np.asarray(f, dtype=float)
            if fv.ndim == 0:
                fv = np.full(n, float(fv))
        return np.concatenate([fv + self.exterior_rhs(g), self.constraint_rhs(g)])

    def solve(self, f=None, g: Exterior = Exterior(), tol=1e-8):
        """Solve and return a :class:`DirichletSolution`."""
        (lu, K) = self.factor()
        b = self.rhs_vector(f, g)
        sol = lu_solve(lu, b)
        if not np.all(np.isfinite(sol)):
            raise np.linalg.LinAlgError("discretization failure")
        res = float(np.max(np.abs(K @ sol - b)) / max(1.0, np.max(np.abs(b))))
        return DirichletSolution(self, sol[: self.n], sol[self.n:], g, res, res > tol)

    def apply(self, r, a, g: Exterior = Exterior()):
        """Discrete half-Laplacian at interior nodes of u = r + sum a S (u = g outside)."""
        return self.matrix @ r + self.sing_ops @ a - self.exterior_rhs(g)


@dataclass
class DirichletSolution:
    """Result of a Dirichlet solve; evaluable anywhere."""

    system: DirichletSystem
    r: np.ndarray
    coeffs: np.ndarray
    exterior: Exterior
    residual: float
    flagged: bool = False
    _splines: list = field(default=None, repr=False)

    @property
    def x(self):
        return self.system.x

    @property
    def interior_values(self):
        return self.r + self.system.sing_vals @ self.coeffs

    def grid_function(self):
        s = self.system
        vals = np.array(self.exterior(s.grid.nodes), dtype=float)
        vals[s.idx] = self.interior_values
        return GridFunction(s.grid, vals, self.exterior)

    def _build_splines(self):
        s = self.system
        out = []
        for a, b in s.I.endpoints:
            # nodes hugging an endpoint are dropped to keep the spline well posed
            gap = 1e-2 * s.grid.h
            mask = (s.x > a + gap) & (s.x < b - gap)
            xs = np.concatenate([[a], s.x[mask], [b]])
            ga, gb = self.exterior(np.array([a, b]))
            ys = np.concatenate([[ga], self.r[mask], [gb]])
            out.append(CubicSpline(xs, ys))
        self._splines = out

    def __call__(self, x):
        """Evaluate u at arbitrary points."""
        s = self.system
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.array(self.exterior(x), dtype=float)
        if self._splines is None:
            self._build_splines()
        p = s.n_sing
        for k, (a, b) in enumerate(s.I.endpoints):
            mask = (x > a) & (x < b)
            if not np.any(mask):
                continue
            c, l = s.centers[k]
            t = (x[mask] - c) / l
            val = self._splines[k](x[mask])
            for n in range(p):
                val = val + self.coeffs[k * p + n] * sing_profile(n, t)
            out[mask] = val
        return out

    def sqrt_coefficient(self, k, side):
        """c with u ~ g(end) + c sqrt(dist) at endpoint ``side`` ('a' or 'b') of component k."""
        s = self.system
        p = s.n_sing
        c, l = s.centers[k]
        a = self.coeffs[k * p:(k + 1) * p]
        nn = np.arange(p)
        sign = 1.0 if side == "b" else (-1.0) ** nn
        return float(np.sqrt(2.0 / l) * np.sum(a * (nn + 1) * sign))

    def integral(self, k):
        """int of u over component k; only S_0 has nonzero mean (pi/2 on (-1,1))."""
        if self._splines is None:
            self._build_splines()
        a, b = self.system.I.endpoints[k]
        p = self.system.n_sing
        val = float(self._splines[k].integrate(a, b))
        if p:
            val += self.system.centers[k][1] * 0.5 * np.pi * float(self.coeffs[k * p])
        return val

    def halflap_interior(self):
        return self.system.apply(self.r, self.coeffs, self.exterior)


def solve_dirichlet(I, h_rhs=None, g_ext: Exterior = Exterior(), h=None, system=None, **kw):
    """Solve (-Delta)^{1/2} u = h_rhs in I, u = g_ext outside I.

    Either pass a prebuilt ``system`` or a grid spacing ``h``.
    """
    if system is None:
        if h is None:
            raise ValueError("need a grid spacing or a system")
        system = DirichletSystem(I, h, **kw)
    return system.solve(h_rhs, g_ext)


# -- circle ----------------------------------------------------------------------

@dataclass(frozen=True)
class CircleSpectrum:
    """Fourier multiplier |n| of the half-Laplacian on S^1, |n| <= M."""

    M: int

    @property
    def modes(self):
        return np.arange(-self.M, self.M + 1)

    @property
    def multipliers(self):
        return np.abs(self.modes).astype(float)


def circle_halflap(phi_hat):
    """Multiply coefficients indexed n = -M..M by |n|."""
    c = np.asarray(phi_hat)
    if c.ndim != 1 or c.size % 2 == 0:
        raise ValueError("coefficients must be indexed by n = -M..M")
    M = c.size // 2
    return c * CircleSpectrum(M).multipliers
