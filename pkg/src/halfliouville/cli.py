"""
Command line driver: configuration, experiment sweeps and reproducible output.

Configuration files are flat ``key = value`` text (``#`` starts a comment)::

    domain = -1,1
    kappa = const:1
    eps = 0.05, 0.025, 0.0125
    m = 1
    sigma = 0.25

Every output file starts with a header carrying the tool version, the
sha256 of the configuration text, the seed and the subcommand (``#`` lines
in CSV files, a ``header`` object in JSON files). Numbers are written with
17 significant digits and nothing time dependent is recorded, so reruns
produce identical files.

Exit codes: 0 success, 1 numerical failure, 2 configuration or IO error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .ansatz import BlowupConfig
from .domain import ConfigPoint, IntervalUnion, KappaField
from .greens import GreenTable, green_lower_bound_check, green_single
from .reduced import XiLandscape, minimize_xi
from .reduction import NonContraction, outer_reduce
from . import verify as V

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "read_csv", "main"]

ALL_CHECKS = ("mass", "residual", "hopf", "l1", "pohozaev", "nondegeneracy", "barrier", "audit")
DEFAULT_CHECKS = ("mass", "residual", "hopf", "l1", "pohozaev", "nondegeneracy")


class ConfigError(ValueError):
    """Invalid configuration (exit code 2)."""


def _floats(text):
    return tuple(float(t) for t in text.replace(" ", "").split(",") if t)


def _ints(text):
    return tuple(int(t) for t in text.replace(" ", "").split(",") if t)


_KEYS = {
    "domain": str, "kappa": str, "eps": _floats, "m": int, "sigma": float, "delta0": float,
    "h": float, "hy": float, "tol_fp": float, "tol_c": float, "tol_xi": float, "rbar": float,
    "beta": _ints, "seed": int, "out": str, "checks": str, "sources": _floats,
    "n_x": int, "landscape_n": int, "audit_m": _ints, "audit_delta": float,
}


@dataclass(frozen=True)
class RunConfig:
    """One experiment, parsed from a flat key-value file."""

    domain: IntervalUnion
    kappa_spec: str = "const:1"
    eps: tuple = (0.05, 0.025, 0.0125)
    m: int = 1
    sigma: float = 0.25
    delta0: float = 0.1
    h: float = 2.5e-3
    hy: float = 0.1
    tol_fp: float = 1e-10
    tol_c: float = 1e-6
    tol_xi: float = 1e-6
    rbar: float = 10.0
    beta: tuple | None = None
    seed: int = 0
    out: str = "results"
    checks: tuple = DEFAULT_CHECKS
    sources: tuple | None = None
    n_x: int = 21
    landscape_n: int = 41
    audit_m: tuple = (2, 10, 14, 18, 22)
    audit_delta: float = 0.05
    text: str = field(default="", repr=False)

    @property
    def sha256(self):
        return hashlib.sha256(self.text.encode()).hexdigest()

    @property
    def kappa(self):
        return KappaField.from_spec(self.kappa_spec)

    @property
    def assignment(self):
        return self.beta if self.beta is not None else tuple(range(self.m))

    def header(self, command):
        return {"tool": "halfliouville", "version": __version__, "config_sha256": self.sha256,
                "seed": self.seed, "command": command}


def parse_config(text):
    """Parse and validate configuration text; raises :class:`ConfigError`."""
    vals = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in vals:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            vals[key] = _KEYS[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    if "domain" not in vals:
        raise ConfigError("missing key 'domain'")
    try:
        vals["domain"] = IntervalUnion.from_flat(vals["domain"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if "kappa" in vals:
        vals["kappa_spec"] = vals.pop("kappa")
    if "checks" in vals:
        vals["checks"] = _parse_checks(vals["checks"])
    cfg = RunConfig(text=text, **vals)
    _validate(cfg)
    return cfg


def _parse_checks(text):
    names = tuple(t.strip().lower() for t in text.split(",") if t.strip())
    if names == ("all",):
        return ALL_CHECKS
    bad = [n for n in names if n not in ALL_CHECKS]
    if bad:
        raise ConfigError(f"unknown checks: {', '.join(bad)}")
    if not names:
        raise ConfigError("empty check list")
    return names


def _validate(cfg):
    if len(cfg.eps) == 0:
        raise ConfigError("empty eps list")
    if any(not 0 < e < 1 for e in cfg.eps):
        raise ConfigError("eps values must lie in (0, 1)")
    if any(a <= b for a, b in zip(cfg.eps, cfg.eps[1:])):
        raise ConfigError("eps list must be strictly decreasing")
    for name in ("h", "hy", "tol_fp", "tol_c", "tol_xi", "rbar", "audit_delta"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be positive")
    if not 0 < cfg.sigma < 1:
        raise ConfigError("sigma must lie in (0, 1)")
    if not 0 <= cfg.delta0 < 0.5:
        raise ConfigError("delta0 must lie in [0, 1/2)")
    if cfg.m < 1:
        raise ConfigError("m must be at least 1")
    if cfg.m > cfg.domain.d:
        raise ConfigError("m ≤ d required")
    if len(cfg.assignment) != cfg.m:
        raise ConfigError("beta must list one component per point")
    if len(set(cfg.assignment)) != cfg.m or any(not 0 <= b < cfg.domain.d for b in cfg.assignment):
        raise ConfigError("beta must name distinct existing components")
    if cfg.n_x < 3 or cfg.landscape_n < 3:
        raise ConfigError("n_x and landscape_n must be at least 3")
    try:
        cfg.kappa.check_positive(cfg.domain)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


# -- output --------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, str):
        return v
    if v is None:
        return "nan"
    return "%.17g" % float(v)


def write_csv(path, cfg, command, columns, rows):
    lines = [f"# {k} {v}" for k, v in cfg.header(command).items()]
    lines.append(",".join(columns))
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path, cfg, command, payload):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(V.dumps({"header": cfg.header(command), **payload}) + "\n")


def read_csv(path):
    """(header dict, {column: array}) of a file written by this module."""
    header, body = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition(" ")
                header[k] = v
            elif line.strip():
                body.append(line.strip().split(","))
    cols = body[0]
    data = np.array([[float(v) if _isnum(v) else np.nan for v in r] for r in body[1:]])
    data = data.reshape(-1, len(cols))
    return header, {c: data[:, k] for k, c in enumerate(cols)}


def _isnum(v):
    try:
        float(v)
        return True
    except ValueError:
        return False


def _tag(eps):
    return "%.6g" % eps


def _solution_paths(out, eps):
    return (os.path.join(out, f"solution_eps{_tag(eps)}.csv"),
            os.path.join(out, f"state_eps{_tag(eps)}.json"))


# -- subcommands ---------------------------------------------------------------------

def cmd_greens(cfg, out, parallel=1):
    """Tabulate G and H; spot checks against the closed form on one interval."""
    gt = GreenTable(cfg.domain, cfg.h)
    I = cfg.domain
    if cfg.sources is not None:
        sources = list(cfg.sources)
    else:
        sources = [a + f * (b - a) for a, b in I.endpoints for f in (0.25, 0.5, 0.75)]
    xs = np.concatenate([np.linspace(a, b, cfg.n_x + 2)[1:-1] for a, b in I.endpoints])
    rows = gt.tabulate(sources, xs)
    cols = ["x", "z", "G", "H"]
    single = I.d == 1
    if single:
        a, b = I.endpoints[0]
        cols += ["G_closed", "abs_err"]
        rows = [r + (float(green_single(r[0], r[1], a, b)),) for r in rows]
        rows = [r + (abs(r[2] - r[4]),) for r in rows]
    write_csv(os.path.join(out, "greens.csv"), cfg, "greens", cols, rows)
    info = {"h": cfg.h, "sources": sources,
            "robin": [gt.robin(z) for z in sources],
            "symmetry_error": gt.symmetry_error(sources)}
    pairs = [(x, z) for x in xs[:: max(1, len(xs) // 7)] for z in sources if x != z]
    info["lower_bound"] = green_lower_bound_check(gt, pairs)
    ok = np.isfinite(info["symmetry_error"])
    if single:
        a, b = I.endpoints[0]
        spot = []
        for x, z in ((a + 0.3 * (b - a), 0.5 * (a + b)), (a + 0.8 * (b - a), a + 0.35 * (b - a)),
                     (a + 0.1 * (b - a), a + 0.9 * (b - a))):
            g = float(gt.G(x, z))
            gc = float(green_single(x, z, a, b))
            spot.append({"x": x, "z": z, "G": g, "G_closed": gc, "abs_err": abs(g - gc)})
        info["closed_form_spot_checks"] = spot
        info["closed_form_max_error"] = max(s["abs_err"] for s in spot)
        ok = ok and info["closed_form_max_error"] < 1e-3
    write_json(os.path.join(out, "greens.json"), cfg, "greens", info)
    return 0 if ok else 1


def cmd_landscape(cfg, out, parallel=1):
    """Xi on a product grid of the admissible box plus its interior minimizer."""
    gt = GreenTable(cfg.domain, cfg.h)
    L = XiLandscape(cfg.domain, cfg.kappa, gt, cfg.assignment)
    rows = L.grid(cfg.landscape_n)
    cols = [f"xi_{j + 1}" for j in range(cfg.m)] + ["Xi"]
    write_csv(os.path.join(out, "landscape.csv"), cfg, "landscape", cols, rows)
    info = {"assignment": list(cfg.assignment), "box": L.box()}
    code = 0
    try:
        p = minimize_xi(L, tol=cfg.tol_xi)
        info.update(xi_hat=list(p.xi), value=L.value)
    except RuntimeError as exc:
        info.update(xi_hat=None, value=None, failure=str(exc))
        code = 1
    write_json(os.path.join(out, "landscape.json"), cfg, "landscape", info)
    return code


def _construct_one(text, eps, xi_hat, out):
    """One eps of the sweep; rebuilds every object from the configuration text."""
    cfg = parse_config(text)
    gt = GreenTable(cfg.domain, cfg.h)
    sol_path, state_path = _solution_paths(out, eps)
    row = {"eps": eps, "status": "ok"}
    try:
        bc = BlowupConfig(eps, ConfigPoint(xi_hat, cfg.delta0), cfg.domain, cfg.kappa, cfg.sigma)
        C = outer_reduce(bc, gt, hy=cfg.hy, Rbar=cfg.rbar, tol_fp=cfg.tol_fp, tol_c=cfg.tol_c)
    except (NonContraction, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        row.update(status="failed", reason=f"{type(exc).__name__}: {exc}",
                   xi=[np.nan] * cfg.m, mu=[np.nan] * cfg.m, c_max=np.nan, phi_sup=np.nan,
                   mass=np.nan, energy=np.nan)
        return row
    x, u = C.u_values()
    write_csv(sol_path, cfg, "construct", ["x", "u", "phi"],
              zip(x, u, C.state.phi))
    xi = list(C.cfg.xi.xi)
    mu = [float(v) for v in C.bundle.mu]
    sqrt_coefs = [[C.sqrt_coefficient(k, s) for s in "ab"] for k in range(cfg.domain.d)]
    st = C.state
    state = {"eps": eps, "xi_start": list(C.xi_start), "xi": xi, "mu": mu,
             "eta": [float(v) for v in C.cfg.eta], "c": [float(v) for v in st.c],
             "c_max": C.c_max(), "phi_sup": st.phi_sup, "iterations": st.iterations,
             "increments": [float(v) for v in st.log],
             "residual_equation": st.residual_eq, "residual_orthogonality": st.residual_orth,
             "residual_x": C.residual_x(), "h_x": eps * cfg.hy, "hy": cfg.hy,
             "mass": C.mass(), "energy": C.energy(), "sqrt_coefficients": sqrt_coefs,
             "converged": bool(C.converged), "flagged": bool(st.flagged or C.bundle.flagged)}
    write_json(state_path, cfg, "construct", state)
    if not C.converged:
        row["status"] = "not_converged"
    row.update(xi=xi, mu=mu, c_max=state["c_max"], phi_sup=state["phi_sup"],
               mass=state["mass"], energy=state["energy"])
    return row


def cmd_construct(cfg, out, parallel=1):
    """eps sweep: minimize Xi once, then the reduction at every eps."""
    gt = GreenTable(cfg.domain, cfg.h)
    L = XiLandscape(cfg.domain, cfg.kappa, gt, cfg.assignment)
    try:
        xi_hat = minimize_xi(L, tol=cfg.tol_xi).xi
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    jobs = [(cfg.text, float(e), xi_hat, out) for e in cfg.eps]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as ex:
            rows = list(ex.map(_construct_one, *zip(*jobs)))
    else:
        rows = [_construct_one(*j) for j in jobs]
    cols = (["eps"] + [f"xi_hat_{j + 1}" for j in range(cfg.m)] + [f"mu_{j + 1}" for j in range(cfg.m)]
            + ["c_max", "phi_sup", "mass", "energy", "status"])
    body = [[r["eps"], *r["xi"], *r["mu"], r["c_max"], r["phi_sup"], r["mass"], r["energy"],
             r["status"]] for r in rows]
    write_csv(os.path.join(out, "summary.csv"), cfg, "construct", cols, body)
    for r in rows:
        if r["status"] == "failed":
            print(f"eps={_tag(r['eps'])}: {r['reason']}", file=sys.stderr)
    return 0 if all(r["status"] == "ok" for r in rows) else 1


def _load_solutions(cfg, out):
    sols = []
    for eps in cfg.eps:
        sol_path, state_path = _solution_paths(out, eps)
        for p in (sol_path, state_path):
            if not os.path.exists(p):
                raise ConfigError(f"missing solution file {p}")
        _, cols = read_csv(sol_path)
        with open(state_path, encoding="utf-8") as fh:
            state = json.load(fh)
        sols.append((eps, cols["x"], cols["u"], state))
    return sols


def _jb_parameter(I):
    """b if I = (-2b-1, -2b) u (0, 1), else None."""
    if I.d != 2:
        return None
    (a1, b1), (a2, b2) = I.endpoints
    b = -0.5 * b1
    if b > 0 and abs(a1 + 2 * b + 1) < 1e-12 and a2 == 0 and b2 == 1:
        return b
    return None


def _run_check(name, cfg, sols, gt):
    eps, x, u, st = sols[-1]
    m2pi = 2 * np.pi * cfg.m
    if name == "mass":
        masses = [V.mass(xx, uu, e, cfg.kappa, cfg.domain) for e, xx, uu, _ in sols]
        gaps = [abs(v - m2pi) for v in masses]
        dec = all(g1 < g0 for g0, g1 in zip(gaps, gaps[1:]))
        ok = dec and gaps[-1] < 0.1 * m2pi
        return V.record("mass", {"eps": list(cfg.eps), "target": m2pi},
                        {"mass": masses, "gap": gaps, "decreasing": dec}, ok)
    if name == "residual":
        ok = st["residual_x"] <= 10 * st["h_x"]
        return V.record("residual", {"eps": eps, "h_x": st["h_x"]},
                        {"residual_x": st["residual_x"], "bound": 10 * st["h_x"]}, ok)
    if name == "hopf":
        out, ok = [], True
        for k in sorted({cfg.assignment[j] for j in range(cfg.m)}):
            a, b = cfg.domain.endpoints[k]
            r = V.hopf_bound_check(x, u, a, b, sqrt_coefs=st["sqrt_coefficients"][k])
            r["component"] = k
            out.append(r)
            ok = ok and r["pass"]
        return V.record("hopf", {"eps": eps}, out, ok)
    if name == "l1":
        bc = BlowupConfig(eps, ConfigPoint(st["xi"], cfg.delta0), cfg.domain, cfg.kappa, cfg.sigma)
        r = V.l1_lower_bound_check(bc, gt, mu=np.asarray(st["mu"]), delta0=max(cfg.delta0, 1e-3))
        return V.record("l1", {"eps": eps}, r, r["pass"])
    if name == "pohozaev":
        b = _jb_parameter(cfg.domain)
        if b is None:
            return V.record("pohozaev", {}, {"skipped": True,
                            "notice": "domain is not of the form (-2b-1,-2b) u (0,1)"}, True)
        rep = V.pohozaev_check(x, u, eps, b, sqrt_coef=st["sqrt_coefficients"][1][1])
        xP, uP, wP = V._trap_nodes(x[(x > 0) & (x < 1)], u[(x > 0) & (x < 1)], 0.0, 1.0)
        sel = (x > -2 * b - 1) & (x < -2 * b)
        xQ, uQ, wQ = V._trap_nodes(x[sel], u[sel], -2 * b - 1, -2 * b)
        agree = abs(V.deformation_energy(xP, uP, wP, xQ, uQ, wQ, b)
                    - V.deformation_energy_expanded(xP, uP, wP, xQ, uQ, wQ, b))
        scale = max(abs(rep.lhs), abs(rep.volume), abs(rep.energy))
        ok = (not rep.flagged) and agree < 1e-10 and abs(rep.residual) < 1e-2 * scale
        d = rep.to_dict()
        d["kernel_agreement"] = agree
        return V.record("pohozaev", {"eps": eps, "b": b}, d, ok)
    if name == "nondegeneracy":
        r = V.nondegeneracy_check()
        return V.record("nondegeneracy", {"M": 64}, r, r["pass"])
    if name == "barrier":
        r = V.barrier_check(cfg.sigma)
        return V.record("barrier", {"sigma": cfg.sigma}, r, r["pass"])
    if name == "audit":
        r = V.nonexistence_audit(list(cfg.audit_m), cfg.delta0, cfg.audit_delta)
        return V.record("audit", {"m": list(cfg.audit_m), "delta0": cfg.delta0,
                                  "delta": cfg.audit_delta}, r, r["pass"])
    raise ConfigError(f"unknown check {name!r}")


def cmd_verify(cfg, out, parallel=1, checks=None):
    """Run the selected checks on the stored sweep; exit 0 iff all pass."""
    checks = checks or cfg.checks
    needs_solution = any(c in checks for c in ("mass", "residual", "hopf", "l1", "pohozaev"))
    sols = _load_solutions(cfg, out) if needs_solution else [(None, None, None, None)]
    gt = GreenTable(cfg.domain, cfg.h) if "l1" in checks else None
    results = [_run_check(c, cfg, sols, gt) for c in checks]
    ok = all(r["pass"] for r in results)
    write_json(os.path.join(out, "verify.json"), cfg, "verify",
               {"checks": results, "pass": ok})
    for r in results:
        print(f"{r['check']:<14} {'PASS' if r['pass'] else 'FAIL'}")
    return 0 if ok else 1


def cmd_audit(cfg, out, parallel=1):
    """Non-existence audit: both sides of the Pohozaev inequality chain per m."""
    r = V.nonexistence_audit(list(cfg.audit_m), cfg.delta0, cfg.audit_delta)
    cols = ["m", "eps", "mu_max", "int_U", "lambda", "lambda_over_m_pi", "lhs_u", "rhs_u",
            "lhs_w", "rhs_w", "contradiction", "flagged"]
    rows = [[row[c] if not isinstance(row[c], bool) else int(row[c]) for c in cols]
            for row in r["rows"]]
    write_csv(os.path.join(out, "audit.csv"), cfg, "audit", cols, rows)
    write_json(os.path.join(out, "audit.json"), cfg, "audit", r)
    print(f"crossover m = {r['crossover_m']} (formula m* = {r['m_star_formula']}, "
          f"c0 = {r['c0']:.4g}, c1 = {r['c1']:.4g})")
    return 0 if r["pass"] else 1


COMMANDS = {"greens": cmd_greens, "construct": cmd_construct, "verify": cmd_verify,
            "landscape": cmd_landscape, "audit": cmd_audit}


def build_parser():
    p = argparse.ArgumentParser(prog="halfliouville",
                                description="Blow-up solutions of the half-Laplacian Liouville problem.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, metavar="PATH")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides 'out' in the config)")
    p.add_argument("--checks", metavar="LIST", help="comma separated checks for verify, or 'all'")
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.parallel < 1:
            raise ConfigError("--parallel must be at least 1")
        out = args.out or cfg.out
        os.makedirs(out, exist_ok=True)
        fn = COMMANDS[args.command]
        if args.command == "verify":
            checks = _parse_checks(args.checks) if args.checks else None
            return fn(cfg, out, args.parallel, checks)
        return fn(cfg, out, args.parallel)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
