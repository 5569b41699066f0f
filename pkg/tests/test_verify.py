import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from halfliouville import verify as V
from halfliouville.ansatz import BlowupConfig, ansatz_fields, mu_vector
from halfliouville.domain import ConfigPoint, IntervalUnion, KappaField
from halfliouville.fracops import CircleSpectrum
from halfliouville.greens import GreenTable
from halfliouville.reduction import outer_reduce

K1 = KappaField.constant()


class TestMass:
    def test_zero_function(self):
        I = IntervalUnion(((-1.0, 0.0), (0.5, 2.0)))
        x = np.linspace(-1.5, 2.5, 401)
        assert V.mass(x, np.zeros_like(x), 0.05, K1, I) == pytest.approx(0.05 * 2.5, rel=1e-12)
        k2 = KappaField.polynomial([1.0, 1.0])
        # eps int (1 + x) over (-1, 0) u (0.5, 2)
        assert V.mass(x, np.zeros_like(x), 0.05, k2, I) == pytest.approx(0.05 * (0.5 + 3.375), rel=1e-10)

    @pytest.mark.parametrize("mu,eps,k", [(1.0, 1.0, 1.0), (2.0, 0.05, 1.0), (0.7, 0.01, 3.0)])
    def test_whole_line_bubble(self, mu, eps, k):
        assert V.bubble_mass(mu, eps, k) == pytest.approx(2 * np.pi, rel=1e-10)

    def test_sweep_decreasing_gap(self, sweep_m1, unit):
        gaps = []
        for C in sweep_m1:
            x, u = C.u_values()
            gaps.append(abs(V.mass(x, u, C.eps, K1, unit) - 2 * np.pi))
        assert np.all(np.diff(gaps) < 0)

    def test_refinement_invariance(self, unit, gt_unit):
        cfg = BlowupConfig(0.05, ConfigPoint((0.0,), 0.1), unit)
        m = []
        for hy in (0.1, 0.05):
            C = outer_reduce(cfg, gt_unit, hy=hy)
            x, u = C.u_values()
            m.append(V.mass(x, u, 0.05, K1, unit))
        assert abs(m[0] - m[1]) < 1e-2 * m[1]


class TestKernel:
    def test_examples(self):
        assert V.pohozaev_kernel(1.0, 2.0) == 0.0
        assert V.pohozaev_kernel(1.0, -1.0) == pytest.approx(0.0, abs=1e-17)
        assert V.pohozaev_kernel(1.0, -2.0) == pytest.approx(1 / (54 * np.pi), rel=1e-14)
        assert 1 / (54 * np.pi) == pytest.approx(0.0058946, abs=1e-7)

    def test_singular(self):
        with pytest.raises(ValueError, match="singular"):
            V.pohozaev_kernel(0.5, 0.5)

    def test_sign_grid(self):
        vals = [-3.0, -1.2, -0.4, 0.3, 0.9, 2.5]
        for x, y in itertools.product(vals, vals):
            if x == y:
                continue
            k = V.pohozaev_kernel(x, y)
            if x * y > 0:
                assert k == 0.0
            else:
                assert k == pytest.approx(V.pohozaev_kernel(y, x), rel=1e-14)

    @given(st.integers(5, 40), st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_two_implementations(self, n, seed):
        r = np.random.default_rng(seed)
        b = 1.0
        xP = np.sort(r.uniform(0, 1, n))
        xQ = np.sort(r.uniform(-3, -2, n))
        uP, uQ = r.uniform(0, 2, n), r.uniform(0, 2, n)
        wP, wQ = r.uniform(0, 0.1, n), r.uniform(0, 0.1, n)
        e1 = V.deformation_energy(xP, uP, wP, xQ, uQ, wQ, b)
        e2 = V.deformation_energy_expanded(xP, uP, wP, xQ, uQ, wQ, b)
        assert abs(e1 - e2) < 1e-10

    @given(st.lists(st.floats(-1, 1), min_size=1, max_size=4),
           st.lists(st.floats(-1, 1), min_size=1, max_size=4), st.floats(1, 3))
    @settings(max_examples=25, deadline=None)
    def test_energy_bounds(self, cP, cQ, b):
        r = V.energy_bounds_check(cP, cQ, b, n=200)
        assert r["pass"]
        assert r["E"] <= r["upper"] + 1e-12

    def test_energy_lower_bound_nonnegative(self):
        r = V.energy_bounds_check([1.0], [1.0], 1.0, n=200)
        assert r["nonnegative"] and r["lower"] <= r["E"] <= r["upper"]


class TestPohozaev:
    def test_zero(self):
        x = np.linspace(-3, 1, 81)
        r = V.pohozaev_check(x, np.zeros_like(x), 0.05, 1.0)
        assert r.lhs == 0 and r.volume == 0 and r.energy == 0 and r.residual == 0
        assert not r.flagged

    def test_extrapolated_limit(self):
        # u = c sqrt(1-x) near 1: the fitted limit is c^2
        x = np.linspace(0.001, 0.999, 999)
        u = 1.3 * np.sqrt(1 - x) * np.sqrt(x)
        r = V.pohozaev_check(x, u, 0.05, 1.0)
        assert r.method == "extrapolated"
        assert r.flux["1"] == pytest.approx(1.69, rel=1e-3)

    def test_constructed_solution(self, jb, gt_jb, xi_jb):
        C = outer_reduce(BlowupConfig(0.05, ConfigPoint(xi_jb, 0.1), jb), gt_jb, hy=0.1)
        x, u = C.u_values()
        r = V.pohozaev_check(x, u, 0.05, 1.0, sqrt_coef=C.sqrt_coefficient(1, "b"))
        assert not r.flagged
        assert abs(r.residual) < 1e-3 * r.lhs
        assert r.residual_w == pytest.approx(r.residual / r.lam**2)
        assert set(r.to_dict()) >= {"lhs", "volume", "energy", "residual", "residual_w"}


class TestHopf:
    def test_sqrt_profile(self):
        x = np.linspace(0, 1, 1001)[1:-1]
        u = np.sqrt(x * (1 - x))
        r = V.hopf_bound_check(x, u)
        # ratio = sqrt(max(t, 1-t)) / (pi/8); its infimum is at t = 1/2
        assert r["c0"] == pytest.approx(np.sqrt(0.5) / (np.pi / 8), rel=1e-3)
        assert r["pass"]

    @given(st.floats(1e-3, 1e3))
    @settings(max_examples=20, deadline=None)
    def test_scale_invariance(self, t):
        x = np.linspace(0, 1, 201)[1:-1]
        u = np.sqrt(x * (1 - x)) * (1 + x)
        assert V.hopf_bound_check(x, t * u)["c0"] == pytest.approx(V.hopf_bound_check(x, u)["c0"], rel=1e-10)

    def test_zero_skipped(self):
        x = np.linspace(0.01, 0.99, 50)
        r = V.hopf_bound_check(x, np.zeros_like(x))
        assert r["skipped"] and r["pass"]

    def test_negative_refused(self):
        x = np.linspace(0.01, 0.99, 50)
        with pytest.raises(ValueError):
            V.hopf_bound_check(x, -np.ones_like(x))

    def test_constructed_stable(self, sweep_m1):
        cs = []
        for C in sweep_m1:
            x, u = C.u_values()
            r = V.hopf_bound_check(x, u, -1.0, 1.0, sqrt_coefs=[C.sqrt_coefficient(0, s) for s in "ab"])
            assert r["pass"]
            cs.append(r["c0"])
        assert max(cs) / min(cs) < 1.5


class TestL1:
    def test_symmetric_pair(self, two_intervals, gt_two, xi_two):
        ratios = []
        for eps in (0.05, 0.025, 0.0125):
            cfg = BlowupConfig(eps, ConfigPoint(xi_two, 0.1), two_intervals)
            r = V.l1_lower_bound_check(cfg, gt_two)
            assert r["pass"]
            ratios.append(r["ratio"])
        assert max(ratios) / min(ratios) < 1.5

    def test_delta0_sweep(self, two_intervals, gt_two, xi_two):
        cfg = BlowupConfig(0.05, ConfigPoint(xi_two, 0.1), two_intervals)
        r1 = V.l1_lower_bound_check(cfg, gt_two, delta0=0.05)
        r2 = V.l1_lower_bound_check(cfg, gt_two, delta0=0.1)
        assert r1["integral"] == r2["integral"]
        assert r2["ratio"] < r1["ratio"] and r2["ratio"] > 0

    def test_single_point(self, unit, gt_unit):
        cfg = BlowupConfig(0.05, ConfigPoint((0.0,), 0.1), unit)
        assert V.l1_lower_bound_check(cfg, gt_unit)["pass"]

    def test_closed_form_integral(self, unit):
        # closed-form bubble integral against adaptive quadrature of U
        gt = GreenTable(unit, 1 / 400, exact=True)
        cfg = BlowupConfig(0.05, ConfigPoint((0.2,), 0.1), unit)
        mu = mu_vector(cfg.xi, K1, gt)
        H = ansatz_fields(cfg, GreenTable(unit, 1 / 400), np.zeros(0), mu)[0]
        c = mu[0] * 0.05
        f = lambda x: np.log(2 * mu[0] / (c * c + (x - 0.2) ** 2)) + H[0](np.array([x]))[0]
        ref = quad(f, -1, 0.2, limit=200)[0] + quad(f, 0.2, 1, limit=200)[0]
        assert V.ansatz_integral(cfg, gt, mu, H) == pytest.approx(ref, rel=1e-6)


class TestNondegeneracy:
    def test_multipliers(self):
        spec = CircleSpectrum(64)
        mult = dict(zip(spec.modes.tolist(), (spec.multipliers - 1).tolist()))
        assert mult[0] == -1 and mult[1] == 0 and mult[-1] == 0

    def test_lift_at_pi_over_6(self):
        th = np.pi / 6
        x = np.cos(th) / (1 - np.sin(th))
        assert (x * x - 1) / (x * x + 1) == pytest.approx(0.5, abs=1e-14)
        assert np.sin(th) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("mu", [0.5, 1.0, 2.0])
    def test_kernel_dimension(self, mu):
        r = V.nondegeneracy_check(mu, 64, energy=False)
        assert r["kernel_dim"] == 2 and sorted(r["kernel_modes"]) == [-1, 1]
        assert r["pass"]

    def test_energy_identity(self):
        r = V.nondegeneracy_check(1.0, 64)
        assert max(r["energy_rel_error"]) < 1e-3
        assert r["pass"]

    def test_too_few_modes(self):
        with pytest.raises(ValueError):
            V.nondegeneracy_check(1.0, 4)


@pytest.fixture(scope="module")
def barrier():
    return V.barrier_check(0.5)


@pytest.fixture(scope="module")
def audit():
    return V.nonexistence_audit([1, 2, 10, 14, 18, 22], delta0=0.1, delta=0.05)


class TestBarrier:
    def test_negative_at_50(self, barrier):
        k = barrier["R"].index(50.0)
        assert barrier["halflap"][k] < 0

    def test_envelope(self, barrier):
        assert abs(barrier["slope"] + 1.5) <= 0.1
        assert barrier["pass"] and barrier["w0"] == 1.0

    def test_gamma_two_ways(self, barrier):
        assert barrier["gamma_integral"] == pytest.approx(barrier["gamma_pv"], abs=1e-8)
        assert barrier["gamma_integral"] < 0
        # the grid value at the largest radius approaches gamma
        assert barrier["gamma_fit"] == pytest.approx(barrier["gamma_integral"], rel=0.1)

    @pytest.mark.parametrize("s", [0.25, 0.75])
    def test_gamma_normalization(self, s):
        g1, g2 = V.gamma_sigma(s), V.gamma_sigma(s, "pv")
        assert g1 == pytest.approx(g2, abs=1e-8)
        assert g1 < 0

    def test_invalid(self):
        with pytest.raises(ValueError):
            V.barrier_check(1.0)
        with pytest.raises(ValueError):
            V.gamma_sigma(0.5, "bogus")


class TestAudit:
    def test_single_point_slack(self, audit):
        r1 = [r for r in audit["rows"] if r["m"] == 1][0]
        assert not r1["contradiction"]

    def test_crossover(self, audit):
        assert audit["crossover_m"] is not None and audit["crossover_m"] > 2
        assert audit["pass"]
        assert audit["m_star_formula"] >= audit["crossover_m"]

    def test_growth(self, audit):
        rows = [r for r in audit["rows"] if r["m"] >= 2]
        lhs = np.array([r["lhs_u"] for r in rows]) / np.array([r["m"] ** 2 for r in rows])
        assert np.all(lhs > 0) and max(lhs) / min(lhs) < 10
        assert np.all(np.diff([r["rhs_w"] for r in rows]) < 0)

    def test_lambda_band(self, audit):
        for r in audit["rows"]:
            if not r["flagged"]:
                assert 1.0 <= r["lambda_over_m_pi"] <= 3.0

    def test_infeasible(self):
        with pytest.raises(ValueError, match="at most"):
            V.pack_points(100, 1.0, 0.1, 0.1)

    def test_packing(self):
        pts = V.pack_points(5, 1.0, 0.1, 0.1)
        assert len(pts) == 5
        assert np.min(np.diff(pts)) >= 0.1 - 1e-12


def test_record_and_dumps():
    rec = V.record("x", {"a": np.float64(1.0)}, {"v": np.arange(2)}, np.bool_(True))
    s = V.dumps(rec)
    assert '"pass": true' in s and '"a": 1.0' in s
    assert V.json.loads(s)["measured"]["v"] == [0, 1]
