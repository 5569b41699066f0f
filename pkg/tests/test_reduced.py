import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfliouville.ansatz import BlowupConfig, build_bundle
from halfliouville.domain import ConfigPoint, Grid, GridFunction, IntervalUnion, KappaField
from halfliouville.greens import GreenTable
from halfliouville.reduced import (XiLandscape, ansatz_energy, full_energy, minimize_xi,
                                   trapezoid_on, xi_energy)

K1 = KappaField.constant()


@pytest.fixture(scope="module")
def exact_unit():
    return GreenTable(IntervalUnion(((-1.0, 1.0),)), 1 / 400, exact=True)


class TestXi:
    def test_closed_form(self, exact_unit, gt_unit):
        assert xi_energy((0.0,), K1, exact_unit) == pytest.approx(-2 * np.log(2), abs=1e-14)
        assert xi_energy((0.0,), K1, gt_unit) == pytest.approx(-2 * np.log(2), abs=1e-4)
        for x in (-0.6, 0.2, 0.8):
            assert xi_energy((x,), K1, exact_unit) == pytest.approx(-2 * np.log(2 * (1 - x * x)))

    def test_boundary_blowup(self, exact_unit):
        vals = [xi_energy((x,), K1, exact_unit) for x in (0.9, 0.99, 0.999, 0.9999)]
        assert np.all(np.diff(vals) > 0) and vals[-1] > 15
        assert xi_energy((1.0,), K1, exact_unit) == np.inf

    def test_sentinels(self, gt_two):
        assert xi_energy((-1.5, -1.5), K1, gt_two) == -np.inf
        assert xi_energy((-1.5, 2.5), K1, gt_two) == np.inf

    def test_swap_symmetry(self, gt_two):
        a = xi_energy((-1.4, 1.7), K1, gt_two)
        b = xi_energy((-1.7, 1.4), K1, gt_two)
        assert a == pytest.approx(b, abs=1e-6)

    @given(st.floats(-2, 2))
    @settings(max_examples=10, deadline=None)
    def test_log_kappa_shift(self, c):
        gt = GreenTable(IntervalUnion(((-2.0, -1.0), (1.0, 2.0))), 1 / 50)
        xi = (-1.4, 1.6)
        base = xi_energy(xi, KappaField.constant(1.0), gt)
        shifted = xi_energy(xi, KappaField.constant(np.exp(c)), gt)
        assert shifted - base == pytest.approx(-2 * 2 * c, abs=1e-10)

    def test_gradient_consistency(self, gt_two):
        # analytic gradient from finite differences of G and H
        xi = np.array([-1.4, 1.6])
        step = 1e-4
        f = lambda p: xi_energy(tuple(p), K1, gt_two)
        fd = np.array([(f(xi + step * e) - f(xi - step * e)) / (2 * step) for e in np.eye(2)])
        ana = np.zeros(2)
        for j in range(2):
            i = 1 - j
            # d/dxi_j [H(xi_j, xi_j)] and the two G(xi_j, xi_i), G(xi_i, xi_j) terms
            dR = (gt_two.robin(xi[j] + step) - gt_two.robin(xi[j] - step)) / (2 * step)
            dG1 = (gt_two.G(xi[j] + step, xi[i]) - gt_two.G(xi[j] - step, xi[i])) / (2 * step)
            dG2 = (gt_two.G(xi[i], xi[j] + step) - gt_two.G(xi[i], xi[j] - step)) / (2 * step)
            ana[j] = -(dR + dG1 + dG2)
        assert np.allclose(fd, ana, rtol=1e-4)


class TestMinimize:
    def test_unit_interval(self, gt_unit):
        L = XiLandscape(gt_unit.domain, K1, gt_unit, (0,))
        p = minimize_xi(L)
        assert abs(p.xi[0]) < 1e-6
        assert L.value == pytest.approx(-2 * np.log(2), abs=1e-4)

    @pytest.mark.parametrize("ab", [(0.3, 1.7), (-3.0, 2.0)])
    def test_midpoint(self, ab):
        a, b = ab
        gt = GreenTable(IntervalUnion((ab,)), (b - a) / 800)
        p = minimize_xi(XiLandscape(gt.domain, K1, gt, (0,)))
        assert p.xi[0] == pytest.approx(0.5 * (a + b), abs=1e-6)

    def test_symmetric_pair(self, xi_two):
        assert xi_two[0] == pytest.approx(-xi_two[1], abs=1e-5)
        assert 1 < xi_two[1] < 2

    def test_argmin_invariance(self, gt_unit):
        gt = GreenTable(IntervalUnion(((-1.0, 1.0),)), 1 / 400, exact=True)
        kp = KappaField.polynomial([1.0, 0.3])
        p1 = minimize_xi(XiLandscape(gt.domain, kp, gt, (0,)))
        p2 = minimize_xi(XiLandscape(gt.domain, KappaField.polynomial([5.0, 1.5]), gt, (0,)))
        assert p1.xi[0] == pytest.approx(p2.xi[0], abs=1e-6)
        assert p1.xi[0] > 0

    def test_no_interior_minimum(self):
        # with kappa = e^{10x} the critical point of Xi sits near 0.905, outside Q_delta
        gt = GreenTable(IntervalUnion(((-1.0, 1.0),)), 1 / 400, exact=True)
        kp = KappaField(lambda x: np.exp(10 * x), lambda x: 10 * np.exp(10 * x))
        L = XiLandscape(gt.domain, kp, gt, (0,), delta=0.3)
        with pytest.raises(RuntimeError, match="no interior minimum"):
            minimize_xi(L)

    def test_assignment_validation(self, gt_two):
        with pytest.raises(ValueError):
            minimize_xi(XiLandscape(gt_two.domain, K1, gt_two, (0, 0)))
        with pytest.raises(ValueError):
            XiLandscape(gt_two.domain, K1, gt_two, (0, 2))

    def test_grid_export(self, gt_unit):
        rows = XiLandscape(gt_unit.domain, K1, gt_unit, (0,)).grid(9)
        assert len(rows) == 9 and all(np.isfinite(r[1]) for r in rows)


class TestEnergy:
    def test_zero_function(self):
        I = IntervalUnion(((-1.0, 0.5), (1.0, 2.0)))
        g = Grid(-8.0, 0.01, 1601)
        u = GridFunction(g, np.zeros(g.N))
        assert full_energy(u, 0.05, K1, I) == pytest.approx(-0.05 * I.measure, rel=1e-12)

    def test_weak_form_matches_grid_form(self, unit, gt_unit):
        # J(U) from the grid double sum agrees with the weak form used by the reduction
        cfg = BlowupConfig(0.1, ConfigPoint((0.0,), 0.1), unit)
        b = build_bundle(cfg, gt_unit)
        g = Grid(-4.0, 5e-4, 16001)
        U = GridFunction(g, b.U(g.nodes))
        assert full_energy(U, 0.1, K1, unit) == pytest.approx(ansatz_energy(b), rel=2e-3)

    def test_expansion(self, unit, gt_unit):
        Xi = xi_energy((0.0,), K1, gt_unit)
        eps_l = (0.1, 0.05, 0.025, 0.0125)
        rem = []
        for eps in eps_l:
            b = build_bundle(BlowupConfig(eps, ConfigPoint((0.0,), 0.1), unit), gt_unit)
            J = ansatz_energy(b)
            rem.append((J + 2 * np.pi * (1 + np.log(eps)) - np.pi * Xi) / (eps * np.log(1 / eps)))
        assert np.all(np.abs(rem) < 10)
        assert np.all(np.diff(np.abs(rem)) < 0)

    def test_reduced_vs_ansatz_energy(self, sweep_m1, unit, gt_unit):
        ratios = []
        for C in sweep_m1:
            eps = C.eps
            J = ansatz_energy(C.bundle)
            ratios.append(abs(C.energy() - J) / (eps ** (2 * 0.75) * np.log(1 / eps)))
        assert np.all(np.array(ratios) < 1)
        assert np.all(np.diff(ratios) < 0)

    def test_trapezoid(self):
        I = IntervalUnion(((0.0, 1.0), (2.0, 3.0)))
        x = np.linspace(0, 3, 3001)
        assert trapezoid_on(I, x, x, end_fn=lambda t: t) == pytest.approx(0.5 + 2.5, rel=1e-9)
