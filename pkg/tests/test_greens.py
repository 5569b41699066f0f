import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfliouville.domain import GridFunction, IntervalUnion
from halfliouville.fracops import halflap_nodes
from halfliouville.greens import (GreenTable, gamma, green_lower_bound_check, green_multi,
                                  green_single, kelvin_bound, regular_part_single, robin_single)

inner = st.floats(-0.95, 0.95)


class TestGamma:
    def test_examples(self):
        assert gamma(1.0) == 0.0
        assert gamma(-1.0) == 0.0
        assert gamma(np.exp(-1.0)) == pytest.approx(2.0, abs=1e-15)

    def test_singular(self):
        with pytest.raises(ValueError, match="singular"):
            gamma(0.0)


class TestClosedForm:
    def test_green_value(self):
        oracle = 2 * np.log((1 + np.sqrt(0.75)) / 0.5)
        assert oracle == pytest.approx(2.63392, abs=1e-5)
        assert green_single(0.0, 0.5, -1, 1) == pytest.approx(oracle, abs=1e-14)

    def test_outside_and_singular(self):
        assert green_single(1.5, 0.2, -1, 1) == 0.0
        assert green_single(-3.0, 0.2, -1, 1) == 0.0
        with pytest.raises(ValueError, match="singular"):
            green_single(0.2, 0.2, -1, 1)

    @given(inner, inner)
    def test_symmetry(self, x, z):
        if abs(x - z) < 1e-6:
            return
        assert green_single(x, z, -1, 1) == pytest.approx(green_single(z, x, -1, 1), rel=1e-12)
        # transplanted to (a, b) by the affine map
        a, b = 2.0, 5.0
        X, Z = a + (x + 1) * (b - a) / 2, a + (z + 1) * (b - a) / 2
        assert green_single(X, Z, a, b) == pytest.approx(green_single(Z, X, a, b), rel=1e-12)

    def test_regular_part(self):
        assert regular_part_single(0.0, 0.0, -1, 1) == pytest.approx(2 * np.log(2), abs=1e-15)
        assert regular_part_single(0.0, 0.5, -1, 1) == pytest.approx(1.24763, abs=1e-5)
        for x in (-0.7, 0.1, 0.6):
            assert regular_part_single(x, x, -1, 1) == pytest.approx(2 * np.log(2 * (1 - x * x)), abs=1e-14)
            # limit along x_n -> z of G - Gamma
            xn = x + 1e-7
            lim = green_single(xn, x, -1, 1) - gamma(xn - x)
            assert lim == pytest.approx(regular_part_single(x, x, -1, 1), abs=1e-6)

    def test_robin_blowup_even_and_decreasing(self):
        x = np.linspace(0, 0.999999, 200)
        r = robin_single(x, -1, 1)
        assert np.all(np.diff(r) < 0)
        assert np.allclose(r, robin_single(-x, -1, 1))
        assert r[-1] < -20
        assert robin_single(0.3, -1, 1) == pytest.approx(regular_part_single(0.3, 0.3, -1, 1))


@pytest.fixture(scope="module")
def gt1():
    return GreenTable(IntervalUnion(((-1.0, 1.0),)), 1 / 400)


class TestGreenTable:
    @pytest.mark.parametrize("z", [0.0, 0.3, -0.77])
    def test_matches_closed_form(self, gt1, z):
        assert gt1.closed_form_error(z) < 1e-4

    def test_robin_origin(self, gt1):
        assert gt1.robin(0.0) == pytest.approx(2 * np.log(2), abs=1e-4)

    def test_exact_mode(self):
        t = GreenTable(IntervalUnion(((-1.0, 1.0),)), 1 / 400, exact=True)
        assert t.robin(0.0) == 2 * np.log(2)
        with pytest.raises(ValueError):
            GreenTable(IntervalUnion(((-2, -1), (1, 2))), exact=True)

    def test_source_unresolved(self, gt1):
        with pytest.raises(ValueError, match="source unresolved"):
            gt1.source(1.0 - 1e-3)
        with pytest.raises(ValueError):
            gt1.source(1.5)
        with pytest.raises(ValueError, match="singular"):
            gt1.G(0.2, 0.2)

    def test_green_multi(self, gt1):
        G, H = green_multi(gt1.domain, 0.3, gt1)
        assert G(1.5) == 0.0
        assert H(np.array([0.0]))[0] == pytest.approx(regular_part_single(0.0, 0.3, -1, 1), abs=1e-4)

    def test_tabulate(self, gt1):
        rows = gt1.tabulate([0.0, 0.5], np.array([-0.5, 0.0, 0.5, 2.0]))
        assert len(rows) == 6
        for x, z, g, h in rows:
            if abs(x) < 1:
                assert g == pytest.approx(green_single(x, z, -1, 1), abs=1e-4)
            else:
                assert g == 0.0


@pytest.fixture(scope="module")
def gt_kelvin():
    return GreenTable(IntervalUnion(((-3.0, -1.5), (1.5, 3.0))), 1 / 200)


class TestMultiInterval:
    def test_kelvin_bound(self, gt_kelvin):
        for z in (-2.6, -2.0, 1.8, 2.2, 2.6):
            assert gt_kelvin.robin(z) <= kelvin_bound(z) + 1e-6

    def test_nonnegative(self, gt_kelvin):
        xs = np.linspace(-3.5, 3.5, 141)
        for z in (-2.0, 1.7, 2.9):
            g = gt_kelvin.G(xs[xs != z], z)
            assert np.min(g) >= -1e-6

    def test_symmetry_refines(self):
        I = IntervalUnion(((-2.0, -1.0), (0.5, 2.0)))
        pts = [-1.7, -1.2, 0.8, 1.3, 1.9]
        e1 = GreenTable(I, 1 / 50).symmetry_error(pts)
        e2 = GreenTable(I, 1 / 200).symmetry_error(pts)
        assert e2 < e1
        assert e2 < 1e-5

    def test_harmonic_away_from_source(self, gt1):
        # D G = D H + D Gamma(. - z): the solver applies the operator to H, the
        # plain grid rule to Gamma. The log singularity limits the rule to an
        # error of order h / (x - z)^2, so the bound is checked in that form.
        h = gt1.h
        z = 0.3 + h / 2
        sol = gt1.source(z)
        sys_ = gt1.system
        gam = GridFunction.sample(sys_.grid, lambda t: -2.0 * np.log(np.abs(t - z)))
        DH = sol.halflap_interior()
        D = DH + halflap_nodes(gam, index=sys_.idx)
        r = np.abs(sys_.x - z)
        near = r >= 5 * h
        assert np.max(np.abs(DH)) < 1e-10
        assert np.max(np.abs(D[near]) * r[near] ** 2 / h) < 1.0


class TestLowerBound:
    def test_single_interval(self, gt1):
        xs = np.linspace(-0.9, 0.9, 7)
        pairs = [(x, z) for x in xs for z in xs if abs(x - z) > 0.1]
        r = green_lower_bound_check(gt1, pairs)
        assert r["pass"] and r["min_ratio"] > 0

    def test_straddling_components(self):
        b = 4.0
        I = IntervalUnion(((-2 * b - 1, -2 * b), (0.0, 1.0)))
        t = GreenTable(I, 1 / 200)
        pairs = [(0.5, -2 * b - 0.5), (0.2, -2 * b - 0.8)]
        r = green_lower_bound_check(t, pairs)
        assert r["pass"]
        assert r["min_ratio"] < 0.5

    def test_coincident_pairs_refused(self, gt1):
        with pytest.raises(ValueError):
            green_lower_bound_check(gt1, [(0.1, 0.1)])
