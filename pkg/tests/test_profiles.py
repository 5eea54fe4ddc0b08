"""
Testes das varreduras de perfis, aproximações e regiões de excursão
"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from core.config import FitConfig, OptimizerConfig
from core.errors import InfeasibleError, InsufficientDataError, InvalidArgumentError, OptimizerError
from extrema.optimize import BoxDomain, Projection
from extrema.profiles import (
    ExcursionIntervals,
    Interval,
    ProfileCurve,
    ProfileGrid,
    Provenance,
    approximate_curve,
    approximate_profile_1d,
    approximate_profile_2d,
    bivariate_profiles,
    coordinate_profiles,
    excluded_area,
    excluded_volume,
    excursion_intervals,
    grid_1d,
    lattice_2d,
    node_seed,
    oblique_profiles,
    profile_point,
    spline_approximant,
    spline_knots,
)
from extrema.testfns import AnalyticFn3d


def make_curve(etas, sup, inf):
    """Curva sintética sem traços de argumentos"""
    grid = ProfileGrid.from_values(etas)
    nan = np.full((grid.size, 2), np.nan)
    return ProfileCurve(Projection.coordinate(0, 2), grid, np.asarray(sup, float), np.asarray(inf, float),
                        nan, nan.copy())


def ramp(x):
    """x1 + x2^2 + ... : P_sup,1 = eta + (d-1), P_inf,1 = eta"""
    return float(x[0] + np.sum(x[1:] ** 2))


def ramp_grad(x):
    g = 2 * np.asarray(x, dtype=float)
    g[0] = 1.0
    return g


class TestGrids:
    """Grades 1-d e reticulados 2-d"""

    def test_grid_1d_spans_image(self):
        grid = grid_1d(Projection.oblique([1.0, 1.0]), BoxDomain.unit(2), 11)
        assert grid.size == 11
        assert grid.span == pytest.approx((0.0, math.sqrt(2)))

    def test_grid_must_increase(self):
        with pytest.raises(InvalidArgumentError):
            ProfileGrid.from_values([0.0, 0.5, 0.5])

    def test_lattice_masks_infeasible_nodes(self):
        proj = Projection.planar([[1, 0], [1, 1], [0, 1]])
        lattice = lattice_2d(proj, BoxDomain.unit(3), 3)
        assert lattice.shape == (3, 3)
        assert lattice.mask[0]  # (0, 0)
        assert lattice.mask[4]  # (1, 1)
        assert not lattice.mask[6]  # (2, 0)
        assert lattice.to_dict()["masked_nodes"] == int(np.sum(~lattice.mask))

    def test_coordinate_lattice_has_no_mask(self):
        lattice = lattice_2d(Projection.coordinate_pair(0, 1, 3), BoxDomain.unit(3), 4)
        assert lattice.mask.all()

    def test_node_seed(self):
        assert node_seed(42, 3, 1) == node_seed(42, 3, 1)
        assert node_seed(42, 3, 1) != node_seed(42, 3, 0)
        assert 0 <= node_seed(7, 1) < 2 ** 63


class TestCoordinateProfiles:
    """Perfis exatos ao longo de coordenadas"""

    @pytest.mark.parametrize("d", [2, 3])
    def test_closed_form(self, d):
        box = BoxDomain.unit(d)
        curve = coordinate_profiles(ramp, ramp_grad, 0, box, grid_1d(Projection.coordinate(0, d), box, 11))
        etas = curve.etas
        assert_allclose(curve.sup, etas + (d - 1), atol=1e-8)
        assert_allclose(curve.inf, etas, atol=1e-7)
        assert_allclose(curve.argmax[:, 0], etas)
        assert curve.provenance is Provenance.EXACT

    def test_numeric_gradient(self):
        box = BoxDomain.unit(2)
        curve = coordinate_profiles(ramp, None, 0, box, grid_1d(Projection.coordinate(0, 2), box, 5))
        assert_allclose(curve.sup, curve.etas + 1, atol=1e-6)

    @pytest.mark.slow
    def test_matches_brute_force(self, analytic2d):
        box = BoxDomain.unit(2)
        config = OptimizerConfig(starts_1d=8)
        curve = coordinate_profiles(analytic2d.eval, analytic2d.grad, 0, box,
                                    grid_1d(Projection.coordinate(0, 2), box, 26), config)
        t = np.linspace(0, 1, 4001)
        for j, eta in enumerate(curve.etas):
            values = analytic2d.values(np.column_stack([np.full(t.size, eta), t]))
            assert curve.sup[j] == pytest.approx(values.max(), abs=1e-5)
            assert curve.inf[j] == pytest.approx(values.min(), abs=1e-5)

    def test_blocks_and_threads_do_not_change_results(self, analytic2d):
        box = BoxDomain.unit(2)
        grid = grid_1d(Projection.coordinate(0, 2), box, 12)
        serial = coordinate_profiles(analytic2d.eval, analytic2d.grad, 0, box, grid, seed=5, block_size=4)
        threaded = coordinate_profiles(analytic2d.eval, analytic2d.grad, 0, box, grid, seed=5, block_size=4,
                                       threads=3)
        assert_array_equal(serial.sup, threaded.sup)
        assert_array_equal(serial.inf, threaded.inf)

    def test_grid_outside_box(self):
        box = BoxDomain.unit(2)
        with pytest.raises(InvalidArgumentError):
            coordinate_profiles(ramp, ramp_grad, 0, box, ProfileGrid.from_values([0.5, 1.5]))

    def test_csv_rows(self):
        box = BoxDomain.unit(2)
        curve = coordinate_profiles(ramp, ramp_grad, 0, box, grid_1d(Projection.coordinate(0, 2), box, 3))
        assert curve.header() == ["eta", "sup", "inf", "argmax_1", "argmax_2", "argmin_1", "argmin_2"]
        assert len(curve.rows()) == 3
        assert all(len(r) == 7 for r in curve.rows())

    def test_profiles_bound_every_fiber_value(self, analytic2d):
        box = BoxDomain.unit(2)
        proj = Projection.oblique(analytic2d.v2)
        for x in np.random.default_rng(8).uniform(size=(15, 2)):
            eta = proj.apply(x)[0]
            _, sup = profile_point(analytic2d.eval, analytic2d.grad, proj, box, eta, "sup")
            _, inf = profile_point(analytic2d.eval, analytic2d.grad, proj, box, eta, "inf")
            assert inf - 1e-9 <= analytic2d.eval(x) <= sup + 1e-9

    def test_monotone_transform_commutes(self):
        box = BoxDomain.unit(3)
        proj = Projection.coordinate(0, 3)
        grid = grid_1d(proj, box, 11)
        u = lambda x: math.exp(ramp(x))
        du = lambda x: math.exp(ramp(x)) * ramp_grad(x)
        base = coordinate_profiles(ramp, ramp_grad, 0, box, grid, seed=2)
        moved = coordinate_profiles(u, du, 0, box, grid, seed=2)
        assert_allclose(moved.sup, np.exp(base.sup), rtol=1e-6)
        assert_allclose(moved.inf, np.exp(base.inf), rtol=1e-6)

        def refiners(f, g):
            return (lambda e: profile_point(f, g, proj, box, e, "sup", seed=2)[1],
                    lambda e: profile_point(f, g, proj, box, e, "inf", seed=2)[1])

        for tau in (0.35, 2.35):
            a = excursion_intervals(base, tau, *refiners(ramp, ramp_grad))
            b = excursion_intervals(moved, math.exp(tau), *refiners(u, du))
            assert a.non_excursion or a.excursion
            for ivs_a, ivs_b in ((a.non_excursion, b.non_excursion), (a.excursion, b.excursion)):
                assert len(ivs_a) == len(ivs_b)
                for iv_a, iv_b in zip(ivs_a, ivs_b):
                    assert_allclose(iv_b.to_list(), iv_a.to_list(), atol=1e-6)


class TestObliqueAndBivariate:
    """Perfis ao longo de direções quaisquer e mapas 2-d"""

    def test_oblique_linear(self):
        box = BoxDomain.unit(2)
        proj = Projection.oblique([1.0, 1.0])
        grid = ProfileGrid.from_values(np.linspace(0.1, 1.3, 7))
        curve = oblique_profiles(lambda x: x[0] - x[1], lambda x: np.array([1.0, -1.0]), proj, box, grid)
        s = math.sqrt(2) * curve.etas
        expected = 2 * np.minimum(1.0, s) - s
        assert_allclose(curve.sup, expected, atol=1e-7)
        assert_allclose(curve.inf, -expected, atol=1e-7)

    def test_oblique_delegates_coordinates(self):
        box = BoxDomain.unit(2)
        proj = Projection.coordinate(0, 2)
        grid = grid_1d(proj, box, 5)
        a = oblique_profiles(ramp, ramp_grad, proj, box, grid, seed=1)
        b = coordinate_profiles(ramp, ramp_grad, 0, box, grid, seed=1)
        assert_array_equal(a.sup, b.sup)

    def test_bivariate_closed_form(self):
        box = BoxDomain.unit(3)
        proj = Projection.coordinate_pair(0, 1, 3)
        f = lambda x: x[0] + x[1] + x[2] ** 2
        g = lambda x: np.array([1.0, 1.0, 2 * x[2]])
        pmap = bivariate_profiles(f, g, proj, box, lattice_2d(proj, box, 4))
        E = pmap.grid.etas
        assert_allclose(pmap.sup.ravel(), E[:, 0] + E[:, 1] + 1, atol=1e-8)
        assert_allclose(pmap.inf.ravel(), E[:, 0] + E[:, 1], atol=1e-7)
        assert len(pmap.rows()) == 16

    def test_failed_node_is_tolerated(self):
        box = BoxDomain.unit(2)
        proj = Projection.oblique([1.0, 1.0])
        grid = ProfileGrid.from_values(np.linspace(0.1, 1.3, 7))
        bad = math.sqrt(2) * float(grid.etas[3, 0])

        def f(x):
            return math.nan if abs(x[0] + x[1] - bad) < 1e-6 else x[0] - x[1]

        g = lambda x: np.array([1.0, -1.0])
        curve = oblique_profiles(f, g, proj, box, grid, tolerate_failures=True)
        assert np.isnan(curve.sup[3]) and np.isnan(curve.inf[3])
        keep = np.arange(7) != 3
        assert np.all(np.isfinite(curve.sup[keep]))
        with pytest.raises(OptimizerError):
            oblique_profiles(f, g, proj, box, grid)

    def test_infeasible_node_is_tolerated(self):
        box = BoxDomain.unit(2)
        proj = Projection.oblique([1.0, 1.0])
        grid = ProfileGrid.from_values([0.3, 0.7, 2.0])
        f = lambda x: x[0] - x[1]
        g = lambda x: np.array([1.0, -1.0])
        curve = oblique_profiles(f, g, proj, box, grid, tolerate_failures=True)
        assert np.isnan(curve.sup[2])
        assert_allclose(curve.sup[:2], 2 * np.minimum(1.0, math.sqrt(2) * curve.etas[:2])
                        - math.sqrt(2) * curve.etas[:2], atol=1e-7)
        with pytest.raises(InfeasibleError):
            oblique_profiles(f, g, proj, box, grid)

    def test_bivariate_requires_pair(self):
        with pytest.raises(InvalidArgumentError):
            bivariate_profiles(ramp, ramp_grad, Projection.coordinate(0, 3), BoxDomain.unit(3))

    def test_map_slices(self):
        box = BoxDomain.unit(3)
        proj = Projection.coordinate_pair(0, 2, 3)
        pmap = bivariate_profiles(ramp, ramp_grad, proj, box, lattice_2d(proj, box, 3))
        row = pmap.row_curve(1)
        assert_allclose(row.etas, pmap.grid.axes[1])
        assert_allclose(row.sup, pmap.sup[1].data)

    def test_profile_point(self):
        box = BoxDomain.unit(3)
        _, sup = profile_point(ramp, ramp_grad, Projection.coordinate(0, 3), box, 0.25, "sup")
        _, inf = profile_point(ramp, ramp_grad, Projection.coordinate(0, 3), box, 0.25, "inf")
        assert sup == pytest.approx(2.25, abs=1e-8)
        assert inf == pytest.approx(0.25, abs=1e-7)


class TestApproximations:
    """Splines 1-d e krigagem 2-d sobre os nós"""

    def test_spline_reproduces_cubic(self):
        p = lambda t: t ** 3 - 2 * t ** 2 + t + 1
        knots = np.array([0.0, 0.15, 0.4, 0.55, 0.8, 1.0])
        spline = spline_approximant(knots, p(knots))
        t = np.linspace(0, 1, 50)
        assert_allclose(spline(t), p(t), atol=1e-10)

    def test_hermite_reproduces_cubic(self):
        p = lambda t: t ** 3 - 2 * t ** 2 + t + 1
        dp = lambda t: 3 * t ** 2 - 4 * t + 1
        knots = np.array([0.0, 0.3, 0.7, 1.0])
        spline = spline_approximant(knots, p(knots), dp(knots))
        t = np.linspace(0, 1, 50)
        assert_allclose(spline(t), p(t), atol=1e-10)

    def test_too_few_knots(self):
        with pytest.raises(InsufficientDataError):
            spline_approximant([0.0, 0.5, 1.0], [1.0, 2.0, 3.0])

    def test_knots_include_endpoints(self):
        grid = spline_knots(Projection.coordinate(0, 2), BoxDomain.unit(2), 8, seed=3)
        assert grid.size == 8
        assert grid.span == (0.0, 1.0)

    def test_approximation_hits_knots(self):
        proj = Projection.coordinate(0, 2)
        grid = ProfileGrid.from_values(np.linspace(0, 1, 11))
        knots = np.array([0.0, 0.3, 0.6, 1.0])
        curve = approximate_profile_1d(proj, knots, [1.0, 1.5, 1.2, 2.0], [0.0, 0.1, -0.2, 0.3], grid)
        assert curve.provenance is Provenance.SPLINE
        assert curve.knots == 4
        assert curve.sup[3] == pytest.approx(1.5, abs=1e-12)
        assert curve.inf[6] == pytest.approx(-0.2, abs=1e-12)
        assert np.all(curve.sup >= curve.inf)

    @pytest.mark.parametrize("use_slopes", [True, False])
    def test_approximate_curve_of_cubic_profile(self, use_slopes):
        box = BoxDomain.unit(2)
        proj = Projection.coordinate(0, 2)
        f = lambda x: x[0] ** 3 + x[1]
        g = lambda x: np.array([3 * x[0] ** 2, 1.0])
        grid = grid_1d(proj, box, 21)
        curve = approximate_curve(f, g, proj, box, grid, k=6, use_slopes=use_slopes)
        assert_allclose(curve.sup, curve.etas ** 3 + 1, atol=1e-6)
        assert_allclose(curve.inf, curve.etas ** 3, atol=1e-6)

    @pytest.mark.slow
    @pytest.mark.parametrize("i", [0, 1])
    def test_spline_accuracy_on_analytic_function(self, analytic2d, i):
        box = BoxDomain.unit(2)
        proj = Projection.coordinate(i, 2)
        grid = grid_1d(proj, box, 100)
        config = OptimizerConfig(starts_1d=8)
        exact = coordinate_profiles(analytic2d.eval, analytic2d.grad, i, box, grid, config)
        approx = approximate_curve(analytic2d.eval, analytic2d.grad, proj, box, grid, k=15, config=config)
        assert np.max(np.abs(approx.inf - exact.inf) / np.abs(exact.inf)) <= 0.01
        assert np.max(np.abs(approx.sup - exact.sup) / np.abs(exact.sup)) <= 0.06

    def test_kriging_map_of_plane(self):
        proj = Projection.coordinate_pair(0, 1, 3)
        lattice = lattice_2d(proj, BoxDomain.unit(3), 6)
        gen = np.random.default_rng(1)
        knots = gen.uniform(size=(20, 2))
        sup = knots.sum(axis=1) + 1
        pmap = approximate_profile_2d(proj, knots, sup, sup - 1, lattice, FitConfig(n_starts=3))
        E = lattice.etas
        assert pmap.provenance is Provenance.KRIGING
        assert np.max(np.abs(pmap.sup.ravel() - (E.sum(axis=1) + 1))) < 0.1

    def test_kriging_map_needs_ten_knots(self):
        proj = Projection.coordinate_pair(0, 1, 3)
        lattice = lattice_2d(proj, BoxDomain.unit(3), 3)
        knots = np.random.default_rng(0).uniform(size=(6, 2))
        with pytest.raises(InsufficientDataError):
            approximate_profile_2d(proj, knots, np.ones(6), np.zeros(6), lattice)

    def test_kriging_map_rejects_duplicates(self):
        proj = Projection.coordinate_pair(0, 1, 3)
        lattice = lattice_2d(proj, BoxDomain.unit(3), 3)
        knots = np.random.default_rng(0).uniform(size=(12, 2))
        knots[5] = knots[2]
        with pytest.raises(InvalidArgumentError):
            approximate_profile_2d(proj, knots, np.ones(12), np.zeros(12), lattice)


class TestAnalyticExamples:
    """Regiões excluídas da função analítica 3-d"""

    @pytest.mark.slow
    def test_cut_of_bivariate_map(self):
        fn = AnalyticFn3d()
        box = BoxDomain.unit(3)
        proj = Projection.coordinate_pair(0, 1, 3)

        def sup(x1):
            return profile_point(fn.eval, fn.grad, proj, box, [x1, 0.2], "sup")[1]

        t = np.linspace(0, 1, 2001)
        for x1 in (0.09, 0.5):
            brute = fn.values(np.column_stack([np.full(t.size, x1), np.full(t.size, 0.2), t])).max()
            assert sup(x1) == pytest.approx(brute, abs=1e-5)
        # fronteira da região excluída perto de x1 = 0.115
        assert sup(0.09) > 0.0
        assert all(sup(x1) < 0.0 for x1 in np.linspace(0.14, 1.0, 44))

    @pytest.mark.slow
    @pytest.mark.parametrize("i", [0, 1, 2])
    def test_coordinate_profiles_exclude_nothing(self, i):
        fn = AnalyticFn3d()
        box = BoxDomain.unit(3)
        curve = coordinate_profiles(fn.eval, fn.grad, i, box, grid_1d(Projection.coordinate(i, 3), box, 11),
                                    OptimizerConfig(starts_1d=8))
        assert np.all(curve.sup > 0.0)
        assert np.all(curve.inf < 0.0)


class TestExcursionIntervals:
    """Partição da grade por um limiar"""

    def test_everything_excluded(self):
        etas = np.linspace(0, 1, 11)
        iv = excursion_intervals(make_curve(etas, np.full(11, -1.0), np.full(11, -2.0)), 0.0)
        assert [(i.lower, i.upper) for i in iv.non_excursion] == [(0.0, 1.0)]
        assert iv.excursion == [] and iv.undetermined == []

    def test_linear_crossing(self):
        etas = np.linspace(0, 1, 101)
        iv = excursion_intervals(make_curve(etas, etas, etas - 1), 0.13)
        assert len(iv.non_excursion) == 1
        assert iv.non_excursion[0].lower == 0.0
        assert iv.non_excursion[0].upper == pytest.approx(0.13, abs=1e-12)
        assert iv.undetermined[0].lower == pytest.approx(0.13, abs=1e-12)
        assert iv.excluded_length == pytest.approx(0.13, abs=1e-12)

    def test_excursion_region(self):
        etas = np.linspace(0, 1, 11)
        iv = excursion_intervals(make_curve(etas, etas + 1, etas), 0.5)
        assert iv.non_excursion == []
        assert iv.excursion[0].lower == pytest.approx(0.5)
        assert iv.excursion[0].upper == 1.0
        assert iv.undetermined[0].upper == pytest.approx(0.5)

    def test_two_intervals(self):
        etas = np.linspace(0, 1, 201)
        sup = np.cos(2 * np.pi * etas)
        iv = excursion_intervals(make_curve(etas, sup, sup - 2), 0.5)
        assert [(round(i.lower, 2), round(i.upper, 2)) for i in iv.non_excursion] == [(0.17, 0.83)]
        iv = excursion_intervals(make_curve(etas, -sup, -sup - 2), -0.5)
        assert len(iv.non_excursion) == 2

    def test_bisection_refinement(self):
        etas = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
        curve = make_curve(etas, etas ** 2, etas ** 2 - 1)
        coarse = excursion_intervals(curve, 0.2)
        fine = excursion_intervals(curve, 0.2, refine_sup=lambda e: e ** 2)
        assert coarse.non_excursion[0].upper == pytest.approx(0.25 + 0.1375 / 0.1875 * 0.25)
        assert fine.non_excursion[0].upper == pytest.approx(math.sqrt(0.2), abs=1e-5)

    def test_low_resolution_flag(self):
        etas = np.linspace(0, 1, 11)
        sup = np.ones(11)
        sup[4:7] = -1.0
        iv = excursion_intervals(make_curve(etas, sup, sup - 3), 0.0)
        assert iv.non_excursion[0].low_resolution is False
        assert iv.non_excursion[0].length == pytest.approx(0.3)
        sup[4:7] = [1.0, -0.01, 1.0]
        iv = excursion_intervals(make_curve(etas, sup, sup - 3), 0.0)
        assert iv.non_excursion[0].low_resolution is True

    def test_nan_nodes_are_skipped(self):
        etas = np.linspace(0, 1, 11)
        sup = etas.copy()
        sup[3] = np.nan
        iv = excursion_intervals(make_curve(etas, sup, sup - 1), 0.55)
        assert iv.non_excursion[0].upper == pytest.approx(0.55)

    def test_to_dict(self):
        iv = ExcursionIntervals(0.0, [Interval(0.0, 0.2)], [], [Interval(0.2, 1.0)])
        doc = iv.to_dict()
        assert doc["excluded_length"] == pytest.approx(0.2)
        assert doc["non_excursion"][0] == {"lower": 0.0, "upper": 0.2, "low_resolution": False}


class TestExcludedMeasures:
    """Volumes e áreas excluídos"""

    def test_volume_on_unit_box(self):
        iv = ExcursionIntervals(0.0, [Interval(0.0, 0.13), Interval(0.7, 0.8)])
        assert excluded_volume(iv) == pytest.approx(0.23)
        assert excluded_volume(iv, BoxDomain.unit(3), 0) == pytest.approx(0.23)

    def test_volume_scales_with_other_widths(self):
        iv = ExcursionIntervals(0.0, [Interval(0.0, 0.5)])
        box = BoxDomain(np.zeros(3), np.array([1.0, 2.0, 3.0]))
        assert excluded_volume(iv, box, 0) == pytest.approx(3.0)

    def test_area(self):
        box = BoxDomain.unit(3)
        proj = Projection.coordinate_pair(0, 1, 3)
        pmap = bivariate_profiles(ramp, ramp_grad, proj, box, lattice_2d(proj, box, 11))
        # P_sup = eta1 + eta2^2 + 1
        assert excluded_area(pmap, 10.0) == pytest.approx(1.0)
        assert excluded_area(pmap, 0.5) == 0.0
        assert 0.0 < excluded_area(pmap, 2.0) < 1.0
