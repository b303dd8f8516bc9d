import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from misreport.population import DeltaVector, Margins, independence_deltas
from misreport.sensitivity import (
    GammaModel,
    InfeasibleModelError,
    delta_box,
    effective_bounds,
    is_feasible,
    natural_bounds,
    reduce,
)

from .conftest import BASELINE, gamma_models, models_with_point

UNDER = Margins(0.1, 0.2, 0.35, 0.35, U=0.2)
VERTEX = DeltaVector(1 / (1.5 * 0.65), 1.5 / 0.65, (1 - 0.1 / (1.5 * 0.65) - 0.2 * 1.5 / 0.65) / 0.35, 1, 1, 1)


class TestGammaModel:
    def test_rejects_gamma_below_one(self):
        with pytest.raises(ValueError):
            GammaModel(0.9, BASELINE)
        with pytest.raises(ValueError):
            GammaModel(float("nan"), BASELINE)

    def test_rejects_margins_without_independent_table(self):
        # U/(1-N) + O/(1-A) > 1 leaves Increase units short of truth-tellers
        with pytest.raises(InfeasibleModelError):
            GammaModel(1.0, Margins(0.1, 0.2, 0.35, 0.35, U=0.5, O=0.4))


class TestDeltaBox:
    def test_gamma_one_is_singleton(self):
        box = delta_box(GammaModel(1.0, UNDER))
        assert box[:3] == pytest.approx(np.full((3, 2), 1 / 0.65))

    def test_gamma_one_and_half(self):
        box = delta_box(GammaModel(1.5, UNDER))
        assert box[0] == pytest.approx([1 / (1.5 * 0.65), 1.5 / 0.65])
        assert box[0] == pytest.approx([1.025641, 2.307692], abs=1e-6)

    def test_unit_scaling(self):
        box = delta_box(GammaModel(2.0, Margins(0.5, 0.5, 0.0, 0.0, U=0.1)))
        assert np.allclose(box[:3], [[0.5, 2.0]] * 3)

    @given(gamma_models())
    def test_contains_independence(self, model):
        box = delta_box(model)
        ind = independence_deltas(model.margins).as_array()
        assert np.all(box[:, 0] <= ind * (1 + 1e-12)) and np.all(ind <= box[:, 1] * (1 + 1e-12))


class TestNaturalBounds:
    def test_underreporter_bounds(self):
        nat = natural_bounds(UNDER)
        # UI: max(0, U + I - 1)/(U I) <= delta <= min(1/I, 1/U)
        assert nat[0] == pytest.approx([(0.2 + 0.1 - 1) / 0.02, 5.0])
        assert np.isinf(nat[3]).all()

    def test_effective_bounds_intersect(self):
        eff = effective_bounds(GammaModel(10.0, UNDER))
        assert eff[0, 1] == pytest.approx(5.0)


class TestIsFeasible:
    @given(gamma_models())
    def test_independence_always_feasible(self, model):
        assert is_feasible(independence_deltas(model.margins), model).ok

    def test_vertex(self):
        assert VERTEX.UA == pytest.approx(1.245421, abs=1e-6)
        assert 0.1 * 1.025641 + 0.2 * 2.307692 + 0.35 * 1.245421 == pytest.approx(1.0, abs=1e-6)
        assert is_feasible(VERTEX, GammaModel(1.5, UNDER)).ok

    def test_box_violation_named(self):
        d = DeltaVector(2.4, 1.0, (1 - 0.24 - 0.2) / 0.35, 1, 1, 1)
        report = is_feasible(d, GammaModel(1.5, UNDER))
        assert not report
        assert any("delta_UI" in v and "Gamma box" in v for v in report.violations)

    def test_sum_violation(self):
        report = is_feasible(DeltaVector(1.5, 1.5, 1.5, 1, 1, 1), GammaModel(2.0, UNDER))
        assert any("sum" in v for v in report.violations)

    def test_inactive_block_ignored(self):
        d = DeltaVector(1 / 0.65, 1 / 0.65, 1 / 0.65, 99.0, -5.0, 0.0)
        assert is_feasible(d, GammaModel(1.0, UNDER)).ok

    @given(models_with_point(), st.floats(0.0, 1.0))
    def test_nested_in_gamma(self, case, extra):
        model, d = case
        bigger = GammaModel(model.gamma + extra, model.margins)
        assert is_feasible(d, model).ok
        assert is_feasible(d, bigger).ok


class TestReduce:
    def test_gamma_one_is_point(self):
        poly = reduce(GammaModel(1.0, UNDER))
        assert poly.dim == 0
        assert poly.lift(np.zeros(0)).as_array() == pytest.approx(independence_deltas(UNDER).as_array())

    def test_no_misreporting_is_point(self):
        assert reduce(GammaModel(1.7, BASELINE)).dim == 0

    def test_underreporting_is_two_dimensional(self):
        model = GammaModel(1.5, UNDER)
        poly = reduce(model)
        assert poly.dim == 2
        assert set(poly.free) == {"UI", "UD"}
        y = poly.project(VERTEX)
        assert poly.contains(y[None])[0]
        assert poly.lift(y).as_array()[:3] == pytest.approx(VERTEX.as_array()[:3], abs=1e-12)
        verts = np.array([poly.lift(v).as_array()[:3] for v in poly.vertices()])
        assert np.min(np.abs(verts - VERTEX.as_array()[:3]).max(axis=1)) < 1e-12

    def test_mixed_is_four_dimensional(self):
        poly = reduce(GammaModel(1.5, Margins(0.1, 0.2, 0.35, 0.35, U=0.1, O=0.1)))
        assert poly.dim == 4
        assert set(poly.eliminated) == {"UA", "ON"}

    def test_elimination_falls_back_when_always_empty(self):
        poly = reduce(GammaModel(1.5, Margins(0.3, 0.3, 0.4, 0.0, U=0.2)))
        # A = 0 pins UA; the remaining U ratio is eliminated instead
        assert "UA" not in poly.free
        assert poly.dim == 1

    @given(models_with_point())
    def test_lift_then_check(self, case):
        model, d = case
        assert is_feasible(d, model).ok

    @given(gamma_models())
    def test_vertices_feasible_and_round_trip(self, model):
        poly = reduce(model)
        for v in poly.vertices():
            d = poly.lift(v)
            assert is_feasible(d, model).ok
            assert poly.project(d) == pytest.approx(v, abs=1e-12)

    @given(gamma_models())
    def test_reduced_inequalities_match_feasibility(self, model):
        poly = reduce(model)
        if poly.dim == 0:
            return
        rng = np.random.default_rng(0)
        lo, hi = poly.vertices().min(axis=0), poly.vertices().max(axis=0)
        Y = lo + (hi - lo) * rng.random((200, poly.dim))
        slack = (poly.h[None] - Y @ poly.G.T).min(axis=1)
        for y, s in zip(Y, slack):
            if abs(s) < 1e-8:
                continue  # too close to the boundary for the two tolerances to agree
            assert bool(is_feasible(poly.lift(y), model)) == (s > 0)
