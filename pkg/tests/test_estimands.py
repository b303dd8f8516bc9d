import numpy as np
import pytest
from hypothesis import given

from misreport.estimands import (
    bias,
    bias_covariance_form,
    bias_from_table,
    estimands,
    reported_means,
    true_ate,
)
from misreport.population import (
    DeltaVector,
    InconsistentDeltaError,
    JointClassTable,
    Margins,
    deltas_from_table,
    independence_deltas,
    margins,
)

from .conftest import BASELINE, models_with_point, tables

# potential outcomes (y0, y1) by response letter
PO = {"D": (1, 0), "I": (0, 1), "N": (0, 0), "A": (1, 1)}


def unit_level_oracle(table: JointClassTable):
    """Means, covariances and reported means by summing over the 12 cells directly."""
    cells = table.as_dict()
    w = np.array(list(cells.values()))
    rep = np.array([name[0] for name in cells])
    res = [name[1] for name in cells]
    y0 = np.array([PO[r][0] for r in res], dtype=float)
    y1 = np.array([PO[r][1] for r in res], dtype=float)
    u = (rep == "U").astype(float)
    o = (rep == "O").astype(float)
    tau = y1 - y0
    r1 = np.where(rep == "U", 0.0, np.where(rep == "O", 1.0, y1))
    r0 = np.where(rep == "U", 0.0, np.where(rep == "O", 1.0, y0))

    def cov(a, b):
        return float(w @ (a * b) - (w @ a) * (w @ b))

    return {
        "tau": float(w @ tau),
        "cov_u": cov(u, tau),
        "cov_o": cov(o, tau),
        "U": float(w @ u),
        "O": float(w @ o),
        "mu1": float(w @ r1),
        "mu0": float(w @ r0),
    }


UNDER = Margins(0.1, 0.2, 0.35, 0.35, U=0.2)
OVER = Margins(0.1, 0.2, 0.35, 0.35, O=0.2)


class TestTrueAte:
    def test_baseline(self):
        assert true_ate(BASELINE) == pytest.approx(-0.1)

    def test_symmetric(self):
        assert true_ate(Margins(0.3, 0.3, 0.2, 0.2)) == 0.0

    def test_worked_example(self):
        assert true_ate(Margins(0.0, 0.035, 0.93, 0.035)) == pytest.approx(-0.035)


class TestBias:
    def test_no_misreporting(self):
        assert bias(BASELINE, independence_deltas(BASELINE)) == 0.0

    def test_underreporting_independence(self):
        b = bias(UNDER, independence_deltas(UNDER))
        assert b == pytest.approx(0.2 * 0.1 / 0.65, abs=1e-15)
        assert b == pytest.approx(0.030769, abs=1e-6)
        assert true_ate(UNDER) + b == pytest.approx(-0.069231, abs=1e-6)

    def test_inconsistent_delta(self):
        with pytest.raises(InconsistentDeltaError):
            bias(UNDER, DeltaVector(1, 1, 1, 1, 1, 1))

    @given(tables())
    def test_class_form_matches_table(self, table):
        m = margins(table)
        d = deltas_from_table(table)
        expected = -table.UI + table.UD - table.OI + table.OD
        assert bias(m, d) == pytest.approx(expected, abs=1e-12)
        assert bias_from_table(table) == pytest.approx(expected, abs=1e-15)


class TestCovarianceForm:
    def test_truth_tellers(self):
        assert bias_covariance_form(JointClassTable(TI=0.1, TD=0.2, TN=0.35, TA=0.35)) == pytest.approx(0, abs=1e-15)

    def test_worked_table(self):
        t = JointClassTable(TI=0.1, UI=0.1, OI=0.05, TD=0.2, TN=0.3, TA=0.25)
        assert bias_covariance_form(t) == pytest.approx(-0.15, abs=1e-12)

    @given(tables())
    def test_matches_unit_level_covariances(self, table):
        o = unit_level_oracle(table)
        expected = -((o["U"] + o["O"]) * o["tau"] + o["cov_u"] + o["cov_o"])
        assert bias_covariance_form(table) == pytest.approx(expected, abs=1e-12)

    @given(tables())
    def test_equals_class_form(self, table):
        m = margins(table)
        assert bias_covariance_form(table) == pytest.approx(bias(m, deltas_from_table(table)), abs=1e-12)


class TestReportedMeans:
    def test_no_misreporting(self):
        mu1, mu0 = reported_means(BASELINE, independence_deltas(BASELINE))
        assert (mu1, mu0) == pytest.approx((0.45, 0.55), abs=1e-15)

    def test_underreporting(self):
        mu1, mu0 = reported_means(UNDER, independence_deltas(UNDER))
        # I + A - U(I + A)/0.65 and D + A - U(D + A)/0.65
        assert mu1 == pytest.approx(0.45 - 0.2 * 0.45 / 0.65, abs=1e-15)
        assert mu0 == pytest.approx(0.55 - 0.2 * 0.55 / 0.65, abs=1e-15)
        assert (mu1, mu0) == pytest.approx((0.311538, 0.380769), abs=1e-6)

    def test_overreporting(self):
        mu1, mu0 = reported_means(OVER, independence_deltas(OVER))
        assert (mu1, mu0) == pytest.approx((0.619231, 0.688462), abs=1e-6)

    @given(tables())
    def test_matches_unit_level(self, table):
        o = unit_level_oracle(table)
        mu1, mu0 = reported_means(margins(table), deltas_from_table(table))
        assert mu1 == pytest.approx(o["mu1"], abs=1e-12)
        assert mu0 == pytest.approx(o["mu0"], abs=1e-12)

    @given(models_with_point())
    def test_identity_and_range(self, case):
        model, d = case
        m = model.margins
        s = estimands(m, d)
        assert 0.0 <= s.mu1 <= 1.0 and 0.0 <= s.mu0 <= 1.0
        assert s.mu1 - s.mu0 == pytest.approx(s.tau_sp + s.bias, abs=1e-12)
        assert s.expected_estimate == pytest.approx(s.tau_sp + s.bias, abs=1e-12)
        assert s.var1 == pytest.approx(s.mu1 * (1 - s.mu1))

    @given(tables())
    def test_no_misreporting_gives_truth(self, table):
        m = margins(table)
        clean = Margins(m.I, m.D, m.N, m.A)
        s = estimands(clean, independence_deltas(clean))
        assert s.bias == 0.0
        assert s.expected_estimate == pytest.approx(s.tau_sp, abs=1e-12)
