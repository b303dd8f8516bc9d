"""Super-population estimands under fixed reporting classes."""

from __future__ import annotations

from dataclasses import dataclass

from .population import (
    SUM_TOL,
    DeltaVector,
    InconsistentDeltaError,
    JointClassTable,
    Margins,
    delta_consistency_violations,
    margins,
)


@dataclass(frozen=True)
class EstimandSet:
    tau_sp: float
    bias: float
    expected_estimate: float
    mu1: float
    mu0: float
    var1: float
    var0: float


def _require_consistent(m: Margins, delta: DeltaVector) -> None:
    problems = delta_consistency_violations(m, delta)
    if problems:
        raise InconsistentDeltaError("; ".join(problems))


def true_ate(m: Margins) -> float:
    return m.I - m.D


def bias(m: Margins, delta: DeltaVector) -> float:
    """Expected difference-in-means minus the true effect, in ratio form."""
    _require_consistent(m, delta)
    return (
        -m.U * m.I * delta.UI
        + m.U * m.D * delta.UD
        - m.O * m.I * delta.OI
        + m.O * m.D * delta.OD
    )


def bias_from_table(table: JointClassTable) -> float:
    return -table.UI + table.UD - table.OI + table.OD


def bias_covariance_form(table: JointClassTable) -> float:
    """Bias written through the population covariances of U and O with tau_i.

    With tau_i = I_i - D_i, Cov(U, tau) = (UI - UD) - U * (I - D).
    """
    m = margins(table)
    tau = m.I - m.D
    cov_u = (table.UI - table.UD) - m.U * tau
    cov_o = (table.OI - table.OD) - m.O * tau
    return -((m.U + m.O) * tau + cov_u + cov_o)


def reported_means(m: Margins, delta: DeltaVector) -> tuple[float, float]:
    """Mean reported outcome under treatment and under control."""
    _require_consistent(m, delta)
    mu1 = m.I + m.A - m.U * (m.I * delta.UI + m.A * delta.UA) + m.O * (m.D * delta.OD + m.N * delta.ON)
    mu0 = m.D + m.A - m.U * (m.D * delta.UD + m.A * delta.UA) + m.O * (m.I * delta.OI + m.N * delta.ON)
    for label, mu in (("mu1", mu1), ("mu0", mu0)):
        if mu < -SUM_TOL or mu > 1 + SUM_TOL:
            raise InconsistentDeltaError(f"{label} = {mu!r} outside [0, 1]")
    return mu1, mu0


def estimands(m: Margins, delta: DeltaVector) -> EstimandSet:
    mu1, mu0 = reported_means(m, delta)
    b = bias(m, delta)
    return EstimandSet(
        tau_sp=true_ate(m),
        bias=b,
        expected_estimate=mu1 - mu0,
        mu1=mu1,
        mu0=mu0,
        var1=mu1 * (1 - mu1),
        var0=mu0 * (1 - mu0),
    )
