"""Joint distribution of response classes and reporting classes.

A super-population is summarised by the twelve proportions of the
(response class) x (reporting class) table.  Two cells are structural
zeros: a Never unit cannot underreport and an Always unit cannot
overreport, since neither could ever report something other than the
truth.

The same distribution can be written as six marginals plus six response
class ratios (``delta``), e.g. ``delta_UI = UI / (U * I)``.  The helpers
here convert between the two forms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields

import numpy as np

TOL = 1e-12
SUM_TOL = 1e-10

CELL_NAMES = ("TD", "TI", "TN", "TA", "OD", "OI", "ON", "OA", "UD", "UI", "UN", "UA")
STRUCTURAL_ZEROS = ("UN", "OA")
DELTA_NAMES = ("UI", "UD", "UA", "OI", "OD", "ON")


class InvalidTableError(ValueError):
    pass


class InconsistentDeltaError(ValueError):
    """Raised when a ratio vector does not describe a valid table for given margins."""


class ResponseClass(enum.Enum):
    DECREASE = "Decrease"
    INCREASE = "Increase"
    NEVER = "Never"
    ALWAYS = "Always"

    @property
    def potential_outcomes(self) -> tuple[int, int]:
        """(Y(0), Y(1)) for a unit of this class."""
        return _POTENTIAL_OUTCOMES[self]


_POTENTIAL_OUTCOMES = {
    ResponseClass.DECREASE: (1, 0),
    ResponseClass.INCREASE: (0, 1),
    ResponseClass.NEVER: (0, 0),
    ResponseClass.ALWAYS: (1, 1),
}


class ReportingClass(enum.Enum):
    TRUTH_TELLER = "TruthTeller"
    UNDERREPORTER = "Underreporter"
    OVERREPORTER = "Overreporter"


@dataclass(frozen=True)
class JointClassTable:
    """Population fractions of each (reporting, response) cell.

    Field names are reporting letter then response letter, so ``UI`` is
    the fraction of units that are underreporters in the Increase class.
    The structural-zero fields ``UN`` and ``OA`` exist only so that a bad
    table can be represented and rejected by :func:`validate_table`.
    """

    TD: float = 0.0
    TI: float = 0.0
    TN: float = 0.0
    TA: float = 0.0
    OD: float = 0.0
    OI: float = 0.0
    ON: float = 0.0
    OA: float = 0.0
    UD: float = 0.0
    UI: float = 0.0
    UN: float = 0.0
    UA: float = 0.0

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in CELL_NAMES], dtype=float)

    def cell(self, reporting: ReportingClass, response: ResponseClass) -> float:
        return getattr(self, reporting.value[0] + response.value[0])


@dataclass(frozen=True)
class Margins:
    """Response-class marginals (I, D, N, A) and misreporter shares (U, O)."""

    I: float  # noqa: E741
    D: float
    N: float
    A: float
    U: float = 0.0
    O: float = 0.0  # noqa: E741

    def __post_init__(self):
        problems = margin_violations(self)
        if problems:
            raise ValueError("invalid margins: " + "; ".join(problems))

    @property
    def tau_sp(self) -> float:
        return self.I - self.D

    def as_tuple(self) -> tuple[float, ...]:
        return (self.I, self.D, self.N, self.A, self.U, self.O)

    def with_misreporters(self, U: float, O: float) -> "Margins":  # noqa: E741
        return Margins(self.I, self.D, self.N, self.A, U, O)


def margin_violations(m) -> list[str]:
    out = []
    for name in ("I", "D", "N", "A", "U", "O"):
        v = getattr(m, name)
        if not np.isfinite(v) or v < -TOL or v > 1 + TOL:
            out.append(f"{name}={v} outside [0, 1]")
    total = m.I + m.D + m.N + m.A
    if abs(total - 1.0) > TOL:
        out.append(f"normalization: I+D+N+A = {total!r} != 1")
    if m.U + m.O > 1 + TOL:
        out.append(f"U+O = {m.U + m.O} exceeds 1")
    # UN = 0 forces every underreporter into I, D or A; likewise OA = 0 for O.
    if m.U > 0 and m.U > 1 - m.N + TOL:
        out.append("U exceeds 1-N (Never units cannot underreport)")
    if m.O > 0 and m.O > 1 - m.A + TOL:
        out.append("O exceeds 1-A (Always units cannot overreport)")
    return out


@dataclass(frozen=True)
class DeltaVector:
    """Response class ratios, in the order (UI, UD, UA, OI, OD, ON)."""

    UI: float
    UD: float
    UA: float
    OI: float
    OD: float
    ON: float

    def as_array(self) -> np.ndarray:
        return np.array([self.UI, self.UD, self.UA, self.OI, self.OD, self.ON], dtype=float)

    @classmethod
    def from_array(cls, values) -> "DeltaVector":
        values = [float(v) for v in values]
        if len(values) != 6:
            raise ValueError("a delta vector has exactly six entries")
        return cls(*values)


@dataclass(frozen=True)
class TableReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_table(table: JointClassTable) -> TableReport:
    problems = []
    values = table.as_dict()
    for name, v in values.items():
        if not np.isfinite(v) or v < -TOL or v > 1 + TOL:
            problems.append(f"cell {name}={v} outside [0, 1]")
    total = sum(values.values())
    if abs(total - 1.0) > TOL:
        problems.append(f"normalization: cells sum to {total!r}, not 1")
    for name in STRUCTURAL_ZEROS:
        if values[name] != 0.0:
            problems.append(f"structural zero {name} is {values[name]}, must be 0")
    return TableReport(tuple(problems))


def margins(table: JointClassTable) -> Margins:
    report = validate_table(table)
    if not report:
        raise InvalidTableError("; ".join(report.violations))
    t = table
    return Margins(
        I=t.TI + t.OI + t.UI,
        D=t.TD + t.OD + t.UD,
        N=t.TN + t.ON + t.UN,
        A=t.TA + t.OA + t.UA,
        U=t.UD + t.UI + t.UN + t.UA,
        O=t.OD + t.OI + t.ON + t.OA,
    )


def independence_deltas(m: Margins) -> DeltaVector:
    """Ratios under which misreporting is independent of response class.

    Independence is conditional on the admissible classes (Never is
    excluded for underreporters, Always for overreporters), which gives
    ``1/(1-N)`` for the U ratios and ``1/(1-A)`` for the O ratios.
    """
    if m.N >= 1.0 or m.A >= 1.0:
        raise ValueError("independence ratios need N < 1 and A < 1")
    du = 1.0 / (1.0 - m.N)
    do = 1.0 / (1.0 - m.A)
    return DeltaVector(du, du, du, do, do, do)


def block_weights(m: Margins) -> tuple[np.ndarray, np.ndarray]:
    """Response marginals paired with the U ratios and with the O ratios."""
    return np.array([m.I, m.D, m.A]), np.array([m.I, m.D, m.N])


def delta_consistency_violations(m: Margins, delta: DeltaVector) -> list[str]:
    """Sum constraints and nonnegativity of every implied cell (no Gamma involved)."""
    out = []
    d = delta.as_array()
    wu, wo = block_weights(m)
    if m.U > 0:
        s = float(wu @ d[:3])
        if abs(s - 1.0) > SUM_TOL:
            out.append(f"underreporter sum I*dUI + D*dUD + A*dUA = {s!r} != 1")
    if m.O > 0:
        s = float(wo @ d[3:])
        if abs(s - 1.0) > SUM_TOL:
            out.append(f"overreporter sum I*dOI + D*dOD + N*dON = {s!r} != 1")
    cells = _cells(m, delta)
    for name, v in cells.items():
        if v < -SUM_TOL:
            out.append(f"cell {name} = {v!r} is negative")
    return out


def _cells(m: Margins, delta: DeltaVector) -> dict[str, float]:
    U, O = m.U, m.O  # noqa: E741
    UI, UD, UA = U * m.I * delta.UI, U * m.D * delta.UD, U * m.A * delta.UA
    OI, OD, ON = O * m.I * delta.OI, O * m.D * delta.OD, O * m.N * delta.ON
    return {
        "TD": m.D - UD - OD,
        "TI": m.I - UI - OI,
        "TN": m.N - ON,
        "TA": m.A - UA,
        "OD": OD,
        "OI": OI,
        "ON": ON,
        "OA": 0.0,
        "UD": UD,
        "UI": UI,
        "UN": 0.0,
        "UA": UA,
    }


def table_from_margins_and_deltas(m: Margins, delta: DeltaVector) -> JointClassTable:
    problems = delta_consistency_violations(m, delta)
    if problems:
        raise InconsistentDeltaError("; ".join(problems))
    # clamp round-off below zero so the result passes validate_table
    cells = {k: (0.0 if -SUM_TOL <= v < 0 else v) for k, v in _cells(m, delta).items()}
    return JointClassTable(**cells)


def deltas_from_table(table: JointClassTable) -> DeltaVector:
    """Inverse of :func:`table_from_margins_and_deltas`.

    Ratios whose denominator is zero take the independence value.
    """
    m = margins(table)
    indep = independence_deltas(m)

    def ratio(cell, share, marginal, fallback):
        denom = share * marginal
        return cell / denom if denom > 0 else fallback

    t = table
    return DeltaVector(
        UI=ratio(t.UI, m.U, m.I, indep.UI),
        UD=ratio(t.UD, m.U, m.D, indep.UD),
        UA=ratio(t.UA, m.U, m.A, indep.UA),
        OI=ratio(t.OI, m.O, m.I, indep.OI),
        OD=ratio(t.OD, m.O, m.D, indep.OD),
        ON=ratio(t.ON, m.O, m.N, indep.ON),
    )
