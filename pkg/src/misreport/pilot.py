"""Estimators for a gold-standard pilot.

In a pilot both the true and the reported outcome of every unit are
observed.  Each arm is summarised by four counts in the order
``(11, 10, 01, 00)``, where the first digit is the true outcome and the
second the reported one.  Estimates are computed in exact rational
arithmetic and converted to floats at the end.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

CELL_ORDER = ("11", "10", "01", "00")


@dataclass(frozen=True)
class PilotCounts:
    treated: tuple[int, int, int, int]
    control: tuple[int, int, int, int]

    def __post_init__(self):
        for arm in ("treated", "control"):
            cells = tuple(getattr(self, arm))
            if len(cells) != 4:
                raise ValueError(f"{arm} needs four counts ordered 11,10,01,00")
            if any(int(c) != c or c < 0 for c in cells):
                raise ValueError(f"{arm} counts must be nonnegative integers")
            if sum(cells) < 1:
                raise ValueError(f"{arm} arm is empty")
            object.__setattr__(self, arm, tuple(int(c) for c in cells))

    @property
    def n_treated(self) -> int:
        return sum(self.treated)

    @property
    def n_control(self) -> int:
        return sum(self.control)

    def proportions(self, arm: str) -> dict[str, Fraction]:
        cells = getattr(self, arm)
        total = sum(cells)
        return {key: Fraction(c, total) for key, c in zip(CELL_ORDER, cells)}


@dataclass(frozen=True)
class Reconstruction:
    """Joint class proportions recovered when the Decrease class is empty."""

    TI: float
    TN: float
    TA: float
    OI: float
    ON: float
    UI: float
    UA: float
    feasible: bool

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in ("TI", "TN", "TA", "OI", "ON", "UI", "UA")}


@dataclass(frozen=True)
class PilotEstimates:
    treated_proportions: dict[str, float]
    control_proportions: dict[str, float]
    B_hat: float
    reported_mean_treated: float
    reported_mean_control: float
    reconstruction: Reconstruction | None = None


def _bias_exact(counts: PilotCounts) -> Fraction:
    pt = counts.proportions("treated")
    pc = counts.proportions("control")
    # E(B_hat) = -UI + UD - OI + OD: the (1,0) cells carry U, the (0,1) cells O
    return pc["10"] - pt["10"] + pt["01"] - pc["01"]


def estimate_bias(counts: PilotCounts) -> float:
    """Unbiased estimate of the difference-in-means bias."""
    return float(_bias_exact(counts))


def reported_means(counts: PilotCounts) -> tuple[float, float]:
    pt = counts.proportions("treated")
    pc = counts.proportions("control")
    return float(pt["11"] + pt["01"]), float(pc["11"] + pc["01"])


def reconstruct_no_decrease(counts: PilotCounts, tol: float = 1e-12) -> Reconstruction:
    """Recover the seven nonzero class proportions assuming no Decrease units.

    Estimates are reported as computed; a negative value (sampling noise
    or a violated assumption) sets ``feasible`` to False instead of being
    clipped.
    """
    pt = counts.proportions("treated")
    pc = counts.proportions("control")
    TA = pc["11"]
    UA = pc["10"]
    ON = pt["01"]
    TN = pt["00"]
    UI = pt["10"] - pc["10"]
    OI = pc["01"] - pt["01"]
    TI = pt["11"] - TA - OI
    values = (TI, TN, TA, OI, ON, UI, UA)
    feasible = all(v >= 0 for v in values) and abs(float(sum(values)) - 1.0) <= tol
    return Reconstruction(*(float(v) for v in values), feasible=feasible)


def estimate(counts: PilotCounts, no_decrease: bool = False) -> PilotEstimates:
    mt, mc = reported_means(counts)
    return PilotEstimates(
        treated_proportions={k: float(v) for k, v in counts.proportions("treated").items()},
        control_proportions={k: float(v) for k, v in counts.proportions("control").items()},
        B_hat=estimate_bias(counts),
        reported_mean_treated=mt,
        reported_mean_control=mc,
        reconstruction=reconstruct_no_decrease(counts) if no_decrease else None,
    )


def cell_probabilities(table) -> tuple[dict[str, float], dict[str, float]]:
    """Population (true, reported) cell probabilities for each arm of a joint table."""
    t = table
    treated = {
        "11": t.TI + t.TA + t.OI,
        "10": t.UI + t.UA,
        "01": t.OD + t.ON,
        "00": t.TD + t.TN + t.UD,
    }
    control = {
        "11": t.TD + t.TA + t.OD,
        "10": t.UD + t.UA,
        "01": t.OI + t.ON,
        "00": t.TI + t.TN + t.UI,
    }
    return treated, control
