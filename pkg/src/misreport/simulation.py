"""Finite super-population simulation and exhaustive-enumeration oracles."""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .pilot import CELL_ORDER, PilotCounts
from .population import (
    CELL_NAMES,
    JointClassTable,
    ReportingClass,
    ResponseClass,
    margins,
    validate_table,
)
from .power import DesignParams, normal_quantile

RESPONSES = (ResponseClass.DECREASE, ResponseClass.INCREASE, ResponseClass.NEVER, ResponseClass.ALWAYS)
REPORTINGS = (ReportingClass.TRUTH_TELLER, ReportingClass.UNDERREPORTER, ReportingClass.OVERREPORTER)
_RESPONSE_CODE = {"D": 0, "I": 1, "N": 2, "A": 3}
_REPORTING_CODE = {"T": 0, "U": 1, "O": 2}
# potential outcomes indexed by response code
Y0 = np.array([1, 0, 0, 1], dtype=np.int8)
Y1 = np.array([0, 1, 0, 1], dtype=np.int8)
CELL_CODES = tuple((_REPORTING_CODE[name[0]], _RESPONSE_CODE[name[1]]) for name in CELL_NAMES)


@dataclass(frozen=True)
class Unit:
    response: ResponseClass
    reporting: ReportingClass

    def __post_init__(self):
        if self.response is ResponseClass.NEVER and self.reporting is ReportingClass.UNDERREPORTER:
            raise ValueError("a Never unit cannot be an underreporter")
        if self.response is ResponseClass.ALWAYS and self.reporting is ReportingClass.OVERREPORTER:
            raise ValueError("an Always unit cannot be an overreporter")

    def reported(self, treated: bool) -> int:
        if self.reporting is ReportingClass.UNDERREPORTER:
            return 0
        if self.reporting is ReportingClass.OVERREPORTER:
            return 1
        y0, y1 = self.response.potential_outcomes
        return y1 if treated else y0


@dataclass(frozen=True, eq=False)
class SuperPopulation:
    """Class labels of every unit, stored as small integer codes."""

    response: np.ndarray
    reporting: np.ndarray

    @property
    def size(self) -> int:
        return len(self.response)

    @property
    def units(self) -> list[Unit]:
        return [Unit(RESPONSES[r], REPORTINGS[p]) for r, p in zip(self.response, self.reporting)]

    def reported_outcomes(self) -> tuple[np.ndarray, np.ndarray]:
        """Reported outcome of every unit under control and under treatment."""
        return self._reported

    def true_outcomes(self) -> tuple[np.ndarray, np.ndarray]:
        return self._true

    @functools.cached_property
    def _true(self):
        return Y0[self.response], Y1[self.response]

    @functools.cached_property
    def _reported(self):
        under = self.reporting == 1
        over = self.reporting == 2
        y0, y1 = self._true
        yr0 = np.where(under, 0, np.where(over, 1, y0))
        yr1 = np.where(under, 0, np.where(over, 1, y1))
        return yr0.astype(np.int8), yr1.astype(np.int8)

    def cell_counts(self) -> dict[str, int]:
        out = {}
        for name, (rep, res) in zip(CELL_NAMES, CELL_CODES):
            out[name] = int(np.sum((self.reporting == rep) & (self.response == res)))
        return out

    def table(self) -> JointClassTable:
        """The realised joint table (counts divided by N_sp)."""
        n = self.size
        return JointClassTable(**{k: v / n for k, v in self.cell_counts().items()})

    @property
    def tau_sp(self) -> float:
        y0, y1 = self.true_outcomes()
        return float(np.mean(y1.astype(float) - y0))


def apportion(table: JointClassTable, n_sp: int) -> dict[str, int]:
    """Largest-remainder counts for each cell; ties go to the earlier cell."""
    probs = table.as_array()
    quotas = probs * n_sp
    base = np.floor(quotas + 1e-9).astype(int)
    rem = quotas - base
    short = n_sp - int(base.sum())
    order = sorted(range(len(probs)), key=lambda k: (-rem[k], k))
    for k in order[:short]:
        base[k] += 1
    return dict(zip(CELL_NAMES, base.tolist()))


def build_superpopulation(table: JointClassTable, n_sp: int, seed=None) -> SuperPopulation:
    if n_sp < 2:
        raise ValueError("a super-population needs at least two units")
    report = validate_table(table)
    if not report:
        raise ValueError("; ".join(report.violations))
    counts = apportion(table, n_sp)
    response = np.empty(n_sp, dtype=np.int8)
    reporting = np.empty(n_sp, dtype=np.int8)
    pos = 0
    for name, (rep, res) in zip(CELL_NAMES, CELL_CODES):
        c = counts[name]
        reporting[pos : pos + c] = rep
        response[pos : pos + c] = res
        pos += c
    perm = np.random.default_rng(seed).permutation(n_sp)
    return SuperPopulation(response=response[perm], reporting=reporting[perm])


def population_from_counts(counts: dict[str, int]) -> SuperPopulation:
    """Unshuffled population with exactly the given number of units per cell."""
    response, reporting = [], []
    for name, (rep, res) in zip(CELL_NAMES, CELL_CODES):
        c = int(counts.get(name, 0))
        if c and name in ("UN", "OA"):
            raise ValueError(f"cell {name} is a structural zero")
        response += [res] * c
        reporting += [rep] * c
    return SuperPopulation(np.array(response, dtype=np.int8), np.array(reporting, dtype=np.int8))


@dataclass(frozen=True)
class TrialResult:
    tau_hat_reported: float
    tau_hat_true: float
    neyman_variance: float
    reject: bool
    degenerate: bool = False


def _difference_in_means(pop: SuperPopulation, treated: np.ndarray, control: np.ndarray, params: DesignParams):
    yr0, yr1 = pop.reported_outcomes()
    yt0, yt1 = pop.true_outcomes()
    n = len(treated)
    rt, rc = yr1[treated].astype(float), yr0[control].astype(float)
    tau_r = rt.mean() - rc.mean()
    tau_t = yt1[treated].mean() - yt0[control].mean()
    if n > 1:
        v = rt.var(ddof=1) / n + rc.var(ddof=1) / n
    else:
        v = 0.0
    if v <= 0:
        return TrialResult(float(tau_r), float(tau_t), float(v), False, True)
    reject = tau_r / math.sqrt(v) < normal_quantile(params.alpha)
    return TrialResult(float(tau_r), float(tau_t), float(v), bool(reject))


def run_trial(pop: SuperPopulation, n_per_arm: int, seed, params: DesignParams) -> TrialResult:
    """Sample 2n units, treat a random half, and test on the reported outcomes."""
    if n_per_arm < 1:
        raise ValueError("n_per_arm must be at least 1")
    if 2 * n_per_arm > pop.size:
        raise ValueError(f"2n = {2 * n_per_arm} exceeds the population size {pop.size}")
    rng = np.random.default_rng(seed)
    sample = rng.choice(pop.size, 2 * n_per_arm, replace=False)
    rng.shuffle(sample)
    return _difference_in_means(pop, sample[:n_per_arm], sample[n_per_arm:], params)


@dataclass(frozen=True)
class ReplicationSummary:
    reps: int
    tau_sp: float
    mean_tau_hat: float
    empirical_bias: float
    bias_se: float
    power: float
    power_se: float
    degenerate_trials: int

    @property
    def se_defined(self) -> bool:
        return self.reps > 1


def run_replications(
    table: JointClassTable,
    n_sp: int,
    n_per_arm: int,
    reps: int,
    seed,
    params: DesignParams,
) -> ReplicationSummary:
    """Monte Carlo bias and rejection rate on one fixed super-population.

    Replication ``i`` draws from the ``i``-th child of a seed sequence
    derived from ``seed`` (the population shuffle uses a sibling), so
    results do not depend on how replications are scheduled.  Standard
    errors are NaN when ``reps == 1``.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    root = np.random.SeedSequence(seed)
    pop_seed, rep_seed = root.spawn(2)
    pop = build_superpopulation(table, n_sp, pop_seed)
    trials = [run_trial(pop, n_per_arm, s, params) for s in rep_seed.spawn(reps)]
    tau = np.array([t.tau_hat_reported for t in trials])
    rej = np.array([t.reject for t in trials], dtype=float)
    tau_sp = pop.tau_sp
    if reps > 1:
        bias_se = float(tau.std(ddof=1) / math.sqrt(reps))
        p = rej.mean()
        power_se = float(math.sqrt(p * (1 - p) / reps))
    else:
        bias_se = power_se = float("nan")
    return ReplicationSummary(
        reps=reps,
        tau_sp=tau_sp,
        mean_tau_hat=float(tau.mean()),
        empirical_bias=float(tau.mean() - tau_sp),
        bias_se=bias_se,
        power=float(rej.mean()),
        power_se=power_se,
        degenerate_trials=sum(t.degenerate for t in trials),
    )


# --- exhaustive enumeration -------------------------------------------------


def exact_design_mean(
    pop: SuperPopulation,
    n_per_arm: int,
    statistic: Callable[[tuple[int, ...], tuple[int, ...]], Fraction],
) -> Fraction:
    """Average of ``statistic(treated, control)`` over every sample and assignment.

    Every subset of 2n units is equally likely, and within it every split
    into n treated and n control units.
    """
    if 2 * n_per_arm > pop.size:
        raise ValueError("2n exceeds the population size")
    total = Fraction(0)
    count = 0
    for sample in itertools.combinations(range(pop.size), 2 * n_per_arm):
        for treated in itertools.combinations(sample, n_per_arm):
            tset = set(treated)
            control = tuple(i for i in sample if i not in tset)
            total += statistic(treated, control)
            count += 1
    return total / count


def exact_mean_tau_hat(pop: SuperPopulation, n_per_arm: int) -> Fraction:
    yr0, yr1 = pop.reported_outcomes()
    yr0, yr1 = yr0.tolist(), yr1.tolist()

    def tau_hat(treated, control):
        return Fraction(sum(yr1[i] for i in treated) - sum(yr0[i] for i in control), n_per_arm)

    return exact_design_mean(pop, n_per_arm, tau_hat)


def exact_tau_sp(pop: SuperPopulation) -> Fraction:
    y0, y1 = pop.true_outcomes()
    return Fraction(int(y1.sum()) - int(y0.sum()), pop.size)


def pilot_counts_for(pop: SuperPopulation, treated, control) -> PilotCounts:
    """Gold-standard pilot counts observed on given treated and control units."""
    yr0, yr1 = pop.reported_outcomes()
    yt0, yt1 = pop.true_outcomes()

    def arm(idx, yt, yr):
        idx = list(idx)
        pairs = [f"{int(yt[i])}{int(yr[i])}" for i in idx]
        return tuple(pairs.count(key) for key in CELL_ORDER)

    return PilotCounts(arm(treated, yt1, yr1), arm(control, yt0, yr0))


def simulate_pilot(table: JointClassTable, n_per_arm: int, seed=None) -> PilotCounts:
    """Draw an independent gold-standard pilot with n units per arm."""
    if n_per_arm < 1:
        raise ValueError("n_per_arm must be at least 1")
    report = validate_table(table)
    if not report:
        raise ValueError("; ".join(report.violations))
    margins(table)
    probs = np.clip(table.as_array(), 0.0, None)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    rep = np.array([c[0] for c in CELL_CODES])
    res = np.array([c[1] for c in CELL_CODES])

    def arm(y_true_by_response):
        cells = rng.multinomial(n_per_arm, probs)
        yt = y_true_by_response[res]
        yr = np.where(rep == 1, 0, np.where(rep == 2, 1, yt))
        out = {key: 0 for key in CELL_ORDER}
        for c, a, b in zip(cells, yt, yr):
            out[f"{a}{b}"] += int(c)
        return tuple(out[key] for key in CELL_ORDER)

    treated = arm(Y1)
    control = arm(Y0)
    return PilotCounts(treated, control)
