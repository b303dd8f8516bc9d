"""Detection probability and sample-size formulas for the one-sided test.

The test rejects when the studentised difference in reported means falls
below ``Phi^{-1}(alpha)``; a negative effect is the alternative.  Arms
are always of equal size ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special

from .estimands import reported_means
from .population import DeltaVector, Margins


class EffectSignIndeterminate(ValueError):
    """The expected reported effect is not negative, so no n reaches the target power."""

    def __init__(self, message: str, delta: DeltaVector | None = None, effect: float | None = None):
        super().__init__(message)
        self.delta = delta
        self.effect = effect


@dataclass(frozen=True)
class DesignParams:
    alpha: float = 0.05
    beta: float = 0.2
    direction: str = "less"

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.direction != "less":
            raise ValueError("only the one-sided 'less' alternative is supported")

    @property
    def z_total(self) -> float:
        """Phi^{-1}(1 - beta) + Phi^{-1}(1 - alpha)."""
        return normal_quantile(1 - self.beta) + normal_quantile(1 - self.alpha)


def normal_cdf(x: float) -> float:
    return float(special.ndtr(x))


def normal_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile needs p in (0, 1), got {p}")
    return float(special.ndtri(p))


def standardized_effect(mu1: float, mu0: float) -> float:
    """Per-unit standardised effect (mu1 - mu0) / sqrt(var1 + var0)."""
    var = mu1 * (1 - mu1) + mu0 * (1 - mu0)
    if var <= 0:
        raise ValueError("reported outcomes are constant in both arms; variance is zero")
    return (mu1 - mu0) / math.sqrt(var)


def detection_probability_from_means(mu1: float, mu0: float, n_per_arm: int, params: DesignParams) -> float:
    if n_per_arm < 1:
        raise ValueError("n_per_arm must be at least 1")
    t = math.sqrt(n_per_arm) * standardized_effect(mu1, mu0)
    return normal_cdf(normal_quantile(params.alpha) - t)


def detection_probability(m: Margins, delta: DeltaVector, n_per_arm: int, params: DesignParams) -> float:
    """Large-sample probability that the one-sided test rejects."""
    mu1, mu0 = reported_means(m, delta)
    return detection_probability_from_means(mu1, mu0, n_per_arm, params)


def sample_size_from_lambda(lam: float, params: DesignParams) -> int:
    """Smallest per-arm n with n * lam >= z^2, lam the squared standardised effect."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return math.ceil(params.z_total**2 / lam)


def sample_size_from_means(mu1: float, mu0: float, params: DesignParams) -> int:
    if mu1 - mu0 >= 0:
        raise EffectSignIndeterminate(f"expected reported effect {mu1 - mu0:.6g} is not negative", effect=mu1 - mu0)
    return sample_size_from_lambda(standardized_effect(mu1, mu0) ** 2, params)


def sample_size_fixed_delta(m: Margins, delta: DeltaVector, params: DesignParams) -> int:
    """Per-arm sample size for a known ratio vector."""
    mu1, mu0 = reported_means(m, delta)
    if mu1 - mu0 >= 0:
        raise EffectSignIndeterminate(
            f"expected reported effect {mu1 - mu0:.6g} is not negative", delta=delta, effect=mu1 - mu0
        )
    return sample_size_from_means(mu1, mu0, params)


def standard_sample_size(p_t: float, p_c: float, params: DesignParams) -> int:
    """Total n for the textbook comparison of two proportions (equal arms)."""
    for p in (p_t, p_c):
        if not 0.0 < p < 1.0:
            raise ValueError(f"proportions must lie in (0, 1), got {p}")
    if p_t == p_c:
        raise ValueError("p_t and p_c must differ")
    sigma = math.sqrt(p_t * (1 - p_t) + p_c * (1 - p_c))
    per_arm = (params.z_total * sigma / abs(p_t - p_c)) ** 2
    return 2 * math.ceil(per_arm)
