"""Rate estimates, baseline strategies, target tests and conditional-error bounds."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.stats import binomtest

from . import gf2
from .decoders.brute_force import _check_cap, decode_ml_bruteforce
from .decoders.matching import edge_weight
from .error_model import DetectorErrorModel

__all__ = [
    "RateEstimate",
    "estimate_rates",
    "wilson_interval",
    "TargetOutcome",
    "target_achieved",
    "strategy_detector_density",
    "strategy_correction_weight",
    "BoundReport",
    "check_conditional_bounds",
    "reachable_syndromes",
    "total_logical_error_probability",
    "suppression_factor",
]


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials == 0:
        return math.nan, math.nan
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class RateEstimate:
    shots: int
    accepted: int
    logical_errors: int

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("need at least one shot")
        if not 0 <= self.accepted <= self.shots:
            raise ValueError("accepted must lie in [0, shots]")
        if not 0 <= self.logical_errors <= self.accepted:
            raise ValueError("logical_errors must lie in [0, accepted]")

    @property
    def rejected(self) -> int:
        return self.shots - self.accepted

    @property
    def empty(self) -> bool:
        """True when every shot was rejected, so p_L is undefined (reported as 0)."""
        return self.accepted == 0

    @property
    def p_L(self) -> float:
        return self.logical_errors / self.accepted if self.accepted else 0.0

    @property
    def sigma_L(self) -> float:
        if not self.accepted:
            return 0.0
        p = self.p_L
        return math.sqrt(p * (1.0 - p) / self.accepted)

    @property
    def rejection_rate(self) -> float:
        return self.rejected / self.shots

    @property
    def sigma_rejection(self) -> float:
        r = self.rejection_rate
        return math.sqrt(r * (1.0 - r) / self.shots)

    def p_L_interval(self, confidence: float = 0.95) -> tuple[float, float]:
        return wilson_interval(self.logical_errors, self.accepted, confidence)

    def rejection_interval(self, confidence: float = 0.95) -> tuple[float, float]:
        return wilson_interval(self.rejected, self.shots, confidence)

    def __add__(self, other: "RateEstimate") -> "RateEstimate":
        return RateEstimate(
            self.shots + other.shots,
            self.accepted + other.accepted,
            self.logical_errors + other.logical_errors,
        )

    def as_dict(self) -> dict:
        lo, hi = self.p_L_interval()
        rlo, rhi = self.rejection_interval()
        return {
            "shots": self.shots,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "logical_errors": self.logical_errors,
            "p_L": self.p_L,
            "sigma_L": self.sigma_L,
            "p_L_wilson95": [lo, hi],
            "rejection_rate": self.rejection_rate,
            "sigma_rejection": self.sigma_rejection,
            "rejection_wilson95": [rlo, rhi],
            "no_accepted_shots": self.empty,
        }


def estimate_rates(outcomes: Iterable[tuple[bool, bool]]) -> RateEstimate:
    """Counts from a stream of ``(accepted, logical_error)`` pairs.

    A logical error on a rejected shot is not counted.
    """
    shots = accepted = errors = 0
    for acc, err in outcomes:
        shots += 1
        if acc:
            accepted += 1
            errors += bool(err)
    return RateEstimate(shots, accepted, errors)


class TargetOutcome(str, enum.Enum):
    ACHIEVED = "achieved"
    SURPASSED = "surpassed"
    MISSED = "missed"


def target_achieved(p_L: float, sigma_L: float, p_L_new: float, sigma_L_new: float, eta: float) -> TargetOutcome:
    """Compare a post-selected rate against the target ``eta * p_L``, within one combined sigma."""
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    if sigma_L < 0 or sigma_L_new < 0:
        raise ValueError("standard deviations must be non-negative")
    radius = math.hypot(eta * sigma_L, sigma_L_new)
    gap = eta * p_L - p_L_new
    if abs(gap) <= radius:
        return TargetOutcome.ACHIEVED
    if gap > radius:
        return TargetOutcome.SURPASSED
    return TargetOutcome.MISSED


def strategy_detector_density(syndrome, threshold: int) -> bool:
    """Accept iff at most ``threshold`` detectors fired."""
    return int(np.count_nonzero(syndrome)) <= threshold


def strategy_correction_weight(correction, priors, threshold: float) -> bool:
    """Accept iff the correction's summed ``ln(1/p - 1)`` weight is at most ``threshold``."""
    sel = np.asarray(correction, dtype=bool)
    if not sel.any():
        return 0.0 <= threshold
    return float(np.sum(edge_weight(np.asarray(priors, dtype=np.float64)[sel]))) <= threshold


@dataclass(frozen=True)
class BoundReport:
    syndrome: tuple[int, ...]
    pr_s: float
    p_L_cond: float
    bound1: float
    delta: float
    m: int
    bound2: float

    @property
    def bound1_holds(self) -> bool:
        return self.p_L_cond <= self.bound1 <= 1.0

    @property
    def bound2_holds(self) -> bool:
        return self.m < 2 or self.p_L_cond < self.bound2

    @property
    def holds(self) -> bool:
        return self.bound1_holds and self.bound2_holds

    def as_dict(self) -> dict:
        return {
            "syndrome": list(self.syndrome),
            "pr_s": self.pr_s,
            "p_L_cond": self.p_L_cond,
            "bound1": self.bound1,
            "delta": self.delta if math.isfinite(self.delta) else None,
            "m": self.m,
            "bound2": self.bound2,
            "bound1_holds": self.bound1_holds,
            "bound2_holds": self.bound2_holds,
        }


def check_conditional_bounds(model: DetectorErrorModel, syndrome) -> BoundReport:
    """Exact conditional logical error rate of ML decoding and its two upper bounds.

    Masses are summed over the errors other than the correction (rather than
    as ``1 - ratio``) so that tiny rates keep full relative precision.
    """
    res = decode_ml_bruteforce(model, syndrome)
    c = res.correction
    obs = model.dense_observable_matrix.astype(np.int64)
    target = tuple(((obs @ c) & 1).tolist())
    pr_c = None
    not_c: list[float] = []
    other_class: list[float] = []
    next_p = 0.0
    for err, pr in res.spectrum:
        if pr_c is None and np.array_equal(err, c):
            pr_c = pr
            continue
        not_c.append(pr)
        next_p = max(next_p, pr)
        if tuple(((obs @ err) & 1).tolist()) != target:
            other_class.append(pr)
    pr_s = math.fsum([pr_c] + not_c)
    m = len(res.spectrum)
    if m >= 2:
        delta = math.log(pr_c) - math.log(next_p)
        bound2 = (m - 1) * math.exp(-delta)
    else:
        delta, bound2 = math.inf, 0.0
    return BoundReport(
        syndrome=tuple(int(x) for x in np.asarray(syndrome).tolist()),
        pr_s=pr_s,
        p_L_cond=math.fsum(other_class) / pr_s,
        bound1=math.fsum(not_c) / pr_s,
        delta=delta,
        m=m,
        bound2=bound2,
    )


def reachable_syndromes(model: DetectorErrorModel) -> list[np.ndarray]:
    """Every syndrome in the column space of the check matrix."""
    _check_cap(model)
    h = model.dense_check_matrix
    _, pivots = gf2.row_reduce(h)
    cols = [h[:, j] for j in pivots]
    out = []
    for bits in itertools.product((0, 1), repeat=len(cols)):
        s = np.zeros(model.num_detectors, dtype=np.uint8)
        for b, col in zip(bits, cols):
            if b:
                s ^= col
        out.append(s)
    out.sort(key=lambda s: tuple(s.tolist()))
    return out


def total_logical_error_probability(model: DetectorErrorModel) -> float:
    """Sum over syndromes of Pr(s) times the conditional ML logical error rate."""
    reports = [check_conditional_bounds(model, s) for s in reachable_syndromes(model)]
    return math.fsum(r.pr_s * r.p_L_cond for r in reports)


def suppression_factor(baseline: RateEstimate, selected: RateEstimate) -> tuple[float, float]:
    """``selected.p_L / baseline.p_L`` and its propagated standard deviation.

    Returns ``(nan, nan)`` when the baseline saw no logical errors.
    """
    if baseline.logical_errors == 0:
        return math.nan, math.nan
    f = selected.p_L / baseline.p_L
    rel_b = baseline.sigma_L / baseline.p_L
    if selected.p_L > 0:
        sigma = f * math.hypot(selected.sigma_L / selected.p_L, rel_b)
    else:
        sigma = selected.sigma_L / baseline.p_L
    return f, sigma
