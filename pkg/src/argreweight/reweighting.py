"""Argument reweighting: re-decode under a model that suppresses the last correction.

A shot is accepted only if the decoder's answer survives the suppression.
With ``PEC`` the second correction must equal the first; with ``kR-LEC`` the
corrections of ``k`` successive rounds, each decoded under priors suppressed
by every earlier correction, must all flip the same observables.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .decoders.base import DecodingError

__all__ = [
    "PROBABILITY_FLOOR",
    "ReweightRule",
    "Criterion",
    "Verdict",
    "reweight",
    "reweight_ratio",
    "reweight_gap",
    "post_select",
    "argument_reweighting",
]

PROBABILITY_FLOOR = 1e-300
_LOG_FLOOR = math.log(PROBABILITY_FLOOR)


@dataclass(frozen=True)
class ReweightRule:
    """Suppression rule and strength.

    ``ratio`` raises each prior in the correction to the power ``b`` (b >= 1,
    where b == 1 is the identity). ``gap`` scales the correction's total
    probability by ``exp(-b)`` (b > 0).
    """

    variant: str = "ratio"
    b: float = 2.0

    def __post_init__(self):
        variant = self.variant.lower()
        if variant not in ("ratio", "gap"):
            raise ValueError(f"rule must be 'ratio' or 'gap', got {self.variant!r}")
        b = float(self.b)
        if variant == "ratio" and not b >= 1.0:
            raise ValueError(f"ratio rule needs b >= 1, got {b}")
        if variant == "gap" and not b > 0.0:
            raise ValueError(f"gap rule needs b > 0, got {b}")
        object.__setattr__(self, "variant", variant)
        object.__setattr__(self, "b", b)


_LEC_RE = re.compile(r"^(\d+)R-LEC$", re.IGNORECASE)


@dataclass(frozen=True)
class Criterion:
    """``PEC`` or ``kR-LEC`` with ``rounds = k >= 2``."""

    kind: str = "LEC"
    rounds: int = 3

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in ("PEC", "LEC"):
            raise ValueError(f"criterion kind must be PEC or LEC, got {self.kind!r}")
        if kind == "PEC" and self.rounds != 2:
            raise ValueError("PEC always uses two decoding rounds")
        if self.rounds < 2:
            raise ValueError(f"LEC needs at least 2 rounds, got {self.rounds}")
        object.__setattr__(self, "kind", kind)

    @classmethod
    def parse(cls, text: "str | Criterion") -> "Criterion":
        if isinstance(text, Criterion):
            return text
        t = text.strip()
        if t.upper() == "PEC":
            return cls("PEC", 2)
        m = _LEC_RE.match(t)
        if not m:
            raise ValueError(f"unknown criterion {text!r}; expected PEC or kR-LEC")
        return cls("LEC", int(m.group(1)))

    def __str__(self) -> str:
        return "PEC" if self.kind == "PEC" else f"{self.rounds}R-LEC"


@dataclass
class Verdict:
    accepted: bool
    correction: np.ndarray | None
    rounds_used: int
    round_corrections: list[np.ndarray] = field(default_factory=list)
    clamp_events: int = 0
    diagnostic: str | None = None


def reweight(priors, correction, rule: ReweightRule, mask=None) -> tuple[np.ndarray, int]:
    """Reweighted priors and the number of entries clamped to the floor.

    Only mechanisms in ``correction`` (and in ``mask``, when given) change.
    """
    p = np.asarray(priors, dtype=np.float64)
    sel = np.asarray(correction).astype(bool)
    if mask is not None:
        sel &= np.asarray(mask, dtype=bool)
    idx = np.flatnonzero(sel)
    out = p.copy()
    if not idx.size:
        return out, 0
    ps = p[idx]
    logp = np.log(ps)
    if rule.variant == "ratio":
        new_log = rule.b * logp
        new = ps**rule.b
    else:
        shift = logp * (-rule.b / logp.sum())
        new_log = logp + shift
        new = ps * np.exp(shift)
    clamped = new_log < _LOG_FLOOR
    n = int(np.count_nonzero(clamped))
    if n:
        new[clamped] = PROBABILITY_FLOOR
    out[idx] = new
    return out, n


def reweight_ratio(priors, correction, b: float) -> np.ndarray:
    """``p'(q) = p(q)**b`` for mechanisms in the correction."""
    return reweight(priors, correction, ReweightRule("ratio", b))[0]


def reweight_gap(priors, correction, b: float) -> np.ndarray:
    """``p'(q) = p(q) exp(-b ln p(q) / ln p(c))`` for mechanisms in the correction.

    The product of the suppressed priors over the correction drops by
    exactly ``exp(-b)``.
    """
    if not np.asarray(correction, dtype=bool).any():
        raise ValueError("gap reweighting needs a non-empty correction")
    return reweight(priors, correction, ReweightRule("gap", b))[0]


def _decode_fn(decoder) -> Callable:
    return decoder.decode if hasattr(decoder, "decode") else decoder


def _logical_fn(logical_map) -> Callable[[np.ndarray], np.ndarray]:
    if callable(logical_map):
        return logical_map
    mat = logical_map.toarray() if sp.issparse(logical_map) else np.asarray(logical_map)
    mat = mat.astype(np.int64)
    return lambda c: ((mat @ c) & 1).astype(np.uint8)


def _post_select(decode, priors, syndrome, logical, criterion, rule, c, mask):
    corrections = []
    clamps = 0
    p = priors
    prev = c
    target = logical(c)
    pec = criterion.kind == "PEC"
    for _ in range(criterion.rounds - 1):
        p, n = reweight(p, prev, rule, mask)
        clamps += n
        nxt = np.asarray(decode(p, syndrome), dtype=np.uint8)
        corrections.append(nxt)
        if pec:
            return bool((nxt == c).all()), corrections, clamps
        if not (logical(nxt) == target).all():
            return False, corrections, clamps
        prev = nxt
    return True, corrections, clamps


def post_select(decoder, priors, syndrome, logical_map, criterion, rule, c, *, reweight_mask=None) -> bool:
    """Accept/reject flag for a non-empty first-round correction ``c``.

    Round ``i`` decodes under the round ``i - 1`` priors reweighted by the
    round ``i - 1`` correction. Decoder failures count as rejection.
    """
    criterion = Criterion.parse(criterion)
    try:
        flag, _, _ = _post_select(
            _decode_fn(decoder), np.asarray(priors, dtype=np.float64), syndrome,
            _logical_fn(logical_map), criterion, rule, np.asarray(c, dtype=np.uint8), reweight_mask,
        )
    except DecodingError:
        return False
    return flag


def argument_reweighting(
    decoder,
    priors,
    syndrome,
    logical_map,
    criterion,
    rule: ReweightRule,
    *,
    reweight_mask=None,
    first_correction=None,
) -> Verdict:
    """Decode, then accept or reject by re-decoding under suppressed priors.

    An empty first-round correction is accepted without further rounds.
    ``first_correction`` lets a caller reuse an already computed first round.
    """
    criterion = Criterion.parse(criterion)
    decode = _decode_fn(decoder)
    p = np.asarray(priors, dtype=np.float64)
    try:
        c = decode(p, syndrome) if first_correction is None else first_correction
    except DecodingError as exc:
        return Verdict(False, None, 1, [], 0, f"round 1: {exc}")
    c = np.asarray(c, dtype=np.uint8)
    if not c.any():
        return Verdict(True, c, 1, [c])
    try:
        flag, later, clamps = _post_select(
            decode, p, syndrome, _logical_fn(logical_map), criterion, rule, c, reweight_mask
        )
    except DecodingError as exc:
        return Verdict(False, None, criterion.rounds, [c], 0, f"reweighted round: {exc}")
    rounds = [c] + later
    return Verdict(flag, c if flag else None, len(rounds), rounds, clamps)
