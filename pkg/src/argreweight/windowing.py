"""Sliding-window decoding with commit and buffer regions.

Window ``k`` starts at round ``k * n_com`` and spans ``n_com + n_buf`` rounds
(clipped to the experiment). Only mechanisms of the first ``n_com`` rounds
are committed; the window whose commit region reaches the last round commits
everything it covers. The syndrome seen by each window is the residual left
after all earlier commits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import clone

from .error_model import DetectorErrorModel, ErrorMechanism
from .reweighting import Criterion, ReweightRule, Verdict, argument_reweighting
from .decoders.base import DecodingError

__all__ = ["WindowLayout", "Window", "window_slice", "SlidingWindowDecoder", "decode_sliding_window"]

_SCOPES = ("full_window", "commit_only")


@dataclass(frozen=True)
class WindowLayout:
    n_com: int
    n_buf: int
    total_rounds: int
    reweight_scope: str = "full_window"

    def __post_init__(self):
        if self.n_com < 1:
            raise ValueError("n_com must be >= 1")
        if self.n_buf < 0:
            raise ValueError("n_buf must be >= 0")
        if self.total_rounds < 1:
            raise ValueError("total_rounds must be >= 1")
        if self.reweight_scope not in _SCOPES:
            raise ValueError(f"reweight_scope must be one of {_SCOPES}, got {self.reweight_scope!r}")

    @classmethod
    def for_distance(cls, distance: int, total_rounds: int, reweight_scope: str = "full_window") -> "WindowLayout":
        """``d`` commit rounds followed by ``d`` buffer rounds."""
        return cls(distance, distance, total_rounds, reweight_scope)

    @property
    def num_windows(self) -> int:
        return math.ceil(self.total_rounds / self.n_com)

    def bounds(self, k: int) -> tuple[int, int, int]:
        """``(start, commit_end, end)`` rounds of window ``k``."""
        if not 0 <= k < self.num_windows:
            raise IndexError(f"window {k} out of range [0, {self.num_windows})")
        start = k * self.n_com
        end = min(start + self.n_com + self.n_buf, self.total_rounds)
        commit_end = end if k == self.num_windows - 1 else start + self.n_com
        return start, commit_end, end


@dataclass(frozen=True)
class Window:
    index: int
    model: DetectorErrorModel
    detector_map: np.ndarray  # window detector -> parent detector
    mechanism_map: np.ndarray  # window mechanism -> parent mechanism
    commit_mask: np.ndarray  # over window mechanisms
    start: int
    commit_end: int
    end: int


def window_slice(model: DetectorErrorModel, layout: WindowLayout, window_index: int) -> Window:
    """Sub-model of the mechanisms and detectors whose round falls in the window.

    Detectors outside the window are dropped from the mechanisms that touch
    them, so a buffer mechanism reaching into the future becomes a
    time-boundary mechanism of the window.
    """
    if model.num_mechanisms and model.num_rounds > layout.total_rounds:
        raise ValueError(
            f"model has mechanisms tagged up to round {model.num_rounds - 1}; "
            f"layout covers {layout.total_rounds} rounds"
        )
    start, commit_end, end = layout.bounds(window_index)
    det_rounds = model.detector_rounds
    dets = np.flatnonzero((det_rounds >= start) & (det_rounds < end))
    det_index = {int(d): i for i, d in enumerate(dets)}
    mechs = []
    mech_map = []
    commit = []
    for q, m in enumerate(model.mechanisms):
        if not start <= m.round < end:
            continue
        local = [det_index[d] for d in m.detectors if d in det_index]
        if not local and not m.observables:
            continue
        mechs.append(ErrorMechanism(m.probability, tuple(local), m.observables, m.round))
        mech_map.append(q)
        commit.append(m.round < commit_end)
    sub = DetectorErrorModel(tuple(mechs), len(dets), model.num_observables)
    return Window(
        window_index, sub, dets.astype(np.int64), np.array(mech_map, dtype=np.int64),
        np.array(commit, dtype=bool), start, commit_end, end,
    )


class SlidingWindowDecoder:
    """Prepared windows with one fitted decoder per window.

    ``decoder`` is an unfitted decoder estimator; it is cloned and fitted on
    each window's sub-model.
    """

    def __init__(self, model: DetectorErrorModel, layout: WindowLayout, decoder):
        self.model = model
        self.layout = layout
        self.windows = [window_slice(model, layout, k) for k in range(layout.num_windows)]
        self.decoders = [clone(decoder).fit(w.model) for w in self.windows]
        self._h = model.matrices[0].tocsr().astype(np.int64)

    def _commit(self, residual, committed, window, correction):
        part = np.zeros(self.model.num_mechanisms, dtype=np.uint8)
        part[window.mechanism_map[(correction & window.commit_mask).astype(bool)]] = 1
        committed ^= part
        residual ^= ((self._h @ part) & 1).astype(np.uint8)

    def decode(self, syndrome, priors=None) -> np.ndarray:
        """Windowed decoding without post-selection."""
        p = self.model.priors if priors is None else np.asarray(priors, dtype=np.float64)
        residual = np.array(syndrome, dtype=np.uint8)
        committed = np.zeros(self.model.num_mechanisms, dtype=np.uint8)
        for w, dec in zip(self.windows, self.decoders):
            c = dec.decode(p[w.mechanism_map], residual[w.detector_map])
            self._commit(residual, committed, w, c)
        if residual.any():
            raise DecodingError("nonzero residual syndrome after the last window")
        return committed

    def decide(self, syndrome, criterion, rule: ReweightRule, priors=None) -> Verdict:
        criterion = Criterion.parse(criterion)
        p = self.model.priors if priors is None else np.asarray(priors, dtype=np.float64)
        residual = np.array(syndrome, dtype=np.uint8)
        committed = np.zeros(self.model.num_mechanisms, dtype=np.uint8)
        rounds_used = 0
        clamps = 0
        firsts = []
        for w, dec in zip(self.windows, self.decoders):
            mask = w.commit_mask if self.layout.reweight_scope == "commit_only" else None
            v = argument_reweighting(
                dec, p[w.mechanism_map], residual[w.detector_map], dec.logical,
                criterion, rule, reweight_mask=mask,
            )
            rounds_used = max(rounds_used, v.rounds_used)
            clamps += v.clamp_events
            if not v.accepted:
                why = v.diagnostic or "rejected"
                return Verdict(False, None, rounds_used, firsts + v.round_corrections[:1], clamps,
                               f"window {w.index}: {why}")
            firsts.append(v.correction)
            self._commit(residual, committed, w, v.correction)
        if residual.any():
            return Verdict(False, None, rounds_used, firsts, clamps, "nonzero residual after last window")
        return Verdict(True, committed, rounds_used, firsts, clamps)


def decode_sliding_window(model, layout, decoder, criterion, rule, syndrome) -> Verdict:
    """One-shot convenience wrapper around :class:`SlidingWindowDecoder`."""
    return SlidingWindowDecoder(model, layout, decoder).decide(syndrome, criterion, rule)
