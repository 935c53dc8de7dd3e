"""Exact minimum-weight perfect matching on a detector graph.

The graph has one node per detector plus a single boundary node. Pairings of
the fired detectors are optimised exactly by dynamic programming over subsets,
which is exponential in the number of fired detectors; syndromes above
``max_defects`` raise :class:`SyndromeTooDenseError`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np
from scipy.sparse.csgraph import csgraph_from_dense, shortest_path

from ..error_model import DetectorErrorModel
from .base import BaseDecoder, NotMatchableError, SyndromeTooDenseError, UnsolvableSyndromeError

__all__ = ["edge_weight", "MatchingGraph", "build_matching_graph", "decode_mwpm", "MwpmDecoder"]


def edge_weight(p) -> np.ndarray | float:
    """``ln(1/p - 1)``: the additive weight of a mechanism with probability ``p``."""
    arr = np.asarray(p, dtype=np.float64)
    if not ((arr > 0.0) & (arr < 0.5)).all():
        raise ValueError("matching weights need probabilities in (0, 0.5)")
    w = np.log1p(-arr) - np.log(arr)
    return float(w) if np.ndim(p) == 0 else w


@dataclass(frozen=True)
class MatchingGraph:
    num_detectors: int
    edge_endpoints: np.ndarray  # (num_mechanisms, 2); boundary node is num_detectors
    weights: np.ndarray  # per mechanism
    edge_mechanism: np.ndarray  # (n+1, n+1), lightest mechanism per node pair, -1 if none
    distances: np.ndarray  # all-pairs shortest path lengths
    predecessors: np.ndarray

    @property
    def boundary(self) -> int:
        return self.num_detectors

    def path_mechanisms(self, a: int, b: int) -> list[int]:
        """Mechanisms along the stored shortest path from ``a`` to ``b``."""
        out = []
        node = b
        while node != a:
            prev = self.predecessors[a, node]
            if prev < 0:
                raise UnsolvableSyndromeError(f"no path between nodes {a} and {b}")
            out.append(int(self.edge_mechanism[prev, node]))
            node = prev
        return out


def _endpoints(model: DetectorErrorModel) -> np.ndarray:
    ends = np.empty((model.num_mechanisms, 2), dtype=np.int64)
    for q, m in enumerate(model.mechanisms):
        if len(m.detectors) == 1:
            ends[q] = (m.detectors[0], model.num_detectors)
        elif len(m.detectors) == 2:
            ends[q] = m.detectors
        else:
            raise NotMatchableError(
                f"mechanism {q} flips {len(m.detectors)} detectors; matching needs 1 or 2"
            )
    return ends


def _graph_from_weights(num_detectors: int, ends: np.ndarray, weights: np.ndarray) -> MatchingGraph:
    n = num_detectors + 1
    dense = np.full((n, n), np.inf)
    best = np.full((n, n), -1, dtype=np.int64)
    for q in range(len(weights)):
        a, b = ends[q]
        if weights[q] < dense[a, b]:
            dense[a, b] = dense[b, a] = weights[q]
            best[a, b] = best[b, a] = q
    graph = csgraph_from_dense(dense, null_value=np.inf)
    dist, pred = shortest_path(graph, method="D", directed=False, return_predecessors=True)
    return MatchingGraph(num_detectors, ends, np.asarray(weights, dtype=np.float64), best, dist, pred)


def build_matching_graph(model: DetectorErrorModel, priors=None) -> MatchingGraph:
    """Decoding graph with weights ``ln(1/p - 1)`` and all-pairs shortest paths."""
    p = model.priors if priors is None else np.asarray(priors, dtype=np.float64)
    return _graph_from_weights(model.num_detectors, _endpoints(model), edge_weight(p))


@nb.njit(cache=True)
def _match_subsets(dist, bdist):
    t = bdist.shape[0]
    size = 1 << t
    dp = np.full(size, np.inf)
    choice = np.full(size, -2, dtype=np.int64)
    dp[0] = 0.0
    for mask in range(1, size):
        i = 0
        while not (mask >> i) & 1:
            i += 1
        rest = mask ^ (1 << i)
        best = bdist[i] + dp[rest]
        ch = -1
        for j in range(i + 1, t):
            if (rest >> j) & 1:
                c = dist[i, j] + dp[rest ^ (1 << j)]
                if c < best:
                    best = c
                    ch = j
        dp[mask] = best
        choice[mask] = ch
    return dp[size - 1], choice


def decode_mwpm(graph: MatchingGraph, syndrome, max_defects: int = 16) -> np.ndarray:
    """Minimum-weight correction for ``syndrome`` on ``graph``.

    Fired detectors are paired with each other or with the boundary so that
    the summed shortest-path length is minimal; the correction is the XOR of
    the mechanisms on the chosen paths.
    """
    s = np.asarray(syndrome, dtype=np.uint8)
    correction = np.zeros(len(graph.weights), dtype=np.uint8)
    defects = np.flatnonzero(s)
    if defects.size == 0:
        return correction
    if defects.size > max_defects:
        raise SyndromeTooDenseError(f"{defects.size} fired detectors exceeds the cap of {max_defects}")
    sub = graph.distances[np.ix_(defects, defects)]
    bdist = graph.distances[defects, graph.boundary]
    total, choice = _match_subsets(np.ascontiguousarray(sub), np.ascontiguousarray(bdist))
    if not np.isfinite(total):
        raise UnsolvableSyndromeError("fired detectors cannot be paired")
    mask = (1 << defects.size) - 1
    while mask:
        i = (mask & -mask).bit_length() - 1
        j = int(choice[mask])
        a = int(defects[i])
        if j < 0:
            path = graph.path_mechanisms(a, graph.boundary)
            mask ^= 1 << i
        else:
            path = graph.path_mechanisms(a, int(defects[j]))
            mask ^= (1 << i) | (1 << j)
        for q in path:
            correction[q] ^= 1
    return correction


class MwpmDecoder(BaseDecoder):
    """Exact matching decoder; requires every mechanism to flip 1 or 2 detectors."""

    prior_upper_bound = 0.5

    def __init__(self, max_defects: int = 16):
        self.max_defects = max_defects

    def _fit(self, model):
        self.endpoints_ = _endpoints(model)
        self.graph_ = build_matching_graph(model)
        self._base_priors = model.priors

    def _decode(self, priors, syndrome):
        if priors is self._base_priors or np.array_equal(priors, self._base_priors):
            graph = self.graph_
        else:
            graph = _graph_from_weights(self.n_detectors_, self.endpoints_, edge_weight(priors))
        return decode_mwpm(graph, syndrome, self.max_defects)
