"""Min-sum belief propagation with an order-0 OSD fallback."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numba as nb
import numpy as np
import scipy.sparse as sp

from ..error_model import DetectorErrorModel
from .base import BaseDecoder, UnsolvableSyndromeError

__all__ = [
    "BpConfig",
    "BpResult",
    "TannerGraph",
    "tanner_graph",
    "decode_bp",
    "decode_osd0",
    "decode_bp_osd",
    "BpOsdDecoder",
]


@dataclass(frozen=True)
class BpConfig:
    max_iterations: int = 200
    scaling_factor: float = 1.0
    schedule: str = "parallel"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0.0 < self.scaling_factor <= 1.0:
            raise ValueError("scaling_factor must lie in (0, 1]")
        if self.schedule not in ("parallel", "serial"):
            raise ValueError(f"schedule must be 'parallel' or 'serial', got {self.schedule!r}")


class BpResult(NamedTuple):
    soft: np.ndarray  # posterior log-likelihood ratios ln(P(0)/P(1))
    hard: np.ndarray
    converged: bool
    iterations: int


class TannerGraph(NamedTuple):
    check_ptr: np.ndarray
    edge_var: np.ndarray  # edges listed check by check
    var_ptr: np.ndarray
    var_edges: np.ndarray  # edge ids listed variable by variable
    dense: np.ndarray


def tanner_graph(h) -> TannerGraph:
    """Edge arrays for the Tanner graph of a check matrix or model."""
    if isinstance(h, DetectorErrorModel):
        h = h.matrices[0]
    csr = sp.csr_matrix(h, dtype=np.uint8)
    csr.sort_indices()
    check_ptr = csr.indptr.astype(np.int64)
    edge_var = csr.indices.astype(np.int64)
    order = np.argsort(edge_var, kind="stable")
    counts = np.bincount(edge_var, minlength=csr.shape[1])
    var_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    dense = np.ascontiguousarray(csr.toarray().astype(np.uint8))
    return TannerGraph(check_ptr, edge_var, var_ptr, order.astype(np.int64), dense)


@nb.njit(cache=True)
def _satisfies(check_ptr, edge_var, hard, syndrome):
    for c in range(check_ptr.shape[0] - 1):
        parity = syndrome[c]
        for e in range(check_ptr[c], check_ptr[c + 1]):
            parity ^= hard[edge_var[e]]
        if parity:
            return False
    return True


@nb.njit(cache=True)
def _check_update(check_ptr, edge_var, v2c, c2v, syndrome, alpha, c):
    # min-sum: sign product and the two smallest magnitudes, excluding self
    lo = check_ptr[c]
    hi = check_ptr[c + 1]
    sign = -1.0 if syndrome[c] else 1.0
    min1 = np.inf
    min2 = np.inf
    arg = -1
    for e in range(lo, hi):
        m = v2c[e]
        if m < 0.0:
            sign = -sign
            m = -m
        if m < min1:
            min2 = min1
            min1 = m
            arg = e
        elif m < min2:
            min2 = m
    for e in range(lo, hi):
        mag = min2 if e == arg else min1
        s = sign
        if v2c[e] < 0.0:
            s = -s
        c2v[e] = alpha * s * mag


_CYCLE = 4  # longest exact message cycle detected before max_iterations


@nb.njit(cache=True)
def _min_sum(check_ptr, edge_var, var_ptr, var_edges, syndrome, llr, max_iter, alpha, serial):
    # Messages are a deterministic function of the previous iteration, so once
    # the state repeats exactly the remaining iterations are known and skipped.
    n_checks = check_ptr.shape[0] - 1
    n_vars = llr.shape[0]
    n_edges = edge_var.shape[0]
    v2c = np.empty(n_edges)
    c2v = np.zeros(n_edges)
    post = llr.copy()
    hard = np.zeros(n_vars, dtype=np.uint8)
    hist_c2v = np.empty((_CYCLE, n_edges))
    hist_post = np.empty((_CYCLE, n_vars))
    for e in range(n_edges):
        v2c[e] = llr[edge_var[e]]
    for it in range(1, max_iter + 1):
        if serial:
            for c in range(n_checks):
                for e in range(check_ptr[c], check_ptr[c + 1]):
                    v2c[e] = post[edge_var[e]] - c2v[e]
                _check_update(check_ptr, edge_var, v2c, c2v, syndrome, alpha, c)
                for e in range(check_ptr[c], check_ptr[c + 1]):
                    post[edge_var[e]] = v2c[e] + c2v[e]
        else:
            for c in range(n_checks):
                _check_update(check_ptr, edge_var, v2c, c2v, syndrome, alpha, c)
            for v in range(n_vars):
                total = llr[v]
                for k in range(var_ptr[v], var_ptr[v + 1]):
                    total += c2v[var_edges[k]]
                post[v] = total
            for e in range(n_edges):
                v2c[e] = post[edge_var[e]] - c2v[e]
        for v in range(n_vars):
            hard[v] = 1 if post[v] < 0.0 else 0
        if _satisfies(check_ptr, edge_var, hard, syndrome):
            return post, hard, True, it
        for k in range(1, min(_CYCLE, it - 1) + 1):
            slot = (it - k) % _CYCLE
            same = True
            for e in range(n_edges):
                if c2v[e] != hist_c2v[slot, e]:
                    same = False
                    break
            if same:
                for v in range(n_vars):
                    if post[v] != hist_post[slot, v]:
                        same = False
                        break
            if same:
                # period k: the state at max_iter equals the one at it - k + r
                r = (max_iter - it) % k
                if r:
                    src = (it - k + r) % _CYCLE
                    for v in range(n_vars):
                        post[v] = hist_post[src, v]
                        hard[v] = 1 if post[v] < 0.0 else 0
                return post, hard, False, max_iter
        slot = it % _CYCLE
        for e in range(n_edges):
            hist_c2v[slot, e] = c2v[e]
        for v in range(n_vars):
            hist_post[slot, v] = post[v]
    return post, hard, False, max_iter


@nb.njit(cache=True)
def _osd0(dense, soft, syndrome):
    m, n = dense.shape
    order = np.argsort(soft, kind="mergesort")
    a = np.empty((m, n), dtype=np.uint8)
    for j in range(n):
        col = order[j]
        for r in range(m):
            a[r, j] = dense[r, col]
    aug = syndrome.copy()
    pivot_col = np.empty(m, dtype=np.int64)
    row = 0
    for j in range(n):
        if row == m:
            break
        r = row
        while r < m and a[r, j] == 0:
            r += 1
        if r == m:
            continue
        if r != row:
            for k in range(j, n):
                t = a[r, k]
                a[r, k] = a[row, k]
                a[row, k] = t
            t = aug[r]
            aug[r] = aug[row]
            aug[row] = t
        for r2 in range(m):
            if r2 != row and a[r2, j]:
                for k in range(j, n):
                    a[r2, k] ^= a[row, k]
                aug[r2] ^= aug[row]
        pivot_col[row] = j
        row += 1
    x = np.zeros(n, dtype=np.uint8)
    for r in range(row, m):
        if aug[r]:
            return x, False
    for r in range(row):
        x[order[pivot_col[r]]] = aug[r]
    return x, True


def _llr(priors: np.ndarray) -> np.ndarray:
    return np.log1p(-priors) - np.log(priors)


def _as_graph(h) -> TannerGraph:
    return h if isinstance(h, TannerGraph) else tanner_graph(h)


def decode_bp(h, priors, syndrome, config: BpConfig = BpConfig()) -> BpResult:
    """Min-sum BP until the hard decision reproduces the syndrome.

    Non-convergence within ``config.max_iterations`` is reported through
    ``converged`` rather than raised.
    """
    g = _as_graph(h)
    p = np.asarray(priors, dtype=np.float64)
    s = np.ascontiguousarray(syndrome, dtype=np.uint8)
    soft, hard, ok, it = _min_sum(
        g.check_ptr, g.edge_var, g.var_ptr, g.var_edges, s, _llr(p),
        config.max_iterations, float(config.scaling_factor), config.schedule == "serial",
    )
    return BpResult(soft, hard, bool(ok), int(it))


def decode_osd0(soft, syndrome, h) -> np.ndarray:
    """Order-0 ordered-statistics decoding.

    Columns are ranked from most to least likely in error (ascending soft
    LLR, ties by index), the first independent columns form the information
    set, and every other mechanism is set to zero.
    """
    g = _as_graph(h)
    x, ok = _osd0(g.dense, np.asarray(soft, dtype=np.float64), np.ascontiguousarray(syndrome, dtype=np.uint8))
    if not ok:
        raise UnsolvableSyndromeError("syndrome is not in the column space of the check matrix")
    return x


def decode_bp_osd(h, priors, syndrome, config: BpConfig = BpConfig()) -> np.ndarray:
    g = _as_graph(h)
    res = decode_bp(g, priors, syndrome, config)
    if res.converged:
        return res.hard
    return decode_osd0(res.soft, syndrome, g)


class BpOsdDecoder(BaseDecoder):
    """BP (min-sum) with OSD-0 post-processing when BP fails to converge."""

    def __init__(self, max_iterations: int = 200, scaling_factor: float = 1.0, schedule: str = "parallel"):
        self.max_iterations = max_iterations
        self.scaling_factor = scaling_factor
        self.schedule = schedule

    def _fit(self, model):
        self.config_ = BpConfig(self.max_iterations, self.scaling_factor, self.schedule)
        self.graph_ = tanner_graph(model)

    def _decode(self, priors, syndrome):
        g, cfg = self.graph_, self.config_
        soft, hard, ok, _ = _min_sum(
            g.check_ptr, g.edge_var, g.var_ptr, g.var_edges, syndrome, _llr(priors),
            cfg.max_iterations, float(cfg.scaling_factor), cfg.schedule == "serial",
        )
        return hard if ok else decode_osd0(soft, syndrome, g)
