"""Dense GF(2) linear algebra on uint8 arrays."""

from __future__ import annotations

import numpy as np

__all__ = ["row_reduce", "rank", "nullspace", "solve"]


def row_reduce(a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and the pivot columns."""
    m = np.array(a, dtype=np.uint8) & 1
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.flatnonzero(m[r:, c])
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            m[[r, p]] = m[[p, r]]
        others = np.flatnonzero(m[:, c])
        others = others[others != r]
        m[others] ^= m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(a: np.ndarray) -> int:
    return len(row_reduce(a)[1])


def nullspace(a: np.ndarray) -> np.ndarray:
    """Basis of ``{x : a x = 0}`` as rows of a uint8 array."""
    a = np.asarray(a, dtype=np.uint8)
    cols = a.shape[1]
    rref, pivots = row_reduce(a)
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((len(free), cols), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for r, p in enumerate(pivots):
            basis[k, p] = rref[r, f]
    return basis


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """One solution of ``a x = b`` with free variables zero, or None."""
    a = np.asarray(a, dtype=np.uint8)
    aug = np.concatenate([a, np.asarray(b, dtype=np.uint8).reshape(-1, 1)], axis=1)
    rref, pivots = row_reduce(aug)
    if a.shape[1] in pivots:
        return None
    x = np.zeros(a.shape[1], dtype=np.uint8)
    for r, p in enumerate(pivots):
        x[p] = rref[r, -1]
    return x
