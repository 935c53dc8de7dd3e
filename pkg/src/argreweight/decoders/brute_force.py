"""Exhaustive maximum-likelihood decoding for small models.

Only errors consistent with the syndrome are enumerated: one particular
solution plus every combination of a null-space basis of the check matrix.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .. import gf2
from ..error_model import DetectorErrorModel
from .base import BaseDecoder, BruteForceCapError, UnsolvableSyndromeError

__all__ = ["MAX_MECHANISMS", "MLResult", "consistent_errors", "decode_ml_bruteforce", "BruteForceMLDecoder"]

MAX_MECHANISMS = 24


class MLResult(NamedTuple):
    correction: np.ndarray
    class_likelihoods: dict[tuple[int, ...], float]
    spectrum: list[tuple[np.ndarray, float]]


def _check_cap(model: DetectorErrorModel) -> None:
    if model.num_mechanisms > MAX_MECHANISMS:
        raise BruteForceCapError(
            f"model has {model.num_mechanisms} mechanisms; exhaustive decoding is capped at {MAX_MECHANISMS}"
        )


def consistent_errors(model: DetectorErrorModel, syndrome, null_basis: np.ndarray | None = None) -> np.ndarray:
    """All error vectors with the given syndrome, one per row."""
    _check_cap(model)
    h = model.dense_check_matrix
    x0 = gf2.solve(h, np.asarray(syndrome, dtype=np.uint8))
    if x0 is None:
        raise UnsolvableSyndromeError("syndrome is not in the column space of the check matrix")
    basis = gf2.nullspace(h) if null_basis is None else null_basis
    errs = x0[None, :]
    for vec in basis:
        errs = np.concatenate([errs, errs ^ vec])
    return errs


def _lex_order(errs: np.ndarray, logp: np.ndarray) -> np.ndarray:
    # descending log-probability, then ascending bit vector (first mechanism most significant)
    keys = [errs[:, q] for q in range(errs.shape[1] - 1, -1, -1)]
    return np.lexsort(keys + [-logp]) if keys else np.argsort(-logp, kind="stable")


def decode_ml_bruteforce(model: DetectorErrorModel, syndrome, priors=None, null_basis=None) -> MLResult:
    """Most probable consistent error, per-class likelihood mass, and the full spectrum.

    Ties on probability (relative tolerance 1e-12 in log space) go to the
    lexicographically smallest error vector.
    """
    p = model.priors if priors is None else np.asarray(priors, dtype=np.float64)
    errs = consistent_errors(model, syndrome, null_basis)
    log_on = np.log(p)
    log_off = np.log1p(-p)
    logp = log_off.sum() + errs.astype(np.float64) @ (log_on - log_off)
    order = _lex_order(errs, logp)
    errs = errs[order]
    logp = logp[order]
    top = logp[0]
    tied = np.flatnonzero(logp >= top - 1e-12 * max(1.0, abs(top)))
    best = min(tied, key=lambda i: tuple(errs[i]))
    probs = np.exp(logp)
    classes = (errs.astype(np.int64) @ model.dense_observable_matrix.T.astype(np.int64)) & 1
    mass: dict[tuple[int, ...], float] = {}
    for cls, pr in zip(map(tuple, classes.tolist()), probs):
        mass[cls] = mass.get(cls, 0.0) + float(pr)
    spectrum = [(errs[i], float(probs[i])) for i in range(len(errs))]
    return MLResult(errs[best].copy(), mass, spectrum)


class BruteForceMLDecoder(BaseDecoder):
    """Exact ML decoder by enumeration; for models with at most 24 mechanisms."""

    def _fit(self, model):
        _check_cap(model)
        self.null_basis_ = gf2.nullspace(model.dense_check_matrix)

    def _decode(self, priors, syndrome):
        return decode_ml_bruteforce(self.model_, syndrome, priors, self.null_basis_).correction
