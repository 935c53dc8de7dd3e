"""Decoder contract shared by every maximum-likelihood-type decoder."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..error_model import DetectorErrorModel
from ..validation import check_bit_matrix, check_bit_vector, check_priors

__all__ = [
    "DecodingError",
    "UnsolvableSyndromeError",
    "SyndromeTooDenseError",
    "NotMatchableError",
    "BruteForceCapError",
    "BaseDecoder",
    "log_probability",
]


class DecodingError(RuntimeError):
    """A decoder could not produce a correction for this syndrome."""


class UnsolvableSyndromeError(DecodingError):
    pass


class SyndromeTooDenseError(DecodingError):
    pass


class NotMatchableError(ValueError):
    """The model has a mechanism that is not a graph edge."""


class BruteForceCapError(ValueError):
    pass


def log_probability(priors: np.ndarray, error: np.ndarray) -> float:
    """``ln Pr(e)`` for independent mechanisms with the given priors."""
    e = np.asarray(error, dtype=bool)
    return float(np.log(priors[e]).sum() + np.log1p(-priors[~e]).sum())


class BaseDecoder(BaseEstimator):
    """Fit on a :class:`DetectorErrorModel`, then ``decode(priors, syndrome)``.

    ``decode`` returns a uint8 correction over the model's mechanisms that
    reproduces the syndrome. ``priors=None`` means the model's own priors.
    """

    deterministic = True
    prior_upper_bound = 1.0

    def fit(self, model: DetectorErrorModel, y=None):
        if not isinstance(model, DetectorErrorModel):
            raise TypeError(f"expected a DetectorErrorModel, got {type(model).__name__}")
        self.model_ = model
        self.n_detectors_ = model.num_detectors
        self.n_mechanisms_ = model.num_mechanisms
        self.observable_matrix_ = model.dense_observable_matrix
        self._fit(model)
        return self

    def _fit(self, model: DetectorErrorModel) -> None:
        pass

    def _decode(self, priors: np.ndarray, syndrome: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def decode(self, priors, syndrome) -> np.ndarray:
        check_is_fitted(self, "model_")
        if priors is None:
            p = self.model_.priors
        else:
            p = check_priors(priors, self.n_mechanisms_, self.prior_upper_bound)
        s = check_bit_vector(syndrome, self.n_detectors_, "syndrome")
        return self._decode(p, s)

    def logical(self, correction: np.ndarray) -> np.ndarray:
        """Observable flips caused by a correction."""
        return (self.observable_matrix_.astype(np.int64) @ correction) & 1

    def predict(self, X) -> np.ndarray:
        """Predicted observable flips for each syndrome row of ``X``."""
        check_is_fitted(self, "model_")
        X = check_bit_matrix(X, self.n_detectors_)
        out = np.zeros((X.shape[0], self.model_.num_observables), dtype=np.uint8)
        for i, s in enumerate(X):
            out[i] = self.logical(self._decode(self.model_.priors, s))
        return out
