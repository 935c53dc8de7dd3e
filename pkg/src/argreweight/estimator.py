"""Scikit-learn style front end for post-selection decoding."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_is_fitted

from .decoders import BpOsdDecoder
from .decoders.base import DecodingError
from .error_model import DetectorErrorModel
from .reweighting import Criterion, ReweightRule, Verdict, argument_reweighting
from .validation import check_bit_matrix, check_bit_vector
from .windowing import SlidingWindowDecoder, WindowLayout

__all__ = ["ArgumentReweighting"]


class ArgumentReweighting(BaseEstimator):
    """Post-selecting decoder.

    Parameters
    ----------
    decoder : BaseDecoder, default BpOsdDecoder()
        Unfitted template; a clone is fitted on the model (or on each window).
    criterion : str
        ``"PEC"`` or ``"kR-LEC"``.
    rule : {"ratio", "gap"}
    b : float
        Suppression strength.
    window : WindowLayout or None
        Sliding-window layout; ``None`` decodes the whole model at once.
    """

    def __init__(self, decoder=None, criterion: str = "3R-LEC", rule: str = "ratio", b: float = 2.0, window=None):
        self.decoder = decoder
        self.criterion = criterion
        self.rule = rule
        self.b = b
        self.window = window

    def fit(self, model: DetectorErrorModel, y=None):
        if not isinstance(model, DetectorErrorModel):
            raise TypeError(f"expected a DetectorErrorModel, got {type(model).__name__}")
        self.criterion_ = Criterion.parse(self.criterion)
        self.rule_ = ReweightRule(self.rule, self.b)
        template = BpOsdDecoder() if self.decoder is None else self.decoder
        self.model_ = model
        if self.window is None:
            self.decoder_ = clone(template).fit(model)
            self.windowed_ = None
        else:
            if not isinstance(self.window, WindowLayout):
                raise TypeError("window must be a WindowLayout or None")
            self.decoder_ = None
            self.windowed_ = SlidingWindowDecoder(model, self.window, template)
        self._observables = model.dense_observable_matrix.astype(np.int64)
        return self

    def baseline(self, syndrome) -> np.ndarray:
        """Correction without post-selection."""
        check_is_fitted(self, "model_")
        if self.windowed_ is not None:
            return self.windowed_.decode(syndrome)
        return self.decoder_.decode(None, syndrome)

    def decide(self, syndrome, first_correction=None) -> Verdict:
        """Verdict for one syndrome.

        ``first_correction`` reuses a precomputed global first round; it is
        ignored for windowed decoding.
        """
        if not hasattr(self, "model_"):  # cheaper than check_is_fitted in the hot loop
            check_is_fitted(self, "model_")
        s = check_bit_vector(syndrome, self.model_.num_detectors, "syndrome")
        if self.windowed_ is not None:
            return self.windowed_.decide(s, self.criterion_, self.rule_)
        # reweighted priors stay inside (0, 1), so the unchecked path is safe
        return argument_reweighting(
            self.decoder_._decode, self.model_.priors, s, self.logical, self.criterion_, self.rule_,
            first_correction=first_correction,
        )

    def logical(self, correction: np.ndarray) -> np.ndarray:
        return (self._observables @ correction).astype(np.uint8) & 1

    def decide_batch(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Acceptance mask and predicted observable flips for each syndrome row.

        Predictions of rejected rows are zero.
        """
        check_is_fitted(self, "model_")
        X = check_bit_matrix(X, self.model_.num_detectors)
        accepted = np.zeros(X.shape[0], dtype=bool)
        pred = np.zeros((X.shape[0], self.model_.num_observables), dtype=np.uint8)
        for i, s in enumerate(X):
            v = self.decide(s)
            if v.accepted:
                accepted[i] = True
                pred[i] = self.logical(v.correction)
        return accepted, pred

    def predict(self, X) -> np.ndarray:
        return self.decide_batch(X)[1]
