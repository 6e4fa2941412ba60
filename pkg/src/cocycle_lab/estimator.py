"""scikit-learn compatible wrappers.

`LyapunovEstimator` treats each row of ``X`` as one symbol stream and fits
the finite-time top exponent along it, so it can sit in a Pipeline or be
driven by ``clone``/``get_params`` like any other estimator.
`RegionLabeler` turns ``(sigma, eta, alpha, p)`` rows into label indicators.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .cocycle import LocallyConstantCocycle
from .lyapunov import trial_exponent
from .regions import PRIORITY, ParameterPoint, classify
from .shift import sample_symbols, stream_rng


def check_symbols(X, min_length: int = 1) -> np.ndarray:
    """Validate a 2-D array of 0/1 symbols and return it as uint8."""
    X = check_array(X, dtype=None, ensure_2d=True, ensure_min_features=min_length)
    if not np.isin(X, (0, 1)).all():
        raise ValueError("symbol streams may only contain 0 and 1")
    return X.astype(np.uint8)


def make_symbol_streams(p: float, n_streams: int, length: int, seed: int = 0) -> np.ndarray:
    """Row ``t`` is drawn from ``stream_rng(seed, t)``, as in `mc_exponent`."""
    return np.stack([sample_symbols(stream_rng(seed, t), length, p) for t in range(n_streams)])


class LyapunovEstimator(TransformerMixin, BaseEstimator):
    """Top Lyapunov exponent of a locally constant cocycle from symbol streams.

    Parameters
    ----------
    cocycle : LocallyConstantCocycle
        The cocycle to iterate. Column ``j`` of ``X`` is the coordinate
        ``cocycle.window_lo + j`` of the starting point.
    renorm_every : int, default=1
        Renormalisation cadence of the running product.

    Attributes
    ----------
    trial_exponents_ : ndarray of shape (n_streams,)
    lambda_plus_ : float
    stderr_ : float
    n_steps_ : int
    """

    def __init__(self, cocycle: LocallyConstantCocycle | None = None, renorm_every: int = 1):
        self.cocycle = cocycle
        self.renorm_every = renorm_every

    def _steps(self, X: np.ndarray) -> int:
        if self.cocycle is None:
            raise ValueError("LyapunovEstimator needs a cocycle")
        steps = X.shape[1] - self.cocycle.width + 1
        if steps < 1:
            raise ValueError(f"streams of length {X.shape[1]} are shorter than the cocycle window")
        return steps

    def _exponents(self, X: np.ndarray, steps: int) -> np.ndarray:
        return np.array([trial_exponent(self.cocycle, row, steps, self.renorm_every) for row in X])

    def fit(self, X, y=None):
        X = check_symbols(X)
        if X.shape[0] < 2:
            raise ValueError("need at least two streams for a standard error")
        steps = self._steps(X)
        self.trial_exponents_ = self._exponents(X, steps)
        self.lambda_plus_ = float(self.trial_exponents_.mean())
        self.stderr_ = float(self.trial_exponents_.std(ddof=1) / math.sqrt(X.shape[0]))
        self.n_steps_ = steps
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "lambda_plus_")
        X = check_symbols(X)
        return self._exponents(X, self._steps(X))[:, None]


class RegionLabeler(TransformerMixin, BaseEstimator):
    """Stateless transformer: rows ``(sigma, eta, alpha, p)`` to label indicators.

    Column order follows ``labels_``; ``predict`` returns the strongest label
    per row.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[1] != 4:
            raise ValueError("expected columns (sigma, eta, alpha, p)")
        self.labels_ = list(PRIORITY)
        self.n_features_in_ = 4
        return self

    def _reports(self, X):
        check_is_fitted(self, "labels_")
        X = check_array(X, dtype=float)
        return [classify(ParameterPoint(*row)) for row in X]

    def transform(self, X):
        reports = self._reports(X)
        return np.array([[label in r.labels for label in self.labels_] for r in reports],
                        dtype=np.int8)

    def predict(self, X):
        return np.array([r.strongest.value for r in self._reports(X)], dtype=object)
