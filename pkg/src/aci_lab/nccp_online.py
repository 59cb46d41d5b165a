"""Non-conformal set predictors trained on the full history.

These are the cheap comparison family: the same underlying point
predictors as their conformal counterparts, but the set is carved out by
a direct plug-in rule rather than a bag p-value.  They still honour the
extended boundary contract and are nested in eps; their validity under
adaptive level control comes from the controller, not from
exchangeability.

Classification: include every label whose k-NN vote share exceeds eps.
Regression: classical least-squares interval, point estimate plus a
Student-t multiple of the predictive standard error.
"""

import math

import numpy as np

from .core import (CLASSIFICATION, REGRESSION, ExampleBuffer, PredictionSet,
                   SetPredictor)
from .numerics import NumericError, RidgeSystem, student_t_quantile


def knn_vote_shares(hist_X, hist_y, x, k: int, label_space) -> np.ndarray:
    """Fraction of the k nearest history examples carrying each label.

    Euclidean distances; ties broken by example index (earlier wins).
    A history shorter than k votes with everything it has.
    """
    hist_X = np.asarray(hist_X, dtype=float)
    hist_y = np.asarray(hist_y)
    n = hist_X.shape[0]
    if n == 0:
        raise ValueError("history is empty")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    x = np.asarray(x, dtype=float)
    d = np.sqrt(np.sum((hist_X - x) ** 2, axis=1))
    kk = min(k, n)
    nearest = np.argsort(d, kind="stable")[:kk]
    votes = hist_y[nearest]
    return np.array([np.count_nonzero(votes == lab) / kk for lab in label_space])


def knn_threshold_predict(hist_X, hist_y, x, eps: float, k: int, label_space) -> PredictionSet:
    """Keep the labels whose vote share strictly exceeds eps.

    Vote shares over one x sum to 1, so the set never holds more than
    floor(1/eps) labels; it may well be empty at large eps.
    """
    if eps <= 0.0:
        return PredictionSet.all_labels()
    if eps >= 1.0:
        return PredictionSet.empty()
    shares = knn_vote_shares(hist_X, hist_y, x, k, label_space)
    labels = [int(c) for c in label_space]
    return PredictionSet.label_set(c for c, s in zip(labels, shares) if s > eps)


def ols_interval_predict(hist_X, hist_y, x, eps: float, a: float = 0.0) -> PredictionSet:
    """Classical regression interval from the history fit.

        yhat +/- t_{1 - eps/2, m - p} * sigma * sqrt(1 + leverage)

    with sigma^2 = rss / (m - p) and leverage = x'(X'X + aI)^{-1}x.  When
    the residual degrees of freedom m - p drop below 1 or the system is
    singular, the interval degenerates to the whole line rather than
    failing: early online steps simply carry no information.
    """
    hist_X = np.asarray(hist_X, dtype=float)
    hist_y = np.asarray(hist_y, dtype=float)
    m, p = hist_X.shape if hist_X.ndim == 2 else (0, 0)
    if m == 0:
        raise ValueError("history is empty")
    if hist_y.shape != (m,):
        raise ValueError("history labels do not match history rows")
    if eps <= 0.0:
        return PredictionSet.full_interval()
    if eps >= 1.0:
        return PredictionSet.empty()
    dof = m - p
    if dof < 1:
        return PredictionSet.full_interval()
    try:
        system = RidgeSystem(hist_X, a)
        w = system.solve(hist_X.T @ hist_y)
    except NumericError:
        return PredictionSet.full_interval()
    x = np.asarray(x, dtype=float)
    yhat = float(x @ w)
    residuals = hist_y - hist_X @ w
    rss = float(residuals @ residuals)
    sigma = math.sqrt(max(rss, 0.0) / dof)
    leverage = float(x @ system.solve(x))
    t = student_t_quantile(1.0 - 0.5 * eps, dof)
    half = t * sigma * math.sqrt(max(1.0 + leverage, 0.0))
    return PredictionSet.interval(yhat - half, yhat + half)


class KnnThresholdClassifier(SetPredictor):
    """Online vote-share thresholding over the full history."""

    task = CLASSIFICATION

    def __init__(self, k: int, label_space):
        super().__init__()
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = int(k)
        self.label_space = [int(c) for c in label_space]
        if not self.label_space:
            raise ValueError("label space is empty")
        self._hist = ExampleBuffer(label_dtype=int)

    @property
    def history_size(self) -> int:
        return len(self._hist)

    def _predict(self, x, eps):
        return knn_threshold_predict(self._hist.X, self._hist.y,
                                     x, eps, self.k, self.label_space)

    def _observe(self, x, y):
        y = int(y)
        if y not in self.label_space:
            raise ValueError(f"label {y} outside the declared label space")
        self._hist.append(x, y)


class OlsIntervalPredictor(SetPredictor):
    """Online classical regression intervals (refit each step)."""

    task = REGRESSION

    def __init__(self, a: float = 0.0):
        super().__init__()
        if a < 0.0:
            raise ValueError(f"ridge coefficient must be >= 0, got {a}")
        self.a = float(a)
        self._hist = ExampleBuffer()

    @property
    def history_size(self) -> int:
        return len(self._hist)

    def _predict(self, x, eps):
        return ols_interval_predict(self._hist.X, self._hist.y, x, eps, self.a)

    def _observe(self, x, y):
        self._hist.append(x, float(y))
