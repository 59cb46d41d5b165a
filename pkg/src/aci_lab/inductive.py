"""Inductive (split) predictors: fit once, predict from fixed scores.

The inductive conformal route splits the training data into a proper
training part (fits the scorer) and a calibration part (supplies the
reference nonconformity scores); a candidate's p-value is its rank among
the calibration scores,

    p(y) = ( #{ j : alpha_j >= alpha(x, y) } + 1 ) / (n_cal + 1).

The non-conformal route skips calibration entirely and thresholds the
scorer's own outputs.  Both honour the extended boundary contract and
produce sets nested in eps.
"""

import math

import numpy as np

from .core import CLASSIFICATION, PredictionSet, boundary_set
from .numerics import ceil_index, empirical_quantile, isotonic_monotonize


class KnnClassScorer:
    """k-NN class-probability scorer: vote shares over the fitted set.

    ``class_scores`` accepts one feature vector or a matrix of them and
    returns vote shares per label in label-space order.  Deterministic
    given the fitted data; ties broken by training index (earlier wins).
    """

    def __init__(self, k: int):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = int(k)
        self._X = None
        self._y = None
        self.label_space: list[int] = []

    def fit(self, X, y, label_space=None) -> "KnnClassScorer":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("training set must be a non-empty 2-D array")
        if y.shape != (X.shape[0],):
            raise ValueError("labels do not match training rows")
        if self.k > X.shape[0]:
            raise ValueError(f"k={self.k} exceeds training size {X.shape[0]}")
        self._X = X
        self._y = y.astype(int)
        if label_space is None:
            self.label_space = sorted(int(c) for c in np.unique(self._y))
        else:
            self.label_space = [int(c) for c in label_space]
        return self

    def class_scores(self, x) -> np.ndarray:
        if self._X is None:
            raise ValueError("scorer is not fitted")
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        d2 = (np.sum(x * x, axis=1)[:, None] + np.sum(self._X * self._X, axis=1)[None, :]
              - 2.0 * x @ self._X.T)
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :self.k]
        votes = self._y[nearest]
        shares = np.stack([(votes == lab).sum(axis=1) / self.k
                           for lab in self.label_space], axis=1)
        return shares[0] if single else shares


class KnnQuantileScorer:
    """k-NN regression scorer: point estimate and label quantiles from the
    k nearest training labels.  Its quantile function is a step function
    of the sorted neighbour labels, hence monotone in q by construction.
    """

    monotone_quantiles = True

    def __init__(self, k: int):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = int(k)
        self._X = None
        self._y = None

    def fit(self, X, y) -> "KnnQuantileScorer":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("training set must be a non-empty 2-D array")
        if y.shape != (X.shape[0],):
            raise ValueError("labels do not match training rows")
        if self.k > X.shape[0]:
            raise ValueError(f"k={self.k} exceeds training size {X.shape[0]}")
        self._X = X
        self._y = y
        return self

    def _neighbour_labels(self, x) -> np.ndarray:
        if self._X is None:
            raise ValueError("scorer is not fitted")
        x = np.asarray(x, dtype=float)
        d = np.sqrt(np.sum((self._X - x) ** 2, axis=1))
        nearest = np.argsort(d, kind="stable")[:self.k]
        return self._y[nearest]

    def point(self, x) -> float:
        return float(np.mean(self._neighbour_labels(x)))

    def quantile(self, x, q: float) -> float:
        return empirical_quantile(self._neighbour_labels(x), q)


def calibration_scores(scorer, X_cal, y_cal) -> np.ndarray:
    """Nonconformity of the calibration examples: 1 - score of the true
    label under the fitted scorer."""
    X_cal = np.asarray(X_cal, dtype=float)
    y_cal = np.asarray(y_cal).astype(int)
    if X_cal.ndim != 2 or X_cal.shape[0] == 0:
        raise ValueError("calibration set must be a non-empty 2-D array")
    shares = np.atleast_2d(scorer.class_scores(X_cal))
    col = {lab: j for j, lab in enumerate(scorer.label_space)}
    idx = np.array([col[int(c)] for c in y_cal])
    return 1.0 - shares[np.arange(len(y_cal)), idx]


def calibration_residuals(scorer, X_cal, y_cal) -> np.ndarray:
    """Absolute point-prediction residuals on the calibration examples."""
    X_cal = np.asarray(X_cal, dtype=float)
    y_cal = np.asarray(y_cal, dtype=float)
    if X_cal.ndim != 2 or X_cal.shape[0] == 0:
        raise ValueError("calibration set must be a non-empty 2-D array")
    return np.array([abs(y - scorer.point(x)) for x, y in zip(X_cal, y_cal)])


def icp_classify_predict(scorer, cal_scores, x, eps: float) -> PredictionSet:
    """Split-conformal classification: keep labels whose calibration rank
    p-value exceeds eps."""
    forced = boundary_set(eps, CLASSIFICATION)
    if forced is not None:
        return forced
    cal_sorted = _checked_sorted(cal_scores)
    scores = np.asarray(scorer.class_scores(x), dtype=float)
    return _icp_set_from_scores(scores, scorer.label_space, cal_sorted, eps)


def _icp_set_from_scores(scores, label_space, cal_sorted, eps) -> PredictionSet:
    n_cal = cal_sorted.shape[0]
    alphas = 1.0 - scores
    n_ge = n_cal - np.searchsorted(cal_sorted, alphas, side="left")
    p = (n_ge + 1.0) / (n_cal + 1.0)
    return PredictionSet.label_set(
        lab for lab, pv in zip(label_space, p) if pv > eps)


def icp_regress_predict(point_pred: float, cal_residuals, eps: float) -> PredictionSet:
    """Split-conformal regression: symmetric interval at the calibration
    residual order statistic ceil((1 - eps)(n_cal + 1)); past the largest
    residual the interval is unbounded."""
    forced = boundary_set(eps, "regression")
    if forced is not None:
        return forced
    cal_sorted = _checked_sorted(cal_residuals)
    n_cal = cal_sorted.shape[0]
    idx = ceil_index((1.0 - eps) * (n_cal + 1))
    if idx > n_cal:
        return PredictionSet.full_interval()
    q = float(cal_sorted[max(idx, 1) - 1])
    return PredictionSet.interval(point_pred - q, point_pred + q)


def inccp_classify_predict(scorer, x, eps: float) -> PredictionSet:
    """Non-conformal inductive classification: labels scoring above eps."""
    forced = boundary_set(eps, CLASSIFICATION)
    if forced is not None:
        return forced
    scores = np.asarray(scorer.class_scores(x), dtype=float)
    return PredictionSet.label_set(
        lab for lab, s in zip(scorer.label_space, scores) if s > eps)


def inccp_regress_predict(scorer, x, eps: float) -> PredictionSet:
    """Non-conformal inductive regression: central interval between the
    scorer's eps/2 and 1 - eps/2 conditional quantiles."""
    forced = boundary_set(eps, "regression")
    if forced is not None:
        return forced
    lo, hi = monotone_quantile_pair(scorer, x, eps)
    return PredictionSet.interval(lo, hi)


def monotone_quantile_pair(scorer, x, eps: float) -> tuple[float, float]:
    """Endpoints (quantile(eps/2), quantile(1 - eps/2)), repaired to be
    monotone when the scorer does not promise monotone quantiles.

    A scorer with crossing quantile curves would break nestedness of the
    resulting intervals, so unless it declares ``monotone_quantiles``,
    its quantile function is evaluated on a fixed grid and projected onto
    the nearest non-decreasing function (least squares) first.
    """
    if getattr(scorer, "monotone_quantiles", False):
        return scorer.quantile(x, 0.5 * eps), scorer.quantile(x, 1.0 - 0.5 * eps)
    grid = _QUANTILE_GRID
    vals = np.array([scorer.quantile(x, q) for q in grid])
    fixed = isotonic_monotonize(grid, vals)
    lo = float(np.interp(0.5 * eps, grid, fixed))
    hi = float(np.interp(1.0 - 0.5 * eps, grid, fixed))
    return lo, hi


_QUANTILE_GRID = np.linspace(0.005, 0.995, 199)


def _checked_sorted(values) -> np.ndarray:
    arr = np.sort(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise ValueError("calibration scores must be a non-empty 1-D array")
    if np.any(np.isnan(arr)):
        raise ValueError("calibration scores contain NaN")
    return arr
