"""Full (transductive) conformal prediction over a growing history.

For each candidate completion (x, y) of the history, every bag member is
scored for strangeness by a nonconformity measure, and the candidate's
p-value is the fraction of members at least as strange as it is
(the candidate counts itself, so p >= 1/n always).  The prediction set
keeps the candidates with p-value above eps.

Classification uses a k-nearest-neighbour strangeness ratio; regression
uses (ridge) residuals, for which the candidate sweep collapses to a
closed form because the residual vector is linear in the hypothesised
label: resid(y) = A + y * B.
"""

import math

import numpy as np

from .core import (CLASSIFICATION, REGRESSION, ExampleBuffer, PredictionSet,
                   SetPredictor)
from .numerics import RidgeSystem, ceil_index, floor_index


def p_value(scores, candidate_score: float) -> float:
    """Fraction of bag scores >= the candidate's own score.

    ``scores`` are the nonconformity scores of the full bag *including*
    the candidate, so the result is at least 1/len(scores).
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or scores.shape[0] == 0:
        raise ValueError("scores must be a non-empty 1-D array")
    if np.any(np.isnan(scores)):
        raise ValueError("scores contain NaN")
    return float(np.count_nonzero(scores >= candidate_score)) / scores.shape[0]


def knn_nonconformity(bag_X, bag_y, x, y, k: int) -> float:
    """Strangeness of (x, y) against a bag of labelled examples.

    Ratio of the mean distance to the k nearest same-label bag members
    over the mean distance to the k nearest different-label ones
    (Euclidean).  Fewer than k on either side: average what is there.
    No same-label members at all makes the example maximally strange
    (+inf); no different-label members makes it maximally conforming (0).
    """
    bag_X = np.asarray(bag_X, dtype=float)
    bag_y = np.asarray(bag_y)
    if bag_X.ndim != 2 or bag_X.shape[0] == 0:
        raise ValueError("bag must be a non-empty 2-D array")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    x = np.asarray(x, dtype=float)
    d = np.sqrt(np.sum((bag_X - x) ** 2, axis=1))
    same = np.sort(d[bag_y == y])[:k]
    diff = np.sort(d[bag_y != y])[:k]
    if same.size == 0:
        return math.inf
    if diff.size == 0:
        return 0.0
    same_mean = float(np.mean(same))
    diff_mean = float(np.mean(diff))
    if same_mean == 0.0:
        return 0.0
    if diff_mean == 0.0:
        return math.inf
    return same_mean / diff_mean


def knn_cp_predict(hist_X, hist_y, x, eps: float, k: int, label_space) -> PredictionSet:
    """Full conformal k-NN classifier: keep labels whose completion has
    p-value above eps.

    Runs one candidate completion per label.  Distances are computed once
    (all pairs within the history, plus the candidate row) and shared
    across candidates, so a call costs O(n^2) distance evaluations
    however many labels there are.
    """
    hist_X = np.asarray(hist_X, dtype=float)
    hist_y = np.asarray(hist_y)
    n_hist = hist_X.shape[0]
    if n_hist == 0:
        raise ValueError("history is empty")
    forced = _boundary(eps, CLASSIFICATION)
    if forced is not None:
        return forced

    x = np.asarray(x, dtype=float)
    hh = _pairwise(hist_X)
    hx = np.sqrt(np.sum((hist_X - x) ** 2, axis=1))
    # Per history point, the k nearest same-label / different-label
    # distances within the history; the candidate only ever adds one
    # distance to one of the two sides, merged virtually per label.
    same_rows, diff_rows = _neighbor_rows(hh, hist_y, k)
    same_stats = _row_stats(same_rows)
    diff_stats = _row_stats(diff_rows)

    kept = []
    for lab in label_space:
        is_same = hist_y == lab
        s_mean = _merged_mean(*same_stats, hx, is_same, k)
        f_mean = _merged_mean(*diff_stats, hx, ~is_same, k)
        alphas = _ratio(s_mean, f_mean)
        alpha_n = _score_from_distances(hx, is_same, k)
        if p_value(np.append(alphas, alpha_n), alpha_n) > eps:
            kept.append(lab)
    return PredictionSet.label_set(kept)


def _score_from_distances(d, same_mask, k: int) -> float:
    same = np.sort(d[same_mask])[:k]
    diff = np.sort(d[~same_mask])[:k]
    if same.size == 0:
        return math.inf
    if diff.size == 0:
        return 0.0
    same_mean = float(np.mean(same))
    diff_mean = float(np.mean(diff))
    if same_mean == 0.0:
        return 0.0
    if diff_mean == 0.0:
        return math.inf
    return same_mean / diff_mean


def _pairwise(X: np.ndarray) -> np.ndarray:
    sq = np.sum(X * X, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    return np.sqrt(d2)


def _k_smallest_rows(values: np.ndarray, k: int) -> np.ndarray:
    """Ascending k smallest per row, +inf padded to width k."""
    if k < values.shape[1]:
        values = np.partition(values, k, axis=1)[:, :k]
    values = np.sort(values, axis=1)
    if values.shape[1] < k:
        pad = np.full((values.shape[0], k - values.shape[1]), np.inf)
        values = np.concatenate([values, pad], axis=1)
    return values


def _neighbor_rows(hh: np.ndarray, y: np.ndarray, k: int):
    """Per row of a pairwise distance matrix, the k smallest distances to
    same-label and to different-label points (self excluded)."""
    same = y[None, :] == y[:, None]
    np.fill_diagonal(same, False)
    diff = y[None, :] != y[:, None]
    return (_k_smallest_rows(np.where(same, hh, np.inf), k),
            _k_smallest_rows(np.where(diff, hh, np.inf), k))


def _boundary(eps: float, task: str):
    if eps <= 0.0:
        return PredictionSet.all_labels() if task == CLASSIFICATION else PredictionSet.full_interval()
    if eps >= 1.0:
        return PredictionSet.empty()
    return None


def crr_predict(hist_X, hist_y, x, eps: float, a: float = 0.0) -> PredictionSet:
    """Conformalised ridge regression: the full-CP interval in one sweep.

    With the candidate row appended, residuals are linear in the
    hypothesised label y: resid(y) = A + y*B where A = C (y_1..y_{n-1}, 0)'
    and B = C (0..0 1)' for C = I - X(X'X + aI)^{-1}X'.  Each history
    example i contributes a critical value u_i = l_i = (a_i - a_n)/(b_n - b_i)
    when b_n > b_i (otherwise it can never be less strange than the
    candidate on one side, contributing -inf/+inf); the interval endpoints
    are order statistics of those critical values:

        [ l_(floor(eps/2 * n)),  u_(ceil((1 - eps/2) * n)) ]

    1-based, with out-of-range indices meaning an unbounded side.
    """
    hist_X = np.asarray(hist_X, dtype=float)
    hist_y = np.asarray(hist_y, dtype=float)
    n_hist = hist_X.shape[0]
    if n_hist == 0:
        raise ValueError("history is empty")
    if hist_y.shape != (n_hist,):
        raise ValueError("history labels do not match history rows")
    forced = _boundary(eps, REGRESSION)
    if forced is not None:
        return forced

    x = np.asarray(x, dtype=float)
    X = np.vstack([hist_X, x[None, :]])
    n = n_hist + 1
    system = RidgeSystem(X, a)

    v = np.concatenate([hist_y, [0.0]])
    A = v - X @ system.solve(X.T @ v)
    e_n = np.zeros(n)
    e_n[-1] = 1.0
    B = e_n - X @ system.solve(X[-1])

    a_i, b_i = A[:-1], B[:-1]
    a_n, b_n = A[-1], B[-1]

    good = b_n > b_i
    crit = np.empty(n_hist)
    crit[good] = (a_i[good] - a_n) / (b_n - b_i[good])
    lower_list = np.sort(np.where(good, crit, -math.inf))
    upper_list = np.sort(np.where(good, crit, math.inf))

    jl = floor_index(0.5 * eps * n)
    ju = ceil_index((1.0 - 0.5 * eps) * n)
    lower = lower_list[jl - 1] if jl >= 1 else -math.inf
    upper = upper_list[ju - 1] if ju <= n_hist else math.inf
    return PredictionSet.interval(lower, upper)


class KnnConformalClassifier(SetPredictor):
    """Online full-CP k-NN classifier.

    Every prediction rescores the whole augmented bag through
    :func:`knn_cp_predict`, paying its O(n^2) distance bill per step.
    :class:`CachedKnnConformalClassifier` gives identical outputs from
    incremental caches when that bill matters.
    """

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
        if len(self._hist) == 0:
            raise ValueError("history is empty")
        return knn_cp_predict(self._hist.X, self._hist.y, x, eps,
                              self.k, self.label_space)

    def _observe(self, x, y):
        y = int(y)
        if y not in self.label_space:
            raise ValueError(f"label {y} outside the declared label space")
        self._hist.append(x, y)


class CachedKnnConformalClassifier(KnnConformalClassifier):
    """Full-CP k-NN classifier with incremental neighbour caches.

    Per history point the k smallest same-label and different-label
    distances (within the history) are cached as examples arrive, so
    scoring a candidate completion only has to merge the candidate's
    distance into each row: O(n*k) per step instead of O(n^2).
    Predictions agree exactly with :class:`KnnConformalClassifier`.
    """

    def __init__(self, k: int, label_space):
        super().__init__(k, label_space)
        # (n, k) ascending, padded with +inf where fewer than k exist;
        # row count tracks the history, capacity doubles on demand.
        self._same = np.empty((8, self.k))
        self._diff = np.empty((8, self.k))

    def _predict(self, x, eps):
        n_hist = len(self._hist)
        if n_hist == 0:
            raise ValueError("history is empty")
        X = self._hist.X
        labels = self._hist.y
        d = np.sqrt(np.sum((X - x) ** 2, axis=1))

        same_stats = _row_stats(self._same[:n_hist])
        diff_stats = _row_stats(self._diff[:n_hist])

        kept = []
        for lab in self.label_space:
            is_same = labels == lab
            s_mean = _merged_mean(*same_stats, d, is_same, self.k)
            f_mean = _merged_mean(*diff_stats, d, ~is_same, self.k)
            alphas = _ratio(s_mean, f_mean)
            alpha_n = _score_from_distances(d, is_same, self.k)
            n_ge = int(np.count_nonzero(alphas >= alpha_n)) + 1
            if n_ge / (n_hist + 1) > eps:
                kept.append(lab)
        return PredictionSet.label_set(kept)

    def _observe(self, x, y):
        y = int(y)
        if y not in self.label_space:
            raise ValueError(f"label {y} outside the declared label space")
        n_hist = len(self._hist)
        if n_hist:
            d = np.sqrt(np.sum((self._hist.X - x) ** 2, axis=1))
            is_same = self._hist.y == y
            _merge_rows(self._same[:n_hist], d, is_same)
            _merge_rows(self._diff[:n_hist], d, ~is_same)
            own_same = np.sort(d[is_same])[:self.k]
            own_diff = np.sort(d[~is_same])[:self.k]
        else:
            own_same = np.empty(0)
            own_diff = np.empty(0)
        if n_hist == self._same.shape[0]:
            self._same = np.concatenate([self._same, np.empty_like(self._same)])
            self._diff = np.concatenate([self._diff, np.empty_like(self._diff)])
        self._same[n_hist] = _pad_row(own_same, self.k)
        self._diff[n_hist] = _pad_row(own_diff, self.k)
        self._hist.append(x, y)


def _pad_row(vals: np.ndarray, k: int) -> np.ndarray:
    row = np.full(k, np.inf)
    row[:vals.shape[0]] = vals
    return row


def _row_stats(rows: np.ndarray):
    finite = np.isfinite(rows)
    sums = np.where(finite, rows, 0.0).sum(axis=1)
    cnts = finite.sum(axis=1)
    maxes = np.where(finite, rows, -np.inf).max(axis=1, initial=-np.inf)
    return sums, cnts, maxes


def _merged_mean(sums, cnts, maxes, d, applies, k):
    """Mean of the k smallest cached distances after (virtually) adding the
    candidate's distance d[i] to the rows where ``applies``."""
    full = cnts >= k
    add = applies & ~full
    swap = applies & full & (d < maxes)
    new_sum = np.where(add, sums + d, np.where(swap, sums - maxes + d, sums))
    new_cnt = np.where(add, cnts + 1, cnts)
    with np.errstate(invalid="ignore"):
        mean = new_sum / new_cnt
    return np.where(new_cnt == 0, np.nan, mean)


def _ratio(same_mean, diff_mean):
    """Strangeness ratio with the missing-side conventions, vectorised.
    NaN means the side had no members at all."""
    out = np.empty_like(same_mean)
    no_same = np.isnan(same_mean)
    no_diff = ~no_same & np.isnan(diff_mean)
    rest = ~no_same & ~no_diff
    out[no_same] = np.inf
    out[no_diff] = 0.0
    s, f = same_mean[rest], diff_mean[rest]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = s / f
    r = np.where(s == 0.0, 0.0, r)
    r = np.where((f == 0.0) & (s > 0.0), np.inf, r)
    out[rest] = r
    return out


def _merge_rows(rows: np.ndarray, d: np.ndarray, applies: np.ndarray) -> None:
    """Insert d[i] into each applicable cached top-k row in place, keeping
    the k smallest in ascending order (inf padding beyond the max row)."""
    if rows.shape[0] == 0:
        return
    worse = rows[:, -1] > d
    upd = applies & worse
    if np.any(upd):
        rows[upd, -1] = d[upd]
        rows[upd] = np.sort(rows[upd], axis=1)


class CrrPredictor(SetPredictor):
    """Online conformalised ridge regression (recomputed each step)."""

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
        return crr_predict(self._hist.X, self._hist.y, x, eps, self.a)

    def _observe(self, x, y):
        self._hist.append(x, float(y))
