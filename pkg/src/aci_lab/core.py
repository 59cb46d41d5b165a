"""Set-valued predictors and the extended significance-level contract.

A set predictor maps (history, new object, significance level eps) to a
subset of the label space: a finite set of class labels for classification,
an interval for regression.  Everything here honours the *extended*
contract, which gives the boundary levels a definite meaning:

    eps <= 0  ->  the full label space (every candidate is included)
    eps >= 1  ->  the empty set

so that an adaptively controlled eps may wander outside (0, 1) without
breaking a run.  Confidence predictors additionally produce *nested*
outputs: eps1 >= eps2 implies predict(x, eps1) is a subset of
predict(x, eps2).  All predictors in this package are confidence
predictors except the two reference baselines (coin flip, random set),
which are deliberately valid-but-non-nested.
"""

import hashlib
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

CLASSIFICATION = "classification"
REGRESSION = "regression"

_KINDS = ("labels", "all", "interval", "empty")


@dataclass(frozen=True)
class PredictionSet:
    """One prediction: a label set, a closed interval, everything, or nothing.

    ``kind`` is one of ``"labels"`` (finite set of integer class labels),
    ``"all"`` (the whole label space, whatever it is), ``"interval"``
    (closed, possibly with infinite endpoints), ``"empty"``.
    """

    kind: str
    labels: frozenset = field(default=frozenset())
    lower: float = field(default=math.nan)
    upper: float = field(default=math.nan)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown prediction-set kind {self.kind!r}")
        if self.kind == "interval":
            if math.isnan(self.lower) or math.isnan(self.upper):
                raise ValueError("interval endpoints must be numbers")
            if self.lower > self.upper:
                raise ValueError(
                    f"interval lower bound {self.lower} exceeds upper {self.upper}"
                )

    @classmethod
    def label_set(cls, labels) -> "PredictionSet":
        labels = frozenset(int(c) for c in labels)
        return cls(kind="labels", labels=labels)

    @classmethod
    def all_labels(cls) -> "PredictionSet":
        return cls(kind="all")

    @classmethod
    def interval(cls, lower: float, upper: float) -> "PredictionSet":
        return cls(kind="interval", lower=float(lower), upper=float(upper))

    @classmethod
    def full_interval(cls) -> "PredictionSet":
        return cls.interval(-math.inf, math.inf)

    @classmethod
    def empty(cls) -> "PredictionSet":
        return cls(kind="empty")

    def contains(self, y) -> bool:
        """Membership of a label (classification) or value (regression)."""
        if self.kind == "empty":
            return False
        if self.kind == "all":
            return True
        if self.kind == "labels":
            yi = int(y)
            if yi != y:
                raise ValueError(f"label {y!r} is not an integer")
            return yi in self.labels
        y = float(y)
        return self.lower <= y <= self.upper

    def size(self, n_labels: int | None = None) -> float:
        """Number of labels, or interval width.  ``"all"`` needs ``n_labels``
        for classification; without it the size is infinite."""
        if self.kind == "empty":
            return 0.0
        if self.kind == "labels":
            return float(len(self.labels))
        if self.kind == "all":
            return float(n_labels) if n_labels is not None else math.inf
        return self.upper - self.lower

    @property
    def is_infinite(self) -> bool:
        """True for an interval with an infinite endpoint (or ``"all"``)."""
        if self.kind == "interval":
            return math.isinf(self.lower) or math.isinf(self.upper)
        return self.kind == "all"

    def issubset(self, other: "PredictionSet") -> bool:
        if self.kind == "empty" or other.kind == "all":
            return True
        if other.kind == "empty":
            return self.kind == "empty"
        if self.kind == "all":
            return False
        if self.kind == "labels" and other.kind == "labels":
            return self.labels <= other.labels
        if self.kind == "interval" and other.kind == "interval":
            return self.lower >= other.lower and self.upper <= other.upper
        raise ValueError(f"cannot compare {self.kind} set with {other.kind} set")


@dataclass(frozen=True)
class Example:
    """A single observation: feature vector plus label."""

    x: np.ndarray
    y: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1:
            raise ValueError(f"feature vector must be 1-D, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("feature vector contains non-finite values")
        if not math.isfinite(self.y):
            raise ValueError(f"label {self.y!r} is not finite")
        object.__setattr__(self, "x", x)


def boundary_set(eps: float, task: str) -> PredictionSet | None:
    """The forced output at boundary significance levels, else None.

    eps <= 0 yields the full label space (an unbounded interval for
    regression); eps >= 1 yields the empty set.  Levels strictly inside
    (0, 1) are the predictor's business.
    """
    if task not in (CLASSIFICATION, REGRESSION):
        raise ValueError(f"unknown task {task!r}")
    if eps <= 0.0:
        return PredictionSet.all_labels() if task == CLASSIFICATION else PredictionSet.full_interval()
    if eps >= 1.0:
        return PredictionSet.empty()
    return None


class SetPredictor(ABC):
    """Online set predictor over a growing history (single-writer).

    Subclasses implement ``_predict`` for eps strictly inside (0, 1);
    the boundary behaviour is handled here once.  ``observe`` appends the
    revealed example to the history.  Confidence predictors (everything
    except the baselines) must make ``_predict`` nested in eps.
    """

    task: str = CLASSIFICATION

    def __init__(self):
        self._dim: int | None = None

    def predict(self, x, eps: float) -> PredictionSet:
        x = self._check_x(x)
        forced = boundary_set(float(eps), self.task)
        if forced is not None:
            return forced
        return self._predict(x, float(eps))

    def observe(self, x, y) -> None:
        x = self._check_x(x)
        if not math.isfinite(float(y)):
            raise ValueError(f"label {y!r} is not finite")
        self._observe(x, y)

    @property
    @abstractmethod
    def history_size(self) -> int: ...

    @abstractmethod
    def _predict(self, x: np.ndarray, eps: float) -> PredictionSet: ...

    @abstractmethod
    def _observe(self, x: np.ndarray, y) -> None: ...

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError(f"feature vector must be 1-D, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("feature vector contains non-finite values")
        if self._dim is None:
            self._dim = x.shape[0]
        elif x.shape[0] != self._dim:
            raise ValueError(f"expected {self._dim} features, got {x.shape[0]}")
        return x


class ExampleBuffer:
    """Append-only history store with amortised-doubling growth.

    Online predictors read the whole history every step, so the store
    hands out zero-copy views: ``X`` and ``y`` slice the underlying
    buffers and stay valid until the next ``append``.
    """

    def __init__(self, label_dtype=float):
        self._X: np.ndarray | None = None
        self._y = np.empty(8, dtype=label_dtype)
        self._n = 0

    def __len__(self) -> int:
        return self._n

    @property
    def X(self) -> np.ndarray:
        if self._X is None:
            raise ValueError("history is empty")
        return self._X[:self._n]

    @property
    def y(self) -> np.ndarray:
        return self._y[:self._n]

    def append(self, x, y) -> None:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError(f"feature vector must be 1-D, got shape {x.shape}")
        if self._X is None:
            self._X = np.empty((8, x.shape[0]))
        elif self._X.shape[1] != x.shape[0]:
            raise ValueError(f"expected {self._X.shape[1]} features, got {x.shape[0]}")
        if self._n == self._X.shape[0]:
            self._X = np.concatenate([self._X, np.empty_like(self._X)])
        if self._n == self._y.shape[0]:
            self._y = np.concatenate([self._y, np.empty_like(self._y)])
        self._X[self._n] = x
        self._y[self._n] = y
        self._n += 1


def derive_rng(seed: int, *labels) -> np.random.Generator:
    """Independent generator for a (seed, purpose...) pair.

    Each distinct label tuple gives a stream that is stable across runs
    and platforms, so trials and purposes never share randomness.
    """
    entropy = [int(seed) & 0xFFFFFFFF]
    for lab in labels:
        digest = hashlib.sha256(str(lab).encode("utf-8")).digest()
        entropy.append(int.from_bytes(digest[:4], "big"))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def coin_flip_predict(eps: float, rng: np.random.Generator,
                      task: str = CLASSIFICATION) -> PredictionSet:
    """Empty set with probability eps, else the full label space.

    Exactly valid at every fixed level and under adaptive control, but
    useless: the family is not nested across eps.
    """
    forced = boundary_set(eps, task)
    if forced is not None:
        return forced
    if rng.random() < eps:
        return PredictionSet.empty()
    return PredictionSet.all_labels() if task == CLASSIFICATION else PredictionSet.full_interval()


def random_set_predict(eps: float, label_space, rng: np.random.Generator) -> PredictionSet:
    """Independently keep each label with probability 1 - eps.

    Marginally valid (each label, the true one included, is dropped with
    probability eps) yet non-nested: a fresh draw at a smaller eps can
    easily fail to contain a draw at a larger one.
    """
    labels = [int(c) for c in label_space]
    if not labels:
        raise ValueError("label space is empty")
    forced = boundary_set(eps, CLASSIFICATION)
    if forced is not None:
        return forced
    keep = rng.random(len(labels)) >= eps
    return PredictionSet.label_set(c for c, k in zip(labels, keep) if k)


class CoinFlipPredictor(SetPredictor):
    """History-free baseline wrapping :func:`coin_flip_predict`."""

    def __init__(self, rng: np.random.Generator, task: str = CLASSIFICATION):
        super().__init__()
        self.task = task
        self._rng = rng
        self._n = 0

    @property
    def history_size(self) -> int:
        return self._n

    def _predict(self, x, eps):
        return coin_flip_predict(eps, self._rng, self.task)

    def _observe(self, x, y):
        self._n += 1


class RandomSetPredictor(SetPredictor):
    """History-free baseline wrapping :func:`random_set_predict`."""

    task = CLASSIFICATION

    def __init__(self, label_space, rng: np.random.Generator):
        super().__init__()
        self._labels = [int(c) for c in label_space]
        self._rng = rng
        self._n = 0

    @property
    def history_size(self) -> int:
        return self._n

    def _predict(self, x, eps):
        return random_set_predict(eps, self._labels, self._rng)

    def _observe(self, x, y):
        self._n += 1
