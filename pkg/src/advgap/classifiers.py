"""Linear classifiers f_w(x) = sgn(<w, x>), optionally composed with thresholding."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .distributions import Dataset, LabeledSample

PREPROCESS_KINDS = ("identity", "threshold")


def threshold_map(x) -> np.ndarray:
    """Coordinate-wise binarisation: +1 where x_i >= 0, else -1."""
    x = np.asarray(x, dtype=float)
    return np.where(x >= 0, 1.0, -1.0)


@dataclass(frozen=True, eq=False)
class LinearClassifier:
    w: np.ndarray
    preprocess: str = "identity"
    norm: float | None = None  # l2 norm of the weights before any normalisation

    def __post_init__(self):
        w = np.array(self.w, dtype=float, copy=True).ravel()
        if w.size == 0 or not np.any(w != 0):
            raise ValueError("weight vector must have a nonzero coordinate")
        if not np.all(np.isfinite(w)):
            raise ValueError("weight vector must be finite")
        if self.preprocess not in PREPROCESS_KINDS:
            raise ValueError(f"preprocess must be one of {PREPROCESS_KINDS}, got {self.preprocess!r}")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        if self.norm is None:
            object.__setattr__(self, "norm", _l2_norm(w))

    @property
    def d(self) -> int:
        return self.w.size

    @property
    def thresholded(self) -> bool:
        return self.preprocess == "threshold"

    def with_preprocess(self, preprocess: str) -> "LinearClassifier":
        return LinearClassifier(self.w, preprocess, self.norm)

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ValueError(f"dimension mismatch: classifier has d={self.d}, input has {x.shape[-1]}")
        return threshold_map(x) if self.thresholded else x

    def scores(self, x) -> np.ndarray:
        return self.transform(x) @ self.w

    def to_dict(self) -> dict:
        return {"kind": "linear", "d": self.d, "w": self.w.tolist(),
                "preprocess": self.preprocess, "norm": self.norm}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "LinearClassifier":
        if doc.get("kind", "linear") != "linear":
            raise ValueError(f"unsupported classifier kind {doc.get('kind')!r}")
        w = np.asarray(doc["w"], dtype=float)
        if "d" in doc and int(doc["d"]) != w.size:
            raise ValueError(f"document says d={doc['d']} but w has {w.size} entries")
        return cls(w, doc.get("preprocess", "identity"), doc.get("norm"))

    @classmethod
    def from_json(cls, text: str) -> "LinearClassifier":
        return cls.from_dict(json.loads(text))


def learn_weighted_mean(data: Dataset, normalize: bool = True, preprocess: str = "identity") -> LinearClassifier:
    """w = (1/n) sum_i y_i x_i, rescaled to unit l2 norm when ``normalize``."""
    if len(data) < 1:
        raise ValueError("need at least one sample")
    return classifier_from_sum(data.oriented().sum(axis=0), len(data), normalize, preprocess)


def _l2_norm(w: np.ndarray) -> float:
    # rescale first so tiny or huge weights neither underflow nor overflow
    top = float(np.max(np.abs(w))) if w.size else 0.0
    return 0.0 if top == 0.0 else top * float(np.linalg.norm(w / top))


def classifier_from_sum(z_sum, n: int, normalize: bool = True, preprocess: str = "identity") -> LinearClassifier:
    w = np.asarray(z_sum, dtype=float) / n
    norm = _l2_norm(w)
    if norm == 0.0:
        raise ValueError("degenerate dataset: the weighted mean vector is zero")
    if normalize:
        top = float(np.max(np.abs(w)))
        w = (w / top) / (norm / top)
    return LinearClassifier(w, preprocess, norm)


def predict(clf: LinearClassifier, x) -> np.ndarray | int:
    """sgn(<w, preprocess(x)>) with sgn(0) = +1.  Accepts one point or a (m, d) batch."""
    s = clf.scores(x)
    labels = np.where(s >= 0, 1, -1)
    return int(labels) if np.ndim(labels) == 0 else labels


def margin(clf: LinearClassifier, sample: LabeledSample | Dataset, y=None):
    """<w, y * preprocess(x)>.  Pass a LabeledSample, a Dataset, or (x, y)."""
    if isinstance(sample, LabeledSample):
        x, y = sample.x, sample.y
    elif isinstance(sample, Dataset):
        x, y = sample.X, sample.y
    else:
        x = sample
        if y is None:
            raise ValueError("labels required")
    m = np.asarray(y) * clf.scores(x)
    return float(m) if np.ndim(m) == 0 else m
