"""Sample-size sweeps, CSV records, minimum-n search and power-law fits."""

from __future__ import annotations

import csv
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analytic import bernoulli_error_exact, gaussian_robust_error, MAX_ENUMERATION_DIM
from .attacks import PerturbationBudget, optimal_attack
from .classifiers import LinearClassifier, classifier_from_sum
from .distributions import (GaussianModelParams, draw, draw_oriented_sum, draw_prior_theta,
                            fixed_theta, make_params)
from .estimation import confidence_interval
from .rng import RngSeed

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = ("model", "d", "noise", "eps", "n", "trial", "classifier",
               "std_err_analytic", "std_err_mc", "rob_err_analytic", "rob_err_mc",
               "ci_low", "ci_high", "seed")
CLASSIFIER_KINDS = ("plain", "thresholded")
THETA_MODES = ("fixed", "prior")
METRICS = ("robust", "standard")


def geometric_grid(max_exp: int = 14) -> list[int]:
    return [2 ** k for k in range(max_exp + 1)]


@dataclass
class SweepConfig:
    model_kind: str
    d_list: list
    noise_list: list
    epsilon_list: list
    n_grid: list = field(default_factory=geometric_grid)
    trials: int = 10
    theta_mode: str = "fixed"
    classifier_kinds: list = field(default_factory=lambda: ["plain"])
    base_seed: int = 0
    output: str | None = None
    # fresh test points per row for the Monte Carlo columns; 0 leaves them empty
    mc_test_points: int = 2000
    # pair noise_list[i] with d_list[i] instead of taking the full product
    noise_paired: bool = False

    def __post_init__(self):
        if self.model_kind not in ("gaussian", "bernoulli"):
            raise ValueError(f"model_kind must be 'gaussian' or 'bernoulli', got {self.model_kind!r}")
        for name in ("d_list", "noise_list", "epsilon_list", "n_grid", "classifier_kinds"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")
        self.d_list = [int(d) for d in self.d_list]
        self.noise_list = [float(s) for s in self.noise_list]
        self.epsilon_list = [float(e) for e in self.epsilon_list]
        self.n_grid = [int(n) for n in self.n_grid]
        if any(d < 1 for d in self.d_list) or any(n < 1 for n in self.n_grid):
            raise ValueError("dimensions and sample sizes must be positive")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n_grid must be strictly increasing")
        if any(e < 0 for e in self.epsilon_list):
            raise ValueError("epsilons must be nonnegative")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.theta_mode not in THETA_MODES:
            raise ValueError(f"theta_mode must be one of {THETA_MODES}")
        bad = set(self.classifier_kinds) - set(CLASSIFIER_KINDS)
        if bad:
            raise ValueError(f"unknown classifier kinds {sorted(bad)}")
        if self.noise_paired and len(self.noise_list) != len(self.d_list):
            raise ValueError("noise_paired needs one noise value per dimension")
        if self.mc_test_points < 0:
            raise ValueError("mc_test_points must be nonnegative")

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        return cls(**doc)

    @classmethod
    def from_toml(cls, path) -> "SweepConfig":
        with open(path, "rb") as fh:
            return cls.from_dict(tomllib.load(fh))

    def grid_points(self) -> list[tuple[int, float]]:
        if self.noise_paired:
            return list(zip(self.d_list, self.noise_list))
        return [(d, s) for d in self.d_list for s in self.noise_list]


@dataclass(frozen=True)
class SweepRecord:
    model: str
    d: int
    noise: float
    eps: float
    n: int
    trial: int
    classifier: str
    std_err_analytic: float | None
    std_err_mc: float | None
    rob_err_analytic: float | None
    rob_err_mc: float | None
    ci_low: float | None
    ci_high: float | None
    seed: int

    def sort_key(self):
        return (self.d, self.noise, self.eps, self.n, self.trial, CLASSIFIER_KINDS.index(self.classifier))

    def error(self, metric: str = "robust") -> float | None:
        """Analytic value when available, otherwise the Monte Carlo one."""
        if metric == "robust":
            a, m = self.rob_err_analytic, self.rob_err_mc
        elif metric == "standard":
            a, m = self.std_err_analytic, self.std_err_mc
        else:
            raise ValueError(f"metric must be one of {METRICS}")
        return a if a is not None else m


_INT_COLS = {"d", "n", "trial", "seed"}
_STR_COLS = {"model", "classifier"}


def _fmt(col: str, v) -> str:
    if v is None:
        return ""
    if col in _STR_COLS:
        return v
    if col in _INT_COLS:
        return str(int(v))
    return f"{float(v):.9g}"


def _parse(col: str, s: str):
    if col in _STR_COLS:
        return s
    if s == "":
        return None
    return int(s) if col in _INT_COLS else float(s)


def records_to_csv(records: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        row = asdict(r)
        writer.writerow([_fmt(c, row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def records_from_csv(text: str) -> list[SweepRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header!r}; expected {','.join(CSV_COLUMNS)}")
    return [SweepRecord(**{c: _parse(c, s) for c, s in zip(CSV_COLUMNS, row)}) for row in reader]


def write_csv(records: Iterable[SweepRecord], path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(records_to_csv(records))
    except OSError as exc:
        raise OSError(f"cannot write sweep output to {path}: {exc.strerror or exc}") from exc


def read_csv(path) -> list[SweepRecord]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read sweep records from {path}: {exc.strerror or exc}") from exc
    return records_from_csv(text)


def _analytic(clf: LinearClassifier, params, eps: float) -> float | None:
    if isinstance(params, GaussianModelParams):
        if clf.thresholded:
            return None
        return gaussian_robust_error(clf.w, params, PerturbationBudget(eps))
    if clf.thresholded:
        # +-1 inputs never cross the threshold under a budget below 1
        if eps >= 1.0:
            return None
        eps = 0.0
    w = clf.w
    if np.all(np.abs(w) == np.abs(w[0])) or w.size <= MAX_ENUMERATION_DIM:
        return bernoulli_error_exact(w, params, PerturbationBudget(eps))
    return None


def _make_classifier(kind: str, z_sum, n: int) -> LinearClassifier | None:
    try:
        return classifier_from_sum(z_sum, n, normalize=True,
                                   preprocess="threshold" if kind == "thresholded" else "identity")
    except ValueError:
        return None


def _sweep_cell(config: SweepConfig, gi: int, d: int, noise: float, trial: int) -> list[SweepRecord]:
    stream = RngSeed(config.base_seed, gi)
    train_rng = stream.generator(trial, 0)
    fingerprint = RngSeed(config.base_seed, gi).child(trial).fingerprint()
    if config.theta_mode == "fixed":
        theta = fixed_theta(config.model_kind, d)
    else:
        theta = draw_prior_theta(config.model_kind, d, stream.generator(trial, 1))
    params = make_params(config.model_kind, theta, noise)

    rows = []
    z_sum = np.zeros(d)
    prev = 0
    for ni, n in enumerate(config.n_grid):
        z_sum = z_sum + draw_oriented_sum(params, n - prev, train_rng)
        prev = n
        X = y = None
        if config.mc_test_points:
            X, y = draw(params, config.mc_test_points, stream.generator(trial, 2, ni))
        for kind in config.classifier_kinds:
            clf = _make_classifier(kind, z_sum, n)
            # a zero weight vector gives a constant classifier, which errs on half the points
            std_a = 0.5 if clf is None else _analytic(clf, params, 0.0)
            std_mc = None
            if clf is not None and X is not None:
                std_mc = float(np.mean(y * clf.scores(X) <= 0))
            for eps in config.epsilon_list:
                rob_a = 0.5 if clf is None else _analytic(clf, params, eps)
                rob_mc = lo = hi = None
                if clf is not None and X is not None:
                    res = optimal_attack(clf, X, PerturbationBudget(eps), y)
                    rob_mc = float(np.count_nonzero(res.misclassified)) / len(y)
                    lo, hi = confidence_interval(rob_mc, len(y))
                rows.append(SweepRecord(config.model_kind, d, noise, eps, n, trial, kind,
                                        std_a, std_mc, rob_a, rob_mc, lo, hi, fingerprint))
    return rows


def run_sweep(config: SweepConfig, threads: int = 1) -> list[SweepRecord]:
    """All sweep rows, sorted by (d, noise, eps, n, trial, classifier).

    Each (grid point, trial) owns one training stream; the n-grid is nested,
    so the training set at n extends the one at the previous grid value.
    """
    cells = [(gi, d, s, t) for gi, (d, s) in enumerate(config.grid_points()) for t in range(config.trials)]
    if threads <= 1:
        chunks = [_sweep_cell(config, *c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda c: _sweep_cell(config, *c), cells))
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=SweepRecord.sort_key)
    return rows


def find_min_n(records: Sequence[SweepRecord], target_error: float, metric: str = "robust",
               classifier: str | None = None) -> dict:
    """Smallest n whose median-over-trials error is <= target, per (d, noise, eps).

    Each trial's error at a grid point is the best over classifier kinds
    (or the given kind).  A key maps to None when no n reaches the target.
    """
    if not records:
        raise ValueError("no sweep records")
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    best: dict = {}
    for r in records:
        if classifier is not None and r.classifier != classifier:
            continue
        e = r.error(metric)
        if e is None:
            continue
        key = (r.d, r.noise, r.eps, r.n, r.trial)
        best[key] = min(best.get(key, math.inf), e)
    if not best:
        raise ValueError("no records with an error value for this selection")
    per_n: dict = {}
    for (d, s, eps, n, _), e in best.items():
        per_n.setdefault((d, s, eps), {}).setdefault(n, []).append(e)
    result = {}
    for key in sorted(per_n):
        result[key] = None
        for n in sorted(per_n[key]):
            if float(np.median(per_n[key][n])) <= target_error:
                result[key] = n
                break
    return result


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    residual: float
    points: tuple


def scaling_fit(min_n: dict | Sequence[tuple]) -> ScalingFit:
    """Least-squares fit of log(min_n) = slope * log(d) + intercept.

    Accepts a mapping keyed by d (or by tuples whose first entry is d) or a
    sequence of (d, n) pairs; entries with n = None are dropped.
    """
    items = min_n.items() if isinstance(min_n, dict) else min_n
    pts = []
    for key, n in items:
        d = key[0] if isinstance(key, tuple) else key
        if n is not None:
            pts.append((int(d), int(n)))
    pts.sort()
    if len({d for d, _ in pts}) < 4:
        raise ValueError(f"need at least 4 distinct d values with a reached target, got {len(pts)}")
    x = np.log([d for d, _ in pts])
    y = np.log([n for _, n in pts])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ np.array([slope, intercept]) - y) ** 2)))
    return ScalingFit(float(slope), float(intercept), resid, tuple(pts))
