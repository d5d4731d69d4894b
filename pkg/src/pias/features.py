"""Landscape features from a static sample.

Fourteen features over five classic groups (value distribution,
meta-model fits, information content, nearest-better clustering,
dispersion) plus fitness-distance correlation, all computable from one
(X, y) sample with no extra evaluations.  Values are computed on
min-max normalized y so they are invariant to affine rescaling of the
objective.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

FEATURE_NAMES = (
    "distr.skewness",
    "distr.kurtosis",
    "meta.lin.R2",
    "meta.lin.coef_ratio",
    "meta.quad.R2",
    "meta.quad.cond",
    "ic.h_max",
    "ic.eps_s",
    "ic.m0",
    "nbc.nn_nb_mean_ratio",
    "nbc.nn_nb_sd_ratio",
    "nbc.nb_fitness_cor",
    "disp.ratio_mean_10",
    "fdc",
)

# threshold grid for the information-content symbol classification
_EPS_GRID = (0.0,) + tuple(10.0 ** k for k in np.arange(-5.0, 15.01, 0.5))

_RIDGE = 1e-10


@dataclass(frozen=True)
class Sample:
    """A feature sample: points, raw values, and normalized values."""

    X: np.ndarray
    y: np.ndarray
    y_norm: np.ndarray = field(init=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be (n, d) and y (n,)")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        lo, hi = y.min(), y.max()
        if hi > lo:
            yn = (y - lo) / (hi - lo)
        else:
            yn = np.full_like(y, 0.5)
        object.__setattr__(self, "y_norm", yn)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def _pearson(a, b) -> float:
    sa = a - a.mean()
    sb = b - b.mean()
    na = math.sqrt(float(sa @ sa))
    nb = math.sqrt(float(sb @ sb))
    if na < 1e-300 or nb < 1e-300:
        return float("nan")
    return float(sa @ sb) / (na * nb)


def _lstsq_ridge(A, y):
    # normal equations with a tiny diagonal jitter so collinear samples
    # stay solvable
    G = A.T @ A
    G[np.diag_indices_from(G)] += _RIDGE
    return np.linalg.solve(G, A.T @ y)


def _adjusted_r2(y, resid, p) -> float:
    n = y.shape[0]
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= 0.0 or n - p - 1 <= 0:
        return float("nan")
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot
    return 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)


def _ratio_abs(c) -> float:
    a = np.abs(c)
    if a.size == 0 or a.min() < 1e-12:
        return float("nan")
    return float(a.max() / a.min())


def _skewness(y) -> float:
    n = y.shape[0]
    s = y.std(ddof=1)
    if s == 0.0 or n < 3:
        return float("nan")
    m = ((y - y.mean()) / s) ** 3
    return float(n / ((n - 1) * (n - 2)) * m.sum())


def _kurtosis(y) -> float:
    n = y.shape[0]
    s = y.std(ddof=1)
    if s == 0.0 or n < 4:
        return float("nan")
    m4 = float(np.sum(((y - y.mean()) / s) ** 4))
    return (n * (n + 1) / ((n - 1) * (n - 2) * (n - 3))) * m4 \
        - 3.0 * (n - 1) ** 2 / ((n - 2) * (n - 3))


def _entropy6(pairs, total) -> float:
    h = 0.0
    for c in pairs.values():
        if c == 0:
            continue
        p = c / total
        h -= p * math.log(p, 6)
    return h


def _ic_features(X, y_norm):
    n = X.shape[0]
    order = kernels.nn_tour(np.ascontiguousarray(X))
    P = X[order]
    v = y_norm[order]
    dist = np.sqrt(np.sum((P[1:] - P[:-1]) ** 2, axis=1))
    dy = v[1:] - v[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dist > 0.0, dy / np.where(dist > 0.0, dist, 1.0), 0.0)
    if ratio.shape[0] < 2:
        return float("nan"), float("nan"), float("nan")

    h_max = 0.0
    eps_s = float("nan")
    m0 = float("nan")
    for eps in _EPS_GRID:
        sym = np.zeros(ratio.shape[0], dtype=np.int64)
        sym[ratio > eps] = 1
        sym[ratio < -eps] = -1
        a = sym[:-1]
        b = sym[1:]
        total = a.shape[0]
        pairs = {}
        for pa in (-1, 0, 1):
            for pb in (-1, 0, 1):
                if pa == pb:
                    continue
                pairs[(pa, pb)] = int(np.sum((a == pa) & (b == pb)))
        h = _entropy6(pairs, total)
        if h > h_max:
            h_max = h
        if math.isnan(eps_s) and h < 0.05:
            eps_s = eps
        if eps == 0.0:
            nz = sym[sym != 0]
            if nz.shape[0] == 0:
                m0 = 0.0
            else:
                changes = 1 + int(np.sum(nz[1:] != nz[:-1]))
                m0 = changes / (n - 1)
    return h_max, eps_s, m0


def compute_features(sample: Sample) -> dict:
    """All 14 features of one sample, keyed by FEATURE_NAMES.

    Degenerate statistics come back as NaN and are handled by
    filter_features downstream.
    """
    if sample.n < 10:
        raise ValueError("insufficient sample: need n >= 10")
    X = sample.X
    yn = sample.y_norm
    n, d = sample.n, sample.d

    out = {}
    out["distr.skewness"] = _skewness(yn)
    out["distr.kurtosis"] = _kurtosis(yn)

    A_lin = np.column_stack([np.ones(n), X])
    beta = _lstsq_ridge(A_lin, yn)
    resid = yn - A_lin @ beta
    out["meta.lin.R2"] = _adjusted_r2(yn, resid, d)
    out["meta.lin.coef_ratio"] = _ratio_abs(beta[1:])

    A_quad = np.column_stack([np.ones(n), X, X * X])
    gamma = _lstsq_ridge(A_quad, yn)
    residq = yn - A_quad @ gamma
    out["meta.quad.R2"] = _adjusted_r2(yn, residq, 2 * d)
    out["meta.quad.cond"] = _ratio_abs(gamma[1 + d:])

    h_max, eps_s, m0 = _ic_features(X, yn)
    out["ic.h_max"] = h_max
    out["ic.eps_s"] = eps_s
    out["ic.m0"] = m0

    nn, nb = kernels.nearest_better(np.ascontiguousarray(X), yn)
    nb_mean = nb.mean()
    out["nbc.nn_nb_mean_ratio"] = float(nn.mean() / nb_mean) if nb_mean > 0 else float("nan")
    nb_sd = nb.std(ddof=1)
    nn_sd = nn.std(ddof=1)
    out["nbc.nn_nb_sd_ratio"] = float(nn_sd / nb_sd) if nb_sd > 0 else float("nan")
    out["nbc.nb_fitness_cor"] = _pearson(nb, yn)

    k = max(1, math.ceil(0.1 * n))
    best_rows = np.argsort(yn, kind="mergesort")[:k]
    num = kernels.mean_pairwise(np.ascontiguousarray(X[best_rows]))
    den = kernels.mean_pairwise(np.ascontiguousarray(X))
    out["disp.ratio_mean_10"] = float(num / den) if den > 0 else float("nan")

    b = int(np.argmin(yn))
    dist_to_best = np.sqrt(np.sum((X - X[b]) ** 2, axis=1))
    out["fdc"] = _pearson(yn, dist_to_best)
    return out


def filter_features(vectors) -> list:
    """Feature names usable across a whole scenario: finite everywhere
    and carrying a nonzero range, in canonical order."""
    vectors = list(vectors)
    if not vectors:
        raise ValueError("empty feature collection")
    keys = set(vectors[0])
    for v in vectors[1:]:
        if set(v) != keys:
            raise ValueError("feature vectors have differing key sets")
    retained = []
    for name in FEATURE_NAMES:
        if name not in keys:
            continue
        vals = np.asarray([v[name] for v in vectors], dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            continue
        if vals.max() - vals.min() < 1e-12:
            continue
        retained.append(name)
    return retained


def ela_best(sample: Sample, normalizer, optimum_value=None) -> float:
    """Normalized performance of the best sampled point."""
    best = float(sample.y.min())
    if optimum_value is not None:
        best = best - optimum_value
    return normalizer.perf(best)
