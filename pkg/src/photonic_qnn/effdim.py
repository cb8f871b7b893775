"""Fisher information and the normalized effective dimension.

For a binary classifier with output p(x; theta) the Fisher information is

    F(theta) = E_x[ grad p grad p^T / (p (1 - p)) ].

The global effective dimension at sample size n normalizes each F so that the
mean trace over parameter draws equals d, then

    ED = 2 ln( mean_k sqrt(det(I + kappa F_k)) ) / ln kappa,
    kappa = gamma n / (2 pi ln n).

Determinants are accumulated as sums of eigenvalue logs and averaged with a
log-sum-exp, so kappa ~ 1e4 causes no overflow.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from math import log, pi

import numpy as np
from scipy.special import logsumexp

from .data import load_iris
from .models import init_params, n_params, output_gradient

FISHER_CLAMP = 1e-9
INPUT_DISTRIBUTIONS = ("iris", "uniform")
ED_COLUMNS = ("model", "d", "n", "gamma", "ed", "normalized_ed", "seed")


@dataclass(frozen=True)
class FisherEstimate:
    theta: np.ndarray
    matrix: np.ndarray

    @property
    def d(self) -> int:
        return len(self.theta)


@dataclass(frozen=True)
class EDConfig:
    """Monte-Carlo settings for the effective dimension.

    ``inputs`` picks the distribution the Fisher expectation runs over:
    ``"iris"`` resamples the normalized Versicolor/Virginica features,
    ``"uniform"`` draws from the unit square.
    """

    n: float = 1e6
    gamma: float = 1.0
    n_theta: int = 100
    n_data: int = 100
    seed: int = 0
    inputs: str = "iris"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.n_theta < 1 or self.n_data < 1:
            raise ValueError("n_theta and n_data must be >= 1")
        if self.inputs not in INPUT_DISTRIBUTIONS:
            raise ValueError(f"unknown input distribution {self.inputs!r}")


def kappa(n: float, gamma: float = 1.0) -> float:
    return gamma * n / (2 * pi * log(n))


def sample_inputs(inputs: str, count: int, rng) -> np.ndarray:
    rng = np.random.default_rng(rng)
    if inputs == "uniform":
        return rng.uniform(0.0, 1.0, (count, 2))
    if inputs == "iris":
        pool = load_iris().features
        return pool[rng.integers(0, len(pool), count)]
    raise ValueError(f"unknown input distribution {inputs!r}")


def fisher_matrix(kind: str, theta, features) -> np.ndarray:
    """Fisher information averaged over the given input rows."""
    p, dp = output_gradient(kind, theta, np.atleast_2d(features))
    p = np.clip(p, FISHER_CLAMP, 1.0 - FISHER_CLAMP)
    f = np.einsum("ni,nj,n->ij", dp, dp, 1.0 / (p * (1.0 - p))) / len(p)
    return 0.5 * (f + f.T)


def fisher_at(kind: str, theta, data_sample_count: int = 100, seed=0, inputs: str = "iris") -> FisherEstimate:
    theta = np.asarray(theta, dtype=float)
    x = sample_inputs(inputs, data_sample_count, seed)
    return FisherEstimate(theta, fisher_matrix(kind, theta, x))


def sample_fishers(kind: str, cfg: EDConfig) -> np.ndarray:
    """``cfg.n_theta`` Fisher matrices at random parameters, stacked in draw order."""
    theta_rng, data_rng = np.random.default_rng(cfg.seed).spawn(2)
    out = np.empty((cfg.n_theta, n_params(kind), n_params(kind)))
    for k in range(cfg.n_theta):
        theta = init_params(kind, theta_rng)
        out[k] = fisher_matrix(kind, theta, sample_inputs(cfg.inputs, cfg.n_data, data_rng))
    return out


def ed_from_fishers(fishers, n: float, gamma: float = 1.0) -> float:
    """Effective dimension of a stack of Fisher matrices, shape ``(k, d, d)``."""
    fishers = np.asarray(fishers, dtype=float)
    d = fishers.shape[-1]
    mean_trace = np.trace(fishers, axis1=1, axis2=2).mean()
    if mean_trace <= 0:
        return 0.0
    k = kappa(n, gamma)
    if k <= 1:
        raise ValueError(f"kappa = {k:.3g} <= 1; increase n")
    eig = np.clip(np.linalg.eigvalsh(d * fishers / mean_trace), 0.0, None)
    half_logdet = 0.5 * np.log1p(k * eig).sum(axis=1)
    return float(2.0 * (logsumexp(half_logdet) - log(len(fishers))) / log(k))


def effective_dimension(kind: str, cfg: EDConfig = EDConfig()) -> float:
    return ed_from_fishers(sample_fishers(kind, cfg), cfg.n, cfg.gamma)


def normalized_ed(ed: float, d: int) -> float:
    if d == 0:
        raise ValueError("parameter count d must be positive")
    return ed / d


def ed_convergence_curve(kind: str, n_values, cfg: EDConfig = EDConfig()) -> list[tuple[float, float]]:
    """ED at each n, all from the same Fisher draws so the curve is smooth in n."""
    fishers = sample_fishers(kind, cfg)
    return [(float(n), ed_from_fishers(fishers, n, cfg.gamma)) for n in n_values]


def ed_rows(kind: str, cfg: EDConfig, ed: float) -> tuple:
    d = n_params(kind)
    return (kind, d, repr(float(cfg.n)), repr(float(cfg.gamma)), repr(ed), repr(normalized_ed(ed, d)), cfg.seed)


def ed_table_csv(rows, path=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ED_COLUMNS)
    writer.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as f:
            f.write(text)
    return text
