"""Sample-based distances between two sets of graph embeddings."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist, pdist

from ..graph import LabelSchema
from .embedding import EmbeddingConfig, embed_set

DEFAULT_K = 5


def _as_2d(E) -> np.ndarray:
    E = np.asarray(E, dtype=np.float64)
    return E.reshape(len(E), -1)


def _sqrt_psd(S: np.ndarray) -> np.ndarray:
    w, V = linalg.eigh(S)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def frechet_distance(E_real, E_gen, eps: float = 1e-6) -> float:
    """Frechet distance between Gaussian fits of the two sets.

    ``tr((S_a S_b)^(1/2))`` is evaluated as the nuclear norm of
    ``S_a^(1/2) S_b^(1/2)``: the same quantity, but without the precision loss
    of a general matrix square root on ill-conditioned covariances.
    """
    a, b = _as_2d(E_real), _as_2d(E_gen)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("frechet_distance needs at least 2 samples per set")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise ValueError("non-finite embeddings")
    mu_a, mu_b = a.mean(0), b.mean(0)
    eye = eps * np.eye(a.shape[1])
    s_a = np.atleast_2d(np.cov(a, rowvar=False)) + eye
    s_b = np.atleast_2d(np.cov(b, rowvar=False)) + eye
    tr_covmean = linalg.svd(_sqrt_psd(s_a) @ _sqrt_psd(s_b), compute_uv=False).sum()
    diff = mu_a - mu_b
    value = float(diff @ diff + np.trace(s_a) + np.trace(s_b) - 2.0 * tr_covmean)
    if not np.isfinite(value):
        raise ValueError("frechet distance is not finite")
    return value


def knn_radii(E, k: int) -> np.ndarray:
    """Distance from each sample to its k-th nearest neighbour within the same set."""
    d = cdist(E, E)
    return np.sort(d, axis=1)[:, k]


def precision_recall(E_real, E_gen, k: int = DEFAULT_K):
    real, gen = _as_2d(E_real), _as_2d(E_gen)
    if len(real) < k + 1 or len(gen) < k + 1:
        raise ValueError(f"precision/recall need at least k+1={k + 1} samples per set")
    r_real, r_gen = knn_radii(real, k), knn_radii(gen, k)
    d = cdist(real, gen)
    precision = int((d <= r_real[:, None]).any(axis=0).sum()) / len(gen)
    recall = int((d <= r_gen[None, :]).any(axis=1).sum()) / len(real)
    return precision, recall


def density_coverage(E_real, E_gen, k: int = DEFAULT_K):
    real, gen = _as_2d(E_real), _as_2d(E_gen)
    if len(real) < k + 1:
        raise ValueError(f"density/coverage need at least k+1={k + 1} real samples")
    r_real = knn_radii(real, k)
    d = cdist(real, gen)
    inside = d <= r_real[:, None]
    density = int(inside.sum()) / (k * len(gen))
    coverage = int(inside.any(axis=1).sum()) / len(real)
    return density, coverage


def median_bandwidth(E_real, E_gen) -> float:
    pooled = np.vstack([_as_2d(E_real), _as_2d(E_gen)])
    med = float(np.median(pdist(pooled)))
    return med if med > 0 else 1.0


def _kernel(a, b, kernel, sigma):
    if kernel == "linear":
        return a @ b.T
    if kernel == "rbf":
        return np.exp(-cdist(a, b, "sqeuclidean") / (2.0 * sigma ** 2))
    raise ValueError(f"unknown kernel {kernel!r}")


def mmd(E_real, E_gen, kernel: str = "rbf", sigma=None) -> float:
    """Unbiased squared MMD.

    With equal set sizes the paired U-statistic is used, which is exactly
    zero for two copies of the same set; otherwise the standard two-sample
    unbiased estimator.
    """
    x, y = _as_2d(E_real), _as_2d(E_gen)
    m, n = len(x), len(y)
    if m < 2 or n < 2:
        raise ValueError("mmd needs at least 2 samples per set")
    if kernel == "rbf" and sigma is None:
        sigma = median_bandwidth(x, y)
    kxx, kyy, kxy = _kernel(x, x, kernel, sigma), _kernel(y, y, kernel, sigma), _kernel(x, y, kernel, sigma)
    if m == n:
        h = kxx + kyy - kxy - kxy.T
        return float((h.sum() - np.trace(h)) / (m * (m - 1)))
    xx = (kxx.sum() - np.trace(kxx)) / (m * (m - 1))
    yy = (kyy.sum() - np.trace(kyy)) / (n * (n - 1))
    return float(xx + yy - 2.0 * kxy.mean())


def f1(a: float, b: float) -> float:
    return 0.0 if a + b == 0 else 2.0 * a * b / (a + b)


@dataclass
class EvalReport:
    fd: float
    precision: float
    recall: float
    density: float
    coverage: float
    f1_pr: float
    f1_dc: float
    mmd_linear: float
    mmd_rbf: float
    n_real: int = 0
    n_gen: int = 0
    embedding_seed: int = 42
    config_fingerprint: str = ""

    METRICS = ("fd", "precision", "recall", "density", "coverage", "f1_pr", "f1_dc",
               "mmd_linear", "mmd_rbf")

    def to_dict(self) -> dict:
        return asdict(self)


def compare_embeddings(E_real, E_gen, k: int = DEFAULT_K, **meta) -> EvalReport:
    p, r = precision_recall(E_real, E_gen, k)
    d, c = density_coverage(E_real, E_gen, k)
    return EvalReport(
        fd=frechet_distance(E_real, E_gen), precision=p, recall=r, density=d, coverage=c,
        f1_pr=f1(p, r), f1_dc=f1(d, c),
        mmd_linear=mmd(E_real, E_gen, "linear"), mmd_rbf=mmd(E_real, E_gen, "rbf"),
        n_real=len(E_real), n_gen=len(E_gen), **meta)


def evaluate_graphs(real, generated, schema: LabelSchema, cfg: EmbeddingConfig = EmbeddingConfig(),
                    k: int = DEFAULT_K, config_fingerprint: str = "") -> EvalReport:
    E_real = embed_set(list(real), schema, cfg)
    E_gen = embed_set(list(generated), schema, cfg)
    return compare_embeddings(E_real, E_gen, k, embedding_seed=cfg.seed,
                              config_fingerprint=config_fingerprint)
