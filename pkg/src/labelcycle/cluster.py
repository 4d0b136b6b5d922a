"""K-means under the pairwise within-group sum of squares, plus silhouette
scoring.

The objective here is the pairwise form: W = (1/2) sum over same-cluster
ordered pairs of squared Euclidean distance, which reduces to
sum_k n_k * SSE_k. That is not the plain SSE Lloyd iterations minimize
(the n_k weighting reacts to cluster sizes), and the W-optimal partition
need not be a Voronoi partition at all, so each restart runs two phases:

1. Lloyd iterations, each guarded: if an assignment step raises W the
   step is rolled back and the phase stops.
2. Greedy single-point descent on W itself (move a point to another
   cluster whenever that lowers W, using running cluster sums), until no
   move improves.

The recorded W is non-increasing across every phase, by construction and
by test, and the descent phase is what lets best-of-restarts approach the
exhaustive-partition optimum.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError

DEFAULT_RESTARTS = 10
DEFAULT_MAX_ITERS = 300
DEFAULT_TOL = 1e-6

_W_SLACK = 1e-9  # tolerance for float noise in the monotonicity guard


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray  # (k, dim), rows are cluster means of the final partition
    wgss: float
    restarts_used: int
    seed: int
    wgss_trace: list[float] = field(default_factory=list)  # winning restart, per iteration


@dataclass
class Assignment:
    labels: np.ndarray  # (n,) cluster id per point
    sizes: list[int]
    ids: Optional[list[str]] = None

    def mapping(self) -> dict:
        keys = self.ids if self.ids is not None else range(len(self.labels))
        return {key: int(c) for key, c in zip(keys, self.labels)}


def wgss(points: np.ndarray, labels: np.ndarray) -> float:
    """Pairwise within-group sum of squares of a partition.

    Computed as sum_k n_k * SSE_k, which equals half the sum of squared
    distances over all same-cluster ordered pairs.
    """
    total = 0.0
    for c in np.unique(labels):
        members = points[labels == c]
        mu = members.mean(axis=0)
        total += len(members) * float(((members - mu) ** 2).sum())
    return total


def _sq_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d = (
        (points**2).sum(axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + (centroids**2).sum(axis=1)[None, :]
    )
    return np.maximum(d, 0.0)


def _repair_empty(points, labels, centroids):
    """Reseed each empty cluster to the point farthest from its own centroid."""
    k = len(centroids)
    taken: set[int] = set()
    for c in range(k):
        if (labels == c).any():
            continue
        dist = _sq_distances(points, centroids)
        own = dist[np.arange(len(points)), labels]
        # leave singleton clusters alone, stealing their point just moves the hole
        sizes = np.bincount(labels, minlength=k)
        own[sizes[labels] <= 1] = -1.0
        for i in taken:
            own[i] = -1.0
        far = int(own.argmax())
        centroids = centroids.copy()
        centroids[c] = points[far]
        labels = labels.copy()
        labels[far] = c
        taken.add(far)
    return labels, centroids


def _means(points, labels, k, fallback):
    out = fallback.copy()
    for c in range(k):
        members = points[labels == c]
        if len(members):
            out[c] = members.mean(axis=0)
    return out


def _refine_pairwise(points, labels, k, trace, max_passes=100):
    """Greedy descent on the pairwise W: move single points between
    clusters while any move lowers the objective.

    Uses W = sum_k (n_k * Q_k - |S_k|^2) with running per-cluster sums
    S_k, squared-norm sums Q_k, and sizes n_k, so evaluating a move is
    O(k * dim). Source clusters are never emptied."""
    if k == 1:
        return labels
    labels = labels.copy()
    norms2 = (points**2).sum(axis=1)
    dim = points.shape[1]
    sums = np.zeros((k, dim))
    qsum = np.zeros(k)
    counts = np.zeros(k, dtype=np.int64)
    for c in range(k):
        members = labels == c
        sums[c] = points[members].sum(axis=0)
        qsum[c] = norms2[members].sum()
        counts[c] = int(members.sum())
    snorm2 = (sums**2).sum(axis=1)

    for _ in range(max_passes):
        moved = False
        for i in range(len(points)):
            src = int(labels[i])
            if counts[src] <= 1:
                continue
            x = points[i]
            q = norms2[i]
            sx = sums @ x
            w_now = counts * qsum - snorm2
            w_more = (counts + 1) * (qsum + q) - (snorm2 + 2.0 * sx + q)
            w_src_less = (counts[src] - 1) * (qsum[src] - q) - (
                snorm2[src] - 2.0 * sx[src] + q
            )
            delta = (w_src_less - w_now[src]) + (w_more - w_now)
            delta[src] = 0.0
            dst = int(delta.argmin())
            if delta[dst] < -_W_SLACK:
                sums[src] -= x
                qsum[src] -= q
                counts[src] -= 1
                snorm2[src] = sums[src] @ sums[src]
                sums[dst] += x
                qsum[dst] += q
                counts[dst] += 1
                snorm2[dst] = sums[dst] @ sums[dst]
                labels[i] = dst
                moved = True
        if not moved:
            break
        trace.append(wgss(points, labels))
    return labels


def _one_restart(points, k, rng, max_iters, tol):
    """Guarded Lloyd iterations, then greedy pairwise-W descent.
    Returns (labels, wgss, trace)."""
    distinct = np.unique(points, axis=0)
    centroids = distinct[rng.choice(len(distinct), size=k, replace=False)].copy()

    best_labels = None
    trace: list[float] = []
    for _ in range(max_iters):
        labels = _sq_distances(points, centroids).argmin(axis=1)
        labels, centroids = _repair_empty(points, labels, centroids)
        w = wgss(points, labels)
        if trace and w > trace[-1] + _W_SLACK:
            break  # the pairwise objective rose: keep the previous partition
        trace.append(w)
        best_labels = labels
        new_centroids = _means(points, labels, k, centroids)
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift < tol:
            break
    best_labels = _refine_pairwise(points, best_labels, k, trace)
    return best_labels, wgss(points, best_labels), trace


def kmeans(
    points: np.ndarray,
    k: int,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 1,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    ids: Optional[Sequence[str]] = None,
    workers: int = 1,
) -> tuple[ClusterModel, Assignment]:
    """Best-of-restarts k-means. Restart seeds spawn from the master seed,
    so `restarts=m` reproduces the first m restarts of any larger run and
    the result is independent of worker scheduling."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) == 0:
        raise DataError("points must be a non-empty 2-D array")
    if not np.isfinite(points).all():
        raise DataError("points contain non-finite values")
    if k < 1:
        raise DataError(f"k must be at least 1, got {k}")
    n_distinct = len(np.unique(points, axis=0))
    if k > n_distinct:
        raise DataError(f"k={k} exceeds the {n_distinct} distinct points")
    if restarts < 1:
        raise DataError("restarts must be at least 1")
    if ids is not None and len(ids) != len(points):
        raise DataError("ids length does not match points")

    seeds = np.random.SeedSequence(seed).spawn(restarts)

    def job(i):
        return _one_restart(points, k, np.random.default_rng(seeds[i]), max_iters, tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(restarts)))
    else:
        results = [job(i) for i in range(restarts)]

    best_i = min(range(restarts), key=lambda i: (results[i][1], i))
    labels, w, trace = results[best_i]
    centroids = np.vstack([points[labels == c].mean(axis=0) for c in range(k)])
    model = ClusterModel(
        k=k, centroids=centroids, wgss=w, restarts_used=restarts, seed=seed,
        wgss_trace=trace,
    )
    sizes = np.bincount(labels, minlength=k).tolist()
    assignment = Assignment(labels=labels, sizes=sizes,
                            ids=list(ids) if ids is not None else None)
    return model, assignment


def silhouette(points: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean and per-point silhouette scores under Euclidean distance.

    a(x) is the mean distance to the other members of x's cluster, b(x)
    the smallest mean distance to any foreign cluster. Singletons score 0.
    """
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    clusters = np.unique(labels)
    if len(clusters) < 2:
        raise DataError("silhouette needs at least 2 clusters")

    dist = np.sqrt(_sq_distances(points, points))
    n = len(points)
    scores = np.zeros(n)
    cluster_sums = np.stack([dist[:, labels == c].sum(axis=1) for c in clusters], axis=1)
    counts = np.array([(labels == c).sum() for c in clusters])

    for i in range(n):
        own = int(np.where(clusters == labels[i])[0][0])
        if counts[own] == 1:
            continue  # singleton: a(x) undefined, score stays 0
        a = cluster_sums[i, own] / (counts[own] - 1)
        foreign = [cluster_sums[i, j] / counts[j] for j in range(len(clusters)) if j != own]
        b = min(foreign)
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean()), scores


def silhouette_sweep(
    points: np.ndarray,
    k_list: Sequence[int],
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 1,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
) -> list[dict]:
    """Cluster at each k and score; rows are (k, wgss, silhouette)."""
    if any(k < 2 for k in k_list):
        raise DataError("sweep requires every k to be at least 2")
    rows = []
    for k in k_list:
        model, assignment = kmeans(points, k, restarts=restarts, seed=seed,
                                   max_iters=max_iters, tol=tol)
        mean_s, _ = silhouette(points, assignment.labels)
        rows.append({"k": int(k), "wgss": model.wgss, "silhouette": mean_s})
    return rows
