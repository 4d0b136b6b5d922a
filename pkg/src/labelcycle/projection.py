"""2-D projections for visualization: exact PCA and a desk-scale t-SNE.

Both are deterministic under a fixed seed. The t-SNE is the plain O(n^2)
algorithm (per-point bandwidths by bisection, early exaggeration, momentum
plus per-coordinate gains), intended for corpora small enough to look at,
not for speed.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DataError

TSNE_MAX_POINTS = 5000


@dataclass
class ProjectionResult:
    method: str  # "pca" | "tsne"
    coords: np.ndarray  # (n, c)
    params: dict
    ids: Optional[list[str]] = None
    explained_variance: Optional[list[float]] = None  # pca only, full spectrum
    kl_trace: Optional[list[float]] = None  # tsne only
    degenerate: bool = False

    def mapping(self) -> dict:
        keys = self.ids if self.ids is not None else [str(i) for i in range(len(self.coords))]
        return {k: tuple(float(v) for v in row) for k, row in zip(keys, self.coords)}


def pca(
    points: np.ndarray,
    n_components: int = 2,
    ids: Optional[Sequence[str]] = None,
) -> ProjectionResult:
    """Project mean-centered data onto the top principal components.

    Components are orthonormal with a fixed sign convention (largest
    coefficient positive), so the result does not depend on row order.
    explained_variance holds the full descending ratio spectrum.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) < 2:
        raise DataError("pca needs at least 2 points")
    if not np.isfinite(points).all():
        raise DataError("points contain non-finite values")
    if not 1 <= n_components <= points.shape[1]:
        raise DataError(
            f"n_components must be in 1..{points.shape[1]}, got {n_components}"
        )
    centered = points - points.mean(axis=0)
    # SVD of the centered data; right singular vectors are the components
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    signs = np.sign(vt[np.arange(len(vt)), np.abs(vt).argmax(axis=1)])
    signs[signs == 0] = 1.0
    vt = vt * signs[:, None]

    total = float((svals**2).sum())
    degenerate = total <= 1e-30
    ratios = [0.0] * len(svals) if degenerate else [float(s * s / total) for s in svals]
    coords = (
        np.zeros((len(points), n_components))
        if degenerate
        else centered @ vt[:n_components].T
    )
    return ProjectionResult(
        method="pca",
        coords=coords,
        params={"n_components": n_components},
        ids=list(ids) if ids is not None else None,
        explained_variance=ratios,
        degenerate=degenerate,
        kl_trace=None,
    )


def pca_components(points: np.ndarray, n_components: int) -> np.ndarray:
    """The orthonormal component rows themselves (for invariant tests and
    full-basis reconstruction)."""
    points = np.asarray(points, dtype=np.float64)
    centered = points - points.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    signs = np.sign(vt[np.arange(len(vt)), np.abs(vt).argmax(axis=1)])
    signs[signs == 0] = 1.0
    return (vt * signs[:, None])[:n_components]


def _conditional_probs(points: np.ndarray, perplexity: float) -> np.ndarray:
    """Row-stochastic P(j|i) with per-point bandwidths bisected so each
    row's entropy matches log(perplexity)."""
    n = len(points)
    d2 = (
        (points**2).sum(axis=1)[:, None]
        - 2.0 * points @ points.T
        + (points**2).sum(axis=1)[None, :]
    )
    np.fill_diagonal(d2, 0.0)
    d2 = np.maximum(d2, 0.0)

    target = np.log(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        beta_lo, beta_hi = 0.0, np.inf
        beta = 1.0
        row = np.delete(d2[i], i)
        for _ in range(64):
            w = np.exp(-row * beta)
            sw = w.sum()
            if sw <= 0:
                h = 0.0
                p = w
            else:
                p = w / sw
                nz = p > 0
                h = float(-(p[nz] * np.log(p[nz])).sum())
            if abs(h - target) < 1e-7:
                break
            if h > target:  # too flat: tighten the kernel
                beta_lo = beta
                beta = beta * 2.0 if beta_hi == np.inf else (beta + beta_hi) / 2.0
            else:
                beta_hi = beta
                beta = (beta + beta_lo) / 2.0
        P[i, np.arange(n) != i] = p
    return P


def tsne(
    points: np.ndarray,
    perplexity: float = 30.0,
    iters: int = 1000,
    seed: int = 1,
    ids: Optional[Sequence[str]] = None,
    learning_rate: float = 200.0,
    early_exaggeration: float = 12.0,
    exaggeration_iters: int = 250,
) -> ProjectionResult:
    """Exact t-SNE to 2 dimensions.

    The KL divergence is recorded every iteration; it must not rise over
    the second half of the run (checked here, and cheap to re-verify from
    kl_trace)."""
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if points.ndim != 2 or n < 4:
        raise DataError("tsne needs at least 4 points")
    if n > TSNE_MAX_POINTS:
        raise DataError(f"tsne is exact O(n^2); {n} points exceeds {TSNE_MAX_POINTS}")
    if not np.isfinite(points).all():
        raise DataError("points contain non-finite values")
    if not 1.0 <= perplexity < n / 3:
        raise DataError(f"perplexity must be in [1, n/3); got {perplexity} for n={n}")
    if iters < 2:
        raise DataError("iters must be at least 2")

    cond = _conditional_probs(points, perplexity)
    P = (cond + cond.T) / (2.0 * n)
    P = np.maximum(P, 1e-12)

    rng = np.random.default_rng(seed)
    Y = rng.normal(scale=1e-4, size=(n, 2))
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)
    kl_trace: list[float] = []
    mask = ~np.eye(n, dtype=bool)

    def q_and_kl(coords):
        d2 = (
            (coords**2).sum(axis=1)[:, None]
            - 2.0 * coords @ coords.T
            + (coords**2).sum(axis=1)[None, :]
        )
        inv = 1.0 / (1.0 + np.maximum(d2, 0.0))
        np.fill_diagonal(inv, 0.0)
        q = np.maximum(inv / inv.sum(), 1e-12)
        # KL against the unexaggerated P: that is the actual objective
        kl = float((P[mask] * np.log(P[mask] / q[mask])).sum())
        return inv, q, kl

    lr = learning_rate
    prev_Y = None
    for t in range(iters):
        exaggerating = t < exaggeration_iters
        inv, Q, kl = q_and_kl(Y)

        # momentum can overshoot; once exaggeration ends, a step that
        # raised the objective is rolled back and the step size halved,
        # so the recorded KL never rises after the transient
        if not exaggerating and kl_trace and kl > kl_trace[-1] + 1e-12 and prev_Y is not None:
            Y = prev_Y
            velocity = np.zeros_like(Y)
            gains = np.ones_like(Y)
            lr *= 0.5
            inv, Q, kl = q_and_kl(Y)
        kl_trace.append(kl)

        P_eff = P * early_exaggeration if exaggerating else P
        coeff = (P_eff - Q) * inv
        grad = 4.0 * ((np.diag(coeff.sum(axis=1)) - coeff) @ Y)

        momentum = 0.5 if exaggerating else 0.8
        same_dir = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_dir, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        velocity = momentum * velocity - lr * gains * grad
        prev_Y = Y
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)

    return ProjectionResult(
        method="tsne",
        coords=Y,
        params={
            "perplexity": perplexity,
            "iters": iters,
            "seed": seed,
            "learning_rate": learning_rate,
            "early_exaggeration": early_exaggeration,
            "exaggeration_iters": exaggeration_iters,
        },
        ids=list(ids) if ids is not None else None,
        kl_trace=kl_trace,
    )


# -- CSV export ----------------------------------------------------------------------


def export_projection(
    result: ProjectionResult,
    assignment: Optional[Mapping[str, int]] = None,
    labels: Optional[Mapping[str, str]] = None,
) -> str:
    """CSV with rows post_id,x,y,cluster_id,label. Coordinates are written
    with full round-trip precision; label and cluster cells are empty when
    unknown."""
    if result.coords.shape[1] != 2:
        raise DataError("export needs 2-D coordinates")
    if result.ids is None:
        raise DataError("projection has no post ids to export")
    if assignment is not None:
        missing = [p for p in result.ids if p not in assignment]
        if missing:
            raise DataError(f"assignment is missing projected post {missing[0]!r}")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["post_id", "x", "y", "cluster_id", "label"])
    for post_id, (x, y) in zip(result.ids, result.coords):
        cluster = "" if assignment is None else str(int(assignment[post_id]))
        label = "" if labels is None else labels.get(post_id, "")
        writer.writerow([post_id, repr(float(x)), repr(float(y)), cluster, label])
    return buf.getvalue()


def import_projection(text: str) -> list[dict]:
    """Parse export_projection output back into row dicts."""
    reader = csv.DictReader(io.StringIO(text))
    rows = []
    for row in reader:
        rows.append(
            {
                "post_id": row["post_id"],
                "x": float(row["x"]),
                "y": float(row["y"]),
                "cluster_id": int(row["cluster_id"]) if row["cluster_id"] else None,
                "label": row["label"] or None,
            }
        )
    return rows


def write_projection_csv(
    result: ProjectionResult,
    path: str | Path,
    assignment: Optional[Mapping[str, int]] = None,
    labels: Optional[Mapping[str, str]] = None,
) -> None:
    Path(path).write_text(export_projection(result, assignment, labels), encoding="utf-8")
