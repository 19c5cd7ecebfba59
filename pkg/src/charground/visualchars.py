"""Visual co-reference: cluster face instances into per-character chains.

Plain Lloyd k-means with k-means++ seeding, restarted a fixed number of
times, scored over a candidate range of k with the Calinski-Harabasz index.
Everything is deterministic given the config seed; per-restart generators
are derived from (seed, restart, k).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError
from .model import FaceInstance, VisualChain


@dataclass(frozen=True)
class ClusteringConfig:
    k_min: int = 2
    k_max: int = 10
    max_iterations: int = 100
    tolerance: float = 1e-6  # stop when inertia improves by no more than this
    seed: int = 0
    restarts: int = 8

    def validate(self) -> None:
        if not (1 <= self.k_min <= self.k_max):
            raise ValueError(f"need 1 <= k_min <= k_max, got [{self.k_min}, {self.k_max}]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative 64-bit integer")


def _as_points(points) -> np.ndarray:
    try:
        pts = np.asarray(points, dtype=float)
    except (TypeError, ValueError) as err:
        raise DataError(f"points must share one embedding dimension: {err}") from None
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.dtype == object:
        raise DataError("points must share one embedding dimension")
    if not np.all(np.isfinite(pts)):
        raise DataError("points contain non-finite values")
    return pts


def _sq_dists(pts: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = pts[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _plus_plus_init(pts: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(pts)
    first = int(rng.integers(n))
    chosen = [first]
    d2 = ((pts - pts[first]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))  # duplicates: fall back to uniform choice
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            idx = min(idx, n - 1)
        chosen.append(idx)
        d2 = np.minimum(d2, ((pts - pts[idx]) ** 2).sum(axis=1))
    return pts[chosen].copy()


def _repair_empty(pts: np.ndarray, centers: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Fill each empty cluster with the point farthest from its centroid."""
    for empty in range(k):
        if np.any(labels == empty):
            continue
        costs = ((pts - centers[labels]) ** 2).sum(axis=1)
        counts = np.bincount(labels, minlength=k)
        movable = np.flatnonzero(counts[labels] > 1)
        victim = movable[int(np.argmax(costs[movable]))]
        labels[victim] = empty
    return labels


def lloyd(
    points,
    initial_centers,
    max_iterations: int = 100,
    tolerance: float = 1e-6,
) -> tuple[np.ndarray, float, list[float]]:
    """Run Lloyd iterations from the given centers.

    Returns (labels, inertia, per-iteration inertia history).  Inertia is
    non-increasing across iterations; this is asserted.
    """
    pts = _as_points(points)
    centers = np.array(initial_centers, dtype=float)
    k = len(centers)
    history: list[float] = []
    prev_labels = None
    labels = np.zeros(len(pts), dtype=int)
    inertia = float("inf")
    for _ in range(max_iterations):
        d2 = _sq_dists(pts, centers)
        labels = d2.argmin(axis=1)
        labels = _repair_empty(pts, centers, labels, k)
        centers = np.stack([pts[labels == j].mean(axis=0) for j in range(k)])
        inertia = float(((pts - centers[labels]) ** 2).sum())
        history.append(inertia)
        if len(history) >= 2:
            assert history[-1] <= history[-2], "inertia increased during Lloyd iteration"
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            break
        if len(history) >= 2 and history[-2] - history[-1] <= tolerance:
            break
        prev_labels = labels
    return labels, inertia, history


def kmeans(points, k: int, cfg: ClusteringConfig) -> tuple[list[int], float]:
    """Best-of-restarts k-means; every cluster non-empty; deterministic."""
    cfg.validate()
    pts = _as_points(points)
    n = len(pts)
    if k < 1:
        raise ValueError("k must be positive")
    if k > n:
        raise ValueError(f"k={k} exceeds number of points ({n})")
    best_labels, best_inertia = None, float("inf")
    for restart in range(cfg.restarts):
        rng = np.random.default_rng([cfg.seed, restart, k])
        centers = _plus_plus_init(pts, k, rng)
        labels, inertia, _ = lloyd(pts, centers, cfg.max_iterations, cfg.tolerance)
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia
    return [int(v) for v in best_labels], best_inertia


def calinski_harabasz(points, labels) -> float:
    """Between/within dispersion ratio CH = (B / (k-1)) / (W / (n-k)).

    Positive infinity when clusters are perfectly separated duplicates
    (W = 0, B > 0); undefined (ValueError) for k < 2, k >= n, or a fully
    degenerate point set.
    """
    pts = _as_points(points)
    labels = np.asarray(labels)
    n = len(pts)
    uniq = np.unique(labels)
    k = len(uniq)
    if k < 2 or k >= n:
        raise ValueError(f"Calinski-Harabasz needs 2 <= k <= n-1, got k={k}, n={n}")
    grand = pts.mean(axis=0)
    between = 0.0
    within = 0.0
    for lab in uniq:
        member = pts[labels == lab]
        center = member.mean(axis=0)
        between += len(member) * float(((center - grand) ** 2).sum())
        within += float(((member - center) ** 2).sum())
    if within == 0.0:
        if between > 0.0:
            return float("inf")
        raise ValueError("Calinski-Harabasz undefined: zero dispersion")
    return (between / (k - 1)) / (within / (n - k))


def _face_sort_key(face: FaceInstance):
    return (face.image_index, face.box.x, face.box.y, face.box.w, face.box.h)


def _singleton_chains(faces: Sequence[FaceInstance]) -> list[VisualChain]:
    ordered = sorted(faces, key=_face_sort_key)
    return [VisualChain(chain_id=f"v{i}", faces=(f,)) for i, f in enumerate(ordered)]


def cluster_faces(faces: Sequence[FaceInstance], cfg: ClusteringConfig) -> list[VisualChain]:
    """Cluster faces into visual chains, picking k by Calinski-Harabasz score.

    Candidate k ranges over [k_min, min(k_max, n-1)]; ties prefer the
    smallest k.  Sequences too small to score any k (n <= 2 with the
    defaults) fall back to one singleton chain per face.
    """
    cfg.validate()
    if not faces:
        return []
    for f in faces:
        if f.embedding is None:
            raise DataError(f"face at image {f.image_index} has no embedding")
    dims = {len(f.embedding) for f in faces}
    if len(dims) > 1:
        raise DataError(f"inconsistent embedding dimensions {sorted(dims)}")
    if len(faces) == 1:
        return [VisualChain(chain_id="v0", faces=(faces[0],))]

    n = len(faces)
    k_hi = min(cfg.k_max, n - 1)
    if k_hi < cfg.k_min:
        return _singleton_chains(faces)
    pts = np.array([f.embedding for f in faces], dtype=float)
    best_k, best_labels, best_score = None, None, -np.inf
    for k in range(cfg.k_min, k_hi + 1):
        labels, _ = kmeans(pts, k, cfg)
        try:
            score = calinski_harabasz(pts, labels)
        except ValueError:
            continue
        if score > best_score:
            best_k, best_labels, best_score = k, labels, score
    if best_k is None:
        return _singleton_chains(faces)

    clusters: dict[int, list[FaceInstance]] = {}
    for face, lab in zip(faces, best_labels):
        clusters.setdefault(lab, []).append(face)
    groups = sorted(
        (sorted(group, key=_face_sort_key) for group in clusters.values()),
        key=lambda g: _face_sort_key(g[0]),
    )
    return [VisualChain(chain_id=f"v{i}", faces=tuple(g)) for i, g in enumerate(groups)]
