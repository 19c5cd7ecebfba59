"""Align textual chains with visual chains.

Singular characters are matched one-to-one by running the Kuhn-Munkres
(Hungarian) algorithm on a chain-similarity matrix; each leftover visual
chain is then offered to its best plural/group textual chain and attached
when the score clears a threshold.  Similarities come either from the
chains' sentence/image occupancy patterns or from averaged embedding
similarity over all mention/face pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import DataError
from .model import (
    AnnotatedStory,
    Number,
    SimilarityMatrix,
    TextChain,
    VisualChain,
    multimodal_chain,
)


class GroundingMethod(str, Enum):
    DISTRIBUTIONAL = "dist"
    EMBEDDING = "embed"


@dataclass(frozen=True)
class GroundingConfig:
    method: GroundingMethod = GroundingMethod.DISTRIBUTIONAL
    plural_threshold: float = 0.6
    drop_zero_similarity: bool = True

    def validate(self) -> None:
        if not (0.0 <= self.plural_threshold <= 1.0):
            raise ValueError("plural_threshold must lie in [0, 1]")


@dataclass(frozen=True)
class Alignment:
    """Matching results: one-to-one singular pairs plus plural attachments.

    ``pairs`` holds (text_chain_index, visual_chain_index, score);
    ``plural_attachments`` holds (visual_chain_index, text_chain_index,
    score).  Indices refer to the full chain lists handed to ``ground``.
    """

    pairs: tuple[tuple[int, int, float], ...]
    plural_attachments: tuple[tuple[int, int, float], ...]


def presence_vector(chain: TextChain | VisualChain, length: int) -> list[int]:
    """Binary occupancy vector: 1 where the chain has a mention/face."""
    support = (
        chain.sentence_support() if isinstance(chain, TextChain) else chain.image_support()
    )
    bad = [i for i in support if not (0 <= i < length)]
    if bad:
        raise DataError(f"chain {chain.chain_id!r} occupies out-of-range slot {bad[0]}")
    return [1 if i in support else 0 for i in range(length)]


def distributional_similarity(t: Sequence[int], v: Sequence[int]) -> float:
    """Dot product over the product of L1 norms of two binary vectors."""
    if len(t) != len(v):
        raise ValueError("presence vectors differ in length")
    dot = sum(a * b for a, b in zip(t, v))
    t1, v1 = sum(t), sum(v)
    if t1 == 0 or v1 == 0:
        raise ValueError("presence vectors must be nonzero")
    return dot / (t1 * v1)


def embedding_chain_similarity(text_vectors, visual_vectors) -> float:
    """Mean pairwise similarity between two vector bags, mapped into [0, 1].

    Pairwise similarity is (cosine + 1) / 2 so the plural threshold applies
    on the same scale as the distributional method.
    """
    a = np.asarray(text_vectors, dtype=float)
    b = np.asarray(visual_vectors, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise DataError("embedding bags must be non-empty and share one dimension")
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if np.any(na == 0) or np.any(nb == 0):
        raise DataError("zero-norm embedding vector")
    cos = (a @ b.T) / np.outer(na, nb)
    sim = (cos + 1.0) / 2.0
    return float(min(1.0, max(0.0, sim.mean())))


def _text_chain_vectors(chain: TextChain, embeddings) -> list:
    if embeddings is None:
        raise DataError(f"text chain {chain.chain_id!r}: no mention embeddings supplied")
    return [embeddings.mention_vector(m.surface) for m in chain.mentions]


def _visual_chain_vectors(chain: VisualChain, embeddings) -> list:
    vectors = []
    for face in chain.faces:
        if face.embedding is not None:
            vectors.append(face.embedding)
        elif embeddings is not None:
            vectors.append(embeddings.face_vector(face))
        else:
            raise DataError(f"visual chain {chain.chain_id!r}: face has no embedding")
    return vectors


def _chain_similarity(
    text_chain: TextChain,
    visual_chain: VisualChain,
    story: AnnotatedStory,
    embeddings,
    cfg: GroundingConfig,
) -> float:
    if cfg.method == GroundingMethod.DISTRIBUTIONAL:
        return distributional_similarity(
            presence_vector(text_chain, story.length),
            presence_vector(visual_chain, story.length),
        )
    try:
        return embedding_chain_similarity(
            _text_chain_vectors(text_chain, embeddings),
            _visual_chain_vectors(visual_chain, embeddings),
        )
    except DataError as err:
        raise DataError(f"{err} (while scoring {text_chain.chain_id!r} vs {visual_chain.chain_id!r})")


def build_similarity_matrix(
    text_chains: Sequence[TextChain],
    visual_chains: Sequence[VisualChain],
    story: AnnotatedStory,
    embeddings,
    cfg: GroundingConfig,
) -> SimilarityMatrix:
    """Similarity matrix over the singular text chains (rows) and all visual
    chains (columns); plural/group rows are handled by attachment instead."""
    singular = [c for c in text_chains if c.number == Number.SINGULAR]
    values: list[float] = []
    for t in singular:
        for v in visual_chains:
            values.append(_chain_similarity(t, v, story, embeddings, cfg))
    return SimilarityMatrix(rows=len(singular), cols=len(visual_chains), values=tuple(values))


def _matrix_array(matrix) -> np.ndarray:
    if isinstance(matrix, SimilarityMatrix):
        arr = np.asarray(matrix.values, dtype=float).reshape(matrix.rows, matrix.cols)
    else:
        arr = np.asarray(matrix, dtype=float)
        if arr.ndim != 2:
            raise ValueError("similarity matrix must be two-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError("similarity matrix contains non-finite entries")
    return arr


def _min_cost_assignment(cost: np.ndarray) -> list[int]:
    """Square min-cost assignment via the O(n^3) potentials method.

    Returns the column assigned to each row.
    """
    n = cost.shape[0]
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match = [0] * (n + 1)  # match[j] = row (1-based) assigned to column j
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [math.inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0, delta, j1 = match[j0], math.inf, 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    result = [0] * n
    for j in range(1, n + 1):
        if match[j]:
            result[match[j] - 1] = j - 1
    return result


def kuhn_munkres(matrix) -> list[tuple[int, int]]:
    """Maximum-total-similarity matching of size min(rows, cols).

    The rectangular matrix is padded internally to square with
    zero-similarity dummies; dummy pairs never appear in the output.
    """
    arr = _matrix_array(matrix)
    rows, cols = arr.shape
    if rows == 0 or cols == 0:
        return []
    n = max(rows, cols)
    padded = np.zeros((n, n), dtype=float)
    padded[:rows, :cols] = arr
    assignment = _min_cost_assignment(-padded)
    pairs = [(r, c) for r, c in enumerate(assignment) if r < rows and c < cols]
    pairs.sort()
    return pairs


def attach_plural_group(
    plural_group_chains: Sequence[TextChain],
    visual_chains: Sequence[VisualChain],
    story: AnnotatedStory,
    embeddings,
    cfg: GroundingConfig,
    exclude_visual: frozenset[int] = frozenset(),
) -> list[tuple[int, int, float]]:
    """Offer each unmatched visual chain to its best plural/group chain.

    Returns (visual_index, plural_chain_index, score) triples for scores
    strictly above the threshold; indices refer to the given sequences.
    One plural/group chain may collect many visual chains.
    """
    cfg.validate()
    attachments: list[tuple[int, int, float]] = []
    if not plural_group_chains:
        return attachments
    for j, visual in enumerate(visual_chains):
        if j in exclude_visual:
            continue
        best_idx, best_score = None, -1.0
        for i, text in enumerate(plural_group_chains):
            score = _chain_similarity(text, visual, story, embeddings, cfg)
            if score > best_score:
                best_idx, best_score = i, score
        if best_idx is not None and best_score > cfg.plural_threshold:
            attachments.append((j, best_idx, best_score))
    return attachments


def ground(
    text_chains: Sequence[TextChain],
    visual_chains: Sequence[VisualChain],
    story: AnnotatedStory,
    embeddings=None,
    cfg: GroundingConfig = GroundingConfig(),
) -> Alignment:
    """Full alignment: singular matching followed by plural attachment."""
    cfg.validate()
    singular_indices = [i for i, c in enumerate(text_chains) if c.number == Number.SINGULAR]
    plural_indices = [i for i, c in enumerate(text_chains) if c.number != Number.SINGULAR]
    matrix = build_similarity_matrix(text_chains, visual_chains, story, embeddings, cfg)
    pairs: list[tuple[int, int, float]] = []
    for row, col in kuhn_munkres(matrix):
        score = matrix.at(row, col)
        if cfg.drop_zero_similarity and score == 0.0:
            continue
        pairs.append((singular_indices[row], col, score))
    matched_visual = frozenset(col for _, col, _ in pairs)
    raw = attach_plural_group(
        [text_chains[i] for i in plural_indices],
        visual_chains,
        story,
        embeddings,
        cfg,
        exclude_visual=matched_visual,
    )
    attachments = [(j, plural_indices[i], score) for j, i, score in raw]
    return Alignment(pairs=tuple(sorted(pairs)), plural_attachments=tuple(sorted(attachments)))


def _merge_visual(chains: Sequence[VisualChain]) -> VisualChain:
    faces = sorted(
        (f for c in chains for f in c.faces),
        key=lambda f: (f.image_index, f.box.x, f.box.y, f.box.w, f.box.h),
    )
    chain_id = "+".join(c.chain_id for c in chains)
    return VisualChain(chain_id=chain_id, faces=tuple(faces))


def assemble_multimodal(
    text_chains: Sequence[TextChain],
    visual_chains: Sequence[VisualChain],
    alignment: Alignment,
) -> list:
    """Merge aligned chains into multimodal characters.

    Every chain appears exactly once: singular pairs become bimodal
    characters, visual chains attached to a plural/group chain merge into
    that character's visual side, and everything unmatched stays uni-modal.
    Output is sorted by importance (descending), ties by earliest
    occurrence.
    """
    visual_of_text: dict[int, list[int]] = {}
    consumed_visual: set[int] = set()
    for t, v, _ in alignment.pairs:
        visual_of_text.setdefault(t, []).append(v)
        consumed_visual.add(v)
    for v, t, _ in alignment.plural_attachments:
        visual_of_text.setdefault(t, []).append(v)
        consumed_visual.add(v)

    assembled = []
    for i, text in enumerate(text_chains):
        attached = sorted(visual_of_text.get(i, []))
        if not attached:
            visual: Optional[VisualChain] = None
        elif len(attached) == 1:
            visual = visual_chains[attached[0]]
        else:
            visual = _merge_visual([visual_chains[v] for v in attached])
        assembled.append(multimodal_chain("", text, visual))
    for j, visual in enumerate(visual_chains):
        if j not in consumed_visual:
            assembled.append(multimodal_chain("", None, visual))

    assembled.sort(key=lambda c: (-c.importance, c.occurrence_key()))
    return [
        multimodal_chain(f"m{i}", chain.text, chain.visual)
        for i, chain in enumerate(assembled)
    ]
