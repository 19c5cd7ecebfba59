"""Domain types shared by the whole toolkit.

Every type is an immutable (frozen) dataclass and safe to share across
threads.  Construction does not validate cross-field invariants; use
``validate_story`` to collect violations as data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class Number(str, Enum):
    """Number class of a mention or chain (group dominates plural)."""

    SINGULAR = "singular"
    PLURAL = "plural"
    GROUP = "group"


class MentionKind(str, Enum):
    NOUN = "noun"
    PRONOUN = "pronoun"


@dataclass(frozen=True)
class Token:
    text: str
    pos: str  # Penn Treebank tag
    char_start: int
    char_end: int


@dataclass(frozen=True)
class Sentence:
    index: int
    text: str
    tokens: tuple[Token, ...]


@dataclass(frozen=True)
class ImageDesc:
    index: int
    width: int
    height: int


@dataclass(frozen=True)
class Mention:
    sentence_index: int
    token_start: int  # half-open token span [start, end)
    token_end: int
    surface: str
    number: Number
    kind: MentionKind

    def position(self) -> tuple[int, int]:
        return (self.sentence_index, self.token_start)


@dataclass(frozen=True)
class TextChain:
    chain_id: str
    mentions: tuple[Mention, ...]
    number: Number

    def sentence_support(self) -> frozenset[int]:
        return frozenset(m.sentence_index for m in self.mentions)


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    w: float
    h: float

    def area(self) -> float:
        return self.w * self.h

    def contains(self, other: "BoundingBox") -> bool:
        """True when ``other`` lies entirely inside this box (borders count)."""
        return (
            other.x >= self.x
            and other.y >= self.y
            and other.x + other.w <= self.x + self.w
            and other.y + other.h <= self.y + self.h
        )


@dataclass(frozen=True)
class FaceInstance:
    image_index: int
    box: BoundingBox
    embedding: Optional[tuple[float, ...]] = None

    def position(self) -> tuple[int, float, float]:
        return (self.image_index, self.box.x, self.box.y)


@dataclass(frozen=True)
class VisualChain:
    chain_id: str
    faces: tuple[FaceInstance, ...]

    def image_support(self) -> frozenset[int]:
        return frozenset(f.image_index for f in self.faces)


@dataclass(frozen=True)
class MultiModalChain:
    chain_id: str
    text: Optional[TextChain]
    visual: Optional[VisualChain]
    importance: int

    def occurrence_key(self) -> tuple[float, float, float, float]:
        """Earliest-occurrence ordering key.

        (first mention sentence, first mention token start, first face image,
        first face box x); absent sides sort last on their components.
        """
        s = t = i = x = math.inf
        if self.text is not None and self.text.mentions:
            first = self.text.mentions[0]
            s, t = float(first.sentence_index), float(first.token_start)
        if self.visual is not None and self.visual.faces:
            face = self.visual.faces[0]
            i, x = float(face.image_index), float(face.box.x)
        return (s, t, i, x)


def multimodal_chain(
    chain_id: str,
    text: Optional[TextChain],
    visual: Optional[VisualChain],
) -> MultiModalChain:
    """Build a multimodal chain; importance is the total mention+face count."""
    if text is None and visual is None:
        raise ValueError("multimodal chain needs at least one side")
    importance = (len(text.mentions) if text else 0) + (len(visual.faces) if visual else 0)
    return MultiModalChain(chain_id=chain_id, text=text, visual=visual, importance=importance)


@dataclass(frozen=True)
class GoldAnnotation:
    text_chains: tuple[TextChain, ...]
    visual_chains: tuple[VisualChain, ...]
    alignment: tuple[tuple[str, str], ...]  # (text_chain_id, visual_chain_id)
    importance: tuple[tuple[str, int], ...]  # (chain_id, stars 1..5)

    def stars_by_id(self) -> dict[str, int]:
        return dict(self.importance)


@dataclass(frozen=True)
class AnnotatedStory:
    story_id: str
    sentences: tuple[Sentence, ...]
    images: tuple[ImageDesc, ...]
    gold: Optional[GoldAnnotation] = None

    @property
    def length(self) -> int:
        """Number of sentence/image slots (C)."""
        return len(self.sentences)


@dataclass(frozen=True)
class SimilarityMatrix:
    rows: int
    cols: int
    values: tuple[float, ...] = field(default=())  # row-major, entries in [0, 1]

    def at(self, i: int, j: int) -> float:
        return self.values[i * self.cols + j]


def chain_number(mentions) -> Number:
    """Number class of a chain: group if any group mention, else plural if any."""
    numbers = {m.number for m in mentions}
    if Number.GROUP in numbers:
        return Number.GROUP
    if Number.PLURAL in numbers:
        return Number.PLURAL
    return Number.SINGULAR


def _validate_tokens(sentence: Sentence, out: list[str]) -> None:
    prev_end = 0
    for k, tok in enumerate(sentence.tokens):
        where = f"sentence {sentence.index} token {k}"
        if tok.char_start >= tok.char_end:
            out.append(f"{where}: empty character span")
        if tok.char_start < prev_end:
            out.append(f"{where}: overlaps or precedes previous token")
        if tok.char_end > len(sentence.text.encode("utf-8")):
            out.append(f"{where}: span exceeds sentence text")
        prev_end = max(prev_end, tok.char_end)


def _validate_box(box: BoundingBox, image: Optional[ImageDesc], where: str, out: list[str]) -> None:
    if box.w <= 0 or box.h <= 0:
        out.append(f"{where}: degenerate bounding box")
        return
    if image is not None:
        if box.x < 0 or box.y < 0 or box.x + box.w > image.width or box.y + box.h > image.height:
            out.append(f"{where}: box outside image bounds")


def _validate_text_chain(chain: TextChain, n_sentences: int, where: str, out: list[str]) -> None:
    if not chain.mentions:
        out.append(f"{where}: empty chain")
        return
    positions = [m.position() for m in chain.mentions]
    if positions != sorted(positions):
        out.append(f"{where}: mentions not in story order")
    for m in chain.mentions:
        if m.token_start < 0 or m.token_start >= m.token_end:
            out.append(f"{where}: bad mention span at sentence {m.sentence_index}")
        if not (0 <= m.sentence_index < n_sentences):
            out.append(f"{where}: mention sentence index {m.sentence_index} out of range")
    expected = chain_number(chain.mentions)
    if chain.number != expected:
        out.append(f"{where}: chain number {chain.number.value} inconsistent with mentions")


def validate_story(story: AnnotatedStory) -> list[str]:
    """Collect human-readable invariant violations; empty list means valid."""
    out: list[str] = []
    n = len(story.sentences)
    if n < 1:
        out.append("story has no sentences")
    if len(story.images) != n:
        out.append("sentence/image count mismatch")
    for i, sent in enumerate(story.sentences):
        if sent.index != i:
            out.append(f"sentence index {sent.index} at position {i} (must be contiguous 0-based)")
        _validate_tokens(sent, out)
    images_by_index: dict[int, ImageDesc] = {}
    for i, img in enumerate(story.images):
        if img.index != i:
            out.append(f"image index {img.index} at position {i} (must be contiguous 0-based)")
        if img.width <= 0 or img.height <= 0:
            out.append(f"image {img.index}: non-positive dimensions")
        images_by_index[img.index] = img

    gold = story.gold
    if gold is None:
        return out

    text_ids = set()
    for chain in gold.text_chains:
        if chain.chain_id in text_ids:
            out.append(f"duplicate text chain id {chain.chain_id!r}")
        text_ids.add(chain.chain_id)
        _validate_text_chain(chain, n, f"text chain {chain.chain_id!r}", out)
        for m in chain.mentions:
            if 0 <= m.sentence_index < n and m.token_end > len(story.sentences[m.sentence_index].tokens):
                out.append(
                    f"text chain {chain.chain_id!r}: mention span exceeds sentence {m.sentence_index} tokens"
                )

    visual_ids = set()
    dims = set()
    for chain in gold.visual_chains:
        if chain.chain_id in visual_ids:
            out.append(f"duplicate visual chain id {chain.chain_id!r}")
        visual_ids.add(chain.chain_id)
        if not chain.faces:
            out.append(f"visual chain {chain.chain_id!r}: empty chain")
        for f in chain.faces:
            where = f"visual chain {chain.chain_id!r} image {f.image_index}"
            if not (0 <= f.image_index < len(story.images)):
                out.append(f"{where}: image index out of range")
                image = None
            else:
                image = images_by_index.get(f.image_index)
            _validate_box(f.box, image, where, out)
            if f.embedding is not None:
                dims.add(len(f.embedding))
                if any(not math.isfinite(v) for v in f.embedding):
                    out.append(f"{where}: non-finite embedding value")
    if len(dims) > 1:
        out.append(f"inconsistent embedding dimensions {sorted(dims)}")

    seen_text, seen_visual = set(), set()
    for tid, vid in gold.alignment:
        if tid not in text_ids:
            out.append(f"alignment references unknown text chain {tid!r}")
        if vid not in visual_ids:
            out.append(f"alignment references unknown visual chain {vid!r}")
        if tid in seen_text:
            out.append(f"text chain {tid!r} aligned more than once")
        if vid in seen_visual:
            out.append(f"visual chain {vid!r} aligned more than once")
        seen_text.add(tid)
        seen_visual.add(vid)

    rated = set()
    for cid, stars in gold.importance:
        if cid not in text_ids and cid not in visual_ids:
            out.append(f"importance references unknown chain {cid!r}")
        if not (1 <= stars <= 5):
            out.append(f"stars out of range for chain {cid!r}")
        if cid in rated:
            out.append(f"duplicate importance rating for chain {cid!r}")
        rated.add(cid)
    return out
