"""Evaluation: detection P/R, B-Cubed, exact match, grounding P/R,
Precision@k, Pearson correlation, annotator agreement and corpus statistics.

Predicted and gold items live in different universes (predicted mentions are
single tokens, gold mentions are phrases; predicted boxes are faces, gold
boxes are bodies), so every chain metric first establishes a one-to-one
"twin" correspondence between the two sides:

* text mentions twin by (sentence, head word), greedily in story order;
* face boxes twin with the tightest gold body box that fully contains them;
* under an IoU matcher, boxes twin with the best-overlap gold box above the
  threshold (strictly).

Each gold item is consumable once.  Untwinned predicted items are spurious,
untwinned gold items are missed; both stay in the metric denominators.
Absent scores (empty denominators) are reported as None, never 0.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import DataError
from .model import (
    AnnotatedStory,
    BoundingBox,
    FaceInstance,
    GoldAnnotation,
    Mention,
    MultiModalChain,
    Number,
    TextChain,
    VisualChain,
    multimodal_chain,
)
from .grounding import Alignment
from .textchars import NOUN_TAGS


class MatchMode(str, Enum):
    TEXT_HEAD_WORD = "text_head_word"
    FACE_IN_BODY = "face_in_body"
    BOX_IOU = "box_iou"


@dataclass(frozen=True)
class MentionMatcher:
    mode: MatchMode
    iou_threshold: float = 0.6

    def validate(self) -> None:
        if self.mode == MatchMode.BOX_IOU and not (0.0 < self.iou_threshold <= 1.0):
            raise ValueError("IoU threshold must lie in (0, 1]")


TEXT_MATCHER = MentionMatcher(MatchMode.TEXT_HEAD_WORD)
FACE_MATCHER = MentionMatcher(MatchMode.FACE_IN_BODY)


@dataclass(frozen=True)
class PRCounts:
    """Numerators/denominators of a precision-recall pair; adding two counts
    micro-aggregates them."""

    p_num: float = 0.0
    p_den: float = 0.0
    r_num: float = 0.0
    r_den: float = 0.0

    def __add__(self, other: "PRCounts") -> "PRCounts":
        return PRCounts(
            self.p_num + other.p_num,
            self.p_den + other.p_den,
            self.r_num + other.r_num,
            self.r_den + other.r_den,
        )

    @property
    def precision(self) -> Optional[float]:
        return self.p_num / self.p_den if self.p_den else None

    @property
    def recall(self) -> Optional[float]:
        return self.r_num / self.r_den if self.r_den else None

    def pair(self) -> tuple[Optional[float], Optional[float]]:
        return (self.precision, self.recall)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two axis-aligned boxes, in [0, 1]."""
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area() + b.area() - inter)


def mention_head_word(story: AnnotatedStory, mention: Mention) -> str:
    """Lowercased head of a mention: the rightmost noun-tagged token in its
    span, or the rightmost token when none is noun-tagged."""
    tokens = story.sentences[mention.sentence_index].tokens[
        mention.token_start : mention.token_end
    ]
    if not tokens:
        return mention.surface.split()[-1].lower() if mention.surface else ""
    for tok in reversed(tokens):
        if tok.pos in NOUN_TAGS:
            return tok.text.lower()
    return tokens[-1].text.lower()


def chain_head_word(story: AnnotatedStory, chain: MultiModalChain) -> Optional[str]:
    """Head word of a multimodal chain's first textual mention; None when
    the chain has no textual side (such chains are unmatchable)."""
    if chain.text is None or not chain.text.mentions:
        return None
    return mention_head_word(story, chain.text.mentions[0])


# ---------------------------------------------------------------------------
# twin correspondences


def _text_twins(
    story: AnnotatedStory,
    predicted: Sequence[Mention],
    gold: Sequence[Mention],
) -> dict[int, int]:
    gold_order = sorted(range(len(gold)), key=lambda i: gold[i].position())
    by_sentence: dict[int, list[int]] = {}
    for gi in gold_order:
        by_sentence.setdefault(gold[gi].sentence_index, []).append(gi)
    gold_heads = {gi: mention_head_word(story, gold[gi]) for gi in gold_order}
    consumed: set[int] = set()
    twins: dict[int, int] = {}
    for pi in sorted(range(len(predicted)), key=lambda i: predicted[i].position()):
        mention = predicted[pi]
        head = mention_head_word(story, mention)
        for gi in by_sentence.get(mention.sentence_index, ()):
            if gi not in consumed and gold_heads[gi] == head:
                twins[pi] = gi
                consumed.add(gi)
                break
    return twins


def _face_sort_key(face: FaceInstance):
    return (face.image_index, face.box.x, face.box.y, face.box.w, face.box.h)


def _face_twins(
    predicted: Sequence[FaceInstance],
    gold: Sequence[FaceInstance],
) -> dict[int, int]:
    """Twin each predicted face with the tightest gold body box that fully
    contains it (same image), each gold box consumable once."""
    consumed: set[int] = set()
    twins: dict[int, int] = {}
    for pi in sorted(range(len(predicted)), key=lambda i: _face_sort_key(predicted[i])):
        face = predicted[pi]
        best, best_area = None, float("inf")
        for gi, body in enumerate(gold):
            if gi in consumed or body.image_index != face.image_index:
                continue
            if body.box.contains(face.box) and body.box.area() < best_area:
                best, best_area = gi, body.box.area()
        if best is not None:
            twins[pi] = best
            consumed.add(best)
    return twins


def _iou_twins(
    predicted: Sequence[FaceInstance],
    gold: Sequence[FaceInstance],
    threshold: float,
) -> dict[int, int]:
    """Twin boxes by best IoU strictly above the threshold, consumable once."""
    consumed: set[int] = set()
    twins: dict[int, int] = {}
    for pi in sorted(range(len(predicted)), key=lambda i: _face_sort_key(predicted[i])):
        face = predicted[pi]
        best, best_iou = None, threshold
        for gi, other in enumerate(gold):
            if gi in consumed or other.image_index != face.image_index:
                continue
            value = iou(face.box, other.box)
            if value > best_iou:
                best, best_iou = gi, value
        if best is not None:
            twins[pi] = best
            consumed.add(best)
    return twins


def _build_twins(matcher, story, predicted, gold) -> dict[int, int]:
    matcher.validate()
    if matcher.mode == MatchMode.TEXT_HEAD_WORD:
        if story is None:
            raise ValueError("text matching needs the story for head words")
        return _text_twins(story, predicted, gold)
    if matcher.mode == MatchMode.FACE_IN_BODY:
        return _face_twins(predicted, gold)
    return _iou_twins(predicted, gold, matcher.iou_threshold)


# ---------------------------------------------------------------------------
# detection


def detection_counts(
    predicted,
    gold_chains,
    matcher: MentionMatcher,
    story: Optional[AnnotatedStory] = None,
) -> PRCounts:
    gold_items = [item for chain in gold_chains for item in _chain_items(chain)]
    if matcher.mode == MatchMode.FACE_IN_BODY:
        # precision: inside any body box; recall: body boxes covered
        correct = 0
        covered: set[int] = set()
        for face in predicted:
            inside = [
                gi
                for gi, body in enumerate(gold_items)
                if body.image_index == face.image_index and body.box.contains(face.box)
            ]
            if inside:
                correct += 1
                covered.update(inside)
        return PRCounts(correct, len(predicted), len(covered), len(gold_items))
    twins = _build_twins(matcher, story, predicted, gold_items)
    return PRCounts(len(twins), len(predicted), len(twins), len(gold_items))


def detection_pr(
    predicted,
    gold_chains,
    matcher: MentionMatcher,
    story: Optional[AnnotatedStory] = None,
) -> tuple[Optional[float], Optional[float]]:
    """Precision/recall of predicted mentions or boxes against gold chains."""
    return detection_counts(predicted, gold_chains, matcher, story).pair()


# ---------------------------------------------------------------------------
# co-reference chain metrics


def _chain_items(chain):
    if isinstance(chain, TextChain):
        return chain.mentions
    if isinstance(chain, VisualChain):
        return chain.faces
    return tuple(chain)


def b_cubed_partitions(
    pred_chains: Sequence[Sequence],
    gold_chains: Sequence[Sequence],
    twins: Mapping,
) -> tuple[Optional[float], Optional[float]]:
    """B-Cubed on abstract partitions given an injective predicted-to-gold
    twin mapping; spurious and missed items stay in the denominators."""
    inverse = {g: p for p, g in twins.items()}
    gold_chain_of = {g: ci for ci, chain in enumerate(gold_chains) for g in chain}
    pred_chain_of = {p: ci for ci, chain in enumerate(pred_chains) for p in chain}
    n_pred = sum(len(c) for c in pred_chains)
    n_gold = sum(len(c) for c in gold_chains)

    p_sum = 0.0
    for chain in pred_chains:
        votes = Counter(
            gold_chain_of[twins[m]] for m in chain if m in twins and twins[m] in gold_chain_of
        )
        for m in chain:
            g = twins.get(m)
            if g is None or g not in gold_chain_of:
                continue
            p_sum += votes[gold_chain_of[g]] / len(chain)

    r_sum = 0.0
    for chain in gold_chains:
        votes = Counter(
            pred_chain_of[inverse[g]] for g in chain if g in inverse and inverse[g] in pred_chain_of
        )
        for g in chain:
            p = inverse.get(g)
            if p is None or p not in pred_chain_of:
                continue
            r_sum += votes[pred_chain_of[p]] / len(chain)

    precision = p_sum / n_pred if n_pred else None
    recall = r_sum / n_gold if n_gold else None
    return precision, recall


def exact_match_partitions(
    pred_chains: Sequence[Sequence],
    gold_chains: Sequence[Sequence],
    twins: Mapping,
) -> tuple[Optional[float], Optional[float]]:
    """A predicted chain is exact when all its items are twinned and the
    twin set equals a gold chain as a whole."""
    gold_sets = [frozenset(chain) for chain in gold_chains]
    covered: set[int] = set()
    exact = 0
    for chain in pred_chains:
        if any(m not in twins for m in chain):
            continue
        twin_set = frozenset(twins[m] for m in chain)
        for gi, gold_set in enumerate(gold_sets):
            if twin_set == gold_set:
                exact += 1
                covered.add(gi)
                break
    precision = exact / len(pred_chains) if pred_chains else None
    recall = len(covered) / len(gold_chains) if gold_chains else None
    return precision, recall


def _flatten(chains) -> tuple[list, list[list[int]]]:
    items: list = []
    partition: list[list[int]] = []
    for chain in chains:
        ids = []
        for item in _chain_items(chain):
            ids.append(len(items))
            items.append(item)
        partition.append(ids)
    return items, partition


def _chain_twins(pred_chains, gold_chains, matcher, story):
    pred_items, pred_partition = _flatten(pred_chains)
    gold_items, gold_partition = _flatten(gold_chains)
    twins = _build_twins(matcher, story, pred_items, gold_items)
    return pred_partition, gold_partition, twins


def b_cubed_counts(pred_chains, gold_chains, matcher, story=None) -> PRCounts:
    pred_partition, gold_partition, twins = _chain_twins(pred_chains, gold_chains, matcher, story)
    p, r = b_cubed_partitions(pred_partition, gold_partition, twins)
    n_pred = sum(len(c) for c in pred_partition)
    n_gold = sum(len(c) for c in gold_partition)
    return PRCounts((p or 0.0) * n_pred, n_pred, (r or 0.0) * n_gold, n_gold)


def b_cubed(pred_chains, gold_chains, matcher, story=None):
    """Mention-level B-Cubed precision/recall between chain partitions."""
    return b_cubed_counts(pred_chains, gold_chains, matcher, story).pair()


def exact_match_counts(pred_chains, gold_chains, matcher, story=None) -> PRCounts:
    pred_partition, gold_partition, twins = _chain_twins(pred_chains, gold_chains, matcher, story)
    p, r = exact_match_partitions(pred_partition, gold_partition, twins)
    return PRCounts(
        (p or 0.0) * len(pred_partition),
        len(pred_partition),
        (r or 0.0) * len(gold_partition),
        len(gold_partition),
    )


def exact_match(pred_chains, gold_chains, matcher, story=None):
    """Whole-chain precision/recall between chain partitions."""
    return exact_match_counts(pred_chains, gold_chains, matcher, story).pair()


# ---------------------------------------------------------------------------
# grounding


def _map_text_to_gold(story, pred_chains, gold_chains) -> list[Optional[str]]:
    pred_items, pred_partition = _flatten(pred_chains)
    gold_items, gold_partition = _flatten(gold_chains)
    twins = _text_twins(story, pred_items, gold_items)
    gold_chain_of = {
        item_id: gold_chains[ci].chain_id
        for ci, ids in enumerate(gold_partition)
        for item_id in ids
    }
    return [_plurality_vote(ids, twins, gold_chain_of) for ids in pred_partition]


def _map_visual_to_gold(pred_chains, gold_chains) -> list[Optional[str]]:
    pred_items, pred_partition = _flatten(pred_chains)
    gold_items, gold_partition = _flatten(gold_chains)
    twins = _face_twins(pred_items, gold_items)
    gold_chain_of = {
        item_id: gold_chains[ci].chain_id
        for ci, ids in enumerate(gold_partition)
        for item_id in ids
    }
    return [_plurality_vote(ids, twins, gold_chain_of) for ids in pred_partition]


def _plurality_vote(ids, twins, gold_chain_of) -> Optional[str]:
    votes = Counter(gold_chain_of[twins[i]] for i in ids if i in twins)
    if not votes:
        return None
    ranked = votes.most_common()
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        return None  # tie between gold chains: unmatched
    return ranked[0][0]


def grounding_counts(
    story: AnnotatedStory,
    text_chains: Sequence[TextChain],
    visual_chains: Sequence[VisualChain],
    alignment: Alignment,
    gold: Optional[GoldAnnotation] = None,
) -> PRCounts:
    gold = gold if gold is not None else story.gold
    if gold is None:
        raise DataError(f"story {story.story_id!r} has no gold annotation")
    text_map = _map_text_to_gold(story, text_chains, gold.text_chains)
    visual_map = _map_visual_to_gold(visual_chains, gold.visual_chains)
    gold_pairs = set(gold.alignment)
    predicted = [(t, v) for t, v, _ in alignment.pairs]
    predicted += [(t, v) for v, t, _ in alignment.plural_attachments]
    correct = 0
    recovered: set[tuple[str, str]] = set()
    for t, v in predicted:
        mapped = (text_map[t], visual_map[v])
        if None not in mapped and mapped in gold_pairs:
            correct += 1
            recovered.add(mapped)
    return PRCounts(correct, len(predicted), len(recovered), len(gold_pairs))


def grounding_pr(story, text_chains, visual_chains, alignment, gold=None):
    """Precision/recall of predicted chain pairs against the gold alignment.

    Predicted chains are mapped onto gold chains first (text: head-word
    twins; visual: faces inside body boxes), by plurality with ties left
    unmatched.
    """
    return grounding_counts(story, text_chains, visual_chains, alignment, gold).pair()


# ---------------------------------------------------------------------------
# importance


def gold_multimodal_chains(
    gold: GoldAnnotation,
) -> list[tuple[MultiModalChain, Optional[int]]]:
    """Gold characters as multimodal chains, each with its star rating
    (stars may be recorded under either side's chain id)."""
    stars = gold.stars_by_id()
    visual_by_id = {c.chain_id: c for c in gold.visual_chains}
    visual_of_text = dict(gold.alignment)
    aligned_visual = set(visual_of_text.values())
    out: list[tuple[MultiModalChain, Optional[int]]] = []
    for chain in gold.text_chains:
        visual = visual_by_id.get(visual_of_text.get(chain.chain_id, ""))
        rating = stars.get(chain.chain_id)
        if rating is None and visual is not None:
            rating = stars.get(visual.chain_id)
        out.append((multimodal_chain(chain.chain_id, chain, visual), rating))
    for chain in gold.visual_chains:
        if chain.chain_id not in aligned_visual:
            out.append((multimodal_chain(chain.chain_id, None, chain), stars.get(chain.chain_id)))
    return out


def gold_importance_ranking(gold: GoldAnnotation) -> list[MultiModalChain]:
    """Gold characters ordered by stars (descending), ties by earliest
    occurrence; unrated characters are excluded."""
    rated = [(c, s) for c, s in gold_multimodal_chains(gold) if s is not None]
    rated.sort(key=lambda cs: (-cs[1], cs[0].occurrence_key()))
    return [c for c, _ in rated]


def precision_at_k(
    predicted_ranking: Sequence[MultiModalChain],
    gold_ranking: Sequence[MultiModalChain],
    k: int,
    head_word_of_chain,
) -> Optional[float]:
    """Share of the predicted top-k whose head word matches a gold top-k
    character.  k is clipped to the gold character count; chains without a
    textual side are unmatchable; each gold character matches once."""
    if k < 1:
        raise ValueError("k must be >= 1")
    k_eff = min(k, len(gold_ranking))
    if k_eff == 0:
        return None
    gold_heads = [head_word_of_chain(c) for c in gold_ranking[:k_eff]]
    consumed = [False] * k_eff
    matched = 0
    for chain in predicted_ranking[:k_eff]:
        head = head_word_of_chain(chain)
        if head is None:
            continue
        for i, gold_head in enumerate(gold_heads):
            if not consumed[i] and gold_head is not None and gold_head == head:
                consumed[i] = True
                matched += 1
                break
    return matched / k_eff


def pearson(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """Pearson's r, or None when undefined (fewer than two points or a
    constant vector)."""
    if len(x) != len(y):
        raise ValueError("pearson needs equal-length vectors")
    if len(x) < 2:
        return None
    ax = np.asarray(x, dtype=float)
    ay = np.asarray(y, dtype=float)
    if np.all(ax == ax[0]) or np.all(ay == ay[0]):
        return None
    xc = ax - ax.mean()
    yc = ay - ay.mean()
    r = float((xc @ yc) / np.sqrt((xc @ xc) * (yc @ yc)))
    return max(-1.0, min(1.0, r))


def story_pearson(gold: GoldAnnotation) -> dict[str, Optional[float]]:
    """Per-story correlation of occurrence counts with star ratings, for
    text-only, visual-only and multimodal occurrence counts."""
    chains = gold_multimodal_chains(gold)
    text_pts = [
        (len(c.text.mentions), s) for c, s in chains if s is not None and c.text is not None
    ]
    visual_pts = [
        (len(c.visual.faces), s) for c, s in chains if s is not None and c.visual is not None
    ]
    multi_pts = [(c.importance, s) for c, s in chains if s is not None]
    return {
        "text": pearson([p[0] for p in text_pts], [p[1] for p in text_pts]),
        "visual": pearson([p[0] for p in visual_pts], [p[1] for p in visual_pts]),
        "multimodal": pearson([p[0] for p in multi_pts], [p[1] for p in multi_pts]),
    }


# ---------------------------------------------------------------------------
# agreement and corpus statistics


def _require_gold(story: AnnotatedStory) -> GoldAnnotation:
    if story.gold is None:
        raise DataError(f"story {story.story_id!r} has no gold annotation")
    return story.gold


def agreement_report(
    reference: Sequence[AnnotatedStory],
    candidate: Sequence[AnnotatedStory],
) -> dict:
    """Agreement of a candidate annotation against a reference annotation of
    the same stories: mention detection, chain B-Cubed and exact match,
    bounding boxes under IoU > 0.6, and top-1 importance agreement."""
    ref_by_id = {s.story_id: s for s in reference}
    cand_by_id = {s.story_id: s for s in candidate}
    if set(ref_by_id) != set(cand_by_id):
        missing = sorted(set(ref_by_id) ^ set(cand_by_id))
        raise DataError(f"annotations cover different stories: {missing}")

    detection = PRCounts()
    bcubed = PRCounts()
    exact = PRCounts()
    boxes = PRCounts()
    considered = 0
    top1_matches = 0
    box_matcher = MentionMatcher(MatchMode.BOX_IOU, iou_threshold=0.6)
    for story_id in sorted(ref_by_id):
        ref, cand = ref_by_id[story_id], cand_by_id[story_id]
        ref_gold, cand_gold = _require_gold(ref), _require_gold(cand)
        cand_mentions = [m for c in cand_gold.text_chains for m in c.mentions]
        detection += detection_counts(cand_mentions, ref_gold.text_chains, TEXT_MATCHER, ref)
        bcubed += b_cubed_counts(cand_gold.text_chains, ref_gold.text_chains, TEXT_MATCHER, ref)
        exact += exact_match_counts(cand_gold.text_chains, ref_gold.text_chains, TEXT_MATCHER, ref)
        cand_faces = [f for c in cand_gold.visual_chains for f in c.faces]
        boxes += detection_counts(cand_faces, ref_gold.visual_chains, box_matcher)
        ref_rank = gold_importance_ranking(ref_gold)
        cand_rank = gold_importance_ranking(cand_gold)
        if ref_rank and cand_rank:
            considered += 1
            ref_head = chain_head_word(ref, ref_rank[0])
            cand_head = chain_head_word(cand, cand_rank[0])
            if ref_head is not None and ref_head == cand_head:
                top1_matches += 1

    return {
        "character_detection": {"precision": detection.precision, "recall": detection.recall},
        "coref_b_cubed": {"precision": bcubed.precision, "recall": bcubed.recall},
        "coref_exact_match": {"precision": exact.precision, "recall": exact.recall},
        "bounding_boxes": {"precision": boxes.precision, "recall": boxes.recall},
        "importance_ranking": {
            "recall": top1_matches / considered if considered else None
        },
    }


def dataset_stats(stories: Sequence[AnnotatedStory]) -> dict:
    """Corpus statistics over gold annotations: counts of stories,
    characters, plural/group characters and boxes, plus per-story and
    per-chain averages (None when undefined)."""
    n_stories = len(stories)
    characters = 0
    plural_group = 0
    boxes = 0
    mentions = 0
    text_chains = 0
    visual_chains = 0
    for story in stories:
        gold = _require_gold(story)
        characters += len(gold.text_chains) + len(gold.visual_chains) - len(gold.alignment)
        plural_group += sum(1 for c in gold.text_chains if c.number != Number.SINGULAR)
        text_chains += len(gold.text_chains)
        visual_chains += len(gold.visual_chains)
        mentions += sum(len(c.mentions) for c in gold.text_chains)
        boxes += sum(len(c.faces) for c in gold.visual_chains)
    return {
        "stories": n_stories,
        "characters": characters,
        "plural_group_characters": plural_group,
        "bounding_boxes": boxes,
        "avg_boxes_per_story": boxes / n_stories if n_stories else None,
        "avg_characters_per_story": characters / n_stories if n_stories else None,
        "avg_text_chain_length": mentions / text_chains if text_chains else None,
        "avg_visual_chain_length": boxes / visual_chains if visual_chains else None,
    }
