import math

import pytest
from hypothesis import given, settings, strategies as st

from charground.errors import DataError
from charground.grounding import Alignment
from charground.metrics import (
    FACE_MATCHER,
    MatchMode,
    MentionMatcher,
    TEXT_MATCHER,
    agreement_report,
    b_cubed,
    b_cubed_partitions,
    chain_head_word,
    dataset_stats,
    detection_pr,
    exact_match,
    exact_match_partitions,
    gold_importance_ranking,
    gold_multimodal_chains,
    grounding_pr,
    iou,
    mention_head_word,
    pearson,
    precision_at_k,
    story_pearson,
)
from charground.model import (
    AnnotatedStory,
    BoundingBox,
    FaceInstance,
    Mention,
    MentionKind,
    Number,
    TextChain,
    VisualChain,
)
from util import b_cubed_reference, character_story, identity_twins, story_from_specs


# --- IoU ----------------------------------------------------------------------


def test_iou_identity():
    box = BoundingBox(3, 4, 10, 12)
    assert iou(box, box) == 1.0


def test_iou_disjoint():
    assert iou(BoundingBox(0, 0, 5, 5), BoundingBox(10, 10, 5, 5)) == 0.0


def test_iou_half_overlap_is_one_third():
    a = BoundingBox(0, 0, 10, 10)
    b = BoundingBox(5, 0, 10, 10)
    assert iou(a, b) == pytest.approx(1 / 3)


def test_iou_symmetric_and_translation_invariant():
    a = BoundingBox(0, 0, 8, 4)
    b = BoundingBox(2, 1, 8, 4)
    assert iou(a, b) == iou(b, a)
    a2 = BoundingBox(100, 50, 8, 4)
    b2 = BoundingBox(102, 51, 8, 4)
    assert iou(a, b) == pytest.approx(iou(a2, b2))


# --- head words ----------------------------------------------------------------


def test_head_word_is_rightmost_noun():
    story = story_from_specs("s", ["the/DT tall/JJ man/NN waved/VBD"])
    mention = Mention(0, 0, 3, "the tall man", Number.SINGULAR, MentionKind.NOUN)
    assert mention_head_word(story, mention) == "man"


def test_head_word_falls_back_to_rightmost_token():
    story = story_from_specs("s", ["he/PRP waved/VBD"])
    mention = Mention(0, 0, 1, "he", Number.SINGULAR, MentionKind.PRONOUN)
    assert mention_head_word(story, mention) == "he"


# --- detection -----------------------------------------------------------------


def _mention(surface, sentence, token=1):
    return Mention(sentence, token, token + 1, surface, Number.SINGULAR, MentionKind.NOUN)


def test_detection_identity():
    story = character_story("s", [{"surface": "man", "sentences": [0], "images": [0]}])
    gold = story.gold
    predicted = [m for c in gold.text_chains for m in c.mentions]
    assert detection_pr(predicted, gold.text_chains, TEXT_MATCHER, story) == (1.0, 1.0)


def test_detection_half_right():
    story = story_from_specs(
        "s", ["the/DT man/NN ran/VBD", "the/DT cat/NN saw/VBD the/DT dog/NN"]
    )
    gold = [
        TextChain("g0", (_mention("man", 0),), Number.SINGULAR),
        TextChain("g1", (_mention("dog", 1, 4),), Number.SINGULAR),
    ]
    predicted = [_mention("man", 0), _mention("cat", 1)]
    assert detection_pr(predicted, gold, TEXT_MATCHER, story) == (0.5, 0.5)


def test_detection_gold_mention_consumable_once():
    story = story_from_specs("s", ["the/DT man/NN saw/VBD man/NN"])
    gold = [TextChain("g0", (_mention("man", 0, 1),), Number.SINGULAR)]
    predicted = [_mention("man", 0, 1), _mention("man", 0, 3)]
    precision, recall = detection_pr(predicted, gold, TEXT_MATCHER, story)
    assert precision == 0.5 and recall == 1.0


def test_detection_empty_sides_are_absent():
    story = story_from_specs("s", ["the/DT man/NN ran/VBD"])
    gold = [TextChain("g0", (_mention("man", 0),), Number.SINGULAR)]
    p, r = detection_pr([], gold, TEXT_MATCHER, story)
    assert p is None and r == 0.0
    p, r = detection_pr([_mention("man", 0)], [], TEXT_MATCHER, story)
    assert p == 0.0 and r is None


def test_detection_face_inside_body():
    gold = [VisualChain("g0", (FaceInstance(0, BoundingBox(10, 10, 100, 100)),))]
    inside = [FaceInstance(0, BoundingBox(30, 30, 20, 20))]
    assert detection_pr(inside, gold, FACE_MATCHER) == (1.0, 1.0)


def test_detection_face_protruding_one_pixel_is_incorrect():
    gold = [VisualChain("g0", (FaceInstance(0, BoundingBox(10, 10, 100, 100)),))]
    sticking_out = [FaceInstance(0, BoundingBox(9, 20, 10, 10))]
    assert detection_pr(sticking_out, gold, FACE_MATCHER) == (0.0, 0.0)


def test_detection_face_on_border_counts():
    gold = [VisualChain("g0", (FaceInstance(0, BoundingBox(10, 10, 100, 100)),))]
    on_edge = [FaceInstance(0, BoundingBox(10, 10, 100, 100))]
    assert detection_pr(on_edge, gold, FACE_MATCHER) == (1.0, 1.0)


# --- B-Cubed --------------------------------------------------------------------


def test_b_cubed_identical_partitions():
    pred = [{"a", "b", "c"}, {"d"}]
    assert b_cubed_partitions(pred, pred, identity_twins(pred, pred)) == (1.0, 1.0)


def test_b_cubed_spec_example():
    gold = [{"a", "b", "c"}, {"d"}]
    pred = [{"a", "b"}, {"c", "d"}]
    p, r = b_cubed_partitions(pred, gold, identity_twins(pred, gold))
    assert p == pytest.approx(0.75)
    assert r == pytest.approx(2 / 3)


def test_b_cubed_singletons_vs_one_chain():
    n = 6
    gold = [set(range(n))]
    pred = [{i} for i in range(n)]
    p, r = b_cubed_partitions(pred, gold, identity_twins(pred, gold))
    assert p == 1.0 and r == pytest.approx(1 / n)


def test_b_cubed_spurious_and_missed_items():
    gold = [{"a", "b"}]
    pred = [{"a", "x"}]
    p, r = b_cubed_partitions(pred, gold, identity_twins(pred, gold))
    assert p == pytest.approx(0.25)  # a: 1/2, x: 0
    assert r == pytest.approx(0.25)  # a: 1/2, b: 0


@settings(deadline=None, max_examples=60)
@given(seed=st.integers(0, 100_000))
def test_b_cubed_matches_reference(seed):
    import random as random_module

    rng = random_module.Random(seed)
    n = rng.randint(1, 50)
    universe = list(range(n))

    def random_partition(items):
        k = rng.randint(1, len(items))
        chains = [set() for _ in range(k)]
        for item in items:
            chains[rng.randrange(k)].add(item)
        return [c for c in chains if c]

    pred = random_partition(universe[: rng.randint(1, n)])
    gold = random_partition(universe[rng.randint(0, n - 1) // 2 :])
    if not pred or not gold:
        return
    got_p, got_r = b_cubed_partitions(pred, gold, identity_twins(pred, gold))
    want_p, want_r = b_cubed_reference(pred, gold)
    assert got_p == pytest.approx(float(want_p), abs=1e-12)
    assert got_r == pytest.approx(float(want_r), abs=1e-12)


def test_b_cubed_chain_level_via_head_words():
    story = story_from_specs(
        "s", ["the/DT man/NN ran/VBD", "the/DT man/NN sat/VBD", "the/DT dog/NN ran/VBD"]
    )
    gold = [
        TextChain("g0", (_mention("man", 0), _mention("man", 1)), Number.SINGULAR),
        TextChain("g1", (_mention("dog", 2),), Number.SINGULAR),
    ]
    pred_all_one = [
        TextChain(
            "p0",
            (_mention("man", 0), _mention("man", 1), _mention("dog", 2)),
            Number.SINGULAR,
        )
    ]
    p, r = b_cubed(pred_all_one, gold, TEXT_MATCHER, story)
    # precision: man 2/3, man 2/3, dog 1/3; recall: all 1
    assert p == pytest.approx((2 / 3 + 2 / 3 + 1 / 3) / 3)
    assert r == 1.0


def test_b_cubed_refinement_monotonicity():
    gold = [set(range(6)), {6, 7}]
    pred = [set(range(6)), {6, 7}]
    base_p, base_r = b_cubed_partitions(pred, gold, identity_twins(pred, gold))
    split = [{0, 1, 2}, {3, 4, 5}, {6, 7}]
    new_p, new_r = b_cubed_partitions(split, gold, identity_twins(split, gold))
    assert new_p >= base_p
    assert new_r <= base_r


# --- exact match -----------------------------------------------------------------


def test_exact_match_identical():
    pred = [{"a", "b"}, {"c"}]
    assert exact_match_partitions(pred, pred, identity_twins(pred, pred)) == (1.0, 1.0)


def test_exact_match_merged_chain_scores_zero():
    gold = [{"a", "b"}, {"c"}]
    pred = [{"a", "b", "c"}]
    assert exact_match_partitions(pred, gold, identity_twins(pred, gold)) == (0.0, 0.0)


def test_exact_match_with_spurious_chain():
    gold = [{"a", "b"}, {"c"}]
    pred = [{"a", "b"}, {"c"}, {"zz"}]
    p, r = exact_match_partitions(pred, gold, identity_twins(pred, gold))
    assert p == pytest.approx(2 / 3)
    assert r == 1.0


def test_exact_match_untwinned_member_breaks_equality():
    gold = [{"a", "b"}]
    pred = [{"a", "b", "zz"}]
    assert exact_match_partitions(pred, gold, identity_twins(pred, gold)) == (0.0, 0.0)


# --- grounding -------------------------------------------------------------------


def _four_character_story():
    chars = [
        {"surface": s, "sentences": [i], "images": [i], "stars": 3}
        for i, s in enumerate(["man", "woman", "dog", "boy"])
    ]
    return character_story("s", chars, length=5)


def test_grounding_identity():
    story = _four_character_story()
    gold = story.gold
    alignment = Alignment(
        pairs=tuple((i, i, 1.0) for i in range(4)), plural_attachments=()
    )
    pr = grounding_pr(story, gold.text_chains, gold.visual_chains, alignment)
    assert pr == (1.0, 1.0)


def test_grounding_half_precision_quarter_recall():
    story = _four_character_story()
    gold = story.gold
    alignment = Alignment(pairs=((0, 0, 1.0), (1, 2, 1.0)), plural_attachments=())
    p, r = grounding_pr(story, gold.text_chains, gold.visual_chains, alignment)
    assert p == 0.5 and r == 0.25


def test_grounding_empty_prediction_absent_precision():
    story = _four_character_story()
    gold = story.gold
    alignment = Alignment(pairs=(), plural_attachments=())
    p, r = grounding_pr(story, gold.text_chains, gold.visual_chains, alignment)
    assert p is None and r == 0.0


def test_grounding_counts_plural_attachments_as_pairs():
    story = character_story(
        "s",
        [
            {"surface": "dogs", "number": "plural", "sentences": [1], "images": [1], "stars": 2},
        ],
        length=3,
    )
    gold = story.gold
    alignment = Alignment(pairs=(), plural_attachments=((0, 0, 1.0),))
    assert grounding_pr(story, gold.text_chains, gold.visual_chains, alignment) == (1.0, 1.0)


# --- precision@k -----------------------------------------------------------------


def _ranked_story():
    chars = [
        {"surface": "man", "sentences": [0, 1, 2], "images": [0, 1], "stars": 5},
        {"surface": "woman", "sentences": [1, 3], "images": [1], "stars": 4},
        {"surface": "dog", "sentences": [4], "images": [4], "stars": 2},
    ]
    return character_story("s", chars, length=5)


def test_precision_at_k_identity():
    story = _ranked_story()
    gold_ranking = gold_importance_ranking(story.gold)
    head = lambda c: chain_head_word(story, c)  # noqa: E731
    for k in (1, 2, 3):
        assert precision_at_k(gold_ranking, gold_ranking, k, head) == 1.0


def test_precision_at_one_mismatch():
    story = _ranked_story()
    gold_ranking = gold_importance_ranking(story.gold)
    reversed_ranking = list(reversed(gold_ranking))
    head = lambda c: chain_head_word(story, c)  # noqa: E731
    assert precision_at_k(reversed_ranking, gold_ranking, 1, head) == 0.0


def test_precision_at_k_clips_to_gold_count():
    story = _ranked_story()
    gold_ranking = gold_importance_ranking(story.gold)
    head = lambda c: chain_head_word(story, c)  # noqa: E731
    assert precision_at_k(gold_ranking, gold_ranking, 10, head) == 1.0


def test_precision_at_k_requires_positive_k():
    with pytest.raises(ValueError):
        precision_at_k([], [], 0, lambda c: None)


def test_gold_ranking_orders_by_stars_then_occurrence():
    story = _ranked_story()
    ranking = gold_importance_ranking(story.gold)
    assert [c.chain_id for c in ranking] == ["gt0", "gt1", "gt2"]


def test_gold_multimodal_chains_merge_alignment():
    story = _ranked_story()
    chains = gold_multimodal_chains(story.gold)
    assert len(chains) == 3
    assert all(c.text is not None and c.visual is not None for c, _ in chains)
    assert [s for _, s in chains] == [5, 4, 2]


# --- Pearson ----------------------------------------------------------------------


def test_pearson_perfect_positive_and_negative():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0)


def test_pearson_undefined_cases():
    assert pearson([1], [2]) is None
    assert pearson([1, 1, 1], [1, 2, 3]) is None
    assert pearson([1, 2, 3], [7, 7, 7]) is None


def test_pearson_length_mismatch():
    with pytest.raises(ValueError):
        pearson([1, 2], [1, 2, 3])


def test_story_pearson_modalities():
    story = _ranked_story()
    values = story_pearson(story.gold)
    assert values["text"] == pytest.approx(pearson([3, 2, 1], [5, 4, 2]))
    assert values["visual"] == pytest.approx(pearson([2, 1, 1], [5, 4, 2]))
    assert values["multimodal"] == pytest.approx(pearson([5, 3, 2], [5, 4, 2]))


# --- agreement ---------------------------------------------------------------------


def test_agreement_self_is_perfect():
    story = _ranked_story()
    report = agreement_report([story], [story])
    assert report["character_detection"] == {"precision": 1.0, "recall": 1.0}
    assert report["coref_b_cubed"] == {"precision": 1.0, "recall": 1.0}
    assert report["coref_exact_match"] == {"precision": 1.0, "recall": 1.0}
    assert report["bounding_boxes"] == {"precision": 1.0, "recall": 1.0}
    assert report["importance_ranking"]["recall"] == 1.0


def test_agreement_boxes_strictly_above_sixty_percent():
    def story_with_box(x):
        base = character_story("s", [{"surface": "man", "sentences": [0], "images": [0], "stars": 5}])
        chain = VisualChain("gv0", (FaceInstance(0, BoundingBox(x, 10.0, 100.0, 200.0)),))
        gold = base.gold.__class__(base.gold.text_chains, (chain,), base.gold.alignment,
                                   base.gold.importance)
        return AnnotatedStory(base.story_id, base.sentences, base.images, gold)

    reference = story_with_box(10.0)
    # IoU of (10,...) vs (35,...) with w=100: overlap 75 -> 75/125 = 0.6 exactly
    at_threshold = story_with_box(35.0)
    above = story_with_box(34.0)
    report = agreement_report([reference], [at_threshold])
    assert report["bounding_boxes"] == {"precision": 0.0, "recall": 0.0}
    report = agreement_report([reference], [above])
    assert report["bounding_boxes"] == {"precision": 1.0, "recall": 1.0}


def test_agreement_rejects_mismatched_story_sets():
    a = character_story("a", [{"surface": "man", "sentences": [0], "images": [0]}])
    b = character_story("b", [{"surface": "man", "sentences": [0], "images": [0]}])
    with pytest.raises(DataError):
        agreement_report([a], [b])


# --- dataset statistics ---------------------------------------------------------------


def test_dataset_stats_single_story():
    story = character_story(
        "s", [{"surface": "man", "sentences": [0, 1], "images": [0, 1], "stars": 5}]
    )
    stats = dataset_stats([story])
    assert stats["stories"] == 1
    assert stats["characters"] == 1
    assert stats["plural_group_characters"] == 0
    assert stats["bounding_boxes"] == 2
    assert stats["avg_boxes_per_story"] == 2.0
    assert stats["avg_characters_per_story"] == 1.0
    assert stats["avg_text_chain_length"] == 2.0
    assert stats["avg_visual_chain_length"] == 2.0


def test_dataset_stats_counts_plural_and_unaligned():
    story = character_story(
        "s",
        [
            {"surface": "man", "sentences": [0], "images": [0], "stars": 5},
            {"surface": "dogs", "number": "plural", "sentences": [1], "stars": 1},
            {"surface": "woman", "images": [2], "stars": 2},
        ],
    )
    stats = dataset_stats([story])
    assert stats["characters"] == 3
    assert stats["plural_group_characters"] == 1
    assert stats["bounding_boxes"] == 2


def test_dataset_stats_empty_corpus():
    stats = dataset_stats([])
    assert stats["stories"] == 0
    assert stats["characters"] == 0
    assert stats["avg_boxes_per_story"] is None


def test_dataset_stats_requires_gold():
    story = story_from_specs("s", ["the/DT man/NN"])
    with pytest.raises(DataError):
        dataset_stats([story])
