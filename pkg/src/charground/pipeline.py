"""End-to-end orchestration of the pipeline stages and report building.

Both the CLI and the HTTP service call these functions; they work purely on
domain objects so outputs are deterministic given identical inputs and seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from . import metrics, ranking, textchars
from .errors import DataError
from .grounding import GroundingConfig, ground, assemble_multimodal
from .io import EmbeddingTable, GroundedStory
from .model import AnnotatedStory, MultiModalChain, TextChain, VisualChain, multimodal_chain
from .visualchars import ClusteringConfig, cluster_faces

METRIC_KEYS = ("detection", "bcubed", "exact", "grounding", "pk", "pearson")
DEFAULT_KS = (1, 3, 5)
MODALITIES = ("text", "image", "multi")


def detect_text_stage(
    story: AnnotatedStory,
    lexicon: Optional[textchars.CharacterLexicon] = None,
    coref: str = "heuristic",
    external_chains: Optional[Sequence[Sequence[tuple[int, int]]]] = None,
) -> list[TextChain]:
    lexicon = lexicon if lexicon is not None else textchars.load_lexicon()
    if coref == "heuristic":
        return textchars.heuristic_coref(textchars.detect_mentions(story, lexicon))
    if coref == "external":
        if external_chains is None:
            raise DataError("external co-reference selected but no chains supplied")
        return textchars.ingest_external_coref(story, external_chains, lexicon)
    raise ValueError(f"unknown coref mode {coref!r}")


def cluster_stage(table: EmbeddingTable, cfg: ClusteringConfig) -> list[VisualChain]:
    return cluster_faces(table.face_instances(), cfg)


def gold_input_chains(story: AnnotatedStory) -> tuple[list[TextChain], list[VisualChain]]:
    """The gold chains viewed as pipeline input (isolates the alignment
    stage from upstream detection errors)."""
    if story.gold is None:
        raise DataError(f"story {story.story_id!r} has no gold annotation")
    return list(story.gold.text_chains), list(story.gold.visual_chains)


def ground_stage(
    story: AnnotatedStory,
    text_chains: Sequence[TextChain],
    visual_chains: Sequence[VisualChain],
    embeddings: Optional[EmbeddingTable] = None,
    cfg: GroundingConfig = GroundingConfig(),
) -> GroundedStory:
    alignment = ground(text_chains, visual_chains, story, embeddings, cfg)
    chains = assemble_multimodal(text_chains, visual_chains, alignment)
    return GroundedStory(
        story_id=story.story_id,
        text_chains=tuple(text_chains),
        visual_chains=tuple(visual_chains),
        alignment=alignment,
        chains=tuple(chains),
    )


def modality_chains(
    modality: str,
    text_chains: Sequence[TextChain] = (),
    visual_chains: Sequence[VisualChain] = (),
    mm_chains: Sequence[MultiModalChain] = (),
) -> list[MultiModalChain]:
    """Chains to rank for a given input modality."""
    if modality == "multi":
        return list(mm_chains)
    if modality == "text":
        return [multimodal_chain(c.chain_id, c, None) for c in text_chains]
    if modality == "image":
        return [multimodal_chain(c.chain_id, None, c) for c in visual_chains]
    raise ValueError(f"unknown modality {modality!r}")


def rank_stage(chains: Sequence[MultiModalChain]) -> list[MultiModalChain]:
    return ranking.ranked_chains(chains)


# ---------------------------------------------------------------------------
# evaluation reports


def _pr_dict(counts: metrics.PRCounts) -> dict:
    return {"precision": counts.precision, "recall": counts.recall}


def evaluate_stories(
    pairs: Sequence[tuple[GroundedStory, AnnotatedStory]],
    selection: Sequence[str] = METRIC_KEYS,
    ks: Sequence[int] = DEFAULT_KS,
) -> dict:
    """Score predictions against gold, per story and micro-aggregated.

    ``pairs`` holds (prediction, gold story) with matching ids; selection
    picks metric families; absent values are reported as None.
    """
    unknown = [m for m in selection if m not in METRIC_KEYS]
    if unknown:
        raise ValueError(f"unknown metrics {unknown}; known: {list(METRIC_KEYS)}")
    totals: dict[str, metrics.PRCounts] = {}
    pk_values: dict[int, list[float]] = {k: [] for k in ks}
    pearson_values: dict[str, list[float]] = {"text": [], "visual": [], "multimodal": []}
    stories: dict[str, dict] = {}

    def add(key: str, counts: metrics.PRCounts, report: dict) -> None:
        totals[key] = totals.get(key, metrics.PRCounts()) + counts
        report[key] = _pr_dict(counts)

    for grounded, story in pairs:
        if grounded.story_id != story.story_id:
            raise DataError(
                f"prediction {grounded.story_id!r} paired with story {story.story_id!r}"
            )
        gold = story.gold
        if gold is None:
            raise DataError(f"story {story.story_id!r} has no gold annotation")
        report: dict = {}
        pred_mentions = [m for c in grounded.text_chains for m in c.mentions]
        pred_faces = [f for c in grounded.visual_chains for f in c.faces]
        if "detection" in selection:
            add(
                "detection_text",
                metrics.detection_counts(pred_mentions, gold.text_chains, metrics.TEXT_MATCHER, story),
                report,
            )
            add(
                "detection_visual",
                metrics.detection_counts(pred_faces, gold.visual_chains, metrics.FACE_MATCHER),
                report,
            )
        if "bcubed" in selection:
            add(
                "coref_text_b_cubed",
                metrics.b_cubed_counts(grounded.text_chains, gold.text_chains, metrics.TEXT_MATCHER, story),
                report,
            )
            add(
                "coref_visual_b_cubed",
                metrics.b_cubed_counts(grounded.visual_chains, gold.visual_chains, metrics.FACE_MATCHER),
                report,
            )
        if "exact" in selection:
            add(
                "coref_text_exact_match",
                metrics.exact_match_counts(grounded.text_chains, gold.text_chains, metrics.TEXT_MATCHER, story),
                report,
            )
            add(
                "coref_visual_exact_match",
                metrics.exact_match_counts(grounded.visual_chains, gold.visual_chains, metrics.FACE_MATCHER),
                report,
            )
        if "grounding" in selection:
            add(
                "grounding",
                metrics.grounding_counts(
                    story, grounded.text_chains, grounded.visual_chains, grounded.alignment, gold
                ),
                report,
            )
        if "pk" in selection:
            ranked = ranking.ranked_chains(grounded.chains)
            gold_ranking = metrics.gold_importance_ranking(gold)
            head = lambda chain: metrics.chain_head_word(story, chain)  # noqa: E731
            report["p_at_k"] = {}
            for k in ks:
                value = metrics.precision_at_k(ranked, gold_ranking, k, head)
                report["p_at_k"][str(k)] = value
                if value is not None:
                    pk_values[k].append(value)
        if "pearson" in selection:
            values = metrics.story_pearson(gold)
            report["pearson"] = values
            for key, value in values.items():
                if value is not None:
                    pearson_values[key].append(value)
        stories[story.story_id] = report

    corpus: dict = {}
    for key in sorted(totals):
        corpus[key] = _pr_dict(totals[key])
    if "pk" in selection:
        corpus["p_at_k"] = {
            str(k): (sum(vals) / len(vals) if vals else None) for k, vals in pk_values.items()
        }
    if "pearson" in selection:
        corpus["pearson"] = {
            key: (sum(vals) / len(vals) if vals else None)
            for key, vals in pearson_values.items()
        }
    return {"format_version": 1, "stories": stories, "corpus": corpus}


# ---------------------------------------------------------------------------
# whole pipeline


@dataclass(frozen=True)
class PipelineResult:
    story: AnnotatedStory
    text_chains: tuple[TextChain, ...]
    visual_chains: tuple[VisualChain, ...]
    grounded: GroundedStory
    ranked: tuple[MultiModalChain, ...]


def run_pipeline(
    story: AnnotatedStory,
    embeddings: Optional[EmbeddingTable] = None,
    lexicon: Optional[textchars.CharacterLexicon] = None,
    clustering: ClusteringConfig = ClusteringConfig(),
    grounding_cfg: GroundingConfig = GroundingConfig(),
    coref: str = "heuristic",
    external_chains: Optional[Sequence[Sequence[tuple[int, int]]]] = None,
    use_gold_chains: bool = False,
) -> PipelineResult:
    """Run detection, clustering, grounding and ranking for one story."""
    if use_gold_chains:
        text_chains, visual_chains = gold_input_chains(story)
    else:
        text_chains = detect_text_stage(story, lexicon, coref, external_chains)
        visual_chains = cluster_stage(embeddings, clustering) if embeddings is not None else []
    grounded = ground_stage(story, text_chains, visual_chains, embeddings, grounding_cfg)
    ranked = rank_stage(grounded.chains)
    return PipelineResult(
        story=story,
        text_chains=tuple(text_chains),
        visual_chains=tuple(visual_chains),
        grounded=grounded,
        ranked=tuple(ranked),
    )
