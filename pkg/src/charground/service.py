"""HTTP service exposing every pipeline stage.

Request bodies carry the same JSON documents the file formats use (stories,
embedding tables, stage outputs), validated by the loaders in
:mod:`charground.io`; responses are those documents again, so files written
by the CLI can be posted as-is.
"""

from __future__ import annotations

from typing import Any, Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import io, metrics, pipeline, textchars
from .errors import DataError
from .grounding import GroundingConfig, GroundingMethod
from .visualchars import ClusteringConfig


class DetectTextRequest(BaseModel):
    story: dict
    coref: str = "heuristic"
    external_chains: Optional[dict] = None
    lexicon_words: Optional[list[str]] = None
    group_words: Optional[list[str]] = None


class ChainsResponse(BaseModel):
    format_version: int
    story_id: str
    chains: list[dict]


class ClusterRequest(BaseModel):
    embeddings: dict
    story_id: str = ""
    k_min: int = 2
    k_max: int = 10
    max_iterations: int = 100
    tolerance: float = 1e-6
    seed: int = 0
    restarts: int = 8


class GroundRequest(BaseModel):
    story: dict
    text_chains: Optional[dict] = None
    visual_chains: Optional[dict] = None
    embeddings: Optional[dict] = None
    method: str = "dist"
    plural_threshold: float = 0.6
    drop_zero_similarity: bool = True
    use_gold_chains: bool = False


class GroundedResponse(BaseModel):
    format_version: int
    story_id: str
    text_chains: list[dict]
    visual_chains: list[dict]
    alignment: dict
    chains: list[dict]


class RankRequest(BaseModel):
    grounded: dict
    modality: str = "multi"


class RankingResponse(BaseModel):
    format_version: int
    story_id: str
    modality: str
    ranking: list[dict]


class EvalRequest(BaseModel):
    predictions: list[dict]
    stories: list[dict]
    metrics: list[str] = Field(default_factory=lambda: list(pipeline.METRIC_KEYS))
    ks: list[int] = Field(default_factory=lambda: list(pipeline.DEFAULT_KS))


class ReportResponse(BaseModel):
    report: dict


class AgreementRequest(BaseModel):
    reference: list[dict]
    candidate: list[dict]


class StatsRequest(BaseModel):
    stories: list[dict]


class PipelineRequest(BaseModel):
    story: dict
    embeddings: Optional[dict] = None
    coref: str = "heuristic"
    external_chains: Optional[dict] = None
    use_gold_chains: bool = False
    method: str = "dist"
    plural_threshold: float = 0.6
    drop_zero_similarity: bool = True
    k_min: int = 2
    k_max: int = 10
    seed: int = 0
    restarts: int = 8


class PipelineResponse(BaseModel):
    text_chains: dict
    visual_chains: dict
    grounded: dict
    ranking: dict
    report: Optional[dict] = None


def _lexicon(words: Optional[list[str]], group: Optional[list[str]]) -> textchars.CharacterLexicon:
    base = textchars.load_lexicon()
    return textchars.CharacterLexicon(
        words=frozenset(w.lower() for w in words) if words is not None else base.words,
        group_words=frozenset(w.lower() for w in group) if group is not None else base.group_words,
    )


def _grounding_config(method: str, threshold: float, drop_zero: bool) -> GroundingConfig:
    try:
        method_enum = GroundingMethod(method)
    except ValueError:
        raise HTTPException(status_code=422, detail=f"unknown method {method!r}") from None
    cfg = GroundingConfig(
        method=method_enum, plural_threshold=threshold, drop_zero_similarity=drop_zero
    )
    cfg.validate()
    return cfg


def create_app() -> FastAPI:
    app = FastAPI(title="charground", version="0.1.0")

    @app.exception_handler(DataError)
    async def data_error(_, err: DataError):
        return JSONResponse(status_code=400, content={"detail": str(err)})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/detect-text", response_model=ChainsResponse)
    def detect_text(req: DetectTextRequest):
        story = io.parse_story(req.story)
        external = (
            io.parse_external_coref(req.external_chains) if req.external_chains else None
        )
        coref = "external" if external is not None else req.coref
        if coref not in ("heuristic", "external"):
            raise HTTPException(status_code=422, detail=f"unknown coref mode {coref!r}")
        chains = pipeline.detect_text_stage(
            story, _lexicon(req.lexicon_words, req.group_words), coref, external
        )
        return io.text_chains_to_dict(story.story_id, chains)

    @app.post("/cluster", response_model=ChainsResponse)
    def cluster(req: ClusterRequest):
        table = io.parse_embeddings(req.embeddings)
        try:
            cfg = ClusteringConfig(
                k_min=req.k_min,
                k_max=req.k_max,
                max_iterations=req.max_iterations,
                tolerance=req.tolerance,
                seed=req.seed,
                restarts=req.restarts,
            )
            cfg.validate()
            chains = pipeline.cluster_stage(table, cfg)
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err)) from None
        return io.visual_chains_to_dict(req.story_id, chains)

    @app.post("/ground", response_model=GroundedResponse)
    def ground(req: GroundRequest):
        story = io.parse_story(req.story)
        cfg = _grounding_config(req.method, req.plural_threshold, req.drop_zero_similarity)
        if req.use_gold_chains:
            text_chains, visual_chains = pipeline.gold_input_chains(story)
        else:
            if req.text_chains is None or req.visual_chains is None:
                raise HTTPException(
                    status_code=422,
                    detail="supply text_chains and visual_chains or set use_gold_chains",
                )
            _, text_chains = io.parse_text_chains(req.text_chains)
            _, visual_chains = io.parse_visual_chains(req.visual_chains)
        table = io.parse_embeddings(req.embeddings) if req.embeddings else None
        grounded = pipeline.ground_stage(story, text_chains, visual_chains, table, cfg)
        return io.grounded_to_dict(grounded)

    @app.post("/rank", response_model=RankingResponse)
    def rank(req: RankRequest):
        grounded = io.parse_grounded(req.grounded)
        if req.modality not in pipeline.MODALITIES:
            raise HTTPException(status_code=422, detail=f"unknown modality {req.modality!r}")
        chains = pipeline.modality_chains(
            req.modality, grounded.text_chains, grounded.visual_chains, grounded.chains
        )
        ranked = pipeline.rank_stage(chains)
        return io.ranking_to_dict(grounded.story_id, req.modality, ranked)

    @app.post("/eval", response_model=ReportResponse)
    def evaluate(req: EvalRequest):
        stories = {s.story_id: s for s in (io.parse_story(d) for d in req.stories)}
        pairs = []
        for doc in req.predictions:
            grounded = io.parse_grounded(doc)
            if grounded.story_id not in stories:
                raise HTTPException(
                    status_code=400,
                    detail=f"no gold story for prediction {grounded.story_id!r}",
                )
            pairs.append((grounded, stories[grounded.story_id]))
        try:
            report = pipeline.evaluate_stories(pairs, req.metrics, req.ks)
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err)) from None
        return {"report": report}

    @app.post("/agreement", response_model=ReportResponse)
    def agreement(req: AgreementRequest):
        reference = [io.parse_story(d) for d in req.reference]
        candidate = [io.parse_story(d) for d in req.candidate]
        return {"report": metrics.agreement_report(reference, candidate)}

    @app.post("/stats", response_model=ReportResponse)
    def stats(req: StatsRequest):
        stories = [io.parse_story(d) for d in req.stories]
        return {"report": metrics.dataset_stats(stories)}

    @app.post("/pipeline", response_model=PipelineResponse)
    def run(req: PipelineRequest):
        story = io.parse_story(req.story)
        table = io.parse_embeddings(req.embeddings) if req.embeddings else None
        external = (
            io.parse_external_coref(req.external_chains) if req.external_chains else None
        )
        cfg = _grounding_config(req.method, req.plural_threshold, req.drop_zero_similarity)
        try:
            clustering = ClusteringConfig(
                k_min=req.k_min, k_max=req.k_max, seed=req.seed, restarts=req.restarts
            )
            clustering.validate()
            result = pipeline.run_pipeline(
                story,
                embeddings=table,
                clustering=clustering,
                grounding_cfg=cfg,
                coref="external" if external is not None else req.coref,
                external_chains=external,
                use_gold_chains=req.use_gold_chains,
            )
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err)) from None
        report = None
        if story.gold is not None:
            report = pipeline.evaluate_stories([(result.grounded, story)])
        return PipelineResponse(
            text_chains=io.text_chains_to_dict(story.story_id, result.text_chains),
            visual_chains=io.visual_chains_to_dict(story.story_id, result.visual_chains),
            grounded=io.grounded_to_dict(result.grounded),
            ranking=io.ranking_to_dict(story.story_id, "multi", result.ranked),
            report=report,
        )

    return app


app = create_app()
