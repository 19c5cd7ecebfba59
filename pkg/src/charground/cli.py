"""Command-line client for the pipeline and evaluation suite.

Thin wrapper over the same stage functions the HTTP service exposes; all
outputs are deterministic given identical inputs and seed.  Exit codes:
0 success, 2 usage/parameter error, 3 data or schema error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import io, metrics, pipeline, textchars
from .errors import DataError
from .grounding import GroundingConfig, GroundingMethod
from .visualchars import ClusteringConfig

USAGE_EXIT = 2
DATA_EXIT = 3
SEED_ENV = "CHARGROUND_SEED"


def _resolve_seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return 0


def _emit(doc: dict, out: Optional[str]) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False, ensure_ascii=False) + "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_paths(path: str) -> list[Path]:
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.json"))
        if not files:
            raise DataError(f"{path}: directory contains no .json files")
        return files
    if not p.exists():
        raise DataError(f"{path}: no such file")
    return [p]


def _load_stories(path: str):
    return [io.load_story(p) for p in _json_paths(path)]


def _lexicon_from_args(args) -> textchars.CharacterLexicon:
    return textchars.load_lexicon(args.lexicon, args.group_words)


def _coref_from_args(args, story):
    if args.coref == "heuristic":
        return "heuristic", None
    if args.coref.startswith("external:"):
        path = args.coref.split(":", 1)[1]
        return "external", io.load_external_coref(path)
    raise ValueError(f"--coref must be 'heuristic' or 'external:PATH', got {args.coref!r}")


def cmd_detect_text(args) -> int:
    story = io.load_story(args.story)
    coref, external = _coref_from_args(args, story)
    chains = pipeline.detect_text_stage(story, _lexicon_from_args(args), coref, external)
    _emit(io.text_chains_to_dict(story.story_id, chains), args.out)
    return 0


def _clustering_from_args(args) -> ClusteringConfig:
    cfg = ClusteringConfig(
        k_min=args.k_min,
        k_max=args.k_max,
        seed=_resolve_seed(args.seed),
        restarts=args.restarts,
    )
    cfg.validate()
    return cfg


def cmd_cluster(args) -> int:
    cfg = _clustering_from_args(args)
    table = io.load_embeddings(args.embeddings)
    story_id = args.story_id
    if args.story:
        story_id = io.load_story(args.story).story_id
    chains = pipeline.cluster_stage(table, cfg)
    _emit(io.visual_chains_to_dict(story_id, chains), args.out)
    return 0


def _grounding_from_args(args) -> GroundingConfig:
    method = {"dist": GroundingMethod.DISTRIBUTIONAL, "embed": GroundingMethod.EMBEDDING}.get(
        args.method
    )
    if method is None:
        raise ValueError(f"--method must be 'dist' or 'embed', got {args.method!r}")
    cfg = GroundingConfig(
        method=method,
        plural_threshold=args.plural_threshold,
        drop_zero_similarity=not args.keep_zero,
    )
    cfg.validate()
    return cfg


def cmd_ground(args) -> int:
    story = io.load_story(args.story)
    cfg = _grounding_from_args(args)
    if args.use_gold_chains:
        text_chains, visual_chains = pipeline.gold_input_chains(story)
    else:
        if not args.text_chains or not args.visual_chains:
            raise ValueError("--text-chains and --visual-chains are required unless --use-gold-chains")
        _, text_chains = io.load_text_chains(args.text_chains)
        _, visual_chains = io.load_visual_chains(args.visual_chains)
    table = io.load_embeddings(args.embeddings) if args.embeddings else None
    grounded = pipeline.ground_stage(story, text_chains, visual_chains, table, cfg)
    _emit(io.grounded_to_dict(grounded), args.out)
    return 0


def cmd_rank(args) -> int:
    doc = io.read_document(args.chains)
    if args.modality not in pipeline.MODALITIES:
        raise ValueError(f"--modality must be one of {pipeline.MODALITIES}")
    if isinstance(doc, dict) and "alignment" in doc:
        grounded = io.parse_grounded(doc, args.chains)
        story_id = grounded.story_id
        chains = pipeline.modality_chains(
            args.modality, grounded.text_chains, grounded.visual_chains, grounded.chains
        )
    elif args.modality == "text":
        story_id, text_chains = io.parse_text_chains(doc, args.chains)
        chains = pipeline.modality_chains("text", text_chains=text_chains)
    elif args.modality == "image":
        story_id, visual_chains = io.parse_visual_chains(doc, args.chains)
        chains = pipeline.modality_chains("image", visual_chains=visual_chains)
    else:
        raise DataError(f"{args.chains}: multi-modality ranking needs a grounded chains file")
    ranked = pipeline.rank_stage(chains)
    _emit(io.ranking_to_dict(story_id, args.modality, ranked), args.out)
    return 0


def _write_report(report: dict, out: Optional[str], fmt: str) -> None:
    if out:
        io.write_report(report, out, fmt)
    elif fmt == "csv":
        sys.stdout.write(io.report_to_csv(report))
    else:
        _emit(report, None)


def cmd_eval(args) -> int:
    stories = {s.story_id: s for s in _load_stories(args.gold)}
    pairs = []
    for path in _json_paths(args.pred):
        grounded = io.load_grounded(path)
        if grounded.story_id not in stories:
            raise DataError(f"{path}: no gold story with id {grounded.story_id!r}")
        pairs.append((grounded, stories[grounded.story_id]))
    selection = [m.strip() for m in args.metrics.split(",") if m.strip()]
    ks = [int(k) for k in args.ks.split(",") if k.strip()]
    report = pipeline.evaluate_stories(pairs, selection, ks)
    _write_report(report, args.out, args.format)
    return 0


def cmd_agreement(args) -> int:
    reference = _load_stories(args.reference)
    candidate = _load_stories(args.candidate)
    report = {"format_version": 1, "agreement": metrics.agreement_report(reference, candidate)}
    _write_report(report, args.out, args.format)
    return 0


def cmd_stats(args) -> int:
    stories = _load_stories(args.gold)
    report = {"format_version": 1, "stats": metrics.dataset_stats(stories)}
    _write_report(report, args.out, args.format)
    return 0


def cmd_pipeline(args) -> int:
    cfg = _grounding_from_args(args)
    clustering = _clustering_from_args(args)
    lexicon = _lexicon_from_args(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    embeddings_by_id: dict[str, Path] = {}
    single_embeddings: Optional[Path] = None
    if args.embeddings:
        p = Path(args.embeddings)
        if p.is_dir():
            embeddings_by_id = {f.stem: f for f in sorted(p.glob("*.json"))}
        else:
            single_embeddings = p

    pairs = []
    for story in _load_stories(args.story):
        table = None
        path = single_embeddings or embeddings_by_id.get(story.story_id)
        if path is not None:
            table = io.load_embeddings(path)
        coref, external = _coref_from_args(args, story)
        result = pipeline.run_pipeline(
            story,
            embeddings=table,
            lexicon=lexicon,
            clustering=clustering,
            grounding_cfg=cfg,
            coref=coref,
            external_chains=external,
            use_gold_chains=args.use_gold_chains,
        )
        sid = story.story_id
        _emit(io.text_chains_to_dict(sid, result.text_chains), str(out_dir / f"{sid}.text_chains.json"))
        _emit(io.visual_chains_to_dict(sid, result.visual_chains), str(out_dir / f"{sid}.visual_chains.json"))
        _emit(io.grounded_to_dict(result.grounded), str(out_dir / f"{sid}.grounded.json"))
        _emit(io.ranking_to_dict(sid, "multi", result.ranked), str(out_dir / f"{sid}.ranking.json"))
        if story.gold is not None:
            pairs.append((result.grounded, story))
    if pairs:
        report = pipeline.evaluate_stories(pairs)
        io.write_report(report, out_dir / "report.json", "structured")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _add_lexicon_flags(sub) -> None:
    sub.add_argument("--lexicon", help="character lemma list (one per line); packaged default")
    sub.add_argument("--group-words", help="group noun list (one per line); packaged default")


def _add_cluster_flags(sub) -> None:
    sub.add_argument("--k-min", type=int, default=2)
    sub.add_argument("--k-max", type=int, default=10)
    sub.add_argument("--seed", type=int, default=None,
                     help=f"PRNG seed (default: ${SEED_ENV} or 0)")
    sub.add_argument("--restarts", type=int, default=8)


def _add_ground_flags(sub) -> None:
    sub.add_argument("--method", default="dist", help="similarity method: dist or embed")
    sub.add_argument("--plural-threshold", type=float, default=0.6)
    sub.add_argument("--keep-zero", action="store_true",
                     help="keep zero-similarity assignments instead of dropping them")


def _add_report_flags(sub) -> None:
    sub.add_argument("--out", help="output path (default: stdout)")
    sub.add_argument("--format", default="structured", choices=("structured", "csv"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="charground",
        description="Detect, co-refer, ground and rank story characters.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("detect-text", help="story file -> textual chains")
    p.add_argument("--story", required=True)
    _add_lexicon_flags(p)
    p.add_argument("--coref", default="heuristic", help="'heuristic' or 'external:PATH'")
    p.add_argument("--out")
    p.set_defaults(func=cmd_detect_text)

    p = subs.add_parser("cluster", help="embedding file -> visual chains")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--story", help="story file supplying the story id")
    p.add_argument("--story-id", default="")
    _add_cluster_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cluster)

    p = subs.add_parser("ground", help="text + visual chains -> multimodal chains")
    p.add_argument("--story", required=True)
    p.add_argument("--text-chains")
    p.add_argument("--visual-chains")
    p.add_argument("--embeddings")
    p.add_argument("--use-gold-chains", action="store_true",
                  help="align the story's gold chains instead of predictions")
    _add_ground_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ground)

    p = subs.add_parser("rank", help="chains file -> importance ranking")
    p.add_argument("--chains", required=True)
    p.add_argument("--modality", default="multi", help="text, image or multi")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rank)

    p = subs.add_parser("eval", help="score predictions against gold annotations")
    p.add_argument("--pred", required=True, help="grounded chains file or directory")
    p.add_argument("--gold", required=True, help="gold story file or directory")
    p.add_argument("--metrics", default=",".join(pipeline.METRIC_KEYS))
    p.add_argument("--ks", default=",".join(str(k) for k in pipeline.DEFAULT_KS))
    _add_report_flags(p)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("agreement", help="compare two annotations of the same stories")
    p.add_argument("--reference", required=True)
    p.add_argument("--candidate", required=True)
    _add_report_flags(p)
    p.set_defaults(func=cmd_agreement)

    p = subs.add_parser("stats", help="corpus statistics over gold annotations")
    p.add_argument("--gold", required=True)
    _add_report_flags(p)
    p.set_defaults(func=cmd_stats)

    p = subs.add_parser("pipeline", help="run every stage and write all outputs")
    p.add_argument("--story", required=True, help="story file or directory")
    p.add_argument("--embeddings", help="embedding file or directory (per story id)")
    _add_lexicon_flags(p)
    p.add_argument("--coref", default="heuristic")
    p.add_argument("--use-gold-chains", action="store_true")
    _add_ground_flags(p)
    _add_cluster_flags(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_pipeline)

    p = subs.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as err:
        print(f"error: {err}", file=sys.stderr)
        return DATA_EXIT
    except ValueError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
