"""File formats: story/annotation documents, embedding tables, external
co-reference chains, stage outputs and reports.

All carriers are JSON with a top-level ``format_version`` (currently 1).
Writers produce deterministic bytes (sorted keys, two-space indent, trailing
newline); reports additionally support a flat CSV rendering with values
rounded to four decimals for display.  Loaders reject exactly the inputs
that violate the model invariants; nothing is silently repaired.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import DataError
from .grounding import Alignment
from .model import (
    AnnotatedStory,
    BoundingBox,
    FaceInstance,
    GoldAnnotation,
    ImageDesc,
    Mention,
    MentionKind,
    MultiModalChain,
    Number,
    Sentence,
    TextChain,
    Token,
    VisualChain,
    multimodal_chain,
    validate_story,
)
from .textchars import PRONOUN_TAGS

FORMAT_VERSION = 1


def _dump_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False, ensure_ascii=False) + "\n"


def _write(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as err:
        raise DataError(f"{path}: malformed JSON ({err})") from err
    except OSError as err:
        raise DataError(f"{path}: {err.strerror or err}") from err


def _check_version(doc, where: str) -> None:
    version = doc.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise DataError(f"{where}: unsupported format_version {version!r}")


def _get(obj, key, where, required=True, default=None):
    if not isinstance(obj, dict):
        raise DataError(f"{where}: expected an object")
    if key not in obj:
        if required:
            raise DataError(f"{where}: missing field {key!r}")
        return default
    return obj[key]


def _int(value, where) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DataError(f"{where}: expected an integer, got {value!r}")
    return value


def _num(value, where) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise DataError(f"{where}: non-finite number")
    return value


def _str(value, where) -> str:
    if not isinstance(value, str):
        raise DataError(f"{where}: expected a string, got {value!r}")
    return value


def _list(value, where) -> list:
    if not isinstance(value, list):
        raise DataError(f"{where}: expected a list")
    return value


def _number_enum(value, where) -> Number:
    try:
        return Number(_str(value, where))
    except ValueError:
        raise DataError(f"{where}: unknown number class {value!r}") from None


# ---------------------------------------------------------------------------
# story documents


def _parse_box(obj, where) -> BoundingBox:
    return BoundingBox(
        x=_num(_get(obj, "x", where), f"{where}.x"),
        y=_num(_get(obj, "y", where), f"{where}.y"),
        w=_num(_get(obj, "w", where), f"{where}.w"),
        h=_num(_get(obj, "h", where), f"{where}.h"),
    )


def _box_to_dict(box: BoundingBox) -> dict:
    return {"x": box.x, "y": box.y, "w": box.w, "h": box.h}


def _mention_kind(story_tokens, sentence_index, token_start, token_end) -> MentionKind:
    try:
        tokens = story_tokens[sentence_index][token_start:token_end]
    except IndexError:
        return MentionKind.NOUN
    for tok in reversed(tokens):
        if tok.pos in PRONOUN_TAGS:
            return MentionKind.PRONOUN
        break
    return MentionKind.NOUN


def _parse_gold(obj, sentences: Sequence[Sentence], where: str) -> GoldAnnotation:
    tokens_by_sentence = [s.tokens for s in sentences]
    text_chains = []
    for ci, chain_obj in enumerate(_list(_get(obj, "text_chains", where), f"{where}.text_chains")):
        cw = f"{where}.text_chains[{ci}]"
        number = _number_enum(_get(chain_obj, "number", cw), f"{cw}.number")
        mentions = []
        for mi, m in enumerate(_list(_get(chain_obj, "mentions", cw), f"{cw}.mentions")):
            mw = f"{cw}.mentions[{mi}]"
            sentence_index = _int(_get(m, "sentence_index", mw), f"{mw}.sentence_index")
            token_start = _int(_get(m, "token_start", mw), f"{mw}.token_start")
            token_end = _int(_get(m, "token_end", mw), f"{mw}.token_end")
            mentions.append(
                Mention(
                    sentence_index=sentence_index,
                    token_start=token_start,
                    token_end=token_end,
                    surface=_str(_get(m, "text", mw), f"{mw}.text"),
                    number=number,
                    kind=_mention_kind(tokens_by_sentence, sentence_index, token_start, token_end),
                )
            )
        text_chains.append(
            TextChain(
                chain_id=_str(_get(chain_obj, "chain_id", cw), f"{cw}.chain_id"),
                mentions=tuple(sorted(mentions, key=Mention.position)),
                number=number,
            )
        )
    visual_chains = []
    for ci, chain_obj in enumerate(
        _list(_get(obj, "visual_chains", where), f"{where}.visual_chains")
    ):
        cw = f"{where}.visual_chains[{ci}]"
        faces = []
        for bi, b in enumerate(_list(_get(chain_obj, "boxes", cw), f"{cw}.boxes")):
            bw = f"{cw}.boxes[{bi}]"
            faces.append(
                FaceInstance(
                    image_index=_int(_get(b, "image_index", bw), f"{bw}.image_index"),
                    box=_parse_box(b, bw),
                )
            )
        faces.sort(key=lambda f: (f.image_index, f.box.x, f.box.y, f.box.w, f.box.h))
        visual_chains.append(
            VisualChain(
                chain_id=_str(_get(chain_obj, "chain_id", cw), f"{cw}.chain_id"),
                faces=tuple(faces),
            )
        )
    alignment = []
    for ai, pair in enumerate(_list(_get(obj, "alignment", where, required=False, default=[]),
                                    f"{where}.alignment")):
        aw = f"{where}.alignment[{ai}]"
        alignment.append(
            (
                _str(_get(pair, "text_chain_id", aw), f"{aw}.text_chain_id"),
                _str(_get(pair, "visual_chain_id", aw), f"{aw}.visual_chain_id"),
            )
        )
    importance = []
    for ii, entry in enumerate(_list(_get(obj, "importance", where, required=False, default=[]),
                                     f"{where}.importance")):
        iw = f"{where}.importance[{ii}]"
        stars = _get(entry, "stars", iw)
        if isinstance(stars, bool) or not isinstance(stars, int):
            raise DataError(f"{iw}.stars: stars must be an integer (fractional ratings rejected)")
        importance.append((_str(_get(entry, "chain_id", iw), f"{iw}.chain_id"), stars))
    return GoldAnnotation(
        text_chains=tuple(text_chains),
        visual_chains=tuple(visual_chains),
        alignment=tuple(alignment),
        importance=tuple(importance),
    )


def parse_story(doc, source: str = "story") -> AnnotatedStory:
    """Build and validate a story from its document form."""
    _check_version(doc, source)
    story_id = _str(_get(doc, "story_id", source), f"{source}.story_id")
    where = f"story {story_id!r}"
    sentences = []
    for si, s in enumerate(_list(_get(doc, "sentences", where), f"{where}.sentences")):
        sw = f"{where}.sentences[{si}]"
        tokens = []
        for ti, t in enumerate(_list(_get(s, "tokens", sw), f"{sw}.tokens")):
            tw = f"{sw}.tokens[{ti}]"
            tokens.append(
                Token(
                    text=_str(_get(t, "text", tw), f"{tw}.text"),
                    pos=_str(_get(t, "pos", tw), f"{tw}.pos"),
                    char_start=_int(_get(t, "char_start", tw), f"{tw}.char_start"),
                    char_end=_int(_get(t, "char_end", tw), f"{tw}.char_end"),
                )
            )
        sentences.append(
            Sentence(
                index=_int(_get(s, "index", sw), f"{sw}.index"),
                text=_str(_get(s, "text", sw), f"{sw}.text"),
                tokens=tuple(tokens),
            )
        )
    images = []
    for ii, img in enumerate(_list(_get(doc, "images", where), f"{where}.images")):
        iw = f"{where}.images[{ii}]"
        images.append(
            ImageDesc(
                index=_int(_get(img, "index", iw), f"{iw}.index"),
                width=_int(_get(img, "width", iw), f"{iw}.width"),
                height=_int(_get(img, "height", iw), f"{iw}.height"),
            )
        )
    gold_obj = _get(doc, "gold", where, required=False)
    gold = _parse_gold(gold_obj, sentences, f"{where}.gold") if gold_obj is not None else None
    story = AnnotatedStory(
        story_id=story_id, sentences=tuple(sentences), images=tuple(images), gold=gold
    )
    violations = validate_story(story)
    if violations:
        raise DataError(f"{where}: " + "; ".join(violations))
    return story


def _gold_to_dict(gold: GoldAnnotation) -> dict:
    return {
        "text_chains": [
            {
                "chain_id": c.chain_id,
                "number": c.number.value,
                "mentions": [
                    {
                        "sentence_index": m.sentence_index,
                        "token_start": m.token_start,
                        "token_end": m.token_end,
                        "text": m.surface,
                    }
                    for m in c.mentions
                ],
            }
            for c in gold.text_chains
        ],
        "visual_chains": [
            {
                "chain_id": c.chain_id,
                "boxes": [
                    {"image_index": f.image_index, **_box_to_dict(f.box)} for f in c.faces
                ],
            }
            for c in gold.visual_chains
        ],
        "alignment": [
            {"text_chain_id": t, "visual_chain_id": v} for t, v in gold.alignment
        ],
        "importance": [
            {"chain_id": cid, "stars": stars} for cid, stars in gold.importance
        ],
    }


def story_to_dict(story: AnnotatedStory) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "story_id": story.story_id,
        "sentences": [
            {
                "index": s.index,
                "text": s.text,
                "tokens": [
                    {
                        "text": t.text,
                        "pos": t.pos,
                        "char_start": t.char_start,
                        "char_end": t.char_end,
                    }
                    for t in s.tokens
                ],
            }
            for s in story.sentences
        ],
        "images": [
            {"index": i.index, "width": i.width, "height": i.height} for i in story.images
        ],
    }
    if story.gold is not None:
        doc["gold"] = _gold_to_dict(story.gold)
    return doc


def load_story(path) -> AnnotatedStory:
    return parse_story(_read_json(path), source=str(path))


def write_story(story: AnnotatedStory, path) -> None:
    _write(path, _dump_json(story_to_dict(story)))


# ---------------------------------------------------------------------------
# embeddings


def _face_key(image_index: int, box: BoundingBox):
    return (image_index, box.x, box.y, box.w, box.h)


@dataclass(frozen=True)
class EmbeddingTable:
    """Uniform-dimension vectors keyed by face (image index + box) and by
    mention surface string."""

    dim: int
    faces: dict
    mentions: dict

    def face_vector(self, face: FaceInstance) -> tuple[float, ...]:
        key = _face_key(face.image_index, face.box)
        try:
            return self.faces[key]
        except KeyError:
            raise DataError(
                f"no embedding for face at image {face.image_index}, box "
                f"({face.box.x}, {face.box.y}, {face.box.w}, {face.box.h})"
            ) from None

    def mention_vector(self, surface: str) -> tuple[float, ...]:
        try:
            return self.mentions[surface]
        except KeyError:
            raise DataError(f"no embedding for mention surface {surface!r}") from None

    def face_instances(self) -> list[FaceInstance]:
        """All faces as instances carrying their embeddings, in key order."""
        return [
            FaceInstance(
                image_index=key[0],
                box=BoundingBox(x=key[1], y=key[2], w=key[3], h=key[4]),
                embedding=vector,
            )
            for key, vector in sorted(self.faces.items())
        ]


def _parse_vector(value, dim: int, where: str) -> tuple[float, ...]:
    vec = tuple(_num(v, f"{where}[{i}]") for i, v in enumerate(_list(value, where)))
    if len(vec) != dim:
        raise DataError(f"{where}: vector length {len(vec)} does not match dim {dim}")
    return vec


def parse_embeddings(doc, source: str = "embeddings") -> EmbeddingTable:
    _check_version(doc, source)
    dim = _int(_get(doc, "dim", source), f"{source}.dim")
    if dim <= 0:
        raise DataError(f"{source}.dim: must be positive")
    faces = {}
    for fi, entry in enumerate(_list(_get(doc, "faces", source, required=False, default=[]),
                                     f"{source}.faces")):
        fw = f"{source}.faces[{fi}]"
        image_index = _int(_get(entry, "image_index", fw), f"{fw}.image_index")
        box = _parse_box(_get(entry, "box", fw), f"{fw}.box")
        key = _face_key(image_index, box)
        if key in faces:
            raise DataError(f"{fw}: duplicate face key (image {image_index}, box {key[1:]})")
        faces[key] = _parse_vector(_get(entry, "vector", fw), dim, f"{fw}.vector")
    mentions = {}
    for mi, entry in enumerate(_list(_get(doc, "mentions", source, required=False, default=[]),
                                     f"{source}.mentions")):
        mw = f"{source}.mentions[{mi}]"
        surface = _str(_get(entry, "surface", mw), f"{mw}.surface")
        if surface in mentions:
            raise DataError(f"{mw}: duplicate mention surface {surface!r}")
        mentions[surface] = _parse_vector(_get(entry, "vector", mw), dim, f"{mw}.vector")
    return EmbeddingTable(dim=dim, faces=faces, mentions=mentions)


def embeddings_to_dict(table: EmbeddingTable) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "dim": table.dim,
        "faces": [
            {
                "image_index": key[0],
                "box": {"x": key[1], "y": key[2], "w": key[3], "h": key[4]},
                "vector": list(vector),
            }
            for key, vector in sorted(table.faces.items())
        ],
        "mentions": [
            {"surface": surface, "vector": list(vector)}
            for surface, vector in sorted(table.mentions.items())
        ],
    }


def load_embeddings(path) -> EmbeddingTable:
    return parse_embeddings(_read_json(path), source=str(path))


def write_embeddings(table: EmbeddingTable, path) -> None:
    _write(path, _dump_json(embeddings_to_dict(table)))


# ---------------------------------------------------------------------------
# external co-reference chains


def parse_external_coref(doc, source: str = "coref") -> list[list[tuple[int, int]]]:
    _check_version(doc, source)
    chains = []
    for ci, chain in enumerate(_list(_get(doc, "chains", source), f"{source}.chains")):
        cw = f"{source}.chains[{ci}]"
        members = []
        for mi, entry in enumerate(_list(chain, cw)):
            mw = f"{cw}[{mi}]"
            members.append(
                (
                    _int(_get(entry, "sentence_index", mw), f"{mw}.sentence_index"),
                    _int(_get(entry, "token_index", mw), f"{mw}.token_index"),
                )
            )
        chains.append(members)
    return chains


def load_external_coref(path) -> list[list[tuple[int, int]]]:
    return parse_external_coref(_read_json(path), source=str(path))


# ---------------------------------------------------------------------------
# stage documents: text chains, visual chains, grounded stories, rankings


def _mention_to_dict(m: Mention) -> dict:
    return {
        "sentence_index": m.sentence_index,
        "token_start": m.token_start,
        "token_end": m.token_end,
        "surface": m.surface,
        "number": m.number.value,
        "kind": m.kind.value,
    }


def _parse_stage_mention(obj, where) -> Mention:
    kind = _str(_get(obj, "kind", where), f"{where}.kind")
    try:
        kind_enum = MentionKind(kind)
    except ValueError:
        raise DataError(f"{where}.kind: unknown kind {kind!r}") from None
    return Mention(
        sentence_index=_int(_get(obj, "sentence_index", where), f"{where}.sentence_index"),
        token_start=_int(_get(obj, "token_start", where), f"{where}.token_start"),
        token_end=_int(_get(obj, "token_end", where), f"{where}.token_end"),
        surface=_str(_get(obj, "surface", where), f"{where}.surface"),
        number=_number_enum(_get(obj, "number", where), f"{where}.number"),
        kind=kind_enum,
    )


def _text_chain_to_dict(chain: TextChain) -> dict:
    return {
        "chain_id": chain.chain_id,
        "number": chain.number.value,
        "mentions": [_mention_to_dict(m) for m in chain.mentions],
    }


def _parse_text_chain(obj, where) -> TextChain:
    mentions = [
        _parse_stage_mention(m, f"{where}.mentions[{i}]")
        for i, m in enumerate(_list(_get(obj, "mentions", where), f"{where}.mentions"))
    ]
    return TextChain(
        chain_id=_str(_get(obj, "chain_id", where), f"{where}.chain_id"),
        mentions=tuple(mentions),
        number=_number_enum(_get(obj, "number", where), f"{where}.number"),
    )


def text_chains_to_dict(story_id: str, chains: Sequence[TextChain]) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "story_id": story_id,
        "chains": [_text_chain_to_dict(c) for c in chains],
    }


def parse_text_chains(doc, source: str = "text chains") -> tuple[str, list[TextChain]]:
    _check_version(doc, source)
    story_id = _str(_get(doc, "story_id", source), f"{source}.story_id")
    chains = [
        _parse_text_chain(c, f"{source}.chains[{i}]")
        for i, c in enumerate(_list(_get(doc, "chains", source), f"{source}.chains"))
    ]
    return story_id, chains


def load_text_chains(path) -> tuple[str, list[TextChain]]:
    return parse_text_chains(_read_json(path), source=str(path))


def _visual_chain_to_dict(chain: VisualChain) -> dict:
    return {
        "chain_id": chain.chain_id,
        "faces": [
            {"image_index": f.image_index, "box": _box_to_dict(f.box)} for f in chain.faces
        ],
    }


def _parse_visual_chain(obj, where) -> VisualChain:
    faces = []
    for i, f in enumerate(_list(_get(obj, "faces", where), f"{where}.faces")):
        fw = f"{where}.faces[{i}]"
        faces.append(
            FaceInstance(
                image_index=_int(_get(f, "image_index", fw), f"{fw}.image_index"),
                box=_parse_box(_get(f, "box", fw), f"{fw}.box"),
            )
        )
    return VisualChain(
        chain_id=_str(_get(obj, "chain_id", where), f"{where}.chain_id"),
        faces=tuple(faces),
    )


def visual_chains_to_dict(story_id: str, chains: Sequence[VisualChain]) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "story_id": story_id,
        "chains": [_visual_chain_to_dict(c) for c in chains],
    }


def parse_visual_chains(doc, source: str = "visual chains") -> tuple[str, list[VisualChain]]:
    _check_version(doc, source)
    story_id = _str(_get(doc, "story_id", source), f"{source}.story_id")
    chains = [
        _parse_visual_chain(c, f"{source}.chains[{i}]")
        for i, c in enumerate(_list(_get(doc, "chains", source), f"{source}.chains"))
    ]
    return story_id, chains


def load_visual_chains(path) -> tuple[str, list[VisualChain]]:
    return parse_visual_chains(_read_json(path), source=str(path))


def read_document(path) -> dict:
    """Raw JSON document read with load-error wrapping (for format sniffing)."""
    return _read_json(path)


@dataclass(frozen=True)
class GroundedStory:
    story_id: str
    text_chains: tuple[TextChain, ...]
    visual_chains: tuple[VisualChain, ...]
    alignment: Alignment
    chains: tuple[MultiModalChain, ...]


def grounded_to_dict(grounded: GroundedStory) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "story_id": grounded.story_id,
        "text_chains": [_text_chain_to_dict(c) for c in grounded.text_chains],
        "visual_chains": [_visual_chain_to_dict(c) for c in grounded.visual_chains],
        "alignment": {
            "pairs": [
                {"text_chain_index": t, "visual_chain_index": v, "score": s}
                for t, v, s in grounded.alignment.pairs
            ],
            "plural_attachments": [
                {"visual_chain_index": v, "text_chain_index": t, "score": s}
                for v, t, s in grounded.alignment.plural_attachments
            ],
        },
        "chains": [
            {
                "chain_id": c.chain_id,
                "importance": c.importance,
                "text": _text_chain_to_dict(c.text) if c.text is not None else None,
                "visual": _visual_chain_to_dict(c.visual) if c.visual is not None else None,
            }
            for c in grounded.chains
        ],
    }


def parse_grounded(doc, source: str = "grounded story") -> GroundedStory:
    _check_version(doc, source)
    story_id = _str(_get(doc, "story_id", source), f"{source}.story_id")
    text_chains = tuple(
        _parse_text_chain(c, f"{source}.text_chains[{i}]")
        for i, c in enumerate(_list(_get(doc, "text_chains", source), f"{source}.text_chains"))
    )
    visual_chains = tuple(
        _parse_visual_chain(c, f"{source}.visual_chains[{i}]")
        for i, c in enumerate(_list(_get(doc, "visual_chains", source), f"{source}.visual_chains"))
    )
    align_obj = _get(doc, "alignment", source)
    pairs = tuple(
        (
            _int(_get(p, "text_chain_index", f"{source}.alignment.pairs[{i}]"), "text_chain_index"),
            _int(_get(p, "visual_chain_index", f"{source}.alignment.pairs[{i}]"), "visual_chain_index"),
            _num(_get(p, "score", f"{source}.alignment.pairs[{i}]"), "score"),
        )
        for i, p in enumerate(_list(_get(align_obj, "pairs", source), f"{source}.alignment.pairs"))
    )
    attachments = tuple(
        (
            _int(_get(p, "visual_chain_index", f"{source}.alignment.plural_attachments[{i}]"),
                 "visual_chain_index"),
            _int(_get(p, "text_chain_index", f"{source}.alignment.plural_attachments[{i}]"),
                 "text_chain_index"),
            _num(_get(p, "score", f"{source}.alignment.plural_attachments[{i}]"), "score"),
        )
        for i, p in enumerate(
            _list(_get(align_obj, "plural_attachments", source),
                  f"{source}.alignment.plural_attachments")
        )
    )
    chains = []
    for i, c in enumerate(_list(_get(doc, "chains", source), f"{source}.chains")):
        cw = f"{source}.chains[{i}]"
        text_obj = _get(c, "text", cw, required=False)
        visual_obj = _get(c, "visual", cw, required=False)
        text = _parse_text_chain(text_obj, f"{cw}.text") if text_obj is not None else None
        visual = _parse_visual_chain(visual_obj, f"{cw}.visual") if visual_obj is not None else None
        chain = multimodal_chain(_str(_get(c, "chain_id", cw), f"{cw}.chain_id"), text, visual)
        declared = _int(_get(c, "importance", cw), f"{cw}.importance")
        if declared != chain.importance:
            raise DataError(
                f"{cw}: importance {declared} does not match side lengths ({chain.importance})"
            )
        chains.append(chain)
    return GroundedStory(
        story_id=story_id,
        text_chains=text_chains,
        visual_chains=visual_chains,
        alignment=Alignment(pairs=pairs, plural_attachments=attachments),
        chains=tuple(chains),
    )


def load_grounded(path) -> GroundedStory:
    return parse_grounded(_read_json(path), source=str(path))


def write_grounded(grounded: GroundedStory, path) -> None:
    _write(path, _dump_json(grounded_to_dict(grounded)))


def ranking_to_dict(story_id: str, modality: str, ranked: Sequence[MultiModalChain]) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "story_id": story_id,
        "modality": modality,
        "ranking": [
            {"chain_id": c.chain_id, "importance": c.importance} for c in ranked
        ],
    }


# ---------------------------------------------------------------------------
# reports


def _flatten_report(value, prefix: str, rows: list[tuple[str, object]]) -> None:
    if isinstance(value, dict):
        for key in sorted(value):
            path = f"{prefix}.{key}" if prefix else str(key)
            _flatten_report(value[key], path, rows)
    else:
        rows.append((prefix, value))


def report_to_csv(report: dict) -> str:
    rows: list[tuple[str, object]] = []
    _flatten_report(report, "", rows)
    lines = ["metric,value"]
    for path, value in rows:
        if value is None:
            cell = ""
        elif isinstance(value, bool):
            cell = str(value).lower()
        elif isinstance(value, int):
            cell = str(value)
        elif isinstance(value, float):
            cell = f"{value:.4f}"
        else:
            cell = str(value)
        lines.append(f"{path},{cell}")
    return "\n".join(lines) + "\n"


def write_report(report: dict, path, fmt: str = "structured") -> None:
    """Write a report deterministically, as full-precision JSON
    ("structured") or a flat 4-decimal CSV ("csv")."""
    if fmt == "structured":
        _write(path, _dump_json(report))
    elif fmt == "csv":
        _write(path, report_to_csv(report))
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def load_report(path) -> dict:
    doc = _read_json(path)
    _check_version(doc, str(path)) if isinstance(doc, dict) else None
    return doc
