"""Builders for synthetic stories, gold annotations and embeddings, plus
independent reference implementations used as test oracles."""

from __future__ import annotations

from fractions import Fraction

from charground.model import (
    AnnotatedStory,
    BoundingBox,
    FaceInstance,
    GoldAnnotation,
    ImageDesc,
    Mention,
    MentionKind,
    Number,
    Sentence,
    TextChain,
    Token,
    VisualChain,
)
from charground.textchars import PRONOUN_TAGS

NUMBER_TAGS = {Number.SINGULAR: "NN", Number.PLURAL: "NNS", Number.GROUP: "NN"}


def sentence_from_spec(index: int, spec: str) -> Sentence:
    """Build a sentence from "word/POS word/POS ..." with space-joined text."""
    tokens = []
    cursor = 0
    words = []
    for item in spec.split():
        word, pos = item.rsplit("/", 1)
        words.append(word)
        tokens.append(Token(text=word, pos=pos, char_start=cursor, char_end=cursor + len(word)))
        cursor += len(word) + 1
    return Sentence(index=index, text=" ".join(words), tokens=tuple(tokens))


def story_from_specs(story_id: str, specs, images=None, gold=None) -> AnnotatedStory:
    sentences = tuple(sentence_from_spec(i, spec) for i, spec in enumerate(specs))
    if images is None:
        images = tuple(ImageDesc(index=i, width=1280, height=400) for i in range(len(specs)))
    return AnnotatedStory(story_id=story_id, sentences=sentences, images=tuple(images), gold=gold)


def body_box(slot: int) -> BoundingBox:
    return BoundingBox(x=10.0 + 130.0 * slot, y=10.0, w=100.0, h=200.0)


def face_box(slot: int) -> BoundingBox:
    body = body_box(slot)
    return BoundingBox(x=body.x + 30.0, y=body.y + 20.0, w=40.0, h=40.0)


def character_story(story_id: str, characters, length: int = 5) -> AnnotatedStory:
    """Story with gold annotation built from character specs.

    Each character is a dict with keys: surface, sentences (list of sentence
    indices), images (list of image indices), and optionally number
    ("singular"/"plural"/"group") and stars (1..5).  Character k occupies
    body-box slot k in every image it appears in.
    """
    sentence_words: list[list[tuple[str, str]]] = [[("the", "DT")] for _ in range(length)]
    mention_token: dict[tuple[int, int], int] = {}
    for k, char in enumerate(characters):
        number = Number(char.get("number", "singular"))
        tag = NUMBER_TAGS[number]
        for s in char.get("sentences", []):
            mention_token[(k, s)] = len(sentence_words[s])
            sentence_words[s].append((char["surface"], tag))
    for words in sentence_words:
        words.append(("smiled", "VBD"))
        words.append((".", "."))

    specs = [" ".join(f"{w}/{p}" for w, p in words) for words in sentence_words]
    text_chains = []
    visual_chains = []
    alignment = []
    importance = []
    for k, char in enumerate(characters):
        number = Number(char.get("number", "singular"))
        sentences = sorted(char.get("sentences", []))
        images = sorted(char.get("images", []))
        main_id = None
        if sentences:
            mentions = tuple(
                Mention(
                    sentence_index=s,
                    token_start=mention_token[(k, s)],
                    token_end=mention_token[(k, s)] + 1,
                    surface=char["surface"],
                    number=number,
                    kind=MentionKind.NOUN,
                )
                for s in sentences
            )
            text_chains.append(TextChain(chain_id=f"gt{k}", mentions=mentions, number=number))
            main_id = f"gt{k}"
        if images:
            faces = tuple(FaceInstance(image_index=i, box=body_box(k)) for i in images)
            visual_chains.append(VisualChain(chain_id=f"gv{k}", faces=faces))
            if main_id is None:
                main_id = f"gv{k}"
        if sentences and images:
            alignment.append((f"gt{k}", f"gv{k}"))
        if "stars" in char and main_id is not None:
            importance.append((main_id, char["stars"]))
    gold = GoldAnnotation(
        text_chains=tuple(text_chains),
        visual_chains=tuple(visual_chains),
        alignment=tuple(alignment),
        importance=tuple(importance),
    )
    return story_from_specs(story_id, specs, gold=gold)


def character_embeddings(characters, dim: int = 8):
    """Embedding table dict matching character_story: character k's faces sit
    in a tight blob on the k-th axis; mention vectors point the same way."""
    faces = []
    mentions = {}
    for k, char in enumerate(characters):
        base = [0.0] * dim
        base[k % dim] = 10.0
        for j, image in enumerate(sorted(char.get("images", []))):
            vector = list(base)
            vector[(k + 1) % dim] += 0.01 * j
            box = face_box(k)
            faces.append(
                {
                    "image_index": image,
                    "box": {"x": box.x, "y": box.y, "w": box.w, "h": box.h},
                    "vector": vector,
                }
            )
        if char["surface"] not in mentions:
            mentions[char["surface"]] = list(base)
    return {
        "format_version": 1,
        "dim": dim,
        "faces": faces,
        "mentions": [{"surface": s, "vector": v} for s, v in mentions.items()],
    }


def b_cubed_reference(pred: list, gold: list):
    """Quadratic-time B-Cubed straight from the definition, over a shared
    item universe (identity twinning); exact rational arithmetic."""

    def chain_of(partition, item):
        for chain in partition:
            if item in chain:
                return chain
        return set()

    pred_items = [m for c in pred for m in c]
    gold_items = [m for c in gold for m in c]
    p_total = Fraction(0)
    for m in pred_items:
        p_chain = chain_of(pred, m)
        g_chain = chain_of(gold, m)
        p_total += Fraction(len(p_chain & g_chain), len(p_chain))
    r_total = Fraction(0)
    for m in gold_items:
        p_chain = chain_of(pred, m)
        g_chain = chain_of(gold, m)
        r_total += Fraction(len(p_chain & g_chain), len(g_chain))
    precision = p_total / len(pred_items) if pred_items else None
    recall = r_total / len(gold_items) if gold_items else None
    return precision, recall


def identity_twins(pred: list, gold: list) -> dict:
    pred_items = {m for c in pred for m in c}
    gold_items = {m for c in gold for m in c}
    return {m: m for m in pred_items & gold_items}
