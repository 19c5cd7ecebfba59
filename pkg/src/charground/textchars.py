"""Character mention detection and textual co-reference.

Mentions are single tokens: nouns passing a character lexicon, collective
"group" nouns from a fixed list, and pronouns (which bypass the lexicon).
Chains come either from a deterministic surface/antecedent heuristic or from
an external co-reference tool's output ingested as data.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

from .errors import DataError
from .model import AnnotatedStory, Mention, MentionKind, Number, TextChain, chain_number

PRONOUN_TAGS = frozenset({"PRP", "PRP$"})
NOUN_TAGS = frozenset({"NN", "NNS", "NNP", "NNPS"})
PLURAL_NOUN_TAGS = frozenset({"NNS", "NNPS"})
PLURAL_PRONOUNS = frozenset({"they", "them", "their", "theirs", "we", "us", "our", "ours"})

_IRREGULAR_PLURALS = {
    "men": "man",
    "women": "woman",
    "children": "child",
    "people": "person",
    "mice": "mouse",
    "geese": "goose",
    "feet": "foot",
    "teeth": "tooth",
    "oxen": "ox",
}


@dataclass(frozen=True)
class CharacterLexicon:
    """Case-insensitive noun lemmas accepted as characters, plus group nouns."""

    words: frozenset[str]
    group_words: frozenset[str]

    def matches_noun(self, lowered: str, plural_tag: bool) -> bool:
        if lowered in self.words:
            return True
        if plural_tag:
            return any(c in self.words for c in singular_candidates(lowered))
        return False


def singular_candidates(lowered: str) -> list[str]:
    """Rule-based singular forms tried against the lemma lexicon.

    Applied only to NNS/NNPS-tagged tokens; the lexicon stores lemmas, so a
    plural surface needs a derived lookup form.  No external lemmatizer.
    """
    out = []
    irregular = _IRREGULAR_PLURALS.get(lowered)
    if irregular:
        out.append(irregular)
    if lowered.endswith("ies") and len(lowered) > 3:
        out.append(lowered[:-3] + "y")
    if lowered.endswith("ves") and len(lowered) > 3:
        out.append(lowered[:-3] + "f")
        out.append(lowered[:-3] + "fe")
    if lowered.endswith("es") and len(lowered) > 2:
        out.append(lowered[:-2])
    if lowered.endswith("s") and len(lowered) > 1:
        out.append(lowered[:-1])
    if lowered.endswith("men"):
        out.append(lowered[:-3] + "man")
    return out


def parse_word_list(text: str) -> frozenset[str]:
    """One lowercase lemma per line; blank lines and '#' comments ignored."""
    words = set()
    for line in text.splitlines():
        entry = line.split("#", 1)[0].strip().lower()
        if entry:
            words.add(entry)
    return frozenset(words)


def load_word_list(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return parse_word_list(fh.read())


def load_lexicon(words_path=None, group_words_path=None) -> CharacterLexicon:
    """Load the character lexicon, using the packaged data files by default."""
    data = resources.files("charground") / "data"
    if words_path is None:
        words = parse_word_list((data / "lexicon.txt").read_text(encoding="utf-8"))
    else:
        words = load_word_list(words_path)
    if group_words_path is None:
        group = parse_word_list((data / "group_words.txt").read_text(encoding="utf-8"))
    else:
        group = load_word_list(group_words_path)
    return CharacterLexicon(words=words, group_words=group)


def detect_mentions(story: AnnotatedStory, lexicon: CharacterLexicon) -> list[Mention]:
    """Find character mentions in story order.

    Pronoun tokens (PRP/PRP$) are always mentions and bypass the lexicon;
    noun tokens must pass the lexicon (plural iff NNS/NNPS); tokens on the
    group-word list are group mentions whatever their noun subtype.
    """
    mentions: list[Mention] = []
    for sent in story.sentences:
        for idx, tok in enumerate(sent.tokens):
            lowered = tok.text.lower()
            if tok.pos in PRONOUN_TAGS:
                number = Number.PLURAL if lowered in PLURAL_PRONOUNS else Number.SINGULAR
                mentions.append(
                    Mention(sent.index, idx, idx + 1, tok.text, number, MentionKind.PRONOUN)
                )
                continue
            if tok.pos not in NOUN_TAGS:
                continue
            if lowered in lexicon.group_words:
                mentions.append(
                    Mention(sent.index, idx, idx + 1, tok.text, Number.GROUP, MentionKind.NOUN)
                )
            elif lexicon.matches_noun(lowered, tok.pos in PLURAL_NOUN_TAGS):
                number = Number.PLURAL if tok.pos in PLURAL_NOUN_TAGS else Number.SINGULAR
                mentions.append(
                    Mention(sent.index, idx, idx + 1, tok.text, number, MentionKind.NOUN)
                )
    return mentions


def _compatible(pronoun: Mention, chain_num: Number) -> bool:
    if pronoun.number == Number.SINGULAR:
        return chain_num == Number.SINGULAR
    return chain_num in (Number.PLURAL, Number.GROUP)


def _finish_chains(groups: Iterable[list[Mention]]) -> list[TextChain]:
    ordered = sorted(
        (sorted(g, key=Mention.position) for g in groups if g),
        key=lambda g: g[0].position(),
    )
    return [
        TextChain(chain_id=f"t{i}", mentions=tuple(g), number=chain_number(g))
        for i, g in enumerate(ordered)
    ]


def heuristic_coref(mentions: Sequence[Mention]) -> list[TextChain]:
    """Deterministic chains: nouns join by equal lowercase head word, each
    pronoun attaches to the nearest preceding noun whose chain has a
    compatible number class, otherwise it becomes a singleton chain."""
    groups: list[list[Mention]] = []
    by_surface: dict[str, int] = {}
    nouns: list[tuple[Mention, int]] = []  # story order, with chain index
    for m in mentions:
        if m.kind != MentionKind.NOUN:
            continue
        key = m.surface.lower()
        if key not in by_surface:
            by_surface[key] = len(groups)
            groups.append([])
        groups[by_surface[key]].append(m)
        nouns.append((m, by_surface[key]))
    noun_numbers = {idx: chain_number(groups[idx]) for idx in by_surface.values()}

    for m in mentions:
        if m.kind != MentionKind.PRONOUN:
            continue
        target = None
        for noun, idx in reversed(nouns):
            if noun.position() >= m.position():
                continue
            if _compatible(m, noun_numbers[idx]):
                target = idx
                break
        if target is None:
            groups.append([m])
        else:
            groups[target].append(m)
    return _finish_chains(groups)


def ingest_external_coref(
    story: AnnotatedStory,
    external_chains: Sequence[Sequence[tuple[int, int]]],
    lexicon: CharacterLexicon,
) -> list[TextChain]:
    """Ingest chains from an external co-reference tool.

    Chain elements are (sentence_index, token_index) references; number
    classes are recomputed from the tokens' tags and the group list.
    References to tokens that are not detected character mentions are
    dropped (external tools also chain non-characters); detected mentions
    left uncovered become singleton chains.
    """
    detected = detect_mentions(story, lexicon)
    by_position = {m.position(): m for m in detected}
    used: set[tuple[int, int]] = set()
    groups: list[list[Mention]] = []
    for chain in external_chains:
        members: list[Mention] = []
        for sentence_index, token_index in chain:
            if not (0 <= sentence_index < len(story.sentences)):
                raise DataError(
                    f"external chain references sentence {sentence_index} "
                    f"of a {len(story.sentences)}-sentence story"
                )
            if not (0 <= token_index < len(story.sentences[sentence_index].tokens)):
                raise DataError(
                    f"external chain references token {token_index} "
                    f"of sentence {sentence_index}"
                )
            key = (sentence_index, token_index)
            mention = by_position.get(key)
            if mention is None or key in used:
                continue
            used.add(key)
            members.append(mention)
        if members:
            groups.append(members)
    for m in detected:
        if m.position() not in used:
            groups.append([m])
    return _finish_chains(groups)
