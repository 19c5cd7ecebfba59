"""Character importance: chain-length scores and deterministic ranking."""

from __future__ import annotations

from typing import Sequence

from .model import MultiModalChain


def importance_score(chain: MultiModalChain) -> int:
    """Total occurrence count: mentions plus faces, absent sides count 0."""
    text = len(chain.text.mentions) if chain.text is not None else 0
    visual = len(chain.visual.faces) if chain.visual is not None else 0
    return text + visual


def rank_characters(chains: Sequence[MultiModalChain]) -> list[str]:
    """Chain ids in descending importance; ties go to the chain introduced
    earliest (sentence, token, image, box x)."""
    ordered = sorted(chains, key=lambda c: (-importance_score(c), c.occurrence_key()))
    return [c.chain_id for c in ordered]


def ranked_chains(chains: Sequence[MultiModalChain]) -> list[MultiModalChain]:
    return sorted(chains, key=lambda c: (-importance_score(c), c.occurrence_key()))


def protagonist(chains: Sequence[MultiModalChain]) -> str:
    if not chains:
        raise ValueError("no chains to rank")
    return rank_characters(chains)[0]
