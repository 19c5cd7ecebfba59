"""Story character detection, co-reference, grounding, ranking and scoring."""

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
    SimilarityMatrix,
    TextChain,
    Token,
    VisualChain,
    multimodal_chain,
    validate_story,
)
from .errors import DataError

__version__ = "0.1.0"

__all__ = [
    "AnnotatedStory",
    "BoundingBox",
    "DataError",
    "FaceInstance",
    "GoldAnnotation",
    "ImageDesc",
    "Mention",
    "MentionKind",
    "MultiModalChain",
    "Number",
    "Sentence",
    "SimilarityMatrix",
    "TextChain",
    "Token",
    "VisualChain",
    "multimodal_chain",
    "validate_story",
]
