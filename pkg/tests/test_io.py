import copy
import json

import pytest

from charground import io
from charground.errors import DataError
from charground.grounding import Alignment, GroundingConfig, ground, assemble_multimodal
from util import character_story, story_from_specs


def _story_doc():
    story = character_story(
        "story-1",
        [
            {"surface": "man", "sentences": [0, 1], "images": [0], "stars": 5},
            {"surface": "dogs", "number": "plural", "sentences": [2], "images": [2], "stars": 2},
        ],
    )
    return io.story_to_dict(story)


# --- stories -----------------------------------------------------------------


def test_story_round_trip(tmp_path):
    doc = _story_doc()
    story = io.parse_story(doc)
    path = tmp_path / "story.json"
    io.write_story(story, path)
    again = io.load_story(path)
    assert again == story
    assert io.story_to_dict(again) == io.story_to_dict(story)


def test_minimal_story_loads():
    doc = {
        "format_version": 1,
        "story_id": "tiny",
        "sentences": [{"index": 0, "text": "Hi", "tokens": [
            {"text": "Hi", "pos": "UH", "char_start": 0, "char_end": 2}
        ]}],
        "images": [{"index": 0, "width": 10, "height": 10}],
    }
    story = io.parse_story(doc)
    assert story.length == 1 and story.gold is None


def test_story_with_five_slots_parses():
    doc = _story_doc()
    story = io.parse_story(doc)
    assert len(story.sentences) == 5 and len(story.images) == 5


def test_stars_out_of_range_rejected():
    doc = _story_doc()
    doc["gold"]["importance"][0]["stars"] = 6
    with pytest.raises(DataError, match="stars out of range"):
        io.parse_story(doc)


def test_fractional_stars_rejected_at_parse_time():
    doc = _story_doc()
    doc["gold"]["importance"][0]["stars"] = 4.5
    with pytest.raises(DataError, match="integer"):
        io.parse_story(doc)


def test_missing_field_names_the_path():
    doc = _story_doc()
    del doc["sentences"][0]["tokens"][0]["pos"]
    with pytest.raises(DataError, match=r"tokens\[0\].*pos"):
        io.parse_story(doc)


def test_count_mismatch_rejected():
    doc = _story_doc()
    doc["images"] = doc["images"][:4]
    with pytest.raises(DataError, match="mismatch"):
        io.parse_story(doc)


def test_unknown_format_version_rejected():
    doc = _story_doc()
    doc["format_version"] = 99
    with pytest.raises(DataError, match="format_version"):
        io.parse_story(doc)


def test_malformed_json_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(DataError, match="malformed JSON"):
        io.load_story(path)


# --- embeddings ---------------------------------------------------------------


def _embeddings_doc(dim=4, n=3):
    return {
        "format_version": 1,
        "dim": dim,
        "faces": [
            {
                "image_index": i,
                "box": {"x": 1.0 + i, "y": 2.0, "w": 3.0, "h": 4.0},
                "vector": [float(i)] * dim,
            }
            for i in range(n)
        ],
        "mentions": [{"surface": "man", "vector": [1.0] * dim}],
    }


def test_embeddings_round_trip(tmp_path):
    table = io.parse_embeddings(_embeddings_doc())
    assert table.dim == 4 and len(table.faces) == 3
    path = tmp_path / "emb.json"
    io.write_embeddings(table, path)
    assert io.load_embeddings(path) == table


def test_embeddings_dimension_mismatch_names_entry():
    doc = _embeddings_doc()
    doc["faces"][1]["vector"] = [0.0] * 3
    with pytest.raises(DataError, match=r"faces\[1\]"):
        io.parse_embeddings(doc)


def test_embeddings_duplicate_face_key_rejected():
    doc = _embeddings_doc()
    doc["faces"][1] = copy.deepcopy(doc["faces"][0])
    with pytest.raises(DataError, match="duplicate face key"):
        io.parse_embeddings(doc)


def test_embeddings_duplicate_mention_rejected():
    doc = _embeddings_doc()
    doc["mentions"].append({"surface": "man", "vector": [2.0] * 4})
    with pytest.raises(DataError, match="duplicate mention"):
        io.parse_embeddings(doc)


def test_embeddings_non_finite_rejected():
    doc = _embeddings_doc()
    doc["faces"][0]["vector"][0] = float("nan")
    with pytest.raises(DataError, match="non-finite"):
        io.parse_embeddings(json.loads(json.dumps(doc)))  # NaN survives via parse_constant


def test_embeddings_face_instances_carry_vectors():
    table = io.parse_embeddings(_embeddings_doc())
    faces = table.face_instances()
    assert len(faces) == 3
    assert all(f.embedding is not None for f in faces)
    assert table.face_vector(faces[0]) == faces[0].embedding
    with pytest.raises(DataError, match="no embedding for mention"):
        table.mention_vector("zebra")


# --- external coref --------------------------------------------------------------


def test_external_coref_parses():
    doc = {"format_version": 1, "chains": [[{"sentence_index": 0, "token_index": 1}]]}
    assert io.parse_external_coref(doc) == [[(0, 1)]]


# --- grounded documents -----------------------------------------------------------


def test_grounded_round_trip(tmp_path):
    story = io.parse_story(_story_doc())
    texts, visuals = list(story.gold.text_chains), list(story.gold.visual_chains)
    alignment = ground(texts, visuals, story, None, GroundingConfig())
    grounded = io.GroundedStory(
        story_id=story.story_id,
        text_chains=tuple(texts),
        visual_chains=tuple(visuals),
        alignment=alignment,
        chains=tuple(assemble_multimodal(texts, visuals, alignment)),
    )
    path = tmp_path / "grounded.json"
    io.write_grounded(grounded, path)
    assert io.load_grounded(path) == grounded


def test_grounded_importance_must_match_sides():
    story = io.parse_story(_story_doc())
    texts, visuals = list(story.gold.text_chains), list(story.gold.visual_chains)
    alignment = ground(texts, visuals, story, None, GroundingConfig())
    grounded = io.GroundedStory(
        story.story_id, tuple(texts), tuple(visuals), alignment,
        tuple(assemble_multimodal(texts, visuals, alignment)),
    )
    doc = io.grounded_to_dict(grounded)
    doc["chains"][0]["importance"] += 1
    with pytest.raises(DataError, match="importance"):
        io.parse_grounded(doc)


# --- reports ------------------------------------------------------------------------


def test_report_bytes_deterministic(tmp_path):
    report = {"format_version": 1, "corpus": {"detection": {"precision": 0.53494, "recall": None}}}
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    io.write_report(report, p1)
    io.write_report(report, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert io.load_report(p1) == report


def test_report_csv_rounding_and_nulls(tmp_path):
    report = {"corpus": {"detection": {"precision": 0.53494, "recall": None}, "stories": 770}}
    csv_text = io.report_to_csv(report)
    lines = csv_text.strip().splitlines()
    assert lines[0] == "metric,value"
    assert "corpus.detection.precision,0.5349" in lines
    assert "corpus.detection.recall," in lines
    assert "corpus.stories,770" in lines


def test_report_unknown_format_rejected(tmp_path):
    with pytest.raises(ValueError):
        io.write_report({}, tmp_path / "x", fmt="yaml")
