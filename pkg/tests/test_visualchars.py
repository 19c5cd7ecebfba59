import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from charground.errors import DataError
from charground.model import BoundingBox, FaceInstance
from charground.visualchars import (
    ClusteringConfig,
    calinski_harabasz,
    cluster_faces,
    kmeans,
    lloyd,
)

CFG = ClusteringConfig(seed=7)


def test_kmeans_separates_two_tight_blobs():
    points = [[0.0], [0.1], [10.0], [10.1]]
    labels, inertia = kmeans(points, 2, CFG)
    assert labels[0] == labels[1] and labels[2] == labels[3] and labels[0] != labels[2]
    # (0-0.05)^2 + (0.1-0.05)^2 per blob, twice
    assert inertia == pytest.approx(0.01, abs=1e-12)


def test_kmeans_k_equals_n_gives_zero_inertia():
    points = [[0.0], [1.0], [2.0], [5.0]]
    labels, inertia = kmeans(points, 4, CFG)
    assert sorted(labels) == [0, 1, 2, 3]
    assert inertia == 0.0


def test_kmeans_identical_points_repairs_empty_clusters():
    points = [[3.0, 3.0]] * 4
    labels, inertia = kmeans(points, 2, CFG)
    assert set(labels) == {0, 1}
    assert inertia == 0.0


def test_kmeans_k_above_n_is_an_error():
    with pytest.raises(ValueError, match="exceeds"):
        kmeans([[0.0], [1.0]], 3, CFG)


def test_kmeans_rejects_ragged_points():
    with pytest.raises(DataError):
        kmeans([[0.0, 1.0], [2.0]], 1, CFG)


def test_kmeans_deterministic_given_seed():
    rng = np.random.default_rng(3)
    points = rng.normal(size=(30, 4))
    a = kmeans(points, 3, ClusteringConfig(seed=11))
    b = kmeans(points, 3, ClusteringConfig(seed=11))
    assert a == b


def test_lloyd_history_non_increasing():
    rng = np.random.default_rng(5)
    points = rng.normal(size=(40, 3))
    centers = points[rng.choice(40, size=4, replace=False)]
    _, _, history = lloyd(points, centers)
    assert all(b <= a for a, b in zip(history, history[1:]))


# --- Calinski-Harabasz -------------------------------------------------------


def test_ch_hand_computed_value():
    points = [[0.0], [0.1], [10.0], [10.1]]
    labels = [0, 0, 1, 1]
    # B = 2*(0.05-5.05)^2 + 2*(10.05-5.05)^2 = 100; W = 0.01
    # CH = (100/1) / (0.01/2) = 20000
    assert calinski_harabasz(points, labels) == pytest.approx(20000.0, rel=1e-9)


def test_ch_perfectly_separated_duplicates_is_infinite():
    points = [[0.0], [0.0], [5.0], [5.0], [5.0]]
    assert calinski_harabasz(points, [0, 0, 1, 1, 1]) == math.inf


def test_ch_single_cluster_is_an_error():
    with pytest.raises(ValueError):
        calinski_harabasz([[0.0], [1.0], [2.0]], [0, 0, 0])


def test_ch_all_identical_points_is_an_error():
    with pytest.raises(ValueError):
        calinski_harabasz([[1.0], [1.0], [1.0]], [0, 0, 1])


# --- cluster_faces ------------------------------------------------------------


def _face(image: int, slot: int, vector) -> FaceInstance:
    return FaceInstance(
        image_index=image,
        box=BoundingBox(x=10.0 + 50.0 * slot, y=5.0, w=20.0, h=20.0),
        embedding=tuple(float(v) for v in vector),
    )


def test_cluster_faces_recovers_two_blobs():
    rng = np.random.default_rng(1)
    faces = []
    for i in range(5):
        faces.append(_face(i, 0, np.array([10.0, 0.0, 0.0, 0.0]) + rng.normal(0, 0.05, 4)))
        faces.append(_face(i, 1, np.array([0.0, 10.0, 0.0, 0.0]) + rng.normal(0, 0.05, 4)))
    chains = cluster_faces(faces, CFG)
    assert len(chains) == 2
    memberships = [frozenset(id(f) for f in c.faces) for c in chains]
    expected = [
        frozenset(id(f) for f in faces[0::2]),
        frozenset(id(f) for f in faces[1::2]),
    ]
    assert sorted(memberships, key=min) == sorted(expected, key=min)


def test_cluster_faces_empty_and_singleton():
    assert cluster_faces([], CFG) == []
    one = [_face(0, 0, [1.0, 2.0])]
    chains = cluster_faces(one, CFG)
    assert len(chains) == 1 and chains[0].faces == (one[0],)


def test_cluster_faces_two_faces_fall_back_to_singletons():
    faces = [_face(0, 0, [0.0, 0.0]), _face(1, 0, [0.0, 0.1])]
    chains = cluster_faces(faces, CFG)
    assert len(chains) == 2
    assert all(len(c.faces) == 1 for c in chains)


def test_cluster_faces_rejects_missing_embedding():
    faces = [FaceInstance(0, BoundingBox(0, 0, 1, 1))]
    with pytest.raises(DataError, match="no embedding"):
        cluster_faces(faces, CFG)


def test_cluster_faces_rejects_mixed_dimensions():
    faces = [_face(0, 0, [1.0, 2.0]), _face(1, 0, [1.0, 2.0, 3.0])]
    with pytest.raises(DataError, match="dimensions"):
        cluster_faces(faces, CFG)


def test_cluster_faces_deterministic():
    rng = np.random.default_rng(2)
    faces = [
        _face(i % 5, i % 2, [5.0 * (i % 3), 5.0 * ((i + 1) % 3)] + list(rng.normal(0, 0.1, 2)))
        for i in range(12)
    ]
    assert cluster_faces(faces, CFG) == cluster_faces(faces, CFG)


@settings(deadline=None, max_examples=25)
@given(st.integers(3, 12), st.integers(0, 1000))
def test_cluster_faces_partitions_input(n, seed):
    rng = np.random.default_rng(seed)
    faces = [_face(i % 5, i, rng.normal(0, 1, 3)) for i in range(n)]
    chains = cluster_faces(faces, ClusteringConfig(seed=seed, restarts=2))
    got = sorted((f.image_index, f.box.x) for c in chains for f in c.faces)
    want = sorted((f.image_index, f.box.x) for f in faces)
    assert got == want
    assert all(c.faces for c in chains)


def test_config_validation():
    with pytest.raises(ValueError):
        ClusteringConfig(k_min=11, k_max=10).validate()
    with pytest.raises(ValueError):
        ClusteringConfig(restarts=0).validate()
