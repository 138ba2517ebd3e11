"""Embedding file format and the scene token projection."""

import numpy as np
import pytest

from equitraj.config import Config, apply_overrides
from equitraj.errors import DataError, ShapeError
from equitraj.numerics import ParamStore
from equitraj.scene import (
    SceneEmbedding,
    load_scene_embedding,
    project_scene_tokens,
    save_scene_embedding,
    zero_embedding,
)


def test_load_zero_embedding(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("3\n0.0 0.0 0.0\n")
    emb = load_scene_embedding(path)
    assert emb.dim == 3
    assert np.array_equal(emb.values, np.zeros(3))


def test_load_with_comment_line(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("2\n# produced by a vision model\n1.5 -2.25\n")
    emb = load_scene_embedding(path)
    assert np.array_equal(emb.values, [1.5, -2.25])


def test_header_count_mismatch_reports_byte_offset(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("4\n0.0 0.0 0.0\n")
    with pytest.raises(DataError) as err:
        load_scene_embedding(path)
    assert err.value.byte_offset == 2  # values line starts after "4\n"


def test_non_numeric_header_rejected(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("three\n0.0 0.0 0.0\n")
    with pytest.raises(DataError):
        load_scene_embedding(path)


def test_non_finite_value_rejected(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("2\n1.0 inf\n")
    with pytest.raises(DataError):
        load_scene_embedding(path)


def test_write_then_read_roundtrips_values_exactly(tmp_path):
    rng = np.random.default_rng(0)
    original = SceneEmbedding(rng.normal(size=768), source="test")
    path = tmp_path / "emb.txt"
    save_scene_embedding(path, original, comment="mean pooling")
    loaded = load_scene_embedding(path)
    assert loaded.dim == 768
    assert np.array_equal(loaded.values, original.values)
    # re-serialization is byte-identical
    path2 = tmp_path / "emb2.txt"
    save_scene_embedding(path2, loaded, comment="mean pooling")
    assert path.read_text() == path2.read_text()


def test_projection_zero_embedding_zero_bias_gives_zero_token():
    config = apply_overrides(Config(), {"scene.embedding_dim": "4"})
    store = ParamStore()
    store.add("token.w", np.random.default_rng(1).normal(size=(4, 5)))
    store.add("token.b", np.zeros(5))
    token = project_scene_tokens(zero_embedding(4), store, config)
    assert np.allclose(token.data, 0.0)


def test_projection_identity_weights_copy_embedding():
    config = apply_overrides(Config(), {"scene.embedding_dim": "4"})
    store = ParamStore()
    store.add("token.w", np.eye(4))
    store.add("token.b", np.zeros(4))
    values = np.array([0.5, -1.0, 2.0, 0.0])
    token = project_scene_tokens(SceneEmbedding(values), store, config)
    assert np.array_equal(token.data, values)


def test_projection_matches_matrix_oracle():
    rng = np.random.default_rng(2)
    w = rng.normal(size=(6, 3))
    b = rng.normal(size=3)
    values = rng.normal(size=6)
    config = apply_overrides(Config(), {"scene.embedding_dim": "6"})
    store = ParamStore()
    store.add("token.w", w)
    store.add("token.b", b)
    token = project_scene_tokens(SceneEmbedding(values), store, config)
    assert np.allclose(token.data, values @ w + b, atol=1e-12)


def test_projection_dim_mismatch_raises_shape_error():
    config = Config()
    store = ParamStore()
    store.add("token.w", np.zeros((8, 4)))
    store.add("token.b", np.zeros(4))
    with pytest.raises(ShapeError):
        project_scene_tokens(SceneEmbedding(np.zeros(5)), store, config)


def test_disabled_scene_uses_learned_constant():
    config = apply_overrides(Config(), {"scene.enabled": "false"})
    store = ParamStore()
    store.add("token.const", np.array([1.0, 2.0, 3.0]))
    token = project_scene_tokens(None, store, config)
    assert np.array_equal(token.data, [1.0, 2.0, 3.0])
