"""Network blocks: reasoning, messages, updates, output, full passes."""

import numpy as np

from equitraj.config import Config, apply_overrides
from equitraj.geometry import build_graph, compute_centroid, rotation_matrix
from equitraj.model import (
    compute_messages,
    equivariant_update,
    forward_deterministic,
    forward_heads,
    forward_multi,
    forward_trace,
    infer_interaction_graph,
    init_params,
    invariant_update,
    output_layer,
)
from equitraj.numerics import Tensor, dct_matrix
from equitraj.scene import SceneEmbedding
from equitraj.symmetry import random_scene, run_symmetry_suite

from conftest import make_scene


def small_config(**extra):
    overrides = {
        "model.pattern_width": "5",
        "model.message_width": "6",
        "model.token_width": "3",
        "model.categories": "2",
        "model.heads": "1",
        "scene.embedding_dim": "4",
        "regularization.dropout": "0.0",
    }
    overrides.update({k: str(v) for k, v in extra.items()})
    cfg = apply_overrides(Config(), overrides)
    cfg.validate()
    return cfg


def fixture_states(config, rng, n_agents=3):
    scene = random_scene(rng, n_agents=n_agents, t_obs=config.model.t_obs)
    graph = build_graph(scene)
    geo = Tensor(rng.normal(size=(n_agents, config.model.t_channels, 2)))
    pat = Tensor(rng.normal(size=(n_agents, config.model.pattern_width)))
    token = Tensor(rng.normal(size=config.model.token_width))
    return scene, graph, geo, pat, token


# --- interaction graph -----------------------------------------------------------


def test_interaction_weights_single_category_are_one():
    config = small_config(**{"model.categories": 1})
    rng = np.random.default_rng(0)
    store = init_params(config, rng)
    scene, graph, geo, pat, _ = fixture_states(config, rng)
    weights = infer_interaction_graph(geo, pat, graph, store, config)
    assert weights.shape == (6, 1)
    assert np.allclose(weights.data, 1.0)


def test_interaction_weights_rows_sum_to_one():
    config = small_config(**{"model.categories": 4})
    rng = np.random.default_rng(1)
    store = init_params(config, rng)
    scene, graph, geo, pat, _ = fixture_states(config, rng)
    weights = infer_interaction_graph(geo, pat, graph, store, config)
    assert np.max(np.abs(weights.data.sum(axis=1) - 1.0)) <= 1e-9
    assert np.all(weights.data >= 0.0)


def test_interaction_weights_match_softmax_oracle():
    config = small_config()
    rng = np.random.default_rng(2)
    store = init_params(config, rng)
    scene, graph, geo, pat, _ = fixture_states(config, rng, n_agents=2)
    weights = infer_interaction_graph(geo, pat, graph, store, config)

    # oracle: assemble inputs and run raw numpy affine/silu/softmax
    def silu(v):
        return v / (1.0 + np.exp(-v))

    h_i = pat.data[graph.receivers]
    h_j = pat.data[graph.senders]
    diff = geo.data[graph.receivers] - geo.data[graph.senders]
    sq = (diff ** 2).sum(axis=2)
    x = np.concatenate([h_i, h_j, sq], axis=1)
    hidden = silu(x @ store["reasoning.w0"].data + store["reasoning.b0"].data)
    logits = hidden @ store["reasoning.w1"].data + store["reasoning.b1"].data
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    expected = e / e.sum(axis=1, keepdims=True)
    assert np.allclose(weights.data, expected, atol=1e-12)


def test_interaction_weights_invariant_under_transform():
    config = small_config()
    rng = np.random.default_rng(3)
    store = init_params(config, rng)
    scene = random_scene(rng, 3, config.model.t_obs)
    emb = SceneEmbedding(rng.normal(size=4))
    moved = scene.transformed(rotation_matrix(1.9), [3.0, -8.0])
    wa = forward_trace(scene, emb, store, config)["weights"]
    wb = forward_trace(moved, emb, store, config)["weights"]
    assert np.max(np.abs(wa.data - wb.data)) <= 1e-9


# --- messages ---------------------------------------------------------------------


def test_messages_empty_for_single_agent():
    config = small_config()
    rng = np.random.default_rng(4)
    store = init_params(config, rng)
    scene, graph, geo, pat, token = fixture_states(config, rng, n_agents=1)
    weights = Tensor(np.zeros((0, config.model.categories)))
    msgs = compute_messages(geo, pat, token, weights, graph, store, "layer0", config)
    assert msgs.shape == (0, config.model.message_width)


def test_messages_match_mlp_oracle():
    config = small_config()
    rng = np.random.default_rng(5)
    store = init_params(config, rng)
    scene, graph, geo, pat, token = fixture_states(config, rng, n_agents=2)
    weights = Tensor(np.array([[0.25, 0.75], [0.5, 0.5]]))
    msgs = compute_messages(geo, pat, token, weights, graph, store, "layer0", config)

    def silu(v):
        return v / (1.0 + np.exp(-v))

    h_i = pat.data[graph.receivers]
    h_j = pat.data[graph.senders]
    diff = geo.data[graph.receivers] - geo.data[graph.senders]
    sq = (diff ** 2).sum(axis=2)
    token_rows = np.tile(token.data, (2, 1))
    x = np.concatenate([h_i, h_j, sq, token_rows, weights.data], axis=1)
    hidden = silu(x @ store["layer0.edge.w0"].data + store["layer0.edge.b0"].data)
    expected = hidden @ store["layer0.edge.w1"].data + store["layer0.edge.b1"].data
    assert np.allclose(msgs.data, expected, atol=1e-12)


def test_messages_invariant_under_transform():
    config = small_config()
    rng = np.random.default_rng(6)
    store = init_params(config, rng)
    scene = random_scene(rng, 3, config.model.t_obs)
    emb = SceneEmbedding(rng.normal(size=4))
    moved = scene.transformed(rotation_matrix(-2.52), [1.0, 1.0])
    ta = forward_trace(scene, emb, store, config)
    tb = forward_trace(moved, emb, store, config)
    for ma, mb in zip(ta["messages"], tb["messages"]):
        assert np.max(np.abs(ma.data - mb.data)) <= 1e-9


# --- equivariant update -------------------------------------------------------------


def test_equivariant_update_zero_scores_is_identity():
    config = small_config()
    rng = np.random.default_rng(7)
    store = init_params(config, rng)  # coord MLP final layer zero-initialized
    scene, graph, geo, pat, token = fixture_states(config, rng)
    msgs = Tensor(rng.normal(size=(6, config.model.message_width)))
    out = equivariant_update(geo, msgs, graph, store, "layer0", config)
    assert np.array_equal(out.data, geo.data)


def test_equivariant_update_coincident_agents_unmoved():
    config = small_config()
    rng = np.random.default_rng(8)
    store = init_params(config, rng)
    # make scores nonzero
    store["layer0.coord.w1"].data[:] = rng.normal(size=store["layer0.coord.w1"].data.shape)
    graph = build_graph(make_scene(np.zeros((3, 8, 2))))
    geo = Tensor(np.tile(rng.normal(size=(1, config.model.t_channels, 2)), (3, 1, 1)))
    msgs = Tensor(rng.normal(size=(6, config.model.message_width)))
    out = equivariant_update(geo, msgs, graph, store, "layer0", config)
    assert np.allclose(out.data, geo.data, atol=1e-12)


def test_equivariant_update_two_agent_closed_form():
    config = small_config()
    rng = np.random.default_rng(9)
    store = init_params(config, rng)
    store["layer0.coord.w1"].data[:] = rng.normal(size=store["layer0.coord.w1"].data.shape)
    graph = build_graph(make_scene(np.zeros((2, 8, 2))))
    geo = Tensor(rng.normal(size=(2, config.model.t_channels, 2)))
    msgs = Tensor(rng.normal(size=(2, config.model.message_width)))
    out = equivariant_update(geo, msgs, graph, store, "layer0", config)

    # oracle: with M=2, x_i' = x_i + (x_i - x_j) * s_ij per channel
    def silu(v):
        return v / (1.0 + np.exp(-v))

    from equitraj.model import SCORE_RANGE

    hidden = silu(msgs.data @ store["layer0.coord.w0"].data + store["layer0.coord.b0"].data)
    raw = hidden @ store["layer0.coord.w1"].data  # bias-free final layer
    scores = SCORE_RANGE * np.tanh(raw / SCORE_RANGE)
    x1 = geo.data[0] + (geo.data[0] - geo.data[1]) * scores[0][:, None]
    x2 = geo.data[1] + (geo.data[1] - geo.data[0]) * scores[1][:, None]
    assert np.allclose(out.data, np.stack([x1, x2]), atol=1e-12)


def test_equivariant_update_single_agent_passthrough():
    config = small_config()
    rng = np.random.default_rng(10)
    store = init_params(config, rng)
    graph = build_graph(make_scene(np.zeros((1, 8, 2))))
    geo = Tensor(rng.normal(size=(1, config.model.t_channels, 2)))
    msgs = Tensor(np.zeros((0, config.model.message_width)))
    out = equivariant_update(geo, msgs, graph, store, "layer0", config)
    assert np.array_equal(out.data, geo.data)


# --- invariant update ---------------------------------------------------------------


def test_invariant_update_single_agent_uses_zero_message_sum():
    config = small_config()
    rng = np.random.default_rng(11)
    store = init_params(config, rng)
    graph = build_graph(make_scene(np.zeros((1, 8, 2))))
    pat = Tensor(rng.normal(size=(1, config.model.pattern_width)))
    msgs = Tensor(np.zeros((0, config.model.message_width)))
    out = invariant_update(pat, msgs, graph, store, "layer0", config)

    def silu(v):
        return v / (1.0 + np.exp(-v))

    x = np.concatenate([pat.data, np.zeros((1, config.model.message_width))], axis=1)
    hidden = silu(x @ store["layer0.feat.w0"].data + store["layer0.feat.b0"].data)
    expected = hidden @ store["layer0.feat.w1"].data + store["layer0.feat.b1"].data
    assert np.allclose(out.data, expected, atol=1e-12)


def test_invariant_update_zero_weights_give_bias():
    config = small_config()
    rng = np.random.default_rng(12)
    store = init_params(config, rng)
    for name in ("layer0.feat.w0", "layer0.feat.w1", "layer0.feat.b0"):
        store[name].data[:] = 0.0
    store["layer0.feat.b1"].data[:] = np.arange(config.model.pattern_width, dtype=float)
    graph = build_graph(make_scene(np.zeros((3, 8, 2))))
    pat = Tensor(rng.normal(size=(3, config.model.pattern_width)))
    msgs = Tensor(rng.normal(size=(6, config.model.message_width)))
    out = invariant_update(pat, msgs, graph, store, "layer0", config)
    assert np.allclose(out.data, np.tile(np.arange(config.model.pattern_width), (3, 1)))


def test_invariant_update_three_agents_sum_then_mlp_oracle():
    config = small_config()
    rng = np.random.default_rng(13)
    store = init_params(config, rng)
    graph = build_graph(make_scene(np.zeros((3, 8, 2))))
    pat = Tensor(rng.normal(size=(3, config.model.pattern_width)))
    msgs = Tensor(rng.normal(size=(6, config.model.message_width)))
    out = invariant_update(pat, msgs, graph, store, "layer0", config)

    def silu(v):
        return v / (1.0 + np.exp(-v))

    summed = np.zeros((3, config.model.message_width))
    for e in range(6):
        summed[graph.receivers[e]] += msgs.data[e]
    x = np.concatenate([pat.data, summed], axis=1)
    hidden = silu(x @ store["layer0.feat.w0"].data + store["layer0.feat.b0"].data)
    expected = hidden @ store["layer0.feat.w1"].data + store["layer0.feat.b1"].data
    assert np.allclose(out.data, expected, atol=1e-12)


# --- output layer ---------------------------------------------------------------------


def test_output_zero_state_predicts_centroid():
    config = small_config()
    rng = np.random.default_rng(14)
    store = init_params(config, rng)
    centroid = np.array([4.0, -1.5])
    geo = Tensor(np.zeros((3, config.model.t_channels, 2)))
    out = output_layer(geo, centroid, store, 0, config)
    assert np.allclose(out.data, np.tile(centroid, (3, config.model.t_pred, 1)))


def test_output_matches_idct_matmul_oracle():
    config = small_config()
    rng = np.random.default_rng(15)
    store = init_params(config, rng)
    centroid = np.array([1.0, 2.0])
    geo = Tensor(rng.normal(size=(1, config.model.t_channels, 2)))
    out = output_layer(geo, centroid, store, 0, config)
    basis = dct_matrix(config.model.t_channels).T
    expected = store["head0.out.w"].data @ (basis @ geo.data[0]) + centroid
    assert np.allclose(out.data[0], expected, atol=1e-12)


def test_output_without_dct_skips_basis():
    config = small_config(**{"regularization.dct": "false"})
    rng = np.random.default_rng(16)
    store = init_params(config, rng)
    geo = Tensor(rng.normal(size=(1, config.model.t_channels, 2)))
    out = output_layer(geo, np.zeros(2), store, 0, config)
    assert np.allclose(out.data[0], store["head0.out.w"].data @ geo.data[0], atol=1e-12)


# --- full forward passes -----------------------------------------------------------------


def test_forward_zero_output_map_predicts_centroid():
    config = small_config()
    rng = np.random.default_rng(17)
    store = init_params(config, rng)
    store["head0.out.w"].data[:] = 0.0
    scene = random_scene(rng, 3, config.model.t_obs)
    emb = SceneEmbedding(rng.normal(size=4))
    preds = forward_deterministic(scene, emb, store, config)
    centroid = compute_centroid(scene)
    assert np.allclose(preds.heads[0], np.tile(centroid, (3, config.model.t_pred, 1)))


def test_forward_equivariance_under_random_transforms():
    config = small_config()
    rng = np.random.default_rng(18)
    store = init_params(config, rng)
    result = run_symmetry_suite(store, config, trials=30, seed=5)
    assert result.equivariance <= 1e-6
    assert result.invariance <= 1e-9


def test_forward_single_agent_scene_completes():
    config = small_config()
    rng = np.random.default_rng(19)
    store = init_params(config, rng)
    scene = random_scene(rng, 1, config.model.t_obs)
    emb = SceneEmbedding(rng.normal(size=4))
    preds = forward_deterministic(scene, emb, store, config)
    assert preds.heads.shape == (1, 1, config.model.t_pred, 2)
    assert np.all(np.isfinite(preds.heads))


def test_multi_identical_branches_identical_predictions():
    config = small_config(**{"model.heads": 3})
    rng = np.random.default_rng(20)
    store = init_params(config, rng)
    # copy head 0 into all branches
    for h in (1, 2):
        for name in store.names():
            if name.startswith("head0."):
                store[name.replace("head0.", f"head{h}.")].data[:] = store[name].data
    scene = random_scene(rng, 3, config.model.t_obs)
    emb = SceneEmbedding(rng.normal(size=4))
    preds = forward_multi(scene, emb, store, config)
    assert np.array_equal(preds.heads[0], preds.heads[1])
    assert np.array_equal(preds.heads[0], preds.heads[2])


def test_multi_with_one_head_equals_deterministic():
    config = small_config()
    rng = np.random.default_rng(21)
    store = init_params(config, rng)
    scene = random_scene(rng, 2, config.model.t_obs)
    emb = SceneEmbedding(rng.normal(size=4))
    multi = forward_multi(scene, emb, store, config)
    det = forward_deterministic(scene, emb, store, config)
    assert np.array_equal(multi.heads, det.heads)


def test_multi_heads_match_independent_single_head_passes():
    config = small_config(**{"model.heads": 4})
    rng = np.random.default_rng(22)
    store = init_params(config, rng)
    scene = random_scene(rng, 3, config.model.t_obs)
    emb = SceneEmbedding(rng.normal(size=4))
    multi = forward_multi(scene, emb, store, config)
    for h in range(4):
        single = forward_heads(scene, emb, store, config, heads=[h])[0]
        assert np.array_equal(multi.heads[h], single.data)


def test_permuting_agents_permutes_predictions():
    config = small_config(**{"model.heads": 2})
    rng = np.random.default_rng(23)
    store = init_params(config, rng)
    scene = random_scene(rng, 4, config.model.t_obs)
    emb = SceneEmbedding(rng.normal(size=4))
    order = [2, 0, 3, 1]
    base = forward_multi(scene, emb, store, config)
    shuffled = forward_multi(scene.permuted(order), emb, store, config)
    assert np.max(np.abs(base.heads[:, order] - shuffled.heads)) <= 1e-9


def test_pattern_states_invariant_layer_by_layer():
    config = small_config(**{"model.heads": 2})
    rng = np.random.default_rng(24)
    store = init_params(config, rng)
    scene = random_scene(rng, 3, config.model.t_obs)
    emb = SceneEmbedding(rng.normal(size=4))
    moved = scene.transformed(rotation_matrix(0.33), [-6.0, 2.0])
    ta = forward_trace(scene, emb, store, config)
    tb = forward_trace(moved, emb, store, config)
    assert len(ta["pat_states"]) == config.model.layers  # layers 0..L-1 in the trunk
    for pa, pb in zip(ta["pat_states"], tb["pat_states"]):
        assert np.max(np.abs(pa.data - pb.data)) <= 1e-9
    for h in range(2):
        assert (
            np.max(np.abs(ta["head_states"][h]["pat"].data
                          - tb["head_states"][h]["pat"].data)) <= 1e-9
        )
