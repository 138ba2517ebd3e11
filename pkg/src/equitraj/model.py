"""The forecasting network.

Geometric states (coordinate-valued, per time channel) are updated only
through differences scaled by invariant scores, so every layer commutes
with planar rotation and the centroid frame absorbs translation. Pattern
states, messages, and interaction weights are built purely from
invariant quantities: speeds, heading changes, squared channel
distances, the scene token, and each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Config
from .errors import InputError
from .geometry import (
    AgentGraph,
    TrajectoryScene,
    build_graph,
    compute_centroid,
    encode_trajectory,
    heading_change,
    init_pattern_features,
    speed_profile,
)
from .numerics import (
    MlpSpec,
    ParamStore,
    Tensor,
    concat,
    dct_matrix,
    gather,
    matmul,
    mlp_apply,
    mlp_init,
    segment_sum,
    softmax,
    tanh,
    tsum,
)
from .scene import SceneEmbedding, project_scene_tokens


# Soft-clip range for the coordinate-update scores; see equivariant_update.
SCORE_RANGE = 2.0


@dataclass(frozen=True)
class PredictionSet:
    """Predicted futures in absolute coordinates, (heads, agents, t_pred, 2)."""

    agent_ids: tuple[int, ...]
    heads: np.ndarray

    @property
    def n_heads(self) -> int:
        return self.heads.shape[0]


def edge_spec(config: Config) -> MlpSpec:
    m = config.model
    width = 2 * m.pattern_width + m.t_channels + m.token_width + m.categories
    return MlpSpec(
        widths=(width, m.message_width, m.message_width),
        dropout=config.regularization.dropout,
    )


def coord_spec(config: Config) -> MlpSpec:
    m = config.model
    return MlpSpec(
        widths=(m.message_width, m.message_width, m.t_channels),
        dropout=config.regularization.dropout,
        bias=(True, False),
    )


def feat_spec(config: Config) -> MlpSpec:
    m = config.model
    return MlpSpec(
        widths=(m.pattern_width + m.message_width, m.pattern_width, m.pattern_width),
        dropout=config.regularization.dropout,
    )


def reasoning_spec(config: Config) -> MlpSpec:
    m = config.model
    return MlpSpec(
        widths=(2 * m.pattern_width + m.t_channels, m.pattern_width, m.categories),
        dropout=config.regularization.dropout,
    )


def _encoder_input_width(config: Config) -> int:
    r = config.regularization
    if r.dct and r.dct_coeffs > 0:
        return r.dct_coeffs
    return config.model.t_obs


def init_params(config: Config, rng: np.random.Generator) -> ParamStore:
    """Fresh parameters: uniform +-sqrt(1/fan_in) weights, zero biases.

    The coordinate-scoring MLPs end in a zero layer so the untrained
    network is the identity on geometric states; heads are initialized
    from independent draws so multi-prediction branches diverge.
    """
    m = config.model
    store = ParamStore()

    enc_in = _encoder_input_width(config)
    bound = (1.0 / enc_in) ** 0.5
    store.add("encoder.w", rng.uniform(-bound, bound, size=(m.t_channels, enc_in)))

    feat_in = 2 * (m.t_channels - 1)
    bound = (1.0 / feat_in) ** 0.5
    store.add("pattern0.w", rng.uniform(-bound, bound, size=(feat_in, m.pattern_width)))
    store.add("pattern0.b", np.zeros(m.pattern_width))

    if config.scene.enabled:
        dim = config.scene.embedding_dim
        bound = (1.0 / dim) ** 0.5
        store.add("token.w", rng.uniform(-bound, bound, size=(dim, m.token_width)))
        store.add("token.b", np.zeros(m.token_width))
    else:
        bound = (1.0 / m.token_width) ** 0.5
        store.add("token.const", rng.uniform(-bound, bound, size=m.token_width))

    mlp_init(reasoning_spec(config), store, "reasoning", rng)

    for layer in range(m.layers - 1):
        _init_layer(config, store, f"layer{layer}", rng)
    for head in range(m.heads):
        _init_layer(config, store, f"head{head}.layer", rng)
        bound = (1.0 / m.t_channels) ** 0.5
        store.add(
            f"head{head}.out.w",
            rng.uniform(-bound, bound, size=(m.t_pred, m.t_channels)),
        )
    return store


def _init_layer(config: Config, store: ParamStore, prefix: str, rng) -> None:
    mlp_init(edge_spec(config), store, f"{prefix}.edge", rng)
    mlp_init(coord_spec(config), store, f"{prefix}.coord", rng, zero_final=True)
    mlp_init(feat_spec(config), store, f"{prefix}.feat", rng)


# -- building blocks ----------------------------------------------------------


def _channel_sq_distances(geo: Tensor, graph: AgentGraph) -> Tensor:
    diff = gather(geo, graph.receivers) - gather(geo, graph.senders)
    return tsum(diff * diff, axis=2)


def infer_interaction_graph(
    geo: Tensor,
    pat: Tensor,
    graph: AgentGraph,
    params: ParamStore,
    config: Config,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Per-edge category weights, shape (n_edges, categories), rows sum to 1."""
    h_recv = gather(pat, graph.receivers)
    h_send = gather(pat, graph.senders)
    sq = _channel_sq_distances(geo, graph)
    logits = mlp_apply(
        reasoning_spec(config), params, "reasoning",
        concat([h_recv, h_send, sq], axis=1), mode=mode, rng=rng,
    )
    return softmax(logits, axis=1)


def compute_messages(
    geo: Tensor,
    pat: Tensor,
    token: Tensor,
    weights: Tensor,
    graph: AgentGraph,
    params: ParamStore,
    layer_prefix: str,
    config: Config,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Per-edge messages: MLP over (h_i, h_j, channel distances^2, token, a_ij)."""
    e = graph.n_edges
    h_recv = gather(pat, graph.receivers)
    h_send = gather(pat, graph.senders)
    sq = _channel_sq_distances(geo, graph)
    token_rows = token.reshape((1, token.shape[-1])) + Tensor(
        np.zeros((e, token.shape[-1]))
    )
    stacked = concat([h_recv, h_send, sq, token_rows, weights], axis=1)
    return mlp_apply(
        edge_spec(config), params, f"{layer_prefix}.edge", stacked, mode=mode, rng=rng
    )


def equivariant_update(
    geo: Tensor,
    messages: Tensor,
    graph: AgentGraph,
    params: ParamStore,
    layer_prefix: str,
    config: Config,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Move each agent's channels along neighbor differences scaled by
    invariant per-channel scores; single-agent scenes pass through.

    Scores are soft-clipped to (-SCORE_RANGE, SCORE_RANGE) with unit
    slope at zero: unbounded scores compound multiplicatively across
    layers and blow up coordinates on out-of-distribution scenes, which
    would void the absolute symmetry tolerances.
    """
    m = graph.n_agents
    if m == 1:
        return geo
    raw = mlp_apply(
        coord_spec(config), params, f"{layer_prefix}.coord", messages, mode=mode, rng=rng
    )
    scores = tanh(raw * (1.0 / SCORE_RANGE)) * SCORE_RANGE
    diff = gather(geo, graph.receivers) - gather(geo, graph.senders)
    contrib = diff * scores.reshape((graph.n_edges, config.model.t_channels, 1))
    aggregated = segment_sum(contrib, graph.receivers, m)
    return geo + aggregated * (1.0 / (m - 1))


def invariant_update(
    pat: Tensor,
    messages: Tensor,
    graph: AgentGraph,
    params: ParamStore,
    layer_prefix: str,
    config: Config,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Aggregate incoming messages in deterministic edge order and mix
    them with the current pattern state."""
    summed = segment_sum(messages, graph.receivers, graph.n_agents)
    stacked = concat([pat, summed], axis=1)
    return mlp_apply(
        feat_spec(config), params, f"{layer_prefix}.feat", stacked, mode=mode, rng=rng
    )


def output_layer(
    geo: Tensor,
    centroid: np.ndarray,
    params: ParamStore,
    head: int,
    config: Config,
) -> Tensor:
    """Decode a head's geometric state into absolute future coordinates."""
    if head >= config.model.heads:
        raise InputError(f"head {head} out of range (heads={config.model.heads})")
    state = geo
    if config.regularization.dct:
        basis = dct_matrix(config.model.t_channels).T
        state = matmul(Tensor(basis), state)
    pred = matmul(params[f"head{head}.out.w"], state)
    return pred + Tensor(centroid)


# -- full forward passes -------------------------------------------------------


def forward_trace(
    scene: TrajectoryScene,
    embedding: SceneEmbedding | None,
    params: ParamStore,
    config: Config,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
    heads: list[int] | None = None,
) -> dict:
    """Run the network and keep every intermediate for inspection.

    Returns a dict with the centroid, token, interaction weights, the
    per-layer geometric/pattern states, per-layer messages, and one
    prediction tensor per requested head.
    """
    if heads is None:
        heads = list(range(config.model.heads))
    centroid = compute_centroid(scene)
    graph = build_graph(scene)

    geo = encode_trajectory(scene, centroid, params, config)
    rho = speed_profile(scene, centroid, params, config)
    theta = heading_change(scene, centroid, params, config)
    pat = init_pattern_features(rho, theta, params)
    token = project_scene_tokens(embedding, params, config)
    weights = infer_interaction_graph(geo, pat, graph, params, config, mode, rng)

    geo_states, pat_states, message_log = [geo], [pat], []
    for layer in range(config.model.layers - 1):
        prefix = f"layer{layer}"
        msgs = compute_messages(
            geo, pat, token, weights, graph, params, prefix, config, mode, rng
        )
        geo_next = equivariant_update(geo, msgs, graph, params, prefix, config, mode, rng)
        pat = invariant_update(pat, msgs, graph, params, prefix, config, mode, rng)
        geo = geo_next
        geo_states.append(geo)
        pat_states.append(pat)
        message_log.append(msgs)

    head_states, preds = {}, {}
    for head in heads:
        prefix = f"head{head}.layer"
        msgs = compute_messages(
            geo, pat, token, weights, graph, params, prefix, config, mode, rng
        )
        geo_h = equivariant_update(geo, msgs, graph, params, prefix, config, mode, rng)
        pat_h = invariant_update(pat, msgs, graph, params, prefix, config, mode, rng)
        head_states[head] = {"geo": geo_h, "pat": pat_h, "messages": msgs}
        preds[head] = output_layer(geo_h, centroid, params, head, config)

    return {
        "centroid": centroid,
        "graph": graph,
        "token": token,
        "weights": weights,
        "rho": rho,
        "theta": theta,
        "geo_states": geo_states,
        "pat_states": pat_states,
        "messages": message_log,
        "head_states": head_states,
        "preds": preds,
    }


def forward_heads(
    scene: TrajectoryScene,
    embedding: SceneEmbedding | None,
    params: ParamStore,
    config: Config,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
    heads: list[int] | None = None,
) -> list[Tensor]:
    """Prediction tensors for the requested heads (default: all)."""
    if heads is None:
        heads = list(range(config.model.heads))
    trace = forward_trace(scene, embedding, params, config, mode, rng, heads)
    return [trace["preds"][h] for h in heads]


def forward_deterministic(
    scene: TrajectoryScene,
    embedding: SceneEmbedding | None,
    params: ParamStore,
    config: Config,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> PredictionSet:
    """Single-prediction pass through head 0."""
    pred = forward_heads(scene, embedding, params, config, mode, rng, heads=[0])[0]
    return PredictionSet(scene.agent_ids, pred.data[None, ...].copy())


def forward_multi(
    scene: TrajectoryScene,
    embedding: SceneEmbedding | None,
    params: ParamStore,
    config: Config,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> PredictionSet:
    """Multi-prediction pass: shared trunk, one branch per head."""
    preds = forward_heads(scene, embedding, params, config, mode, rng)
    return PredictionSet(
        scene.agent_ids, np.stack([p.data for p in preds], axis=0)
    )
