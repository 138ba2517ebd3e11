"""Initial geometric and pattern features from observed trajectories.

The coordinate channel is kept equivariant: the centroid frame absorbs
translations, and every map applied to coordinates is a bias-free mix of
time channels only, so planar rotations commute with it. Speeds and
heading changes are invariant by construction and feed the pattern
channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Config
from .errors import InputError, ShapeError
from .numerics import (
    ParamStore,
    Tensor,
    absval,
    arctan2,
    concat,
    dct,
    l2_norm,
    matmul,
    tsum,
)

# Velocities shorter than this are treated as stationary when computing
# heading angles (indoor tracks routinely contain standing phases).
STATIONARY_SPEED = 1e-9


@dataclass(frozen=True)
class TrajectoryScene:
    """All agents' observed positions for one window.

    positions has shape (n_agents, t_obs, 2), meters; frames holds the
    window's observed frame ids.
    """

    agent_ids: tuple[int, ...]
    positions: np.ndarray
    frames: tuple[int, ...]
    scene_id: str = ""

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 3 or pos.shape[2] != 2:
            raise InputError(f"positions must be (agents, t_obs, 2), got {pos.shape}")
        if pos.shape[0] != len(self.agent_ids):
            raise InputError("agent_ids length must match positions")
        if pos.shape[0] < 1:
            raise InputError("a scene needs at least one agent")
        if not np.all(np.isfinite(pos)):
            raise InputError("positions must be finite")
        object.__setattr__(self, "positions", pos)

    @property
    def n_agents(self) -> int:
        return self.positions.shape[0]

    @property
    def t_obs(self) -> int:
        return self.positions.shape[1]

    def transformed(self, rotation: np.ndarray, translation=(0.0, 0.0)) -> "TrajectoryScene":
        """Scene with every position mapped through x -> R x + t."""
        moved = self.positions @ np.asarray(rotation, dtype=np.float64).T
        moved = moved + np.asarray(translation, dtype=np.float64)
        return TrajectoryScene(self.agent_ids, moved, self.frames, self.scene_id)

    def permuted(self, order) -> "TrajectoryScene":
        order = list(order)
        return TrajectoryScene(
            tuple(self.agent_ids[i] for i in order),
            self.positions[order],
            self.frames,
            self.scene_id,
        )


@dataclass(frozen=True)
class AgentGraph:
    """Complete digraph over the scene's agents; edge (i, j) carries
    information flowing from sender j into receiver i."""

    n_agents: int
    receivers: np.ndarray
    senders: np.ndarray

    @property
    def n_edges(self) -> int:
        return self.receivers.shape[0]


def rotation_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def compute_centroid(scene: TrajectoryScene) -> np.ndarray:
    """Mean of all agents' observed positions, shape (2,)."""
    if scene.n_agents < 1:
        raise InputError("cannot take the centroid of an empty scene")
    return scene.positions.reshape(-1, 2).mean(axis=0)


def build_graph(scene: TrajectoryScene) -> AgentGraph:
    m = scene.n_agents
    receivers, senders = [], []
    for i in range(m):
        for j in range(m):
            if i != j:
                receivers.append(i)
                senders.append(j)
    return AgentGraph(
        n_agents=m,
        receivers=np.asarray(receivers, dtype=np.intp),
        senders=np.asarray(senders, dtype=np.intp),
    )


def _centered_input(scene: TrajectoryScene, centroid: np.ndarray, config: Config) -> np.ndarray:
    """Centroid-frame coordinates, optionally in the DCT basis."""
    z = scene.positions - centroid
    if config.regularization.dct:
        z = dct(z, axis=1)
        k = config.regularization.dct_coeffs
        if k > 0:
            z = z[:, :k, :]
    return z


def encode_trajectory(
    scene: TrajectoryScene,
    centroid: np.ndarray,
    params: ParamStore,
    config: Config,
) -> Tensor:
    """Layer-0 geometric state, shape (n_agents, t_channels, 2).

    Output stays in the centroid frame; the centroid is re-added only by
    the output layer.
    """
    z = _centered_input(scene, centroid, config)
    w = params["encoder.w"]
    if w.shape[1] != z.shape[1]:
        raise ShapeError(
            f"encoder.w expects {w.shape[1]} time channels, scene has {z.shape[1]}"
        )
    return matmul(w, Tensor(z))


def _velocities(encoded: Tensor) -> Tensor:
    return encoded[:, 1:, :] - encoded[:, :-1, :]


def speed_profile(
    scene: TrajectoryScene,
    centroid: np.ndarray,
    params: ParamStore,
    config: Config,
) -> Tensor:
    """Per-agent step-speed sequence of the encoded trajectory."""
    if scene.t_obs < 2:
        raise InputError("speed profile needs at least two observed steps")
    encoded = encode_trajectory(scene, centroid, params, config)
    return l2_norm(_velocities(encoded), axis=2)


def heading_change(
    scene: TrajectoryScene,
    centroid: np.ndarray,
    params: ParamStore,
    config: Config,
) -> Tensor:
    """Unsigned angles in [0, pi] between consecutive encoded velocities.

    Steps where either velocity is shorter than STATIONARY_SPEED get
    angle 0. The angle equals arccos of the normalized dot product but is
    evaluated as atan2(|cross|, dot), which stays well conditioned for
    near-parallel velocities where arccos amplifies roundoff without
    bound.
    """
    if scene.t_obs < 3:
        raise InputError("heading changes need at least three observed steps")
    encoded = encode_trajectory(scene, centroid, params, config)
    v = _velocities(encoded)
    later, earlier = v[:, 1:, :], v[:, :-1, :]
    dot = tsum(later * earlier, axis=2)
    cross = later[:, :, 0] * earlier[:, :, 1] - later[:, :, 1] * earlier[:, :, 0]
    n_later = l2_norm(later, axis=2)
    n_earlier = l2_norm(earlier, axis=2)
    moving = (n_later.data >= STATIONARY_SPEED) & (n_earlier.data >= STATIONARY_SPEED)
    angles = arctan2(absval(cross), dot)
    return angles * Tensor(moving.astype(np.float64))


def init_pattern_features(rho: Tensor, theta: Tensor, params: ParamStore) -> Tensor:
    """Layer-0 invariant features: affine map of [speeds, padded angles]."""
    m = rho.shape[0]
    padded_theta = concat([Tensor(np.zeros((m, 1))), theta], axis=1)
    feats = concat([rho, padded_theta], axis=1)
    w = params["pattern0.w"]
    if w.shape[0] != feats.shape[1]:
        raise ShapeError(
            f"pattern0.w expects input width {w.shape[0]}, got {feats.shape[1]}"
        )
    return matmul(feats, w) + params["pattern0.b"]
