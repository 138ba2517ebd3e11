"""Certification of the model's symmetry claims.

The equivariance suite measures how far predictions of a transformed
scene land from the transformed predictions; the invariance suite does
the same for every quantity that must not move at all: speeds, heading
changes, pattern states at every layer, messages, interaction weights,
and the scene token.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Config
from .geometry import TrajectoryScene, rotation_matrix
from .model import forward_trace
from .numerics import ParamStore
from .scene import SceneEmbedding


@dataclass(frozen=True)
class SymmetryResult:
    equivariance: float   # max |F(RX+t) - (R F(X)+t)| over heads and trials
    invariance: float     # max deviation of any invariant quantity
    trials: int

    def passed(self, tol_equivariance: float = 1e-6, tol_invariance: float = 1e-9) -> bool:
        return (
            self.equivariance <= tol_equivariance
            and self.invariance <= tol_invariance
        )


def random_scene(
    rng: np.random.Generator, n_agents: int = 3, t_obs: int = 8
) -> TrajectoryScene:
    """Smooth random-walk scene: varied speeds and turns, no degeneracy."""
    positions = np.zeros((n_agents, t_obs, 2))
    for a in range(n_agents):
        pos = rng.uniform(-4.0, 4.0, size=2)
        heading = rng.uniform(0.0, 2.0 * np.pi)
        speed = rng.uniform(0.4, 1.4)
        for step in range(t_obs):
            positions[a, step] = pos
            heading += rng.uniform(-0.8, 0.8)
            speed = np.clip(speed + rng.uniform(-0.15, 0.15), 0.2, 1.8)
            pos = pos + speed * np.array([np.cos(heading), np.sin(heading)])
    return TrajectoryScene(
        agent_ids=tuple(range(n_agents)), positions=positions,
        frames=tuple(range(t_obs)), scene_id="synthetic",
    )


def run_symmetry_suite(
    store: ParamStore,
    config: Config,
    trials: int = 100,
    seed: int = 0,
    n_agents: int = 3,
) -> SymmetryResult:
    """Evaluate every head under ``trials`` random (rotation, translation)
    pairs, dropout off, scene token fixed per scene."""
    rng = np.random.default_rng(seed)
    worst_equi = 0.0
    worst_inv = 0.0
    with store.frozen():
        for _ in range(trials):
            scene = random_scene(rng, n_agents=n_agents, t_obs=config.model.t_obs)
            embedding = None
            if config.scene.enabled:
                embedding = SceneEmbedding(
                    rng.normal(size=config.scene.embedding_dim), source="synthetic"
                )
            rotation = rotation_matrix(rng.uniform(0.0, 2.0 * np.pi))
            translation = rng.uniform(-10.0, 10.0, size=2)
            moved = scene.transformed(rotation, translation)

            base = forward_trace(scene, embedding, store, config, mode="eval")
            trans = forward_trace(moved, embedding, store, config, mode="eval")

            for head, pred in base["preds"].items():
                expected = pred.data @ rotation.T + translation
                dev = np.max(np.abs(trans["preds"][head].data - expected))
                worst_equi = max(worst_equi, dev)

            worst_inv = max(worst_inv, _invariant_deviation(base, trans))
    return SymmetryResult(equivariance=worst_equi, invariance=worst_inv, trials=trials)


def _invariant_deviation(base: dict, trans: dict) -> float:
    """Largest drift across all quantities that must be transform-invariant."""
    worst = 0.0

    def check(a, b):
        nonlocal worst
        if a.size:
            worst = max(worst, float(np.max(np.abs(a - b))))

    check(base["rho"].data, trans["rho"].data)
    check(base["theta"].data, trans["theta"].data)
    check(base["weights"].data, trans["weights"].data)
    check(base["token"].data, trans["token"].data)
    for pa, pb in zip(base["pat_states"], trans["pat_states"]):
        check(pa.data, pb.data)
    for ma, mb in zip(base["messages"], trans["messages"]):
        check(ma.data, mb.data)
    for head, state in base["head_states"].items():
        check(state["pat"].data, trans["head_states"][head]["pat"].data)
        check(state["messages"].data, trans["head_states"][head]["messages"].data)
    return worst
