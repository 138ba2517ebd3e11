import numpy as np
import pytest

from equitraj.config import Config, apply_overrides
from equitraj.geometry import TrajectoryScene
from equitraj.numerics import ParamStore


@pytest.fixture
def plain_config():
    """DCT off, dropout off, scene off: the bare geometric pipeline."""
    cfg = apply_overrides(Config(), {
        "regularization.dct": "false",
        "regularization.dropout": "0.0",
        "scene.enabled": "false",
    })
    cfg.validate()
    return cfg


def identity_encoder_store(t_obs: int = 8) -> ParamStore:
    """Encoder = identity time mix, so encoded coords are the centered input."""
    store = ParamStore()
    store.add("encoder.w", np.eye(t_obs))
    return store


def make_scene(positions, scene_id="test") -> TrajectoryScene:
    positions = np.asarray(positions, dtype=np.float64)
    if positions.ndim == 2:
        positions = positions[None, ...]
    return TrajectoryScene(
        agent_ids=tuple(range(positions.shape[0])),
        positions=positions,
        frames=tuple(range(positions.shape[1])),
        scene_id=scene_id,
    )


def straight_walk(start, velocity, steps) -> np.ndarray:
    start = np.asarray(start, dtype=np.float64)
    velocity = np.asarray(velocity, dtype=np.float64)
    return start + np.arange(steps)[:, None] * velocity
