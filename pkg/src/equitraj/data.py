"""Canonical trajectory files, window extraction, synthetic corpora.

The canonical format is UTF-8 TSV, one record per line:
``frame<TAB>agent<TAB>x<TAB>y``, '#' comment lines permitted, no header.
Converting THOR / Supermarket / ETH-UCY archives into it is documented
preprocessing, not core code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, InputError, ParseError
from .geometry import TrajectoryScene
from .scene import SceneEmbedding


@dataclass(frozen=True)
class TrajectoryRecord:
    frame: int
    agent: int
    x: float
    y: float


@dataclass(frozen=True)
class WindowSpec:
    t_obs: int = 8
    t_pred: int = 12
    stride: int = 1
    frame_step: int = 1

    def __post_init__(self):
        if min(self.t_obs, self.t_pred, self.stride, self.frame_step) < 1:
            raise InputError("window spec fields must all be positive")

    @property
    def length(self) -> int:
        return self.t_obs + self.t_pred


@dataclass(frozen=True)
class Window:
    """One training/evaluation sample: observations plus ground truth."""

    scene: TrajectoryScene
    future: np.ndarray           # (n_agents, t_pred, 2) absolute coordinates
    future_frames: tuple[int, ...]


def load_trajectories(path) -> list[TrajectoryRecord]:
    """Parse a canonical TSV file, sorted by (agent, frame)."""
    records: list[TrajectoryRecord] = []
    line_of: dict[tuple[int, int], int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            fields = stripped.split("\t")
            if len(fields) != 4:
                raise ParseError(
                    f"expected 4 tab-separated fields, got {len(fields)}",
                    path=path,
                    line=lineno,
                )
            try:
                frame = int(fields[0])
                agent = int(fields[1])
                x = float(fields[2])
                y = float(fields[3])
            except ValueError:
                raise ParseError(
                    f"non-numeric field in record {stripped!r}", path=path, line=lineno
                ) from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise DataError("non-finite coordinate", path=path, line=lineno)
            key = (frame, agent)
            if key in line_of:
                raise DataError(
                    f"duplicate (frame, agent) = {key}, first seen at line "
                    f"{line_of[key]}",
                    path=path,
                    line=lineno,
                )
            line_of[key] = lineno
            records.append(TrajectoryRecord(frame, agent, x, y))
    records.sort(key=lambda r: (r.agent, r.frame))
    return records


def save_trajectories(path, records: list[TrajectoryRecord], comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for r in records:
            fh.write(f"{r.frame}\t{r.agent}\t{r.x!r}\t{r.y!r}\n")


def window_split(
    records: list[TrajectoryRecord],
    spec: WindowSpec,
    scene_prefix: str = "scene",
) -> list[Window]:
    """Slide windows of t_obs + t_pred frames over the file's frame list.

    Frames are the sorted distinct frame ids, thinned to every
    ``frame_step``-th entry; window starts advance by ``stride``
    entries. A window keeps exactly the agents present at every one of
    its frames and is dropped when no agent is complete.
    """
    frames = sorted({r.frame for r in records})
    frames = frames[:: spec.frame_step]
    by_agent_frame: dict[int, dict[int, TrajectoryRecord]] = {}
    for r in records:
        by_agent_frame.setdefault(r.agent, {})[r.frame] = r

    windows: list[Window] = []
    length = spec.length
    start = 0
    while start + length <= len(frames):
        window_frames = frames[start : start + length]
        complete = [
            agent
            for agent in sorted(by_agent_frame)
            if all(f in by_agent_frame[agent] for f in window_frames)
        ]
        if complete:
            positions = np.array(
                [
                    [
                        (by_agent_frame[a][f].x, by_agent_frame[a][f].y)
                        for f in window_frames
                    ]
                    for a in complete
                ],
                dtype=np.float64,
            )
            scene = TrajectoryScene(
                agent_ids=tuple(complete),
                positions=positions[:, : spec.t_obs, :],
                frames=tuple(window_frames[: spec.t_obs]),
                scene_id=f"{scene_prefix}:{window_frames[0]}",
            )
            windows.append(
                Window(
                    scene=scene,
                    future=positions[:, spec.t_obs :, :],
                    future_frames=tuple(window_frames[spec.t_obs :]),
                )
            )
        start += spec.stride
    return windows


@dataclass(frozen=True)
class SynthConfig:
    n_agents: int = 3
    n_frames: int = 40
    motif: str = "mixed"       # straight | loop | zigzag | mixed
    noise: float = 0.0
    seed: int = 0
    embedding_dim: int = 16
    embedding_mode: str = "zero"   # zero | random

    def __post_init__(self):
        if self.n_agents < 1 or self.n_frames < 2:
            raise InputError("need at least 1 agent and 2 frames")
        if self.motif not in ("straight", "loop", "zigzag", "mixed"):
            raise InputError(f"unknown motif {self.motif!r}")
        if self.noise < 0:
            raise InputError("noise sigma must be >= 0")
        if self.embedding_mode not in ("zero", "random"):
            raise InputError(f"unknown embedding mode {self.embedding_mode!r}")


_MOTIF_CYCLE = ("straight", "loop", "zigzag")


def synth_generate(config: SynthConfig) -> tuple[list[TrajectoryRecord], SceneEmbedding]:
    """Deterministic-per-seed synthetic corpus plus a scene embedding stub."""
    rng = np.random.default_rng(config.seed)
    records: list[TrajectoryRecord] = []
    for agent in range(config.n_agents):
        motif = config.motif
        if motif == "mixed":
            motif = _MOTIF_CYCLE[agent % len(_MOTIF_CYCLE)]
        start = rng.uniform(-2.0, 2.0, size=2)
        speed = rng.uniform(0.2, 0.6)
        heading = rng.uniform(0.0, 2.0 * np.pi)
        track = _motif_track(motif, start, speed, heading, config.n_frames)
        if config.noise > 0:
            track = track + rng.normal(0.0, config.noise, size=track.shape)
        for frame in range(config.n_frames):
            records.append(
                TrajectoryRecord(frame, agent, float(track[frame, 0]), float(track[frame, 1]))
            )
    if config.embedding_mode == "zero":
        embedding = SceneEmbedding(np.zeros(config.embedding_dim), source="zero")
    else:
        embedding = SceneEmbedding(
            rng.normal(0.0, 1.0, size=config.embedding_dim), source="synthetic"
        )
    records.sort(key=lambda r: (r.agent, r.frame))
    return records, embedding


def _motif_track(motif: str, start, speed, heading, n_frames: int) -> np.ndarray:
    t = np.arange(n_frames)[:, None]
    direction = np.array([np.cos(heading), np.sin(heading)])
    if motif == "straight":
        return start + t * speed * direction
    if motif == "loop":
        # full circle over the window: the last frame lands back on the start
        omega = 2.0 * np.pi / (n_frames - 1)
        radius = speed / omega
        normal = np.array([-direction[1], direction[0]])
        center = start + radius * normal
        phi0 = np.arctan2(start[1] - center[1], start[0] - center[0])
        phi = phi0 + omega * t[:, 0]
        return center + radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    # zigzag: right-angle turn every few steps
    leg = max(2, n_frames // 6)
    pos = np.zeros((n_frames, 2))
    pos[0] = start
    current = direction.copy()
    for k in range(1, n_frames):
        if k % leg == 0:
            current = np.array([-current[1], current[0]])
        pos[k] = pos[k - 1] + speed * current
    return pos
