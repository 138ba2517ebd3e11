"""Displacement metrics and the evaluation protocols."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import Config
from .errors import InputError, ShapeError
from .model import forward_heads
from .numerics import ParamStore
from .training import Sample


def ade(pred: np.ndarray, ground_truth: np.ndarray) -> float:
    """Average displacement: mean over steps of the L2 distance (meters)."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(ground_truth, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 2 or pred.shape[0] < 1:
        raise ShapeError(f"expected matching (t, 2) arrays, got {pred.shape} vs {gt.shape}")
    return float(np.linalg.norm(pred - gt, axis=1).mean())


def fde(pred: np.ndarray, ground_truth: np.ndarray) -> float:
    """Final displacement: L2 distance at the last step only (meters)."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(ground_truth, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 2 or pred.shape[0] < 1:
        raise ShapeError(f"expected matching (t, 2) arrays, got {pred.shape} vs {gt.shape}")
    return float(np.linalg.norm(pred[-1] - gt[-1]))


@dataclass(frozen=True)
class SceneResult:
    scene_id: str
    n_agents: int
    ade: float
    fde: float


@dataclass(frozen=True)
class EvalReport:
    mode: str
    rows: tuple[SceneResult, ...]
    ade: float
    fde: float

    def to_csv(self) -> str:
        lines = ["scene_id,n_agents,ade,fde"]
        for r in self.rows:
            lines.append(f"{r.scene_id},{r.n_agents},{r.ade!r},{r.fde!r}")
        lines.append(f"TOTAL,{sum(r.n_agents for r in self.rows)},{self.ade!r},{self.fde!r}")
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        header = ("scene", "agents", "ADE/FDE (m)")
        body = [
            (r.scene_id, str(r.n_agents), f"{r.ade:.2f}/{r.fde:.2f}")
            for r in self.rows
        ]
        body.append(("TOTAL", str(sum(r.n_agents for r in self.rows)),
                     f"{self.ade:.2f}/{self.fde:.2f}"))
        widths = [max(len(row[c]) for row in [header] + body) for c in range(3)]
        sep = "  "
        out = [sep.join(h.ljust(w) for h, w in zip(header, widths))]
        out.append(sep.join("-" * w for w in widths))
        for row in body:
            out.append(sep.join(v.ljust(w) for v, w in zip(row, widths)))
        return "\n".join(out) + "\n"


def evaluate(
    samples: Sequence[Sample],
    store: ParamStore,
    config: Config,
    mode: str | None = None,
    single_best_head: bool = False,
) -> EvalReport:
    """Score a sample set.

    Deterministic mode scores head 0. Multi mode takes, per agent, the
    minimum over heads for each metric independently (or, with
    ``single_best_head``, both metrics from the head with the best ADE).
    """
    if not samples:
        raise InputError("cannot evaluate an empty dataset")
    if mode is None:
        mode = "multi" if config.model.heads > 1 else "deterministic"
    if mode not in ("deterministic", "multi"):
        raise InputError(f"unknown evaluation mode {mode!r}")
    if mode == "multi" and config.model.heads < 2:
        raise InputError("multi-mode evaluation needs a multi-head model")

    rows = []
    with store.frozen():
        for window, embedding in samples:
            heads = [0] if mode == "deterministic" else None
            preds = forward_heads(
                window.scene, embedding, store, config, mode="eval", heads=heads
            )
            stacked = np.stack([p.data for p in preds], axis=0)  # (h, m, t, 2)
            agent_ade, agent_fde = [], []
            for a in range(window.scene.n_agents):
                ades = [ade(stacked[h, a], window.future[a]) for h in range(stacked.shape[0])]
                fdes = [fde(stacked[h, a], window.future[a]) for h in range(stacked.shape[0])]
                if single_best_head:
                    best = int(np.argmin(ades))
                    agent_ade.append(ades[best])
                    agent_fde.append(fdes[best])
                else:
                    agent_ade.append(min(ades))
                    agent_fde.append(min(fdes))
            rows.append(
                SceneResult(
                    scene_id=window.scene.scene_id,
                    n_agents=window.scene.n_agents,
                    ade=float(np.mean(agent_ade)),
                    fde=float(np.mean(agent_fde)),
                )
            )
    return EvalReport(
        mode=mode,
        rows=tuple(rows),
        ade=float(np.mean([r.ade for r in rows])),
        fde=float(np.mean([r.fde for r in rows])),
    )
