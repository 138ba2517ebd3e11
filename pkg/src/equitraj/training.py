"""Losses and the optimization loop."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .config import Config
from .data import Window
from .errors import InputError, ShapeError, TrainingDiverged
from .geometry import rotation_matrix
from .model import forward_heads
from .numerics import (
    ParamStore,
    Tensor,
    clip_grad_norm,
    concat,
    l2_norm,
    optimizer_step,
    tmean,
)
from .scene import SceneEmbedding

Sample = tuple[Window, "SceneEmbedding | None"]
LogRow = tuple[int, str, float]


def loss_deterministic(pred: Tensor, ground_truth: np.ndarray) -> Tensor:
    """Mean over agents and steps of the L2 prediction error."""
    gt = np.asarray(ground_truth, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction shape {pred.shape} != ground truth {gt.shape}")
    return tmean(l2_norm(pred - Tensor(gt), axis=2))


def loss_multi(preds: Sequence[Tensor], ground_truth: np.ndarray) -> Tensor:
    """Winner-takes-all: per agent, the best head's mean L2 error.

    Only the winning head's branch appears in the returned graph, so
    non-winning head-exclusive parameters get exactly zero gradient.
    """
    if len(preds) < 1:
        raise InputError("loss_multi needs at least one head")
    gt = np.asarray(ground_truth, dtype=np.float64)
    per_head = []
    for pred in preds:
        if pred.shape != gt.shape:
            raise ShapeError(
                f"prediction shape {pred.shape} != ground truth {gt.shape}"
            )
        per_head.append(tmean(l2_norm(pred - Tensor(gt), axis=2), axis=1))
    values = np.stack([t.data for t in per_head], axis=0)  # (heads, agents)
    winners = np.argmin(values, axis=0)
    picked = [
        per_head[int(winners[agent])][agent].reshape((1,))
        for agent in range(gt.shape[0])
    ]
    return tmean(concat(picked, axis=0))


def scene_loss(
    window: Window,
    embedding: SceneEmbedding | None,
    store: ParamStore,
    config: Config,
    mode: str,
    rng: np.random.Generator | None,
) -> Tensor:
    preds = forward_heads(window.scene, embedding, store, config, mode=mode, rng=rng)
    if config.model.heads > 1:
        return loss_multi(preds, window.future)
    return loss_deterministic(preds[0], window.future)


def split_samples(
    samples: Sequence[Sample], config: Config, seed: int
) -> tuple[list[Sample], list[Sample], list[Sample]]:
    """Seeded by-window split into train/val/test by the configured ratios."""
    t = config.train
    order = np.random.default_rng(seed).permutation(len(samples))
    n = len(samples)
    n_train = int(round(t.split_train * n))
    n_val = int(round(t.split_val * n))
    n_train = min(n_train, n)
    n_val = min(n_val, n - n_train)
    picks = [samples[i] for i in order]
    return (
        picks[:n_train],
        picks[n_train : n_train + n_val],
        picks[n_train + n_val :],
    )


def fit(
    train_samples: Sequence[Sample],
    val_samples: Sequence[Sample],
    store: ParamStore,
    config: Config,
    on_epoch: Callable[[int, float], None] | None = None,
) -> list[LogRow]:
    """Shuffled mini-batch training; deterministic for a fixed seed.

    Returns (epoch, split, loss) rows; ``on_epoch`` fires after each
    epoch with the epoch index and its training loss.
    """
    if not train_samples:
        raise InputError("training set is empty")
    t = config.train
    rng = np.random.default_rng(t.seed)
    rows: list[LogRow] = []

    for epoch in range(t.epochs):
        order = rng.permutation(len(train_samples))
        weighted = 0.0
        for batch_idx, first in enumerate(range(0, len(order), t.batch_size)):
            chunk = order[first : first + t.batch_size]
            store.zero_grad()
            losses = []
            for k in chunk:
                window, embedding = train_samples[int(k)]
                if t.rotation_augment:
                    window = _rotated(window, rng)
                losses.append(
                    scene_loss(window, embedding, store, config, "train", rng)
                )
            batch_loss = tmean(concat([l.reshape((1,)) for l in losses], axis=0))
            value = float(batch_loss.data)
            if not math.isfinite(value):
                raise TrainingDiverged(epoch, batch_idx, store.param_norms())
            batch_loss.backward()
            clip_grad_norm(store, t.clip_norm)
            optimizer_step(
                store,
                lr=t.lr,
                weight_decay=t.weight_decay,
                betas=(t.beta1, t.beta2),
                eps=t.eps,
            )
            weighted += value * len(chunk)
        train_loss = weighted / len(train_samples)
        rows.append((epoch, "train", train_loss))
        if val_samples:
            rows.append((epoch, "val", dataset_loss(val_samples, store, config)))
        if on_epoch is not None:
            on_epoch(epoch, train_loss)
    return rows


def dataset_loss(samples: Sequence[Sample], store: ParamStore, config: Config) -> float:
    """Eval-mode mean loss over a sample set; builds no gradient graph."""
    if not samples:
        raise InputError("cannot evaluate an empty sample set")
    with store.frozen():
        total = 0.0
        for window, embedding in samples:
            total += float(
                scene_loss(window, embedding, store, config, "eval", None).data
            )
    return total / len(samples)


def _rotated(window: Window, rng: np.random.Generator) -> Window:
    rotation = rotation_matrix(rng.uniform(0.0, 2.0 * np.pi))
    return Window(
        scene=window.scene.transformed(rotation),
        future=window.future @ rotation.T,
        future_frames=window.future_frames,
    )
