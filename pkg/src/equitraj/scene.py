"""Frozen scene embeddings and their learned projection.

The embedding is produced out-of-process by a vision model (or a stub)
and enters the core as a single pooled vector per scene. Projecting it
never sees trajectory coordinates, so the resulting token is invariant
to any trajectory transform by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Config
from .errors import DataError, ShapeError
from .numerics import ParamStore, Tensor, matmul


@dataclass(frozen=True)
class SceneEmbedding:
    """Fixed vector from the vision model; dimensionless, frozen."""

    values: np.ndarray
    source: str = "zero"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise DataError(f"embedding must be a flat vector, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DataError("embedding contains non-finite values")
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def zero_embedding(dim: int) -> SceneEmbedding:
    return SceneEmbedding(np.zeros(dim), source="zero")


def load_scene_embedding(path) -> SceneEmbedding:
    """Parse the embedding file format.

    Line 1: integer dimension. Optional '#' comment lines. Final line:
    that many space-separated decimal floats.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    text = raw.decode("utf-8")
    offset = 0
    lines = text.splitlines(keepends=True)
    if not lines:
        raise DataError("empty embedding file", path=path, byte_offset=0)

    header = lines[0].strip()
    try:
        dim = int(header)
    except ValueError:
        raise DataError(
            f"header must be an integer dimension, got {header!r}",
            path=path,
            byte_offset=0,
        ) from None
    if dim < 1:
        raise DataError(f"dimension must be >= 1, got {dim}", path=path, byte_offset=0)
    offset += len(lines[0].encode("utf-8"))

    values_line = None
    values_offset = offset
    for line in lines[1:]:
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            values_line = stripped
            break
        offset += len(line.encode("utf-8"))
        values_offset = offset
    if values_line is None:
        raise DataError("missing values line", path=path, byte_offset=values_offset)

    fields = values_line.split()
    if len(fields) != dim:
        raise DataError(
            f"header declares {dim} values, found {len(fields)}",
            path=path,
            byte_offset=values_offset,
        )
    try:
        values = np.array([float(tok) for tok in fields], dtype=np.float64)
    except ValueError:
        raise DataError(
            "values line contains a non-numeric field",
            path=path,
            byte_offset=values_offset,
        ) from None
    if not np.all(np.isfinite(values)):
        raise DataError("non-finite embedding value", path=path, byte_offset=values_offset)
    return SceneEmbedding(values, source=str(path))


def save_scene_embedding(path, embedding: SceneEmbedding, comment: str | None = None) -> None:
    """Write the embedding file; floats use shortest round-trip decimals."""
    lines = [str(embedding.dim)]
    if comment:
        lines.append(f"# {comment}")
    lines.append(" ".join(repr(float(v)) for v in embedding.values))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def project_scene_tokens(
    embedding: SceneEmbedding | None,
    params: ParamStore,
    config: Config,
) -> Tensor:
    """Token conditioning message passing, shape (token_width,).

    With the scene channel disabled the token is a learned constant and
    no embedding is consulted.
    """
    if not config.scene.enabled:
        return params["token.const"]
    if embedding is None:
        raise ShapeError("scene conditioning is enabled but no embedding was given")
    w = params["token.w"]
    if w.shape[0] != embedding.dim:
        raise ShapeError(
            f"token.w expects embedding dim {w.shape[0]}, got {embedding.dim}"
        )
    flat = matmul(Tensor(embedding.values.reshape(1, -1)), w) + params["token.b"]
    return flat.reshape((w.shape[1],))
