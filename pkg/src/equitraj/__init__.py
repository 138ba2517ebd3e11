"""equitraj: equivariant multi-agent trajectory forecasting."""

from .config import Config, apply_overrides
from .evaluation import ade, evaluate, fde
from .model import (
    PredictionSet,
    forward_deterministic,
    forward_multi,
    init_params,
)
from .training import fit, loss_deterministic, loss_multi

__version__ = "0.1.0"

__all__ = [
    "Config",
    "PredictionSet",
    "ade",
    "apply_overrides",
    "evaluate",
    "fde",
    "fit",
    "forward_deterministic",
    "forward_multi",
    "init_params",
    "loss_deterministic",
    "loss_multi",
    "__version__",
]
