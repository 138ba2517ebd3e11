"""Exception types raised across the package."""


class EquitrajError(Exception):
    """Base class for all errors raised by equitraj."""


class ShapeError(EquitrajError):
    """Tensor or layer width mismatch; message names the offending site."""


class InputError(EquitrajError):
    """Caller supplied an argument that violates a precondition."""


class DataError(EquitrajError):
    """A data file violates its format contract.

    ``line`` is 1-based, ``byte_offset`` is 0-based; either may be None when
    not applicable.
    """

    def __init__(self, message, path=None, line=None, byte_offset=None):
        parts = []
        if path is not None:
            parts.append(str(path))
        if line is not None:
            parts.append(f"line {line}")
        if byte_offset is not None:
            parts.append(f"byte {byte_offset}")
        prefix = ": ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.path = path
        self.line = line
        self.byte_offset = byte_offset


class ParseError(DataError):
    """A field in a data file could not be parsed."""


class ProbeError(EquitrajError):
    """A finite-difference probe produced a non-finite value."""


class MissingGradientError(EquitrajError):
    """Optimizer step requested for a parameter with no gradient."""

    def __init__(self, name):
        super().__init__(f"parameter {name!r} has no gradient")
        self.name = name


class TrainingDiverged(EquitrajError):
    """Training loss became non-finite; carries a diagnostic snapshot."""

    def __init__(self, epoch, batch, param_norms):
        self.epoch = epoch
        self.batch = batch
        self.param_norms = param_norms
        worst = sorted(param_norms.items(), key=lambda kv: -kv[1])[:5]
        detail = ", ".join(f"{k}={v:.3e}" for k, v in worst)
        super().__init__(
            f"non-finite loss at epoch {epoch}, batch {batch}; "
            f"largest parameter norms: {detail}"
        )
