"""Exception hierarchy shared by every toolkit module."""
from typing import Optional


class ToolkitError(Exception):
    """Base class for all errors raised by the toolkit."""


class ConfigError(ToolkitError, ValueError):
    pass


class LengthMismatch(ToolkitError, ValueError):
    pass


class BadWindow(ToolkitError, ValueError):
    pass


class NotPowerOfTwo(ToolkitError, ValueError):
    pass


class TooManyLevels(ToolkitError, ValueError):
    pass


class ShapeMismatch(ToolkitError, ValueError):
    pass


class EmptyScales(ToolkitError, ValueError):
    pass


class TooSmall(ToolkitError, ValueError):
    pass


class ZeroVariance(ToolkitError, ValueError):
    pass


class TooShort(ToolkitError, ValueError):
    pass


class ZeroEnergy(ToolkitError, ValueError):
    pass


class EmptyInput(ToolkitError, ValueError):
    pass


class LabelOutOfRange(ToolkitError, ValueError):
    pass


class SingleClass(ToolkitError, ValueError):
    pass


class LifeTooShort(ToolkitError, ValueError):
    pass


class DegenerateData(ToolkitError, ValueError):
    pass


class NegativeRul(ToolkitError, ValueError):
    pass


class DivergenceDetected(ToolkitError, ArithmeticError):
    """Training loss became NaN or infinite."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"Loss diverged to {loss} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


class MalformedRow(ToolkitError, ValueError):
    def __init__(self, line_no: int, detail: str = ""):
        msg = f"Malformed row at line {line_no}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.line_no = line_no


class NonConsecutiveCycles(ToolkitError, ValueError):
    def __init__(self, unit_id: int, detail: Optional[str] = None):
        super().__init__(f"Non-consecutive cycles in unit {unit_id}" + (f": {detail}" if detail else ""))
        self.unit_id = unit_id


class BadMagic(ToolkitError, ValueError):
    pass


class TruncatedFile(ToolkitError, ValueError):
    pass
