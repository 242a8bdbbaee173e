"""Exception types and the warning record used across the package."""

from dataclasses import dataclass


class CQEDError(Exception):
    """Base class for all library errors."""


class DimensionError(CQEDError):
    pass


class CompositionError(CQEDError):
    pass


class StateError(CQEDError):
    pass


class ConvergenceError(CQEDError):
    pass


class StraddlingRegimeError(CQEDError):
    """Detuning lies between 0 and EC, where the dispersive expansion breaks down."""


class ResonanceError(CQEDError):
    pass


class DegeneracyError(CQEDError):
    pass


class StiffnessError(CQEDError):
    pass


class LeakageError(CQEDError):
    pass


class ConfigError(CQEDError):
    pass


class WeakDriveError(CQEDError):
    pass


class CQEDWarning(UserWarning):
    pass


@dataclass(frozen=True)
class WarningRecord:
    kind: str
    message: str
    value: float = float("nan")

    def as_dict(self):
        return {"kind": self.kind, "message": self.message, "value": self.value}
