from typing import Iterable, List, Optional


class PhotonkdError(Exception):
    """Base class for every error raised by photonkd."""


class InvalidArgumentError(PhotonkdError, ValueError):
    """An argument is out of range or has the wrong shape."""


class ContractViolationError(PhotonkdError):
    """A value broke an invariant the callee relies on (norm, unitarity, orthonormality)."""


class ConstructionError(PhotonkdError):
    """A built object failed its own consistency checks."""


class ConfigError(PhotonkdError):
    """
    A run configuration failed schema validation.

    Every offending key contributes one line to ``diagnostics``.
    """

    def __init__(self, message: str, diagnostics: Optional[Iterable[str]] = None):
        self.diagnostics: List[str] = list(diagnostics or [])
        if self.diagnostics:
            message = message + "\n" + "\n".join(f"  - {d}" for d in self.diagnostics)
        super().__init__(message)


class DataError(PhotonkdError):
    """Key material is missing, malformed or inconsistent."""
