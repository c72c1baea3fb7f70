"""
photonkd: BB84 key distribution with photons carrying a polarization qubit and
a transverse-mode qubit, from optical elements up to distilled keys.
"""
from .core import Operator, PureState, apply, overlap, random_stream, tensor
from .errors import (
    ConfigError,
    ConstructionError,
    ContractViolationError,
    DataError,
    InvalidArgumentError,
    PhotonkdError,
)
from .mub import BasisId, build_basis_table, default_table, verify_unbiasedness
from .mzem import MzemSettings
from .protocol import ChannelConfig, EveConfig, ProtocolConfig, run

__version__ = "0.1.0"

__all__ = [
    "BasisId",
    "ChannelConfig",
    "ConfigError",
    "ConstructionError",
    "ContractViolationError",
    "DataError",
    "EveConfig",
    "InvalidArgumentError",
    "MzemSettings",
    "Operator",
    "PhotonkdError",
    "ProtocolConfig",
    "PureState",
    "apply",
    "build_basis_table",
    "default_table",
    "overlap",
    "random_stream",
    "run",
    "tensor",
    "verify_unbiasedness",
]
