"""
Sampled transverse profiles of Hermite-Gaussian and Laguerre-Gaussian modes.

Grids are indexed [y, x] on cell-centred coordinates symmetric about zero,
so the mirror image x -> -x is an exact index flip. Lengths are in units of
the beam waist w.
"""
import math
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np
from scipy.special import eval_hermite

from .core import KET_ANTI_D, KET_D, KET_H, KET_L, KET_R, KET_V, PureState
from .errors import InvalidArgumentError

DEFAULT_POINTS = 512
DEFAULT_EXTENT = 6.0
NORM_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class ModeProfile:
    """
    A normalized transverse amplitude on an N x N grid.

    ``extent`` is the half-width of the grid in waist units and ``waist`` the
    physical 1/e amplitude radius of the fundamental mode.
    """

    grid: np.ndarray
    extent: float
    waist: float = 1.0

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.complex128)
        if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
            raise InvalidArgumentError(f"Profile grid must be square, got shape {grid.shape}")
        if self.extent <= 0 or self.waist <= 0:
            raise InvalidArgumentError("Profile extent and waist must be positive")
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        if abs(self.norm() - 1.0) > NORM_TOLERANCE:
            raise InvalidArgumentError(f"Profile is not normalized (norm {self.norm():.8f})")

    @property
    def n_points(self) -> int:
        return int(self.grid.shape[0])

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / self.n_points

    @property
    def cell_area(self) -> float:
        return self.spacing**2

    def norm(self) -> float:
        return float(np.sum(np.abs(self.grid) ** 2) * self.cell_area)


def grid_coordinates(n_points: int, extent: float) -> np.ndarray:
    h = 2.0 * extent / n_points
    return -extent + (np.arange(n_points) + 0.5) * h


def _normalized(field: np.ndarray, extent: float, waist: float) -> ModeProfile:
    h = 2.0 * extent / field.shape[0]
    norm = math.sqrt(float(np.sum(np.abs(field) ** 2)) * h * h)
    if norm == 0.0:
        raise InvalidArgumentError("Mode amplitude vanishes on the grid")
    return ModeProfile(field / norm, extent, waist)


def hermite_gaussian(
    m: int, n: int, n_points: int = DEFAULT_POINTS, extent: float = DEFAULT_EXTENT, waist: float = 1.0
) -> ModeProfile:
    """
    TEM_mn profile H_m(sqrt2 x) H_n(sqrt2 y) exp(-(x^2 + y^2)).

    m counts nodes along x: TEM10 is odd under x -> -x, TEM01 is even.
    """
    if m < 0 or n < 0:
        raise InvalidArgumentError("Mode indices must be non-negative")
    if n_points < 2:
        raise InvalidArgumentError("A profile needs at least 2 points per axis")
    xs = grid_coordinates(n_points, extent)
    fx = eval_hermite(m, math.sqrt(2.0) * xs) * np.exp(-(xs**2))
    fy = eval_hermite(n, math.sqrt(2.0) * xs) * np.exp(-(xs**2))
    return _normalized(np.outer(fy, fx).astype(np.complex128), extent, waist)


def tm_qubit_profile(
    state: PureState, n_points: int = DEFAULT_POINTS, extent: float = DEFAULT_EXTENT, waist: float = 1.0
) -> ModeProfile:
    """
    Transverse profile of a TM qubit state a|TEM-H> + b|TEM-V>.

    TEM-H is TEM01 and TEM-V is TEM10; (1, i)/sqrt2 gives the helical
    Laguerre-Gauss mode.
    """
    if state.dim != 2:
        raise InvalidArgumentError("tm_qubit_profile expects a single-qubit state")
    tem_h = hermite_gaussian(0, 1, n_points, extent, waist).grid
    tem_v = hermite_gaussian(1, 0, n_points, extent, waist).grid
    a, b = state.amp
    return _normalized(a * tem_h + b * tem_v, extent, waist)


ProfileFactory = Callable[[int, float], ModeProfile]

MODE_FACTORIES: Dict[str, ProfileFactory] = {
    "tem00": lambda n, e: hermite_gaussian(0, 0, n, e),
    "tem01": lambda n, e: hermite_gaussian(0, 1, n, e),
    "tem10": lambda n, e: hermite_gaussian(1, 0, n, e),
    "temh": lambda n, e: tm_qubit_profile(KET_H, n, e),
    "temv": lambda n, e: tm_qubit_profile(KET_V, n, e),
    "temd": lambda n, e: tm_qubit_profile(KET_D, n, e),
    "tema": lambda n, e: tm_qubit_profile(KET_ANTI_D, n, e),
    "lgr": lambda n, e: tm_qubit_profile(KET_R, n, e),
    "lgl": lambda n, e: tm_qubit_profile(KET_L, n, e),
}

MODE_NAMES: Tuple[str, ...] = tuple(MODE_FACTORIES)


def build_profile(name: str, n_points: int = DEFAULT_POINTS, extent: float = DEFAULT_EXTENT) -> ModeProfile:
    """Profile by name (see MODE_NAMES)."""
    try:
        factory = MODE_FACTORIES[name.lower()]
    except KeyError:
        raise InvalidArgumentError(f"Unknown mode '{name}'; choose from {', '.join(MODE_NAMES)}") from None
    return factory(n_points, extent)
