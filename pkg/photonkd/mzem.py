"""
Mach-Zehnder interferometer with an extra mirror (MZEM).

The extra reflection leaves modes that are even under x -> -x unchanged and
gives odd modes a pi phase; polarization picks up the same kind of sign, so
the device sorts photons by the eigenvalue of Z (x) Z. Two PBSs behind its
exits and four detectors complete a canonical-basis measurement.

Imperfections are modelled at the probability level: a fringe contrast V
per canonical input state and an unbalanced splitting ratio. The physical
origin of V, the overlap of a laterally displaced beam with its own mirror
image, is computed separately by ``mirror_overlap``.
"""
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from .core import Operator, PureState, RandomStream
from .errors import InvalidArgumentError
from .modes import ModeProfile, build_profile
from .optics import TINY_BRANCH, pbs_split

PARITY = np.array([1.0, -1.0, -1.0, 1.0])
CANONICAL_LABELS = ("|H,TEM-H>", "|H,TEM-V>", "|V,TEM-H>", "|V,TEM-V>")

PortVisibility = Tuple[Tuple[float, float], ...]


@dataclass(frozen=True)
class MzemSettings:
    """
    Interferometer settings.

    Args:
        phi: Relative arm phase in radians
        visibility: Global fringe contrast V in [0, 1]
        bs_ratio: Intensity reflectivity of the beamsplitters, in (0, 1)
        port_a_even: Port A collects even-parity inputs at phi = 0
        port_visibility: Optional measured (port A, port B) contrast for each
                         canonical input state; when set it replaces the
                         global value, each state using the mean of its pair
    """

    phi: float = 0.0
    visibility: float = 1.0
    bs_ratio: float = 0.5
    port_a_even: bool = True
    port_visibility: Optional[PortVisibility] = None

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise InvalidArgumentError("MZEM phase must be finite")
        if not 0.0 <= self.visibility <= 1.0:
            raise InvalidArgumentError(f"Visibility must be in [0, 1], got {self.visibility}")
        if not 0.0 < self.bs_ratio < 1.0:
            raise InvalidArgumentError(f"Beamsplitter ratio must be in (0, 1), got {self.bs_ratio}")
        if self.port_visibility is not None:
            pairs = tuple((float(a), float(b)) for a, b in self.port_visibility)
            if len(pairs) != 4:
                raise InvalidArgumentError("port_visibility needs one (A, B) pair per canonical state")
            if any(not 0.0 <= v <= 1.0 for pair in pairs for v in pair):
                raise InvalidArgumentError("Port visibilities must be in [0, 1]")
            object.__setattr__(self, "port_visibility", pairs)

    def state_visibility(self, index: int) -> float:
        """Fringe contrast seen by canonical state ``index``."""
        if self.port_visibility is None:
            return self.visibility
        a, b = self.port_visibility[index]
        return 0.5 * (a + b)


class DetectionEvent(NamedTuple):
    port: str
    pol: str
    detector_index: int


class PortProbabilities(NamedTuple):
    p_a: float
    p_b: float
    state_a: Optional[PureState]
    state_b: Optional[PureState]


def parity_operator() -> Operator:
    """Z (x) Z in the fixed |pol, TM> ordering."""
    return Operator(np.diag(PARITY).astype(np.complex128), require_unitary=True)


def detector_index(port: str, pol: str) -> int:
    return 2 * (port == "B") + (pol == "V")


def _port_a_given_parity(parity: float, visibility: float, s: MzemSettings) -> float:
    if not s.port_a_even:
        parity = -parity
    fringe = visibility * parity * math.cos(s.phi)
    a = s.bs_ratio * (1.0 + fringe)
    b = (1.0 - s.bs_ratio) * (1.0 - fringe)
    return a / (a + b)


def canonical_port_a(s: MzemSettings) -> np.ndarray:
    """P(port A | canonical state k) for k = 0..3."""
    return np.array([_port_a_given_parity(PARITY[k], s.state_visibility(k), s) for k in range(4)])


def port_probabilities(psi: PureState, s: MzemSettings) -> PortProbabilities:
    """
    Exit-port probabilities and the conditional state behind each port.

    Each canonical component of ``psi`` interferes with its mirror image with
    contrast V, so its amplitude is split between the ports according to
    its parity eigenvalue. Components keep their phases in the conditional
    states.
    """
    if psi.dim != 4:
        raise InvalidArgumentError("port_probabilities expects a 4-dimensional state")
    weights = psi.probabilities()
    to_a = canonical_port_a(s)
    p_a = float(np.dot(weights, to_a))
    p_b = float(np.dot(weights, 1.0 - to_a))

    state_a = PureState(psi.amp * np.sqrt(to_a), renormalize=True) if p_a >= TINY_BRANCH else None
    state_b = PureState(psi.amp * np.sqrt(1.0 - to_a), renormalize=True) if p_b >= TINY_BRANCH else None
    return PortProbabilities(p_a, p_b, state_a, state_b)


def detect(psi: PureState, s: MzemSettings, rng: RandomStream) -> DetectionEvent:
    """
    Route a photon through the MZEM and the PBS behind the chosen exit.

    Returns:
        The detector that fires: index 2*(port B) + (pol V)
    """
    ports = port_probabilities(psi, s)
    if ports.state_b is None or (ports.state_a is not None and rng.random() < ports.p_a):
        port, branch = "A", ports.state_a
    else:
        port, branch = "B", ports.state_b

    split = pbs_split(branch)
    if split.branch_v is None or (split.branch_h is not None and rng.random() < split.p_h):
        pol = "H"
    else:
        pol = "V"
    return DetectionEvent(port, pol, detector_index(port, pol))


def detection_matrix(s: MzemSettings) -> np.ndarray:
    """
    P(detector d | canonical state k) as a 4x4 array indexed [k, d].

    Polarization is resolved perfectly, so only the port can be wrong.
    """
    to_a = canonical_port_a(s)
    matrix = np.zeros((4, 4))
    for k in range(4):
        pol = "V" if k >> 1 else "H"
        matrix[k, detector_index("A", pol)] = to_a[k]
        matrix[k, detector_index("B", pol)] = 1.0 - to_a[k]
    return matrix


def detector_decoding(s: MzemSettings) -> Tuple[int, ...]:
    """Canonical state each detector reports: the most likely source of a click."""
    matrix = detection_matrix(s)
    return tuple(int(k) for k in np.argmax(matrix, axis=0))


def wrong_port_probabilities(s: MzemSettings) -> np.ndarray:
    """Per canonical state, the probability of leaving through the unintended exit."""
    matrix = detection_matrix(s)
    decoding = detector_decoding(s)
    return np.array([sum(matrix[k, d] for d in range(4) if decoding[d] != k) for k in range(4)])


def mirror_overlap(m: ModeProfile, dx: float) -> complex:
    """
    Overlap of a laterally displaced beam with its mirror image about the y axis.

    Computes the integral of u*(x - dx, y) u(-x - dx, y) over the plane. The
    shift is applied in Fourier space, which is exact for profiles that vanish
    at the grid edge.

    Args:
        m: Sampled profile
        dx: Lateral displacement in waist units

    Returns:
        Complex overlap; its magnitude is the effective visibility V(dx)
    """
    if not math.isfinite(dx):
        raise InvalidArgumentError("Displacement must be finite")
    required = 4.0 + 2.0 * abs(dx)
    if m.extent < required:
        raise InvalidArgumentError(f"Grid half-width {m.extent}w is below the required {required}w for dx={dx}")

    u = m.grid
    mirrored = u[:, ::-1]
    k = 2.0 * np.pi * np.fft.fftfreq(m.n_points, d=m.spacing)
    shifted = np.fft.ifft(np.fft.fft(mirrored, axis=1) * np.exp(1j * k * 2.0 * dx)[np.newaxis, :], axis=1)
    return complex(np.sum(np.conj(u) * shifted) * m.cell_area)


def required_extent(max_abs_dx: float, minimum: float = 6.0) -> float:
    return max(minimum, 4.0 + 2.0 * abs(max_abs_dx))


def scan_visibility(mode: str, start: float, stop: float, steps: int, n_points: int = 512) -> List[Tuple[float, float]]:
    """
    Effective visibility |mirror_overlap| over evenly spaced displacements.

    Returns:
        (dx, V) rows, ``steps`` of them from ``start`` to ``stop`` inclusive
    """
    if steps < 1:
        raise InvalidArgumentError("A scan needs at least one step")
    displacements = np.linspace(start, stop, steps) if steps > 1 else np.array([start])
    profile = build_profile(mode, n_points, required_extent(float(np.max(np.abs(displacements)))))
    return [(float(dx), abs(mirror_overlap(profile, float(dx)))) for dx in displacements]


def path_difference(dd: float) -> float:
    """Optical path change from moving the double mirror by dd along its axis."""
    if not math.isfinite(dd):
        raise InvalidArgumentError("Displacement must be finite")
    return math.sqrt(2.0) * dd
