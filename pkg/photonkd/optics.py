"""
Optical elements as unitary operators on the polarization x TM space.

Wave plates act on polarization. Cylindrical-lens mode converters and the
Dove prism act on the first-order transverse modes with the same matrices,
so every single-qubit element reduces to a retarder at an angle on one factor.
The Sagnac interferometer with a PBS and a rotated Dove prism is the only
element acting on both factors.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, List, NamedTuple, Optional, Tuple

import numpy as np

from .core import Operator, PureState, identity, tensor
from .errors import InvalidArgumentError

TINY_BRANCH = 1e-15


class ElementKind(str, Enum):
    HWP = "HWP"
    QWP = "QWP"
    MC_PI = "MC_PI"
    MC_HALFPI = "MC_HALFPI"
    DOVE = "DOVE"
    HADAMARD = "HADAMARD"
    PHASE_S = "PHASE_S"
    IDENTITY = "IDENTITY"
    SAGNAC = "SAGNAC"


class Target(str, Enum):
    POL = "POL"
    TM = "TM"
    BOTH = "BOTH"


# Elements whose target is fixed by the physics of the device.
_FIXED_TARGET = {
    ElementKind.HWP: Target.POL,
    ElementKind.QWP: Target.POL,
    ElementKind.MC_PI: Target.TM,
    ElementKind.MC_HALFPI: Target.TM,
    ElementKind.DOVE: Target.TM,
    ElementKind.SAGNAC: Target.BOTH,
}


@dataclass(frozen=True)
class Element:
    """
    One optical element in a beam line.

    ``angle`` is the physical rotation about the propagation axis in radians;
    for DOVE and SAGNAC it is the prism angle. When ``target`` is omitted it
    is inferred from the kind (POL for wave plates, TM for converters).
    """

    kind: ElementKind
    angle: float = 0.0
    target: Optional[Target] = None

    def __post_init__(self):
        kind = ElementKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not math.isfinite(self.angle):
            raise InvalidArgumentError(f"{kind.value} angle must be finite")

        required = _FIXED_TARGET.get(kind)
        target = Target(self.target) if self.target is not None else (required or Target.POL)
        if required is not None and target != required:
            raise InvalidArgumentError(f"{kind.value} must target {required.value}, got {target.value}")
        if kind in (ElementKind.HADAMARD, ElementKind.PHASE_S) and target == Target.BOTH:
            raise InvalidArgumentError(f"{kind.value} acts on a single qubit; choose POL or TM")
        object.__setattr__(self, "target", target)

    def __str__(self) -> str:
        if self.kind in (ElementKind.HADAMARD, ElementKind.PHASE_S, ElementKind.IDENTITY):
            return f"{self.kind.value}[{self.target.value}]"
        return f"{self.kind.value}({self.angle:.6g})"


@dataclass(frozen=True)
class ElementSequence:
    """Elements in propagation order: the photon meets ``elements[0]`` first."""

    elements: Tuple[Element, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not self.elements:
            raise InvalidArgumentError("An element sequence cannot be empty")

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __add__(self, other: "ElementSequence") -> "ElementSequence":
        return ElementSequence(self.elements + tuple(other))

    def __str__(self) -> str:
        return " -> ".join(str(e) for e in self.elements)


def sequence(*elements: Element) -> ElementSequence:
    return ElementSequence(tuple(elements))


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def half_wave_matrix(theta: float) -> np.ndarray:
    """pi-converter at angle theta: [[cos 2t, sin 2t], [sin 2t, -cos 2t]]."""
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=np.complex128)


def quarter_wave_matrix(theta: float) -> np.ndarray:
    """pi/2-converter with eigenvalue 1 on the fast axis at theta and i on the slow axis."""
    return _rotation(theta) @ np.diag([1.0, 1j]) @ _rotation(-theta)


_HADAMARD = half_wave_matrix(math.pi / 8)
_PHASE_S = np.diag([1.0, 1j]).astype(np.complex128)


def _local_matrix(e: Element) -> np.ndarray:
    if e.kind in (ElementKind.HWP, ElementKind.MC_PI, ElementKind.DOVE):
        return half_wave_matrix(e.angle)
    if e.kind in (ElementKind.QWP, ElementKind.MC_HALFPI):
        return quarter_wave_matrix(e.angle)
    if e.kind == ElementKind.HADAMARD:
        return _HADAMARD
    if e.kind == ElementKind.PHASE_S:
        return _PHASE_S
    return np.eye(2, dtype=np.complex128)


def element_operator(e: Element) -> Operator:
    """
    Unitary of a single element, lifted to the 4-dimensional space.

    Args:
        e: Element (any kind except SAGNAC)

    Returns:
        4x4 operator; the untouched factor gets the identity
    """
    if e.kind == ElementKind.SAGNAC:
        raise InvalidArgumentError("SAGNAC elements are compiled with sagnac_operator()")
    if e.kind == ElementKind.IDENTITY and e.target == Target.BOTH:
        return identity(4)

    local = Operator(_local_matrix(e), require_unitary=True)
    eye = identity(2)
    lifted = tensor(local, eye) if e.target == Target.POL else tensor(eye, local)
    return Operator(lifted.matrix, require_unitary=True)


def tm_rotation(dove_angle: float) -> np.ndarray:
    """
    TM unitary applied to the |H> branch of the Sagnac gate.

    A prism turned by delta rotates the transverse pattern by 2 delta per
    pass, so U(pi/8) = [[1, 1], [-1, 1]] / sqrt(2).
    """
    c, s = math.cos(2 * dove_angle), math.sin(2 * dove_angle)
    return np.array([[c, s], [-s, c]], dtype=np.complex128)


def sagnac_operator(dove_angle: float) -> Operator:
    """
    Polarization-controlled TM rotation of the PBS Sagnac interferometer.

    Returns:
        |H><H| (x) U(delta) + |V><V| (x) U(delta)^dagger
    """
    if not math.isfinite(dove_angle):
        raise InvalidArgumentError("Dove prism angle must be finite")
    u = tm_rotation(dove_angle)
    m = np.zeros((4, 4), dtype=np.complex128)
    m[:2, :2] = u
    m[2:, 2:] = u.conj().T
    return Operator(m, require_unitary=True)


def compile_sequence(seq: ElementSequence) -> Operator:
    """
    Compile a beam line into one operator.

    The first element the photon meets is applied first, so the result is
    E_n ... E_2 E_1.
    """
    if not isinstance(seq, ElementSequence):
        seq = ElementSequence(tuple(seq))
    total = np.eye(4, dtype=np.complex128)
    for e in seq:
        op = sagnac_operator(e.angle) if e.kind == ElementKind.SAGNAC else element_operator(e)
        total = op.matrix @ total
    return Operator(total, require_unitary=True)


# ``compile`` shadows a builtin; both names are exported.
compile = compile_sequence  # noqa: A001


def inverse_element(e: Element) -> List[Element]:
    """
    Elements realizing the adjoint of ``e`` up to a global phase.

    Retarders at pi are involutions; a pi/2 retarder is undone by the same
    retarder turned a further pi/2; S^dagger is S followed by a pi retarder
    at zero on the same qubit; the Sagnac gate is undone by the opposite
    prism angle.
    """
    if e.kind in (ElementKind.QWP, ElementKind.MC_HALFPI):
        return [Element(e.kind, e.angle + math.pi / 2, e.target)]
    if e.kind == ElementKind.PHASE_S:
        flip = ElementKind.HWP if e.target == Target.POL else ElementKind.MC_PI
        return [Element(ElementKind.PHASE_S, 0.0, e.target), Element(flip, 0.0)]
    if e.kind == ElementKind.SAGNAC:
        return [Element(ElementKind.SAGNAC, -e.angle)]
    return [e]


def inverse(seq: ElementSequence) -> ElementSequence:
    """Reversed beam line with every element replaced by its adjoint setting."""
    elements: List[Element] = []
    for e in reversed(tuple(seq)):
        elements.extend(inverse_element(e))
    return ElementSequence(tuple(elements))


def upr(alpha: float, beta: float, gamma: float) -> ElementSequence:
    """Universal Polarization Rotator QWP(alpha) HWP(beta) QWP(gamma), in propagation order."""
    return sequence(
        Element(ElementKind.QWP, alpha),
        Element(ElementKind.HWP, beta),
        Element(ElementKind.QWP, gamma),
    )


def utr(alpha: float, beta: float, gamma: float) -> ElementSequence:
    """Universal Transverse-modes Rotator: three cylindrical-lens converter pairs."""
    return sequence(
        Element(ElementKind.MC_HALFPI, alpha),
        Element(ElementKind.MC_PI, beta),
        Element(ElementKind.MC_HALFPI, gamma),
    )


class PbsSplit(NamedTuple):
    branch_h: Optional[PureState]
    p_h: float
    branch_v: Optional[PureState]
    p_v: float


def pbs_split(psi: PureState) -> PbsSplit:
    """
    Polarizing beam splitter: project on the |H> and |V> polarization subspaces.

    A branch with probability below 1e-15 is reported as None and its
    probability as 0.
    """
    if psi.dim != 4:
        raise InvalidArgumentError("pbs_split expects a 4-dimensional state")
    amp = psi.amp
    p_h = float(np.vdot(amp[:2], amp[:2]).real)
    p_v = float(np.vdot(amp[2:], amp[2:]).real)
    total = p_h + p_v
    p_h, p_v = p_h / total, p_v / total

    branch_h: Optional[PureState] = None
    branch_v: Optional[PureState] = None
    if p_h < TINY_BRANCH:
        p_h, p_v = 0.0, 1.0
    else:
        branch_h = PureState(np.concatenate([amp[:2], np.zeros(2)]), renormalize=True)
    if p_v < TINY_BRANCH:
        p_h, p_v = 1.0, 0.0
    else:
        branch_v = PureState(np.concatenate([np.zeros(2), amp[2:]]), renormalize=True)
    return PbsSplit(branch_h, p_h, branch_v, p_v)
