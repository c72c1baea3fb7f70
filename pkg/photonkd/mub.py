"""
The five mutually unbiased bases of the polarization x TM space.

B1 is the canonical basis, B2 and B3 are the remaining product bases and B4,
B5 are entangled. Each basis is the simultaneous eigenbasis of a complete set
of commuting Pauli products; Alice reaches any of its states from |D, TEM-D>
with a basis-selection stage followed by a state-selection stage.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from .core import (
    KET_D,
    ORTHONORMAL_TOLERANCE,
    Operator,
    PureState,
    apply,
    check_orthonormal,
    fidelity,
    ket,
    pauli,
    product_state,
    same_up_to_phase,
    superpose,
)
from .errors import ConstructionError, ContractViolationError, InvalidArgumentError
from .optics import Element, ElementKind, ElementSequence, Target, compile_sequence, inverse, sequence

logger = logging.getLogger("photonkd.mub")

SAGNAC_ON = math.pi / 8
UNBIASED_PROBABILITY = 0.25
EIGEN_TOLERANCE = 1e-10


class BasisId(str, Enum):
    B1 = "B1"
    B2 = "B2"
    B3 = "B3"
    B4 = "B4"
    B5 = "B5"

    @property
    def canonical(self) -> bool:
        return self is BasisId.B1

    @property
    def entangled(self) -> bool:
        return self in (BasisId.B4, BasisId.B5)

    @classmethod
    def parse(cls, value) -> "BasisId":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise InvalidArgumentError(f"Unknown basis '{value}' (expected B1..B5)") from None


ALL_BASES: Tuple[BasisId, ...] = tuple(BasisId)

CSCO_NAMES: Dict[BasisId, Tuple[str, str, str]] = {
    BasisId.B1: ("ZZ", "ZI", "IZ"),
    BasisId.B2: ("XX", "XI", "IX"),
    BasisId.B3: ("YY", "YI", "IY"),
    BasisId.B4: ("YX", "XZ", "ZY"),
    BasisId.B5: ("XY", "YZ", "ZX"),
}

_h = 1.0 / math.sqrt(2.0)

# State lists in preparation order; the entangled rows are authoritative and
# the commuting-operator structure is checked against them afterwards.
_STATE_LISTS: Dict[BasisId, Tuple[Tuple[Tuple[complex, str, str], ...], ...]] = {
    BasisId.B1: (((1, "H", "H"),), ((1, "H", "V"),), ((1, "V", "H"),), ((1, "V", "V"),)),
    BasisId.B2: (((1, "D", "D"),), ((1, "D", "d"),), ((1, "d", "D"),), ((1, "d", "d"),)),
    BasisId.B3: (((1, "R", "R"),), ((1, "R", "L"),), ((1, "L", "R"),), ((1, "L", "L"),)),
    BasisId.B4: (
        ((_h, "H", "R"), (_h, "V", "L")),
        ((_h, "H", "L"), (_h, "V", "R")),
        ((_h, "H", "R"), (-_h, "V", "L")),
        ((_h, "H", "L"), (-_h, "V", "R")),
    ),
    BasisId.B5: (
        ((_h, "R", "H"), (_h, "L", "V")),
        ((_h, "R", "H"), (-_h, "L", "V")),
        ((_h, "L", "H"), (_h, "R", "V")),
        ((_h, "L", "H"), (-_h, "R", "V")),
    ),
}


def symbol_label(index: int) -> str:
    """Two-bit key label of a state index: pol-stage bit first, TM-stage bit second."""
    return format(index, "02b")


def state_name(b: BasisId, index: int) -> str:
    """Human-readable ket for a table state, e.g. ``(|H,TEM-R> + |V,TEM-L>)/sqrt2``."""
    terms = _STATE_LISTS[b][index]
    kets = [f"|{p},TEM-{t}>" for _, p, t in terms]
    if len(kets) == 1:
        return kets[0]
    sign = "+" if terms[1][0] > 0 else "-"
    return f"({kets[0]} {sign} {kets[1]})/sqrt2"


@dataclass(frozen=True)
class BasisTable:
    """Four labelled states and the commuting triple for every basis."""

    states: Dict[BasisId, Tuple[PureState, ...]]
    csco: Dict[BasisId, Tuple[Operator, Operator, Operator]]

    def basis(self, b: BasisId) -> Tuple[PureState, ...]:
        return self.states[BasisId(b)]

    def state(self, b: BasisId, index: int) -> PureState:
        return self.states[BasisId(b)][index]

    def label(self, b: BasisId, index: int) -> str:
        return symbol_label(index)

    def with_basis(self, b: BasisId, states: Tuple[PureState, ...]) -> "BasisTable":
        """Copy of the table with one basis replaced; no validation is done."""
        replaced = dict(self.states)
        replaced[BasisId(b)] = tuple(states)
        return BasisTable(replaced, dict(self.csco))


def _check_eigenvector(op: Operator, psi: PureState) -> float:
    image = op.matrix @ psi.amp
    eigenvalue = np.vdot(psi.amp, image)
    if np.max(np.abs(image - eigenvalue * psi.amp)) > EIGEN_TOLERANCE:
        raise ConstructionError("State is not an eigenvector of its commuting set")
    return float(eigenvalue.real)


def build_basis_table() -> BasisTable:
    """
    Build and self-check the table of five mutually unbiased bases.

    Raises:
        ConstructionError: a basis is not orthonormal, its operators do not
                           commute, or a state is not a joint eigenvector
    """
    states: Dict[BasisId, Tuple[PureState, ...]] = {}
    csco: Dict[BasisId, Tuple[Operator, Operator, Operator]] = {}

    for b in ALL_BASES:
        basis = tuple(superpose((c, ket(p, t)) for c, p, t in terms) for terms in _STATE_LISTS[b])
        operators = tuple(pauli(name) for name in CSCO_NAMES[b])

        try:
            check_orthonormal(basis)
        except ContractViolationError as e:
            raise ConstructionError(f"{b.value}: {e}") from e

        for a_op, b_op in itertools.combinations(operators, 2):
            commutator = a_op.matrix @ b_op.matrix - b_op.matrix @ a_op.matrix
            if np.max(np.abs(commutator)) > EIGEN_TOLERANCE:
                raise ConstructionError(f"{b.value}: commuting set does not commute")

        signatures = set()
        for psi in basis:
            signatures.add(tuple(round(_check_eigenvector(op, psi)) for op in operators))
        if len(signatures) != 4:
            raise ConstructionError(f"{b.value}: eigenvalue triples do not separate the states")

        states[b] = basis
        csco[b] = operators  # type: ignore[assignment]

    table = BasisTable(states, csco)
    report = verify_unbiasedness(table)
    if report.max_deviation > ORTHONORMAL_TOLERANCE:
        raise ConstructionError(f"Bases are not mutually unbiased (deviation {report.max_deviation:.3e})")
    logger.debug("Built basis table, unbiasedness deviation %.3e", report.max_deviation)
    return table


@lru_cache(maxsize=None)
def default_table() -> BasisTable:
    """Process-wide shared table; built once and read-only afterwards."""
    return build_basis_table()


class StateRef(NamedTuple):
    basis: BasisId
    index: int

    def __str__(self) -> str:
        return f"{self.basis.value}[{self.index}]"


class UnbiasednessReport(NamedTuple):
    max_deviation: float
    worst_pair: Optional[Tuple[StateRef, StateRef]]
    worst_probability: float
    n_pairs: int


def verify_unbiasedness(t: BasisTable) -> UnbiasednessReport:
    """
    Largest deviation of a cross-basis probability from 1/4.

    Every unordered pair of states taken from two different bases is checked.
    """
    worst = 0.0
    worst_pair: Optional[Tuple[StateRef, StateRef]] = None
    worst_probability = UNBIASED_PROBABILITY
    n_pairs = 0
    for b1, b2 in itertools.combinations(t.states.keys(), 2):
        for i, psi in enumerate(t.states[b1]):
            for j, phi in enumerate(t.states[b2]):
                probability = fidelity(psi, phi)
                deviation = abs(probability - UNBIASED_PROBABILITY)
                n_pairs += 1
                if worst_pair is None or deviation > worst:
                    worst = deviation
                    worst_pair = (StateRef(b1, i), StateRef(b2, j))
                    worst_probability = probability
    return UnbiasednessReport(worst, worst_pair, worst_probability, n_pairs)


INPUT_STATE = product_state(KET_D, KET_D)

_BASIS_STAGES: Dict[BasisId, ElementSequence] = {
    BasisId.B1: sequence(
        Element(ElementKind.HADAMARD, target=Target.POL), Element(ElementKind.HADAMARD, target=Target.TM)
    ),
    BasisId.B2: sequence(Element(ElementKind.IDENTITY, target=Target.BOTH)),
    BasisId.B3: sequence(
        Element(ElementKind.PHASE_S, target=Target.POL), Element(ElementKind.PHASE_S, target=Target.TM)
    ),
    BasisId.B4: sequence(
        Element(ElementKind.SAGNAC, SAGNAC_ON),
        Element(ElementKind.HADAMARD, target=Target.TM),
        Element(ElementKind.PHASE_S, target=Target.TM),
    ),
    BasisId.B5: sequence(
        Element(ElementKind.SAGNAC, SAGNAC_ON),
        Element(ElementKind.PHASE_S, target=Target.POL),
        Element(ElementKind.HADAMARD, target=Target.TM),
    ),
}

# Plate angle of the state-selection stage; the canonical row uses pi/4
# (bit flips) while the others use 0 (phase flips).
_STATE_ANGLE = {b: (math.pi / 4 if b is BasisId.B1 else 0.0) for b in ALL_BASES}

# HWP and pi-converter at pi/8 act as Hadamards and map B2 onto B1.
B2_TO_B1 = sequence(Element(ElementKind.HWP, math.pi / 8), Element(ElementKind.MC_PI, math.pi / 8))


@dataclass(frozen=True)
class PrepCircuit:
    """Alice's two-stage preparation of one table state from |D, TEM-D>."""

    basis: BasisId
    state_index: int
    basis_stage: ElementSequence
    state_stage: ElementSequence
    input_state: PureState = INPUT_STATE

    def operator(self) -> Operator:
        return compile_sequence(self.basis_stage + self.state_stage)

    def prepare(self) -> PureState:
        return apply(self.operator(), self.input_state)


def basis_stage(b: BasisId) -> ElementSequence:
    return _BASIS_STAGES[BasisId(b)]


def state_stage(b: BasisId, state_idx: int) -> ElementSequence:
    """
    State-selection plates for a 2-bit symbol.

    The pol bit switches a HWP in, the TM bit switches a pi-converter in.
    """
    b = BasisId(b)
    if not 0 <= state_idx < 4:
        raise InvalidArgumentError(f"State index must be 0..3, got {state_idx}")
    angle = _STATE_ANGLE[b]
    pol_bit, tm_bit = state_idx >> 1, state_idx & 1
    elements: List[Element] = []
    if pol_bit:
        elements.append(Element(ElementKind.HWP, angle))
    if tm_bit:
        elements.append(Element(ElementKind.MC_PI, angle))
    if not elements:
        elements.append(Element(ElementKind.IDENTITY, target=Target.BOTH))
    return ElementSequence(tuple(elements))


def prep_circuit(b: BasisId, state_idx: int) -> PrepCircuit:
    b = BasisId(b)
    return PrepCircuit(b, state_idx, basis_stage(b), state_stage(b, state_idx))


def measurement_circuit(b: BasisId) -> ElementSequence:
    """Bob's basis mapping: undo Alice's basis stage, then rotate B2 onto B1."""
    return inverse(basis_stage(BasisId(b))) + B2_TO_B1


@lru_cache(maxsize=None)
def measurement_operator(b: BasisId) -> Operator:
    return compile_sequence(measurement_circuit(BasisId(b)))


def canonical_index(psi: PureState) -> int:
    """Index of the canonical state equal to ``psi`` up to phase."""
    probs = psi.probabilities()
    index = int(np.argmax(probs))
    if probs[index] < 1.0 - EIGEN_TOLERANCE:
        raise ContractViolationError("State is not a canonical basis state")
    return index


@lru_cache(maxsize=None)
def readout_map(b: BasisId) -> Tuple[int, ...]:
    """
    Canonical state reached by each symbol of basis ``b`` after Bob's circuit.

    Identity for the product bases. For the entangled bases the pol plate of
    the state stage picks up the TM bit when pulled back through the Sagnac
    gate, giving (a, b) -> (a xor b, b).
    """
    b = BasisId(b)
    op = measurement_operator(b)
    return tuple(canonical_index(apply(op, prep_circuit(b, i).prepare())) for i in range(4))


@lru_cache(maxsize=None)
def symbol_decoder(b: BasisId) -> Tuple[int, ...]:
    """Inverse of readout_map: canonical outcome -> key symbol."""
    forward = readout_map(BasisId(b))
    decoder = [0] * 4
    for symbol, canonical in enumerate(forward):
        decoder[canonical] = symbol
    return tuple(decoder)


def csco(b: BasisId, table: Optional[BasisTable] = None) -> Tuple[Operator, Operator, Operator]:
    return (table or default_table()).csco[BasisId(b)]


def flag_appendix_rows(table: Optional[BasisTable] = None) -> List[StateRef]:
    """
    Rows whose preparation circuit does not reproduce the listed state.

    Mismatches are reported and logged, never patched.
    """
    table = table or default_table()
    flagged: List[StateRef] = []
    for b in ALL_BASES:
        for i in range(4):
            if not same_up_to_phase(prep_circuit(b, i).prepare(), table.state(b, i)):
                logger.warning("Preparation circuit %s[%d] disagrees with the listed state", b.value, i)
                flagged.append(StateRef(b, i))
    return flagged
