"""
Complex linear algebra on the two- and four-dimensional photon spaces.

Four-dimensional states are ordered |pol, TM> = |0,0>, |0,1>, |1,0>, |1,1>
with |0>pol = |H>, |1>pol = |V>, |0>TM = TEM01 (TEM-H) and |1>TM = TEM10
(TEM-V). Operators on the product space are built polarization factor first.
"""
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import ContractViolationError, InvalidArgumentError

NORM_TOLERANCE = 1e-12
UNITARY_TOLERANCE = 1e-10
ORTHONORMAL_TOLERANCE = 1e-10
PHASE_TOLERANCE = 1e-10

SQRT_HALF = 1.0 / np.sqrt(2.0)

RandomStream = np.random.Generator

_ArrayLike = Union[Sequence[complex], np.ndarray]


class PureState:
    """
    A normalized pure state of dimension 2 (one qubit) or 4 (polarization x TM).

    Instances are immutable; the amplitude array is stored read-only.
    """

    __slots__ = ("_amp",)

    def __init__(self, amplitudes: _ArrayLike, renormalize: bool = False):
        """
        Initialize a state.

        Args:
            amplitudes: 2 or 4 complex amplitudes
            renormalize: Absorb rounding drift by rescaling to unit norm. The
                         drift itself must still be below NORM_TOLERANCE
                         unless the caller built the vector by projection.
        """
        amp = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        if amp.size not in (2, 4):
            raise InvalidArgumentError(f"State dimension must be 2 or 4, got {amp.size}")
        if not np.all(np.isfinite(amp)):
            raise ContractViolationError("State amplitudes must be finite")

        norm = float(np.vdot(amp, amp).real)
        if renormalize:
            if norm <= 0.0:
                raise ContractViolationError("Cannot renormalize a zero vector")
            amp = amp / np.sqrt(norm)
        elif abs(norm - 1.0) > NORM_TOLERANCE:
            raise ContractViolationError(f"State is not normalized: |psi|^2 = {norm!r}")

        amp.setflags(write=False)
        self._amp = amp

    @property
    def amp(self) -> np.ndarray:
        return self._amp

    @property
    def dim(self) -> int:
        return int(self._amp.size)

    def probabilities(self) -> np.ndarray:
        """Probabilities of the computational basis states."""
        return np.abs(self._amp) ** 2

    def __repr__(self) -> str:
        terms = ", ".join(f"{a.real:+.6f}{a.imag:+.6f}j" for a in self._amp)
        return f"PureState([{terms}])"


class Operator:
    """
    A 2x2 or 4x4 complex matrix acting on PureState vectors.

    Unitarity is evaluated once on construction and remembered; operators built
    from optical elements pass ``require_unitary=True`` so a wrong matrix fails
    at the point it was made.
    """

    __slots__ = ("_matrix", "_unitary")

    def __init__(self, matrix: Union[np.ndarray, Sequence[Sequence[complex]]], require_unitary: bool = False):
        m = np.array(matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
            raise InvalidArgumentError(f"Operator must be 2x2 or 4x4, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ContractViolationError("Operator entries must be finite")

        m.setflags(write=False)
        self._matrix = m
        self._unitary = _is_unitary_matrix(m)
        if require_unitary and not self._unitary:
            raise ContractViolationError("Operator is not unitary within tolerance")

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def dim(self) -> int:
        return int(self._matrix.shape[0])

    @property
    def unitary(self) -> bool:
        return self._unitary

    def dagger(self) -> "Operator":
        return Operator(self._matrix.conj().T)

    def __matmul__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        if other.dim != self.dim:
            raise InvalidArgumentError(f"Cannot compose {self.dim}x{self.dim} with {other.dim}x{other.dim}")
        return Operator(self._matrix @ other._matrix)

    def __repr__(self) -> str:
        return f"Operator(dim={self.dim}, unitary={self._unitary})"


def _is_unitary_matrix(m: np.ndarray) -> bool:
    product = m.conj().T @ m
    return bool(np.max(np.abs(product - np.eye(m.shape[0]))) <= UNITARY_TOLERANCE)


def identity(dim: int = 4) -> Operator:
    if dim not in (2, 4):
        raise InvalidArgumentError(f"Identity dimension must be 2 or 4, got {dim}")
    return Operator(np.eye(dim))


_PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def pauli(name: str) -> Operator:
    """
    Single-qubit Pauli operator by letter.

    A two-letter name (e.g. ``"XZ"``) returns the tensor product, polarization
    letter first.
    """
    name = name.upper()
    if len(name) == 1 and name in _PAULI:
        return Operator(_PAULI[name])
    if len(name) == 2 and all(c in _PAULI for c in name):
        return tensor(Operator(_PAULI[name[0]]), Operator(_PAULI[name[1]]))
    raise InvalidArgumentError(f"Unknown Pauli operator '{name}'")


def tensor(a: Operator, b: Operator) -> Operator:
    """
    Kronecker product of two single-qubit operators.

    Args:
        a: Operator on the polarization qubit
        b: Operator on the TM qubit

    Returns:
        4x4 operator in the fixed |pol, TM> ordering
    """
    if a.dim != 2 or b.dim != 2:
        raise InvalidArgumentError(f"tensor expects two 2x2 operators, got {a.dim} and {b.dim}")
    return Operator(np.kron(a.matrix, b.matrix))


def product_state(pol: PureState, tm: PureState) -> PureState:
    """Product state |pol> (x) |tm>."""
    if pol.dim != 2 or tm.dim != 2:
        raise InvalidArgumentError("product_state expects two single-qubit states")
    return PureState(np.kron(pol.amp, tm.amp), renormalize=True)


def apply(op: Operator, psi: PureState) -> PureState:
    """
    Apply a unitary operator to a state.

    Returns:
        The transformed state, rescaled only to absorb rounding drift
    """
    if not op.unitary:
        raise ContractViolationError("apply() requires a unitary operator")
    if op.dim != psi.dim:
        raise InvalidArgumentError(f"Operator dim {op.dim} does not match state dim {psi.dim}")
    return PureState(op.matrix @ psi.amp, renormalize=True)


def overlap(a: PureState, b: PureState) -> complex:
    """<a|b>, conjugating the first argument."""
    if a.dim != b.dim:
        raise InvalidArgumentError(f"Cannot overlap states of dim {a.dim} and {b.dim}")
    return complex(np.vdot(a.amp, b.amp))


def fidelity(a: PureState, b: PureState) -> float:
    """|<a|b>|^2."""
    return abs(overlap(a, b)) ** 2


def same_up_to_phase(a: PureState, b: PureState, tolerance: float = PHASE_TOLERANCE) -> bool:
    """Two states are equal when |<a|b>| > 1 - tolerance."""
    return abs(overlap(a, b)) > 1.0 - tolerance


def operators_equal_up_to_phase(a: Operator, b: Operator, tolerance: float = UNITARY_TOLERANCE) -> bool:
    """Compare two operators modulo a global phase."""
    if a.dim != b.dim:
        return False
    # |tr(A^dag B)| = dim exactly when B = e^{i phi} A for unitaries
    trace = np.trace(a.matrix.conj().T @ b.matrix)
    return abs(abs(trace) - a.dim) <= tolerance * a.dim


def check_orthonormal(basis: Sequence[PureState], tolerance: float = ORTHONORMAL_TOLERANCE) -> None:
    """Raise ContractViolationError unless ``basis`` is orthonormal and complete."""
    if not basis:
        raise ContractViolationError("Basis is empty")
    dim = basis[0].dim
    if len(basis) != dim or any(s.dim != dim for s in basis):
        raise ContractViolationError(f"A basis of dimension {dim} needs {dim} states of that dimension")
    columns = np.column_stack([s.amp for s in basis])
    gram = columns.conj().T @ columns
    deviation = float(np.max(np.abs(gram - np.eye(dim))))
    if deviation > tolerance:
        raise ContractViolationError(f"Basis is not orthonormal (max Gram deviation {deviation:.3e})")


def born_probabilities(psi: PureState, basis: Sequence[PureState]) -> np.ndarray:
    """Outcome probabilities |<basis_i|psi>|^2 for an orthonormal basis."""
    check_orthonormal(basis)
    columns = np.column_stack([s.amp for s in basis])
    probs = np.abs(columns.conj().T @ psi.amp) ** 2
    return probs / probs.sum()


def born_sample(psi: PureState, basis: Sequence[PureState], rng: RandomStream) -> int:
    """
    Sample a projective measurement outcome.

    Args:
        psi: Measured state
        basis: Orthonormal measurement basis
        rng: Caller-owned random stream

    Returns:
        Index i drawn with probability |<basis_i|psi>|^2
    """
    probs = born_probabilities(psi, basis)
    return sample_index(probs, rng)


def sample_index(probs: np.ndarray, rng: RandomStream) -> int:
    """Draw an index from a discrete distribution with one uniform variate."""
    cumulative = np.cumsum(probs)
    index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    return min(index, len(probs) - 1)


def random_stream(seed: int, index: Optional[int] = None) -> RandomStream:
    """
    Create a reproducible random stream.

    Args:
        seed: 64-bit root seed
        index: Stream index; independent streams for workers or blocks are
               derived from the same root seed by index

    Returns:
        numpy Generator backed by PCG64
    """
    if not 0 <= int(seed) < 2**64:
        raise InvalidArgumentError(f"Seed must be a 64-bit unsigned integer, got {seed}")
    spawn_key = () if index is None else (int(index),)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=spawn_key)))


def qubit(alpha: complex, beta: complex) -> PureState:
    return PureState([alpha, beta], renormalize=True)


# Single-qubit states shared by both degrees of freedom. For the TM qubit
# H/V read TEM-H/TEM-V, D/d the diagonal HG modes and R/L the helical LG modes.
KET_H = qubit(1, 0)
KET_V = qubit(0, 1)
KET_D = qubit(SQRT_HALF, SQRT_HALF)
KET_ANTI_D = qubit(SQRT_HALF, -SQRT_HALF)
KET_R = qubit(SQRT_HALF, 1j * SQRT_HALF)
KET_L = qubit(SQRT_HALF, -1j * SQRT_HALF)

SINGLE_QUBIT_STATES = {
    "H": KET_H,
    "V": KET_V,
    "D": KET_D,
    "d": KET_ANTI_D,
    "R": KET_R,
    "L": KET_L,
}


def ket(pol: str, tm: str) -> PureState:
    """
    Product state from single-qubit labels, e.g. ``ket("H", "R")``.

    Labels: H, V, D, d (anti-diagonal), R, L.
    """
    try:
        return product_state(SINGLE_QUBIT_STATES[pol], SINGLE_QUBIT_STATES[tm])
    except KeyError as e:
        raise InvalidArgumentError(f"Unknown single-qubit label {e}") from None


def superpose(terms: Iterable[tuple]) -> PureState:
    """Normalized superposition of (coefficient, PureState) terms."""
    total = None
    for coefficient, state in terms:
        vector = coefficient * state.amp
        total = vector if total is None else total + vector
    if total is None:
        raise InvalidArgumentError("superpose() needs at least one term")
    return PureState(total, renormalize=True)


def canonical_state(index: int) -> PureState:
    """Computational basis state |index> of the 4-dimensional space."""
    if not 0 <= index < 4:
        raise InvalidArgumentError(f"Canonical index must be 0..3, got {index}")
    amp = np.zeros(4, dtype=np.complex128)
    amp[index] = 1.0
    return PureState(amp)
