"""
Monte Carlo BB84 over the five-basis, two-bits-per-photon alphabet.

Rounds are simulated in fixed-size blocks. Block j draws from its own random
stream derived from the root seed and j, so the result does not depend on how
blocks are distributed over worker processes.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .core import PureState, RandomStream, apply, born_sample, canonical_state, random_stream
from .errors import ConfigError, InvalidArgumentError
from .mub import ALL_BASES, BasisId, BasisTable, default_table, measurement_operator, prep_circuit, symbol_decoder
from .mzem import MzemSettings, detect, detection_matrix, detector_decoding

logger = logging.getLogger("photonkd.protocol")

DEFAULT_BLOCK_SIZE = 4096
DEFAULT_ABORT_THRESHOLD = 0.11


@dataclass(frozen=True)
class EveConfig:
    """Intercept-resend eavesdropper; ``basis_set`` None means Alice's set."""

    enabled: bool = False
    basis_set: Optional[Tuple[BasisId, ...]] = None

    def __post_init__(self):
        if self.basis_set is not None:
            object.__setattr__(self, "basis_set", tuple(BasisId.parse(b) for b in self.basis_set))


@dataclass(frozen=True)
class ChannelConfig:
    transmission: float = 1.0
    depolarizing: float = 0.0


@dataclass(frozen=True)
class ProtocolConfig:
    basis_set: Tuple[BasisId, ...] = (BasisId.B1, BasisId.B2)
    n_rounds: int = 10000
    eve: EveConfig = field(default_factory=EveConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    mzem: MzemSettings = field(default_factory=MzemSettings)
    seed: int = 0
    qber_abort_threshold: float = DEFAULT_ABORT_THRESHOLD
    workers: int = 1
    block_size: int = DEFAULT_BLOCK_SIZE

    def __post_init__(self):
        object.__setattr__(self, "basis_set", tuple(BasisId.parse(b) for b in self.basis_set))

        problems = []
        if not 2 <= len(self.basis_set) <= 5 or len(set(self.basis_set)) != len(self.basis_set):
            problems.append("basis_set: need 2 to 5 distinct bases")
        if self.eve.basis_set is not None and (
            not self.eve.basis_set or len(set(self.eve.basis_set)) != len(self.eve.basis_set)
        ):
            problems.append("eve.basis_set: need 1 to 5 distinct bases")
        if self.n_rounds < 1:
            problems.append("n_rounds: must be positive")
        if not 0.0 < self.channel.transmission <= 1.0:
            problems.append("channel.transmission: must be in (0, 1]")
        if not 0.0 <= self.channel.depolarizing <= 1.0:
            problems.append("channel.depolarizing: must be in [0, 1]")
        if not 0 <= self.seed < 2**64:
            problems.append("seed: must be a 64-bit unsigned integer")
        if not 0.0 <= self.qber_abort_threshold <= 1.0:
            problems.append("qber_abort_threshold: must be in [0, 1]")
        if self.workers < 1:
            problems.append("workers: must be at least 1")
        if self.block_size < 1:
            problems.append("block_size: must be at least 1")
        if problems:
            raise ConfigError("Invalid protocol configuration", problems)

    @property
    def eve_bases(self) -> Tuple[BasisId, ...]:
        return self.eve.basis_set or self.basis_set


@dataclass(frozen=True)
class RoundRecord:
    index: int
    alice_basis: BasisId
    alice_state: int
    photon_lost: bool
    bob_basis: BasisId
    eve_basis: Optional[BasisId] = None
    eve_outcome: Optional[int] = None
    bob_detector: Optional[int] = None
    bob_symbol: Optional[int] = None

    @property
    def sifted(self) -> bool:
        return not self.photon_lost and self.alice_basis == self.bob_basis

    CSV_HEADER = (
        "index",
        "alice_basis",
        "alice_bits",
        "eve_basis",
        "eve_outcome",
        "photon_lost",
        "bob_basis",
        "bob_detector",
        "bob_bits",
        "sifted",
    )

    def as_row(self) -> Tuple[str, ...]:
        def bits(symbol: Optional[int]) -> str:
            return "" if symbol is None else format(symbol, "02b")

        return (
            str(self.index),
            self.alice_basis.value,
            bits(self.alice_state),
            self.eve_basis.value if self.eve_basis else "",
            "" if self.eve_outcome is None else str(self.eve_outcome),
            str(int(self.photon_lost)),
            self.bob_basis.value,
            "" if self.bob_detector is None else str(self.bob_detector),
            bits(self.bob_symbol),
            str(int(self.sifted)),
        )


@dataclass(frozen=True)
class ProtocolStats:
    n_rounds: int
    n_detected: int
    n_sifted: int
    symbol_error_rate: float
    bit_error_rate: float
    sifted_fraction: float
    raw_key_bits_per_photon: float
    loss_fraction: float
    aborted: bool

    def as_dict(self) -> Dict[str, object]:
        return {
            "n_rounds": self.n_rounds,
            "n_detected": self.n_detected,
            "n_sifted": self.n_sifted,
            "symbol_error_rate": self.symbol_error_rate,
            "bit_error_rate": self.bit_error_rate,
            "sifted_fraction": self.sifted_fraction,
            "raw_key_bits_per_photon": self.raw_key_bits_per_photon,
            "loss_fraction": self.loss_fraction,
            "aborted": self.aborted,
        }


class ProtocolResult(NamedTuple):
    stats: ProtocolStats
    records: List[RoundRecord]
    alice_bits: np.ndarray
    bob_bits: np.ndarray


class _Kit:
    """Per-process precomputed states, operators and decoders."""

    def __init__(self, config: ProtocolConfig, table: BasisTable):
        self.prepared: Dict[BasisId, Tuple[PureState, ...]] = {
            b: tuple(prep_circuit(b, i).prepare() for i in range(4)) for b in ALL_BASES
        }
        self.bases = {b: table.basis(b) for b in ALL_BASES}
        self.measure = {b: measurement_operator(b) for b in ALL_BASES}
        self.symbols = {b: symbol_decoder(b) for b in ALL_BASES}
        self.detector_to_canonical = detector_decoding(config.mzem)
        self.canonical = tuple(canonical_state(k) for k in range(4))

    def decode(self, bob_basis: BasisId, detector: int) -> int:
        return self.symbols[bob_basis][self.detector_to_canonical[detector]]


def _choice(options: Sequence[BasisId], rng: RandomStream) -> BasisId:
    return options[int(rng.integers(len(options)))]


def _simulate_round(index: int, config: ProtocolConfig, kit: _Kit, rng: RandomStream) -> RoundRecord:
    # Draw order is part of the reproducibility contract.
    alice_basis = _choice(config.basis_set, rng)
    alice_state = int(rng.integers(4))
    bob_basis = _choice(config.basis_set, rng)
    lost = bool(rng.random() >= config.channel.transmission)
    if lost:
        return RoundRecord(index, alice_basis, alice_state, True, bob_basis)

    psi = kit.prepared[alice_basis][alice_state]
    if config.channel.depolarizing > 0.0 and rng.random() < config.channel.depolarizing:
        psi = kit.canonical[int(rng.integers(4))]

    eve_basis: Optional[BasisId] = None
    eve_outcome: Optional[int] = None
    if config.eve.enabled:
        eve_basis = _choice(config.eve_bases, rng)
        eve_outcome = born_sample(psi, kit.bases[eve_basis], rng)
        psi = kit.bases[eve_basis][eve_outcome]

    event = detect(apply(kit.measure[bob_basis], psi), config.mzem, rng)
    return RoundRecord(
        index,
        alice_basis,
        alice_state,
        False,
        bob_basis,
        eve_basis,
        eve_outcome,
        event.detector_index,
        kit.decode(bob_basis, event.detector_index),
    )


def _block_bounds(config: ProtocolConfig) -> List[Tuple[int, int, int]]:
    n_blocks = math.ceil(config.n_rounds / config.block_size)
    return [
        (j, j * config.block_size, min((j + 1) * config.block_size, config.n_rounds)) for j in range(n_blocks)
    ]


def _run_block(args: Tuple[ProtocolConfig, int, int, int]) -> List[RoundRecord]:
    config, block, start, stop = args
    kit = _Kit(config, default_table())
    rng = random_stream(config.seed, block)
    return [_simulate_round(i, config, kit, rng) for i in range(start, stop)]


def sift(records: Iterable[RoundRecord]) -> List[int]:
    """Indices (positions in ``records``) of rounds kept after basis reconciliation."""
    return [position for position, record in enumerate(records) if record.sifted]


def symbols_to_bits(symbols: Iterable[int]) -> np.ndarray:
    values = np.fromiter(symbols, dtype=np.uint8)
    bits = np.empty(2 * values.size, dtype=np.uint8)
    bits[0::2] = values >> 1
    bits[1::2] = values & 1
    return bits


def qber(alice_bits: Sequence[int], bob_bits: Sequence[int]) -> Tuple[float, float]:
    """
    Error rates between two sifted keys of 2-bit symbols.

    Returns:
        (fraction of symbols differing, fraction of bits differing)
    """
    a = np.asarray(alice_bits, dtype=np.uint8).reshape(-1)
    b = np.asarray(bob_bits, dtype=np.uint8).reshape(-1)
    if a.size != b.size:
        raise InvalidArgumentError(f"Key lengths differ: {a.size} vs {b.size}")
    if a.size % 2:
        raise InvalidArgumentError("Keys must hold whole 2-bit symbols")
    if a.size == 0:
        return 0.0, 0.0
    diff = a != b
    return float(diff.reshape(-1, 2).any(axis=1).mean()), float(diff.mean())


def _stats(
    config: ProtocolConfig, records: List[RoundRecord], alice_bits: np.ndarray, bob_bits: np.ndarray
) -> ProtocolStats:
    n_detected = sum(1 for r in records if not r.photon_lost)
    n_sifted = alice_bits.size // 2
    symbol_rate, bit_rate = qber(alice_bits, bob_bits)
    sifted_fraction = n_sifted / config.n_rounds
    aborted = n_sifted > 0 and bit_rate > config.qber_abort_threshold
    if aborted:
        logger.warning(
            "QBER %.4f exceeds abort threshold %.4f; key would be discarded", bit_rate, config.qber_abort_threshold
        )
    return ProtocolStats(
        n_rounds=config.n_rounds,
        n_detected=n_detected,
        n_sifted=n_sifted,
        symbol_error_rate=symbol_rate,
        bit_error_rate=bit_rate,
        sifted_fraction=sifted_fraction,
        raw_key_bits_per_photon=2.0 * sifted_fraction,
        loss_fraction=1.0 - n_detected / config.n_rounds,
        aborted=aborted,
    )


def run(config: ProtocolConfig) -> ProtocolResult:
    """
    Simulate ``config.n_rounds`` photons from Alice to Bob.

    Returns:
        Statistics over sifted rounds, every round record, and the sifted
        keys as bit arrays (two bits per symbol)
    """
    blocks = [(config, j, start, stop) for j, start, stop in _block_bounds(config)]
    logger.info(
        "Running %d rounds in %d blocks on %d worker(s), bases %s, eve=%s",
        config.n_rounds,
        len(blocks),
        config.workers,
        ",".join(b.value for b in config.basis_set),
        config.eve.enabled,
    )

    if config.workers == 1 or len(blocks) == 1:
        chunks = [_run_block(args) for args in blocks]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(_run_block, blocks))

    records = [record for chunk in chunks for record in chunk]
    kept = [records[i] for i in sift(records)]
    alice_bits = symbols_to_bits(r.alice_state for r in kept)
    bob_bits = symbols_to_bits(r.bob_symbol for r in kept if r.bob_symbol is not None)
    stats = _stats(config, records, alice_bits, bob_bits)
    logger.info(
        "Sifted %d of %d rounds, symbol error %.6f, bit error %.6f",
        stats.n_sifted,
        stats.n_rounds,
        stats.symbol_error_rate,
        stats.bit_error_rate,
    )
    return ProtocolResult(stats, records, alice_bits, bob_bits)


def analytic_attack_rates(m: int, unbiased: bool = True) -> Tuple[float, float]:
    """
    Closed-form error rates caused by an intercept-resend attack.

    Eve guesses Alice's basis with probability 1/m; otherwise Bob's outcome is
    uniform over the four states, wrong with probability 3/4 per symbol and
    1/2 per bit.

    Args:
        m: Number of bases shared by Alice, Bob and Eve
        unbiased: The bases are mutually unbiased; the closed form holds only then

    Returns:
        (symbol error rate, bit error rate)
    """
    if not 1 <= m <= 5:
        raise InvalidArgumentError(f"Basis count must be 1..5, got {m}")
    if not unbiased:
        raise InvalidArgumentError("The closed form needs mutually unbiased bases; use enumerate_rates instead")
    miss = 1.0 - 1.0 / m
    return miss * 0.75, miss * 0.5


class RateEstimate(NamedTuple):
    symbol_error_rate: float
    bit_error_rate: float
    sifted_fraction: float


def _bob_symbol_distribution(psi: PureState, bob_basis: BasisId, detectors: np.ndarray, kit: _Kit) -> np.ndarray:
    canonical = apply(kit.measure[bob_basis], psi).probabilities()
    clicks = canonical @ detectors
    distribution = np.zeros(4)
    for d, p in enumerate(clicks):
        distribution[kit.decode(bob_basis, d)] += p
    return distribution


def enumerate_rates(config: ProtocolConfig, table: Optional[BasisTable] = None) -> RateEstimate:
    """
    Exact expected error rates by enumerating every branch of a sifted round.

    Branches: Alice's basis and symbol, the depolarizing replacement, Eve's
    basis and outcome, and Bob's detector click including misrouting. Loss
    only thins the sifted fraction.
    """
    table = table or default_table()
    kit = _Kit(config, table)
    detectors = detection_matrix(config.mzem)
    p_noise = config.channel.depolarizing

    symbol_errors = 0.0
    bit_errors = 0.0
    weight_alice = 1.0 / (4 * len(config.basis_set))
    for b in config.basis_set:
        for symbol in range(4):
            branches: List[Tuple[float, PureState]] = []
            if p_noise < 1.0:
                branches.append((1.0 - p_noise, kit.prepared[b][symbol]))
            if p_noise > 0.0:
                branches.extend((p_noise / 4, kit.canonical[k]) for k in range(4))

            if config.eve.enabled:
                resent: List[Tuple[float, PureState]] = []
                for weight, psi in branches:
                    for e in config.eve_bases:
                        basis = kit.bases[e]
                        for outcome in basis:
                            p = abs(np.vdot(outcome.amp, psi.amp)) ** 2
                            if p > 0.0:
                                resent.append((weight * p / len(config.eve_bases), outcome))
                branches = resent

            outcome_distribution = np.zeros(4)
            for weight, psi in branches:
                outcome_distribution += weight * _bob_symbol_distribution(psi, b, detectors, kit)

            for guess, p in enumerate(outcome_distribution):
                if guess != symbol:
                    symbol_errors += weight_alice * p
                    bit_errors += weight_alice * p * bin(guess ^ symbol).count("1") / 2.0

    sifted_fraction = config.channel.transmission / len(config.basis_set)
    return RateEstimate(symbol_errors, bit_errors, sifted_fraction)
