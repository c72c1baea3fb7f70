import itertools

import numpy as np
import pytest

from photonkd.config import preset_settings
from photonkd.errors import ConfigError, InvalidArgumentError
from photonkd.mub import ALL_BASES, BasisId
from photonkd.protocol import (
    ChannelConfig,
    EveConfig,
    ProtocolConfig,
    RoundRecord,
    analytic_attack_rates,
    enumerate_rates,
    qber,
    run,
    sift,
    symbols_to_bits,
)

TWO_BASES = ("B1", "B2")


def test_ideal_channel_without_eve_is_error_free(sigma):
    n = 10_000
    result = run(ProtocolConfig(basis_set=TWO_BASES, n_rounds=n, seed=1))
    stats = result.stats
    assert stats.symbol_error_rate == 0.0
    assert stats.bit_error_rate == 0.0
    assert np.array_equal(result.alice_bits, result.bob_bits)
    assert abs(stats.sifted_fraction - 0.5) < 4 * sigma(0.5, n)
    assert stats.raw_key_bits_per_photon == pytest.approx(2 * stats.sifted_fraction)
    assert stats.n_detected == n and stats.loss_fraction == 0.0
    assert not stats.aborted


def test_all_five_bases_decode_without_errors():
    result = run(ProtocolConfig(basis_set=tuple(b.value for b in ALL_BASES), n_rounds=5_000, seed=2))
    assert result.stats.symbol_error_rate == 0.0
    sifted_bases = {r.alice_basis for r in result.records if r.sifted}
    assert sifted_bases == set(ALL_BASES)


def test_same_seed_same_records():
    config = ProtocolConfig(basis_set=TWO_BASES, n_rounds=3_000, seed=7, eve=EveConfig(enabled=True))
    first, second = run(config), run(config)
    assert first.records == second.records
    assert first.stats == second.stats
    other = run(ProtocolConfig(basis_set=TWO_BASES, n_rounds=3_000, seed=8, eve=EveConfig(enabled=True)))
    assert other.records != first.records


def test_worker_count_does_not_change_the_result():
    common = dict(basis_set=("B1", "B3", "B4"), n_rounds=2_000, seed=11, block_size=300, eve=EveConfig(enabled=True))
    inline = run(ProtocolConfig(workers=1, **common))
    pooled = run(ProtocolConfig(workers=2, **common))
    assert inline.records == pooled.records
    assert np.array_equal(inline.bob_bits, pooled.bob_bits)


def test_records_are_in_round_order():
    result = run(ProtocolConfig(n_rounds=1_000, block_size=128, seed=3))
    assert [r.index for r in result.records] == list(range(1_000))


def test_intercept_resend_two_bases():
    result = run(ProtocolConfig(basis_set=TWO_BASES, n_rounds=20_000, seed=5, eve=EveConfig(enabled=True)))
    stats = result.stats
    assert stats.symbol_error_rate == pytest.approx(0.375, abs=0.02)
    assert stats.bit_error_rate == pytest.approx(0.25, abs=0.02)
    assert stats.aborted


@pytest.mark.slow
@pytest.mark.parametrize("bases, expected", [(TWO_BASES, (0.375, 0.25)), (("B1", "B2", "B3", "B4", "B5"), (0.6, 0.4))])
def test_intercept_resend_matches_closed_form(bases, expected, sigma):
    result = run(ProtocolConfig(basis_set=bases, n_rounds=100_000, seed=17, eve=EveConfig(enabled=True), workers=2))
    stats = result.stats
    assert abs(stats.symbol_error_rate - expected[0]) < 4 * sigma(expected[0], stats.n_sifted)
    assert abs(stats.bit_error_rate - expected[1]) < 4 * sigma(expected[1], stats.n_sifted)


def test_enumeration_agrees_with_closed_form_for_every_basis_subset():
    for m in range(2, 6):
        for subset in itertools.combinations(ALL_BASES, m):
            estimate = enumerate_rates(ProtocolConfig(basis_set=subset, eve=EveConfig(enabled=True)))
            symbol, bit = analytic_attack_rates(m)
            assert estimate.symbol_error_rate == pytest.approx(symbol, abs=1e-9)
            assert estimate.bit_error_rate == pytest.approx(bit, abs=1e-9)
            assert estimate.sifted_fraction == pytest.approx(1 / m)


def test_enumeration_without_eve_on_ideal_channel():
    estimate = enumerate_rates(ProtocolConfig(basis_set=("B2", "B5")))
    assert estimate.symbol_error_rate == pytest.approx(0.0, abs=1e-12)
    assert estimate.bit_error_rate == pytest.approx(0.0, abs=1e-12)


def test_eve_in_a_basis_alice_never_uses():
    config = ProtocolConfig(basis_set=TWO_BASES, eve=EveConfig(enabled=True, basis_set=("B3",)))
    estimate = enumerate_rates(config)
    assert estimate.symbol_error_rate == pytest.approx(0.75)
    assert estimate.bit_error_rate == pytest.approx(0.5)
    assert config.eve_bases == (BasisId.B3,)


def test_full_depolarization_randomizes_bob():
    estimate = enumerate_rates(ProtocolConfig(basis_set=TWO_BASES, channel=ChannelConfig(depolarizing=1.0)))
    assert estimate.symbol_error_rate == pytest.approx(0.75)
    assert estimate.bit_error_rate == pytest.approx(0.5)


def test_partial_depolarization_sampled(sigma):
    config = ProtocolConfig(basis_set=TWO_BASES, n_rounds=20_000, seed=23, channel=ChannelConfig(depolarizing=0.2))
    estimate = enumerate_rates(config)
    assert estimate.symbol_error_rate == pytest.approx(0.15)
    assert estimate.bit_error_rate == pytest.approx(0.1)
    stats = run(config).stats
    assert abs(stats.symbol_error_rate - 0.15) < 4 * sigma(0.15, stats.n_sifted)


def test_measured_visibilities_sampled_against_enumeration(sigma):
    config = ProtocolConfig(basis_set=TWO_BASES, n_rounds=20_000, seed=29, mzem=preset_settings("paper-tableIV"))
    estimate = enumerate_rates(config)
    assert 0.0 < estimate.symbol_error_rate < 0.25
    stats = run(config).stats
    n = stats.n_sifted
    assert abs(stats.symbol_error_rate - estimate.symbol_error_rate) < 4 * sigma(estimate.symbol_error_rate, n)
    assert abs(stats.bit_error_rate - estimate.bit_error_rate) < 4 * sigma(estimate.bit_error_rate, n)


def test_channel_loss_thins_the_sifted_key(sigma):
    n = 10_000
    config = ProtocolConfig(basis_set=TWO_BASES, n_rounds=n, seed=31, channel=ChannelConfig(transmission=0.5))
    stats = run(config).stats
    assert abs(stats.loss_fraction - 0.5) < 4 * sigma(0.5, n)
    assert abs(stats.sifted_fraction - 0.25) < 4 * sigma(0.25, n)
    assert stats.symbol_error_rate == 0.0
    assert enumerate_rates(config).sifted_fraction == pytest.approx(0.25)


def test_lost_rounds_are_never_sifted():
    lost = RoundRecord(0, BasisId.B1, 1, True, BasisId.B1)
    kept = RoundRecord(1, BasisId.B2, 3, False, BasisId.B2, bob_detector=1, bob_symbol=3)
    missed = RoundRecord(2, BasisId.B2, 0, False, BasisId.B1, bob_detector=0, bob_symbol=0)
    assert sift([lost, kept, missed]) == [1]
    assert sift([]) == []


def test_record_rows():
    record = RoundRecord(3, BasisId.B4, 2, False, BasisId.B4, bob_detector=1, bob_symbol=2)
    assert record.as_row() == ("3", "B4", "10", "", "", "0", "B4", "1", "10", "1")
    lost = RoundRecord(0, BasisId.B1, 1, True, BasisId.B3)
    assert lost.as_row() == ("0", "B1", "01", "", "", "1", "B3", "", "", "0")
    assert len(RoundRecord.CSV_HEADER) == len(record.as_row())


def test_symbols_to_bits_is_big_endian():
    assert symbols_to_bits([3, 1, 0, 2]).tolist() == [1, 1, 0, 1, 0, 0, 1, 0]


def test_qber_counts_symbols_and_bits():
    assert qber([0, 1, 1, 0], [0, 1, 0, 1]) == (0.5, 0.5)
    assert qber([0, 0, 0, 0], [1, 0, 0, 0]) == (0.5, 0.25)
    assert qber([], []) == (0.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        qber([0, 1], [0, 1, 1, 0])
    with pytest.raises(InvalidArgumentError):
        qber([0, 1, 1], [0, 1, 1])


def test_closed_form_attack_rates():
    assert analytic_attack_rates(1) == (0.0, 0.0)
    assert analytic_attack_rates(2) == pytest.approx((0.375, 0.25))
    assert analytic_attack_rates(5) == pytest.approx((0.6, 0.4))
    with pytest.raises(InvalidArgumentError):
        analytic_attack_rates(6)
    with pytest.raises(InvalidArgumentError):
        analytic_attack_rates(2, unbiased=False)


def test_invalid_configurations():
    with pytest.raises(ConfigError):
        ProtocolConfig(basis_set=("B1",))
    with pytest.raises(ConfigError):
        ProtocolConfig(basis_set=("B1", "B1"))
    with pytest.raises(ConfigError) as excinfo:
        ProtocolConfig(n_rounds=0, channel=ChannelConfig(transmission=0.0))
    assert len(excinfo.value.diagnostics) == 2
    with pytest.raises(InvalidArgumentError):
        ProtocolConfig(basis_set=("B1", "B7"))


def test_default_configuration_uses_first_two_bases():
    config = ProtocolConfig()
    assert config.basis_set == (BasisId.B1, BasisId.B2)
    assert config.eve_bases == config.basis_set
    rebuilt = ProtocolConfig(basis_set=config.basis_set, n_rounds=200, seed=1)
    assert rebuilt.basis_set == config.basis_set
    assert run(rebuilt).stats.symbol_error_rate == 0.0


def test_parsed_bases_and_names_mix():
    config = ProtocolConfig(basis_set=(BasisId.B3, "b5"), eve=EveConfig(enabled=True, basis_set=(BasisId.B3,)))
    assert config.basis_set == (BasisId.B3, BasisId.B5)
    assert config.eve_bases == (BasisId.B3,)
