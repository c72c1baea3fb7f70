import math

import numpy as np
import pytest
from scipy.integrate import quad

from photonkd.config import preset_settings
from photonkd.core import canonical_state, ket, random_stream, superpose
from photonkd.errors import InvalidArgumentError
from photonkd.modes import hermite_gaussian
from photonkd.mzem import (
    MzemSettings,
    canonical_port_a,
    detect,
    detection_matrix,
    detector_decoding,
    detector_index,
    mirror_overlap,
    parity_operator,
    path_difference,
    port_probabilities,
    required_extent,
    scan_visibility,
    wrong_port_probabilities,
)

DISPLACEMENTS = (0.0, 0.25, 0.5, 1.0, 2.0)


def test_parity_eigenvalues():
    parity = parity_operator().matrix
    assert np.allclose(parity, np.diag([1, -1, -1, 1]))
    assert np.vdot(canonical_state(0).amp, parity @ canonical_state(0).amp) == pytest.approx(1)
    assert np.vdot(canonical_state(2).amp, parity @ canonical_state(2).amp) == pytest.approx(-1)
    assert np.vdot(canonical_state(3).amp, parity @ canonical_state(3).amp) == pytest.approx(1)


def test_ideal_routing_by_parity():
    ideal = MzemSettings()
    ports = port_probabilities(canonical_state(3), ideal)
    assert ports.p_a == 1.0 and ports.p_b == 0.0
    assert ports.state_b is None

    flipped = port_probabilities(canonical_state(3), MzemSettings(phi=math.pi))
    assert flipped.p_a == pytest.approx(0.0, abs=1e-15)
    assert flipped.p_b == pytest.approx(1.0)


def test_visibility_limits_contrast():
    ports = port_probabilities(canonical_state(0), MzemSettings(visibility=0.9))
    assert ports.p_a == pytest.approx(0.95)
    assert ports.p_a + ports.p_b == pytest.approx(1.0, abs=1e-12)


def test_mixed_parity_input_keeps_phases_in_each_port():
    psi = superpose([(1, ket("H", "H")), (1, ket("H", "V"))])
    ports = port_probabilities(psi, MzemSettings())
    assert ports.p_a == pytest.approx(0.5)
    assert np.allclose(np.abs(ports.state_a.amp), [1, 0, 0, 0])
    assert np.allclose(np.abs(ports.state_b.amp), [0, 1, 0, 0])


def test_unbalanced_beamsplitter_tilts_the_ports():
    s = MzemSettings(visibility=0.5, bs_ratio=0.6)
    expected = 0.6 * 1.5 / (0.6 * 1.5 + 0.4 * 0.5)
    assert canonical_port_a(s)[0] == pytest.approx(expected)


def test_settings_are_validated():
    with pytest.raises(InvalidArgumentError):
        MzemSettings(visibility=1.2)
    with pytest.raises(InvalidArgumentError):
        MzemSettings(bs_ratio=1.0)
    with pytest.raises(InvalidArgumentError):
        MzemSettings(port_visibility=((0.9, 0.9),))


def test_detector_index_layout():
    assert [detector_index(p, q) for p in "AB" for q in "HV"] == [0, 1, 2, 3]


def test_ideal_detection_is_a_bijection(rng):
    ideal = MzemSettings()
    fired = []
    for k in range(4):
        shots = {detect(canonical_state(k), ideal, rng).detector_index for _ in range(50)}
        assert len(shots) == 1
        fired.append(shots.pop())
    assert sorted(fired) == [0, 1, 2, 3]
    assert detector_decoding(ideal) == (0, 3, 1, 2)


def test_tem_v_with_horizontal_polarization_goes_to_port_b(rng):
    event = detect(canonical_state(1), MzemSettings(), rng)
    assert (event.port, event.pol, event.detector_index) == ("B", "H", 2)


def test_phase_pi_swaps_the_ports():
    at_zero = detection_matrix(MzemSettings())
    at_pi = detection_matrix(MzemSettings(phi=math.pi))
    swap = [2, 3, 0, 1]
    assert np.allclose(at_pi, at_zero[:, swap])


def test_wrong_port_rate_sampled(rng, sigma):
    s = MzemSettings(visibility=0.8)
    assert wrong_port_probabilities(s) == pytest.approx([0.1] * 4)
    n = 20_000
    right = detector_decoding(MzemSettings())
    wrong = sum(detect(canonical_state(0), s, rng).detector_index != right.index(0) for _ in range(n))
    assert abs(wrong / n - 0.1) < 3 * sigma(0.1, n)


def test_measured_visibility_preset():
    s = preset_settings("paper-tableIV")
    assert s.port_visibility == ((0.95, 0.98), (0.91, 0.95), (0.65, 0.83), (0.68, 0.75))
    expected = [(1 - 0.5 * (a + b)) / 2 for a, b in s.port_visibility]
    assert wrong_port_probabilities(s) == pytest.approx(expected)
    matrix = detection_matrix(s)
    assert np.allclose(matrix.sum(axis=1), 1.0)


@pytest.mark.slow
def test_measured_visibility_misrouting_sampled(sigma):
    s = preset_settings("paper-tableIV")
    decoding = detector_decoding(s)
    expected = wrong_port_probabilities(s)
    n = 100_000
    for k in range(4):
        rng = random_stream(99, k)
        wrong = sum(decoding[detect(canonical_state(k), s, rng).detector_index] != k for _ in range(n))
        assert abs(wrong / n - expected[k]) < 4 * sigma(expected[k], n)


def test_mirror_overlap_of_centred_modes():
    assert mirror_overlap(hermite_gaussian(0, 0), 0.0) == pytest.approx(1.0, abs=1e-6)
    assert mirror_overlap(hermite_gaussian(1, 0), 0.0) == pytest.approx(-1.0, abs=1e-6)
    assert mirror_overlap(hermite_gaussian(0, 1), 0.0) == pytest.approx(1.0, abs=1e-6)


def test_mirror_overlap_gaussian_closed_form():
    profile = hermite_gaussian(0, 0, extent=required_extent(2.0))
    for dx in DISPLACEMENTS:
        assert abs(mirror_overlap(profile, dx)) == pytest.approx(math.exp(-2 * dx**2), abs=1e-4)


def test_mirror_overlap_odd_mode_against_quadrature():
    profile = hermite_gaussian(1, 0, extent=required_extent(2.0))
    norm = math.sqrt(4.0 / math.sqrt(math.pi / 2))

    def u(x):
        return norm * x * math.exp(-(x**2))

    for dx in DISPLACEMENTS:
        oracle, _ = quad(lambda x: u(x - dx) * u(-x - dx), -np.inf, np.inf)
        assert abs(mirror_overlap(profile, dx)) == pytest.approx(abs(oracle), abs=1e-4)
        closed_form = -(1 - 4 * dx**2) * math.exp(-2 * dx**2)
        assert mirror_overlap(profile, dx).real == pytest.approx(closed_form, abs=1e-4)


def test_mirror_overlap_needs_room_for_the_shift():
    with pytest.raises(InvalidArgumentError):
        mirror_overlap(hermite_gaussian(0, 0, extent=6.0), 2.0)


def test_scan_visibility_rows():
    rows = scan_visibility("tem00", 0.0, 1.0, 5, n_points=256)
    assert [dx for dx, _ in rows] == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])
    assert rows[2][1] == pytest.approx(math.exp(-0.5), abs=1e-4)
    assert scan_visibility("tem00", 0.5, 0.5, 1)[0][1] == pytest.approx(0.6065, abs=1e-4)


def test_path_difference():
    assert path_difference(1.0) == math.sqrt(2.0)
    assert path_difference(-0.25) == -0.25 * math.sqrt(2.0)
    with pytest.raises(InvalidArgumentError):
        path_difference(float("nan"))


def test_odd_port_a_swaps_the_exits():
    psi = superpose([(1, ket("H", "H")), (0.5j, ket("V", "H")), (0.3, ket("V", "V"))])
    even = port_probabilities(psi, MzemSettings(visibility=0.8, phi=0.3))
    odd = port_probabilities(psi, MzemSettings(visibility=0.8, phi=0.3, port_a_even=False))
    assert odd.p_a == pytest.approx(even.p_b)
    assert odd.p_b == pytest.approx(even.p_a)
    assert np.allclose(odd.state_a.amp, even.state_b.amp)


def test_half_turn_of_phase_swaps_mixed_parity_ports():
    psi = superpose([(1, ket("H", "H")), (1j, ket("H", "V")), (0.4, ket("V", "V"))])
    for phi in (0.0, 0.3, 1.2):
        before = port_probabilities(psi, MzemSettings(visibility=0.8, phi=phi))
        after = port_probabilities(psi, MzemSettings(visibility=0.8, phi=phi + math.pi))
        assert after.p_a == pytest.approx(before.p_b)
        assert after.p_b == pytest.approx(before.p_a)
        assert np.allclose(after.state_b.amp, before.state_a.amp)


def test_gaussian_mirror_overlap_falls_with_displacement():
    profile = hermite_gaussian(0, 0, extent=required_extent(2.0))
    overlaps = [abs(mirror_overlap(profile, dx)) for dx in np.linspace(0.0, 2.0, 9)]
    assert all(later <= earlier + 1e-9 for earlier, later in zip(overlaps, overlaps[1:]))
    assert overlaps[-1] < 1e-3
