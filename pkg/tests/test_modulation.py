import numpy as np
import pytest
from scipy import stats

from jamlab.modulation import (SCHEMES, ber, bits_per_symbol, constellation,
                               demodulate, modulate, scheme_order)
from jamlab.transport import analytical_ber


@pytest.mark.parametrize("scheme", SCHEMES)
def test_constellation_has_unit_average_power(scheme):
    pts = constellation(scheme)
    assert len(pts) == scheme_order(scheme)
    assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0)


def test_bpsk_maps_zero_to_minus_one():
    assert modulate(np.array([0]), "BPSK")[0] == pytest.approx(-1.0)
    assert modulate(np.array([1]), "BPSK")[0] == pytest.approx(1.0)


def test_qpsk_points_lie_on_diagonals():
    pts = constellation("QPSK")
    assert np.allclose(np.abs(pts.real), 1 / np.sqrt(2))
    assert np.allclose(np.abs(pts.imag), 1 / np.sqrt(2))


@pytest.mark.parametrize("scheme", SCHEMES)
def test_modulate_demodulate_round_trip(scheme, rng):
    k = bits_per_symbol(scheme)
    bits = rng.integers(0, 2, 60 * k)
    assert np.array_equal(demodulate(modulate(bits, scheme), scheme), bits)


def test_ber_counts_flipped_bits():
    a = np.array([0, 1, 0, 1])
    b = np.array([0, 1, 1, 1])
    assert ber(a, b) == pytest.approx(0.25)
    assert ber(a, a) == 0.0


def q_func(x):
    return stats.norm.sf(x)


def test_analytical_ber_matches_q_function_forms():
    snr = 10.0 ** (8.0 / 10.0)
    assert analytical_ber("BPSK", 8.0) == pytest.approx(
        q_func(np.sqrt(2 * snr)), rel=1e-9)
    assert analytical_ber("QPSK", 8.0) == pytest.approx(
        q_func(np.sqrt(snr)), rel=1e-9)
    want_16 = (4.0 / 4.0) * (1 - 1 / 4.0) * q_func(np.sqrt(3 * snr / 15.0))
    assert analytical_ber("16QAM", 8.0) == pytest.approx(want_16, rel=1e-9)


def test_analytical_ber_decreases_with_snr():
    for scheme in ("BPSK", "QPSK", "16QAM", "64QAM"):
        vals = [analytical_ber(scheme, s) for s in (0, 4, 8, 12, 16)]
        assert all(b < a for a, b in zip(vals, vals[1:]))


def test_analytical_ber_orders_schemes_by_density():
    assert (analytical_ber("BPSK", 8.0) < analytical_ber("QPSK", 8.0)
            < analytical_ber("16QAM", 8.0) < analytical_ber("64QAM", 8.0))


def test_simulated_bpsk_ber_tracks_analytical(rng):
    snr_db = 4.0
    n = 200_000
    bits = rng.integers(0, 2, n)
    sigma = np.sqrt(10.0 ** (-snr_db / 10.0) / 2.0)
    noisy = modulate(bits, "BPSK") + sigma * (rng.standard_normal(n)
                                              + 1j * rng.standard_normal(n))
    got = ber(demodulate(noisy, "BPSK"), bits)
    want = analytical_ber("BPSK", snr_db)
    assert got == pytest.approx(want, rel=0.15)
