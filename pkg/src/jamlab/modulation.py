"""Gray-coded digital modulation schemes and bit-level helpers.

All constellations are normalized to unit average symbol power. Bit words
index the constellation arrays directly: ``constellation(scheme)[word]`` is
the symbol transmitted for that bit word (MSB first).
"""

from __future__ import annotations

import numpy as np

_PSK_ORDERS = {"BPSK": 2, "QPSK": 4, "8PSK": 8, "32PSK": 32}
_QAM_ORDERS = {"16QAM": 16, "64QAM": 64, "256QAM": 256}

SCHEMES = tuple(list(_PSK_ORDERS) + list(_QAM_ORDERS))


def scheme_order(scheme: str) -> int:
    """Constellation size M for a scheme name."""
    if scheme in _PSK_ORDERS:
        return _PSK_ORDERS[scheme]
    if scheme in _QAM_ORDERS:
        return _QAM_ORDERS[scheme]
    raise ValueError(f"unknown scheme {scheme!r}")


def bits_per_symbol(scheme: str) -> int:
    return int(np.log2(scheme_order(scheme)))


def _gray(i: np.ndarray) -> np.ndarray:
    return i ^ (i >> 1)


def constellation(scheme: str) -> np.ndarray:
    """Complex constellation indexed by bit word (MSB first), unit mean power.

    PSK places Gray-adjacent words on adjacent circle positions. Square QAM
    Gray-codes each axis independently; the first half of the word selects
    the I level, the second half the Q level. BPSK maps bit 0 to -1 and
    bit 1 to +1.
    """
    m = scheme_order(scheme)
    if scheme in _PSK_ORDERS:
        k = np.arange(m)
        points = np.empty(m, dtype=complex)
        # circle position k gets word gray(k); BPSK rotated so word 0 = -1
        phase0 = np.pi if scheme == "BPSK" else 0.0
        points[_gray(k)] = np.exp(1j * (2.0 * np.pi * k / m + phase0))
        if scheme == "QPSK":
            # axis-aligned Gray QPSK: word b0 b1 -> ((2 b0 - 1) + j(2 b1 - 1))/sqrt(2)
            w = np.arange(4)
            points = ((2.0 * (w >> 1) - 1.0) + 1j * (2.0 * (w & 1) - 1.0)) / np.sqrt(2.0)
        return np.round(points, 15)
    # square QAM
    side = int(np.sqrt(m))
    half = bits_per_symbol(scheme) // 2
    levels = np.empty(side)
    i = np.arange(side)
    levels[_gray(i)] = 2.0 * i - (side - 1)
    norm = np.sqrt(2.0 * (m - 1) / 3.0)
    w = np.arange(m)
    wi = w >> half
    wq = w & (side - 1)
    return (levels[wi] + 1j * levels[wq]) / norm


def modulate(bits: np.ndarray, scheme: str) -> np.ndarray:
    """Map a bit array to complex symbols; len(bits) must divide evenly."""
    bits = np.asarray(bits, dtype=np.int64)
    k = bits_per_symbol(scheme)
    if bits.size % k != 0:
        raise ValueError(f"bit count {bits.size} not a multiple of {k}")
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise ValueError("bits must be 0/1")
    words = bits.reshape(-1, k) @ (1 << np.arange(k - 1, -1, -1))
    return constellation(scheme)[words]


def demodulate(symbols: np.ndarray, scheme: str) -> np.ndarray:
    """Nearest-point hard decision back to bits (ties pick the lowest word)."""
    symbols = np.asarray(symbols, dtype=complex).ravel()
    const = constellation(scheme)
    words = np.argmin(np.abs(symbols[:, None] - const[None, :]), axis=1)
    k = bits_per_symbol(scheme)
    shifts = np.arange(k - 1, -1, -1)
    return ((words[:, None] >> shifts) & 1).astype(np.int64).ravel()


def ber(tx_bits: np.ndarray, rx_bits: np.ndarray) -> float:
    """Bit error rate between two equal-length bit arrays."""
    tx = np.asarray(tx_bits).ravel()
    rx = np.asarray(rx_bits).ravel()
    if tx.size != rx.size:
        raise ValueError("bit arrays differ in length")
    if tx.size == 0:
        raise ValueError("empty bit arrays")
    return float(np.mean(tx != rx))
