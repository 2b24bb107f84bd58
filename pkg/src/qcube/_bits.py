"""Bitmask helpers shared by the sign model and the Fock-space operators.

Index ``i`` (1-based, as in the model) lives in bit ``i - 1``.
"""

import numpy as np


def bit(i):
    return 1 << (i - 1)


def mask_of(indices):
    m = 0
    for i in indices:
        m |= 1 << (i - 1)
    return m


def indices_of(mask):
    """Sorted 1-based indices of the set bits of ``mask``."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def below(i):
    """Mask of all indices strictly smaller than ``i``."""
    return (1 << (i - 1)) - 1


def parity(x):
    return x.bit_count() & 1 if hasattr(x, "bit_count") else bin(x).count("1") & 1


def all_vertices(n):
    return np.arange(1 << n, dtype=np.int64)


def parity_array(a):
    """Elementwise popcount parity of a non-negative int64 array."""
    return (np.bitwise_count(a) & 1).astype(np.int8)


def sign_array(a):
    """``(-1) ** popcount(a)`` elementwise, as int8."""
    return (1 - 2 * parity_array(a)).astype(np.int8)
