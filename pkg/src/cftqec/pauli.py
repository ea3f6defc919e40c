"""Code-space matrix elements of single-axis Pauli strings.

For a fixed axis every string ``sigma^t`` (t a bitmask over sites, site i at
bit n-1-i) becomes ``Z^t`` after a product basis change. Its code matrix
``<phi_a|Z^t|phi_b>`` is then the Walsh-Hadamard transform of
``conj(phi_a) * phi_b``, so all 2^n strings cost O(D^2 n 2^n).
"""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# rows are the +1 and -1 eigenvectors (bras), so V sigma V^dag = Z
BASIS_CHANGE = {
    "z": np.eye(2, dtype=complex),
    "x": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "y": np.array([[1, -1j], [1, 1j]], dtype=complex) / np.sqrt(2),
}


def check_axis(axis: str) -> str:
    a = str(axis).lower()
    if a not in BASIS_CHANGE:
        raise ArgumentError(f"axis must be one of x, y, z; got {axis!r}")
    return a


def apply_single_site(vectors: np.ndarray, op: np.ndarray, site: int, n: int) -> np.ndarray:
    """Apply a 2x2 operator on ``site`` to each row of a (k, 2^n) array."""
    k = vectors.shape[0]
    t = vectors.reshape(k, 2**site, 2, 2 ** (n - site - 1))
    return np.einsum("ab,kibj->kiaj", op, t).reshape(k, 2**n)


def rotate(vectors: np.ndarray, axis: str) -> np.ndarray:
    """Express rows of a (k, 2^n) array in the eigenbasis of ``sigma_axis``."""
    axis = check_axis(axis)
    v = np.asarray(vectors, dtype=complex)
    if axis == "z":
        return v.copy()
    n = int(round(np.log2(v.shape[1])))
    for site in range(n):
        v = apply_single_site(v, BASIS_CHANGE[axis], site, n)
    return v


def fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis."""
    a = np.array(a, copy=True)
    size = a.shape[-1]
    n = int(round(np.log2(size)))
    lead = a.shape[:-1]
    for i in range(n):
        a = a.reshape(lead + (2**i, 2, size // 2 ** (i + 1)))
        lo = a[..., 0, :].copy()
        hi = a[..., 1, :]
        a[..., 0, :] = lo + hi
        a[..., 1, :] = lo - hi
    return a.reshape(lead + (size,))


def string_elements(codewords: np.ndarray, axis: str) -> np.ndarray:
    """``M[t, a, b] = <phi_a| sigma_axis^t |phi_b>`` for every bitmask t."""
    r = rotate(codewords, axis)
    prod = r.conj()[:, None, :] * r[None, :, :]
    return np.moveaxis(fwht(prod), -1, 0)


def site_mask(n: int, sites) -> int:
    m = 0
    for s in sites:
        m |= 1 << (n - 1 - int(s))
    return m


def popcounts(n: int) -> np.ndarray:
    t = np.arange(2**n)
    c = np.zeros(2**n, dtype=np.int64)
    for i in range(n):
        c += (t >> i) & 1
    return c
