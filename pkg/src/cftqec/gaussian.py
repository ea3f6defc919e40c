"""Fermionic Gaussian states of the Majorana chain.

Conventions: mode j has Majoranas ``c_{2j}, c_{2j+1}`` and annihilator
``a_j = (c_{2j} + i c_{2j+1}) / 2``. The covariance matrix is
``M_jk = (i/2) <[c_j, c_k]>``, so the vacuum of one mode is
``[[0, -1], [1, 0]]``. A mode operator ``b = sum_j z_j c_j`` with ``|z|^2 = 1/2``
contributes ``-(v w^T - w v^T)``, ``v = 2 Re z``, ``w = 2 Im z``, to the
covariance of the state it annihilates.

The code state ``(|0>_R |I> + |1>_R |Psi>)/sqrt(2)`` lives on the m chain modes
plus one reference mode appended last. ``|Psi> = b^dag |I>`` holds the lowest
chiral quasiparticle, and the state equals ``(1 + r^dag b^dag)|I, 0>/sqrt(2)``.
It is annihilated by ``(b + r^dag)/sqrt(2)`` and ``(r - b^dag)/sqrt(2)``
together with the remaining ground-state annihilators.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .coherentinfo import CIEstimate
from .errors import ArgumentError, ConstructionError, NumericalError
from .models import build_majorana_chain

PHYS_TOL = 1e-9
MAX_MODES = 128


@dataclass(frozen=True)
class CovarianceMatrix:
    M: np.ndarray

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
            raise ConstructionError(f"covariance must be 2m x 2m, got {M.shape}")
        asym = np.max(np.abs(M + M.T)) if M.size else 0.0
        if asym > 1e-12:
            raise ConstructionError(f"covariance is not antisymmetric (deviation {asym:.2e})")
        M = 0.5 * (M - M.T)
        top = np.linalg.norm(M, 2) if M.size else 0.0
        if top > 1 + PHYS_TOL:
            raise NumericalError(f"unphysical covariance: singular value {top:.12f} > 1")
        M.setflags(write=False)
        object.__setattr__(self, "M", M)

    @property
    def m(self) -> int:
        return self.M.shape[0] // 2

    def restrict(self, modes: Sequence[int]) -> np.ndarray:
        idx = majorana_indices(modes, self.m)
        return self.M[np.ix_(idx, idx)]


def majorana_indices(modes: Sequence[int], m: int) -> np.ndarray:
    modes = [int(k) for k in modes]
    for k in modes:
        if not 0 <= k < m:
            raise ArgumentError(f"mode {k} out of range for {m} modes")
    return np.array([x for k in modes for x in (2 * k, 2 * k + 1)], dtype=int)


def _mode_block(z: np.ndarray) -> np.ndarray:
    v, w = 2 * z.real, 2 * z.imag
    return np.outer(v, w) - np.outer(w, v)


def vacuum_covariance(m: int) -> np.ndarray:
    return np.kron(np.eye(m), np.array([[0.0, -1.0], [1.0, 0.0]]))


def ground_state_covariance(A: np.ndarray) -> np.ndarray:
    """Covariance of the ground state of ``H = (i/4) c^T A c``.

    Annihilators are the eigenvectors of iA with negative eigenvalue.
    """
    e, U = np.linalg.eigh(1j * A)
    if np.min(np.abs(e)) < 1e-12:
        raise ConstructionError("zero mode present: ground state is degenerate")
    M = np.zeros(A.shape)
    for k in np.flatnonzero(e < 0):
        M -= _mode_block(U[:, k] / np.sqrt(2))
    return M


def chiral_mode(m: int) -> tuple[np.ndarray, float]:
    """Lowest NS quasiparticle ``u_j = e^{i k j}``, ``k = pi/(2m)``, with its energy.

    ``A u = i eps u`` so ``b = sum_j u_j c_j`` annihilates the ground state.
    """
    k = np.pi / (2 * m)
    u = np.exp(1j * k * np.arange(1, 2 * m + 1))
    u /= np.sqrt(2) * np.linalg.norm(u)
    return u, 4 * np.sin(k)


def code_covariance(m: int) -> CovarianceMatrix:
    """Covariance of the purified {I, Psi} code state on m + 1 modes (reference last)."""
    if not 2 <= m <= MAX_MODES:
        raise ArgumentError(f"m must lie in [2, {MAX_MODES}], got {m}")
    N = 2 * m
    A = build_majorana_chain(m)
    u, eps = chiral_mode(m)
    if np.max(np.abs(A @ u - 1j * eps * u)) > 1e-10:
        raise ConstructionError("chiral mode is not an eigenvector of the chain")
    M = np.zeros((N + 2, N + 2))
    M[:N, :N] = ground_state_covariance(A)
    # b leaves the annihilator set, replaced by d1 = (b + r^dag)/sqrt2, d2 = (r - b^dag)/sqrt2
    b = np.zeros(N + 2, complex)
    b[:N] = u
    M += _mode_block(b)
    r = np.zeros(N + 2, complex)
    r[N], r[N + 1] = 0.5, 0.5j
    for z in ((b + r.conj()) / np.sqrt(2), (r - b.conj()) / np.sqrt(2)):
        M -= _mode_block(z)
    return CovarianceMatrix(M)


def apply_damping(cov: CovarianceMatrix, p: float, modes: Sequence[int]) -> CovarianceMatrix:
    """Amplitude damping on each listed mode: ``M -> X M X + p V_vac``.

    ``X = sqrt(1-p)`` on the damped Majoranas, 1 elsewhere.
    """
    p = float(p)
    if not 0 <= p <= 1:
        raise ArgumentError(f"damping probability must lie in [0, 1], got {p}")
    idx = majorana_indices(modes, cov.m)
    x = np.ones(2 * cov.m)
    x[idx] = np.sqrt(1 - p)
    M = x[:, None] * cov.M * x[None, :]
    for k in sorted(set(int(j) for j in modes)):
        M[2 * k, 2 * k + 1] -= p
        M[2 * k + 1, 2 * k] += p
    return CovarianceMatrix(M)


def _binary_entropy(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    out = np.zeros_like(x)
    for y in (x, 1 - x):
        pos = y > 0
        out[pos] -= y[pos] * np.log(y[pos])
    return out


def gaussian_entropy(cov: CovarianceMatrix, modes: Optional[Sequence[int]] = None) -> float:
    """Von Neumann entropy (nats) of the reduced state on ``modes``."""
    sub = cov.M if modes is None else cov.restrict(modes)
    if sub.size == 0:
        return 0.0
    # eigenvalues come in +-lambda pairs; keep one of each, zeros included
    lam = np.linalg.eigvalsh(1j * sub)[sub.shape[0] // 2:]
    if lam.max() > 1 + PHYS_TOL:
        raise NumericalError(f"covariance eigenvalue {lam.max():.12f} exceeds 1")
    return float(np.sum(_binary_entropy((1 + lam) / 2)))


def gaussian_ci(m: int, p: float) -> CIEstimate:
    """Coherent information of the {I, Psi} code under damping of every chain mode."""
    cov = apply_damping(code_covariance(m), p, range(m))
    s_q = gaussian_entropy(cov, range(m))
    s_rq = gaussian_entropy(cov)
    return CIEstimate(s_q - s_rq, method="gaussian")
