"""Dense states, density matrices, partial traces and entropies.

Index convention: subsystems are ordered big-endian, i.e. the first entry of
``dims`` is the slowest-varying tensor index of the flattened vector. For a
qubit register this means site 0 is the most significant bit of a basis index.
All entropies are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ArgumentError, NumericalError

EIG_CLAMP = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PureState:
    """Normalized state vector over a tensor product of subsystems."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims) or int(np.prod(dims)) != amps.size:
            raise ArgumentError(f"dims {dims} do not match vector length {amps.size}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-10:
            raise ArgumentError(f"state is not normalized (norm {norm:.3e})")
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def normalized(cls, vector, dims) -> "PureState":
        v = np.asarray(vector, dtype=complex).ravel()
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ArgumentError("cannot normalize the zero vector")
        return cls(v / norm, tuple(dims))

    @classmethod
    def qubits(cls, vector) -> "PureState":
        v = np.asarray(vector).ravel()
        n = int(round(np.log2(v.size)))
        if 2**n != v.size:
            raise ArgumentError(f"length {v.size} is not a power of two")
        return cls(v, (2,) * n)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix with subsystem dims.

    The spectrum is computed once on construction (it is needed for the
    positivity check) and reused by :func:`entropy`.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]
    _spectrum: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        dims = tuple(int(d) for d in self.dims)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ArgumentError(f"density matrix must be square, got {m.shape}")
        if int(np.prod(dims)) != m.shape[0]:
            raise ArgumentError(f"dims {dims} do not match matrix size {m.shape[0]}")
        herm_err = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if herm_err > HERMITIAN_TOL:
            raise NumericalError(f"matrix is not Hermitian (deviation {herm_err:.3e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise NumericalError(f"trace is {tr!r}, expected 1")
        spec = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if spec[0] < -POSITIVITY_TOL:
            raise NumericalError(f"matrix has negative eigenvalue {spec[0]:.3e}")
        spec.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "_spectrum", spec)

    @property
    def spectrum(self) -> np.ndarray:
        """Eigenvalues in ascending order."""
        return self._spectrum

    @cached_property
    def purity(self) -> float:
        return float(np.sum(self._spectrum**2))


def _check_subsystems(dims, keep) -> list[int]:
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ArgumentError("keep must be a nonempty set of subsystem indices")
    for k in keep:
        if not 0 <= k < len(dims):
            raise ArgumentError(f"subsystem index {k} out of range for {len(dims)} subsystems")
    return keep


def partial_trace_matrix(matrix: np.ndarray, dims: Sequence[int], keep) -> np.ndarray:
    """Partial trace on a raw matrix; used where validation would be wasted work."""
    dims = tuple(dims)
    keep = _check_subsystems(dims, keep)
    k = len(dims)
    t = np.asarray(matrix).reshape(dims + dims)
    row = list(range(k))
    col = [k + i if i in keep else i for i in range(k)]
    out = [i for i in keep] + [k + i for i in keep]
    kept = int(np.prod([dims[i] for i in keep]))
    return np.einsum(t, row + col, out).reshape(kept, kept)


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Reduce ``rho`` onto the subsystems in ``keep`` (returned in original order)."""
    keep = _check_subsystems(rho.dims, keep)
    if len(keep) == len(rho.dims):
        return rho
    reduced = partial_trace_matrix(rho.matrix, rho.dims, keep)
    return DensityMatrix(reduced, tuple(rho.dims[i] for i in keep))


def entropy_from_spectrum(eigenvalues, order: float = 1.0) -> float:
    """Von Neumann (``order == 1``) or Renyi entropy of a spectrum, in nats.

    Eigenvalues below ``EIG_CLAMP`` are dropped before taking logarithms.
    """
    if order < 1:
        raise ArgumentError(f"entropy order must be >= 1, got {order}")
    lam = np.asarray(eigenvalues, dtype=float)
    lam = lam[lam > EIG_CLAMP]
    if lam.size == 0:
        return 0.0
    if order == 1:
        s = float(-np.sum(lam * np.log(lam)))
    elif np.isinf(order):
        s = float(-np.log(lam.max()))
    else:
        s = float(np.log(np.sum(lam**order)) / (1.0 - order))
    return max(s, 0.0)


def entropy(rho: DensityMatrix, order: float = 1.0) -> float:
    """Entropy of a density matrix; ``order`` 1 is von Neumann, >1 is Renyi."""
    return entropy_from_spectrum(rho.spectrum, order)


def gram_spectrum(vectors, weights) -> np.ndarray:
    """Nonzero spectrum of ``sum_s w_s |v_s><v_s|`` from the s-by-s Gram matrix.

    ``vectors`` may be PureState objects or raw arrays (unnormalized vectors are
    expected here, so raw arrays skip the normalization check). Eigenvalues are
    returned in descending order; the remaining spectrum is zero.
    """
    arrays, dims = [], None
    for v in vectors:
        if isinstance(v, PureState):
            if dims is not None and v.dims != dims:
                raise ArgumentError(f"mismatched dims {v.dims} vs {dims}")
            dims = v.dims
            arrays.append(v.amplitudes)
        else:
            a = np.asarray(v, dtype=complex).ravel()
            if arrays and a.size != arrays[0].size:
                raise ArgumentError("vectors have different lengths")
            arrays.append(a)
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(arrays),):
        raise ArgumentError("need exactly one weight per vector")
    if np.any(w < 0):
        raise ArgumentError("weights must be nonnegative")
    if not arrays:
        return np.zeros(0)
    V = np.sqrt(w)[:, None] * np.array(arrays)
    G = V.conj() @ V.T
    return np.linalg.eigvalsh(0.5 * (G + G.conj().T))[::-1]
