"""Critical lattice models and their low-energy spectra.

The transverse-field Ising chain

    H = -sum_i (X_i X_{i+1} + g Z_i),   periodic,

commutes with the parity ``prod_i Z_i``, so it is diagonalized separately in
the even and odd sectors. Basis index bits follow the big-endian convention of
:mod:`cftqec.densealg`: site ``i`` is bit ``n - 1 - i`` and bit value 0 means
``Z = +1``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .densealg import PureState
from .errors import ArgumentError, LabelingError, NumericalError, ResourceError

MAX_SITES = 20
DENSE_MAX_SITES = 12
DEGENERACY_RTOL = 1e-8

# Ising CFT primaries used for labeling
ISING_DIMENSIONS = {"I": 0.0, "sigma": 0.125, "epsilon": 1.0}


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.int64)
    c = np.zeros_like(x)
    while np.any(x):
        c += x & 1
        x >>= 1
    return c


@dataclass(frozen=True)
class TFIMHamiltonian:
    """Matrix-free periodic TFIM; sector operators are built lazily."""

    n: int
    g: float

    @cached_property
    def _bond_masks(self) -> np.ndarray:
        n = self.n
        return np.array([(1 << (n - 1 - i)) | (1 << (n - 1 - (i + 1) % n)) for i in range(n)])

    @cached_property
    def _z_field(self) -> np.ndarray:
        idx = np.arange(2**self.n)
        return self.n - 2.0 * _popcount(idx)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Apply H to a full 2^n vector (or a stack of them along axis 0)."""
        v = np.asarray(v)
        idx = np.arange(2**self.n)
        out = -self.g * (self._z_field.reshape((-1,) + (1,) * (v.ndim - 1)) * v)
        for mask in self._bond_masks:
            # for n == 2 both bonds flip the same pair of spins
            out = out - v[idx ^ mask]
        return out

    def sector_indices(self, parity: int) -> np.ndarray:
        idx = np.arange(2**self.n)
        odd = _popcount(idx) % 2
        return idx[odd == (0 if parity > 0 else 1)]

    def _sector_data(self, parity: int):
        sec = self.sector_indices(parity)
        pos = np.full(2**self.n, -1)
        pos[sec] = np.arange(sec.size)
        perms = [pos[sec ^ m] for m in self._bond_masks]
        diag = -self.g * self._z_field[sec]
        return sec, diag, perms

    def sector_operator(self, parity: int) -> spla.LinearOperator:
        sec, diag, perms = self._sector_data(parity)

        def mv(x):
            x = np.asarray(x).ravel()
            out = diag * x
            for pm in perms:
                out = out - x[pm]
            return out

        return spla.LinearOperator((sec.size, sec.size), matvec=mv, dtype=float)

    def sector_dense(self, parity: int) -> np.ndarray:
        sec, diag, perms = self._sector_data(parity)
        h = np.diag(diag)
        rows = np.arange(sec.size)
        for pm in perms:
            np.subtract.at(h, (rows, pm), 1.0)
        return h

    def to_dense(self) -> np.ndarray:
        if self.n > DENSE_MAX_SITES:
            raise ResourceError(f"dense TFIM matrix limited to n <= {DENSE_MAX_SITES}")
        return self.matvec(np.eye(2**self.n))

    def parity_matvec(self, v: np.ndarray) -> np.ndarray:
        sign = 1.0 - 2.0 * (_popcount(np.arange(2**self.n)) % 2)
        return sign * np.asarray(v)


def build_tfim(n: int, g: float = 1.0, bc: str = "periodic") -> TFIMHamiltonian:
    if bc != "periodic":
        raise ArgumentError(f"only periodic boundary conditions are supported, got {bc!r}")
    if not 2 <= n <= MAX_SITES:
        raise ResourceError(f"TFIM size n={n} outside supported range [2, {MAX_SITES}]")
    if g <= 0:
        raise ArgumentError(f"transverse field must be positive, got {g}")
    return TFIMHamiltonian(int(n), float(g))


@dataclass(frozen=True)
class SpectrumRecord:
    energies: np.ndarray
    states: tuple[PureState, ...]
    parities: tuple[int, ...]
    degenerate: tuple[bool, ...]
    n: int
    g: float
    labels: Optional[tuple[Optional[str], ...]] = None
    assigned_dimensions: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.states)

    def state(self, label: str) -> PureState:
        if self.labels is None or label not in self.labels:
            raise ArgumentError(f"no state labelled {label!r}; run identify_scaling_states first")
        return self.states[self.labels.index(label)]


def _sector_lowest(H: TFIMHamiltonian, parity: int, k: int, tol: float):
    sec = H.sector_indices(parity)
    k = min(k, sec.size)
    if H.n <= DENSE_MAX_SITES:
        w, V = sla.eigh(H.sector_dense(parity), subset_by_index=[0, k - 1])
    else:
        op = H.sector_operator(parity)
        v0 = np.ones(sec.size) / np.sqrt(sec.size)
        try:
            w, V = spla.eigsh(op, k=k, which="SA", tol=tol, v0=v0, ncv=max(2 * k + 1, 20))
        except spla.ArpackNoConvergence as exc:
            raise NumericalError(
                f"Lanczos did not converge for n={H.n}, parity={parity}: "
                f"{len(exc.eigenvalues)} of {k} eigenpairs converged"
            ) from exc
        order = np.argsort(w)
        w, V = w[order], V[:, order]
    full = np.zeros((k, 2**H.n))
    full[:, sec] = V.T
    return w, full


def _fix_phase(v: np.ndarray) -> np.ndarray:
    i = np.argmax(np.abs(v))
    return v * (abs(v[i]) / v[i])


def low_energy_spectrum(H: TFIMHamiltonian, k: int, tol: float = 1e-12) -> SpectrumRecord:
    """The ``k`` lowest eigenpairs, each with a definite Z2 parity.

    Both sectors are solved for ``k`` states and merged. Adjacent energies
    closer than ``DEGENERACY_RTOL`` (relative) are flagged as degenerate.
    """
    if not 1 <= k <= 8:
        raise ArgumentError(f"k must be in [1, 8], got {k}")
    if k >= 2**H.n:
        raise ArgumentError(f"k={k} is not small compared to the Hilbert space 2^{H.n}")
    energies, vecs, pars = [], [], []
    for parity in (+1, -1):
        w, V = _sector_lowest(H, parity, k, tol)
        energies.extend(w)
        vecs.extend(V)
        pars.extend([parity] * len(w))
    order = np.argsort(np.asarray(energies), kind="stable")[:k]
    energies = np.asarray(energies)[order]
    states = tuple(PureState.qubits(_fix_phase(vecs[i] / np.linalg.norm(vecs[i]))) for i in order)
    parities = tuple(int(pars[i]) for i in order)
    scale = max(1.0, float(np.max(np.abs(energies))))
    close = np.abs(np.diff(energies)) < DEGENERACY_RTOL * scale
    degenerate = tuple(
        bool((i > 0 and close[i - 1]) or (i < len(energies) - 1 and close[i])) for i in range(len(energies))
    )
    energies.setflags(write=False)
    return SpectrumRecord(energies, states, parities, degenerate, H.n, H.g)


def identify_scaling_states(spec: SpectrumRecord, ratio_window=(6.0, 10.0)) -> SpectrumRecord:
    """Label I, sigma, epsilon and assign scaling dimensions by an affine fit.

    I is the ground state (even), sigma the lowest odd state and epsilon the
    second even state. Energies map to dimensions through ``E = a + b*Delta``
    anchored on (I, sigma); the epsilon/sigma gap ratio must lie inside
    ``ratio_window`` for n >= 8.
    """
    if len(spec) < 3:
        raise LabelingError("need at least three states to identify I, sigma, epsilon")
    order = np.argsort(spec.energies, kind="stable")
    E = np.asarray(spec.energies)[order]
    par = [spec.parities[i] for i in order]
    deg = [spec.degenerate[i] for i in order]
    even = [j for j, s in enumerate(par) if s > 0]
    odd = [j for j, s in enumerate(par) if s < 0]
    if not even or even[0] != 0:
        raise LabelingError("ground state is not in the even parity sector")
    if len(even) < 2 or not odd:
        raise LabelingError("spectrum lacks a second even state or an odd state")
    i_I, i_s, i_e = 0, odd[0], even[1]
    for j in (i_I, i_s, i_e):
        same = [m for m in range(len(E)) if m != j and par[m] == par[j] and deg[m] and deg[j]
                and abs(E[m] - E[j]) < DEGENERACY_RTOL * max(1.0, abs(E[j]))]
        if same:
            raise LabelingError(f"state {j} is degenerate within its parity sector; label is ambiguous")
    gap_s = E[i_s] - E[i_I]
    if gap_s <= 0:
        raise LabelingError("sigma candidate is not above the ground state")
    ratio = (E[i_e] - E[i_I]) / gap_s
    lo, hi = ratio_window
    if spec.n >= 8 and not lo < ratio < hi:
        raise LabelingError(f"gap ratio {ratio:.3f} outside ({lo}, {hi}); chain is not at the Ising point")
    slope = gap_s / ISING_DIMENSIONS["sigma"]
    dims_sorted = (E - E[i_I]) / slope
    labels_sorted: list[Optional[str]] = [None] * len(E)
    labels_sorted[i_I], labels_sorted[i_s], labels_sorted[i_e] = "I", "sigma", "epsilon"
    labels: list[Optional[str]] = [None] * len(E)
    dims = np.empty(len(E))
    for pos, src in enumerate(order):
        labels[src] = labels_sorted[pos]
        dims[src] = dims_sorted[pos]
    dims.setflags(write=False)
    return replace(spec, labels=tuple(labels), assigned_dimensions=dims)


def ising_states(n: int, labels: Sequence[str] = ("I", "epsilon"), g: float = 1.0, k: int = 3):
    """Convenience: the labelled TFIM eigenstates requested by ``labels``."""
    rec = identify_scaling_states(low_energy_spectrum(build_tfim(n, g), k))
    return [rec.state(lab) for lab in labels]


def build_majorana_chain(m: int, bc: str = "NS") -> np.ndarray:
    """Coefficient matrix A of ``H = i sum_j c_j c_{j+1}`` on 2m Majoranas.

    Normalization: ``H = (i/4) sum_{jk} A_jk c_j c_k``, so ``A_{j,j+1} = 2``
    and the Neveu-Schwarz condition ``c_{2m+1} = -c_1`` gives ``A_{2m,1} = -2``.
    The quasiparticle energies are the moduli of the eigenvalues of A.
    """
    if bc != "NS":
        raise ArgumentError(f"only the Neveu-Schwarz boundary condition is supported, got {bc!r}")
    if m < 2:
        raise ArgumentError(f"need at least two complex modes, got m={m}")
    N = 2 * m
    A = np.zeros((N, N))
    j = np.arange(N - 1)
    A[j, j + 1] = 2.0
    A[j + 1, j] = -2.0
    A[N - 1, 0] = -2.0
    A[0, N - 1] = 2.0
    return A


def single_particle_energies(A: np.ndarray) -> np.ndarray:
    """Nonnegative quasiparticle energies of a quadratic Majorana Hamiltonian."""
    w = np.linalg.eigvalsh(1j * A)
    return np.sort(w[w > 0])
