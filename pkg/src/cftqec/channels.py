"""Single-site noise channels and their application to register states.

Dephasing along an axis is ``N_p(rho) = (1 - p/2) rho + (p/2) s rho s`` with s
the Pauli matrix of that axis, equivalently Lindblad evolution with jump
``s/sqrt(2)`` for time ``t = -log(1 - p)``. The flagged variant additionally
records which sites were hit; it is handled through its measurement unraveling
rather than an explicit flag register.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .densealg import DensityMatrix
from .errors import ArgumentError, ResourceError
from .pauli import PAULI, check_axis

KINDS = ("dephasing", "flagged_dephasing", "depolarizing", "amplitude_damping")
COMPLETENESS_TOL = 1e-12
DENSE_MAX_QUBITS = 13


def _check_p(p) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ArgumentError(f"noise strength p must lie in [0, 1], got {p}")
    return p


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    p: float
    axis: Optional[str] = None
    kraus: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ArgumentError(f"unknown channel kind {self.kind!r}")
        ops = tuple(np.array(k, dtype=complex) for k in self.kraus)
        for k in ops:
            k.setflags(write=False)
        if ops:
            d = ops[0].shape[0]
            total = sum(k.conj().T @ k for k in ops)
            err = np.max(np.abs(total - np.eye(d)))
            if err > COMPLETENESS_TOL:
                raise ArgumentError(f"Kraus operators are not complete (error {err:.2e})")
        object.__setattr__(self, "kraus", ops)

    @property
    def lindblad_time(self) -> float:
        """Evolution time t with ``p = 1 - exp(-t)``."""
        return float("inf") if self.p >= 1.0 else float(-np.log1p(-self.p))

    def to_config(self) -> dict:
        out = {"kind": self.kind, "p": self.p}
        if self.axis is not None:
            out["axis"] = self.axis
        return out

    def with_p(self, p: float) -> "NoiseSpec":
        if self.kind == "dephasing":
            return dephasing(self.axis, p)
        if self.kind == "flagged_dephasing":
            return flagged_dephasing(self.axis, p)
        if self.kind == "depolarizing":
            return depolarizing(p)
        return amplitude_damping_fermionic(p)


def _dephasing_kraus(axis: str, p: float):
    return (np.sqrt(1 - p / 2) * PAULI["i"], np.sqrt(p / 2) * PAULI[axis])


def dephasing(axis: str, p: float) -> NoiseSpec:
    axis, p = check_axis(axis), _check_p(p)
    return NoiseSpec("dephasing", p, axis, _dephasing_kraus(axis, p))


def flagged_dephasing(axis: str, p: float) -> NoiseSpec:
    """Flagged dephasing; its Kraus set is the flag-discarded (unflagged) one."""
    axis, p = check_axis(axis), _check_p(p)
    return NoiseSpec("flagged_dephasing", p, axis, _dephasing_kraus(axis, p))


def depolarizing(p: float) -> NoiseSpec:
    """Uniform mixture of x, y and z dephasing: weights 1 - 3p/4 and p/4."""
    p = _check_p(p)
    ops = [np.sqrt(1 - 3 * p / 4) * PAULI["i"]] + [np.sqrt(p / 4) * PAULI[a] for a in "xyz"]
    return NoiseSpec("depolarizing", p, None, tuple(ops))


def amplitude_damping_fermionic(p: float) -> NoiseSpec:
    """Kraus pair ``K1 = sqrt(p) a``, ``K0 = I + (sqrt(1-p) - 1) a^dag a``.

    Occupation basis (|0>, |1>); ``a = |0><1|``.
    """
    p = _check_p(p)
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    k0 = np.eye(2) + (np.sqrt(1 - p) - 1) * (a.conj().T @ a)
    return NoiseSpec("amplitude_damping", p, None, (k0, np.sqrt(p) * a))


def apply_kraus_matrix(matrix: np.ndarray, dims: Sequence[int], kraus, site: int) -> np.ndarray:
    """Apply one single-subsystem channel to subsystem ``site`` of a raw matrix."""
    dims = tuple(dims)
    k = len(dims)
    t = np.asarray(matrix).reshape(dims + dims)
    out = np.zeros_like(t, dtype=complex)
    for K in kraus:
        # K on the ket index, K^dag on the bra index
        x = np.moveaxis(np.tensordot(K, t, axes=(1, site)), 0, site)
        x = np.moveaxis(np.tensordot(x, K.conj(), axes=(k + site, 1)), -1, k + site)
        out += x
    return out.reshape(matrix.shape)


def apply_product_channel(rho: DensityMatrix, spec: NoiseSpec, sites: Sequence[int],
                          offset: int = 0) -> DensityMatrix:
    """Apply ``spec`` independently on each listed qubit.

    Sites index the physical register; ``offset`` is the number of leading
    subsystems (e.g. 1 for a reference qudit) that precede site 0.
    """
    if len(rho.dims) > 0 and np.log2(rho.matrix.shape[0]) > DENSE_MAX_QUBITS + 1e-9:
        raise ResourceError(f"dense channel application limited to {DENSE_MAX_QUBITS} register qubits")
    sites = [int(s) for s in sites]
    n_phys = len(rho.dims) - offset
    for s in sites:
        if not 0 <= s < n_phys:
            raise ArgumentError(f"site {s} out of range for {n_phys} physical subsystems")
        if rho.dims[offset + s] != spec.kraus[0].shape[0]:
            raise ArgumentError(f"site {s} has dimension {rho.dims[offset + s]}, channel acts on 2")
    if spec.p == 0 or not sites:
        return rho
    m = rho.matrix
    for s in sites:
        m = apply_kraus_matrix(m, rho.dims, spec.kraus, offset + s)
    return DensityMatrix(0.5 * (m + m.conj().T), rho.dims)


@dataclass(frozen=True)
class UnravelOutcome:
    label: str  # "0" unmeasured, "+" or "-" projective outcome
    weight: float
    projector: np.ndarray


def flagged_unravel(spec: NoiseSpec) -> tuple[UnravelOutcome, ...]:
    """Per-site outcome family of the flagged dephasing channel.

    Weights are the flag probabilities; Born factors ``Tr(P rho)`` multiply the
    measured weights downstream. Zero-weight outcomes are dropped.
    """
    if spec.kind != "flagged_dephasing":
        raise ArgumentError(f"unraveling requires flagged_dephasing, got {spec.kind}")
    s = PAULI[spec.axis]
    out = []
    if spec.p < 1:
        out.append(UnravelOutcome("0", 1.0 - spec.p, PAULI["i"]))
    if spec.p > 0:
        out.append(UnravelOutcome("+", spec.p, (PAULI["i"] + s) / 2))
        out.append(UnravelOutcome("-", spec.p, (PAULI["i"] - s) / 2))
    return tuple(out)


def flagged_average(rho: DensityMatrix, spec: NoiseSpec, sites: Sequence[int], offset: int = 0) -> DensityMatrix:
    """Flag-discarded average of the unraveled channel, site by site.

    Each site maps to ``(1-p) rho + p (P+ rho P+ + P- rho P-)``.
    """
    fam = flagged_unravel(spec)
    kraus = [np.sqrt(o.weight) * o.projector for o in fam]
    m = rho.matrix
    for s in sites:
        m = apply_kraus_matrix(m, rho.dims, kraus, offset + int(s))
    return DensityMatrix(0.5 * (m + m.conj().T), rho.dims)
