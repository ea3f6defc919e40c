"""Coherent information of noisy code states.

``I_c = S(Q) - S(RQ)`` for ``rho_RQ = N(|psi_RQ><psi_RQ|)`` with ``|psi_RQ>`` the
reference-entangled code state. Several evaluation paths are provided:

* ``dense``: explicit Kraus application on the full R+Q density matrix.
* ``gram``: single-axis dephasing as a mixture of Pauli strings. S(RQ) comes
  from the 2^n Gram matrix of the string-applied states and S(Q) from the
  rotated code projector damped entrywise.
* ``flag_enum`` / ``flag_mc``: flagged dephasing, where the coherent
  information is the average reference entropy over flag/outcome strings.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .channels import NoiseSpec, apply_product_channel
from .codespace import CodeSpace, max_entangled_state
from .densealg import DensityMatrix, entropy, entropy_from_spectrum, partial_trace
from .errors import ArgumentError, NumericalError, ResourceError
from .pauli import popcounts, rotate, string_elements
from .rng import chunk_ranges, trajectory_rng

METHODS = ("dense", "gram", "flag_enum", "flag_mc", "gaussian")
DENSE_MAX_QUBITS = 13
GRAM_MAX_SITES = 12
RENYI2_MAX_SITES = 20
FLAG_ENUM_MAX_SITES = 10
MC_MAX_SITES = 20
MC_MIN_SAMPLES = 100


@dataclass(frozen=True)
class CIEstimate:
    value: float
    stderr: float = 0.0
    method: str = "dense"
    samples: int = 0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ArgumentError(f"unknown method {self.method!r}")
        if not self.stderr >= 0:
            raise NumericalError(f"stderr must be nonnegative, got {self.stderr}")

    def to_dict(self) -> dict:
        return asdict(self)


def coherent_information(rho_RQ: DensityMatrix, order: float = 1.0) -> CIEstimate:
    """``S(Q) - S(RQ)``; subsystem 0 of ``rho_RQ`` is the reference."""
    if len(rho_RQ.dims) < 2:
        raise ArgumentError("rho_RQ needs a reference subsystem followed by the physical register")
    rho_Q = partial_trace(rho_RQ, range(1, len(rho_RQ.dims)))
    return CIEstimate(entropy(rho_Q, order) - entropy(rho_RQ, order), method="dense")


def _dephasing_weights(n: int, p: float) -> np.ndarray:
    """Probability of Pauli string s under independent dephasing: (p/2)^|s| (1-p/2)^(n-|s|)."""
    k = popcounts(n)
    return (p / 2) ** k * (1 - p / 2) ** (n - k)


def _require_dephasing(spec: NoiseSpec):
    if spec.kind not in ("dephasing", "flagged_dephasing"):
        raise ArgumentError(f"this path needs single-axis dephasing, got {spec.kind}")


def _ci_dense(code: CodeSpace, spec: NoiseSpec, order: float) -> CIEstimate:
    if code.n + math.log2(code.D) > DENSE_MAX_QUBITS + 1e-9:
        raise ResourceError(f"dense path limited to n + log2 D <= {DENSE_MAX_QUBITS}")
    rho = max_entangled_state(code).density()
    rho = apply_product_channel(rho, spec, range(code.n), offset=1)
    return coherent_information(rho, order)


def _ci_gram(code: CodeSpace, spec: NoiseSpec, order: float) -> CIEstimate:
    _require_dephasing(spec)
    n, D, p = code.n, code.D, spec.p
    if n > GRAM_MAX_SITES:
        raise ResourceError(f"Gram path limited to n <= {GRAM_MAX_SITES}")
    M = string_elements(code.matrix, spec.axis)
    g = np.trace(M, axis1=1, axis2=2) / D
    sw = np.sqrt(_dephasing_weights(n, p))
    idx = np.arange(2**n)
    G = sw[:, None] * sw[None, :] * g[np.bitwise_xor.outer(idx, idx)]
    s_rq = entropy_from_spectrum(np.linalg.eigvalsh(G), order)
    del G
    r = rotate(code.matrix, spec.axis)
    rho_q = (r.T @ r.conj()) / D
    rho_q *= (1 - p) ** popcounts(n)[np.bitwise_xor.outer(idx, idx)]
    s_q = entropy_from_spectrum(np.linalg.eigvalsh(rho_q), order)
    return CIEstimate(s_q - s_rq, method="gram")


def ci_unflagged_exact(code: CodeSpace, spec: NoiseSpec, method: str = "auto", order: float = 1.0) -> CIEstimate:
    """Exact coherent information of the product channel on every site.

    A flagged spec is treated with its flag discarded. ``method='auto'`` picks
    the Gram path for dephasing and the dense path otherwise.
    """
    if method == "auto":
        method = "gram" if spec.kind in ("dephasing", "flagged_dephasing") and code.n <= GRAM_MAX_SITES else "dense"
    if method == "dense":
        return _ci_dense(code, spec, order)
    if method == "gram":
        return _ci_gram(code, spec, order)
    raise ArgumentError(f"unknown exact method {method!r}")


def ci_renyi2(code: CodeSpace, spec: NoiseSpec) -> CIEstimate:
    """Renyi-2 coherent information under dephasing in closed form.

    With ``g(u) = Tr M_u / D`` and ``c(u) = sum_s w_s w_{s^u}``::

        Tr rho_RQ^2 = sum_u |g(u)|^2 c(u)
        Tr rho_Q^2  = D^-2 sum_u c(u) sum_ab |M_u[a, b]|^2
    """
    _require_dephasing(spec)
    n, D, p = code.n, code.D, spec.p
    if n > RENYI2_MAX_SITES:
        raise ResourceError(f"Renyi-2 path limited to n <= {RENYI2_MAX_SITES}")
    M = string_elements(code.matrix, spec.axis)
    a0, a1 = 1 - p / 2, p / 2
    k = popcounts(n)
    c = (2 * a0 * a1) ** k * (a0**2 + a1**2) ** (n - k)
    g = np.trace(M, axis1=1, axis2=2) / D
    pur_rq = float(np.sum(np.abs(g) ** 2 * c))
    pur_q = float(np.sum(c * np.sum(np.abs(M) ** 2, axis=(1, 2)))) / D**2
    return CIEstimate(float(np.log(pur_rq) - np.log(pur_q)), method="gram")


def ci_flagged_exact(code: CodeSpace, spec: NoiseSpec) -> CIEstimate:
    """Exact average of S(R) over flag subsets and measurement outcomes."""
    if spec.kind != "flagged_dephasing":
        raise ArgumentError(f"flagged enumeration needs flagged_dephasing, got {spec.kind}")
    n, D, p = code.n, code.D, spec.p
    if n > FLAG_ENUM_MAX_SITES:
        raise ResourceError(f"flag enumeration limited to n <= {FLAG_ENUM_MAX_SITES}")
    r = rotate(code.matrix, spec.axis)
    # T[x, a, b] = phi_a(x) conj(phi_b(x)), rho_R[a, b] ~ sum_x over outcome-compatible x
    T = (r.T[:, :, None] * r.T.conj()[:, None, :]).reshape((2,) * n + (D, D))
    total, mass = 0.0, 0.0
    for S in range(2**n):
        measured = [i for i in range(n) if (S >> (n - 1 - i)) & 1]
        k = len(measured)
        w = (1 - p) ** (n - k) * p**k
        if w == 0:
            continue
        unmeasured = tuple(i for i in range(n) if i not in measured)
        blocks = T.sum(axis=unmeasured).reshape(-1, D, D) / D
        tr = np.trace(blocks, axis1=1, axis2=2).real
        keep = tr > 1e-300
        lam = np.linalg.eigvalsh(blocks[keep] / tr[keep, None, None])
        ent = np.array([entropy_from_spectrum(x) for x in lam])
        total += w * float(np.dot(tr[keep], ent))
        mass += w * float(np.sum(tr))
    if abs(mass - 1) > 1e-10:
        raise NumericalError(f"outcome weights sum to {mass!r}, expected 1")
    return CIEstimate(total, method="flag_enum")


def _trajectory(amps: np.ndarray, n: int, p: float, rng: np.random.Generator) -> float:
    """One sample of S(R): Bernoulli flags, then Born-rule outcomes on flagged sites."""
    A = amps
    flags = rng.random(n) < p
    for j in np.flatnonzero(flags)[::-1]:
        a0 = np.take(A, 0, axis=j + 1)
        a1 = np.take(A, 1, axis=j + 1)
        n0 = float(np.vdot(a0, a0).real)
        n1 = float(np.vdot(a1, a1).real)
        A = a0 if rng.random() * (n0 + n1) < n0 else a1
    F = A.reshape(A.shape[0], -1)
    G = F.conj() @ F.T
    # rho_R[a, b] = <phi_b|phi_a>; same spectrum as G
    lam = np.linalg.eigvalsh(G / np.trace(G).real)
    return entropy_from_spectrum(lam)


def ci_flagged_mc(code: CodeSpace, spec: NoiseSpec, samples: int, seed: int, workers: int = 1) -> CIEstimate:
    """Monte-Carlo estimate of the flagged coherent information.

    Trajectory t uses :func:`cftqec.rng.trajectory_rng` (seed, t); results are
    stored by index and reduced in index order, so the estimate is identical
    for any ``workers``.
    """
    if spec.kind != "flagged_dephasing":
        raise ArgumentError(f"trajectory sampling needs flagged_dephasing, got {spec.kind}")
    if samples < MC_MIN_SAMPLES:
        raise ArgumentError(f"need at least {MC_MIN_SAMPLES} samples, got {samples}")
    if seed is None:
        raise ArgumentError("a seed is required for Monte-Carlo estimates")
    n, D = code.n, code.D
    if n > MC_MAX_SITES:
        raise ResourceError(f"trajectory sampling limited to n <= {MC_MAX_SITES}")
    amps = rotate(code.matrix, spec.axis).reshape((D,) + (2,) * n)
    values = np.empty(samples)

    def run(lo, hi):
        for t in range(lo, hi):
            values[t] = _trajectory(amps, n, spec.p, trajectory_rng(seed, t))

    ranges = chunk_ranges(samples, 4 * max(1, workers))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(lambda r: run(*r), ranges))
    else:
        for lo, hi in ranges:
            run(lo, hi)
    if np.all(values == values[0]):
        # avoid rounding noise from the mean when every trajectory agrees
        return CIEstimate(float(values[0]), 0.0, "flag_mc", int(samples), int(seed))
    stderr = float(np.std(values, ddof=1) / np.sqrt(samples))
    return CIEstimate(float(np.mean(values)), stderr, "flag_mc", int(samples), int(seed))


def fidelity_bound(ic: CIEstimate, D: int) -> float:
    """Entanglement-fidelity lower bound ``1 - 2 sqrt(log D - I_c)``, clamped to [0, 1]."""
    eps = max(0.0, math.log(D) - ic.value)
    return min(1.0, max(0.0, 1.0 - 2.0 * math.sqrt(eps)))
