"""Small-p expansion of the coherent information.

``I_c(p, n) = log D + b(n) p log p + b2(n) p^2 log p + regular``. The
coefficients reduce to D x D code-space matrices of the jump operators:
``a_i[a, b] = <phi_a|L_i|phi_b>`` and, at second order, the two-jump blocks
``<phi_a|L_i L_j|phi_b>`` and ``<phi_a|L_i^dag L_j|phi_b>``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .codespace import CodeSpace
from .errors import ArgumentError, DomainError, FitError, ResourceError
from .pauli import PAULI, apply_single_site, check_axis

B2_MAX_SITES = 16
B2_MAX_D = 4
FIT_MAX_COND = 1e8
UNITARY_TOL = 1e-12


@dataclass(frozen=True)
class JumpSet:
    """Single-site jump operators ``(site, 2x2 matrix)``."""

    operators: tuple
    note: str = ""

    def __post_init__(self):
        ops = []
        for site, op in self.operators:
            a = np.array(op, dtype=complex)
            if a.shape != (2, 2):
                raise ArgumentError(f"jump on site {site} is not a 2x2 matrix")
            a.setflags(write=False)
            ops.append((int(site), a))
        object.__setattr__(self, "operators", tuple(ops))

    def adjoints(self):
        return tuple((s, op.conj().T) for s, op in self.operators)

    def check_sites(self, n: int):
        for s, _ in self.operators:
            if not 0 <= s < n:
                raise ArgumentError(f"jump site {s} out of range for n={n}")


def dephasing_jumps(axis: str, n: int) -> JumpSet:
    """``sigma_axis / sqrt(2)`` on every site (Lindblad form of dephasing)."""
    s = PAULI[check_axis(axis)] / np.sqrt(2)
    return JumpSet(tuple((i, s) for i in range(n)), note=f"{axis}-dephasing, L = sigma/sqrt(2)")


def _applied(code: CodeSpace, jumps: Iterable) -> np.ndarray:
    """``out[i, a] = L_i |phi_a>`` as an (len(jumps), D, 2^n) array."""
    V = code.matrix
    return np.array([apply_single_site(V, op, s, code.n) for s, op in jumps])


def _code_blocks(code: CodeSpace, jumps: JumpSet) -> np.ndarray:
    jumps.check_sites(code.n)
    LV = _applied(code, jumps.operators)
    return np.einsum("ax,ibx->iab", code.matrix.conj(), LV)


def b_coefficient(code: CodeSpace, jumps: JumpSet) -> float:
    """``b = D^-2 sum_i [D sum_ab |a_i[a,b]|^2 - |tr a_i|^2]``."""
    D = code.D
    a = _code_blocks(code, jumps)
    terms = D * np.sum(np.abs(a) ** 2, axis=(1, 2)) - np.abs(np.trace(a, axis1=1, axis2=2)) ** 2
    return float(np.sum(terms) / D**2)


def b2_coefficients(code: CodeSpace, jumps: JumpSet) -> tuple[float, float, float]:
    """The three second-order coefficients ``(b2_1, b2_2, b2_3)``.

    Valid for jumps with ``L^dag L`` proportional to the identity, as assumed
    by the second-order expansion.
    """
    n, D = code.n, code.D
    if n > B2_MAX_SITES or D > B2_MAX_D:
        raise ResourceError(f"b2 limited to n <= {B2_MAX_SITES}, D <= {B2_MAX_D}")
    jumps.check_sites(n)
    for s, op in jumps.operators:
        ll = op.conj().T @ op
        if np.max(np.abs(ll - ll[0, 0] * np.eye(2))) > UNITARY_TOL:
            raise ArgumentError(f"jump on site {s} does not satisfy L^dag L ~ I")
    V = code.matrix
    LV = _applied(code, jumps.operators)          # L_j |phi_b>
    LdV = _applied(code, jumps.adjoints())        # L_i^dag |phi_a>
    k = len(jumps.operators)
    a = np.einsum("ax,ibx->iab", V.conj(), LV)
    # E[i, a, j, b] = <phi_a|L_i L_j|phi_b>,  C[i, a, j, b] = <phi_a|L_i^dag L_j|phi_b>
    E = (LdV.reshape(k * D, -1).conj() @ LV.reshape(k * D, -1).T).reshape(k, D, k, D)
    C = (LV.reshape(k * D, -1).conj() @ LV.reshape(k * D, -1).T).reshape(k, D, k, D)
    tr_a = np.trace(a, axis1=1, axis2=2)
    aad = np.einsum("iab,icb->iac", a, a.conj())   # a_i a_i^dag

    t1 = D**3 * np.einsum("iab,jba->", aad, aad) - np.sum(np.abs(tr_a) ** 2) ** 2
    b21 = t1.real / (4 * D**4)

    tr_c = np.einsum("iaja->ij", C)
    t2 = D**2 * np.einsum("iab,ibjc,jac->", a, C, a.conj()) - np.einsum("i,ij,j->", tr_a, tr_c, tr_a.conj())
    b22 = t2.real / (4 * D**3)

    tr_e = np.einsum("iaja->ij", E)
    t3 = D * np.einsum("iajb,jaib->", E, E.conj()) - np.sum(tr_e * tr_e.T.conj())
    b23 = t3.real / (8 * D**2)
    return float(b21), float(b22), float(b23)


@dataclass(frozen=True)
class PerturbativeCoefficients:
    b1: float
    b2_terms: tuple[float, float, float]
    n: int
    code_label: str

    def __post_init__(self):
        if self.b1 < -1e-10:
            raise FitError(f"first-order coefficient is negative ({self.b1:.3e})")


def perturbative_coefficients(code: CodeSpace, jumps: JumpSet, second_order: bool = True) -> PerturbativeCoefficients:
    b1 = b_coefficient(code, jumps)
    b2 = b2_coefficients(code, jumps) if second_order else (float("nan"),) * 3
    return PerturbativeCoefficients(b1, b2, code.n, str(code))


def extract_plogp_coefficient(points: Sequence[tuple[float, float]], D: int) -> float:
    """Least-squares ``I_c - log D = b p log p + c p``; returns b."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 4:
        raise FitError("need at least four (p, I_c) points")
    p, ic = pts[:, 0], pts[:, 1]
    if np.any(p <= 0):
        raise DomainError("p log p is undefined at p <= 0; drop those points")
    if p.max() / p.min() < 10:
        raise FitError("p values must span at least one decade")
    X = np.column_stack([p * np.log(p), p])
    # column scaling keeps the condition number about the basis, not the units
    scale = np.linalg.norm(X, axis=0)
    Xs = X / scale
    cond = np.linalg.cond(Xs)
    if not cond <= FIT_MAX_COND:
        raise FitError(f"p log p fit is ill-conditioned (condition number {cond:.2e})")
    coef, *_ = np.linalg.lstsq(Xs, ic - np.log(D), rcond=None)
    return float(coef[0] / scale[0])


def exponent_fit(values: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """OLS of ``log|v|`` on ``log n``: returns (slope, intercept, rms residual)."""
    pts = np.asarray(values, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(np.unique(pts[:, 0])) < 3:
        raise FitError("need values at three or more distinct sizes")
    n, v = pts[:, 0], pts[:, 1]
    if np.any(n <= 0):
        raise FitError("sizes must be positive")
    if not (np.all(v > 0) or np.all(v < 0)):
        raise FitError("values must be all positive or all negative (zero or mixed signs found)")
    x, y = np.log(n), np.log(np.abs(v))
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), resid
