"""Code subspaces spanned by a few many-body eigenstates.

State file format (little-endian)::

    offset  size  content
    0       4     magic b"CFTC"
    4       4     uint32 format version (1)
    8       4     uint32 n (qubits per codeword)
    12      4     uint32 D (number of codewords)
    16      4     uint32 L, byte length of the label string
    20      L     UTF-8 labels joined by ","
    20+L    ...   D * 2^n complex amplitudes as float64 pairs (re, im)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .densealg import PureState
from .errors import ArgumentError, ConstructionError, ResourceError

ORTHONORMAL_TOL = 1e-8
REPAIR_TOL = 1e-6
EXACT_TOL = 1e-13
PROJECTOR_MAX_SITES = 13

_MAGIC = b"CFTC"
_VERSION = 1


@dataclass(frozen=True)
class CodeSpace:
    codewords: tuple[PureState, ...]
    n: int
    labels: tuple[str, ...]

    @property
    def D(self) -> int:
        return len(self.codewords)

    @property
    def matrix(self) -> np.ndarray:
        """Codewords as rows of a (D, 2^n) array."""
        return np.array([c.amplitudes for c in self.codewords])

    def __str__(self):
        return "{" + ",".join(self.labels) + f"}}@n={self.n}"


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    i = np.argmax(np.abs(v))
    return v * (abs(v[i]) / v[i])


def make_codespace(states: Sequence[PureState], labels: Optional[Sequence[str]] = None) -> CodeSpace:
    """Validate, re-orthonormalize and phase-fix a list of codeword states.

    States that are orthonormal up to 1e-6 are cleaned by Gram-Schmidt (in the
    given order); anything worse is rejected. Already exact inputs are left
    bitwise untouched so state files round-trip exactly.
    """
    states = list(states)
    if len(states) < 2:
        raise ConstructionError("a code needs at least two codewords")
    dims = states[0].dims
    if any(s.dims != dims for s in states) or any(d != 2 for d in dims):
        raise ConstructionError("codewords must share one qubit register")
    if labels is None:
        labels = [f"c{i}" for i in range(len(states))]
    labels = tuple(str(x) for x in labels)
    if len(labels) != len(states):
        raise ConstructionError("one label per codeword is required")
    V = np.array([s.amplitudes for s in states])
    gram = V.conj() @ V.T
    residual = np.max(np.abs(gram - np.eye(len(states))))
    if residual > REPAIR_TOL:
        raise ConstructionError(f"codewords are not orthonormal (residual {residual:.2e})")
    out = []
    for v in V:
        w = v.copy()
        if residual > EXACT_TOL:
            for u in out:
                w = w - np.vdot(u, w) * u
            w = w / np.linalg.norm(w)
        out.append(_canonical_phase(w))
    words = tuple(PureState(w, dims) for w in out)
    return CodeSpace(words, len(dims), labels)


def max_entangled_state(code: CodeSpace) -> PureState:
    """``D^{-1/2} sum_a |a>_R |phi_a>_Q`` with dims ``[D, 2, ..., 2]``."""
    psi = code.matrix.ravel() / np.sqrt(code.D)
    return PureState(psi, (code.D,) + (2,) * code.n)


def projector(code: CodeSpace) -> np.ndarray:
    """Dense code projector ``P = sum_a |phi_a><phi_a|`` (trace D, not normalized)."""
    if code.n > PROJECTOR_MAX_SITES:
        raise ResourceError(f"dense projector limited to n <= {PROJECTOR_MAX_SITES}")
    V = code.matrix
    return V.T @ V.conj()


def save_codespace(path, code: CodeSpace) -> None:
    label_bytes = ",".join(code.labels).encode()
    header = _MAGIC + struct.pack("<IIII", _VERSION, code.n, code.D, len(label_bytes))
    data = code.matrix.astype("<c16").tobytes()
    Path(path).write_bytes(header + label_bytes + data)


def load_codespace(path) -> CodeSpace:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ArgumentError(f"{path}: not a codeword state file")
    version, n, D, nlab = struct.unpack("<IIII", raw[4:20])
    if version != _VERSION:
        raise ArgumentError(f"{path}: unsupported state file version {version}")
    labels = raw[20:20 + nlab].decode().split(",")
    body = raw[20 + nlab:]
    if len(body) != 16 * D * 2**n:
        raise ArgumentError(f"{path}: truncated or oversized amplitude block")
    V = np.frombuffer(body, dtype="<c16").reshape(D, 2**n)
    return make_codespace([PureState(v, (2,) * n) for v in V], labels)
