import numpy as np
import pytest

from cftqec.codespace import load_codespace, make_codespace, max_entangled_state, projector, save_codespace
from cftqec.densealg import PureState, entropy, partial_trace
from cftqec.errors import ArgumentError, ConstructionError
from cftqec.models import ising_states

from conftest import ising_code, random_state


@pytest.mark.parametrize("labels", [("I", "epsilon"), ("I", "sigma")])
def test_ising_codes_valid(labels):
    code = ising_code(8, labels)
    assert code.D == 2 and code.n == 8 and code.labels == labels
    V = code.matrix
    assert np.max(np.abs(V.conj() @ V.T - np.eye(2))) < 1e-8


def test_duplicate_state_rejected():
    s = ising_states(6, ("I",))[0]
    with pytest.raises(ConstructionError):
        make_codespace([s, s])


def test_small_residual_repaired(rng):
    a, b = ising_states(6, ("I", "epsilon"))
    noisy = PureState.normalized(b.amplitudes + 1e-8 * a.amplitudes, b.dims)
    code = make_codespace([a, noisy])
    assert abs(np.vdot(code.matrix[0], code.matrix[1])) < 1e-14


def test_phase_convention(rng):
    v = random_state(rng, 16) * np.exp(0.7j)
    w = random_state(rng, 16)
    w = w - np.vdot(v, w) * v
    code = make_codespace([PureState.qubits(v), PureState.normalized(w, (2,) * 4)])
    for c in code.matrix:
        i = np.argmax(np.abs(c))
        assert abs(c[i].imag) < 1e-15 and c[i].real > 0


def test_max_entangled_state():
    code = ising_code(6)
    psi = max_entangled_state(code)
    assert psi.dims == (2,) + (2,) * 6
    assert abs(np.vdot(psi.amplitudes, psi.amplitudes) - 1) < 1e-12
    rho = psi.density()
    assert entropy(partial_trace(rho, [0])) == pytest.approx(np.log(2), abs=1e-10)
    rho_q = partial_trace(rho, range(1, 7))
    assert np.max(np.abs(rho_q.matrix - projector(code) / 2)) < 1e-10


def test_projector_properties(rng):
    code = ising_code(6)
    P = projector(code)
    assert np.trace(P).real == pytest.approx(2, abs=1e-12)
    assert np.max(np.abs(P @ P - P)) < 1e-9
    assert np.max(np.abs(P - P.conj().T)) < 1e-12
    assert np.linalg.matrix_rank(P, tol=1e-8) == 2
    assert np.allclose(P @ code.matrix[0], code.matrix[0])
    v = random_state(rng, 64)
    for c in code.matrix:
        v = v - np.vdot(c, v) * c
    assert np.max(np.abs(P @ v)) < 1e-9


def test_state_file_roundtrip(tmp_path):
    code = ising_code(6, ("I", "sigma"))
    path = tmp_path / "code.bin"
    save_codespace(path, code)
    raw = path.read_bytes()
    assert raw[:4] == b"CFTC"
    back = load_codespace(path)
    assert back.labels == code.labels and back.n == 6
    assert np.array_equal(back.matrix, code.matrix)


def test_state_file_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"nope" + bytes(40))
    with pytest.raises(ArgumentError):
        load_codespace(path)
