import numpy as np
import pytest

from cftqec.codespace import make_codespace
from cftqec.densealg import PureState
from cftqec.errors import ArgumentError, DomainError, FitError, ResourceError
from cftqec.perturbation import (JumpSet, b2_coefficients, b_coefficient, dephasing_jumps, exponent_fit,
                                 extract_plogp_coefficient, perturbative_coefficients)

from conftest import ising_code, random_state
from oracles import X, Y, Z, site_op, dense_b2


def dense_b(V, Ls):
    D = V.shape[0]
    P = V.T @ V.conj()
    return sum((D * np.trace(L @ P @ L.conj().T @ P) - np.trace(L @ P) * np.trace(L.conj().T @ P)).real
               for L in Ls) / D**2


def random_code(rng, n, D):
    A = rng.normal(size=(2**n, D)) + 1j * rng.normal(size=(2**n, D))
    Q, _ = np.linalg.qr(A)
    return make_codespace([PureState.qubits(Q[:, i]) for i in range(D)])


@pytest.mark.parametrize("D", [2, 3])
def test_b_and_b2_match_dense_traces(rng, D):
    n = 4
    code = random_code(rng, n, D)
    for axis, s in zip("xyz", (X, Y, Z)):
        J = dephasing_jumps(axis, n)
        Ls = [site_op(s, i, n) / np.sqrt(2) for i in range(n)]
        assert b_coefficient(code, J) == pytest.approx(dense_b(code.matrix, Ls), abs=1e-12)
        assert np.allclose(b2_coefficients(code, J), dense_b2(code.matrix, Ls), atol=1e-12)


def test_identity_jumps_vanish():
    code = ising_code(6)
    J = JumpSet(tuple((i, np.eye(2) / np.sqrt(2)) for i in range(6)))
    assert abs(b_coefficient(code, J)) < 1e-14
    assert np.allclose(b2_coefficients(code, J), 0, atol=1e-14)


def test_b2_vanishes_on_stabilizer_toy_code():
    # repetition code |000>, |111> against single-site z-jumps with
    # nonzero code blocks only proportional to the identity pattern tested
    # via the bit-flip-free GHZ pair (|000> +- |111>)/sqrt2 and x-jumps
    n = 3
    v0 = np.zeros(8); v0[0] = v0[7] = 1 / np.sqrt(2)
    v1 = np.zeros(8); v1[0] = 1 / np.sqrt(2); v1[7] = -1 / np.sqrt(2)
    # x-errors on single sites: P X_i P = 0, P X_i X_j P = 0 for i != j, X_i X_i = I
    code = make_codespace([PureState.qubits(v0), PureState.qubits(v1)])
    J = dephasing_jumps("x", n)
    assert abs(b_coefficient(code, J)) < 1e-14
    assert np.allclose(b2_coefficients(code, J), 0, atol=1e-14)


def test_b_nonnegative(rng):
    for _ in range(5):
        code = random_code(rng, 3, 2)
        for axis in "xyz":
            assert b_coefficient(code, dephasing_jumps(axis, 3)) >= -1e-10


def test_b_frozen_ising_values():
    code = ising_code(8)
    # both codewords are parity even and X, Y flip parity
    assert b_coefficient(code, dephasing_jumps("x", 8)) == 0.0
    assert b_coefficient(code, dephasing_jumps("y", 8)) == 0.0
    assert b_coefficient(code, dephasing_jumps("z", 8)) == pytest.approx(0.25, abs=1e-12)
    b2 = b2_coefficients(code, dephasing_jumps("y", 8))
    assert b2[2] == pytest.approx(0.04217260874303891, abs=1e-10)


def test_b2_rejects_non_unitary_jumps():
    code = ising_code(6)
    J = JumpSet(((0, np.array([[0, 1], [0, 0]])),))
    with pytest.raises(ArgumentError):
        b2_coefficients(code, J)


def test_b2_size_ceiling():
    code = ising_code(17)
    with pytest.raises(ResourceError):
        b2_coefficients(code, dephasing_jumps("z", 17))


def test_jump_site_validation():
    code = ising_code(6)
    with pytest.raises(ArgumentError):
        b_coefficient(code, dephasing_jumps("z", 7))


def test_coefficients_record():
    rec = perturbative_coefficients(ising_code(6), dephasing_jumps("z", 6))
    assert rec.n == 6 and len(rec.b2_terms) == 3 and rec.b1 > 0


def test_plogp_synthetic_recovery():
    ps = np.logspace(-5, -3, 6)
    pts = [(p, np.log(2) + 3 * p * np.log(p) + 0.1 * p) for p in ps]
    assert extract_plogp_coefficient(pts, 2) == pytest.approx(3, abs=1e-6)


def test_plogp_rejects_zero_and_narrow_grids():
    with pytest.raises(DomainError):
        extract_plogp_coefficient([(0, 0.69), (1e-4, 0.69), (1e-3, 0.69), (1e-2, 0.69)], 2)
    with pytest.raises(FitError):
        extract_plogp_coefficient([(1e-3, 0.6), (1.1e-3, 0.6), (1.2e-3, 0.6), (1.3e-3, 0.6)], 2)
    with pytest.raises(FitError):
        extract_plogp_coefficient([(1e-3, 0.6), (1e-2, 0.6)], 2)


def test_exponent_fit():
    ns = np.array([8, 10, 12, 16])
    assert exponent_fit(list(zip(ns, 2 * ns**0.75)))[0] == pytest.approx(0.75, abs=1e-12)
    assert exponent_fit(list(zip(ns, 5 / ns)))[0] == pytest.approx(-1, abs=1e-12)
    assert exponent_fit(list(zip(ns, -5 / ns)))[0] == pytest.approx(-1, abs=1e-12)
    with pytest.raises(FitError):
        exponent_fit(list(zip(ns, [1, -1, 1, 1])))
    with pytest.raises(FitError):
        exponent_fit([(8, 1.0), (10, 2.0)])
