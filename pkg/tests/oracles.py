"""Independent brute-force oracles used by the test suite."""

import itertools

import numpy as np

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def kron_all(ops):
    out = np.array([[1.0 + 0j]])
    for o in ops:
        out = np.kron(out, o)
    return out


def site_op(op, site, n):
    return kron_all([op if i == site else I2 for i in range(n)])


def partial_trace_loops(rho, dims, keep):
    """Partial trace by explicit index summation."""
    dims = list(dims)
    keep = sorted(keep)
    kd = [dims[i] for i in keep]
    out = np.zeros((int(np.prod(kd)),) * 2, dtype=complex)
    for a in itertools.product(*[range(d) for d in dims]):
        for b in itertools.product(*[range(d) for d in dims]):
            if any(a[i] != b[i] for i in range(len(dims)) if i not in keep):
                continue
            ia = np.ravel_multi_index(a, dims)
            ib = np.ravel_multi_index(b, dims)
            ka = np.ravel_multi_index([a[i] for i in keep], kd)
            kb = np.ravel_multi_index([b[i] for i in keep], kd)
            out[ka, kb] += rho[ia, ib]
    return out


def vn_entropy(rho):
    lam = np.linalg.eigvalsh(rho)
    lam = lam[lam > 1e-14]
    return float(-np.sum(lam * np.log(lam)))


def jw_majoranas(modes):
    """``c_{2j} = Z..Z X_j``, ``c_{2j+1} = Z..Z Y_j`` with mode 0 the leftmost qubit."""
    cs = []
    for j in range(modes):
        for p in (X, Y):
            cs.append(kron_all([Z] * j + [p] + [I2] * (modes - j - 1)))
    return cs


def jw_annihilator(j, modes):
    c = jw_majoranas(modes)
    return (c[2 * j] + 1j * c[2 * j + 1]) / 2


def dense_covariance(psi_or_rho, cs):
    rho = psi_or_rho if psi_or_rho.ndim == 2 else np.outer(psi_or_rho, psi_or_rho.conj())
    N = len(cs)
    M = np.zeros((N, N))
    for j in range(N):
        for k in range(N):
            M[j, k] = np.real(0.5j * np.trace(rho @ (cs[j] @ cs[k] - cs[k] @ cs[j])))
    return M


def dense_code_state(m, u):
    """(1 + r^dag b^dag)|I, 0>/sqrt(2) by explicit Jordan-Wigner matrices."""
    from cftqec.models import build_majorana_chain

    A = build_majorana_chain(m)
    cs = jw_majoranas(m + 1)
    H = sum(0.25j * A[j, k] * cs[j] @ cs[k] for j in range(2 * m) for k in range(2 * m))
    # H acts trivially on the reference mode; pick its ground state with R empty
    e, V = np.linalg.eigh(H)
    empty_R = kron_all([I2] * m + [np.diag([1.0, 0.0])])
    Hp = H + 1e3 * (np.eye(len(H)) - empty_R)
    e, V = np.linalg.eigh(Hp)
    gs = V[:, 0]
    b = sum(u[j] * cs[j] for j in range(2 * m))
    r = (cs[2 * m] + 1j * cs[2 * m + 1]) / 2
    psi = gs + r.conj().T @ b.conj().T @ gs
    return psi / np.linalg.norm(psi), cs, H


def dense_damp(rho, p, modes, total):
    for j in modes:
        a = jw_annihilator(j, total)
        k0 = np.eye(len(rho)) + (np.sqrt(1 - p) - 1) * a.conj().T @ a
        k1 = np.sqrt(p) * a
        rho = k0 @ rho @ k0.conj().T + k1 @ rho @ k1.conj().T
    return rho


def dense_b2(V, Ls):
    """Second-order coefficients from dense projector traces, literally as displayed."""
    D = V.shape[0]
    P = V.T @ V.conj()
    tr = np.trace
    b1 = b2 = b3 = 0
    for Li in Ls:
        for Lj in Ls:
            Lid, Ljd = Li.conj().T, Lj.conj().T
            b1 += D**3 * tr(P @ Li @ P @ Lid @ P @ Lj @ P @ Ljd) - tr(P @ Li) * tr(P @ Lid) * tr(P @ Lj) * tr(P @ Ljd)
            b2 += D**2 * tr(P @ Li @ P @ Lid @ Lj @ P @ Ljd) - tr(P @ Li) * tr(P @ Lid @ Lj) * tr(P @ Ljd)
            b3 += D * tr(P @ Li @ Lj @ P @ Lid @ Ljd) - tr(P @ Li @ Lj) * tr(P @ Lid @ Ljd)
    return (b1 / (4 * D**4)).real, (b2 / (4 * D**3)).real, (b3 / (8 * D**2)).real
