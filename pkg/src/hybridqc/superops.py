"""Operators and superoperators for the quantum factor.

Density matrices are vectorised row-major (``X.reshape(-1)``), so that
``vec(A @ X @ B) == kron(A, B.T) @ vec(X)``.
"""
import numpy as np

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def vec(x):
    x = np.asarray(x)
    return x.reshape(x.shape[:-2] + (-1,))


def unvec(v, d):
    v = np.asarray(v)
    return v.reshape(v.shape[:-1] + (d, d))


def left(a):
    """Superoperator of ``X -> A X``."""
    a = np.asarray(a, dtype=complex)
    return np.kron(a, np.eye(a.shape[0]))


def right(b):
    """Superoperator of ``X -> X B``."""
    b = np.asarray(b, dtype=complex)
    return np.kron(np.eye(b.shape[0]), b.T)


def sandwich(a, b):
    """Superoperator of ``X -> A X B``."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex).T)


def commutator(h):
    """Superoperator of ``X -> -i [H, X]``."""
    return -1j * (left(h) - right(h))


def anticommutator(a):
    return left(a) + right(a)


def dissipator(v):
    """Superoperator of ``X -> V X V^+ - {V^+ V, X}/2``."""
    v = np.asarray(v, dtype=complex)
    vv = dagger(v) @ v
    return sandwich(v, dagger(v)) - 0.5 * anticommutator(vv)


def gell_mann_basis(d):
    """Traceless Hermitian basis of ``d*d - 1`` matrices (Pauli matrices for d=2)."""
    if d == 2:
        return [SIGMA_X.copy(), SIGMA_Y.copy(), SIGMA_Z.copy()]
    out = []
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1
            out.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1j
            m[k, j] = 1j
            out.append(m)
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[np.arange(l), np.arange(l)] = 1
        m[l, l] = -l
        out.append(m * np.sqrt(2.0 / (l * (l + 1))))
    return out


def is_hermitian(a, tol=1e-10):
    a = np.asarray(a)
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= tol)
