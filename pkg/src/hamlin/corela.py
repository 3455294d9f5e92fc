"""Dense complex linear algebra: exact matrix functions and small helpers.

Matrix exponentials go through Hermitian eigendecomposition only, so every
returned evolution is unitary up to eigensolver error.
"""

import numpy as np

from .errors import DimensionError, HermiticityError

HERM_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
HAD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S_GATE = np.array([[1, 0], [0, 1j]], dtype=complex)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)


def as_cmat(M):
    M = np.asarray(M, dtype=complex)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.size == 0:
        raise DimensionError(f"expected a nonempty matrix, got shape {M.shape}")
    return M


def as_square(M):
    M = as_cmat(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    return M


def dagger(M):
    return np.conj(M).T


def is_hermitian(M, tol=HERM_TOL):
    M = np.asarray(M)
    return M.shape[0] == M.shape[1] and np.max(np.abs(M - dagger(M)), initial=0.0) <= tol


def is_unitary(M, tol=1e-10):
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    return spectral_norm(dagger(M) @ M - np.eye(M.shape[0])) <= tol


def spectral_norm(M):
    """Largest singular value."""
    M = as_cmat(M)
    return float(np.linalg.norm(M, 2))


def _hermitian_input(H, symmetrize):
    H = as_square(H)
    if symmetrize:
        return (H + dagger(H)) / 2
    if not is_hermitian(H):
        dev = np.max(np.abs(H - dagger(H)))
        raise HermiticityError(f"matrix is not Hermitian (max |H - H^dag| = {dev:.3e})")
    return H


def eig_hermitian(H, symmetrize=False):
    """Ascending eigenvalues and unitary eigenvectors of a Hermitian matrix."""
    H = _hermitian_input(H, symmetrize)
    lam, Q = np.linalg.eigh(H)
    return lam, Q


def svd(A):
    """A = U diag(s) V^dag with s descending."""
    A = as_cmat(A)
    U, s, Vh = np.linalg.svd(A)
    return U, s, dagger(Vh)


def expm_hermitian(H, t=1.0, symmetrize=False):
    """exp(-i t H) via eigendecomposition."""
    lam, Q = eig_hermitian(H, symmetrize=symmetrize)
    return (Q * np.exp(-1j * t * lam)) @ dagger(Q)


def hermitian_function(H, f, symmetrize=False):
    """Apply a scalar function to the spectrum of a Hermitian matrix."""
    lam, Q = eig_hermitian(H, symmetrize=symmetrize)
    return (Q * f(lam)) @ dagger(Q)


def dilate(A):
    """Hermitian dilation [[0, A^dag], [A, 0]]."""
    A = as_square(A)
    n = A.shape[0]
    D = np.zeros((2 * n, 2 * n), dtype=complex)
    D[:n, n:] = dagger(A)
    D[n:, :n] = A
    return D


def commutator(J, K):
    J, K = as_square(J), as_square(K)
    if J.shape != K.shape:
        raise DimensionError(f"shape mismatch {J.shape} vs {K.shape}")
    return J @ K - K @ J


def anticommutator(J, K):
    J, K = as_square(J), as_square(K)
    if J.shape != K.shape:
        raise DimensionError(f"shape mismatch {J.shape} vs {K.shape}")
    return J @ K + K @ J


def kron(*ops):
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def blkdiag(*blocks):
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=complex)
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i:i + k, i:i + k] = b
        i += k
    return out


def random_hermitian(rng, n, scale=1.0):
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = (G + dagger(G)) / 2
    return scale * H / spectral_norm(H)


def random_matrix(rng, n, scale=1.0):
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * G / spectral_norm(G)


def random_unitary(rng, n):
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))
