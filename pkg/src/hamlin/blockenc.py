"""Hamiltonian block encodings and their exact elementary operations.

A block encoding of A is the unitary W = exp(-i [[0, A^dag], [A, 0]]) with the
ancilla as the most significant tensor factor.  Each value carries the payload
A alongside W so that approximate constructions can be compared against the
exact target without taking logarithms at every step.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg

from . import corela as la
from .errors import (
    BranchError,
    DimensionError,
    FormError,
    HermiticityError,
    NotNilpotentError,
    UnitarityError,
)


class Form(Enum):
    StandardOffDiag = "StandardOffDiag"
    Controlled4Block = "Controlled4Block"
    DiagonalZ = "DiagonalZ"


@dataclass(frozen=True, eq=False)
class BlockEncoding:
    W: np.ndarray
    payload: Optional[np.ndarray]
    norm_bound: float
    form: Form = Form.StandardOffDiag

    @property
    def n(self):
        """Dimension of the encoded operator."""
        if self.form is Form.Controlled4Block:
            return self.W.shape[0] // 4
        return self.W.shape[0] // 2

    def standard_W(self):
        """The 2n x 2n unitary in standard off-diagonal form."""
        if self.form is Form.StandardOffDiag:
            return self.W
        if self.form is Form.DiagonalZ:
            Hd = np.kron(la.HAD, np.eye(self.n))
            return Hd @ self.W @ Hd
        return polar_unitary(self.W[: 2 * self.n, : 2 * self.n])

    def unitarity_defect(self):
        return la.spectral_norm(la.dagger(self.W) @ self.W - np.eye(self.W.shape[0]))


def polar_unitary(M):
    """Closest unitary to M in any unitarily invariant norm."""
    U, _, Vh = np.linalg.svd(M)
    return U @ Vh


def encode(A, norm_bound=None):
    """Exact block encoding exp(-i dilate(A))."""
    A = la.as_square(A)
    W = la.expm_hermitian(la.dilate(A), 1.0)
    nb = la.spectral_norm(A) if norm_bound is None else float(norm_bound)
    return BlockEncoding(W=W, payload=A, norm_bound=nb, form=Form.StandardOffDiag)


def standardize(E):
    """Re-express any form as a StandardOffDiag encoding of the same payload.

    For the two-ancilla form this projects the top-left block onto the unitary
    group; its distance from unitarity is the formula error.
    """
    if E.form is Form.StandardOffDiag:
        return E
    return BlockEncoding(W=E.standard_W(), payload=E.payload, norm_bound=E.norm_bound)


def unitary_log(W):
    """Hermitian G with exp(-iG) = W, eigenphases taken in (-pi, pi]."""
    T, Zs = scipy.linalg.schur(np.asarray(W, dtype=complex), output="complex")
    theta = -np.angle(np.diag(T))
    return (Zs * theta) @ la.dagger(Zs)


def decode(E):
    """Recover the encoded operator from the lower-left block of i log W."""
    if E.norm_bound >= np.pi:
        raise BranchError(f"norm bound {E.norm_bound} is outside the principal branch (< pi)")
    if E.form is Form.DiagonalZ:
        n = E.n
        return unitary_log(E.W[:n, :n])
    W = E.standard_W()
    n = W.shape[0] // 2
    G = unitary_log(W)
    return G[n:, :n]


def _require_standard(E, op):
    if E.form is not Form.StandardOffDiag:
        raise FormError(f"{op} needs StandardOffDiag form, got {E.form.value}")


def _anc(M, n):
    return np.kron(M, np.eye(n))


def conjugate(E):
    """Encoding of A^dag: swap the ancilla basis states."""
    _require_standard(E, "conjugate")
    Xa = _anc(la.X, E.n)
    payload = None if E.payload is None else la.dagger(E.payload)
    return BlockEncoding(W=Xa @ E.W @ Xa, payload=payload, norm_bound=E.norm_bound)


def phase_scale(E, theta):
    """Encoding of exp(i theta) A."""
    _require_standard(E, "phase_scale")
    D = _anc(np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]), E.n)
    payload = None if E.payload is None else np.exp(1j * theta) * E.payload
    return BlockEncoding(W=D @ E.W @ la.dagger(D), payload=payload, norm_bound=E.norm_bound)


def integer_scale(E, n):
    """Encoding of n A using n queries."""
    _require_standard(E, "integer_scale")
    n = int(n)
    if n < 0:
        raise ValueError("integer_scale needs n >= 0")
    payload = None if E.payload is None else n * E.payload
    return BlockEncoding(
        W=np.linalg.matrix_power(E.W, n), payload=payload, norm_bound=n * E.norm_bound
    )


def unitary_sandwich(E, U, V):
    """Encoding of U A V for unitaries U and V."""
    _require_standard(E, "unitary_sandwich")
    U, V = la.as_square(U), la.as_square(V)
    if U.shape[0] != E.n or V.shape[0] != E.n:
        raise DimensionError("sandwich factors must match the payload dimension")
    for name, M in (("U", U), ("V", V)):
        if not la.is_unitary(M):
            raise UnitarityError(f"{name} is not unitary")
    L = la.blkdiag(la.dagger(V), U)
    R = la.blkdiag(V, la.dagger(U))
    payload = None if E.payload is None else U @ E.payload @ V
    return BlockEncoding(W=L @ E.W @ R, payload=payload, norm_bound=E.norm_bound)


def to_controlled_evolution(E):
    """diag(exp(-iH), exp(iH)) from the encoding of a Hermitian H."""
    _require_standard(E, "to_controlled_evolution")
    if E.payload is not None and not la.is_hermitian(E.payload, tol=1e-10):
        raise HermiticityError("controlled evolution needs a Hermitian payload")
    Hd = _anc(la.HAD, E.n)
    return Hd @ E.W @ Hd


def basis_operator_check(G, tol=1e-10):
    """True iff G^2 = 0 and G^dag G is a projector."""
    G = la.as_square(G)
    P = la.dagger(G) @ G
    return bool(la.spectral_norm(G @ G) <= tol and la.spectral_norm(P @ P - P) <= tol)


def canonicalize(G, tol=1e-10):
    """Unitary U with U^dag G U = [[0, I, 0], [0, 0, 0], [0, 0, 0]].

    Columns are ordered as the image vectors G v_i, then the vectors v_i that
    span the support of G, then an orthonormal completion.
    """
    G = la.as_square(G)
    if not basis_operator_check(G, tol):
        raise NotNilpotentError("G is not a nilpotent partial isometry")
    n = G.shape[0]
    _, s, Vr = la.svd(G)
    m = int(np.sum(s > 0.5))
    v = Vr[:, :m].copy()
    for i in range(m):
        col = v[:, i]
        k = np.flatnonzero(np.abs(col) > 1e-12)[0]
        v[:, i] = col * (np.abs(col[k]) / col[k])
    u = G @ v
    basis = np.hstack([u, v])
    rest = scipy.linalg.null_space(la.dagger(basis)) if basis.shape[1] else np.eye(n)
    return np.hstack([basis, rest]).astype(complex)
