"""Product formulas: Trotter-Suzuki addition and Lie group commutator multiplication.

Exponentials are supplied through providers: callables mapping a real time s to
the unitary exp(-i s H).  Plain Hermitian matrices are wrapped by
``hermitian_provider``; block encodings by ``encoding_provider``.  This lets
the same formula code run on exact generators and on nested approximations.
"""

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np

from . import corela as la
from .blockenc import BlockEncoding, Form, unitary_log, polar_unitary
from .errors import CostError, DomainError, FormError, HermiticityError, NormError, OrderError, SignError


class Kind(Enum):
    Suzuki = "Suzuki"
    GroupCommutator = "GroupCommutator"


@dataclass(frozen=True)
class FormulaSpec:
    kind: Kind
    order: int
    steps: int = 1
    time: float = 1.0
    # Target error when steps == 0 selects r adaptively against the oracle.
    eps: Optional[float] = None

    def __post_init__(self):
        if self.order < 1:
            raise OrderError("order must be positive")
        if self.kind is Kind.Suzuki and self.order > 1 and self.order % 2:
            raise OrderError(f"Suzuki order must be 1 or even, got {self.order}")
        if self.kind is Kind.GroupCommutator and (self.order < 2 or self.order % 2):
            raise OrderError(f"group commutator order must be even and >= 2, got {self.order}")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.steps == 0 and self.eps is None:
            raise ValueError("adaptive step selection (steps=0) needs eps")


def suzuki_coefficients(k):
    """u_k = 1 / (4 - 4^(1/(2k-1)))."""
    if k < 2:
        raise DomainError("Suzuki coefficient needs k >= 2")
    return 1.0 / (4.0 - 4.0 ** (1.0 / (2 * k - 1)))


def gc_coefficients(k):
    """(v_k, beta_k, gamma_k) of the higher-order group commutator recursion."""
    if k < 2:
        raise DomainError("group commutator coefficients need k >= 2")
    c = 2.0 ** (1.0 / k)
    v = c / (4.0 * (2.0 - c))
    return v, math.sqrt(2.0 * v), math.sqrt(0.25 + v)


# providers -----------------------------------------------------------------

def hermitian_provider(H):
    """s -> exp(-i s H) from one cached eigendecomposition."""
    lam, Q = la.eig_hermitian(H)
    Qd = la.dagger(Q)

    def provider(s):
        return (Q * np.exp(-1j * s * lam)) @ Qd

    provider.dim = Q.shape[0]
    return provider


def generator_of(E):
    """Hermitian generator G with exp(-iG) equal to the standard-form W."""
    if E.form is Form.StandardOffDiag and E.payload is not None:
        # exact encodings: the dilation itself avoids a logarithm
        if la.spectral_norm(E.W - la.expm_hermitian(la.dilate(E.payload))) <= 1e-12:
            return la.dilate(E.payload)
    G = unitary_log(E.standard_W())
    return (G + la.dagger(G)) / 2


def encoding_provider(E):
    """s -> W of the encoding of s A, realized as a fractional power of E."""
    return hermitian_provider(generator_of(E))


def _dim(provider):
    return provider.dim if hasattr(provider, "dim") else provider(0.0).shape[0]


# Suzuki ----------------------------------------------------------------------

def _suzuki_step(providers, tau, p):
    if p == 1:
        out = np.eye(_dim(providers[0]), dtype=complex)
        for prov in providers:
            out = prov(tau) @ out
        return out
    if p == 2:
        half = [prov(tau / 2) for prov in providers]
        out = np.eye(half[0].shape[0], dtype=complex)
        for U in half:
            out = U @ out
        for U in reversed(half):
            out = U @ out
        return out
    k = p // 2
    u = suzuki_coefficients(k)
    outer = _suzuki_step(providers, u * tau, p - 2)
    outer2 = outer @ outer
    return outer2 @ _suzuki_step(providers, (1 - 4 * u) * tau, p - 2) @ outer2


def suzuki_product(providers, t, p, r):
    """S_p(t/r)^r for a list of providers."""
    if p > 1 and p % 2:
        raise OrderError(f"Suzuki order must be 1 or even, got {p}")
    step = _suzuki_step(list(providers), t / r, p)
    return np.linalg.matrix_power(step, int(r))


def trotter_apply(terms, spec):
    """S_p(t/r)^r for Hermitian generators."""
    if spec.kind is not Kind.Suzuki:
        raise FormError("trotter_apply needs a Suzuki spec")
    terms = [la.as_square(H) for H in terms]
    for H in terms:
        if not la.is_hermitian(H):
            raise HermiticityError("Trotter terms must be Hermitian")
    providers = [hermitian_provider(H) for H in terms]
    return suzuki_product(providers, spec.time, spec.order, max(spec.steps, 1))


def nested_commutator(ops):
    """[H_{j_{p+1}}, ... [H_{j_2}, H_{j_1}]] for ops = (H_{j_1}, ..., H_{j_{p+1}})."""
    out = ops[0]
    for H in ops[1:]:
        out = la.commutator(H, out)
    return out


def alpha_comm(terms, p):
    """(sum over (p+1)-tuples of nested commutator norms)^(1/(p+1))."""
    if p < 1:
        raise DomainError("alpha_comm needs p >= 1")
    if p > 3:
        raise CostError(f"alpha_comm enumeration is capped at p = 3, got {p}")
    terms = [la.as_square(H) for H in terms]
    total = 0.0
    for idx in itertools.product(range(len(terms)), repeat=p + 1):
        if idx[0] == idx[1]:
            continue
        total += la.spectral_norm(nested_commutator([terms[i] for i in idx]))
    return total ** (1.0 / (p + 1))


def suzuki_steps(alpha, t, p, eps):
    """r = ceil((alpha t)^(1 + 1/p) / eps^(1/p)), clamped to r >= 1."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    return max(1, math.ceil((alpha * abs(t)) ** (1 + 1 / p) / eps ** (1 / p)))


def _sum_payload(encodings):
    payloads = [E.payload for E in encodings]
    if any(P is None for P in payloads):
        return None
    return sum(payloads)


def trotter_add(encodings, spec, max_doublings=14):
    """Encoding of t * sum(A_j) by a Suzuki formula over the dilations.

    With spec.steps == 0, r starts at the commutator-scaling estimate and doubles
    until the oracle error is at most spec.eps.
    """
    if spec.kind is not Kind.Suzuki:
        raise FormError("trotter_add needs a Suzuki spec")
    for E in encodings:
        if E.form is not Form.StandardOffDiag:
            raise FormError("trotter_add needs StandardOffDiag encodings")
    gens = [generator_of(E) for E in encodings]
    providers = [hermitian_provider(G) for G in gens]
    payload = _sum_payload(encodings)
    t = spec.time
    if payload is not None:
        payload = t * payload
    nb = abs(t) * sum(E.norm_bound for E in encodings)
    if spec.steps > 0:
        W = suzuki_product(providers, t, spec.order, spec.steps)
        return BlockEncoding(W=W, payload=payload, norm_bound=nb)
    exact = la.expm_hermitian(sum(gens), t)
    alpha = alpha_comm(gens, min(spec.order, 3)) if len(gens) > 1 else 0.0
    r = suzuki_steps(alpha, t, spec.order, spec.eps)
    for _ in range(max_doublings + 1):
        W = suzuki_product(providers, t, spec.order, r)
        if la.spectral_norm(W - exact) <= spec.eps:
            return BlockEncoding(W=W, payload=payload, norm_bound=nb)
        r *= 2
    return BlockEncoding(W=W, payload=payload, norm_bound=nb)


# group commutator -------------------------------------------------------------

def gc_product(ej, ek, tau, k):
    """M_{2k}(tau) from providers ej, ek; tau may be any real number."""
    if k < 1:
        raise DomainError("group commutator order index k must be >= 1")
    if k > 4:
        raise CostError(f"recursion depth k = {k} exceeds the cap of 4")

    @lru_cache(maxsize=None)
    def m(level, s):
        if level == 1:
            return ej(s) @ ek(s) @ ej(-s) @ ek(-s)
        _, beta, gamma = gc_coefficients(level)
        a = m(level - 1, gamma * s) @ m(level - 1, -gamma * s)
        b = la.dagger(m(level - 1, beta * s)) @ la.dagger(m(level - 1, -beta * s))
        return a @ b @ a

    return m(k, float(tau))


def gc_m2(J, K, tau, adjoint=False):
    """exp(-i tau J) exp(-i tau K) exp(i tau J) exp(i tau K)."""
    if tau < 0:
        raise SignError("tau must be >= 0; use adjoint=True for negative time")
    M = gc_product(hermitian_provider(J), hermitian_provider(K), tau, 1)
    return la.dagger(M) if adjoint else M


def gc_higher(J, K, tau, k, adjoint=False):
    """M_{2k}(tau) by the recursion with beta_k, gamma_k."""
    if tau < 0:
        raise SignError("tau must be >= 0; use adjoint=True for negative time")
    if k > 4:
        raise CostError(f"recursion depth k = {k} exceeds the cap of 4")
    M = gc_product(hermitian_provider(J), hermitian_provider(K), tau, k)
    return la.dagger(M) if adjoint else M


def gc_target(J, K, t):
    """exp(-t [J, K]), unitary because [J, K] is anti-Hermitian."""
    C = la.commutator(la.as_square(J), la.as_square(K))
    return la.expm_hermitian(-1j * C, t, symmetrize=True)


def gc_bound_constant(J, K):
    """||[J,[J,K]]|| + ||[K,[K,J]]||."""
    C = la.commutator(J, K)
    return la.spectral_norm(la.commutator(J, C)) + la.spectral_norm(la.commutator(K, -C))


def gc_m2_bound(J, K, tau):
    """tau^3/2 (||[J,[J,K]]|| + ||[K,[K,J]]||)."""
    return tau ** 3 / 2 * gc_bound_constant(J, K)


def gc_bch_constant(J, K):
    """||1/2 [J,[J,K]] + 1/2 [K,[J,K]]||, the leading third-order coefficient."""
    C = la.commutator(J, K)
    return la.spectral_norm(0.5 * la.commutator(J, C) + 0.5 * la.commutator(K, C))


def gc_steps(J, K, t, eps):
    """r = ceil(t^3/(4 eps^2) (||[J,[J,K]]|| + ||[K,[K,J]]||)^2), clamped to 1."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    c = gc_bound_constant(la.as_square(J), la.as_square(K))
    # round before the ceiling so exact products are not pushed up by float noise
    return max(1, math.ceil(round(abs(t) ** 3 / (4 * eps ** 2) * c ** 2, 9)))


def gc_evolve_providers(ej, ek, t, r, k=1):
    """M_{2k}(sqrt(|t|/r))^r approximating exp(-t [J, K]); adjoint for t < 0."""
    tau = math.sqrt(abs(t) / r)
    M = np.linalg.matrix_power(gc_product(ej, ek, tau, k), int(r))
    return la.dagger(M) if t < 0 else M


def gc_evolve(J, K, t, r, k=1):
    return gc_evolve_providers(hermitian_provider(J), hermitian_provider(K), t, r, k)


# multiplication ---------------------------------------------------------------

def _two_ancilla_ops(n):
    """P = SWAP (I x X) and the closing correction on (a1, a2, system)."""
    I2, In = la.I2, np.eye(n)
    swap = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
    P = np.kron(swap @ np.kron(I2, la.X), In)
    # CNOT controlled by a2 targeting a1
    cnot21 = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)
    U = np.kron(np.kron(la.X, la.S_GATE) @ cnot21, In)
    return P, U


def multiply_providers(pa, pb, n):
    """Providers for J = |0><0| x dilate(A) and K = P (|0><0| x dilate(B)) P^dag."""
    P, U = _two_ancilla_ops(n)
    Pd = la.dagger(P)
    I2n = np.eye(2 * n, dtype=complex)

    def ej(s):
        return la.blkdiag(pa(s), I2n)

    def ek(s):
        return P @ la.blkdiag(pb(s), I2n) @ Pd

    ej.dim = ek.dim = 4 * n
    return ej, ek, U


def _gc_k(spec):
    if spec.kind is not Kind.GroupCommutator:
        raise FormError("multiplication needs a GroupCommutator spec")
    return spec.order // 2


def _steps_adaptive(run, err, spec, max_doublings):
    if spec.steps > 0:
        return run(spec.steps), spec.steps
    r = 1
    for _ in range(max_doublings + 1):
        out = run(r)
        if err(out) <= spec.eps:
            return out, r
        r *= 2
    return out, r // 2


def multiply_generic(EA, EB, spec, max_doublings=12):
    """Encoding of t A B in the two-ancilla Controlled4Block layout.

    The top-left 2n x 2n block of the output approximates exp(-i dilate(t A B)).
    """
    k = _gc_k(spec)
    for E in (EA, EB):
        if E.form is not Form.StandardOffDiag:
            raise FormError("multiply_generic needs StandardOffDiag inputs")
        if E.norm_bound >= np.pi / 2:
            raise NormError(f"norm bound {E.norm_bound} must be < pi/2")
    n = EA.n
    if EB.n != n:
        raise FormError("payload dimensions differ")
    ej, ek, U = multiply_providers(encoding_provider(EA), encoding_provider(EB), n)
    Ud = la.dagger(U)
    t = spec.time
    payload = None
    if EA.payload is not None and EB.payload is not None:
        payload = t * EA.payload @ EB.payload
    nb = abs(t) * EA.norm_bound * EB.norm_bound

    def run(r):
        return U @ gc_evolve_providers(ej, ek, t, r, k) @ Ud

    def err(W):
        if payload is None:
            return 0.0
        return la.spectral_norm(W[: 2 * n, : 2 * n] - la.expm_hermitian(la.dilate(payload)))

    W, _ = _steps_adaptive(run, err, spec, max_doublings)
    return BlockEncoding(W=W, payload=payload, norm_bound=nb, form=Form.Controlled4Block)


def multiply_hermitian(EA, K, side, spec, max_doublings=12):
    """Encoding of A K (side='Right') or K A (side='Left') for Hermitian K."""
    k = _gc_k(spec)
    if EA.form is not Form.StandardOffDiag:
        raise FormError("multiply_hermitian needs a StandardOffDiag input")
    K = la.as_square(K)
    if not la.is_hermitian(K, tol=1e-12):
        raise HermiticityError("K must be Hermitian")
    normK = la.spectral_norm(K)
    if EA.norm_bound + normK >= np.pi:
        raise NormError("needs ||A|| + ||K|| < pi")
    side = side.capitalize() if isinstance(side, str) else side
    if side not in ("Left", "Right"):
        raise ValueError(f"side must be Left or Right, got {side!r}")
    n = EA.n
    G = generator_of(EA)
    if side == "Right":
        gens = (G, np.kron(la.P0, K))
    else:
        gens = (np.kron(la.P1, K), G)
    ej, ek = hermitian_provider(gens[0]), hermitian_provider(gens[1])
    Sa = np.kron(la.S_GATE, np.eye(n))
    Sad = la.dagger(Sa)
    t = spec.time
    payload = None
    if EA.payload is not None:
        payload = t * (EA.payload @ K if side == "Right" else K @ EA.payload)
    nb = abs(t) * EA.norm_bound * normK

    def run(r):
        return Sa @ gc_evolve_providers(ej, ek, t, r, k) @ Sad

    def err(W):
        if payload is None:
            return 0.0
        return la.spectral_norm(W - la.expm_hermitian(la.dilate(payload)))

    W, _ = _steps_adaptive(run, err, spec, max_doublings)
    return BlockEncoding(W=W, payload=payload, norm_bound=nb)
