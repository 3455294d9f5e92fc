"""Hamiltonian singular value transformation by semantic simulation.

``qsvt_odd`` assembles the real-parts operator of the transformation circuit
directly from the singular value decomposition of the encoded operator: each
singular value sigma contributes a 2 x 2 block built from p(sin sigma) and
q(sin sigma) sqrt(1 - sin^2 sigma), followed by the closing -iX ancilla
correction.  The result is compared against the exact encoding of f_sv(A).
"""

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import polynomial as Pm

from . import corela as la
from . import polyapprox as pa
from .blockenc import BlockEncoding, Form, decode, encode, integer_scale, phase_scale, conjugate, standardize
from .errors import CertError, DomainError, HermiticityError, NormError, SingularError
from .formulas import FormulaSpec, Kind, multiply_generic

EXACT_TOL = 1e-10


@dataclass(eq=False)
class QsvtResult:
    output: BlockEncoding
    measured_error: float
    pair_used: Optional[pa.DominatedPair]
    unitarity_defect: float = 0.0
    parts: list = field(default_factory=list)

    def to_dict(self):
        return {
            "measured_error": self.measured_error,
            "unitarity_defect": self.unitarity_defect,
            "pair": None if self.pair_used is None else self.pair_used.to_dict(),
            "parts": [p.to_dict() for p in self.parts],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def sv_function(A, f, parity="odd"):
    """f_sv(A): U f(S) V^dag for odd f, V f(S) V^dag for even f."""
    U, s, V = la.svd(A)
    fs = np.asarray(f(s), dtype=float)
    if str(parity).lower() == "odd":
        return (U * fs) @ la.dagger(V)
    return (V * fs) @ la.dagger(V)


def exact_transform(A, f, parity="odd"):
    """Oracle encoding of f_sv(A)."""
    return encode(sv_function(la.as_square(A), f, parity))


def effective_operator(E):
    """The operator W actually encodes: the payload when W is exact, else the decoded block."""
    Es = standardize(E)
    if Es.payload is not None:
        if la.spectral_norm(Es.W - encode(Es.payload).W) <= EXACT_TOL:
            return Es.payload
    return decode(Es)


def _check_norm(E, xi):
    if E.norm_bound > math.pi / 2 - xi + 1e-12:
        raise NormError(f"norm bound {E.norm_bound:.6g} exceeds pi/2 - xi = {math.pi / 2 - xi:.6g}")


def _angle_of(pair, f):
    if f is not None:
        return f
    return lambda s: pair.angle(np.sin(s))


def qsvt_odd(E, pair, f=None):
    """Transform the singular values of the encoded operator by the pair's odd angle function.

    ``f`` maps sigma to the output angle; by default f(sigma) = angle(sin sigma).
    """
    if not pair.certified:
        raise CertError("qsvt_odd needs a certified pair")
    _check_norm(E, pair.xi)
    fsig = _angle_of(pair, f)
    A = effective_operator(E)
    U, s, V = la.svd(A)
    x = np.sin(s)
    norm = math.sqrt(1 + pair.eps)
    P = pair.p(x) / norm
    Qp = pair.q(x) * np.sqrt(1 - x**2) / norm
    n = A.shape[0]
    # [[p, iq'], [iq', p]] times -iX gives [[q', -ip], [-ip, q']]
    M = np.zeros((2 * n, 2 * n), dtype=complex)
    M[:n, :n] = np.diag(Qp)
    M[n:, n:] = np.diag(Qp)
    M[:n, n:] = np.diag(-1j * P)
    M[n:, :n] = np.diag(-1j * P)
    L = la.blkdiag(V, U)
    W = L @ M @ la.dagger(L)
    payload, err = None, float("nan")
    if E.payload is not None:
        payload = sv_function(E.payload, fsig, "odd")
        err = la.spectral_norm(W - encode(payload).W)
    nb = la.spectral_norm(payload) if payload is not None else float(np.max(np.abs(fsig(s))))
    out = BlockEncoding(W=W, payload=payload, norm_bound=nb)
    return QsvtResult(out, err, pair, out.unitarity_defect())


def _slack(norm_bound, cap=0.5, floor=0.05):
    xi = min(cap, math.pi / 2 - norm_bound)
    if xi < floor:
        raise NormError(f"norm bound {norm_bound:.6g} leaves slack below {floor}")
    return xi


def shift(E, c):
    """Exact encoding of H + c I for a Hermitian payload (commuting dilations)."""
    Es = standardize(E)
    n = Es.n
    W = Es.W @ encode(c * np.eye(n)).W
    payload = None if Es.payload is None else Es.payload + c * np.eye(n)
    return BlockEncoding(W=W, payload=payload, norm_bound=Es.norm_bound + abs(c))


def combine_commuting(*Es):
    """Product of encodings whose payloads are commuting Hermitian matrices."""
    W = Es[0].W
    for E in Es[1:]:
        W = W @ E.W
    payloads = [E.payload for E in Es]
    payload = None if any(P is None for P in payloads) else sum(payloads)
    return BlockEncoding(W=W, payload=payload, norm_bound=sum(E.norm_bound for E in Es))


def _as_even_poly(f, scale, eps):
    if isinstance(f, pa.ChebPoly):
        return f
    return pa.cheb_fit_adaptive(f, eps / 8, scale=scale, parity=pa.Parity.Even)


def _odd_from_extension(h):
    """h_odd(s) = h((s - pi/4)/(pi/4)) - h((-s - pi/4)/(pi/4)) on [-pi/2, pi/2]."""
    q = math.pi / 4

    def g(s):
        return h((s - q) / q) - h((-s - q) / q)

    # composition with an affine map keeps the degree
    return pa.cheb_fit(g, h.degree + 1, scale=math.pi / 2, parity=pa.Parity.Odd)


@lru_cache(maxsize=64)
def _pair_for_poly(coeffs, scale, xi, eps):
    f = pa.ChebPoly(np.array(coeffs), pa.Parity.Odd, scale)
    return pa.dominated_pair(f, xi, eps)


def pair_for(f, xi, eps):
    """Cached dominated pair for an odd ChebPoly."""
    return _pair_for_poly(tuple(np.round(f.coeffs, 15)), f.scale, xi, eps)


def qsvt_even_hermitian(E, f, eps, xi=None):
    """Encoding of f(H) for even f and Hermitian payload with ||H|| <= pi/4 - xi."""
    if E.payload is not None and not la.is_hermitian(E.payload, tol=1e-10):
        raise HermiticityError("qsvt_even_hermitian needs a Hermitian payload")
    q = math.pi / 4
    if xi is None:
        xi = min(0.25, q - E.norm_bound)
    if E.norm_bound > q - xi + 1e-12 or xi <= 0:
        raise NormError(f"norm bound {E.norm_bound:.6g} exceeds pi/4 - xi")
    f = _as_even_poly(f, q, eps)
    # f~(y) = f(pi y / 4) on [-1, 1]
    ft = pa.cheb_fit(lambda y: f(q * y), max(f.degree, 1), parity=pa.Parity.Even)
    if not np.any(np.abs(ft.coeffs) > 1e-15):
        n = E.n
        out = encode(np.zeros((n, n)))
        err = float("nan") if E.payload is None else la.spectral_norm(out.W - encode(0 * E.payload).W)
        return QsvtResult(out, err, None, 0.0)
    h = pa.dominated_extension(ft, xi / q, 3.0, eps / 4)
    h_odd = _odd_from_extension(h)
    pair = pair_for(h_odd, xi, eps)
    shifted = shift(E, q)
    res = qsvt_odd(shifted, pair, f=h_odd)
    payload, err = None, float("nan")
    if E.payload is not None:
        payload = la.hermitian_function(E.payload, f, symmetrize=True)
        err = la.spectral_norm(res.output.W - encode(payload).W)
    out = BlockEncoding(W=res.output.W, payload=payload, norm_bound=res.output.norm_bound)
    return QsvtResult(out, err, pair, res.unitarity_defect, parts=[res])


def _even_to_monomial_in_square(f):
    """Coefficients b_k with f(x) = sum_k b_k (x^2)^k for an even ChebPoly f."""
    mono = C.cheb2poly(f.coeffs)
    k = np.arange(mono.size)
    scale2 = f.scale**2
    return mono[0::2] / scale2 ** (k[0::2] // 2)


def default_product_spec():
    return FormulaSpec(Kind.GroupCommutator, 4, 64)


def qsvt_even_general(E, f, eps, spec=None):
    """Encoding of V f(S) V^dag for even f via A^dag A and the Hermitian even case."""
    spec = spec or default_product_spec()
    nb = E.norm_bound
    if nb**2 >= math.pi / 2:
        raise NormError("needs norm bound < sqrt(pi/2)")
    f = _as_even_poly(f, 1.0, eps) if not isinstance(f, pa.ChebPoly) else f
    xi = min(0.45 * (math.pi / 2 - nb**2), math.pi / 4 - 0.05)
    c = math.pi / 4 - xi
    EAA = standardize(multiply_generic(conjugate(E), E, spec))
    EAA = BlockEncoding(W=EAA.W, payload=EAA.payload, norm_bound=nb**2)
    EB = shift(EAA, -c)
    EB = BlockEncoding(W=EB.W, payload=EB.payload, norm_bound=max(c, nb**2 - c))
    # g(y) = f(sqrt(y + c)) is a polynomial in y when f is even
    b = _even_to_monomial_in_square(f)
    g_mono = Pm.polycompose(b, [c, 1.0]) if hasattr(Pm, "polycompose") else _compose_shift(b, c)
    q = math.pi / 4
    g = pa.ChebPoly(C.poly2cheb(_rescale_monomial(g_mono, q)), pa.Parity.None_, q)
    ge = pa.ChebPoly(g.coeffs, pa.Parity.Even, q)
    go = pa.ChebPoly(g.coeffs, pa.Parity.Odd, q)
    parts = []
    encs = []
    if np.any(np.abs(ge.coeffs) > 1e-15):
        r_even = qsvt_even_hermitian(EB, ge, eps, xi=xi)
        parts.append(r_even)
        encs.append(r_even.output)
    if np.any(np.abs(go.coeffs) > 1e-15):
        # g_odd(y) evaluated through h(s) = g_odd(s / 2) on the doubled operator
        h = pa.ChebPoly(go.coeffs, pa.Parity.Odd, 2 * q)
        E2 = integer_scale(EB, 2)
        pair = pair_for(h, 2 * xi, eps)
        r_odd = qsvt_odd(E2, pair, f=h)
        parts.append(r_odd)
        encs.append(r_odd.output)
    n = E.n
    if not encs:
        encs.append(encode(np.zeros((n, n))))
    out_W = combine_commuting(*encs).W
    payload, err = None, float("nan")
    if E.payload is not None:
        payload = sv_function(E.payload, f, "even")
        err = la.spectral_norm(out_W - encode(payload).W)
    nbo = float(np.max(np.abs(f(np.linspace(0, nb, 2001)))))
    out = BlockEncoding(W=out_W, payload=payload, norm_bound=nbo)
    return QsvtResult(out, err, None, out.unitarity_defect(), parts=parts)


def _compose_shift(b, c):
    """Monomial coefficients of sum_k b_k (y + c)^k."""
    out = np.zeros(b.size)
    for k, bk in enumerate(b):
        out[: k + 1] += bk * Pm.polypow([c, 1.0], k)[: k + 1]
    return out


def _rescale_monomial(m, scale):
    """Coefficients in u = y / scale of a polynomial given in y."""
    return m * scale ** np.arange(m.size)


@lru_cache(maxsize=32)
def _cached(name, *args):
    return getattr(pa, name)(*args)


def invert(E, kappa, eps, xi=None):
    """Encoding of A^{-1} / kappa; the odd transform acts on the conjugated encoding."""
    A = effective_operator(E)
    s = la.svd(A)[1]
    if s[-1] <= 1e-12 * max(s[0], 1e-300):
        raise SingularError("payload is singular")
    if s[-1] < 1 / kappa - 1e-12:
        raise DomainError(
            f"smallest singular value {s[-1]:.6g} lies below 1/kappa = {1 / kappa:.6g}, "
            "outside the certified inversion region"
        )
    xi = _slack(E.norm_bound) if xi is None else xi
    pair = _cached("pair_inverse", float(kappa), float(xi), float(eps))

    def f(sig):
        return 1.0 / (kappa * sig)

    return qsvt_odd(conjugate(standardize(E)), pair, f=f)


def frac_scale(E, tau, eps, xi=None):
    """Encoding of tau A for 0 < tau < 1."""
    if not 0 < tau < 1:
        raise DomainError("tau must lie in (0, 1)")
    xi = _slack(E.norm_bound) if xi is None else xi
    pair = _cached("pair_fractional", float(tau), float(xi), float(eps))
    return qsvt_odd(E, pair, f=lambda s: tau * s)


def square(E, eps, xi=0.2):
    """Encoding of H^2 for Hermitian H with ||H|| <= 1.

    (H + 1/3)^3 = H^3 + H^2 + H/3 + 1/27, so H^2 is assembled from the cube of the
    shifted encoding times encodings of -H^3, -H/3 and -1/27 I, which commute.
    """
    if E.payload is not None and not la.is_hermitian(E.payload, tol=1e-10):
        raise HermiticityError("square needs a Hermitian payload")
    if E.norm_bound > 1 + 1e-12:
        raise NormError("square needs norm bound <= 1")
    E = standardize(E)
    n = E.n
    cube_pair = _cached("pair_cube", float(xi), float(eps))

    def cube(s):
        return s**3

    r1 = qsvt_odd(shift(E, 1 / 3), cube_pair, f=cube)
    neg = phase_scale(E, math.pi)
    neg = BlockEncoding(W=neg.W, payload=_real_if_hermitian(neg.payload), norm_bound=neg.norm_bound)
    r2 = qsvt_odd(neg, cube_pair, f=cube)
    r3 = frac_scale(neg, 1 / 3, eps)
    e4 = encode(-np.eye(n) / 27)
    out_W = r1.output.W @ r2.output.W @ r3.output.W @ e4.W
    payload, err = None, float("nan")
    if E.payload is not None:
        payload = E.payload @ E.payload
        err = la.spectral_norm(out_W - encode(payload).W)
    out = BlockEncoding(W=out_W, payload=payload, norm_bound=E.norm_bound**2)
    return QsvtResult(out, err, cube_pair, out.unitarity_defect(), parts=[r1, r2, r3])


def _real_if_hermitian(P):
    if P is None:
        return None
    return (P + la.dagger(P)) / 2


def even_bounded_transform(E, h, eps):
    """Reflection [[h(sin H), S], [S, -h(sin H)]] with S = sqrt(1 - h^2), h scaled by 1/(1 + eps).

    Its top-left block is what the even-parity transformation circuit applies to
    a Hermitian payload; measuring the ancilla in |0> gives ||h(sin H) psi||^2.
    """
    H = effective_operator(E)
    if not la.is_hermitian(H, tol=1e-8):
        raise HermiticityError("even_bounded_transform needs a Hermitian payload")
    lam, Q = la.eig_hermitian(H, symmetrize=True)
    hv = np.clip(h(np.sin(lam)) / (1 + eps), -1.0, 1.0)
    sv = np.sqrt(1 - hv**2)
    Qd = la.dagger(Q)
    Hm = (Q * hv) @ Qd
    Sm = (Q * sv) @ Qd
    return np.block([[Hm, Sm], [Sm, -Hm]])
