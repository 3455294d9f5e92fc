"""Fermionic operators, the eta-seminorm and sum-of-squares simulation.

Modes are 0-based.  Mode j is qubit j with qubit n-1 the most significant
tensor factor; occupation is |1> and A_j = |0><1| on qubit j with a Z string on
qubits 0..j-1.
"""

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import corela as la
from .blockenc import BlockEncoding, Form, polar_unitary
from .errors import ConvergenceError, CostError, DimensionError, HermiticityError, NormalityError, NormError
from .formulas import (
    _suzuki_step,
    gc_product,
    hermitian_provider,
    multiply_providers,
    suzuki_coefficients,
)

MAX_JW_MODES = 10
MAX_SUBSET_MODES = 16

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)


@lru_cache(maxsize=None)
def _jw(n):
    ops = []
    for j in range(n):
        factors = [np.eye(2)] * (n - 1 - j) + [SIGMA_MINUS] + [la.Z] * j
        ops.append(la.kron(*factors))
    return tuple(ops)


def jordan_wigner(n):
    """Annihilation operators A_0..A_{n-1} on 2^n dimensions."""
    if n < 1:
        raise DimensionError("need at least one mode")
    if n > MAX_JW_MODES:
        raise CostError(f"{n} modes exceeds the cap of {MAX_JW_MODES}")
    return [A.copy() for A in _jw(n)]


def number_operator(n):
    return sum(la.dagger(A) @ A for A in _jw(n))


@dataclass(frozen=True, eq=False)
class QuadCoeff:
    W: np.ndarray
    hermitian_flag: bool = False

    def __post_init__(self):
        W = la.as_square(self.W)
        object.__setattr__(self, "W", W)
        if self.hermitian_flag and not la.is_hermitian(W):
            raise HermiticityError("QuadCoeff flagged Hermitian but W != W^dag")

    @property
    def n(self):
        return self.W.shape[0]

    def to_json(self):
        return json.dumps({
            "n": self.n,
            "hermitian": self.hermitian_flag,
            "re": self.W.real.tolist(),
            "im": self.W.imag.tolist(),
        })

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(np.array(d["re"]) + 1j * np.array(d["im"]), d["hermitian"])


def _coeff(W):
    return W.W if isinstance(W, QuadCoeff) else la.as_square(W)


def quad(W, ops=None):
    """sum_pq W_pq A_p^dag A_q."""
    W = _coeff(W)
    n = W.shape[0]
    ops = list(_jw(n)) if ops is None else ops
    if len(ops) != n:
        raise DimensionError(f"coefficient matrix has {n} modes but basis has {len(ops)}")
    out = np.zeros_like(ops[0])
    for p in range(n):
        for q in range(n):
            if W[p, q] != 0:
                out = out + W[p, q] * (la.dagger(ops[p]) @ ops[q])
    return out


def cre(beta, ops=None):
    beta = np.asarray(beta)
    ops = list(_jw(beta.size)) if ops is None else ops
    return sum(b * la.dagger(A) for b, A in zip(beta, ops))


def ann(beta, ops=None):
    """Ann(beta^T) = sum_j beta_j A_j."""
    beta = np.asarray(beta)
    ops = list(_jw(beta.size)) if ops is None else ops
    return sum(b * A for b, A in zip(beta, ops))


def sector_basis(n, eta):
    """Computational basis indices with eta occupied modes."""
    idx = np.arange(2**n)
    counts = np.array([bin(i).count("1") for i in idx])
    return idx[counts == eta]


def sector_norm(M, n, eta):
    """Spectral norm of M restricted to the eta-particle sector."""
    b = sector_basis(n, eta)
    if b.size == 0:
        return 0.0
    return la.spectral_norm(M[np.ix_(b, b)])


def _is_normal(J, tol=1e-10):
    return la.spectral_norm(J @ la.dagger(J) - la.dagger(J) @ J) <= tol


def eta_seminorm(J, eta):
    """max over eta-subsets of eigenvalues of |sum|, i.e. the eta-sector norm of Quad(J)."""
    J = _coeff(J)
    n = J.shape[0]
    if not 0 <= eta <= n:
        raise ValueError(f"eta must lie in [0, {n}]")
    if eta == 0:
        return 0.0
    if la.is_hermitian(J, tol=1e-12):
        lam = np.linalg.eigvalsh((J + la.dagger(J)) / 2)
        return float(max(abs(lam[-eta:].sum()), abs(lam[:eta].sum())))
    if not _is_normal(J):
        raise NormalityError("eta-seminorm needs a normal coefficient matrix")
    return eta_seminorm_bruteforce(J, eta)


def eta_seminorm_bruteforce(J, eta):
    """Exhaustive subset search over the eigenvalues of a normal J."""
    J = _coeff(J)
    n = J.shape[0]
    if n > MAX_SUBSET_MODES:
        raise CostError(f"subset enumeration is capped at {MAX_SUBSET_MODES} modes")
    if eta == 0:
        return 0.0
    lam = np.linalg.eigvals(J)
    best = 0.0
    for combo in itertools.combinations(range(n), eta):
        best = max(best, abs(lam[list(combo)].sum()))
    return float(best)


def eta_seminorm_operator(J, eta):
    """Operator-level value: sector norm of Quad(J)."""
    J = _coeff(J)
    n = J.shape[0]
    return sector_norm(quad(J), n, eta)


def comm_bound_eta_p1(Ws, eta):
    """(sum_{k2,k1} 4 |W_k2|_eta |W_k1|_eta |[W_k2, W_k1]|_eta)^(1/2).

    Follows from [Q2^2, Q1^2] = {Q2, {Q1, Quad([W2, W1])}} and |{A, B}| <= 2 |A| |B|.
    """
    Ws = [_coeff(W) for W in Ws]
    for W in Ws:
        if not la.is_hermitian(W, tol=1e-12):
            raise HermiticityError("comm_bound_eta_p1 needs Hermitian coefficients")
    norms = [eta_seminorm(W, eta) for W in Ws]
    total = 0.0
    for a, Wa in enumerate(Ws):
        for b, Wb in enumerate(Ws):
            if a == b:
                continue
            c = la.commutator(Wa, Wb)
            if la.spectral_norm(c) <= 1e-14:
                continue
            total += 4 * norms[a] * norms[b] * eta_seminorm(c, eta)
    return math.sqrt(total)


def comm_exact_eta_p1(Ws, eta):
    """(sum_{k2,k1} |[Quad(W_k2)^2, Quad(W_k1)^2]|_eta)^(1/2) from dense sector norms."""
    Ws = [_coeff(W) for W in Ws]
    n = Ws[0].shape[0]
    Qs = [quad(W) for W in Ws]
    sq = [Q @ Q for Q in Qs]
    total = 0.0
    for a in range(len(Ws)):
        for b in range(len(Ws)):
            if a != b:
                total += sector_norm(la.commutator(sq[a], sq[b]), n, eta)
    return math.sqrt(total)


def sector_norm_report(Ws, eta):
    """Rows (k1, k2, exact_norm, bound) for every ordered pair of distinct terms."""
    Ws = [_coeff(W) for W in Ws]
    n = Ws[0].shape[0]
    sq = [np.linalg.matrix_power(quad(W), 2) for W in Ws]
    norms = [eta_seminorm(W, eta) for W in Ws]
    rows = []
    for a in range(len(Ws)):
        for b in range(len(Ws)):
            if a == b:
                continue
            exact = sector_norm(la.commutator(sq[a], sq[b]), n, eta)
            bound = 4 * norms[a] * norms[b] * eta_seminorm(la.commutator(Ws[a], Ws[b]), eta)
            rows.append((a, b, exact, bound))
    return rows


# sum-of-squares simulation ----------------------------------------------------

@dataclass
class SosSpec:
    """H = sum_k (sum_j A_jk)^dag (sum_j A_jk); terms[k][j] = A_jk."""

    terms: Sequence[Sequence[np.ndarray]]
    t: float = 1.0
    eps: float = 1e-2
    p: int = 2
    r: int = 0
    gc_order: int = 2
    max_log2_r: int = 14

    def __post_init__(self):
        self.terms = [[la.as_square(_coeff(A) if isinstance(A, QuadCoeff) else A) for A in row]
                      for row in self.terms]
        dims = {A.shape[0] for row in self.terms for A in row}
        if len(dims) != 1:
            raise DimensionError("all payload terms must share one dimension")
        for row in self.terms:
            for A in row:
                if la.spectral_norm(A) >= math.pi / 2:
                    raise NormError("each payload term needs norm < pi/2")

    @property
    def n_K(self):
        return len(self.terms)

    @property
    def n_J(self):
        return max(len(row) for row in self.terms)

    @property
    def dim(self):
        return self.terms[0][0].shape[0]

    def summands(self):
        return [sum(row) for row in self.terms]

    def hamiltonian(self):
        return sum(la.dagger(B) @ B for B in self.summands())

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        terms = [[np.array(A["re"]) + 1j * np.array(A["im"]) for A in row] for row in d.pop("terms")]
        return cls(terms, **d)

    def to_json(self):
        return json.dumps({
            "t": self.t, "eps": self.eps, "p": self.p, "r": self.r, "gc_order": self.gc_order,
            "terms": [[{"re": A.real.tolist(), "im": A.imag.tolist()} for A in row] for row in self.terms],
        })


@dataclass(eq=False)
class SosResult:
    output: BlockEncoding
    error: float
    r: int
    trace: list = field(default_factory=list)

    @property
    def controlled(self):
        return self.output.W


def exact_controlled(H, t):
    return la.blkdiag(la.expm_hermitian(H, t, symmetrize=True), la.expm_hermitian(H, -t, symmetrize=True))


def _inner_provider(row, p):
    """s -> one Suzuki step over j approximating exp(-i s dilate(sum_j A_j))."""
    provs = [hermitian_provider(la.dilate(A)) for A in row]
    if len(provs) == 1:
        return provs[0]

    def provider(s):
        # S_1 is not time-reversible; the adjoint keeps M(-s) = M(s)^-1 exact
        if s < 0:
            return la.dagger(_suzuki_step(provs, -s, p))
        return _suzuki_step(provs, s, p)

    provider.dim = provs[0].dim
    return provider


def _conjugated(provider, n):
    Xa = np.kron(la.X, np.eye(n))

    def out(s):
        return Xa @ provider(s) @ Xa

    out.dim = 2 * n
    return out


def _product_provider(row, p, gc_k, n):
    """s -> two-ancilla unitary whose top-left block approximates exp(-i s dilate(B^dag B))."""
    pb = _inner_provider(row, p)
    pa = _conjugated(pb, n)
    ej, ek, U = multiply_providers(pa, pb, n)
    Ud = la.dagger(U)

    def provider(s):
        M = gc_product(ej, ek, math.sqrt(abs(s)), gc_k)
        if s < 0:
            M = la.dagger(M)
        return U @ M @ Ud

    provider.dim = 4 * n
    return provider


def _top_block_controlled(V, n):
    """Polar-projected top-left 2n block, moved to diag(e^{-iH}, e^{iH}) form."""
    top = polar_unitary(V[: 2 * n, : 2 * n])
    Hd = np.kron(la.HAD, np.eye(n))
    return Hd @ top @ Hd


def _run_sos(step_fn, exact, n, spec, payload, name):
    trace = []
    if spec.r > 0:
        rs = [spec.r]
    else:
        rs = [2**e for e in range(spec.max_log2_r + 1)]
    C = None
    for r in rs:
        step = step_fn(spec.t / r, r)
        V = np.linalg.matrix_power(step, r)
        C = _top_block_controlled(V, n)
        err = la.spectral_norm(C - exact)
        trace.append((r, err))
        if spec.r > 0 or err <= spec.eps:
            out = BlockEncoding(W=C, payload=payload, norm_bound=la.spectral_norm(payload), form=Form.DiagonalZ)
            return SosResult(out, err, r, trace)
    raise ConvergenceError(f"{name} did not reach eps = {spec.eps} by r = {rs[-1]}", trace)


def sos_simulate(spec):
    """Controlled evolution diag(e^{-itH}, e^{itH}) for H = sum_k B_k^dag B_k.

    Each step of length tau runs an outer Suzuki formula over k whose factors are
    group-commutator products of the encodings of sqrt(tau) B_k^dag and
    sqrt(tau) B_k, each built by an inner Suzuki step over j.
    """
    n = spec.dim
    H = spec.hamiltonian()
    exact = exact_controlled(H, spec.t)
    gc_k = spec.gc_order // 2
    if not np.any([np.any(A) for row in spec.terms for A in row]):
        C = np.eye(2 * n, dtype=complex)
        out = BlockEncoding(W=C, payload=spec.t * H, norm_bound=0.0, form=Form.DiagonalZ)
        return SosResult(out, la.spectral_norm(C - exact), 1, [(1, 0.0)])
    provs = [_product_provider(row, spec.p, gc_k, n) for row in spec.terms]

    def step_fn(tau, r):
        return _suzuki_step(provs, tau, spec.p)

    return _run_sos(step_fn, exact, n, spec, spec.t * H, "sos_simulate")


def _pair_eps(eps, r, n_k):
    target = eps / (10 * r * max(n_k, 1))
    return 10.0 ** math.floor(math.log10(target))


def sos_square_path(spec, xi=0.2):
    """Controlled evolution under sum_k B_k^2 for Hermitian B_k via the squaring pipeline."""
    from .hqsvt import square

    n = spec.dim
    Bs = spec.summands()
    for B in Bs:
        if not la.is_hermitian(B, tol=1e-10):
            raise HermiticityError("sos_square_path needs Hermitian summands")
    H = sum(B @ B for B in Bs)
    exact = exact_controlled(H, spec.t)
    if not np.any([np.any(B) for B in Bs]):
        C = np.eye(2 * n, dtype=complex)
        out = BlockEncoding(W=C, payload=spec.t * H, norm_bound=0.0, form=Form.DiagonalZ)
        return SosResult(out, 0.0, 1, [(1, 0.0)])
    inner = [_inner_provider(row, spec.p) for row in spec.terms]

    def step_fn(tau, r):
        pe = _pair_eps(spec.eps, r, spec.n_K)

        def make(k):
            def provider(s):
                a = math.sqrt(abs(s))
                Wk = inner[k](a)
                Ek = BlockEncoding(W=Wk, payload=a * Bs[k], norm_bound=a * la.spectral_norm(Bs[k]))
                if Ek.norm_bound > 1:
                    raise NormError("sqrt(tau) B_k must have norm <= 1; increase r")
                W = square(Ek, pe, xi=xi).output.W
                return la.dagger(W) if s < 0 else W

            provider.dim = 2 * n
            return provider

        return _suzuki_step([make(k) for k in range(len(Bs))], tau, spec.p)

    trace = []
    rs = [spec.r] if spec.r > 0 else [2**e for e in range(spec.max_log2_r + 1)]
    for r in rs:
        tau = spec.t / r
        if max(math.sqrt(abs(tau)) * la.spectral_norm(B) for B in Bs) > 1:
            trace.append((r, float("nan")))
            continue
        V = np.linalg.matrix_power(step_fn(tau, r), r)
        Hd = np.kron(la.HAD, np.eye(n))
        C = Hd @ V @ Hd
        err = la.spectral_norm(C - exact)
        trace.append((r, err))
        if spec.r > 0 or err <= spec.eps:
            out = BlockEncoding(W=C, payload=spec.t * H, norm_bound=abs(spec.t) * la.spectral_norm(H),
                                form=Form.DiagonalZ)
            return SosResult(out, err, r, trace)
    raise ConvergenceError(f"sos_square_path did not reach eps = {spec.eps}", trace)
