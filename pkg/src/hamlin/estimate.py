"""Sampling protocols: overlap estimation and Green's-function estimation.

Every Bernoulli draw comes from a Philox stream keyed by (seed, repetition,
setting) and addressed by sample index, so results do not depend on chunking
or on the order in which settings are processed.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from . import corela as la
from . import polyapprox as pa
from .blockenc import BlockEncoding, encode
from .errors import DomainError, NormError, StateError
from .hqsvt import even_bounded_transform, qsvt_odd, sv_function

CHUNK = 1 << 16
MASK64 = (1 << 64) - 1


class Setting(Enum):
    """Ancilla preparations, in sampling order."""

    PlusZ = 0
    MinusZ = 1
    MinusX = 2
    PlusY = 3


SETTING_STATES = {
    Setting.PlusZ: np.array([1, 0], dtype=complex),
    Setting.MinusZ: np.array([0, 1], dtype=complex),
    Setting.MinusX: np.array([1, -1], dtype=complex) / math.sqrt(2),
    Setting.PlusY: np.array([1, 1j], dtype=complex) / math.sqrt(2),
}


@dataclass(frozen=True)
class MeasurementPlan:
    samples_per_setting: int
    seed: int
    settings: tuple = tuple(Setting)

    def __post_init__(self):
        if self.samples_per_setting < 0:
            raise ValueError("samples_per_setting must be >= 0")


# sampling ---------------------------------------------------------------------

def _generator(seed, rep, setting, start):
    key = np.array([int(seed) & MASK64, ((int(rep) << 8) | int(setting)) & MASK64], dtype=np.uint64)
    bg = np.random.Philox(key=key)
    # each Philox counter step yields four 64-bit draws, one per double
    bg.advance(start // 4)
    return np.random.Generator(bg)


def bernoulli_bits(p, n, seed, setting=0, rep=0, chunk=CHUNK):
    """n Bernoulli(p) outcomes; bit i depends only on (seed, rep, setting, i)."""
    if chunk % 4:
        raise ValueError("chunk must be a multiple of 4")
    p = float(np.clip(p, 0.0, 1.0))
    out = np.empty(n, dtype=np.uint8)
    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        out[start:start + m] = _generator(seed, rep, setting, start).random(m) < p
    return out


def hoeffding_samples(eps, p_fail):
    """Samples so that a Bernoulli mean is within eps with probability >= 1 - p_fail."""
    if not (eps > 0 and 0 < p_fail < 1):
        raise DomainError("need eps > 0 and 0 < p_fail < 1")
    return math.ceil(math.log(2 / p_fail) / (2 * eps**2))


def amplitude_estimate(p_true, eps, p_fail, seed, rep=0, setting=0):
    """Mean of Bernoulli(p_true) draws at the Hoeffding budget."""
    n = hoeffding_samples(eps, p_fail)
    return float(bernoulli_bits(p_true, n, seed, setting, rep).mean())


# overlap ----------------------------------------------------------------------

def _unit(psi):
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if abs(np.linalg.norm(psi) - 1) > 1e-12:
        raise StateError(f"state norm {np.linalg.norm(psi):.15g} is not 1")
    return psi


def overlap_probabilities(E_f, psi):
    """Born probabilities of ancilla |0> for the four settings (+Z, -Z, -X, +Y)."""
    psi = _unit(psi)
    W = E_f.standard_W()
    n = W.shape[0] // 2
    if psi.size != n:
        raise StateError(f"state has dimension {psi.size}, encoding acts on {n}")
    W00, W01 = W[:n, :n], W[:n, n:]
    probs = []
    for s in Setting:
        b = SETTING_STATES[s]
        v = b[0] * (W00 @ psi) + b[1] * (W01 @ psi)
        probs.append(float(np.clip(np.vdot(v, v).real, 0.0, 1.0)))
    return tuple(probs)


def combine(probs):
    """(2 pY+ - pZ+ - pZ-) + i (2 pX- - pZ+ - pZ-)."""
    zp, zm, xm, yp = probs
    return complex(2 * yp - zp - zm, 2 * xm - zp - zm)


def overlap_angle(x):
    return 0.5 * np.arcsin(np.clip(x, -1, 1))


def exact_overlap_transform(E):
    """Encoding of the exact arcsin/2 singular-value transform of the payload."""
    return encode(sv_function(E.payload, overlap_angle, "odd"))


@lru_cache(maxsize=None)
def _overlap_pair(xi, eps):
    return pa.pair_overlap(xi, eps)


def overlap_slack(norm_bound, cap=0.25, floor=0.02):
    xi = min(cap, 1 - norm_bound)
    if xi < floor:
        raise NormError(f"norm bound {norm_bound:.6g} must be at most {1 - floor}")
    return xi


def overlap_samples(eps, p_fail):
    """Per-setting budget: each probability within eps/4 with failure p_fail/4."""
    return math.ceil(math.log(8 / p_fail) / (2 * (eps / 4) ** 2))


@dataclass(eq=False)
class OverlapEstimate:
    value: complex
    probabilities: tuple
    p_hat: tuple
    n_samples: int
    eps: float
    p_fail: float
    seed: int
    scale: float = 1.0
    bits: dict = field(default_factory=dict, repr=False)

    def to_dict(self):
        return {
            "re": self.value.real,
            "im": self.value.imag,
            "eps": self.eps,
            "p_fail": self.p_fail,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    def write_sample_log(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["setting", "sample_index", "outcome_bit"])
            for s in Setting:
                for i, b in enumerate(self.bits.get(s.name, ())):
                    w.writerow([s.name, i, int(b)])


def sample_probabilities(probs, n, seed, rep=0):
    bits = {s.name: bernoulli_bits(p, n, seed, s.value, rep) for s, p in zip(Setting, probs)}
    p_hat = tuple(float(bits[s.name].mean()) if n else float("nan") for s in Setting)
    return p_hat, bits


def overlap_estimate(E, psi, eps, p_fail, seed, rep=0, exact=False, n_samples=None, keep_bits=True):
    """Estimate <psi|A|psi> from four ancilla settings.

    ``exact`` uses the exact arcsin/2 transform in place of the polynomial pair.
    ``n_samples`` overrides the Hoeffding budget.
    """
    xi = overlap_slack(E.norm_bound)
    if exact:
        Ef, scale = exact_overlap_transform(E), 1.0
    else:
        pair = _overlap_pair(xi, min(1e-4, eps / 50))
        Ef = qsvt_odd(E, pair, f=lambda s: overlap_angle(s)).output
        # undo the known 1/(1 + eps) normalization of the pair
        scale = 1.0 + pair.eps
    probs = overlap_probabilities(Ef, psi)
    n = overlap_samples(eps, p_fail) if n_samples is None else int(n_samples)
    p_hat, bits = sample_probabilities(probs, n, seed, rep)
    value = scale * combine(p_hat)
    return OverlapEstimate(value, probs, p_hat, n, eps, p_fail, seed, scale, bits if keep_bits else {})


# Green's functions ------------------------------------------------------------

class Mode(Enum):
    Exact = "exact"
    Sample = "sample"


@dataclass(eq=False)
class GreenEstimate:
    advanced: complex
    retarded: complex
    oracle_advanced: complex
    oracle_retarded: complex
    eta_tilde: float
    scale: float
    mode: str
    n_samples: int

    @property
    def error(self):
        return max(abs(self.advanced - self.oracle_advanced), abs(self.retarded - self.oracle_retarded))

    def to_dict(self):
        c = lambda z: {"re": z.real, "im": z.imag}
        return {
            "advanced": c(self.advanced),
            "retarded": c(self.retarded),
            "oracle_advanced": c(self.oracle_advanced),
            "oracle_retarded": c(self.oracle_retarded),
            "eta_tilde": self.eta_tilde,
            "scale": self.scale,
            "mode": self.mode,
            "n_samples": self.n_samples,
            "error": self.error,
        }


def ground_state(H):
    lam, Q = la.eig_hermitian(H, symmetrize=True)
    return float(lam[0]), Q[:, 0]


def green_oracle(H, j, k, z, ops=None):
    """Dense-inverse (advanced, retarded) Green's functions."""
    from .fermions import jordan_wigner

    H = la.as_square(H)
    n = int(round(math.log2(H.shape[0])))
    ops = jordan_wigner(n) if ops is None else ops
    lam0, psi0 = ground_state(H)
    Hs = H - lam0 * np.eye(H.shape[0])
    Aj, Ak = ops[j], ops[k]
    I = np.eye(H.shape[0])
    ret = np.vdot(Ak @ psi0, np.linalg.solve(z * I + Hs, Aj @ psi0))
    adv = np.vdot(la.dagger(Aj) @ psi0, np.linalg.solve(z * I - Hs, la.dagger(Ak) @ psi0))
    return complex(adv), complex(ret)


class _Resolvent:
    """Estimates <u|(i eta + X)^-1|u> for Hermitian X with the two transforms."""

    def __init__(self, Xt, eta, eta_t, eps, xi, mode, delta, p_fail, seed):
        self.E = encode(Xt)
        self.eta = eta
        self.mode = mode
        self.delta = delta
        self.p_fail = p_fail
        self.seed = seed
        pe = min(1e-4, eta * eps / 50)
        self.pair = pa.pair_green(eta_t, xi, pe)
        self.h = pa.green_even(eta_t, xi, pe)
        self.h_eps = pe
        self.Ef = qsvt_odd(self.E, self.pair, f=self._angle(eta_t)).output
        self.R = even_bounded_transform(self.E, self.h, pe)
        self.calls = 0
        self.samples = 0

    @staticmethod
    def _angle(eta_t):
        return lambda s: 0.5 * np.arcsin(eta_t * s / (eta_t**2 + s**2))

    def __call__(self, u):
        norm2 = float(np.vdot(u, u).real)
        if norm2 == 0:
            return 0j
        uh = u / math.sqrt(norm2)
        probs = overlap_probabilities(self.Ef, uh)
        n = uh.size
        v = self.R[:n, :n] @ uh
        p0 = float(np.vdot(v, v).real)
        rep = self.calls
        self.calls += 1
        if self.mode is Mode.Sample:
            n_o = overlap_samples(self.delta, self.p_fail)
            probs, _ = sample_probabilities(probs, n_o, self.seed, rep=2 * rep)
            p0 = amplitude_estimate(p0, self.delta, self.p_fail, self.seed, rep=2 * rep + 1)
            self.samples += 4 * n_o + hoeffding_samples(self.delta, self.p_fail)
        re = (1 + self.pair.eps) * combine(probs).real
        im = -((1 + self.h_eps) ** 2) * p0
        return norm2 / self.eta * complex(re, im)


def _is_real(*arrays, tol=1e-12):
    return all(np.max(np.abs(np.imag(a))) <= tol for a in arrays)


def _element(res, a, b, real_symmetric):
    """<b|R|a> by polarization over diagonal elements."""
    if real_symmetric:
        return 0.5 * (res(a + b) - res(a) - res(b))
    return 0.25 * (res(a + b) - res(a - b) + 1j * res(a + 1j * b) - 1j * res(a - 1j * b))


def green_estimate(H, j, k, z, eps, seed=0, mode="exact", p_fail=0.01, xi=0.5, ops=None):
    """(advanced, retarded) Green's functions at z = zeta + i eta.

    Retarded: <psi0| A_k^dag (z + H - lam0)^-1 A_j |psi0>.
    Advanced: <psi0| A_j (z - (H - lam0))^-1 A_k^dag |psi0>.
    """
    from .fermions import jordan_wigner

    mode = Mode(mode)
    zeta, eta = float(np.real(z)), float(np.imag(z))
    if eta <= 0:
        raise DomainError("Green's functions need Im z > 0")
    H = la.as_square(H)
    if not la.is_hermitian(H, tol=1e-10):
        raise DomainError("H must be Hermitian")
    dim = H.shape[0]
    n = int(round(math.log2(dim)))
    if 2**n != dim:
        raise DomainError("H must act on a whole number of modes")
    ops = jordan_wigner(n) if ops is None else ops
    lam0, psi0 = ground_state(H)
    alpha = la.spectral_norm(H)
    scale = alpha + abs(lam0) + abs(zeta)
    if scale == 0:
        scale = 1.0
    eta_t = eta / scale
    I = np.eye(dim)
    Hs = H - lam0 * I
    real_symmetric = _is_real(H, psi0, *ops)
    # weight of the polarization sum, bounded using ||A psi0|| <= 1
    weight = 3.0 if real_symmetric else 2.0
    delta = eta * eps / (4 * weight)
    seeds = (seed, seed + 1)
    out = []
    for X, a, b, s in (
        ((zeta * I - Hs), la.dagger(ops[k]) @ psi0, la.dagger(ops[j]) @ psi0, seeds[0]),
        ((Hs + zeta * I), ops[j] @ psi0, ops[k] @ psi0, seeds[1]),
    ):
        res = _Resolvent(X / scale, eta, eta_t, eps, xi, mode, delta, p_fail / 16, s)
        out.append((_element(res, a, b, real_symmetric), res.samples))
    oracle = green_oracle(H, j, k, z, ops)
    (adv, na), (ret, nr) = out
    return GreenEstimate(adv, ret, oracle[0], oracle[1], eta_t, scale, mode.value, na + nr)
