"""Chebyshev polynomials, dominated approximation pairs and a grid certifier.

A dominated pair (p, q) for an angle function theta(x) = f(arcsin x) satisfies,
on a region inside [-1, 1],

    p(x) ~ sin(theta(x)),   q(x) ~ cos(theta(x)) / sqrt(1 - x^2),

while p^2 + (1 - x^2) q^2 <= 1 + eps on all of [-1, 1].  Pairs are built by
composing polynomial building blocks, then certified on a dense uniform grid.
"""

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.fft import dct
from scipy.special import erf, erfcinv

from .errors import CertError, DomainError, EvalError, ParityError

PARITY_TOL = 1e-12
MAX_FIT_POINTS = 2**15


class Parity(Enum):
    Odd = "Odd"
    Even = "Even"
    None_ = "None"


@dataclass(frozen=True, eq=False)
class ChebPoly:
    """p(x) = sum_k c_k T_k(x / scale)."""

    coeffs: np.ndarray
    parity: Parity = Parity.None_
    scale: float = 1.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float)).copy()
        if self.parity is Parity.Odd:
            c[0::2] = 0.0
        elif self.parity is Parity.Even:
            c[1::2] = 0.0
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self):
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return C.chebval(x / self.scale, self.coeffs)

    def derivative(self):
        d = C.chebder(self.coeffs) / self.scale if self.coeffs.size > 1 else np.zeros(1)
        par = {Parity.Odd: Parity.Even, Parity.Even: Parity.Odd}.get(self.parity, Parity.None_)
        return ChebPoly(d, par, self.scale)

    def to_list(self):
        return [float(v) for v in self.coeffs[: self.degree + 1]]


def chebyshev_nodes(n):
    """First-kind Chebyshev points cos(pi (j + 1/2) / n), j = 0..n-1."""
    return np.cos(np.pi * (np.arange(n) + 0.5) / n)


def _coeffs_from_values(values):
    n = values.size
    c = dct(values, type=2) / n
    c[0] /= 2
    return c


def _detect_parity(c, requested):
    if requested is not None:
        return requested
    if c.size == 1:
        return Parity.Even
    big = max(np.max(np.abs(c)), 1.0)
    if np.max(np.abs(c[1::2]), initial=0.0) <= PARITY_TOL * big:
        return Parity.Even
    if np.max(np.abs(c[0::2]), initial=0.0) <= PARITY_TOL * big:
        return Parity.Odd
    return Parity.None_


def _sample(f, x):
    y = np.asarray(f(x), dtype=float)
    if np.any(~np.isfinite(y)):
        bad = x[~np.isfinite(y)][0]
        raise EvalError(f"function is not finite at node x = {bad}")
    return y


def cheb_fit(f, d, scale=1.0, parity=None):
    """Degree-d interpolant at d + 1 Chebyshev points of [-scale, scale]."""
    if d < 0:
        raise DomainError("degree must be >= 0")
    x = chebyshev_nodes(d + 1)
    c = _coeffs_from_values(_sample(f, scale * x))
    return ChebPoly(c, _detect_parity(c, parity), scale)


def chop(c, tol):
    """Drop trailing coefficients whose absolute sum is at most tol."""
    tail = np.cumsum(np.abs(c[::-1]))[::-1]
    keep = np.flatnonzero(tail > tol)
    m = int(keep[-1]) + 1 if keep.size else 1
    return c[:m]


def cheb_fit_adaptive(f, tol, scale=1.0, parity=None, n0=64, max_points=MAX_FIT_POINTS):
    """Interpolate at doubling node counts until the tail is below tol, then chop."""
    n = n0
    while True:
        x = chebyshev_nodes(n)
        c = _coeffs_from_values(_sample(f, scale * x))
        tail = np.sum(np.abs(c[(3 * n) // 4:]))
        if tail <= tol / 4 or n >= max_points:
            break
        n *= 2
    if tail > tol / 4:
        raise CertError(f"Chebyshev fit did not converge to {tol:.1e} with {n} points")
    c = chop(c, tol / 4)
    return ChebPoly(c, _detect_parity(c, parity), scale)


def degree_bound(rho, M, eps):
    """Smallest d with 2 M / (rho - 1) * rho^(-d) <= eps."""
    if rho <= 1:
        raise DomainError("Bernstein ellipse parameter must exceed 1")
    if eps <= 0:
        raise DomainError("eps must be positive")
    if M == 0:
        return 0
    lead = 2 * M / (rho - 1)
    d = max(0, math.ceil(math.log(lead / eps) / math.log(rho)) - 1)
    while lead * rho ** (-d) > eps:
        d += 1
    return d


# Maclaurin building blocks -------------------------------------------------

def _central_binomial_ratios(m):
    """C(2k, k) / 4^k for k = 0..m."""
    c = np.ones(m + 1)
    for k in range(1, m + 1):
        c[k] = c[k - 1] * (2 * k - 1) / (2 * k)
    return c


def _monomial_to_cheb(mono, parity):
    return ChebPoly(C.poly2cheb(mono), parity)


def maclaurin_arcsin(d):
    """Truncated arcsin series of odd degree d; all coefficients are nonnegative."""
    if d < 1 or d % 2 == 0:
        raise ParityError(f"arcsin truncation needs odd degree, got {d}")
    m = (d - 1) // 2
    ks = np.arange(m + 1)
    mono = np.zeros(d + 1)
    mono[2 * ks + 1] = _central_binomial_ratios(m) / (2 * ks + 1)
    return _monomial_to_cheb(mono, Parity.Odd)


def maclaurin_invsqrt(d):
    """Truncated series of 1/sqrt(1 - x^2) of even degree d."""
    if d < 0 or d % 2:
        raise ParityError(f"inverse square root truncation needs even degree, got {d}")
    m = d // 2
    mono = np.zeros(d + 1)
    mono[0::2] = _central_binomial_ratios(m)
    return _monomial_to_cheb(mono, Parity.Even)


def arcsin_degree(s, eps):
    """Odd degree whose arcsin truncation error on [-s, s] is at most eps."""
    return _series_degree(s, eps, odd=True)


def invsqrt_degree(s, eps):
    return _series_degree(s, eps, odd=False)


def _series_degree(s, eps, odd):
    if not 0 <= s < 1:
        raise DomainError("series region edge must lie in [0, 1)")
    s2 = s * s
    c, k = 1.0, 0
    while True:
        k += 1
        c *= (2 * k - 1) / (2 * k)
        term = c / (2 * k + 1) * s ** (2 * k + 1) if odd else c * s ** (2 * k)
        # geometric tail bound from the next term onward
        if term / (1 - s2) <= eps:
            return 2 * k - 1 if odd else 2 * k - 2
        if k > 10**6:
            raise CertError("series degree exceeds 2e6")


class Trig(Enum):
    Sin = "Sin"
    Cos = "Cos"


def trig_degree(alpha, kind, eps):
    """Smallest degree of the right parity with alpha^(d+1)/(d+1)! <= eps."""
    d = 1 if kind is Trig.Sin else 0
    while alpha ** (d + 1) / math.factorial(d + 1) > eps:
        d += 2
    return d


def trig_poly(alpha, kind, eps):
    """Truncated Maclaurin series of sin(alpha x) or cos(alpha x)."""
    kind = Trig(kind) if not isinstance(kind, Trig) else kind
    d = trig_degree(abs(alpha), kind, eps)
    mono = np.zeros(d + 1)
    start = 1 if kind is Trig.Sin else 0
    for j in range(start, d + 1, 2):
        sign = (-1) ** ((j - start) // 2)
        mono[j] = sign * alpha**j / math.factorial(j)
    par = Parity.Odd if kind is Trig.Sin else Parity.Even
    return _monomial_to_cheb(mono, par)


# windows and extension ----------------------------------------------------

def erf_bump(u, center, kappa):
    """0.5 (erf(kappa (u + center)) - erf(kappa (u - center)))."""
    return 0.5 * (erf(kappa * (u + center)) - erf(kappa * (u - center)))


def window_poly(xi, b, eps_rec, degree=None, max_doublings=8):
    """Even polynomial on [-b, b] equal to ~1 on |y| <= 1 - xi and ~0 on 1 <= |y| <= b.

    Values lie in [1 - eps_rec, 1] on the plateau, in [0, eps_rec] outside and
    in [0, 1] in the transition.  With ``degree`` given, the fit is returned
    without certification.
    """
    if not (0 < xi <= 1 < b):
        raise DomainError("window needs 0 < xi <= 1 < b")
    half = xi / 2 / b
    center = (1 - xi / 2) / b
    kappa = erfcinv(eps_rec / 4) / half
    lo, hi = 1 - eps_rec / 2, eps_rec / 4

    def g(y):
        return lo * erf_bump(y / b, center, kappa) + hi

    if degree is not None:
        return cheb_fit(g, degree, scale=b, parity=Parity.Even)
    d = max(16, int(4 * kappa))
    grid = np.linspace(-b, b, 20001)
    inner = np.abs(grid) <= 1 - xi
    outer = np.abs(grid) >= 1
    for _ in range(max_doublings + 1):
        w = cheb_fit(g, d, scale=b, parity=Parity.Even)
        v = w(grid)
        ok = (
            np.all(v[inner] >= 1 - eps_rec)
            and np.all(v <= 1)
            and np.all(v >= 0)
            and np.all(v[outer] <= eps_rec)
        )
        if ok:
            return w
        d *= 2
    raise CertError(f"window polynomial failed certification up to degree {d // 2}")


def dominated_extension(f, xi, b, eps_dom, grid_points=20001):
    """h = f * window on [-b, b]: h ~ f on [-1 + xi, 1 - xi], |h| <= |f| + eps on [-1, 1],
    |h| <= eps on 1 <= |y| <= b.  Returned with scale b, parity preserved."""
    if not isinstance(f, ChebPoly):
        raise TypeError("dominated_extension needs a ChebPoly")
    if not np.any(f.coeffs):
        return ChebPoly(np.zeros(1), f.parity, b)
    grid = np.linspace(-b, b, grid_points)
    fmax_in = np.max(np.abs(f(grid[np.abs(grid) <= 1])))
    fmax_all = np.max(np.abs(f(grid)))
    eps_rec = min(eps_dom / (2 * max(fmax_in, 1e-300)), eps_dom / (2 * fmax_all), 0.25)
    w = window_poly(xi, b, eps_rec)
    # f has degree f.degree in y; its degree in y/b is the same
    n = f.degree + w.degree + 1
    h = cheb_fit(lambda y: f(y) * w(y), n, scale=b, parity=f.parity)
    hv, fv = h(grid), f(grid)
    plateau = np.abs(grid) <= 1 - xi
    inside = np.abs(grid) <= 1
    ok = (
        np.max(np.abs(hv - fv)[plateau], initial=0) <= eps_dom
        and np.all(np.abs(hv[inside]) <= np.abs(fv[inside]) + eps_dom)
        and np.max(np.abs(hv[~inside]), initial=0) <= eps_dom
    )
    if not ok:
        raise CertError("dominated extension failed grid certification")
    return h


# dominated pairs ------------------------------------------------------------

@dataclass
class CertReport:
    grid_points: int
    eps: float
    max_sin_error: float
    argmax_sin: float
    max_cos_error: float
    argmax_cos: float
    max_dominated_excess: float
    argmax_dominated: float
    markov_slack: float
    certified: bool

    def violations(self):
        return {
            "sin": self.max_sin_error,
            "cos": self.max_cos_error,
            "dominated": self.max_dominated_excess,
        }


@dataclass(eq=False)
class DominatedPair:
    target: str
    p: ChebPoly
    q: ChebPoly
    xi: float
    eps: float
    region: tuple
    certified: bool = False
    grid_points: int = 0
    max_violations: dict = field(default_factory=dict)
    angle: Optional[Callable] = field(default=None, repr=False)
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "target": self.target,
            "xi": self.xi,
            "eps": self.eps,
            "region": [list(iv) for iv in self.region],
            "params": self.params,
            "degree_p": self.p.degree,
            "degree_q": self.q.degree,
            "coeffs_p": self.p.to_list(),
            "coeffs_q": self.q.to_list(),
            "certified": self.certified,
            "grid_points": self.grid_points,
            "max_violations": self.max_violations,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def region_for(xi):
    s = math.sin(math.pi / 2 - xi)
    return ((-s, s),)


def _in_region(x, region):
    mask = np.zeros(x.shape, dtype=bool)
    for a, b in region:
        mask |= (x >= a) & (x <= b)
    return mask


def verify_dominated(pair, angle_fn=None, grid_points=20001, region=None):
    """Grid report of the three dominated-pair conditions."""
    if grid_points < 10000:
        raise DomainError("certification grids need at least 1e4 points")
    angle_fn = angle_fn if angle_fn is not None else pair.angle
    region = region if region is not None else pair.region
    x = np.linspace(-1.0, 1.0, int(grid_points))
    pv, qv = pair.p(x), pair.q(x)
    dom = pv**2 + (1 - x**2) * qv**2 - 1
    k = int(np.argmax(dom))
    dom_excess = max(float(dom[k]), 0.0)
    mask = _in_region(x, region)
    xr = x[mask]
    if xr.size and angle_fn is not None:
        th = angle_fn(xr)
        es = np.abs(pv[mask] - np.sin(th))
        ec = np.abs(qv[mask] - np.cos(th) / np.sqrt(1 - xr**2))
        ks, kc = int(np.argmax(es)), int(np.argmax(ec))
        sin_err, cos_err = float(es[ks]), float(ec[kc])
        arg_s, arg_c = float(xr[ks]), float(xr[kc])
    else:
        sin_err = cos_err = 0.0
        arg_s = arg_c = float("nan")
    # Markov: |P'| <= deg^2 max|P| between grid points of spacing h
    deg = 2 * max(pair.p.degree, pair.q.degree + 1)
    h = 2.0 / (grid_points - 1)
    slack = deg**2 * float(np.max(np.abs(dom + 1))) * h / 2
    eps = pair.eps
    ok = sin_err <= eps and cos_err <= eps and dom_excess <= eps
    return CertReport(
        grid_points=int(grid_points),
        eps=eps,
        max_sin_error=sin_err,
        argmax_sin=arg_s,
        max_cos_error=cos_err,
        argmax_cos=arg_c,
        max_dominated_excess=dom_excess,
        argmax_dominated=float(x[k]),
        markov_slack=slack,
        certified=bool(ok),
    )


def _region_edge(region):
    return max(max(abs(a), abs(b)) for a, b in region)


def _assemble(target, inner_fn, angle, region, xi, eps, params, rounds=2, grid_points=20001):
    """Shared recipe: fit an odd inner angle polynomial, then compose with sin, cos, invsqrt."""
    s = _region_edge(region)
    amp = 1.0 / math.sqrt(1 - s * s)
    tol = eps / (16 * amp)
    report = None
    for _ in range(rounds + 1):
        inner = inner_fn(tol)
        xs = np.linspace(-1, 1, 40001)
        alpha = max(float(np.max(np.abs(inner(xs)))) * 1.01, 1e-9)
        hs = trig_poly(alpha, Trig.Sin, tol)
        hc = trig_poly(alpha, Trig.Cos, tol)
        hinv = maclaurin_invsqrt(invsqrt_degree(s, tol))

        def pfun(x):
            return hs(inner(x) / alpha)

        def qfun(x):
            return hinv(x) * hc(inner(x) / alpha)

        p = cheb_fit_adaptive(pfun, tol, parity=Parity.Odd)
        q = cheb_fit_adaptive(qfun, tol, parity=Parity.Even)
        pair = DominatedPair(target, p, q, xi, eps, tuple(region), angle=angle,
                             params=dict(params, alpha=alpha))
        report = verify_dominated(pair, angle, grid_points, region)
        if report.certified:
            pair.certified = True
            pair.grid_points = grid_points
            pair.max_violations = report.violations()
            return pair
        tol /= 8
    raise CertError(f"pair {target} failed certification: {report.violations()}")


def _as_callable_poly(f):
    if isinstance(f, ChebPoly):
        return f
    raise TypeError("expected a ChebPoly")


def dominated_pair(f, xi, eps, grid_points=20001):
    """Pair for the odd angle function f(arcsin x), composed through a Maclaurin arcsin."""
    f = _as_callable_poly(f)
    if f.parity is not Parity.Odd:
        raise ParityError("dominated_pair needs an odd polynomial")
    if not 0 < xi <= math.pi / 2:
        raise DomainError("xi must lie in (0, pi/2]")
    region = region_for(xi)
    s = _region_edge(region)
    t = np.linspace(-math.pi / 2, math.pi / 2, 20001)
    dfmax = float(np.max(np.abs(f.derivative()(t)))) if f.degree else 0.0

    def inner_fn(tol):
        d = arcsin_degree(s, tol / max(dfmax, 1.0))
        h = maclaurin_arcsin(d)
        return cheb_fit_adaptive(lambda x: f(h(x)), tol / 2, parity=Parity.Odd)

    def angle(x):
        return f(np.arcsin(x))

    return _assemble("poly", inner_fn, angle, region, xi, eps,
                     {"coeffs_f": f.to_list(), "scale_f": f.scale}, grid_points=grid_points)


def _window(region_edge, cutoff, delta):
    """Even erf window ~1 on |x| <= region_edge and <= delta at |x| >= cutoff."""
    half = (cutoff - region_edge) / 2
    center = (cutoff + region_edge) / 2
    kappa = erfcinv(delta) / half

    def w(x):
        return erf_bump(x, center, kappa)

    return w


def _windowed_inner(smooth_angle, region_edge, cutoff, scale_hint):
    def inner_fn(tol):
        delta = tol / (8 * max(scale_hint, 1.0))
        w = _window(region_edge, cutoff, delta)

        def g(x):
            inside = np.abs(x) < cutoff
            xc = np.where(inside, x, 0.0)
            return np.where(inside, smooth_angle(xc) * w(x), 0.0)

        return cheb_fit_adaptive(g, tol / 2, parity=Parity.Odd)

    return inner_fn


def pair_fractional(tau, xi, eps, grid_points=20001):
    """Angle tau * arcsin(x), giving the fractional scaling tau A."""
    if not 0 < tau < 1:
        raise DomainError("tau must lie in (0, 1)")
    region = region_for(xi)

    def angle(x):
        return tau * np.arcsin(x)

    inner = _windowed_inner(angle, region[0][1], 1.0, tau * math.pi / 2)
    return _assemble("fractional", inner, angle, region, xi, eps, {"tau": tau}, grid_points=grid_points)


def pair_overlap(xi, eps, grid_points=20001):
    """Angle arcsin(arcsin x) / 2 on |x| <= sin(1 - xi)."""
    if not 0 < xi < 1:
        raise DomainError("overlap pair needs 0 < xi < 1")
    s = math.sin(1 - xi)
    region = ((-s, s),)

    def angle(x):
        return 0.5 * np.arcsin(np.clip(np.arcsin(x), -1, 1))

    inner = _windowed_inner(angle, s, math.sin(1.0), math.pi / 4)
    return _assemble("overlap", inner, angle, region, xi, eps, {}, grid_points=grid_points)


def pair_cube(xi, eps, grid_points=20001):
    """Angle arcsin(x)^3."""
    region = region_for(xi)

    def angle(x):
        return np.arcsin(x) ** 3

    inner = _windowed_inner(angle, region[0][1], 1.0, (math.pi / 2) ** 3)
    return _assemble("cube", inner, angle, region, xi, eps, {}, grid_points=grid_points)


def pair_green(eta, xi, eps, grid_points=20001):
    """Angle arcsin(eta a / (eta^2 + a^2)) / 2 with a = arcsin x."""
    if eta <= 0:
        raise DomainError("eta must be positive")
    region = region_for(xi)

    def angle(x):
        a = np.arcsin(x)
        return 0.5 * np.arcsin(eta * a / (eta**2 + a**2))

    inner = _windowed_inner(angle, region[0][1], 1.0, math.pi / 12)
    return _assemble("green", inner, angle, region, xi, eps, {"eta": eta}, grid_points=grid_points)


def pair_inverse(kappa, xi, eps, grid_points=20001):
    """Angle 1 / (kappa arcsin x) on sin(1/kappa) <= |x| <= sin(pi/2 - xi)."""
    if kappa <= 1:
        raise DomainError("kappa must exceed 1")
    lo = math.sin(1 / kappa)
    hi = math.sin(math.pi / 2 - xi)
    if lo >= hi:
        raise DomainError("empty inversion region: increase kappa or lower xi")
    region = ((-hi, -lo), (lo, hi))

    def angle(x):
        return 1.0 / (kappa * np.arcsin(x))

    def smooth(x):
        # equals the exact angle to ~e^-64 once |arcsin x| >= 1/kappa, odd and smooth at 0
        u = kappa * np.arcsin(x)
        safe = np.where(u == 0, 1.0, u)
        return np.where(u == 0, 0.0, -np.expm1(-((2 * u) ** 6)) / safe)

    inner = _windowed_inner(smooth, hi, 1.0, 2.0)
    return _assemble("inverse", inner, angle, region, xi, eps, {"kappa": kappa}, grid_points=grid_points)


def green_even(eta, xi, eps, grid_points=20001):
    """Even polynomial ~ eta / sqrt(eta^2 + arcsin(x)^2) on the region, |h| <= 1 + eps on [-1, 1]."""
    if eta <= 0:
        raise DomainError("eta must be positive")
    s = math.sin(math.pi / 2 - xi)

    def target(x):
        a = np.arcsin(x)
        return eta / np.sqrt(eta**2 + a**2)

    w = _window(s, 1.0, eps / 8)

    def g(x):
        inside = np.abs(x) < 1
        return np.where(inside, target(np.where(inside, x, 0.0)) * w(x), 0.0)

    h = cheb_fit_adaptive(g, eps / 4, parity=Parity.Even)
    x = np.linspace(-1, 1, grid_points)
    hv = h(x)
    mask = np.abs(x) <= s
    if np.max(np.abs(hv[mask] - target(x[mask]))) > eps or np.max(np.abs(hv)) > 1 + eps:
        raise CertError("green_even failed certification")
    return h
