"""One test per acceptance criterion, at the stated tolerances."""

import json
import math
import time

import numpy as np
from numpy.polynomial import chebyshev as C

from hamlin import blockenc as be
from hamlin import cli
from hamlin import corela as la
from hamlin import estimate as es
from hamlin import fermions as fe
from hamlin import formulas as F
from hamlin import hqsvt as hq
from hamlin import polyapprox as pa
from hamlin.experiments import COMMANDS

SEED = 20240611


def loglog_slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def ensemble(n_pairs=20):
    rng = np.random.default_rng(SEED)
    pairs = []
    for i in range(n_pairs):
        d = 2 + i % 7
        pairs.append((la.random_hermitian(rng, d), la.random_hermitian(rng, d)))
    return pairs


def m2_error(J, K, tau):
    return la.spectral_norm(F.gc_m2(J, K, tau) - F.gc_target(J, K, tau * tau))


def test_criterion_01_commutator_bound(acceptance):
    start = time.perf_counter()
    violations, worst = 0, 0.0
    for J, K in ensemble():
        for tau in (0.02, 0.05, 0.1):
            ratio = m2_error(J, K, tau) / F.gc_m2_bound(J, K, tau)
            worst = max(worst, ratio)
            violations += ratio > 1
    elapsed = time.perf_counter() - start
    acceptance(1, violations == 0 and elapsed < 10,
               f"violations={violations}, max error/bound={worst:.4f}, runtime={elapsed:.2f}s")


def test_criterion_02_bch_tightness(acceptance):
    tau = 0.01
    devs = [abs(m2_error(J, K, tau) / tau**3 / F.gc_bch_constant(J, K) - 1) for J, K in ensemble()]
    acceptance(2, max(devs) <= 0.02, f"max relative deviation={max(devs):.2e} (tolerance 2e-2)")


def test_criterion_03_order_conditions(acceptance):
    start = time.perf_counter()
    X, Y = la.X, la.Y
    taus = np.geomspace(3e-2, 3e-1, 6)
    s2 = loglog_slope(taus, [m2_error(X, Y, t) for t in taus])
    s4 = loglog_slope(taus, [la.spectral_norm(F.gc_higher(X, Y, t, 2) - F.gc_target(X, Y, t * t)) for t in taus])
    rs = [16, 32, 64, 128, 256]
    sr = loglog_slope(rs, [la.spectral_norm(F.gc_evolve(X, Y, 1.0, r) - F.gc_target(X, Y, 1.0)) for r in rs])
    rng = np.random.default_rng(3)
    terms = [la.random_hermitian(rng, 4) for _ in range(3)]
    exact = la.expm_hermitian(sum(terms), 1.0)
    rs_s = [4, 8, 16, 32, 64]
    sp = {}
    for p in (1, 2, 4):
        errs = [la.spectral_norm(F.trotter_apply(terms, F.FormulaSpec(F.Kind.Suzuki, p, r, 1.0)) - exact) for r in rs_s]
        sp[p] = loglog_slope(rs_s, errs)
    elapsed = time.perf_counter() - start
    ok = (
        abs(s2 - 3) <= 0.2 and abs(s4 - 5) <= 0.2 and abs(sr + 0.5) <= 0.1
        and all(abs(sp[p] + p) <= 0.15 for p in sp) and elapsed < 60
    )
    acceptance(3, ok, f"M2 {s2:.3f}, M4 {s4:.3f}, M2^r {sr:.3f}, "
               + ", ".join(f"S{p} {s:.3f}" for p, s in sp.items()) + f", runtime={elapsed:.2f}s")


def test_criterion_04_coefficients(acceptance):
    u2 = F.suzuki_coefficients(2)
    v2, b2, g2 = F.gc_coefficients(2)
    expected = {"u2": (u2, 0.4144907717), "v2": (v2, 0.6035533906), "beta2": (b2, 1.0986841135), "gamma2": (g2, 0.9238795325)}
    devs = {k: abs(a - b) for k, (a, b) in expected.items()}
    acceptance(4, max(devs.values()) <= 1e-9, "max deviation=" + f"{max(devs.values()):.1e}")


def test_criterion_05_elementary_ops(acceptance):
    rng = np.random.default_rng(SEED + 5)
    worst = 0.0
    for i in range(100):
        n = 1 + i % 4
        A = la.random_matrix(rng, n, rng.uniform(0.1, 1.4))
        H = la.random_hermitian(rng, n, rng.uniform(0.1, 1.4))
        E, EH = be.encode(A), be.encode(H)
        theta = rng.uniform(-np.pi, np.pi)
        m = int(rng.integers(0, 4))
        U, V = la.random_unitary(rng, n), la.random_unitary(rng, n)
        pairs = [
            (be.conjugate(E).W, be.encode(la.dagger(A)).W),
            (be.phase_scale(E, theta).W, be.encode(np.exp(1j * theta) * A).W),
            (be.integer_scale(E, m).W, be.encode(m * A).W),
            (be.unitary_sandwich(E, U, V).W, be.encode(U @ A @ V).W),
            (be.to_controlled_evolution(EH), la.blkdiag(la.expm_hermitian(H), la.expm_hermitian(H, -1.0))),
        ]
        worst = max(worst, max(la.spectral_norm(a - b) for a, b in pairs))
    acceptance(5, worst <= 1e-9, f"max deviation over 100 instances x 5 ops={worst:.1e}")


PAIRS = {
    "x": lambda eps: pa.dominated_pair(pa.ChebPoly(C.poly2cheb([0, 1]), pa.Parity.Odd), 0.4, eps),
    "x^3": lambda eps: pa.dominated_pair(pa.ChebPoly(C.poly2cheb([0, 0, 0, 1]), pa.Parity.Odd), 0.4, eps),
    "fractional 0.5": lambda eps: pa.pair_fractional(0.5, 0.4, eps),
    "overlap": lambda eps: pa.pair_overlap(0.2, eps),
    "inverse 5": lambda eps: pa.pair_inverse(5.0, 0.4, eps),
    "green 0.5": lambda eps: pa.pair_green(0.5, 0.5, eps),
    "cube": lambda eps: pa.pair_cube(0.2, eps),
}


def test_criterion_06_dominated_pairs(acceptance):
    start = time.perf_counter()
    eps = 1e-4
    failed, degrees = [], []
    for name, build in PAIRS.items():
        pair = build(eps)
        r1 = pa.verify_dominated(pair, grid_points=20000)
        r2 = pa.verify_dominated(pair, grid_points=80000)
        if not (pair.certified and r1.certified and r2.certified):
            failed.append(name)
        degrees.append(f"{name}:{pair.p.degree}")
    elapsed = time.perf_counter() - start
    acceptance(6, not failed and elapsed < 120,
               f"failed={failed or 'none'}, degrees p [{', '.join(degrees)}], runtime={elapsed:.1f}s")


def test_criterion_07_qsvt(acceptance):
    rng = np.random.default_rng(SEED + 7)
    cube = pa.ChebPoly(C.poly2cheb([0, 0, 0, 1]), pa.Parity.Odd)
    worst = {}
    for eps in (1e-4, 1e-6):
        pair = hq.pair_for(cube, 0.4, eps)
        ratios = []
        for i in range(8):
            A = la.random_matrix(rng, 1 + i, rng.uniform(0.2, 1.0))
            ratios.append(hq.qsvt_odd(be.encode(A), pair).measured_error / (10 * math.sqrt(eps)))
        H = la.random_hermitian(rng, 4, 0.5)
        even = hq.qsvt_even_hermitian(be.encode(H), pa.ChebPoly(C.poly2cheb([0, 0, 1]), pa.Parity.Even), eps)
        sq = hq.square(be.encode(la.random_hermitian(rng, 4, 0.9)), eps)
        compounded = 10 * math.sqrt(eps) + 2 * eps
        worst[eps] = (max(ratios), even.measured_error / compounded, sq.measured_error / compounded)
    ok = all(max(v) <= 1 for v in worst.values())
    detail = "; ".join(
        f"eps={e:.0e}: odd {v[0]:.1e}, even {v[1]:.1e}, square {v[2]:.1e} of bound" for e, v in worst.items()
    )
    acceptance(7, ok, detail)


def generic(A, B, r):
    return be.decode(F.multiply_generic(be.encode(A), be.encode(B), F.FormulaSpec(F.Kind.GroupCommutator, 2, r)))


def test_criterion_08_multiplication(acceptance):
    scalar = generic(np.array([[0.4]]), np.array([[0.5]]), 64)[0, 0]
    rng = np.random.default_rng(SEED + 8)
    A, B = la.random_matrix(rng, 4, 1.0), la.random_matrix(rng, 4, 1.0)
    rs = [2**k for k in range(4, 13)]
    errs = [la.spectral_norm(generic(A, B, r) - A @ B) for r in rs]
    reached = next((r for r, e in zip(rs, errs) if e <= 1e-2), None)
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    ok = abs(scalar - 0.2) <= 5e-3 and reached is not None and monotone
    acceptance(8, ok, f"scalar decode={scalar.real:.5f}, dim-4 error<=1e-2 at r={reached} "
               f"(final {errs[-1]:.1e}), monotone={monotone}")


def test_criterion_09_overlap(acceptance):
    E = be.encode(np.array([[0.6]]))
    eps, p_fail = 0.02, 1e-3
    failures = 0
    for rep in range(200):
        est = es.overlap_estimate(E, np.ones(1), eps, p_fail, seed=SEED, rep=rep, keep_bits=False)
        failures += abs(est.value - 0.6) > eps
    acceptance(9, failures <= 2, f"{failures}/200 repetitions off by more than eps "
               f"(N={es.overlap_samples(eps, p_fail)} per setting)")


def test_criterion_10_eta_seminorm(acceptance):
    rng = np.random.default_rng(SEED + 10)
    fast_dev = 0.0
    for n in range(1, 13):
        J = la.random_hermitian(rng, n)
        for eta in range(n + 1):
            fast_dev = max(fast_dev, abs(fe.eta_seminorm(J, eta) - fe.eta_seminorm_bruteforce(J, eta)))
    op_dev = 0.0
    for n in range(1, 7):
        U = la.random_unitary(rng, n)
        normal = U @ np.diag(rng.normal(size=n) + 1j * rng.normal(size=n)) @ la.dagger(U)
        for J in (la.random_hermitian(rng, n), normal):
            for eta in range(n + 1):
                op_dev = max(op_dev, abs(fe.eta_seminorm(J, eta) - fe.eta_seminorm_operator(J, eta)))
    acceptance(10, fast_dev <= 1e-10 and op_dev <= 1e-8,
               f"fast vs brute force max dev={fast_dev:.1e} (n<=12), operator vs coefficient={op_dev:.1e} (n<=6)")


def test_criterion_11_sos(acceptance):
    rng = np.random.default_rng(SEED + 11)
    terms = [[la.random_matrix(rng, 2, 0.5) for _ in range(2)] for _ in range(2)]
    res = fe.sos_simulate(fe.SosSpec(terms, t=0.5, eps=1e-2, p=2))
    n = 3
    fterms = [[0.3 * fe.quad(la.random_hermitian(rng, n))] for _ in range(2)]
    fres = fe.sos_simulate(fe.SosSpec(fterms, t=0.5, eps=1e-3, p=2))
    top = fres.controlled[: 2**n, : 2**n]
    leak = 0.0
    for eta in range(n + 1):
        idx = fe.sector_basis(n, eta)
        psi = np.zeros(2**n, dtype=complex)
        psi[idx] = rng.normal(size=idx.size)
        psi /= np.linalg.norm(psi)
        leak = max(leak, np.linalg.norm(np.delete(top @ psi, idx)))
    ok = res.error <= 1e-2 and res.r <= 2**14 and leak <= 1e-8
    acceptance(11, ok, f"converged at r={res.r} with error {res.error:.1e}; sector leakage {leak:.1e}")


FAST = {
    "bound-check": [],
    "trotter-sweep": [],
    "gc-sweep": [],
    "multiply-demo": [],
    "qsvt-demo": [],
    "poly-verify": [],
    "overlap-sim": ["--reps", "20"],
    "green-demo": [],
    "sos-sim": [],
    "eta-norm": [],
}


def _snapshot(out):
    files = {}
    for p in sorted(out.iterdir()):
        data = p.read_bytes()
        if p.name == "manifest.json":
            doc = json.loads(data)
            doc.pop("wall_time_s")
            doc["config"].pop("out_dir")
            data = json.dumps(doc, sort_keys=True).encode()
        files[p.name] = data
    return files


def test_criterion_12_determinism(acceptance, tmp_path):
    differing = []
    for name in COMMANDS:
        snaps = []
        for run in ("a", "b"):
            out = tmp_path / name / run
            cli.main([name, "--seed", "7", "--out", str(out), *FAST[name]])
            snaps.append(_snapshot(out))
        if snaps[0] != snaps[1] or not snaps[0]:
            differing.append(name)
    acceptance(12, not differing, f"{len(COMMANDS)} commands re-run; differing={differing or 'none'}")
