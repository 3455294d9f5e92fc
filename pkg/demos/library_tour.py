"""Walk through the main operations on small matrices and compare with dense oracles."""

import numpy as np
from numpy.polynomial import chebyshev as C

from hamlin import blockenc as be
from hamlin import corela as la
from hamlin import estimate as es
from hamlin import fermions as fe
from hamlin import formulas as F
from hamlin import hqsvt as hq
from hamlin import polyapprox as pa


def main():
    rng = np.random.default_rng(1)

    A = la.random_matrix(rng, 4, 0.8)
    E = be.encode(A)
    print(f"decode(encode(A)) error: {la.spectral_norm(be.decode(E) - A):.2e}")

    B = la.random_matrix(rng, 4, 0.8)
    for r in (16, 64, 256):
        EAB = F.multiply_generic(E, be.encode(B), F.FormulaSpec(F.Kind.GroupCommutator, 2, r))
        print(f"group-commutator product, r={r:4d}: error {la.spectral_norm(be.decode(EAB) - A @ B):.2e}")

    cube = pa.ChebPoly(C.poly2cheb([0, 0, 0, 1]), pa.Parity.Odd)
    res = hq.qsvt_odd(E, hq.pair_for(cube, 0.4, 1e-6))
    print(f"singular values cubed by QSVT: error {res.measured_error:.2e}")

    res = hq.invert(be.encode(np.diag([0.5, 0.8, 1.0])), 2.2, 1e-4)
    print(f"inverse / kappa: error {res.measured_error:.2e}")

    est = es.overlap_estimate(be.encode(np.array([[0.6]])), np.ones(1), 0.02, 1e-3, seed=5)
    print(f"overlap estimate of 0.6: {est.value.real:.4f} from {est.n_samples} samples per setting")

    H = fe.quad(np.array([[-1.0, 0.3, 0.0], [0.3, -0.6, 0.2], [0.0, 0.2, -0.4]]))
    g = es.green_estimate(H, 0, 1, 0.2 + 0.5j, 0.05)
    print(f"Green's function: retarded {g.retarded:.4f} vs dense inverse {g.oracle_retarded:.4f}")

    terms = [[la.random_matrix(rng, 2, 0.5) for _ in range(2)] for _ in range(2)]
    sos = fe.sos_simulate(fe.SosSpec(terms, t=0.5, eps=1e-3))
    print(f"sum-of-squares evolution: r={sos.r}, error {sos.error:.2e}")


if __name__ == "__main__":
    main()
