"""Kernel zoo, Mittag-Leffler values and the resolvent identity.

    python demos/kernels_and_resolvents.py
"""

import math

import numpy as np

from vklab import (
    Exponential,
    GammaKernel,
    MLResolvent,
    PowerLaw,
    TimeGrid,
    eval_kernel,
    eval_via_measure,
    mittag_leffler,
    mp_condition,
    resolvent_residual,
)


def main():
    ts = np.array([0.01, 0.1, 1.0, 10.0])
    print("closed form vs Bernstein-measure quadrature")
    for k in (PowerLaw(0.3), GammaKernel(1.0, 0.3), Exponential(1.0), MLResolvent(1.0, 0.3)):
        closed = eval_kernel(k, ts)
        via = np.array([eval_via_measure(k.measure, t) for t in ts])
        rel = np.max(np.abs(via - closed) / closed)
        print(f"  {k!r:45s} K(1)={closed[2]:.6f}  max rel diff {rel:.1e}")

    print("\nMittag-Leffler")
    print(f"  E_(1/2,1)(-1) = {mittag_leffler(0.5, 1.0, -1.0):.15f}")
    print(f"  e*erfc(1)     = {math.e * math.erfc(1.0):.15f}")

    print("\nuniform-in-time moment M_p = int x^((2-p)/(2p)) mu(dx), p = 4")
    for k in (PowerLaw(0.3), GammaKernel(1.0, 0.4), Exponential(1.0)):
        print(f"  {k!r:45s} M_4 = {mp_condition(k, 4.0)}")

    print("\nresolvent residual of K = t^(-0.2)/Gamma(0.8), lam = 1")
    K = PowerLaw(0.3, c=1.0 / math.gamma(0.8))
    R = MLResolvent(1.0, 0.3)
    prev = None
    for steps in (2**8, 2**9, 2**10, 2**11, 2**12):
        r = resolvent_residual(K, 1.0, R, TimeGrid(1.0, steps))
        ratio = f"  ratio {prev / r:.2f}" if prev else ""
        print(f"  steps {steps:5d}  residual {r:.3e}{ratio}")
        prev = r


if __name__ == "__main__":
    main()
