"""Oracle for the excursion lifetime tail of the drift -2*alpha,
variance 4x family: the small-start limit of the absorbed-lifetime tail
divided by the scale function, plus a shape check of the speed-mixture
integral against the integrated tail.

The absorbed lifetime from u is inverse-gamma with shape 1+alpha and scale
u/2, so

    tail(z) = lim_{u->0} (1/s(u)) P_u(lifetime > z)
            = (1+alpha) / (Gamma(2+alpha) (2 z)^(1+alpha)).

The mixture integral int m(u) P_u(lifetime > z) du has the shape of the
INTEGRATED tail (one power less), which is what the overshoot law uses;
the ratio over z must be constant.

Run: python3 tests/oracles/lifetime_tail_constants.py
"""

import math

import numpy as np
from scipy import integrate, stats

ALPHA = 0.5
BETA = 1.0 + ALPHA


def tail_closed(z):
    return BETA / (math.gamma(2.0 + ALPHA) * (2.0 * z) ** BETA)


def tail_limit_numeric(z, u):
    s_u = u ** BETA / BETA
    return stats.invgamma(BETA, scale=u / 2.0).sf(z) / s_u


def mixture(z):
    val, _ = integrate.quad(
        lambda u: 0.5 * u ** (-BETA) * stats.invgamma(BETA, scale=u / 2.0).sf(z),
        0.0, np.inf, limit=400)
    return val


def integrated_tail(z):
    val, _ = integrate.quad(tail_closed, z, np.inf, limit=200)
    return val


def main():
    zs = np.array([0.1, 0.5, 1.0, 2.0, 10.0])
    print("closed tail values:")
    for z in zs:
        print(f"  tail({z:g}) = {tail_closed(z):.10f}")
    print("small-u limit convergence at z=1:")
    for u in (1e-2, 1e-4, 1e-6):
        print(f"  u={u:g}: {tail_limit_numeric(1.0, u):.10f}")
    print("mixture / integrated-tail ratio (must be z-constant):")
    for z in zs:
        print(f"  z={z:g}: {mixture(z) / integrated_tail(z):.8f}")


if __name__ == "__main__":
    main()
