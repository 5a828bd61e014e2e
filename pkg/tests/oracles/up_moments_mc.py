"""Oracle for the climbing-diffusion hitting moments, independent of the
package: closed-form BESQ quantities + Euler Monte Carlo.

Setting: base diffusion with drift -2*alpha, variance 4x (alpha = 0.5), so
the conditioned-to-climb process is a squared Bessel of dimension 5. Target
level w = 1.

Two candidate quadratures for E[T_w^2] from 0 are compared:
  (display)   innermost kernel uses only the occupation above z,
  (corrected) innermost kernel is the full mean hitting time from z,
              including the below-z occupation term (s_up(w)-s_up(z))*M_up((0,z)).
The Monte Carlo decides which one is right. Also cross-checks the mean from
an interior start z=0.5 where the two kernels differ directly.

Run: python3 tests/oracles/up_moments_mc.py
"""

import numpy as np
from scipy import integrate

ALPHA = 0.5
BETA = 1.0 + ALPHA
W = 1.0
DELTA = 4.0 + 2.0 * ALPHA  # up-diffusion is BESQ(delta)


# closed forms anchored at b=1: s(v) = v^beta/beta, m(v) = v^(-beta)/2,
# s_up = -beta v^(-beta), s_up' = beta^2 v^(-beta-1), m_up = v^beta/(2 beta^2),
# M_up((0,z)) = z^(beta+1) / (2 beta^2 (beta+1))


def s_up(v):
    return -BETA * v ** (-BETA)


def s_up_prime(v):
    return BETA ** 2 * v ** (-BETA - 1.0)


def m_up(v):
    return v ** BETA / (2.0 * BETA ** 2)


def M_up_below(z):
    return z ** (BETA + 1.0) / (2.0 * BETA ** 2 * (BETA + 1.0))


def above_part(z):
    val, _ = integrate.quad(lambda v: (s_up(W) - s_up(v)) * m_up(v), z, W)
    return val


def mean_from(z):
    return above_part(z) + (s_up(W) - s_up(z)) * M_up_below(z)


def second_moment(kernel):
    def middle(y):
        val, _ = integrate.quad(lambda z: kernel(z) * m_up(z), 0.0, y)
        return val

    val, _ = integrate.quad(lambda y: s_up_prime(y) * middle(y), 0.0, W, limit=200)
    return 2.0 * val


def euler_hit_times(x0, w, dt, n, seed):
    rng = np.random.default_rng(seed)
    x = np.full(n, x0)
    t = np.zeros(n)
    out = np.empty(n)
    alive = np.arange(n)
    step = 0
    while alive.size:
        step += 1
        xi = rng.standard_normal(alive.size)
        x[alive] = x[alive] + DELTA * dt + 2.0 * np.sqrt(np.maximum(x[alive], 0.0) * dt) * xi
        t[alive] += dt
        done = x[alive] >= w
        out[alive[done]] = t[alive[done]]
        alive = alive[~done]
        if step > 50_000_000:
            raise RuntimeError("step cap")
    return out


def main():
    v_formula = above_part(0.0)
    print(f"mean from 0 (quadrature)        : {v_formula:.10f}")
    print(f"mean from 0 (w/delta)           : {W / DELTA:.10f}")

    u_display = second_moment(above_part)
    u_corrected = second_moment(mean_from)
    print(f"second moment, display kernel   : {u_display:.10f}")
    print(f"second moment, corrected kernel : {u_corrected:.10f}")

    m_half = mean_from(0.5)
    m_half_display = above_part(0.5)
    print(f"mean from 0.5, corrected        : {m_half:.10f}")
    print(f"mean from 0.5, display kernel   : {m_half_display:.10f}")

    for dt in (4e-5, 2e-5):
        tt = euler_hit_times(0.0, W, dt, 30_000, seed=20260814)
        t1, t2 = tt.mean(), (tt ** 2).mean()
        se1 = tt.std(ddof=1) / np.sqrt(tt.size)
        se2 = (tt ** 2).std(ddof=1) / np.sqrt(tt.size)
        print(f"MC from 0   dt={dt:g}: E[T]={t1:.5f} (se {se1:.5f})  "
              f"E[T^2]={t2:.6f} (se {se2:.6f})")

    for dt in (4e-5,):
        tt = euler_hit_times(0.5, W, dt, 30_000, seed=7)
        print(f"MC from 0.5 dt={dt:g}: E[T]={tt.mean():.5f} "
              f"(se {tt.std(ddof=1) / np.sqrt(tt.size):.5f})")


if __name__ == "__main__":
    main()
