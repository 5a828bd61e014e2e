"""Smoke run: path engine determinism, spindle sampling sanity, and the
frozen excursion-functional constants."""
import time

import numpy as np
from scipy import stats

from skewerkit.models import besq, besq_dim0, besq_lifetime_law
from skewerkit.pathsim import (RngStream, sample_zero_diffusion,
                               zero_diffusion_batch, up_paths_batch)
from skewerkit.excursions import (ExcursionLaw, amplitude_rate,
                                  sample_amplitudes, sample_spindles,
                                  lifetime_tail, truncated_lifetime_mass,
                                  total_lifetime_mass)
from skewerkit.diffusion import up_hitting_time_mean, speed_mass

Y = besq(0.5).base

# determinism
p1 = sample_zero_diffusion(Y, 1.0, 1e-3, RngStream(7))
p2 = sample_zero_diffusion(Y, 1.0, 1e-3, RngStream(7))
p3 = sample_zero_diffusion(Y, 1.0, 1e-3, RngStream(8))
print("determinism:", np.array_equal(p1.values, p2.values),
      "differs across seeds:", not np.array_equal(p1.values, p3.values))

# lifetime law vs inverse-gamma (coarse)
t0 = time.time()
zb = zero_diffusion_batch(Y, 1.0, 2e-4, 2000, RngStream(1))
ks = stats.kstest(zb.lifetimes, besq_lifetime_law(0.5, 1.0).cdf)
print(f"lifetime KS n=2000 dt=2e-4: stat={ks.statistic:.4f} p={ks.pvalue:.4f} "
      f"({time.time()-t0:.1f}s)")

# amplitude law: P(W>w) = (a/w)^1.5
law = ExcursionLaw(spec=Y, cutoff=0.5, dt=2e-4)
ws = sample_amplitudes(law, 4000, RngStream(2))
ks2 = stats.kstest(ws, lambda w: 1.0 - (0.5 / w) ** 1.5)
print(f"amplitude KS: stat={ks2.statistic:.4f} p={ks2.pvalue:.4f}")
print("rate(0.5) = 1/s(0.5):", amplitude_rate(law, 0.5),
      "expect", 1.5 / 0.5 ** 1.5)

# spindles: ends, lifetimes conditional mean vs 2*E_up[T_w]
t0 = time.time()
sp = sample_spindles(law, 400, RngStream(3))
print(f"sampled 400 spindles in {time.time()-t0:.1f}s")
starts = [s.path.values[0] for s in sp]
ends = [s.path.values[-1] for s in sp]
mins_interior = [s.path.values[1:-1].min() for s in sp if len(s.path.values) > 2]
print("start=0:", max(starts), "end=0:", max(ends),
      "interior>0:", min(mins_interior) > 0.0)
w_band = [(s.zeta, s.amplitude) for s in sp if 0.9 <= s.amplitude <= 1.15]
mean_obs = np.mean([z for z, _ in w_band])
mean_thy = np.mean([2.0 * up_hitting_time_mean(Y, w) for _, w in w_band])
print(f"E[zeta | A~1]: obs {mean_obs:.4f} theory {mean_thy:.4f} (n={len(w_band)})")
amp_err = max(abs(s.grid_max - s.amplitude) for s in sp)
print("max |grid_max - amplitude|:", amp_err)

# frozen constants
print("truncated mass b=1 (expect 1.8):", truncated_lifetime_mass(law, 1.0))
print("lifetime tail z=1 (expect 0.3989422804):", lifetime_tail(law, 1.0))

# dim0: atom fraction and total mass vs speed mass
Z0 = besq_dim0(1.0).base   # c = 2
law0 = ExcursionLaw(spec=Z0, cutoff=0.4, dt=2e-4)
a0 = sample_amplitudes(law0, 3000, RngStream(4))
print("dim0 atom frac (expect s(a)/s(c)=0.2):", np.mean(a0 == 2.0))
sp0 = sample_spindles(law0, 200, RngStream(5))
print("dim0 spindle ends at 0:", max(s.path.values[-1] for s in sp0))
tm = total_lifetime_mass(law0)
print("dim0 total mass extrapolated vs speed mass:", tm,
      speed_mass(Z0, 0.0, 2.0))
