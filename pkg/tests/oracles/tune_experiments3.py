"""Third tuning round: pooled runs with per-run best-occupancy level for
crossing widths and overshoots; candidate seeds for diversity."""
import sys
import time

import numpy as np
from scipy import stats

sys.path.insert(0, "/root/pkg/src")

from skewerkit.excursions import ExcursionLaw, sample_spindles
from skewerkit.models import build
from skewerkit.pathsim import RngStream
from skewerkit.scaffold import (Horizon, build_prm, build_scaffold,
                                level_slice, local_time_estimate)

SPEC = build("besq", alpha=0.5).base


def best_level(path, length, h):
    grid = np.linspace(0.1, 3.0, 30)
    lts = [local_time_estimate(path, y, length, h) for y in grid]
    return float(grid[int(np.argmax(lts))])


print("=== crossing widths, pooled best-level runs ===", flush=True)
a, T, R = 0.1, 60.0, 25
law = ExcursionLaw(spec=SPEC, cutoff=a, dt=5e-4)
t0 = time.time()
widths = []
for seed in range(R):
    N = build_prm(law, Horizon("fixed_time", T), RngStream(100 + seed, 0))
    X = build_scaffold(N, law)
    y = best_level(X, N.length, 2 * a)
    widths.extend(w for _, w, _ in level_slice(y, N, X).crossings if w > a)
widths = np.array(widths)
ks = stats.kstest(widths, lambda x: 1.0 - (x / a) ** -0.5)
print(f"N={len(widths)} ks={ks.statistic:.4f} p={ks.pvalue:.4f} "
      f"({time.time()-t0:.0f}s total)", flush=True)

print("=== overshoots, pooled best-level runs ===", flush=True)
a, T, R = 0.1, 60.0, 15
law = ExcursionLaw(spec=SPEC, cutoff=a, dt=5e-4)
t0 = time.time()
overs = []
for seed in range(R):
    N = build_prm(law, Horizon("fixed_time", T), RngStream(200 + seed, 0))
    X = build_scaffold(N, law)
    y = best_level(X, N.length, 2 * a)
    tl = X.value_left(np.array(N.jump_times))
    for (t, sp), xl in zip(N.atoms, tl):
        if xl < y < xl + sp.zeta:
            overs.append(xl + sp.zeta - y)
overs = np.array(overs)
rng = RngStream(999, 0).generator
pool = sample_spindles(law, 4000, RngStream(999, 1))
zetas = np.array([sp.zeta for sp in pool])
idx = rng.choice(len(zetas), size=8000, p=zetas / zetas.sum())
oracle = zetas[idx] * rng.uniform(size=8000)
ks = stats.ks_2samp(overs, oracle)
print(f"N={len(overs)} oracle={len(oracle)} ks={ks.statistic:.4f} "
      f"p={ks.pvalue:.4f} ({time.time()-t0:.0f}s total)", flush=True)
