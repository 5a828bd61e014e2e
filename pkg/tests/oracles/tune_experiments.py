"""Pre-freeze tuning for the statistical experiments: pick horizons,
cutoffs, levels, and sample sizes that give the acceptance margins room."""
import math
import sys
import time

import numpy as np
from scipy import stats

sys.path.insert(0, "/root/pkg/src")

from skewerkit.excursions import ExcursionLaw, sample_spindles
from skewerkit.models import build
from skewerkit.pathsim import RngStream
from skewerkit.scaffold import (Horizon, build_prm, build_scaffold,
                                diversity, level_slice, local_time_estimate,
                                skewer)

law_for = lambda a, dt: ExcursionLaw(spec=build("besq", alpha=0.5).base,
                                     cutoff=a, dt=dt)

print("=== diversity vs local time ===", flush=True)
for a, T, dt, y in [(0.02, 60.0, 2e-4, 0.3), (0.01, 60.0, 2e-4, 0.3),
                    (0.02, 120.0, 2e-4, 0.3)]:
    for seed in (1, 2, 3):
        t0 = time.time()
        law = law_for(a, dt)
        N = build_prm(law, Horizon("fixed_time", T), RngStream(seed, 0))
        X = build_scaffold(N, law)
        part = skewer(y, N, X)
        if len(part) < 4:
            print(f"a={a} T={T} seed={seed}: too few blocks {len(part)}")
            continue
        # thresholds above the cutoff where counting is unaffected by it
        thr = np.exp(np.linspace(np.log(8 * a), np.log(a), 6))
        dv = diversity(part, law.spec, thresholds=thr)
        lt = local_time_estimate(X, y, N.length, 4 * a)
        rel = abs(dv.estimate - lt) / lt if lt > 0 else math.inf
        print(f"a={a} T={T} seed={seed}: atoms={len(N)} blocks={len(part)} "
              f"div={dv.estimate:.3f} lt={lt:.3f} rel={rel:.1%} "
              f"conv={dv.converged} ratios={[f'{r:.2f}' for r in dv.ratios]} "
              f"({time.time()-t0:.0f}s)", flush=True)

print("=== crossing widths at a level ===", flush=True)
a, dt, T, y = 0.1, 2e-4, 40.0, 0.5
law = law_for(a, dt)
t0 = time.time()
widths = []
for seed in (10, 11):
    N = build_prm(law, Horizon("fixed_time", T), RngStream(seed, 0))
    X = build_scaffold(N, law)
    sl = level_slice(y, N, X)
    widths.extend(w for _, w, _ in sl.crossings)
widths = np.array(widths)
big = widths[widths > a]
# reference: m(x) ~ x^{-1.5} above a -> F(x) = 1 - (x/a)^{-0.5}
ks = stats.kstest(big, lambda x: 1.0 - (x / a) ** -0.5)
print(f"crossings={len(widths)} above-cutoff={len(big)} "
      f"ks={ks.statistic:.4f} p={ks.pvalue:.3f} ({time.time()-t0:.0f}s)",
      flush=True)

print("=== overshoot at level crossings ===", flush=True)
t0 = time.time()
y = 0.8
overshoots = []
for seed in (20, 21):
    N = build_prm(law, Horizon("fixed_time", T), RngStream(seed, 0))
    X = build_scaffold(N, law)
    times = np.array([t for t, _ in N.atoms])
    lefts = X.value_left(times)
    for (t, sp), xl in zip(N.atoms, lefts):
        if xl < y < xl + sp.zeta:
            overshoots.append(xl + sp.zeta - y)
overshoots = np.array(overshoots)
# oracle: size-biased lifetime cut uniformly
sp_pool = sample_spindles(law, 4000, RngStream(99, 0))
zetas = np.array([s.zeta for s in sp_pool])
g = RngStream(98, 0).generator()
pick = g.choice(len(zetas), size=8000, p=zetas / zetas.sum())
oracle = zetas[pick] * g.uniform(size=8000)
ks2 = stats.ks_2samp(overshoots, oracle)
print(f"overshoots={len(overshoots)} ks={ks2.statistic:.4f} "
      f"p={ks2.pvalue:.3f} ({time.time()-t0:.0f}s)", flush=True)
