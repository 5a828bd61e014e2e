"""Second tuning round: best-level selection for diversity, pooled-run
sample counts for crossing widths and overshoots."""
import math
import sys
import time

import numpy as np
from scipy import stats

sys.path.insert(0, "/root/pkg/src")

from skewerkit.excursions import ExcursionLaw
from skewerkit.models import build
from skewerkit.pathsim import RngStream
from skewerkit.scaffold import (Horizon, build_prm, build_scaffold,
                                diversity, level_slice, local_time_estimate,
                                skewer)

law_for = lambda a, dt: ExcursionLaw(spec=build("besq", alpha=0.5).base,
                                     cutoff=a, dt=dt)

print("=== diversity at best-occupation level ===", flush=True)
for a, T in [(0.01, 60.0), (0.01, 90.0)]:
    law = law_for(a, 2e-4)
    for seed in range(1, 7):
        t0 = time.time()
        N = build_prm(law, Horizon("fixed_time", T), RngStream(seed, 0))
        X = build_scaffold(N, law)
        ygrid = np.linspace(0.1, 3.0, 30)
        lts = [local_time_estimate(X, y, N.length, 2 * a) for y in ygrid]
        y_star = float(ygrid[int(np.argmax(lts))])
        lt = max(lts)
        part = skewer(y_star, N, X)
        thr = np.exp(np.linspace(np.log(8 * a), np.log(a), 6))
        dv = diversity(part, law.spec, thresholds=thr)
        rel = abs(dv.estimate - lt) / lt
        cnt = int(np.sum(np.asarray(part.widths) > a))
        print(f"a={a} T={T} seed={seed}: y*={y_star:.2f} lt={lt:.2f} "
              f"div={dv.estimate:.2f} rel={rel:.1%} count>{a}={cnt} "
              f"conv={dv.converged} ({time.time()-t0:.0f}s)", flush=True)

print("=== crossing widths pooled runs ===", flush=True)
for a, T, y, nruns in [(0.05, 60.0, 0.4, 6), (0.1, 60.0, 0.4, 6)]:
    law = law_for(a, 2e-4)
    t0 = time.time()
    per = []
    widths = []
    for seed in range(nruns):
        N = build_prm(law, Horizon("fixed_time", T), RngStream(50 + seed, 0))
        X = build_scaffold(N, law)
        ws = [w for _, w, _ in level_slice(y, N, X).crossings if w > a]
        per.append(len(ws))
        widths.extend(ws)
    widths = np.array(widths)
    ks = stats.kstest(widths, lambda x: 1.0 - (x / a) ** -0.5)
    print(f"a={a} T={T} y={y}: per-run={per} total={len(widths)} "
          f"ks={ks.statistic:.4f} p={ks.pvalue:.3f} "
          f"({(time.time()-t0)/nruns:.1f}s/run)", flush=True)
