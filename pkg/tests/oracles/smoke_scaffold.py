"""Smoke checks for scaffold construction and the level-slice maps."""
import math
import sys
import time

import numpy as np

sys.path.insert(0, "/root/pkg/src")

from skewerkit.errors import MalformedExcursionError
from skewerkit.excursions import ExcursionLaw, Spindle, truncated_lifetime_mass
from skewerkit.ipmetric import EMPTY, IntervalPartition
from skewerkit.models import build
from skewerkit.pathsim import PathGrid, RngStream
from skewerkit.scaffold import (Horizon, ScaffoldPath, SpindleMeasure,
                                biclade_split, build_prm, build_scaffold,
                                compensator_slope, crossing_widths, diversity,
                                level_slice, local_time_estimate,
                                reverse_clade, skewer, start_from_partition)

ok = True


def check(name, cond, extra=""):
    global ok
    tag = "PASS" if cond else "FAIL"
    if not cond:
        ok = False
    print(f"{tag} {name} {extra}", flush=True)


def tri_spindle(zeta, dt=0.01):
    u = np.arange(0, round(zeta / dt) + 1) * dt
    vals = np.minimum(u, zeta - u)
    return Spindle(path=PathGrid(dt=dt, values=vals, absorbed=True),
                   amplitude=zeta / 2, argmax_time=zeta / 2)


# ---- hand skewer example
sp1, sp2 = tri_spindle(3.0), tri_spindle(2.0)
hz = Horizon(kind="fixed_time", value=3.0)
N = SpindleMeasure(atoms=((0.0, sp1), (1.0, sp2)), cutoff=0.1, horizon=hz,
                   length=3.0)
X = ScaffoldPath(jump_times=np.array([0.0, 1.0]),
                 jump_heights=np.array([3.0, 2.0]), slope=-1.0, length=3.0)
check("X cadlag", (X.value(0.0), X.value_left(0.0)) == (3.0, 0.0))
check("X at 1", (X.value(1.0), X.value_left(1.0)) == (4.0, 2.0))
part = skewer(2.5, N, X)
check("hand skewer (0.5,0.5)", part.widths == (0.5, 0.5), f"{part.widths}")
check("empty above", skewer(10.0, N, X) is EMPTY or len(skewer(10.0, N, X)) == 0)
ws = crossing_widths(2.5, N, X)
check("mass identity", math.fsum(ws) == part.total)
sl = level_slice(2.5, N, X)
check("slice ids", [c[2] for c in sl.crossings] == [0, 1])

# brute-force membership scan vs level_slice on the hand instance
for y in np.linspace(-0.5, 5.5, 61):
    got = {c[2] for c in level_slice(y, N, X).crossings}
    want = set()
    for k, (t, sp) in enumerate(N.atoms):
        xl = X.value_left(t)
        if xl < y < xl + sp.zeta and sp.path.value_at(y - xl) > 1e-12:
            want.add(k)
    if got != want:
        check("brute membership", False, f"y={y} got={got} want={want}")
        break
else:
    check("brute membership", True)

# ---- scaffold formulas
X0 = ScaffoldPath(jump_times=np.array([]), jump_heights=np.array([]),
                  slope=-2.0, length=5.0)
check("pure drift", X0.value(1.7) == -3.4)
X1 = ScaffoldPath(jump_times=np.array([1.0]), jump_heights=np.array([4.0]),
                  slope=-2.0, length=5.0)
check("single atom", X1.value(2.0) == 0.0 and X1.value_left(1.0) == -2.0)

# ---- local time
check("local time pure drift",
      abs(local_time_estimate(X0, -3.0, 5.0, 0.25) - 0.5) < 1e-12)
check("local time outside", local_time_estimate(X0, 3.0, 5.0, 0.25) == 0.0)
la = local_time_estimate(X, 2.5, 1.0, 0.2)
lb = local_time_estimate(X, 2.5, 3.0, 0.2)
seg2 = lb - la
full = local_time_estimate(X, 2.5, 3.0, 0.2)
check("local time additive", abs((la + seg2) - full) < 1e-12)

# ---- PRM construction
law = ExcursionLaw(spec=build("besq", alpha=0.5).base, cutoff=0.5, dt=2e-4)
r1 = build_prm(law, Horizon("fixed_time", 3.0), RngStream(11, 0))
r2 = build_prm(law, Horizon("fixed_time", 3.0), RngStream(11, 0))
check("determinism", len(r1) == len(r2) and all(
    a[0] == b[0] and np.array_equal(a[1].path.values, b[1].path.values)
    for a, b in zip(r1.atoms, r2.atoms)), f"n={len(r1)}")
check("empty horizon", len(build_prm(law, Horizon("fixed_time", 0.0),
                                     RngStream(11, 1))) == 0)
check("amplitudes > cutoff", all(sp.amplitude > 0.5 for _, sp in r1.atoms))

# atom-count CI: rate = 1/s(a), s(x)=x^1.5/1.5 for alpha=0.5
rate = 1.0 / (0.5 ** 1.5 / 1.5)
T = 3.0
counts = [len(build_prm(law, Horizon("fixed_time", T), RngStream(11, 10 + i)))
          for i in range(60)]
mean = np.mean(counts)
se = math.sqrt(rate * T / 60)
check("atom rate CI", abs(mean - rate * T) < 4 * se,
      f"mean={mean:.2f} want={rate*T:.2f} se={se:.2f}")

slope, dropped = compensator_slope(law)
want_slope = -truncated_lifetime_mass(law, 0.5)
check("UV slope", abs(slope - want_slope) < 1e-9 and dropped == 0.0,
      f"slope={slope:.6f}")

Xp = build_scaffold(r1, law)
check("jump=zeta", all(abs(Xp.value(t) - Xp.value_left(t) - sp.zeta) < 1e-12
                       for t, sp in r1.atoms))

# skewer at a level: identity between widths and partition
y = 0.7
sl = level_slice(y, r1, Xp)
check("prm mass identity", abs(sl.partition.total - math.fsum(
    w for _, w, _ in sl.crossings)) < 1e-12, f"k={len(sl.crossings)}")

# ---- fixed count + zero hit horizons
rc = build_prm(law, Horizon("fixed_count", 40), RngStream(12, 0))
check("fixed count", len(rc) == 40 and rc.length == rc.atoms[-1][0])
rz = build_prm(law, Horizon("zero_hit", 3.0), RngStream(13, 0))
Xz = build_scaffold(rz, law)
check("zero hit end", abs(Xz.value(rz.length)) < 1e-9,
      f"X(end)={Xz.value(rz.length):.2e} atoms={len(rz)}")

# BV model: wright-fisher
bw = build("wright-fisher", gamma1=1.0, gamma2=0.25)
lawbv = ExcursionLaw(spec=bw.base, cutoff=0.1, dt=2e-4)
t0 = time.time()
sbv, dbv = compensator_slope(lawbv)
check("BV slope finite", sbv < 0 and dbv > 0,
      f"slope={sbv:.4f} dropped={dbv:.4f} ({time.time()-t0:.1f}s)")
rbv = build_prm(lawbv, Horizon("fixed_time", 2.0), RngStream(14, 0))
Xbv = build_scaffold(rbv, lawbv)
ncross = len(crossing_widths(0.05, rbv, Xbv))
check("BV finite crossings", ncross < np.inf, f"n={ncross}")

# diversity rejects BV
try:
    diversity(IntervalPartition(widths=(0.1, 0.2)), bw.base)
    check("diversity BV rejected", False)
except ValueError:
    check("diversity BV rejected", True)

# diversity on a besq skewer slice runs
big = build_prm(law, Horizon("fixed_time", 20.0), RngStream(15, 0))
Xbig = build_scaffold(big, law)
part = skewer(0.4, big, Xbig)
if len(part) > 3:
    dv = diversity(part, law.spec)
    lt = local_time_estimate(Xbig, 0.4, big.length, 0.05)
    check("diversity runs", dv.estimate > 0,
          f"est={dv.estimate:.3f} lt={lt:.3f} conv={dv.converged} "
          f"blocks={len(part)}")
else:
    check("diversity runs", False, f"too few blocks {len(part)}")

# doubling the partition doubles the estimate
from skewerkit.ipmetric import concatenate
if len(part) > 3:
    thr = dv.thresholds
    dv2 = diversity(concatenate([part, part]), law.spec, thresholds=thr)
    check("diversity doubles", abs(dv2.estimate - 2 * dv.estimate) < 1e-9)

# ---- biclade split on a hand excursion
# drift -1; at t=1 X(1-)=-1, jump 3 crosses 0; at t=2 X=... then declines
spc = tri_spindle(3.0)
exc = SpindleMeasure(atoms=((1.0, spc),), cutoff=0.1,
                     horizon=Horizon("fixed_time", 5.0), length=5.0)
anti, clade, wcross = biclade_split(exc, slope=-1.0)
check("split width = skewer@0",
      abs(wcross - spc.path.value_at(1.0)) < 1e-12, f"w={wcross}")
check("anti has lower", len(anti) == 1 and not anti.atoms[0][1].path.absorbed)
check("clade starts 0", clade.atoms[0][0] == 0.0)

# malformed: no crossing
bad = SpindleMeasure(atoms=((1.0, tri_spindle(0.5)),), cutoff=0.1,
                     horizon=Horizon("fixed_time", 5.0), length=5.0)
try:
    biclade_split(bad, slope=-1.0)
    check("malformed raises", False)
except MalformedExcursionError:
    check("malformed raises", True)

# reverse twice = identity (grid exact)
rr = reverse_clade(reverse_clade(clade))
check("reverse twice", all(
    abs(a[0] - b[0]) < 1e-12 and np.array_equal(a[1].path.values,
                                                b[1].path.values)
    for a, b in zip(rr.atoms, clade.atoms)))

# ---- start from partition
beta = IntervalPartition(widths=(0.3, 0.2))
t0 = time.time()
m0, x0p = start_from_partition(beta, law, RngStream(16, 0))
s0 = skewer(0.0, m0, x0p)
check("start skewer = beta", s0.widths == beta.widths,
      f"{s0.widths} atoms={len(m0)} trunc={m0.truncated} "
      f"({time.time()-t0:.1f}s)")
check("start empty", len(start_from_partition(EMPTY, law,
                                              RngStream(16, 1))[0]) == 0)
check("scaffold ends 0", abs(x0p.value(m0.length)) < 1e-9,
      f"{x0p.value(m0.length):.2e}")

print("ALL OK" if ok else "FAILURES", flush=True)
sys.exit(0 if ok else 1)
