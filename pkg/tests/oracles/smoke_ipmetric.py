"""Smoke checks for the interval-partition metric before tests freeze."""
import math
import sys
import time

import numpy as np

sys.path.insert(0, "/root/pkg/src")

from skewerkit.ipmetric import (
    EMPTY, Correspondence, IntervalPartition, RunLengthFamily, concatenate,
    distortion, dprime, dprime_brute, dprime_truncated, family_mapped_total,
    g_star, partition_from_rows, partition_to_rows)
from skewerkit.errors import InvalidCorrespondenceError

ok = True


def check(name, cond, extra=""):
    global ok
    tag = "PASS" if cond else "FAIL"
    if not cond:
        ok = False
    print(f"{tag} {name} {extra}", flush=True)


# hand values
b1 = IntervalPartition(widths=(1.0,))
g2 = IntervalPartition(widths=(2.0,))
check("pair {1},{2}", distortion(b1, g2, [(0, 0)]) == 1.0)
check("empty corr = max totals", distortion(b1, g2, []) == 2.0)
b21 = IntervalPartition(widths=(2.0, 1.0))
g12 = IntervalPartition(widths=(1.0, 2.0))
check("cross pair", distortion(b21, g12, [(0, 1)]) == 1.0)
check("dprime (2,1)(1,2) = 1", dprime(b21, g12) == 1.0)
check("dprime(b,b)=0", dprime(b21, b21) == 0.0)
check("dprime(b,empty)=|b|", dprime(b21, EMPTY) == 3.0)
check("dprime(empty,empty)=0", dprime(EMPTY, EMPTY) == 0.0)

# invalid correspondences
for bad in ([(0, 0), (0, 1)], [(1, 0), (0, 1)], [(0, 5)]):
    try:
        distortion(b21, g12, bad)
        check(f"reject {bad}", False)
    except InvalidCorrespondenceError:
        check(f"reject {bad}", True)

# DP == brute on random pairs
rng = np.random.default_rng(7)
t0 = time.time()
worst = 0.0
for trial in range(1000):
    n = int(rng.integers(0, 8))
    m = int(rng.integers(0, 8))
    beta = IntervalPartition(widths=tuple(rng.uniform(0.05, 3.0, n)))
    gamma = IntervalPartition(widths=tuple(rng.uniform(0.05, 3.0, m)))
    d1 = dprime(beta, gamma)
    d2 = dprime_brute(beta, gamma)
    worst = max(worst, abs(d1 - d2))
check("DP == brute (1000 pairs)", worst <= 1e-12,
      f"worst={worst:.2e} time={time.time()-t0:.1f}s")

# symmetry + triangle
bad_sym = bad_tri = 0
for trial in range(1000):
    ps = []
    for _ in range(3):
        n = int(rng.integers(0, 8))
        ps.append(IntervalPartition(widths=tuple(rng.uniform(0.05, 3.0, n))))
    a, b, c = ps
    if abs(dprime(a, b) - dprime(b, a)) > 0:
        bad_sym += 1
    if dprime(a, c) > dprime(a, b) + dprime(b, c) + 1e-12:
        bad_tri += 1
check("symmetry", bad_sym == 0, f"bad={bad_sym}")
check("triangle", bad_tri == 0, f"bad={bad_tri}")

# Lipschitz g
L = 0.5
g = lambda x: L * x
bad_lip = 0
for trial in range(300):
    n, m = int(rng.integers(0, 8)), int(rng.integers(0, 8))
    beta = IntervalPartition(widths=tuple(rng.uniform(0.05, 3.0, n)))
    gamma = IntervalPartition(widths=tuple(rng.uniform(0.05, 3.0, m)))
    if dprime(g_star(beta, g), g_star(gamma, g)) > L * dprime(beta, gamma) + 1e-12:
        bad_lip += 1
check("Lipschitz bound", bad_lip == 0, f"bad={bad_lip}")

# truncation slack
for trial in range(200):
    n, m = int(rng.integers(1, 30)), int(rng.integers(1, 30))
    beta = IntervalPartition(widths=tuple(rng.uniform(0.001, 2.0, n)))
    gamma = IntervalPartition(widths=tuple(rng.uniform(0.001, 2.0, m)))
    eps = 0.05
    v, slack = dprime_truncated(beta, gamma, eps)
    exact = dprime(beta, gamma)
    if abs(v - exact) > slack + 1e-12:
        check("truncation slack", False,
              f"v={v} exact={exact} slack={slack}")
        break
else:
    check("truncation slack", True)

# concatenate
check("concat totals", concatenate([b21, g12, EMPTY]).total == 6.0)
check("concat order", concatenate([b21, g12]).widths == (2.0, 1.0, 1.0, 2.0))

# roundtrip rows
rows = partition_to_rows(b21)
check("rows roundtrip", partition_from_rows(rows).widths == b21.widths)

# bigger instance sanity: frontier DP vs brute on 7x7 with clustered widths
beta = IntervalPartition(widths=(1, 1, 1, 1, 1, 1, 1))
gamma = IntervalPartition(widths=(7,))
check("7 ones vs one 7", dprime(beta, gamma) == dprime_brute(beta, gamma),
      f"{dprime(beta, gamma)}")

# speed on mid-size inputs
beta = IntervalPartition(widths=tuple(rng.uniform(0.01, 1.0, 200)))
gamma = IntervalPartition(widths=tuple(rng.uniform(0.01, 1.0, 200)))
t0 = time.time()
v = dprime(beta, gamma)
check("200x200 runs", v >= 0, f"v={v:.4f} time={time.time()-t0:.1f}s")

# run-length family: fixture-style divergence vs identity convergence
# groups n=1..8 mimicking the counterexample scaling
lw = tuple(float(-(2 ** (n + 1)) + 1) for n in range(1, 9))
lc = tuple(float(2 ** (n + 1) - 1 - n) for n in range(1, 9))
fam = RunLengthFamily(log2_width=lw, log2_count=lc)
ident = lambda lx: lx
check("family identity finite",
      family_mapped_total(fam, ident) <= 2.0,
      f"total={family_mapped_total(fam, ident)}")
# transform that inflates small widths: g(x) = x**0.5 in log2 space
half = lambda lx: 0.5 * lx
tot = family_mapped_total(fam, half)
check("family sqrt diverges", math.isinf(tot), f"total={tot}")

# incomplete explicit partition divergence: w_k = k^-2, g = sqrt
ws = tuple((k + 1.0) ** -2 for k in range(400))
inc = IntervalPartition(widths=ws, complete=False)
img = g_star(inc, lambda x: math.sqrt(x))
check("incomplete sqrt -> empty", len(img) == 0)
img2 = g_star(inc, lambda x: x)
check("incomplete identity -> kept", len(img2) == 400)
comp = IntervalPartition(widths=ws, complete=True)
check("complete sqrt -> kept", len(g_star(comp, lambda x: math.sqrt(x))) == 400)

print("ALL OK" if ok else "FAILURES", flush=True)
sys.exit(0 if ok else 1)
