"""Interval partitions and the block-matching metric on them.

The distance between two partitions beta, gamma is the infimum over
order-preserving correspondences (U_1,V_1),...,(U_N,V_N), N >= 0, of

    dis = max( sum |Leb U_i - Leb V_i|  +  |beta|  - sum Leb U_i,
               sum |Leb U_i - Leb V_i|  +  |gamma| - sum Leb V_i ),

i.e. the matching error plus the larger of the two unmatched masses. The
empty correspondence is allowed, so the distance to the empty partition is
the total mass, and dis is symmetric by inspection.

The exact solver is a dynamic program over prefix pairs. Because the
objective takes a max of two accumulated quantities, a single scalar value
per cell is not enough: the DP carries the Pareto frontier of

    (sum |delta| - matched beta mass, sum |delta| - matched gamma mass)

per cell and evaluates the max at the end. Frontiers are pruned by
dominance; a hard cap bounds their size, and if the cap ever bites on a
small instance the solver falls back to brute-force enumeration so the
returned value stays exact. Correctness is certified against the
brute-force oracle in the test suite.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import InvalidCorrespondenceError

_FRONTIER_CAP = 128      # Pareto points kept per DP cell
_BRUTE_MAX_BLOCKS = 8    # brute force is affordable strictly below this


@dataclass(frozen=True)
class IntervalPartition:
    """Ordered positive block widths. ``complete`` is False when the object
    is an explicit truncation of a partition with further blocks not
    listed (their mass may still be carried by ``total``)."""

    widths: tuple
    complete: bool = True

    def __post_init__(self):
        ws = tuple(float(w) for w in self.widths)
        if any(not (w > 0) for w in ws):
            raise ValueError("all widths must be positive")
        object.__setattr__(self, "widths", ws)

    @cached_property
    def total(self) -> float:
        return float(math.fsum(self.widths))

    def __len__(self):
        return len(self.widths)

    def __iter__(self):
        return iter(self.widths)

    def __getitem__(self, i):
        return self.widths[i]


EMPTY = IntervalPartition(widths=())


class _PooledView(IntervalPartition):
    """Internal: lists only the large blocks but keeps the full mass in
    ``total`` (small blocks pooled into the unmatched leftover)."""

    def __init__(self, widths, total):
        object.__setattr__(self, "widths", tuple(float(w) for w in widths))
        object.__setattr__(self, "complete", False)
        object.__setattr__(self, "_pooled_total", float(total))

    @property
    def total(self):
        return self._pooled_total


def concatenate(parts: Iterable[IntervalPartition]) -> IntervalPartition:
    """Append the parts left to right; totals add."""
    widths = []
    for p in parts:
        widths.extend(p.widths)
    return IntervalPartition(widths=tuple(widths))


@dataclass(frozen=True)
class Correspondence:
    """Index pairs (i into beta, j into gamma), strictly increasing on both
    sides so the matching preserves the left-to-right order."""

    pairs: tuple

    def validate(self, beta: IntervalPartition, gamma: IntervalPartition):
        last_i, last_j = -1, -1
        for pair in self.pairs:
            i, j = pair
            if not (0 <= i < len(beta) and 0 <= j < len(gamma)):
                raise InvalidCorrespondenceError(
                    f"pair ({i},{j}) out of range for sizes "
                    f"{len(beta)}x{len(gamma)}")
            if i <= last_i or j <= last_j:
                raise InvalidCorrespondenceError(
                    "pairs must be strictly increasing on both sides")
            last_i, last_j = i, j


def distortion(beta: IntervalPartition, gamma: IntervalPartition,
               corr: Union[Correspondence, Sequence]) -> float:
    """Exact distortion of one correspondence."""
    if not isinstance(corr, Correspondence):
        corr = Correspondence(pairs=tuple(tuple(p) for p in corr))
    corr.validate(beta, gamma)
    sum_abs = math.fsum(abs(beta[i] - gamma[j]) for i, j in corr.pairs)
    sum_u = math.fsum(beta[i] for i, _ in corr.pairs)
    sum_v = math.fsum(gamma[j] for _, j in corr.pairs)
    return sum_abs + max(beta.total - sum_u, gamma.total - sum_v)


def _prune(points):
    """Pareto-minimal points of a list of (a, b), sorted by a."""
    points.sort()
    kept = []
    best_b = math.inf
    for a, b in points:
        if b < best_b:
            kept.append((a, b))
            best_b = b
    return kept


def _frontier_dp(beta, gamma, cap):
    """Prefix-pair DP carrying the Pareto frontier of
    (matching error - matched beta mass, matching error - matched gamma
    mass); returns (value, capped) where capped reports whether the size
    cap ever discarded frontier points (in which case the value is an
    upper bound rather than exact)."""
    bs, gs = beta.widths, gamma.widths
    n, m = len(bs), len(gs)
    capped = False
    row = [[(0.0, 0.0)] for _ in range(m + 1)]
    for i in range(1, n + 1):
        b_i = bs[i - 1]
        new = [[(0.0, 0.0)]]
        for j in range(1, m + 1):
            g_j = gs[j - 1]
            cost = abs(b_i - g_j)
            cand = list(new[j - 1])
            cand.extend(row[j])
            cand.extend((a + cost - b_i, b + cost - g_j)
                        for a, b in row[j - 1])
            pts = _prune(cand)
            if len(pts) > cap:
                # keep both extremes; thin the interior
                idx = np.linspace(0, len(pts) - 1, cap).astype(int)
                pts = [pts[k] for k in idx]
                capped = True
            new.append(pts)
        row = new
    value = min(max(a + beta.total, b + gamma.total) for a, b in row[m])
    return value, capped


def dprime(beta: IntervalPartition, gamma: IntervalPartition) -> float:
    """Infimum of distortions over all order-preserving correspondences,
    the empty one included."""
    value, capped = _frontier_dp(beta, gamma, _FRONTIER_CAP)
    if capped and max(len(beta), len(gamma)) < _BRUTE_MAX_BLOCKS:
        return dprime_brute(beta, gamma)
    return value


def dprime_brute(beta: IntervalPartition, gamma: IntervalPartition) -> float:
    """Enumerate every correspondence (exponential oracle for small
    inputs)."""
    n, m = len(beta), len(gamma)
    best = max(beta.total, gamma.total)       # empty correspondence
    for k in range(1, min(n, m) + 1):
        for isub in itertools.combinations(range(n), k):
            for jsub in itertools.combinations(range(m), k):
                corr = Correspondence(pairs=tuple(zip(isub, jsub)))
                best = min(best, distortion(beta, gamma, corr))
    return best


def dprime_truncated(beta: IntervalPartition, gamma: IntervalPartition,
                     eps: float):
    """Distance between large-block truncations: blocks narrower than eps
    are pooled into the unmatched leftover (the totals keep their mass) and
    the DP runs on the remaining blocks.

    Returns (value, slack). The untruncated distance lies within +-slack of
    value, where slack = 2 * eps * (number of pooled blocks): moving one
    pooled block into or out of a correspondence changes the matching error
    and one leftover by at most its width each, so each pooled block is
    worth at most 2 * eps.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    big_b = [w for w in beta.widths if w >= eps]
    big_g = [w for w in gamma.widths if w >= eps]
    n_small = (len(beta) - len(big_b)) + (len(gamma) - len(big_g))
    value = dprime(_PooledView(big_b, beta.total),
                   _PooledView(big_g, gamma.total))
    return value, 2.0 * eps * n_small


def g_star(beta: IntervalPartition, t) -> IntervalPartition:
    """Map each block width through the health transform, preserving order.

    For an incomplete partition (an explicit truncation of an infinite
    one) the mapped mass may fail to be summable even though every listed
    image is finite; that is detected from the growth of partial sums over
    the widths sorted large-to-small, and the empty partition is returned
    by convention.
    """
    g = t.g if hasattr(t, "g") else t
    mapped = tuple(float(g(w)) for w in beta.widths)
    if not beta.complete and len(mapped) >= 8:
        if _partial_sums_diverge(beta.widths, mapped):
            return EMPTY
    return IntervalPartition(widths=mapped, complete=beta.complete)


def _partial_sums_diverge(widths, mapped) -> bool:
    """Divergence heuristic for truncated partitions: sort by decreasing
    width and fit the decay of the mapped terms against their rank; terms
    decaying no faster than 1/rank make the full sum non-summable."""
    order = np.argsort(widths)[::-1]
    terms = np.asarray(mapped, dtype=float)[order]
    if np.any(terms <= 0):
        return False
    k = np.arange(1, len(terms) + 1, dtype=float)
    half = len(terms) // 2
    slope = np.polyfit(np.log(k[half:]), np.log(terms[half:]), 1)[0]
    return slope >= -1.05


@dataclass(frozen=True)
class RunLengthFamily:
    """A partition family in log2 space: group n consists of
    2**log2_count[n] blocks of width 2**log2_width[n]. Lets tests describe
    families whose counts overflow any explicit list."""

    log2_width: tuple
    log2_count: tuple

    def __post_init__(self):
        if len(self.log2_width) != len(self.log2_count):
            raise ValueError("group arrays must align")


def family_mapped_total(family: RunLengthFamily,
                        log2_g: Callable[[float], float]):
    """Total image mass of the family under g, with log2 g(x) supplied as a
    function of log2 x. Groups are taken in order of decreasing width;
    when the per-group contributions stop decaying the partial sums grow
    without bound and math.inf is returned."""
    order = np.argsort(family.log2_width)[::-1]
    lw = np.asarray(family.log2_width, dtype=float)[order]
    lc = np.asarray(family.log2_count, dtype=float)[order]
    log2_terms = lc + np.asarray([log2_g(x) for x in lw], dtype=float)
    if len(log2_terms) >= 4:
        head = np.mean(log2_terms[:3])
        tail = np.mean(log2_terms[-3:])
        if tail >= head - 1.0:
            return math.inf
    return float(np.sum(2.0 ** log2_terms))


def partition_to_rows(beta: IntervalPartition):
    """CSV-ready (ordinal, width) rows."""
    return [(i, w) for i, w in enumerate(beta.widths)]


def partition_from_rows(rows) -> IntervalPartition:
    """Rebuild a partition from (ordinal, width) rows in any order."""
    ordered = sorted((int(o), float(w)) for o, w in rows)
    return IntervalPartition(widths=tuple(w for _, w in ordered))
