"""Euler-Maruyama sampling of the absorbed (0-) diffusion and the
conditioned-to-climb diffusion, plus grid-path utilities.

Conventions shared by every sampler here:
  * one scheme only: x += mu(x) dt + sqrt(sigma2(x) dt) * N(0,1), state
    clipped into [0, c];
  * absorption at 0 is declared at the first grid point with x <= 0 and the
    recorded value is exactly 0 (no sub-grid bridge correction; the O(sqrt(dt))
    bias this leaves is handled by dt-refinement in the experiments);
  * determinism: a given RngStream always produces the same output regardless
    of what else ran in the process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .diffusion import up_diffusion

DEFAULT_DT = 1e-4
_MAX_STEPS = 20_000_000


@dataclass(frozen=True)
class RngStream:
    """Seed plus worker-splittable stream id. Equal pairs give equal paths."""

    seed: int
    stream: int = 0

    def generator(self):
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(self.stream,)))

    def split(self, k):
        return [RngStream(self.seed, self.stream * 1_000_003 + i + 1) for i in range(k)]


def _gen(rng):
    return rng.generator() if isinstance(rng, RngStream) else rng


@dataclass(frozen=True)
class PathGrid:
    """A path sampled on a uniform grid of spacing dt."""

    dt: float
    values: np.ndarray
    absorbed: bool
    truncated: bool = False

    @property
    def lifetime(self):
        if not self.absorbed:
            raise ValueError("lifetime is defined only for absorbed paths")
        return self.dt * (len(self.values) - 1)

    @property
    def amplitude(self):
        return float(np.max(self.values))

    @property
    def argmax_time(self):
        return self.dt * int(np.argmax(self.values))

    def value_at(self, t):
        """Linear interpolation inside the grid; constant beyond the end."""
        pos = t / self.dt
        i = int(np.floor(pos))
        if i < 0:
            return float(self.values[0])
        if i >= len(self.values) - 1:
            return float(self.values[-1])
        frac = pos - i
        return float((1.0 - frac) * self.values[i] + frac * self.values[i + 1])


def reverse_path(p):
    """Time reversal on the grid; requires an absorbed path so the reversal
    is again a path that ends where the original started."""
    if not p.absorbed:
        raise ValueError("cannot reverse a path that was not absorbed")
    return PathGrid(dt=p.dt, values=p.values[::-1].copy(), absorbed=True,
                    truncated=p.truncated)


def euler_step(x, spec, dt, xi):
    """One vectorized scheme step from states x with standard normals xi."""
    x = np.asarray(x, dtype=float)
    drift = np.asarray(spec.mu(x), dtype=float)
    var = np.maximum(np.asarray(spec.sigma2(x), dtype=float), 0.0)
    nxt = x + drift * dt + np.sqrt(var * dt) * xi
    if not math.isinf(spec.c):
        nxt = np.minimum(nxt, spec.c)
    return nxt


# ---------------------------------------------------------------------------
# shared stepping engine


def _run_paths(spec, starts, dt, gen, mode, targets=None, floor=None,
               max_steps=_MAX_STEPS):
    """Run a batch of paths with alive-path compaction, recording every
    sample, until each path either absorbs at 0 (mode='absorb') or crosses
    its own target (mode='climb', end value clamped to the target).

    Returns (paths, truncated): a list of value arrays and a boolean array
    marking paths that hit the step cap.
    """
    starts = np.asarray(starts, dtype=float)
    n = starts.size
    alive = np.arange(n)
    x = starts.copy()
    rec_ids = [alive.copy()]
    rec_vals = [x.copy()]
    rec_steps = [np.zeros(n, dtype=np.int64)]
    truncated = np.zeros(n, dtype=bool)
    k = 0
    while alive.size and k < max_steps:
        k += 1
        xi = gen.standard_normal(alive.size)
        if floor is not None:
            x = np.maximum(euler_step(np.maximum(x, floor), spec, dt, xi), floor)
        else:
            x = euler_step(x, spec, dt, xi)
        if mode == "absorb":
            done = x <= 0.0
            x = np.where(done, 0.0, x)
        else:
            tgt = targets[alive]
            done = x >= tgt
            x = np.where(done, tgt, x)
        rec_ids.append(alive.copy())
        rec_vals.append(x.copy())
        rec_steps.append(np.full(alive.size, k, dtype=np.int64))
        alive = alive[~done]
        x = x[~done]
    truncated[alive] = True

    ids = np.concatenate(rec_ids)
    vals = np.concatenate(rec_vals)
    steps = np.concatenate(rec_steps)
    order = np.lexsort((steps, ids))
    ids, vals = ids[order], vals[order]
    bounds = np.searchsorted(ids, np.arange(n + 1))
    paths = [vals[bounds[i]:bounds[i + 1]] for i in range(n)]
    return paths, truncated


def sample_zero_diffusion(spec, x0, dt, rng, max_steps=_MAX_STEPS):
    """Path of the diffusion from x0 absorbed at its first grid hit of 0."""
    if not 0 < x0 <= spec.c:
        raise ValueError(f"x0={x0} outside (0, c]")
    if dt <= 0:
        raise ValueError("dt must be positive")
    paths, trunc = _run_paths(spec, [x0], dt, _gen(rng), "absorb",
                              max_steps=max_steps)
    return PathGrid(dt=dt, values=paths[0], absorbed=not trunc[0],
                    truncated=bool(trunc[0]))


def zero_paths_batch(spec, starts, dt, rng, max_steps=_MAX_STEPS):
    """Absorbed paths from each start, as a list of PathGrid."""
    paths, trunc = _run_paths(spec, starts, dt, _gen(rng), "absorb",
                              max_steps=max_steps)
    return [PathGrid(dt=dt, values=v, absorbed=not t, truncated=bool(t))
            for v, t in zip(paths, trunc)]


def _up_entrance(up, w):
    """Decide how to start the climbing diffusion at 0: when its drift has a
    finite limit at 0 (the closed-form cancellation families), start at 0
    with a floored coefficient evaluation; otherwise start from a small
    positive entrance point (documented approximation)."""
    p1, p2 = 1e-9 * w, 2e-9 * w
    try:
        f1 = float(np.asarray(up.mu(np.array([p1])))[0])
        f2 = float(np.asarray(up.mu(np.array([p2])))[0])
        extendable = (math.isfinite(f1) and math.isfinite(f2)
                      and abs(f1 - f2) <= 1e-2 * (1.0 + abs(f1)))
    except (ZeroDivisionError, FloatingPointError, OverflowError):
        extendable = False
    if extendable:
        return 0.0, 1e-12 * max(w, 1.0)
    return 1e-4 * w, 1e-12 * max(w, 1.0)


def sample_up_diffusion(spec, x0, w, dt, rng, max_steps=_MAX_STEPS, up=None):
    """Path of the conditioned-to-climb diffusion from x0 to its first grid
    crossing of w (end value clamped to w).

    ``spec`` is the base diffusion; its climb variant is derived here unless
    passed in.
    """
    if not 0 <= x0 <= w <= spec.c:
        raise ValueError(f"need 0 <= x0 <= w <= c, got x0={x0}, w={w}")
    if x0 == w:
        return PathGrid(dt=dt, values=np.array([float(w)]), absorbed=False)
    up = up or up_diffusion(spec)
    floor = 1e-12 * max(w, 1.0)
    if x0 == 0.0:
        x0, floor = _up_entrance(up, w)
    paths, trunc = _run_paths(up, [x0], dt, _gen(rng), "climb",
                              targets=np.array([float(w)]), floor=floor,
                              max_steps=max_steps)
    return PathGrid(dt=dt, values=paths[0], absorbed=False, truncated=bool(trunc[0]))


def up_paths_batch(spec, targets, dt, rng, max_steps=_MAX_STEPS, up=None):
    """Climbing paths from 0, one per target level, as a list of PathGrid."""
    targets = np.asarray(targets, dtype=float)
    up = up or up_diffusion(spec)
    wmax = float(np.max(targets)) if targets.size else 1.0
    start, floor = _up_entrance(up, wmax)
    starts = np.full(targets.size, start)
    paths, trunc = _run_paths(up, starts, dt, _gen(rng), "climb",
                              targets=targets, floor=floor, max_steps=max_steps)
    return [PathGrid(dt=dt, values=v, absorbed=False, truncated=bool(t))
            for v, t in zip(paths, trunc)]


# ---------------------------------------------------------------------------
# batch statistics (nothing stored per step) for the heavy experiments


@dataclass
class ZeroBatch:
    lifetimes: np.ndarray
    max_values: np.ndarray
    hit_top: np.ndarray
    censored: np.ndarray


def zero_diffusion_batch(spec, x0, dt, n, rng, top=None, t_cap=None):
    """Lifetimes, running maxima and top-hit flags of n absorbed paths.
    Paths stopped early at ``top`` (when given) are flagged in hit_top;
    paths still alive at ``t_cap`` are flagged censored, not dropped."""
    gen = _gen(rng)
    cap_steps = int(t_cap / dt) if t_cap else _MAX_STEPS
    x = np.full(n, float(x0))
    steps = np.zeros(n, dtype=np.int64)
    maxes = np.full(n, float(x0))
    hit = np.zeros(n, dtype=bool)
    censored = np.zeros(n, dtype=bool)
    alive = np.arange(n)
    k = 0
    while alive.size:
        k += 1
        xi = gen.standard_normal(alive.size)
        x[alive] = euler_step(x[alive], spec, dt, xi)
        steps[alive] = k
        np.maximum.at(maxes, alive, x[alive])
        done_bot = x[alive] <= 0.0
        done_top = np.zeros_like(done_bot) if top is None else x[alive] >= top
        hit[alive[done_top]] = True
        if k >= cap_steps:
            censored[alive] = ~(done_bot | done_top)
            break
        alive = alive[~(done_bot | done_top)]
    return ZeroBatch(lifetimes=steps * dt, max_values=maxes, hit_top=hit,
                     censored=censored)


def up_first_passage_batch(spec, x0, w, dt, n, rng, t_cap=None, up=None):
    """First-passage times to w of n independent climbing paths."""
    up = up or up_diffusion(spec)
    floor = 1e-12 * max(w, 1.0)
    start = float(x0)
    if start == 0.0:
        start, floor = _up_entrance(up, w)
    gen = _gen(rng)
    cap_steps = int(t_cap / dt) if t_cap else _MAX_STEPS
    x = np.full(n, start)
    times = np.zeros(n)
    censored = np.zeros(n, dtype=bool)
    alive = np.arange(n)
    k = 0
    while alive.size:
        k += 1
        xi = gen.standard_normal(alive.size)
        x[alive] = np.maximum(euler_step(np.maximum(x[alive], floor), up, dt, xi), floor)
        done = x[alive] >= w
        times[alive[done]] = k * dt
        alive = alive[~done]
        if k >= cap_steps:
            censored[alive] = True
            times[alive] = k * dt
            break
    return times, censored
