"""Poisson spindle measures, the compensated jump scaffold, and the maps
read off it: level slices (the skewer), crossing widths, local time,
diversity, clade splitting, and construction from a starting partition.

The scaffold is a piecewise-affine cadlag path: constant negative slope
(the compensator of the jump mass) interrupted by upward jumps, one per
spindle, of size equal to that spindle's lifetime. Slicing the picture at
a height y collects the widths of all spindles straddling y; those widths,
in time order, form an interval partition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, cached_property
from typing import Optional, Sequence, Tuple

import numpy as np

from .diffusion import classify_boundaries, improper_integral, speed_density
from .errors import MalformedExcursionError
from .excursions import (ExcursionLaw, Spindle, map_spindle, sample_spindles,
                         total_lifetime_mass, truncated_lifetime_mass)
from .ipmetric import EMPTY, IntervalPartition
from .pathsim import PathGrid, _gen, reverse_path, sample_zero_diffusion

_WIDTH_FLOOR = 1e-12       # level-slice widths below this are grid noise
_LEVEL_TOL = 1e-9          # snapping tolerance for y - X(t-) at spindle ends
_SPINDLE_CHUNK = 256       # spindles sampled per batch in sequential builds


@dataclass(frozen=True)
class Horizon:
    """Stopping rule for the spindle measure: observe for a fixed time
    span, a fixed number of atoms, or until the scaffold's n-th downward
    hit of level zero."""

    kind: str
    value: float

    _KINDS = ("fixed_time", "fixed_count", "zero_hit")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown horizon kind {self.kind!r}")
        if self.value < 0:
            raise ValueError("horizon value must be nonnegative")


@dataclass(frozen=True, eq=False)
class SpindleMeasure:
    """Time-ordered spindle atoms observed over [0, length].

    Atoms built by ``build_prm`` all have amplitude above the cutoff;
    derived measures (clade splits, starting-partition builds) may carry
    partial spindles below it.
    """

    atoms: tuple                 # ((t, Spindle), ...) strictly increasing t
    cutoff: float
    horizon: Horizon
    length: float
    truncated: bool = False

    def __post_init__(self):
        ts = [t for t, _ in self.atoms]
        if any(t1 <= t0 for t0, t1 in zip(ts, ts[1:])):
            raise ValueError("atom times must be strictly increasing")
        if ts and (ts[0] < 0 or ts[-1] > self.length + 1e-12):
            raise ValueError("atom times must lie within [0, length]")

    def __len__(self):
        return len(self.atoms)


@dataclass(frozen=True, eq=False)
class ScaffoldPath:
    """Piecewise-affine cadlag path: slope * t plus the accumulated jumps.

    ``dropped_mass`` reports compensated-but-omitted jump mass per unit
    time (nonzero only when the slope targets the full jump measure while
    the atom list was truncated at a cutoff).
    """

    jump_times: np.ndarray
    jump_heights: np.ndarray
    slope: float
    length: float
    dropped_mass: float = 0.0

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=float)
        jh = np.asarray(self.jump_heights, dtype=float)
        if jt.shape != jh.shape:
            raise ValueError("times and heights must align")
        if self.slope > 0:
            raise ValueError("slope must be nonpositive")
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "jump_heights", jh)

    @cached_property
    def _cum(self):
        return np.concatenate([[0.0], np.cumsum(self.jump_heights)])

    def value(self, t):
        """X(t), jumps included at their own times (cadlag)."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_times, t, side="right")
        out = self.slope * t + self._cum[idx]
        return float(out) if out.ndim == 0 else out

    def value_left(self, t):
        """X(t-), the pre-jump value."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_times, t, side="left")
        out = self.slope * t + self._cum[idx]
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LevelSlice:
    """What a horizontal cut at ``level`` sees: per-crossing records
    (time, width, spindle ordinal) and the resulting partition."""

    level: float
    crossings: tuple
    partition: IntervalPartition
    dropped: int = 0


@lru_cache(maxsize=64)
def compensator_slope(law) -> Tuple[float, float]:
    """Drift (slope, dropped mass rate) balancing the jump mass.

    Unbounded-variation spindle measures get the mass of the cutoff
    truncation itself (the construction is the truncated one). When the
    total mass is finite the slope compensates all of it, including jumps
    below the cutoff that never enter the atom list; the difference is
    reported as dropped mass.
    """
    total = total_lifetime_mass(law)
    kept = truncated_lifetime_mass(law, law.cutoff)
    if math.isinf(total):
        return -kept, 0.0
    return -total, total - kept


def build_prm(law, horizon: Horizon, rng, cutoff: Optional[float] = None,
              max_atoms: int = 2_000_000) -> SpindleMeasure:
    """Sample the spindle measure above the cutoff under a stopping rule.

    Atom times form a Poisson process of rate 1/s(cutoff); each atom
    carries an independent spindle conditioned to exceed the cutoff.
    ``cutoff`` overrides the law's own (useful for refinement sweeps).
    The truncated flag is set when ``max_atoms`` fires before the horizon.
    """
    if cutoff is not None and cutoff != law.cutoff:
        law = ExcursionLaw(spec=law.spec, cutoff=cutoff, dt=law.dt, t=law.t)
    gen = _gen(rng)
    rate = law.rate

    if horizon.kind == "fixed_time":
        t_end = float(horizon.value)
        n = int(gen.poisson(rate * t_end))
        truncated = n > max_atoms
        n = min(n, max_atoms)
        times = np.sort(gen.uniform(0.0, t_end, size=n))
        while n > 1 and np.any(np.diff(times) <= 0):
            times = np.sort(gen.uniform(0.0, t_end, size=n))
        spindles = sample_spindles(law, n, gen)
        atoms = tuple(zip(times.tolist(), spindles))
        return SpindleMeasure(atoms=atoms, cutoff=law.cutoff, horizon=horizon,
                              length=t_end, truncated=truncated)

    if horizon.kind == "fixed_count":
        n = int(horizon.value)
        truncated = n > max_atoms
        n = min(n, max_atoms)
        gaps = gen.exponential(scale=1.0 / rate, size=n)
        times = np.cumsum(gaps)
        spindles = sample_spindles(law, n, gen)
        atoms = tuple(zip(times.tolist(), spindles))
        length = float(times[-1]) if n else 0.0
        return SpindleMeasure(atoms=atoms, cutoff=law.cutoff, horizon=horizon,
                              length=length, truncated=truncated)

    # zero_hit: run until the scaffold's n-th downward hit of level 0
    slope, _ = compensator_slope(law)
    if slope >= 0:
        raise ValueError("zero-hit horizon needs a strictly negative slope")
    n_hits = int(horizon.value)
    atoms = []
    pool = []
    t_cur, x_cur, hits = 0.0, 0.0, 0
    truncated = False
    while hits < n_hits:
        if len(atoms) >= max_atoms:
            truncated = True
            break
        if not pool:
            pool = list(sample_spindles(law, _SPINDLE_CHUNK, gen))
        gap = gen.exponential(scale=1.0 / rate)
        if x_cur > 0 and x_cur + slope * gap <= 0:
            hits += 1
            if hits == n_hits:
                t_cur = t_cur + x_cur / (-slope)
                break
        sp = pool.pop()
        t_cur += gap
        x_cur += slope * gap + sp.zeta
        atoms.append((t_cur, sp))
    return SpindleMeasure(atoms=tuple(atoms), cutoff=law.cutoff,
                          horizon=horizon, length=t_cur, truncated=truncated)


def build_scaffold(measure: SpindleMeasure, law) -> ScaffoldPath:
    """The compensated jump path of a spindle measure: X(0) = 0, affine of
    negative slope between atoms, one upward jump of size zeta per atom."""
    slope, dropped = compensator_slope(law)
    times = np.array([t for t, _ in measure.atoms], dtype=float)
    heights = np.array([sp.zeta for _, sp in measure.atoms], dtype=float)
    return ScaffoldPath(jump_times=times, jump_heights=heights, slope=slope,
                        length=measure.length, dropped_mass=dropped)


def _crossing_width(spindle: Spindle, u: float) -> float:
    """Spindle width at elapsed spindle-time u, with endpoint snapping so
    grid start values are reproduced exactly."""
    zeta = spindle.zeta
    if u < -_LEVEL_TOL or u > zeta + _LEVEL_TOL:
        return 0.0
    if abs(u) <= _LEVEL_TOL:
        u = 0.0
    elif abs(u - zeta) <= _LEVEL_TOL:
        u = zeta
    return spindle.path.value_at(u)


def level_slice(y: float, measure: SpindleMeasure, path: ScaffoldPath,
                floor: float = _WIDTH_FLOOR) -> LevelSlice:
    """All spindles straddling level y, in time order. A spindle at time t
    occupying scaffold heights [X(t-), X(t)] contributes its width at
    spindle-time y - X(t-); widths at or below the floor are dropped and
    counted."""
    if len(measure) == 0:
        return LevelSlice(level=y, crossings=(), partition=EMPTY)
    times = np.array([t for t, _ in measure.atoms], dtype=float)
    lefts = path.value_left(times)
    crossings = []
    dropped = 0
    for k, ((t, sp), xl) in enumerate(zip(measure.atoms, lefts)):
        u = y - xl
        if u < -_LEVEL_TOL or u > sp.zeta + _LEVEL_TOL:
            continue
        w = _crossing_width(sp, u)
        if w > floor:
            crossings.append((t, w, k))
        else:
            dropped += 1
    widths = tuple(w for _, w, _ in crossings)
    total = math.fsum(widths)
    if not math.isfinite(total):
        return LevelSlice(level=y, crossings=(), partition=EMPTY,
                          dropped=dropped)
    part = IntervalPartition(widths=widths) if widths else EMPTY
    return LevelSlice(level=y, crossings=tuple(crossings), partition=part,
                      dropped=dropped)


def skewer(y: float, measure: SpindleMeasure, path: ScaffoldPath
           ) -> IntervalPartition:
    """The interval partition seen at level y."""
    return level_slice(y, measure, path).partition


def crossing_widths(y: float, measure: SpindleMeasure, path: ScaffoldPath):
    """Widths of the spindles straddling level y, in time order."""
    return [w for _, w, _ in level_slice(y, measure, path).crossings]


def local_time_estimate(path: ScaffoldPath, y: float, t: float,
                        h: float) -> float:
    """Occupation-density estimate (1/2h) Leb{s <= t : |X(s) - y| <= h},
    computed exactly over the affine segments."""
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    t = min(t, path.length) if path.length > 0 else t
    cut = np.searchsorted(path.jump_times, t, side="left")
    starts = np.concatenate([[0.0], path.jump_times[:cut]])
    ends = np.concatenate([path.jump_times[:cut], [t]])
    x0 = path.slope * starts + path._cum[:cut + 1]
    d = path.slope
    if d == 0.0:
        inside = np.abs(x0 - y) <= h
        return float(np.sum((ends - starts)[inside]) / (2 * h))
    lo = (y + h - x0) / d
    hi = (y - h - x0) / d
    seg = np.clip(np.minimum(hi, ends - starts), 0.0, None) - \
        np.clip(np.maximum(lo, 0.0), 0.0, ends - starts)
    return float(np.sum(np.clip(seg, 0.0, None)) / (2 * h))


@dataclass(frozen=True)
class DiversityEstimate:
    """Ratios count(width > x) / speed-mass(above x) over a threshold grid
    (decreasing x), the stabilized small-x estimate, and whether the last
    three grid points agree within 20%."""

    thresholds: tuple
    ratios: tuple
    estimate: float
    converged: bool


def diversity(partition: IntervalPartition, spec,
              thresholds: Optional[Sequence[float]] = None
              ) -> DiversityEstimate:
    """Block-count scaling limit of the partition under the spindle
    diffusion's speed-mass normalization. Needs infinite speed mass near
    zero; bounded-variation specs are rejected."""
    report = classify_boundaries(spec)
    if report.zero_class == "regular":
        raise ValueError(
            "diversity normalization needs infinite speed mass near zero; "
            "not applicable to bounded-variation specs")
    widths = np.asarray(partition.widths, dtype=float)
    if thresholds is None:
        if len(widths) == 0:
            return DiversityEstimate((), (), 0.0, True)
        lo = max(np.min(widths) * 0.9, 1e-12)
        hi = max(np.max(widths) * 0.5, lo * 2)
        thresholds = np.exp(np.linspace(np.log(hi), np.log(lo), 10))
    thresholds = tuple(float(x) for x in thresholds)
    ratios = []
    for x in thresholds:
        mass = improper_integral(lambda v: speed_density(spec, v), x,
                                 math.inf, singular_hi=True)
        count = int(np.sum(widths > x))
        ratios.append(count / mass)
    last = ratios[-3:]
    if len(last) == 3 and min(last) > 0:
        converged = (max(last) - min(last)) / max(last) <= 0.20
    else:
        converged = len(widths) == 0
    estimate = float(np.mean(last)) if last else 0.0
    return DiversityEstimate(thresholds=thresholds, ratios=tuple(ratios),
                             estimate=estimate, converged=converged)


def _split_spindle(sp: Spindle, u: float):
    """Cut one spindle at elapsed time u into (lower, upper) parts sharing
    the interpolated boundary value; the lower part is not absorbed."""
    vals = sp.path.values
    dt = sp.path.dt
    j = int(math.floor(u / dt))
    j = max(0, min(j, len(vals) - 2))
    v = sp.path.value_at(u)
    low_vals = np.concatenate([vals[:j + 1], [v]])
    up_vals = np.concatenate([[v], vals[j + 1:]])
    lower = Spindle(
        path=PathGrid(dt=dt, values=low_vals, absorbed=False,
                      truncated=sp.path.truncated),
        amplitude=float(np.max(low_vals)),
        argmax_time=dt * int(np.argmax(low_vals)))
    upper = Spindle(
        path=PathGrid(dt=dt, values=up_vals, absorbed=sp.path.absorbed,
                      truncated=sp.path.truncated),
        amplitude=float(np.max(up_vals)),
        argmax_time=dt * int(np.argmax(up_vals)))
    return lower, upper, v


def biclade_split(measure: SpindleMeasure, slope: float):
    """Split one excursion about level 0 at its upward crossing.

    The input must contain exactly one spindle whose jump straddles 0
    (scaffold enters below zero, one jump crosses). Returns (anti, clade,
    crossing_width): the anti-clade keeps everything before the crossing
    plus the sub-zero part of the crossing spindle; the clade starts at
    time 0 with the rest of that spindle and carries the later atoms,
    times shifted.
    """
    if slope >= 0:
        raise ValueError("slope must be strictly negative")
    times = np.array([t for t, _ in measure.atoms], dtype=float)
    heights = np.array([sp.zeta for _, sp in measure.atoms], dtype=float)
    path = ScaffoldPath(jump_times=times, jump_heights=heights, slope=slope,
                        length=measure.length)
    cross_idx = None
    for k, (t, sp) in enumerate(measure.atoms):
        xl = path.value_left(t)
        if xl < 0 < xl + sp.zeta:
            cross_idx = k
            break
    if cross_idx is None:
        raise MalformedExcursionError(
            "no jump crosses level 0; not an excursion about 0")
    t_star, sp_star = measure.atoms[cross_idx]
    h = -path.value_left(t_star)
    lower, upper, v = _split_spindle(sp_star, h)
    anti_atoms = measure.atoms[:cross_idx] + ((t_star, lower),)
    clade_atoms = ((0.0, upper),) + tuple(
        (t - t_star, sp) for t, sp in measure.atoms[cross_idx + 1:])
    anti = SpindleMeasure(atoms=anti_atoms, cutoff=measure.cutoff,
                          horizon=measure.horizon, length=t_star,
                          truncated=measure.truncated)
    clade = SpindleMeasure(atoms=clade_atoms, cutoff=measure.cutoff,
                           horizon=measure.horizon,
                           length=measure.length - t_star,
                           truncated=measure.truncated)
    return anti, clade, v


def reverse_clade(measure: SpindleMeasure) -> SpindleMeasure:
    """Time-reverse the measure over its window: atom at t becomes an atom
    at length - t with the spindle run backwards. Applying it twice gives
    back the original, grid-exactly."""
    rev = []
    for t, sp in measure.atoms:
        rp = reverse_path(sp.path)
        rev.append((measure.length - t, Spindle(
            path=rp, amplitude=sp.amplitude,
            argmax_time=sp.zeta - sp.argmax_time)))
    rev.sort(key=lambda a: a[0])
    return SpindleMeasure(atoms=tuple(rev), cutoff=measure.cutoff,
                          horizon=measure.horizon, length=measure.length,
                          truncated=measure.truncated)


def start_from_partition(beta: IntervalPartition, law, rng,
                         start_ip_ok: Optional[bool] = None,
                         max_atoms_per_block: int = 200_000):
    """Build (measure, scaffold) whose level-0 slice reproduces beta.

    Each block of width x contributes one partial spindle started at value
    x (its width at level 0 is exactly x) followed by fresh spindle atoms
    until the scaffold works its way back down; blocks are laid end to
    end. Infinite partitions (``complete=False``) are only constructible
    when the entrance condition holds; pass ``start_ip_ok`` from the
    conditions checker to avoid recomputing it.
    """
    if not isinstance(beta, IntervalPartition):
        beta = IntervalPartition(tuple(beta))
    if not beta.complete:
        if start_ip_ok is None:
            from .conditions import check_start_ip
            start_ip_ok = check_start_ip(law.spec)
        if not start_ip_ok:
            raise ValueError(
                "the entrance condition fails for this diffusion; an "
                "infinite starting partition cannot be realized")
    slope, _ = compensator_slope(law)
    if slope >= 0:
        raise ValueError("starting construction needs a negative slope")
    gen = _gen(rng)
    rate = law.rate
    atoms = []
    truncated = False
    t_base = 0.0
    for width in beta.widths:
        x0 = width if law.t is None else law.t.inverse(width, law.spec.c)
        f_u = sample_zero_diffusion(law.spec, x0, law.dt, gen)
        start_sp = Spindle(path=f_u, amplitude=float(np.max(f_u.values)),
                           argmax_time=f_u.dt * int(np.argmax(f_u.values)))
        if law.t is not None:
            start_sp = map_spindle(start_sp, law.t)
        atoms.append((t_base, start_sp))
        x_cur = start_sp.zeta
        t_cur = t_base
        pool = []
        n_block = 0
        while True:
            gap = gen.exponential(scale=1.0 / rate)
            if x_cur + slope * gap <= 0:
                t_base = t_cur + x_cur / (-slope)
                break
            if n_block >= max_atoms_per_block:
                truncated = True
                t_base = t_cur + x_cur / (-slope)
                break
            if not pool:
                pool = list(sample_spindles(law, _SPINDLE_CHUNK, gen))
            sp = pool.pop()
            t_cur += gap
            x_cur += slope * gap + sp.zeta
            atoms.append((t_cur, sp))
            n_block += 1
    horizon = Horizon(kind="zero_hit", value=float(len(beta)))
    measure = SpindleMeasure(atoms=tuple(atoms), cutoff=law.cutoff,
                             horizon=horizon, length=t_base,
                             truncated=truncated)
    return measure, build_scaffold(measure, law)
