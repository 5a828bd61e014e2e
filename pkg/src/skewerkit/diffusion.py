"""Scale functions, speed measures, Green's functions and exit-time moments
for one-dimensional regular diffusions on [0, c) or [0, c].

A diffusion is described by its infinitesimal drift ``mu`` and infinitesimal
variance ``sigma2``. Derived objects follow the classical normalization

    s'(x) = exp(-int_b^x 2 mu(z) / sigma2(z) dz)
    s(x)  = int_0^x s'(y) dy
    m(x)  = 2 / (sigma2(x) s'(x))

with the derivative normalized at a reference point b (``s'(b) = 1``) and the
scale anchored at 0 (``s(0) = 0``). Changing b rescales s, s' and m by one
common constant; every downstream quantity we test is invariant under that
choice.

Quadrature policy: adaptive Gauss-Kronrod on regular pieces, geometric
refinement toward singular endpoints, relative target 1e-10 (1e-8 accepted).
An integral is declared infinite when partial sums exceed 1e12, double twice
in a row, or stop decaying under refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from .errors import InadmissibleSpecError, InvalidTransformError, QuadratureError

TARGET_REL = 1e-10
ACCEPT_REL = 1e-8
DIVERGENCE_CAP = 1e250
_TAIL_LEVELS = 64
_RATIO_CUTOFF = 0.97


# ---------------------------------------------------------------------------
# quadrature helpers


def _chunk(f, lo, hi):
    val, _ = integrate.quad(f, lo, hi, limit=200, epsabs=1e-13, epsrel=TARGET_REL)
    return val


def improper_integral(f, lo, hi, singular_lo=False, singular_hi=False):
    """Integrate a nonnegative integrand over (lo, hi), allowing endpoint
    singularities and hi = inf.

    Returns the value, or ``math.inf`` when the divergence protocol fires
    (partial sums beyond 1e12, doubling twice in a row, or non-decaying
    increments under geometric refinement).
    """
    if hi <= lo:
        return 0.0
    if math.isinf(hi):
        singular_hi = True
    if not singular_lo and not singular_hi:
        return _chunk(f, lo, hi)

    if singular_lo and singular_hi:
        mid = math.sqrt(lo * hi) if lo > 0 and not math.isinf(hi) else (
            (lo + hi) / 2.0 if not math.isinf(hi) else max(2.0 * lo, 1.0))
        left = improper_integral(f, lo, mid, singular_lo=True)
        if math.isinf(left):
            return math.inf
        right = improper_integral(f, mid, hi, singular_hi=True)
        return left + right if not math.isinf(right) else math.inf

    if singular_lo:
        anchor = lo + (hi - lo) / 2.0 if not math.isinf(hi) else max(2.0 * lo, 1.0)
        head = _chunk(f, anchor, hi) if hi > anchor else 0.0
        total = head
        span = anchor - lo
        pieces = []
        prev_total = None
        doubles = 0
        for k in range(_TAIL_LEVELS):
            inner, outer = lo + span * 2.0 ** (-(k + 1)), lo + span * 2.0 ** (-k)
            p = _chunk(f, inner, outer)
            pieces.append(p)
            prev_total, total = total, total + p
            if total > DIVERGENCE_CAP:
                return math.inf
            if prev_total > 0 and total >= 2.0 * prev_total:
                doubles += 1
                if doubles >= 2:
                    return math.inf
            else:
                doubles = 0
            if p <= max(1e-13, ACCEPT_REL * abs(total)):
                return total
            tail = _stable_tail(pieces, total)
            if tail is not None:
                return total + tail
        return _finish_tail(total, pieces)

    # singular_hi only
    anchor = lo + (hi - lo) / 2.0 if not math.isinf(hi) else max(2.0 * lo, 1.0)
    head = _chunk(f, lo, anchor)
    total = head
    pieces = []
    prev_total = None
    doubles = 0
    for k in range(_TAIL_LEVELS):
        if math.isinf(hi):
            inner, outer = anchor * 2.0 ** k, anchor * 2.0 ** (k + 1)
        else:
            span = hi - anchor
            inner, outer = hi - span * 2.0 ** (-k), hi - span * 2.0 ** (-(k + 1))
        p = _chunk(f, inner, outer)
        pieces.append(p)
        prev_total, total = total, total + p
        if total > DIVERGENCE_CAP:
            return math.inf
        if prev_total is not None and prev_total > 0 and total >= 2.0 * prev_total:
            doubles += 1
            if doubles >= 2:
                return math.inf
        else:
            doubles = 0
        if p <= max(1e-13, ACCEPT_REL * abs(total)):
            return total
        tail = _stable_tail(pieces, total)
        if tail is not None:
            return total + tail
    return _finish_tail(total, pieces)


def _stable_tail(pieces, total):
    """Geometric-tail shortcut: when the last four refinement pieces have a
    float-stable common ratio below 1, the remaining levels sum to
    p*rho/(1-rho) up to an error controlled by the ratio spread. Returns the
    tail to add, or None when the gate is not met."""
    last = pieces[-4:]
    if len(last) < 4 or any(p <= 0 for p in last):
        return None
    ratios = [last[i + 1] / last[i] for i in range(3)]
    rbar = sum(ratios) / 3.0
    if not 0.0 < rbar < 0.95:
        return None
    spread = max(abs(r - rbar) for r in ratios)
    if spread > 1e-6 * rbar:
        return None
    tail = last[-1] * rbar / (1.0 - rbar)
    err = last[-1] * spread * 4.0 / (1.0 - rbar) ** 2
    if err <= max(1e-13, 0.1 * ACCEPT_REL * abs(total + tail)):
        return tail
    return None


def _finish_tail(total, pieces):
    """Settle a refinement that neither converged nor blew up within the
    level budget: extrapolate a geometric tail, or declare divergence when
    the increments are not decaying."""
    last = [p for p in pieces[-6:] if p > 0]
    if len(last) < 3:
        return total
    ratios = [last[i + 1] / last[i] for i in range(len(last) - 1)]
    rho = float(np.exp(np.mean(np.log(ratios)))) if all(r > 0 for r in ratios) else 0.0
    if rho >= _RATIO_CUTOFF:
        return math.inf
    tail = last[-1] * rho / (1.0 - rho)
    if tail > ACCEPT_REL * max(abs(total), 1e-300) * 10:
        raise QuadratureError(
            "refinement exhausted with unresolved tail "
            f"(total={total:.6g}, tail estimate={tail:.3g})")
    return total + tail


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class TransformSpec:
    """A strictly increasing state-space map g with g(0) = 0.

    Derivatives are optional: missing ones are replaced by central finite
    differences where the caller needs them. ``holder`` optionally records
    (q0, {q: C_q}) continuity data near 0 used by the condition checker.
    """

    g: Callable
    g_inv: Optional[Callable] = None
    g_prime: Optional[Callable] = None
    g_double_prime: Optional[Callable] = None
    holder: Optional[tuple] = None
    name: str = "g"

    def inverse(self, z, hi):
        if self.g_inv is not None:
            return self.g_inv(z)
        return _numeric_inverse(self.g, z, hi)

    def prime(self, y):
        if self.g_prime is not None:
            return self.g_prime(y)
        h = 1e-6 * max(abs(y), 1e-6)
        lo = max(y - h, 1e-300)
        return (self.g(y + h) - self.g(lo)) / (y + h - lo)

    def double_prime(self, y):
        if self.g_double_prime is not None:
            return self.g_double_prime(y)
        h = 1e-4 * max(abs(y), 1e-4)
        return (self.prime(y + h) - self.prime(max(y - h, h * 1e-6))) / (
            y + h - max(y - h, h * 1e-6)) * 1.0

    @staticmethod
    def identity():
        one = lambda y: np.ones_like(np.asarray(y, dtype=float))
        zero = lambda y: np.zeros_like(np.asarray(y, dtype=float))
        return TransformSpec(g=lambda y: y, g_inv=lambda z: z, g_prime=one,
                             g_double_prime=zero, name="identity")


def _numeric_inverse(g, z, hi):
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0

    def solve(zz):
        if zz <= 0:
            return 0.0
        upper = min(hi, 1.0) if not math.isinf(hi) else 1.0
        while g(upper) < zz:
            upper *= 2.0
            if upper > 1e300:
                raise InvalidTransformError("inverse target out of range")
        return optimize.brentq(lambda y: g(y) - zz, 0.0, upper, xtol=1e-14, rtol=1e-14)

    out = np.array([solve(zz) for zz in np.atleast_1d(z_arr)])
    return float(out[0]) if scalar else out


@dataclass(frozen=True, eq=False)
class DiffusionSpec:
    """A diffusion on [0, c) or [0, c] given by drift and variance callables.

    ``mu`` and ``sigma2`` must accept numpy arrays. Closed forms for s', s
    (anchored at 0) and m may be attached and are preferred over quadrature.
    ``normalized`` records whether s'(ref_point) = 1 holds; derived specs
    (up-diffusions, pushforwards) keep the parent's normalization instead,
    because re-normalizing would break identities like M_up(dx) = s^2 M(dx).
    ``lifetime_tail_fn``, when present, is the closed-form excursion lifetime
    tail z -> nu(zeta > z) for the model family.
    """

    mu: Optional[Callable]
    sigma2: Optional[Callable]
    c: float
    ref_point: float
    closed_at_c: bool = False
    name: str = "custom"
    scale_derivative_fn: Optional[Callable] = None
    scale_fn: Optional[Callable] = None
    speed_density_fn: Optional[Callable] = None
    lifetime_tail_fn: Optional[Callable] = None
    normalized: bool = True

    def __post_init__(self):
        if not (0 < self.ref_point < self.c):
            raise ValueError("ref_point must lie strictly inside (0, c)")

    def interior_grid(self, n=50):
        """Log-spaced evaluation grid inside (0, c), used by consistency tests."""
        hi = self.c if not math.isinf(self.c) else 100.0 * self.ref_point
        lo = min(self.ref_point * 1e-4, hi * 1e-6)
        return np.geomspace(lo, hi * (1 - 1e-9), n)


@dataclass(frozen=True)
class BoundaryReport:
    zero_class: str          # "regular" | "exit" | "inadmissible"
    c_class: str             # "regular" | "inaccessible"
    a1_ok: bool
    a2_ok: bool
    diagnostics: tuple = field(default_factory=tuple)


# ---------------------------------------------------------------------------
# scale and speed


def scale_derivative(spec, x):
    """s'(x) = exp(-int_b^x 2 mu / sigma2); exactly 1 at the reference point
    for normalized specs."""
    if spec.scale_derivative_fn is not None:
        return spec.scale_derivative_fn(x)
    return _scale_derivative_numeric(spec, float(x))


@lru_cache(maxsize=100_000)
def _scale_derivative_numeric(spec, x):
    if not (0 < x < spec.c) and x != spec.c:
        raise ValueError(f"x={x} outside (0, c)")
    if spec.mu is None or spec.sigma2 is None:
        raise InadmissibleSpecError("spec has no drift/variance callables")
    f = lambda z: 2.0 * spec.mu(z) / spec.sigma2(z)
    try:
        val = _chunk(f, spec.ref_point, x)
    except Exception as exc:  # quadrature failure counts as evaluation failure
        raise QuadratureError(f"scale derivative at x={x}: {exc}") from exc
    return math.exp(-val)


def scale(spec, x):
    """s(x) = int_0^x s'(y) dy, anchored so s(0) = 0.

    Returns ``math.inf`` for x = c when the limit diverges; raises
    InadmissibleSpecError when the anchor integral itself diverges (s' not
    integrable at 0), since then no 0-anchored scale exists.
    """
    if x == 0:
        return 0.0
    if not (0 < x <= spec.c):
        raise ValueError(f"x={x} outside [0, c]")
    if spec.scale_fn is not None:
        return spec.scale_fn(x)
    return _scale_numeric(spec, float(x))


@lru_cache(maxsize=100_000)
def _scale_numeric(spec, x):
    val = improper_integral(lambda y: scale_derivative(spec, y), 0.0,
                            min(x, spec.c), singular_lo=True,
                            singular_hi=math.isinf(x))
    if math.isinf(val):
        if x == spec.c:
            return math.inf
        raise InadmissibleSpecError(
            "scale derivative not integrable at 0; no 0-anchored scale")
    return val


def scale_between(spec, lo, hi):
    """s(hi) - s(lo) without the 0 anchor; defined for every spec."""
    if hi == lo:
        return 0.0
    if spec.scale_fn is not None:
        return spec.scale_fn(hi) - spec.scale_fn(lo)
    return _chunk(lambda y: scale_derivative(spec, y), lo, hi)


def speed_density(spec, x):
    if spec.speed_density_fn is not None:
        return spec.speed_density_fn(x)
    return 2.0 / (spec.sigma2(x) * scale_derivative(spec, x))


def speed_mass(spec, lo, hi):
    """M((lo, hi)) with divergence near 0 and c detected; may return inf."""
    if hi > spec.c:
        raise ValueError("hi beyond the upper boundary")
    return improper_integral(lambda v: speed_density(spec, v), lo, hi,
                             singular_lo=(lo == 0.0),
                             singular_hi=(hi == spec.c))


# ---------------------------------------------------------------------------
# boundary classification


def classify_boundaries(spec):
    """Feller-style verdicts at 0 and c.

    0 is attainable (first admissibility integral int_0^b s dM finite) and then
    regular or exit according to whether the speed mass near 0 is finite; c is
    regular exactly when s(c) is finite.
    """
    b = spec.ref_point
    diags = []

    try:
        s_at_b = scale(spec, b)
        scale_ok = math.isfinite(s_at_b)
    except InadmissibleSpecError:
        s_at_b = math.inf
        scale_ok = False
    diags.append(("scale-near-0", s_at_b, "finite" if scale_ok else "divergent"))

    if scale_ok:
        attain = improper_integral(lambda v: scale(spec, v) * speed_density(spec, v),
                                   0.0, b, singular_lo=True)
    else:
        attain = math.inf
    a1_ok = math.isfinite(attain)
    diags.append(("attainability-integral", attain, "finite" if a1_ok else "divergent"))

    mass_to_c = speed_mass(spec, b, spec.c)
    a2_ok = math.isfinite(mass_to_c)
    diags.append(("speed-mass-to-c", mass_to_c, "finite" if a2_ok else "divergent"))

    mass_near_0 = speed_mass(spec, 0.0, b)
    diags.append(("speed-mass-near-0", mass_near_0,
                  "finite" if math.isfinite(mass_near_0) else "divergent"))

    if not a1_ok:
        zero_class = "inadmissible"
    elif math.isfinite(mass_near_0):
        zero_class = "regular"
    else:
        zero_class = "exit"

    s_at_c = scale(spec, spec.c) if scale_ok else math.inf
    diags.append(("scale-at-c", s_at_c, "finite" if math.isfinite(s_at_c) else "divergent"))
    c_class = "regular" if math.isfinite(s_at_c) else "inaccessible"

    return BoundaryReport(zero_class=zero_class, c_class=c_class,
                          a1_ok=a1_ok, a2_ok=a2_ok, diagnostics=tuple(diags))


# ---------------------------------------------------------------------------
# Green's function and exit times


def green(spec, a, w, x, v):
    """Occupation density kernel on (a, w): integrating green * m over v
    gives the expected exit time from (a, w) started at x."""
    if a >= w:
        raise ValueError("need a < w")
    if not (a < x < w and a < v < w):
        raise ValueError("need a < x < w and a < v < w")
    sa, sw, sx, sv = (scale(spec, a), scale(spec, w), scale(spec, x), scale(spec, v))
    if v >= x:
        return (sx - sa) / (sw - sa) * (sw - sv)
    return (sw - sx) / (sw - sa) * (sv - sa)


def expected_exit_time(spec, a, w, x, split=True):
    """E_x[T_a ^ T_w] = int_a^w G(x, v) m(v) dv; +inf when divergent.

    ``split=False`` integrates in a single pass; the two routes agreeing is a
    consistency property exercised by the tests.
    """
    if not (a < x < w):
        raise ValueError("need a < x < w")
    f = lambda v: green(spec, a, w, x, v) * speed_density(spec, v)
    if split:
        left = improper_integral(f, a, x, singular_lo=(a == 0.0))
        right = improper_integral(f, x, w, singular_hi=(w == spec.c))
        return left + right
    return improper_integral(f, a, w, singular_lo=(a == 0.0),
                             singular_hi=(w == spec.c))


def hitting_probability(spec, x, w):
    """P_x(T_w < T_0) = s(x)/s(w) for 0 < x < w."""
    if not (0 < x < w <= spec.c):
        raise ValueError("need 0 < x < w <= c")
    sw = scale(spec, w)
    if math.isinf(sw):
        return 0.0
    return scale(spec, x) / sw


def mean_absorption_time(spec, x):
    """r(x) = int_E s(v ^ x) M(dv), the expected lifetime of the 0-diffusion
    from x; +inf when the speed mass away from 0 diverges."""
    if not (0 < x < spec.c):
        raise ValueError("x outside (0, c)")
    head = improper_integral(lambda v: scale(spec, v) * speed_density(spec, v),
                             0.0, x, singular_lo=True)
    tail_mass = speed_mass(spec, x, spec.c)
    if math.isinf(head) or math.isinf(tail_mass):
        return math.inf
    return head + scale(spec, x) * tail_mass


def expected_time_from_top(spec):
    """E_c[T_0] = int_0^c s(v) M(dv), for specs whose c boundary is regular."""
    return improper_integral(lambda v: scale(spec, v) * speed_density(spec, v),
                             0.0, spec.c, singular_lo=True, singular_hi=True)


# ---------------------------------------------------------------------------
# conditioned-to-climb diffusion and its hitting moments


def up_diffusion(spec):
    """The diffusion conditioned never to return to 0: drift gains
    (s'/s) sigma^2, variance unchanged. The returned spec carries
    s_up'(x) = s'(x)/s(x)^2 as its closed scale derivative (scale -1/s(x),
    which has no 0 anchor, hence ``scale`` raises on it by design) and is
    flagged un-normalized: its speed then satisfies m_up = s^2 m exactly.
    """
    if spec.scale_derivative_fn is not None and spec.scale_fn is not None:
        sp, sf = spec.scale_derivative_fn, spec.scale_fn
        ratio = lambda x: sp(x) / sf(x)
        s_up_prime = lambda x: sp(x) / sf(x) ** 2
    else:
        ratio = _vectorize_scalar(lambda x: scale_derivative(spec, x) / scale(spec, x))
        s_up_prime = _vectorize_scalar(
            lambda x: scale_derivative(spec, x) / scale(spec, x) ** 2)

    base_mu, base_s2 = spec.mu, spec.sigma2
    mu_up = lambda x: base_mu(x) + ratio(x) * base_s2(x)
    return DiffusionSpec(mu=mu_up, sigma2=base_s2, c=spec.c,
                         ref_point=spec.ref_point, closed_at_c=spec.closed_at_c,
                         name=spec.name + "-up", scale_derivative_fn=s_up_prime,
                         normalized=False)


def _vectorize_scalar(f):
    def wrapped(x):
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            return f(float(arr))
        return np.array([f(float(v)) for v in arr.ravel()]).reshape(arr.shape)
    return wrapped


def up_hitting_time_mean(spec, w):
    """Expected time for the climbing diffusion from 0 to reach w:
    int_0^w (1/s(v) - 1/s(w)) s(v)^2 M(dv)."""
    sw = scale(spec, w)

    def f(v):
        sv = scale(spec, v)
        return (1.0 / sv - 1.0 / sw) * sv * sv * speed_density(spec, v)

    return improper_integral(f, 0.0, w, singular_lo=True)


def up_hitting_time_mean_from(spec, z, w):
    """Expected time for the climbing diffusion to reach w from an interior
    start z: occupation above z plus the below-z occupation term
    (1/s(z) - 1/s(w)) * M_up((0,z)). Reduces to the from-0 formula at z=0."""
    sw = scale(spec, w)
    kern = lambda v: ((1.0 / scale(spec, v) - 1.0 / sw)
                      * scale(spec, v) ** 2 * speed_density(spec, v))
    if z == 0.0:
        return improper_integral(kern, 0.0, w, singular_lo=True)
    above = _chunk(kern, z, w)
    below_mass = improper_integral(
        lambda v: scale(spec, v) ** 2 * speed_density(spec, v),
        0.0, z, singular_lo=True)
    return above + (1.0 / scale(spec, z) - 1.0 / sw) * below_mass


def up_hitting_time_second_moment(spec, w):
    """Second moment of the climb time to w from 0, as the single quadrature
    (after collapsing the outer scale integral)

        2 int_0^w E_up_z[T_w] (1/s(z) - 1/s(w)) s(z)^2 m(z) dz.
    """
    sw = scale(spec, w)

    def f(z):
        return (up_hitting_time_mean_from(spec, z, w)
                * (1.0 / scale(spec, z) - 1.0 / sw)
                * scale(spec, z) ** 2 * speed_density(spec, z))

    return 2.0 * improper_integral(f, 0.0, w, singular_lo=True)


# ---------------------------------------------------------------------------
# state-space pushforward


def transform(spec, t, infinitesimal=True):
    """Pushforward Z = g(Y). Scale, speed and boundary data always transfer
    (s_Z(g(y)) = s_Y(y), m_Z(g(y)) = m_Y(y)/g'(y)); drift and variance are
    produced from g', g'' when ``infinitesimal`` is true.
    """
    grid = spec.interior_grid(40)
    gs = t.g(grid) if _accepts_arrays(t.g) else np.array([t.g(v) for v in grid])
    if not np.all(np.isfinite(gs)) or not np.all(np.diff(gs) > 0):
        raise InvalidTransformError("map is not strictly increasing on the grid")

    c_z = _image_of_c(spec, t)
    inv = lambda z: t.inverse(z, spec.c)

    mu_z = sigma2_z = None
    if infinitesimal and spec.mu is not None:
        def mu_z(z):
            y = inv(z)
            return 0.5 * spec.sigma2(y) * _dbl(t, y) + spec.mu(y) * _prm(t, y)

        def sigma2_z(z):
            y = inv(z)
            return spec.sigma2(y) * _prm(t, y) ** 2

    s_prime_z = lambda z: scale_derivative(spec, inv(z)) / _prm(t, inv(z))
    scale_z = lambda z: scale(spec, inv(z))
    speed_z = lambda z: speed_density(spec, inv(z)) / _prm(t, inv(z))

    return DiffusionSpec(mu=mu_z, sigma2=sigma2_z, c=c_z,
                         ref_point=float(t.g(spec.ref_point)),
                         closed_at_c=spec.closed_at_c,
                         name=f"{t.name}({spec.name})",
                         scale_derivative_fn=s_prime_z, scale_fn=scale_z,
                         speed_density_fn=speed_z,
                         lifetime_tail_fn=spec.lifetime_tail_fn,
                         normalized=False)


def _prm(t, y):
    return t.prime(y)


def _dbl(t, y):
    return t.double_prime(y)


def _accepts_arrays(f):
    try:
        out = f(np.array([0.25, 0.5]))
        return np.shape(out) == (2,)
    except Exception:
        return False


def _image_of_c(spec, t):
    if not math.isinf(spec.c):
        return float(t.g(spec.c))
    v1, v2 = float(t.g(1e9)), float(t.g(1e12))
    if not math.isfinite(v2) or v2 > v1 * (1 + 1e-9):
        return math.inf
    return v2
