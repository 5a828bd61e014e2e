"""Built-in diffusion catalogue.

Every model yields a bundle (base diffusion Y, state map g, image Z = g(Y))
with closed-form scale and speed data attached where available, plus the
drift-envelope and Holder metadata consumed by the condition checker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import stats

from .diffusion import DiffusionSpec, TransformSpec, transform


@dataclass(frozen=True)
class ModelBundle:
    """A base diffusion, the state map applied to it, and the image diffusion.

    ``drift_window`` is a right neighborhood (0, eps] of 0 on which the base
    drift stays inside ``drift_range`` = (lo, hi); ``q0`` is the Holder
    threshold of the map near 0 (q-Holder for every q < q0), or None when it
    must be estimated from data. Unpacks as the (Y, g, Z) triple.
    """

    base: DiffusionSpec
    map: TransformSpec
    image: DiffusionSpec
    drift_window: float
    drift_range: tuple
    q0: Optional[float]
    name: str
    params: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.base, self.map, self.image))


def _const(value):
    return lambda x: np.full_like(np.asarray(x, dtype=float), value)


def _linear(slope):
    return lambda x: slope * np.asarray(x, dtype=float)


def besq(alpha):
    """Squared Bessel diffusion of negative dimension -2*alpha on [0, inf):
    drift -2*alpha, variance 4x. The closed excursion-lifetime tail is
    attached (a pure power law in 1/z of exponent 1+alpha)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"besq requires alpha in (0,1), got {alpha}")
    beta = 1.0 + alpha
    tail_const = beta / math.gamma(2.0 + alpha)
    spec = DiffusionSpec(
        mu=_const(-2.0 * alpha),
        sigma2=_linear(4.0),
        c=math.inf,
        ref_point=1.0,
        name=f"besq({alpha:g})",
        scale_derivative_fn=lambda x: np.asarray(x, dtype=float) ** alpha,
        scale_fn=lambda x: np.asarray(x, dtype=float) ** beta / beta,
        speed_density_fn=lambda x: 0.5 * np.asarray(x, dtype=float) ** (-beta),
        lifetime_tail_fn=lambda z: tail_const * (2.0 * np.asarray(z, dtype=float)) ** (-beta),
    )
    return ModelBundle(base=spec, map=TransformSpec.identity(), image=spec,
                       drift_window=1.0, drift_range=(-2.0 * alpha, -2.0 * alpha),
                       q0=1.0, name="besq", params={"alpha": alpha})


def besq_dim0(eps2):
    """Driftless squared Bessel (dimension 0) on [0, 2*eps2] with the top
    boundary kept in the state space: s(x) = x, m(x) = 1/(2x). The speed mass
    diverges logarithmically at 0, so 0 is an exit boundary and the
    start-from-partition criterion fails for this model."""
    if eps2 <= 0:
        raise ValueError(f"besq_dim0 requires eps2 > 0, got {eps2}")
    spec = DiffusionSpec(
        mu=_const(0.0),
        sigma2=_linear(4.0),
        c=2.0 * eps2,
        ref_point=eps2,
        closed_at_c=True,
        name=f"besq-dim0({eps2:g})",
        scale_derivative_fn=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        scale_fn=lambda x: np.asarray(x, dtype=float) * 1.0,
        speed_density_fn=lambda x: 0.5 / np.asarray(x, dtype=float),
    )
    return ModelBundle(base=spec, map=TransformSpec.identity(), image=spec,
                       drift_window=eps2, drift_range=(0.0, 0.0),
                       q0=1.0, name="besq-dim0", params={"eps2": eps2})


def self_similar(alpha, k, q):
    """besq(alpha) viewed through the power map g(y) = k * y**q."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"self_similar requires alpha in (0,1), got {alpha}")
    if k <= 0 or q <= 0:
        raise ValueError(f"self_similar requires k > 0 and q > 0, got k={k}, q={q}")
    y_bundle = besq(alpha)
    t = TransformSpec(
        g=lambda y: k * np.asarray(y, dtype=float) ** q,
        g_inv=lambda z: (np.asarray(z, dtype=float) / k) ** (1.0 / q),
        g_prime=lambda y: k * q * np.asarray(y, dtype=float) ** (q - 1.0),
        g_double_prime=lambda y: k * q * (q - 1.0) * np.asarray(y, dtype=float) ** (q - 2.0),
        holder=(min(q, 1.0), {min(q, 1.0): k}),
        name=f"power(k={k:g},q={q:g})",
    )
    image = replace(transform(y_bundle.base, t),
                    name=f"self-similar({alpha:g},{k:g},{q:g})")
    return ModelBundle(base=y_bundle.base, map=t, image=image,
                       drift_window=1.0, drift_range=(-2.0 * alpha, -2.0 * alpha),
                       q0=min(q, 1.0), name="self-similar",
                       params={"alpha": alpha, "k": k, "q": q})


# -- Wright-Fisher ----------------------------------------------------------
#
# Z solves dZ = (gamma2 (1-Z) - gamma1 Z) dt + sqrt(Z (1-Z)) dB on [0,1).
# With z = g(y) = sin^2(sqrt(y)/2) the base diffusion Y lives on [0, pi^2)
# and has variance 4y; its drift follows from the change-of-variables
# identities (series expansions guard the removable singularity at 0).


def _wf_mu_y(gamma1, gamma2):
    def mu(y):
        arr = np.asarray(y, dtype=float)
        u = np.sqrt(np.clip(arr, 0.0, None))
        small = u < 1e-4
        us = np.where(small, 1.0, u)
        exact = 1.0 + us * (4.0 * gamma2 / np.sin(us) - np.cos(us) / np.sin(us)
                            - 2.0 * (gamma1 + gamma2) * np.tan(us / 2.0))
        series = 4.0 * gamma2 + u * u * (2.0 * gamma2 / 3.0 + 1.0 / 3.0 - gamma1 - gamma2)
        out = np.where(small, series, exact)
        return out if arr.ndim else float(out)
    return mu


def _wf_map():
    def g(y):
        u = np.sqrt(np.asarray(y, dtype=float))
        return np.sin(u / 2.0) ** 2

    def g_inv(z):
        return (2.0 * np.arcsin(np.sqrt(np.asarray(z, dtype=float)))) ** 2

    def g_prime(y):
        arr = np.asarray(y, dtype=float)
        u = np.sqrt(arr)
        small = u < 1e-6
        us = np.where(small, 1.0, u)
        out = np.where(small, 0.25 * (1.0 - u * u / 6.0), np.sin(us) / (4.0 * us))
        return out if arr.ndim else float(out)

    def g_double_prime(y):
        arr = np.asarray(y, dtype=float)
        u = np.sqrt(arr)
        small = u < 1e-3
        us = np.where(small, 1.0, u)
        out = np.where(small, -1.0 / 24.0 + u * u / 240.0,
                       (np.cos(us) - np.sin(us) / us) / (8.0 * us * us))
        return out if arr.ndim else float(out)

    return TransformSpec(g=g, g_inv=g_inv, g_prime=g_prime,
                         g_double_prime=g_double_prime, holder=(1.0, {1.0: 0.25}),
                         name="half-angle-sine")


def wright_fisher(gamma1, gamma2):
    """Wright-Fisher frequency diffusion with mutation rates (gamma1, gamma2),
    presented as its variance-4y base diffusion on [0, pi^2) plus the
    half-angle sine map onto [0, 1)."""
    if gamma1 < 0:
        raise ValueError(f"wright_fisher requires gamma1 >= 0, got {gamma1}")
    if not 0.0 < gamma2 < 0.5:
        raise ValueError(
            f"wright_fisher requires gamma2 in (0, 1/2), got {gamma2}; "
            "the endpoint gamma2=0 has no supported construction (0 stops "
            "being an accessible boundary of the right kind)")
    t = _wf_map()
    mu_y = _wf_mu_y(gamma1, gamma2)
    two_g2, two_g1 = 2.0 * gamma2, 2.0 * gamma1
    window, rng_lo, rng_hi = _positive_drift_window(mu_y, 0.5)

    def raw_scale_derivative(y):
        z = t.g(y)
        return z ** (-two_g2) * (1.0 - z) ** (-two_g1) * t.g_prime(y)

    norm = float(raw_scale_derivative(np.asarray(window)))
    base = DiffusionSpec(
        mu=mu_y,
        sigma2=_linear(4.0),
        c=math.pi ** 2,
        ref_point=window,
        name=f"wf-base({gamma1:g},{gamma2:g})",
        scale_derivative_fn=lambda y: raw_scale_derivative(y) / norm,
    )
    image = replace(
        transform(base, t),
        mu=lambda z: gamma2 * (1.0 - np.asarray(z, dtype=float)) - gamma1 * np.asarray(z, dtype=float),
        sigma2=lambda z: np.asarray(z, dtype=float) * (1.0 - np.asarray(z, dtype=float)),
        name=f"wright-fisher({gamma1:g},{gamma2:g})",
    )
    return ModelBundle(base=base, map=t, image=image,
                       drift_window=window, drift_range=(rng_lo, rng_hi),
                       q0=1.0, name="wright-fisher",
                       params={"gamma1": gamma1, "gamma2": gamma2})


def cir(a, b, c):
    """Cox-Ingersoll-Ross rate diffusion dZ = (bZ + c) dt + sqrt(aZ) dB with
    a > 0, b < 0 and 0 < 2c < a, presented over its variance-4y base via the
    linear map z = (a/4) y."""
    if a <= 0:
        raise ValueError(f"cir requires a > 0, got {a}")
    if b >= 0:
        raise ValueError(f"cir requires b < 0, got {b}")
    if not 0.0 < 2.0 * c < a:
        raise ValueError(f"cir requires 0 < 2c < a, got a={a}, c={c}")
    beta_plus = 2.0 * c / a
    mu_y = lambda y: b * np.asarray(y, dtype=float) + 4.0 * c / a
    window, rng_lo, rng_hi = _positive_drift_window(mu_y, min(1.0, (2.0 * c / a) / (-b)))
    base = DiffusionSpec(
        mu=mu_y,
        sigma2=_linear(4.0),
        c=math.inf,
        ref_point=window,
        name=f"cir-base({a:g},{b:g},{c:g})",
        scale_derivative_fn=lambda y: np.exp(-b * (np.asarray(y, dtype=float) - window) / 2.0)
        * (np.asarray(y, dtype=float) / window) ** (-beta_plus),
        speed_density_fn=lambda y: 0.5 * np.exp(b * (np.asarray(y, dtype=float) - window) / 2.0)
        * (np.asarray(y, dtype=float) / window) ** (beta_plus - 1.0) / window,
    )
    t = TransformSpec(
        g=lambda y: (a / 4.0) * np.asarray(y, dtype=float),
        g_inv=lambda z: (4.0 / a) * np.asarray(z, dtype=float),
        g_prime=lambda y: np.full_like(np.asarray(y, dtype=float), a / 4.0),
        g_double_prime=lambda y: np.zeros_like(np.asarray(y, dtype=float)),
        holder=(1.0, {1.0: a / 4.0}),
        name=f"linear({a / 4.0:g})",
    )
    image = replace(
        transform(base, t),
        mu=lambda z: b * np.asarray(z, dtype=float) + c,
        sigma2=lambda z: a * np.asarray(z, dtype=float),
        name=f"cir({a:g},{b:g},{c:g})",
    )
    return ModelBundle(base=base, map=t, image=image,
                       drift_window=window, drift_range=(rng_lo, rng_hi),
                       q0=1.0, name="cir", params={"a": a, "b": b, "c": c})


def custom(spec, t=None):
    """Wrap a user-supplied DiffusionSpec (and optional map) as a bundle;
    drift metadata is sampled rather than known in closed form."""
    t = t or TransformSpec.identity()
    window, lo, hi = _drift_envelope(spec.mu, spec.ref_point / 2.0)
    image = transform(spec, t) if t.name != "identity" else spec
    q0 = t.holder[0] if t.holder else None
    return ModelBundle(base=spec, map=t, image=image, drift_window=window,
                       drift_range=(lo, hi), q0=q0, name="custom",
                       params={})


def _positive_drift_window(mu, start):
    """Largest dyadic shrink of ``start`` on which the sampled drift stays
    positive; returns (window, min, max) over that window."""
    w = start
    for _ in range(40):
        grid = np.geomspace(w * 1e-8, w, 512)
        vals = np.asarray(mu(grid), dtype=float)
        if np.min(vals) > 0:
            return w, float(np.min(vals)), float(np.max(vals))
        w /= 2.0
    grid = np.geomspace(w * 1e-8, w, 512)
    vals = np.asarray(mu(grid), dtype=float)
    return w, float(np.min(vals)), float(np.max(vals))


def _drift_envelope(mu, window):
    grid = np.geomspace(window * 1e-8, window, 512)
    vals = np.asarray(mu(grid), dtype=float)
    return window, float(np.min(vals)), float(np.max(vals))


def besq_lifetime_law(alpha, u):
    """Absorption-time law of besq(alpha) started at u: inverse-gamma with
    shape 1 + alpha and scale u/2 (mean u/(2 alpha)). Returns the frozen
    scipy distribution, which carries pdf, cdf and rvs."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0,1), got {alpha}")
    if u <= 0:
        raise ValueError(f"u must be positive, got {u}")
    return stats.invgamma(1.0 + alpha, scale=u / 2.0)


_BUILDERS = {
    "besq": besq,
    "besq-dim0": besq_dim0,
    "self-similar": self_similar,
    "wright-fisher": wright_fisher,
    "cir": cir,
    "custom": custom,
}


def build(model_id, **params):
    """Construct a bundle from the model id strings used in config files."""
    try:
        builder = _BUILDERS[model_id]
    except KeyError:
        known = ", ".join(sorted(_BUILDERS))
        raise ValueError(f"unknown model id {model_id!r}; known ids: {known}") from None
    return builder(**params)
