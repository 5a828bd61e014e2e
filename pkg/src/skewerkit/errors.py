"""Exception types shared across the package."""


class SkewerkitError(Exception):
    """Base class for all package-specific errors."""


class InadmissibleSpecError(SkewerkitError):
    """The diffusion fails an admissibility requirement (e.g. scale not
    integrable at 0), so the requested quantity is undefined."""


class QuadratureError(SkewerkitError):
    """Numerical integration failed to converge and no divergence was
    detected either; the value cannot be trusted."""


class InvalidTransformError(SkewerkitError):
    """The state-space map is not strictly increasing (or otherwise unusable)
    on the evaluation grid."""


class MalformedExcursionError(SkewerkitError):
    """Input does not look like a single scaffold excursion about level 0."""


class InvalidCorrespondenceError(SkewerkitError):
    """Index pairs are out of range or not strictly increasing on both sides."""


class UsageError(SkewerkitError):
    """Bad command-line input: unknown model or experiment name, missing
    seed, malformed config file. The CLI maps this to exit code 2."""
