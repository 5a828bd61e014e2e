"""Branching interval partitions built from one-dimensional diffusions.

The pipeline: a diffusion on [0, c] with an absorbing origin defines,
through its scale function and speed measure, an excursion measure whose
excursions ("spindles") are strung along a spectrally positive Levy path
(the "scaffold"). Cutting the scaffold at a height and reading the
spindle widths there (the "skewer") yields an interval partition; as the
height varies these partitions branch and die. The package checks when
a diffusion admits this construction, simulates it, measures distances
between the resulting partitions, and ships the statistical experiments
that tie the sampled laws back to their closed forms.
"""

from .conditions import (KNOWN_VERDICTS, ConditionReport, chi_tail,
                         condition_report, known_verdict_mismatches,
                         laplace_exponent)
from .diffusion import (DiffusionSpec, TransformSpec, classify_boundaries,
                        hitting_probability, scale, speed_density,
                        speed_mass)
from .errors import (InadmissibleSpecError, InvalidCorrespondenceError,
                     InvalidTransformError, MalformedExcursionError,
                     QuadratureError, SkewerkitError, UsageError)
from .excursions import (ExcursionLaw, Spindle, lifetime_tail,
                         sample_amplitudes, sample_spindles,
                         truncated_lifetime_mass)
from .experiments import EXPERIMENTS, run_experiment
from .ipmetric import (IntervalPartition, dprime, dprime_brute,
                       dprime_truncated, g_star, partition_from_rows,
                       partition_to_rows)
from .models import ModelBundle, besq_lifetime_law, build
from .pathsim import (RngStream, sample_up_diffusion, sample_zero_diffusion,
                      up_first_passage_batch, zero_diffusion_batch)
from .reporting import RunConfig, TestResult, load_run, output_root, save_run
from .scaffold import (Horizon, ScaffoldPath, SpindleMeasure, build_prm,
                       build_scaffold, diversity, level_slice,
                       local_time_estimate, skewer, start_from_partition)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
