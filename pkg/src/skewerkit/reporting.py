"""Run configuration, result records, and deterministic file outputs.

Every delimited file written here is reproducible byte for byte: floats
use a fixed ``%.12g`` format, newlines are ``\\n`` regardless of
platform, nothing embeds a timestamp, and rows are emitted in a sorted
or otherwise deterministic order. Figures are rendered with the Agg
backend next to the delimited files they illustrate.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import UsageError
from .excursions import Spindle
from .pathsim import PathGrid
from .scaffold import Horizon, ScaffoldPath, SpindleMeasure

#: RunConfig keys recognised at the top level of a config file. Anything
#: else is passed through to the model factory as a parameter, so typos
#: in model parameters surface as unknown-argument errors there.
_KNOWN_KEYS = {
    "model", "cutoff", "dt", "horizon", "horizon_value", "levels",
    "paths", "seed", "experiment", "output_dir", "workers",
}

_HORIZON_KINDS = ("fixed_time", "fixed_count", "zero_hit")


@dataclass(frozen=True)
class RunConfig:
    """Flat, JSON-compatible description of one simulation or experiment.

    ``params`` holds whatever model-specific keys the config file carried
    (``alpha`` for the squared-Bessel family, ``gamma1``/``gamma2`` for
    the Wright-Fisher model, and so on).
    """

    model: str
    seed: int
    cutoff: float = 0.1
    dt: float = 2e-4
    horizon: str = "fixed_time"
    horizon_value: float = 1.0
    levels: Tuple[float, ...] = ()
    paths: int = 1
    experiment: Optional[str] = None
    output_dir: Optional[str] = None
    workers: int = 1
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.seed is None:
            raise UsageError("config is missing the mandatory 'seed' key")
        if self.cutoff <= 0:
            raise UsageError(f"cutoff must be positive, got {self.cutoff}")
        if self.dt <= 0:
            raise UsageError(f"dt must be positive, got {self.dt}")
        if self.horizon not in _HORIZON_KINDS:
            raise UsageError(
                f"horizon must be one of {_HORIZON_KINDS}, got {self.horizon!r}")
        if self.horizon_value < 0:
            raise UsageError("horizon_value must be nonnegative")
        if self.paths < 1:
            raise UsageError(f"paths must be at least 1, got {self.paths}")
        if self.workers < 1:
            raise UsageError(f"workers must be at least 1, got {self.workers}")

    @classmethod
    def from_mapping(cls, raw: Mapping) -> "RunConfig":
        if "model" not in raw:
            raise UsageError("config is missing the mandatory 'model' key")
        if "seed" not in raw:
            raise UsageError("config is missing the mandatory 'seed' key")
        known = {k: raw[k] for k in raw if k in _KNOWN_KEYS}
        params = {k: raw[k] for k in raw if k not in _KNOWN_KEYS}
        levels = tuple(float(y) for y in known.pop("levels", ()))
        return cls(model=str(known.pop("model")),
                   seed=int(known.pop("seed")),
                   levels=levels, params=params, **known)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise UsageError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(raw, dict):
            raise UsageError("config file must hold a JSON object")
        return cls.from_mapping(raw)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_json(self) -> str:
        flat = dataclasses.asdict(self)
        flat.update(flat.pop("params"))
        flat["levels"] = list(self.levels)
        return json.dumps(flat, sort_keys=True, indent=2) + "\n"


def output_root(config: RunConfig) -> Path:
    """Resolve where run artifacts go: explicit config value first, then
    the SKEWERKIT_OUTPUT_ROOT environment variable, then ./runs."""
    if config.output_dir:
        return Path(config.output_dir)
    env = os.environ.get("SKEWERKIT_OUTPUT_ROOT")
    return Path(env) if env else Path("runs")


@dataclass(frozen=True)
class TestResult:
    """Outcome of one statistical check inside an experiment.

    Exactly one of ``p_value`` and ``ci`` is set. The verdict is a pure
    function of the statistic and the declared threshold, so a rerun
    with the same seed reproduces it.
    """

    name: str
    statistic: float
    verdict: bool
    alpha: float
    sample_sizes: Tuple[int, ...]
    anchor: str
    p_value: Optional[float] = None
    ci: Optional[Tuple[float, float]] = None

    def row(self) -> list:
        lo, hi = self.ci if self.ci is not None else ("", "")
        return [self.name, self.statistic,
                "" if self.p_value is None else self.p_value,
                lo, hi, "pass" if self.verdict else "fail", self.alpha,
                ";".join(str(n) for n in self.sample_sizes), self.anchor]


RESULT_HEADER = ("name", "statistic", "p_value", "ci_lo", "ci_hi",
                 "verdict", "alpha", "sample_sizes", "anchor")


def fmt(value) -> str:
    """Fixed-width-free but deterministic cell format: %.12g for floats."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.12g" % float(value)
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(cell) for cell in row) + "\n")


def write_results(path, results: Sequence[TestResult]) -> None:
    write_csv(path, RESULT_HEADER, [r.row() for r in results])


def save_figure(fig, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110)
    import matplotlib.pyplot as plt

    plt.close(fig)


def new_figure(**kwargs):
    """Create a figure on the Agg backend (import deferred so library use
    never drags matplotlib in)."""
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt.figure(**kwargs)


# ---------------------------------------------------------------------------
# Run directories: everything needed to re-read a simulation later.

def save_run(run_dir, config: RunConfig, measure: SpindleMeasure,
             path: ScaffoldPath) -> Path:
    """Persist a simulated point measure and its scaffold under run_dir.

    Layout: config.json (echo of the run config), atoms.csv (one row per
    spindle, human-readable), scaffold.csv (piecewise-affine segments),
    spindles.npz (full spindle paths, concatenated with offsets, so a
    later skewer call reproduces widths exactly).
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(config.to_json())

    atom_rows = []
    for i, (t, sp) in enumerate(measure.atoms):
        atom_rows.append([i, t, sp.zeta, sp.amplitude, sp.argmax_time])
    write_csv(run_dir / "atoms.csv",
              ("ordinal", "time", "zeta", "amplitude", "argmax_time"),
              atom_rows)

    seg_rows = []
    times = list(path.jump_times) + [path.length]
    prev = 0.0
    for i, t in enumerate(times):
        pre = path.value_left(t)
        post = path.value(t)
        seg_rows.append([i, prev, t, pre, post])
        prev = t
    write_csv(run_dir / "scaffold.csv",
              ("ordinal", "t_start", "t_end", "value_pre", "value_post"),
              seg_rows)

    values = [np.asarray(sp.path.values, dtype=float)
              for _, sp in measure.atoms]
    offsets = np.cumsum([0] + [len(v) for v in values])
    np.savez_compressed(
        run_dir / "spindles.npz",
        flat=np.concatenate(values) if values else np.empty(0),
        offsets=offsets,
        dts=np.array([sp.path.dt for _, sp in measure.atoms]),
        absorbed=np.array([sp.path.absorbed for _, sp in measure.atoms],
                          dtype=bool),
        truncated=np.array([sp.path.truncated for _, sp in measure.atoms],
                           dtype=bool),
        amplitudes=np.array([sp.amplitude for _, sp in measure.atoms]),
        argmax_times=np.array([sp.argmax_time for _, sp in measure.atoms]),
        atom_times=np.array([t for t, _ in measure.atoms]),
        scaffold=np.array([path.slope, path.length, path.dropped_mass]),
        measure_meta=np.array([measure.cutoff, measure.length,
                               float(measure.truncated),
                               float(_HORIZON_KINDS.index(measure.horizon.kind)),
                               measure.horizon.value]),
    )
    return run_dir


def load_run(run_dir) -> Tuple[RunConfig, SpindleMeasure, ScaffoldPath]:
    run_dir = Path(run_dir)
    if not (run_dir / "spindles.npz").exists():
        raise UsageError(f"{run_dir} does not look like a run directory "
                         "(missing spindles.npz)")
    config = RunConfig.from_file(run_dir / "config.json")
    with np.load(run_dir / "spindles.npz") as data:
        flat = data["flat"]
        offsets = data["offsets"]
        dts = data["dts"]
        absorbed = data["absorbed"]
        truncated = data["truncated"]
        amplitudes = data["amplitudes"]
        argmax_times = data["argmax_times"]
        atom_times = data["atom_times"]
        slope, length, dropped = data["scaffold"]
        meta = data["measure_meta"]

    atoms = []
    for i, t in enumerate(atom_times):
        grid = PathGrid(dt=float(dts[i]),
                        values=flat[offsets[i]:offsets[i + 1]],
                        absorbed=bool(absorbed[i]),
                        truncated=bool(truncated[i]))
        atoms.append((float(t), Spindle(path=grid,
                                        amplitude=float(amplitudes[i]),
                                        argmax_time=float(argmax_times[i]))))
    horizon = Horizon(_HORIZON_KINDS[int(meta[3])], float(meta[4]))
    measure = SpindleMeasure(atoms=tuple(atoms), cutoff=float(meta[0]),
                             horizon=horizon, length=float(meta[1]),
                             truncated=bool(meta[2]))
    zetas = np.array([sp.zeta for _, sp in atoms])
    path = ScaffoldPath(jump_times=tuple(float(t) for t in atom_times),
                        jump_heights=tuple(float(z) for z in zetas),
                        slope=float(slope), length=float(length),
                        dropped_mass=float(dropped))
    return config, measure, path
