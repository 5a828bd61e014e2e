"""Command-line front end.

Subcommands:

* ``check <config>``: admissibility report for the configured model,
  printed as human text followed by one machine-readable key-value line
  per condition, and saved under the output root.
* ``sample <config>``: draw spindles under the truncated excursion law
  and write their summary table plus a survival figure.
* ``simulate <config>``: build scaffold runs, saving each run directory
  (config echo, atom table, scaffold segments, spindle arrays), the
  per-level slice table for ``levels``, and a path figure.
* ``skewer <run-dir> --level y``: slice a saved run at one level into a
  partition CSV of (ordinal, width) rows.
* ``metric <a.csv> <b.csv>``: distance between two partition files.
* ``experiment <name> <config>``: run one named statistical experiment;
  exits 1 when any of its tests fail.

``--seed`` overrides the config seed. Outputs land in the config's
``output_dir``, else ``$SKEWERKIT_OUTPUT_ROOT``, else ``./runs``. Bad
input (unknown model or experiment, malformed config, missing files)
exits 2.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .conditions import condition_report
from .errors import SkewerkitError, UsageError
from .excursions import ExcursionLaw, sample_spindles
from .experiments import EXPERIMENTS, run_experiment
from .ipmetric import dprime, partition_from_rows
from .models import build
from .pathsim import RngStream
from .reporting import (RunConfig, fmt, new_figure, output_root, save_figure,
                        save_run, write_csv)
from .scaffold import Horizon, build_prm, build_scaffold, level_slice

_KV_HEADER = ("name", "value", "verdict", "anchor")


def _load_config(args) -> RunConfig:
    config = RunConfig.from_file(args.config)
    if getattr(args, "seed", None) is not None:
        config = config.replace(seed=args.seed)
    return config


def _bundle(config: RunConfig):
    try:
        return build(config.model, **config.params)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"cannot build model {config.model!r}: {exc}")


def _check_lines(report):
    """(name, value, verdict, anchor) rows, one per checked condition."""
    trail = report.trail
    lines = [
        ("boundary",
         f"0:{report.boundary.zero_class} c:{report.boundary.c_class}",
         report.boundary.a1_ok and report.boundary.a2_ok,
         "scale finite at 0; speed locally finite on (0, c)"),
        ("levy_class",
         trail.get("x2_double_integral", trail.get("total_speed_mass", "")),
         report.levy_class,
         "regular 0 -> M(E) < inf; exit 0 -> rough class when the double "
         "integral converges"),
        ("x2_bound",
         trail.get("x2_double_integral", "not needed"),
         report.x2_bound_ok,
         "int_0^b int_0^v s(y) M(dy) M(dv) < inf"),
        ("health_summable",
         trail.get("health_integral", trail.get("health_route", "")),
         report.health_summable_ok,
         "int_0^b g(y) M(dy) < inf"),
        ("start_ip",
         trail.get("drift_limsup", trail.get("r_over_x_last", "")),
         report.start_ip_ok,
         "limsup_{x->0} (1/x) int s(v ^ x) M(dv) < inf"),
    ]
    b = report.assumption_b
    if b is None:
        lines.append(("assumption_b", "sigma^2 != 4x", "not_applicable",
                      "-2*alpha+ <= mu(x) <= -2*alpha- on (0, eps0]"))
    else:
        lines.append(
            ("assumption_b",
             f"alpha-={fmt(b.alpha_minus)} alpha+={fmt(b.alpha_plus)} "
             f"q0={fmt(b.q0)}",
             b.holds,
             "-2*alpha+ <= mu(x) <= -2*alpha- on (0, eps0] with q0 > alpha+"))
        lines.append(("strong_b5", f"q0={fmt(b.q0)}", b.strong_b5,
                      "0 < liminf_{x->0} g(x)/x and limsup < inf"))
    c = report.assumption_c
    if c is not None:
        lines.append(
            ("assumption_c",
             f"beta-={fmt(c.beta_minus)} beta+={fmt(c.beta_plus)}",
             c.holds,
             "2*beta- <= mu(x) <= 2*beta+ near 0 with "
             "int g(y^(1/(1-beta-)))/y^2 dy < inf"))
    return [(n, fmt(v) if not isinstance(v, str) else v,
             fmt(v2) if not isinstance(v2, str) else v2, a)
            for n, v, v2, a in lines]


def _cmd_check(args) -> int:
    config = _load_config(args)
    report = condition_report(_bundle(config))
    lines = _check_lines(report)
    params = " ".join(f"{k}={fmt(v)}" for k, v in sorted(config.params.items()))
    print(f"admissibility report for {config.model} {params}".rstrip())
    print(f"  scaffolding class: {report.levy_class}")
    print(f"  aggregate health summable: {fmt(report.health_summable_ok)}")
    print(f"  interval-partition start states: {fmt(report.start_ip_ok)}")
    for name, value, verdict, _ in lines[2:]:
        print(f"  {name}: {verdict} (value {value})")
    print()
    for name, value, verdict, anchor in lines:
        print(f"name={name}\tvalue={value}\tverdict={verdict}\t"
              f"anchor={anchor}")
    out = output_root(config) / "check"
    write_csv(out / "report.csv", _KV_HEADER, lines)
    (out / "config.json").parent.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(config.to_json())
    return 0


def _excursion_law(config: RunConfig) -> ExcursionLaw:
    return ExcursionLaw(spec=_bundle(config).base, cutoff=config.cutoff,
                        dt=config.dt)


def _cmd_sample(args) -> int:
    config = _load_config(args)
    law = _excursion_law(config)
    n = max(config.paths, 1)
    spindles = sample_spindles(law, n, RngStream(config.seed, 0))
    out = output_root(config) / "sample"
    write_csv(out / "spindles.csv",
              ("ordinal", "zeta", "amplitude", "argmax_time"),
              ([i, sp.zeta, sp.amplitude, sp.argmax_time]
               for i, sp in enumerate(spindles)))
    zetas = np.sort([sp.zeta for sp in spindles])
    fig = new_figure(figsize=(6, 4))
    ax = fig.add_subplot(111)
    ax.step(zetas, 1.0 - np.arange(1, n + 1) / n, where="post", lw=1.2)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("lifetime")
    ax.set_ylabel("survival")
    ax.set_title(f"spindle lifetimes, cutoff {fmt(config.cutoff)}")
    fig.tight_layout()
    save_figure(fig, out / "lifetime_survival.png")
    print(f"wrote {n} spindles to {out}")
    return 0


def _slice_rows(levels, measure, path):
    rows = []
    for y in levels:
        sl = level_slice(y, measure, path)
        rows.extend([y, i, w, k] for i, (_, w, k) in enumerate(sl.crossings))
    return rows


def _cmd_simulate(args) -> int:
    config = _load_config(args)
    law = _excursion_law(config)
    if config.horizon == "zero_hit":
        raise UsageError("zero_hit horizons arise from start_from_partition; "
                         "simulate expects fixed_time or fixed_count")
    horizon = Horizon(config.horizon, config.horizon_value)
    out = output_root(config) / "simulate"
    for k in range(config.paths):
        measure = build_prm(law, horizon, RngStream(config.seed, k))
        path = build_scaffold(measure, law)
        run_dir = out / f"run{k:04d}"
        save_run(run_dir, config, measure, path)
        if config.levels:
            write_csv(run_dir / "slices.csv",
                      ("level", "ordinal", "width", "spindle_id"),
                      _slice_rows(config.levels, measure, path))
        fig = new_figure(figsize=(7, 4))
        ax = fig.add_subplot(111)
        ts = np.linspace(0.0, measure.length, 2048)
        ax.plot(ts, path.value(ts), lw=0.8)
        for y in config.levels:
            ax.axhline(y, color="k", ls=":", lw=0.6)
        ax.set_xlabel("time")
        ax.set_ylabel("scaffold level")
        ax.set_title(f"run {k}: {len(measure)} spindles, "
                     f"cutoff {fmt(config.cutoff)}")
        fig.tight_layout()
        save_figure(fig, run_dir / "scaffold.png")
        print(f"run{k:04d}: {len(measure)} spindles over "
              f"length {fmt(measure.length)} -> {run_dir}")
    return 0


def _cmd_skewer(args) -> int:
    from .reporting import load_run
    run_dir = Path(args.run_dir)
    _, measure, path = load_run(run_dir)
    sl = level_slice(args.level, measure, path)
    dest = run_dir / f"skewer_{fmt(args.level)}.csv"
    write_csv(dest, ("ordinal", "width"),
              ([i, w] for i, w in enumerate(sl.partition.widths)))
    print(f"level {fmt(args.level)}: {len(sl.partition.widths)} blocks, "
          f"total mass {fmt(sl.partition.total)} -> {dest}")
    return 0


def _read_partition(path: Path):
    if not path.exists():
        raise UsageError(f"no such partition file: {path}")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows:
        try:
            float(rows[0][1])
        except (ValueError, IndexError):
            rows = rows[1:]
    try:
        return partition_from_rows((r[0], r[1]) for r in rows)
    except (IndexError, ValueError) as exc:
        raise UsageError(f"malformed partition file {path}: {exc}")


def _cmd_metric(args) -> int:
    beta = _read_partition(Path(args.a))
    gamma = _read_partition(Path(args.b))
    print(fmt(dprime(beta, gamma)))
    return 0


def _cmd_experiment(args) -> int:
    config = _load_config(args)
    if config.experiment is not None and config.experiment != args.name:
        raise UsageError(f"config names experiment {config.experiment!r} "
                         f"but the command line says {args.name!r}")
    results = run_experiment(args.name, config)
    for r in results:
        pv = "" if r.p_value is None else f" p={fmt(r.p_value)}"
        print(f"{r.name}: statistic={fmt(r.statistic)}{pv} "
              f"verdict={'pass' if r.verdict else 'FAIL'}")
    return 0 if all(r.verdict for r in results) else 1


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="skewerkit",
        description="Branching interval partitions from one-dimensional "
                    "diffusions: admissibility checks, scaffold simulation, "
                    "skewer slices, and statistical experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(name, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("config", help="JSON config file")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
        return sp

    with_config("check", "admissibility report").set_defaults(func=_cmd_check)
    with_config("sample", "draw spindles").set_defaults(func=_cmd_sample)
    with_config("simulate", "build scaffold runs").set_defaults(
        func=_cmd_simulate)

    sk = sub.add_parser("skewer", help="slice a saved run at one level")
    sk.add_argument("run_dir", help="directory written by simulate")
    sk.add_argument("--level", type=float, required=True)
    sk.set_defaults(func=_cmd_skewer)

    m = sub.add_parser("metric", help="distance between two partition files")
    m.add_argument("a")
    m.add_argument("b")
    m.set_defaults(func=_cmd_metric)

    e = sub.add_parser("experiment", help="run one named experiment")
    e.add_argument("name", help="one of: " + ", ".join(sorted(EXPERIMENTS)))
    e.add_argument("config", help="JSON config file")
    e.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    e.set_defaults(func=_cmd_experiment)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SkewerkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
