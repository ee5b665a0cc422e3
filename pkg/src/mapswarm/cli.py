"""Command-line driver: ``run``, ``sweep`` and ``validate``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields
from pathlib import Path

from .config import ConfigError, FailureEvent, ScenarioConfig, dump_config, load_config
from .io import MetricsWriter, RunOutputs, SnapshotWriter, read_metrics, record_dict, write_summary
from .resilience import RecoveryStats, recovery_stats
from .simulation import SimulationFault, run_scenario

log = logging.getLogger("mapswarm")

EXIT_OK, EXIT_CONFIG, EXIT_FAULT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def run_to_dir(config: ScenarioConfig, out, snapshot_every: float | None = 1.0) -> RunOutputs:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = RunOutputs(out / "metrics.csv", out / "snapshots", out / "summary.json")
    sinks = [MetricsWriter(outputs.metrics_path)]
    if snapshot_every is not None and snapshot_every > 0:
        sinks.append(SnapshotWriter(outputs.snapshots_dir, h=config.h))
    dump_config(config, out / "config.yaml")
    summary = run_scenario(config, sinks, snapshot_every=snapshot_every)
    log.info("%s: %d steps in %.1f s", out, summary.steps, summary.wall_time)
    # wall time stays out of the file so reruns are byte-identical
    write_summary(outputs.summary_path, {
        "steps": summary.steps,
        "converged": summary.converged,
        "final": record_dict(summary.final),
        "seed": config.seed,
    })
    return outputs


def _parse_levels(text: str) -> list[float]:
    try:
        levels = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid failure levels {text!r}") from None
    if not levels or any(not 0 <= x <= 1 for x in levels):
        raise argparse.ArgumentTypeError("failure levels must be in [0, 1]")
    return levels


def _sweep_job(args):
    config, out = args
    run_to_dir(config, out, snapshot_every=None)
    return out


AGGREGATE_FIELDS = ("level", "seed") + tuple(f.name for f in fields(RecoveryStats))


def sweep(config: ScenarioConfig, levels, n_seeds: int, out, failure_time: float | None = None,
          jobs: int = 1) -> Path:
    """Run every (level, seed) pair and write ``aggregate.csv`` under ``out``.

    Seeds are ``config.seed + i`` for ``i < n_seeds``. Each run replaces the
    failure schedule with a single event of the given level.
    """
    out = Path(out)
    if failure_time is None:
        failure_time = config.failures[0].time if config.failures else 10.0
    plan = []
    for level in levels:
        for i in range(n_seeds):
            cfg = config.replace(seed=config.seed + i, failures=(FailureEvent(failure_time, level),))
            plan.append((level, cfg.seed, cfg, out / f"level_{level:.2f}" / f"seed_{cfg.seed}"))

    jobs_in = [(cfg, d) for _, _, cfg, d in plan]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_sweep_job, jobs_in))
    else:
        for job in jobs_in:
            _sweep_job(job)

    rows = []
    for level in levels:
        stats = []
        for lv, seed, _, d in plan:
            if lv != level:
                continue
            st = recovery_stats(read_metrics(d / "metrics.csv"), failure_time)
            stats.append(st)
            rows.append({"level": level, "seed": seed, **asdict(st)})
        mean = {k: sum(float(getattr(s, k)) for s in stats) / len(stats) for k in AGGREGATE_FIELDS[2:]}
        rows.append({"level": level, "seed": "mean", **mean})

    path = out / "aggregate.csv"
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=AGGREGATE_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (format(v, ".12g") if isinstance(v, float) else v) for k, v in row.items()})
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mapswarm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--out", required=True, type=Path)
    run.add_argument("--seed", type=int)
    run.add_argument("--snapshot-every", type=float, default=1.0, metavar="SECONDS",
                     help="snapshot cadence in seconds; 0 disables snapshots")

    sw = sub.add_parser("sweep", help="failure-level sweep over several seeds")
    sw.add_argument("--config", required=True, type=Path)
    sw.add_argument("--failure-levels", type=_parse_levels, default=[0.1, 0.2, 0.3, 0.4])
    sw.add_argument("--seeds", type=int, default=5)
    sw.add_argument("--failure-time", type=float)
    sw.add_argument("--jobs", type=int, default=1)
    sw.add_argument("--out", required=True, type=Path)

    val = sub.add_parser("validate", help="parse and check a config")
    val.add_argument("--config", required=True, type=Path)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        if getattr(args, "seed", None) is not None:
            config = config.replace(seed=args.seed)
        if args.command == "validate":
            print(f"{args.config}: ok ({config.n_steps} steps, M={config.m}, L={config.l})")
        elif args.command == "run":
            outputs = run_to_dir(config, args.out, snapshot_every=args.snapshot_every or None)
            print(outputs.metrics_path)
        elif args.command == "sweep":
            if args.seeds < 1:
                raise ConfigError("--seeds must be >= 1")
            print(sweep(config, args.failure_levels, args.seeds, args.out, args.failure_time, args.jobs))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationFault as exc:
        print(f"simulation fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
