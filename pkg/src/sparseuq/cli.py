"""Configuration-driven experiment runner.

Subcommands:

* ``run config.json``: build the configured problem, run each requested
  strategy, and write per-strategy trace CSVs, final-set JSON snapshots
  and a summary.json into the output directory.
* ``compare trace.csv ...``: align traces of the same problem on the
  cumulative solve count, emitting a plot-ready error-versus-work table.
* ``nodes kind n``: dump the first n nodes of a family.
* ``selftest``: fast built-in consistency checks.

Exit codes: 0 success, 2 when any run stopped on a budget instead of
the tolerance, 3 for configuration or ellipticity errors.
"""

import argparse
import csv
import hashlib
import json
import logging
import math
import statistics
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adaptive import AdaptiveConfig, run_strategy
from .estimators import NormSpec
from .fem import EllipticityError, SpatialDiscretization, build_problem, check_ellipticity
from .interp import SparseInterpolant
from .nodes import get_family, growth_inverse, normalize_kind

log = logging.getLogger("sparseuq.cli")

DEFAULTS = {
    "problem": {
        "family": "cosine",
        "M": 2,
        "a0": 2.0,
        "gamma": 0.9,
        "sigma": 2.0,
        "f": 1.0,
        "floor": 0.0,
    },
    "mesh_n": 256,
    "nodes": "leja",
    "norm": {"p": 2, "sup_points_per_dim": 33, "sup_budget": 40000, "quad_order": 12},
    "strategies": ["gn_envelope"],
    "tol": 1e-8,
    "max_iter": 200,
    "max_solves": 100000,
    "reference": {"quad_order": 20, "every": "auto"},
    "dorfler": 0.0,
    "parallelism": 1,
    "outdir": "results",
    "seed": 0,
}

TRACE_COLUMNS = (
    "n",
    "strategy",
    "n_indices",
    "n_grid",
    "n_solves",
    "total_estimator",
    "max_estimator",
    "reference_error",
    "effectivity",
    "wall_ms",
)


class ConfigError(ValueError):
    pass


def _deep_merge(base, update):
    out = dict(base)
    for key, val in update.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = val
    return out


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            "config %s: line %d column %d: %s" % (path, exc.lineno, exc.colno, exc.msg)
        )
    if not isinstance(data, dict):
        raise ConfigError("config %s: top level must be a JSON object" % path)
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ConfigError(
            "config %s: unknown keys %s" % (path, ", ".join(sorted(unknown)))
        )
    return _deep_merge(DEFAULTS, data)


def problem_hash(cfg):
    """Stable hash of everything that defines the measured truth."""
    block = {
        "problem": cfg["problem"],
        "mesh_n": cfg["mesh_n"],
        "nodes": normalize_kind(cfg["nodes"]),
        "norm": NormSpec.from_config(cfg["norm"]).describe(),
    }
    canon = json.dumps(block, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


class TraceWriter:
    """Streams rows so the CSV is valid after a crash at any boundary."""

    def __init__(self, path, phash):
        self.path = Path(path)
        self.fh = self.path.open("w", newline="")
        self.fh.write("# problem_hash=%s\n" % phash)
        self.fh.write(",".join(TRACE_COLUMNS) + "\n")
        self.fh.flush()
        self.written = 0

    def write_row(self, row):
        rec = [
            row.n,
            row.strategy,
            row.n_indices,
            row.n_grid,
            row.n_solves,
            row.total_estimator,
            row.max_estimator,
            row.reference_error,
            row.effectivity,
            row.wall_ms,
        ]
        self.fh.write(",".join(_fmt(v) for v in rec) + "\n")
        self.fh.flush()
        self.written += 1

    def close(self):
        self.fh.close()


def _reference_cadence(cfg, dim, force):
    every = cfg["reference"]["every"]
    if force:
        if dim > 4:
            raise ConfigError(
                "--force-reference needs tensor quadrature, infeasible for M=%d" % dim
            )
        return 1
    if every == "auto":
        if dim <= 2:
            return 1
        if dim <= 4:
            return 5
        return 0
    every = int(every)
    if every > 0 and dim > 4:
        raise ConfigError("reference errors are infeasible for M=%d" % dim)
    return every


def run_experiment(config_path, outdir=None, parallelism=None, force_reference=False):
    """Run every configured strategy; returns the process exit code."""
    cfg = load_config(config_path)
    if outdir is not None:
        cfg["outdir"] = str(outdir)
    if parallelism is not None:
        cfg["parallelism"] = int(parallelism)
    problem = build_problem(cfg["problem"])
    disc = SpatialDiscretization(problem, int(cfg["mesh_n"]))
    info = check_ellipticity(problem, disc)
    phash = problem_hash(cfg)
    every = _reference_cadence(cfg, problem.dim, force_reference)
    out = Path(cfg["outdir"])
    out.mkdir(parents=True, exist_ok=True)
    log.info(
        "problem %s: M=%d a_min=%.6g a_max=%.6g alpha=%.6g",
        phash,
        problem.dim,
        info["a_min"],
        info["a_max"],
        info["alpha"],
    )
    strategies = cfg["strategies"]
    if isinstance(strategies, str):
        strategies = [strategies]
    if not strategies:
        raise ConfigError("strategies list is empty")
    exit_code = 0
    summary = {
        "problem_hash": phash,
        "ellipticity": info,
        "config": cfg,
        "strategies": {},
    }
    for strategy in strategies:
        acfg = AdaptiveConfig(
            strategy=strategy,
            nodes=cfg["nodes"],
            norm=NormSpec.from_config(cfg["norm"]),
            tol=float(cfg["tol"]),
            max_iter=int(cfg["max_iter"]),
            max_solves=int(cfg["max_solves"]),
            reference_every=every,
            reference_quad=int(cfg["reference"]["quad_order"]),
            dorfler=float(cfg["dorfler"]),
            parallelism=int(cfg["parallelism"]),
        )
        writer = TraceWriter(out / ("%s-trace.csv" % strategy), phash)
        try:
            trace = run_strategy(problem, disc, acfg, on_row=writer.write_row)
            for row in trace.rows[writer.written :]:
                writer.write_row(row)
        finally:
            writer.close()
        snapshot = {
            "problem_hash": phash,
            "strategy": strategy,
            "a_min": info["a_min"],
            "interpolant": trace.interpolant.to_jsonable(),
        }
        (out / ("%s-final-set.json" % strategy)).write_text(
            json.dumps(snapshot) + "\n"
        )
        effs = [r.effectivity for r in trace.rows if r.effectivity is not None]
        last = trace.rows[-1]
        summary["strategies"][strategy] = {
            "iterations": len(trace.rows),
            "stop_reason": trace.stop_reason,
            "budget_exhausted": trace.budget_exhausted,
            "n_indices": last.n_indices,
            "n_grid": last.n_grid,
            "n_solves": last.n_solves,
            "total_estimator": last.total_estimator,
            "reference_error": last.reference_error,
            "pre_augmentation_error": trace.pre_augmentation_error,
            "post_augmentation_error": trace.post_augmentation_error,
            "effectivity_min": min(effs) if effs else None,
            "effectivity_median": statistics.median(effs) if effs else None,
            "wall_ms_total": sum(r.wall_ms for r in trace.rows),
        }
        if trace.budget_exhausted:
            exit_code = 2
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return exit_code


def load_interpolant(path):
    """Reload a final-set snapshot written by run_experiment."""
    data = json.loads(Path(path).read_text())
    return SparseInterpolant.from_jsonable(data["interpolant"])


def read_trace(path):
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
        if not first.startswith("# problem_hash="):
            raise ConfigError("%s: missing problem_hash header" % path)
        phash = first.strip().split("=", 1)[1]
        rows = list(csv.DictReader(fh))
    return phash, rows


def compare_report(paths):
    """Join traces on cumulative solves; returns (header, table rows)."""
    if not paths:
        raise ConfigError("at least one trace file is required")
    traces = []
    hashes = set()
    for path in paths:
        phash, rows = read_trace(path)
        hashes.add(phash)
        label = "%s:%s" % (Path(path).stem, rows[0]["strategy"] if rows else "?")
        traces.append((label, rows))
    if len(hashes) > 1:
        raise ConfigError(
            "traces describe different problems (hashes %s)" % ", ".join(sorted(hashes))
        )
    header = ["n_solves"] + [label for label, _ in traces]
    per_trace = []
    for _, rows in traces:
        m = {}
        for row in rows:
            val = row["reference_error"] or row["total_estimator"]
            m[int(row["n_solves"])] = val
        per_trace.append(m)
    counts = sorted(set().union(*per_trace))
    table = [
        [str(c)] + [m.get(c, "") for m in per_trace] for c in counts
    ]
    return header, table


def _cmd_run(args):
    if args.print_defaults:
        print(json.dumps(DEFAULTS, indent=2))
        return 0
    if args.config is None:
        print("error: a config file is required unless --print-defaults", file=sys.stderr)
        return 3
    return run_experiment(
        args.config,
        outdir=args.outdir,
        parallelism=args.parallelism,
        force_reference=args.force_reference,
    )


def _cmd_compare(args):
    header, table = compare_report(args.traces)
    print(",".join(header))
    for row in table:
        print(",".join(row))
    widths = [max(len(h), max((len(r[i]) for r in table), default=0)) for i, h in enumerate(header)]
    fmt = "  ".join("%%-%ds" % w for w in widths)
    print(fmt % tuple(header), file=sys.stderr)
    for row in table:
        print(fmt % tuple(row), file=sys.stderr)
    return 0


def _cmd_nodes(args):
    kind = normalize_kind(args.kind)
    fam = get_family(kind)
    pts = fam.nodes(args.count)
    print("index,level,coordinate")
    for idx, y in enumerate(pts):
        print("%d,%d,%s" % (idx, growth_inverse(kind, idx), _fmt(float(y))))
    return 0


def _cmd_selftest(args):
    from . import selftest

    return selftest.run()


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="sparseuq",
        description="Adaptive sparse-grid collocation for parametric diffusion.",
    )
    parser.add_argument("--version", action="version", version="sparseuq %s" % __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the strategies of a config file")
    p_run.add_argument("config", nargs="?", help="JSON experiment config")
    p_run.add_argument("--outdir", default=None, help="output directory override")
    p_run.add_argument("--parallelism", type=int, default=None, help="worker threads")
    p_run.add_argument(
        "--force-reference",
        action="store_true",
        help="compute the reference error every iteration",
    )
    p_run.add_argument(
        "--print-defaults", action="store_true", help="print the default config and exit"
    )
    p_run.set_defaults(fn=_cmd_run)

    p_cmp = sub.add_parser("compare", help="align traces on the solve count")
    p_cmp.add_argument("traces", nargs="+", help="trace CSV files")
    p_cmp.set_defaults(fn=_cmd_compare)

    p_nodes = sub.add_parser("nodes", help="dump a node table")
    p_nodes.add_argument("kind", help="leja | rleja | clenshaw_curtis")
    p_nodes.add_argument("count", type=int, help="number of nodes")
    p_nodes.set_defaults(fn=_cmd_nodes)

    p_self = sub.add_parser("selftest", help="fast internal consistency checks")
    p_self.set_defaults(fn=_cmd_selftest)

    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(message)s"
    )
    try:
        return args.fn(args)
    except (ConfigError, EllipticityError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
