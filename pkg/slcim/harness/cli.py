# Command line interface: train, eval, sweep, bench and report.
#
# Copyright (C) 2024  The slcim authors
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
#

__all__ = ["main", "build_parser"]

import argparse
import logging
import os
import shutil
import sys

from slcim import __version__
from slcim.harness.config import (load_spec, parse_grid, ConfigError, AXES, AXIS_NONE,
                                  FP_STRATEGIES)
from slcim.harness.experiment import (ExperimentError, run_experiment, bench_runtime,
                                      load_dataset, read_result_rows)
from slcim.harness.report import (ReportError, LAYOUTS, emit_report, report_table,
                                  write_runtime_csv, table_widget, RUNTIME_HEADER)
from slcim.network import GraphError
from slcim.opinion import TrustModel, OpinionError
from slcim.rl import PolicyError, TrainingError, train_agent, save_params, write_learning_curve_csv
from slcim.strategies import SCHEMES
from slcim.widgets import ColumnWidget

log = logging.getLogger("slcim")

# errors reported as one line instead of a traceback
DOMAIN_ERRORS = (ConfigError, ReportError, ExperimentError, TrainingError, PolicyError,
                 GraphError, OpinionError)

ALL_LAYOUTS = "all"


def _add_common(parser):
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="more output, twice for debug messages")
    parser.add_argument("-q", "--quiet", action="store_true", help="only print errors")
    parser.add_argument("--spec", metavar="FILE", help="experiment configuration (INI)")
    parser.add_argument("--dataset", metavar="FILE", help="edge list of the social graph")
    parser.add_argument("--seed", type=int, dest="master_seed", help="master seed")
    parser.add_argument("--policy-dir", metavar="DIR", help="trained policies directory")
    parser.add_argument("--no-auto-train", dest="auto_train", action="store_false", default=None,
                        help="fail instead of training missing policies")


def _add_matrix(parser):
    parser.add_argument("--schemes", help="comma separated, any of %s" % ", ".join(SCHEMES))
    parser.add_argument("--opinion-models",
                        help="comma separated, any of %s" % ", ".join(TrustModel.VARIANTS))
    parser.add_argument("--fp-strategies",
                        help="comma separated, any of %s" % ", ".join(FP_STRATEGIES))
    parser.add_argument("--runs", type=int, help="evaluation episodes per cell (default 20)")
    parser.add_argument("--threads", type=int, help="worker threads (env SLCIM_THREADS)")
    parser.add_argument("--out", dest="out_dir", metavar="DIR", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(prog="slcim", description="Competitive influence "
                                     "maximization with Subjective Logic opinions")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    train = commands.add_parser("train", help="train the true party's policy of a scheme")
    _add_common(train)
    train.add_argument("--scheme", required=True, choices=SCHEMES)
    train.add_argument("--opponent", default="cf", choices=FP_STRATEGIES,
                       help="false party's strategy, drl for self-play (default cf)")
    train.add_argument("--opinion-model", default=TrustModel.UOM, choices=TrustModel.VARIANTS)
    train.add_argument("--updates", type=int, help="PPO updates (default 200)")
    train.add_argument("--out", required=True, metavar="FILE", help="policy file to write")
    train.add_argument("--opponent-out", metavar="FILE",
                       help="false party's policy of self-play (default <out>.fp.bin)")
    train.add_argument("--curve", metavar="FILE", help="write the learning curve CSV")

    evaluate = commands.add_parser("eval", help="evaluate the experiment matrix")
    _add_common(evaluate)
    _add_matrix(evaluate)

    sweep = commands.add_parser("sweep", help="evaluate the matrix along a sensitivity axis")
    _add_common(sweep)
    _add_matrix(sweep)
    sweep.add_argument("--axis", required=True, choices=[a for a in AXES if a != AXIS_NONE])
    sweep.add_argument("--range", dest="grid", metavar="RANGE",
                       help="'start:stop[:step]' or 'a,b,c' (default grid of the axis)")

    bench = commands.add_parser("bench", help="measure the seconds per evaluation episode")
    _add_common(bench)
    bench.add_argument("--schemes", help="comma separated, any of %s" % ", ".join(SCHEMES))
    bench.add_argument("--episodes", type=int, default=20, help="timed episodes (default 20)")
    bench.add_argument("--out", dest="out_dir", metavar="DIR", help="output directory")

    report = commands.add_parser("report", help="lay out saved results as tables and figures")
    report.add_argument("-v", "--verbose", action="count", default=0)
    report.add_argument("-q", "--quiet", action="store_true")
    report.add_argument("--layout", default=ALL_LAYOUTS, choices=LAYOUTS + (ALL_LAYOUTS,))
    report.add_argument("--results", default=os.path.join("results", "results.csv"),
                        metavar="FILE", help="results.csv written by eval or sweep")
    report.add_argument("--out", default="results", metavar="DIR", help="output directory")
    return parser


def _setup_logging(args):
    if args.quiet:
        level = logging.ERROR
    elif args.verbose > 1:
        level = logging.DEBUG
    elif args.verbose:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s: %(message)s")


def _spec(args, **extra):
    overrides = {name: getattr(args, name, None) for name in
                 ("dataset", "master_seed", "policy_dir", "auto_train", "schemes",
                  "opinion_models", "fp_strategies", "runs", "threads", "out_dir")}
    overrides.update(extra)
    return load_spec(args.spec, **overrides)


TABLE_SPACING = 4


def _print_tables(tables):
    """Print (title, header, table) triples, narrow tables side by side."""
    if not tables:
        return
    width = shutil.get_terminal_size().columns
    widgets = []
    for title, header, table in tables:
        widget = table_widget(header, table, title)
        widget.render(width)
        widgets.append(widget)

    lines = []
    while widgets:
        used = widgets[0].width
        count = 1
        while count < len(widgets) and used + TABLE_SPACING + widgets[count].width <= width:
            used += TABLE_SPACING + widgets[count].width
            count += 1
        row = ColumnWidget([(w.width, [w]) for w in widgets[:count]], spacing=TABLE_SPACING)
        row.render(width)
        lines += row.get_lines() + [""]
        widgets = widgets[count:]
    print("\n".join(lines).rstrip("\n"))


def _print_rows(rows):
    header = ("scheme", "model", "fp", "axis", "value", "n_true", "std", "n_false", "decided")
    table = [[r.scheme, r.opinion_model, r.fp_strategy, r.axis, "" if r.value is None else r.value,
              r.mean_n_true, r.std_n_true, r.mean_n_false, r.mean_decided_n_true] for r in rows]
    _print_tables([(None, header, table)])


def _train(args):
    spec = _spec(args)
    if args.updates is not None:
        spec = spec.replace(ppo=spec.ppo.replace(updates=args.updates))
    graph = load_dataset(spec)
    env_cfg = spec.episode_config(args.opinion_model, None, spec.master_seed)
    result = train_agent(args.scheme, args.opponent, graph, env_cfg, spec.ppo, spec.master_seed,
                         spec.selfplay, spec.community_count)

    save_params(result.params, args.out)
    if result.opponent_params is not None:
        save_params(result.opponent_params,
                    args.opponent_out or os.path.splitext(args.out)[0] + ".fp.bin")
    if args.curve:
        with open(args.curve, "w", newline="") as f:
            write_learning_curve_csv(result.curve, f)
    if result.curve:
        print("final mean return: %.3f" % result.curve[-1].mean_return)


def _evaluate(args, **extra):
    spec = _spec(args, **extra)
    rows, _records = run_experiment(spec)
    _print_rows(rows)
    print("results written to %s" % spec.out_dir)


def _sweep(args):
    grid = parse_grid(args.axis, args.grid) if args.grid else None
    _evaluate(args, axis=args.axis, grid=grid)


def _bench(args):
    spec = _spec(args)
    times = bench_runtime(spec, episodes=args.episodes)
    _print_tables([(None, RUNTIME_HEADER, [[s, t] for s, t in times.items()])])
    os.makedirs(spec.out_dir, exist_ok=True)
    with open(os.path.join(spec.out_dir, "runtime.csv"), "w", newline="") as f:
        write_runtime_csv(times, f)


def _report(args):
    rows = read_result_rows(args.results)
    layouts = LAYOUTS if args.layout == ALL_LAYOUTS else (args.layout,)
    tables = []
    for layout in layouts:
        try:
            header, table = report_table(rows, layout)
        except ReportError as e:
            if args.layout != ALL_LAYOUTS:
                raise
            log.warning("Skipping %s: %s", layout, e)
            continue
        emit_report(rows, layout, args.out)
        tables.append((layout, header, table))
    _print_tables(tables)


_COMMANDS = {"train": _train, "eval": _evaluate, "sweep": _sweep, "bench": _bench,
             "report": _report}


def main(argv=None):
    """Run the command line, return the exit status."""
    args = build_parser().parse_args(argv)
    _setup_logging(args)
    try:
        _COMMANDS[args.command](args)
    except DOMAIN_ERRORS as e:
        print("slcim: error: %s" % e, file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print("slcim: error: %s" % e, file=sys.stderr)
        return 1
    return 0
