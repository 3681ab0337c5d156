# CSV reports laid out as the result tables and figures.
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

__all__ = ["ReportError", "LAYOUTS", "emit_report", "report_table", "runtime_by_scheme",
           "write_runtime_csv", "table_widget"]

import csv
import logging
import os

import numpy as np

from slcim.harness.config import (AXIS_NONE, AXIS_IP, AXIS_P_NV, AXIS_PRIOR, DEFAULT_GRIDS,
                                  FP_STRATEGIES)
from slcim.opinion import TrustModel
from slcim.strategies import SCHEMES
from slcim.widgets import TableWidget

log = logging.getLogger("slcim")

TABLE1 = "table1"
FIG2 = "fig2"
FIG3A = "fig3a"
FIG3B = "fig3b"
FIG3C = "fig3c"
TABLE2 = "table2"
LAYOUTS = (TABLE1, FIG2, FIG3A, FIG3B, FIG3C, TABLE2)

_SWEEPS = {FIG3A: AXIS_IP, FIG3B: AXIS_P_NV, FIG3C: AXIS_PRIOR}

# every influence layout reports the decided count of aligned users
METRIC = "mean_decided_n_true"

RUNTIME_HEADER = ("scheme", "seconds_per_episode")


class ReportError(ValueError):
    """The result rows don't cover the requested layout."""
    pass


def _index(rows, axis):
    return {(r.scheme, r.opinion_model, r.fp_strategy, r.value): r for r in rows if r.axis == axis}


def _require(missing, layout):
    if missing:
        cells = ", ".join("/".join(str(c) for c in cell) for cell in missing)
        raise ReportError("Layout %s is missing %d cell(s): %s" % (layout, len(missing), cells))


def _influence_table(rows, layout):
    index = _index(rows, AXIS_NONE)
    if layout == TABLE1:
        keys = [(s, om) for s in SCHEMES for om in TrustModel.VARIANTS]
        header = ("scheme", "opinion_model") + FP_STRATEGIES
    else:
        keys = [(s, TrustModel.UOM) for s in SCHEMES]
        header = ("scheme",) + FP_STRATEGIES

    table, missing = [], []
    for scheme, om in keys:
        line = [scheme, om] if layout == TABLE1 else [scheme]
        for fp in FP_STRATEGIES:
            row = index.get((scheme, om, fp, None))
            if row is None:
                missing.append((scheme, om, fp))
            else:
                line.append(getattr(row, METRIC))
        table.append(line)
    _require(missing, layout)
    return header, table


def _sweep_table(rows, layout):
    axis = _SWEEPS[layout]
    index = _index(rows, axis)
    grid = sorted({r.value for r in index.values()}) or list(DEFAULT_GRIDS[axis])
    header = ("scheme", "fp_strategy") + tuple("%s=%s" % (axis, v) for v in grid)

    table, missing = [], []
    for scheme in SCHEMES:
        fps = [fp for fp in FP_STRATEGIES
               if any(k[0] == scheme and k[1] == TrustModel.UOM and k[2] == fp for k in index)]
        if not fps:
            missing.append((scheme, TrustModel.UOM, "*", axis))
        for fp in fps:
            line = [scheme, fp]
            for value in grid:
                row = index.get((scheme, TrustModel.UOM, fp, value))
                if row is None:
                    missing.append((scheme, TrustModel.UOM, fp, "%s=%s" % (axis, value)))
                else:
                    line.append(getattr(row, METRIC))
            table.append(line)
    _require(missing, layout)
    return header, table


def runtime_by_scheme(rows):
    """Mean seconds per episode of every scheme, weighted by the runs of each row."""
    times = {}
    for scheme in SCHEMES:
        selected = [r for r in rows if r.scheme == scheme and r.axis == AXIS_NONE]
        if selected:
            times[scheme] = float(np.average([r.mean_wall_time for r in selected],
                                             weights=[r.runs for r in selected]))
    return times


def _runtime_table(times, layout=TABLE2):
    _require([(s,) for s in SCHEMES if s not in times], layout)
    return RUNTIME_HEADER, [[s, times[s]] for s in SCHEMES]


def report_table(rows, layout):
    """Build the (header, table) of `layout` from result rows.

    :raises ReportError: listing every missing cell
    """
    if layout not in LAYOUTS:
        raise ReportError("Unknown layout '%s', expected one of %s" % (layout, ", ".join(LAYOUTS)))
    if layout == TABLE2:
        return _runtime_table(runtime_by_scheme(rows))
    if layout in _SWEEPS:
        return _sweep_table(rows, layout)
    return _influence_table(rows, layout)


def _write_table(header, table, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for line in table:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in line])


def write_runtime_csv(times, stream):
    """Write measured seconds per episode, e.g. the result of bench_runtime()."""
    _write_table(RUNTIME_HEADER, [[s, t] for s, t in times.items()], stream)


def emit_report(rows, layout, out_dir):
    """Write <out_dir>/<layout>.csv and return its path."""
    header, table = report_table(rows, layout)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "%s.csv" % layout)
    with open(path, "w", newline="") as f:
        _write_table(header, table, f)
    log.info("Wrote %s", path)
    return path


def table_widget(header, table, title=None):
    precision = 4 if header == RUNTIME_HEADER else 1
    return TableWidget(header, table, precision=precision, title=title)
