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

from slcim.harness.config import ExperimentSpec, ConfigError, load_spec, parse_grid
from slcim.harness.experiment import (ExperimentRunner, ExperimentError, ResultRow, RunRecord,
                                      run_experiment, bench_runtime, policy_path,
                                      read_result_rows)
from slcim.harness.report import ReportError, emit_report, LAYOUTS
from slcim.utils import derive_seed
