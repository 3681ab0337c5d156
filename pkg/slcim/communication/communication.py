#
# communication.py: messages between replica workers and the experiment runner
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

from slcim.communication import QueueFactory


def run_queue():
    """Create the queue workers use to report back to the experiment runner.

    Messages have the format (RUN_CODE_*, arguments):

      done        job, result      a replica finished
      progress    job              a replica started
      exception   exc_info         a replica failed, sys.exc_info() of the worker
    """
    run_q = QueueFactory("run")
    run_q.add_message("done", 2)
    run_q.add_message("progress", 1)
    run_q.add_message("exception", 1)
    return run_q
