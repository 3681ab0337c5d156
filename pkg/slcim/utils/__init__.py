# Small helpers shared across the package.
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

import os
import sys
import hashlib

# overrides the number of worker threads used by the experiment runner
THREADS_ENV = "SLCIM_THREADS"


def ensure_str(str_or_bytes, keep_none=True):
    """
    Returns a str instance for given string or ``None`` if requested to keep it.

    :param str_or_bytes: string to be kept or converted to str type
    :type str_or_bytes: str or bytes
    :param bool keep_none: whether to keep None as it is or raise ValueError if
                           ``None`` is passed
    :raises ValueError: if applied on an object not being of type bytes nor str
                        (nor NoneType if ``keep_none`` is ``False``)
    """
    if keep_none and str_or_bytes is None:
        return None
    elif isinstance(str_or_bytes, str):
        return str_or_bytes
    elif isinstance(str_or_bytes, bytes):
        return str_or_bytes.decode(sys.getdefaultencoding())
    else:
        raise ValueError(
            "str_or_bytes must be of type 'str' or 'bytes', not '%s'" % type(str_or_bytes))


def derive_seed(master_seed, coordinates, run):
    """Derive an independent, reproducible 32-bit seed for one replica.

    :param master_seed: experiment-wide seed
    :type master_seed: int

    :param coordinates: experiment coordinates identifying the cell
    :type coordinates: tuple of str/int/float

    :param run: index of the run inside the cell
    :type run: int
    """
    key = "|".join([str(master_seed)] + [str(c) for c in coordinates] + [str(run)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def thread_count(default=None):
    """Number of worker threads, SLCIM_THREADS wins over `default`."""
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            count = int(value)
        except ValueError:
            raise ValueError("%s must be an integer, got '%s'" % (THREADS_ENV, value))
        if count < 1:
            raise ValueError("%s must be at least 1, got %d" % (THREADS_ENV, count))
        return count
    return default or os.cpu_count() or 1
