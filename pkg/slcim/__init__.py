# Competitive influence maximization with Subjective Logic opinions.
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

__version__ = "0.2"

# The two competing parties
TRUE_PARTY = "true"
FALSE_PARTY = "false"
PARTIES = (TRUE_PARTY, FALSE_PARTY)

# User roles
TIP_SEED = "tip"
FIP_SEED = "fip"
LEGITIMATE = "legitimate"

# Alignment labels returned by population.classify()
TRUE_ALIGNED = "true_aligned"
FALSE_ALIGNED = "false_aligned"
# reserved for the "decided influence" report, classify() never returns it
UNDECIDED = "undecided"


def opponent(party):
    """Return the party competing against `party`."""
    if party == TRUE_PARTY:
        return FALSE_PARTY
    elif party == FALSE_PARTY:
        return TRUE_PARTY
    raise ValueError("Unknown party '%s'" % party)
