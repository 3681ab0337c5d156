# Seed selection heuristics shared by both parties and the learning agents.
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

__all__ = ["AF", "BF", "SGF", "CF", "RANDOM", "KINDS", "DRIM_A", "DRIM_NA", "STORM", "C_STORM",
           "NoCandidateError", "action_space", "select_seed", "resolve_kind", "StrategyAgent"]

import logging

from slcim import opponent
from slcim.network import degree, free_degree
from slcim.population import free_nodes, most_active_user, belongs_to

log = logging.getLogger("slcim")

# strategy names as they appear in logs and on the command line
AF = "af"
BF = "bf"
SGF = "sgf"
CF = "cf"
RANDOM = "random"
KINDS = (AF, BF, SGF, CF, RANDOM)

# schemes owning a learned policy
DRIM_A = "drim-a"
DRIM_NA = "drim-na"
STORM = "storm"
C_STORM = "cstorm"
SCHEMES = (DRIM_A, DRIM_NA, STORM, C_STORM)

# hop distance of the SubGreedy neighborhood
SGF_HOPS = 2

# the order is part of the policy file format, never reorder
_ACTION_SPACES = {
    DRIM_A: (AF, BF, SGF, CF),
    DRIM_NA: (BF, SGF, CF),
    STORM: (CF, BF),
    C_STORM: (CF, BF),
}


class NoCandidateError(Exception):
    """The strategy found no user to pick, the caller has to fall back."""
    pass


def action_space(scheme):
    """Ordered list of strategies a scheme chooses from."""
    try:
        return list(_ACTION_SPACES[scheme])
    except KeyError:
        raise ValueError("Unknown scheme '%s', expected one of %s" % (scheme, ", ".join(SCHEMES)))


def resolve_kind(kind, action_set, rng):
    """Replace RANDOM by a uniformly drawn strategy of `action_set`."""
    if kind != RANDOM:
        return kind
    return action_set[int(rng.integers(len(action_set)))]


def _argmax(candidates, score):
    # ties go to the lowest user id
    return min(candidates, key=lambda v: (-score(v), v))


def _blocking_candidates(party, state, g, pool):
    rival = opponent(party)
    candidates = set()
    for v, op in enumerate(state.opinions):
        if belongs_to(op, rival):
            candidates.update(w for w in g.adjacency[v] if w in pool)
    return candidates


def select_seed(kind, party, state, g, rng, action_set=None, candidates=None):
    """Pick the next seed of `party` according to strategy `kind`.

    :param kind: one of KINDS
    :type kind: str

    :param party: TRUE_PARTY or FALSE_PARTY
    :type party: str

    :param state: current population
    :type state: PopulationState

    :param g: the graph the party plans on
    :type g: ObservableGraph

    :param rng: random generator, only used by RANDOM
    :type rng: numpy.random.Generator

    :param action_set: strategies RANDOM draws from (the DRIM-A action space by default)
    :type action_set: sequence of str

    :param candidates: restricts the candidate pool further (community based selection)
    :type candidates: set of int

    :return: index of the selected user
    :raises NoCandidateError: when the candidate pool is empty
    """
    if kind == RANDOM:
        kind = resolve_kind(kind, action_set or _ACTION_SPACES[DRIM_A], rng)

    pool = set(state.non_seed_users())
    if candidates is not None:
        pool &= set(candidates)

    if kind == BF:
        pool = _blocking_candidates(party, state, g, pool)
    elif kind not in (AF, SGF, CF):
        raise ValueError("Unknown strategy '%s'" % kind)

    if not pool:
        raise NoCandidateError("Strategy %s has no candidate for the %s party" % (kind, party))

    if kind == AF:
        return most_active_user(state, pool)
    elif kind == BF:
        free = free_nodes(state)
        return _argmax(pool, lambda v: free_degree(g, v, free))
    elif kind == SGF:
        hops = g.hop_counts(SGF_HOPS)
        return _argmax(pool, lambda v: hops[v])
    return _argmax(pool, lambda v: degree(g, v))


class StrategyAgent(object):
    """A party always following one heuristic (or a random one each round)."""

    def __init__(self, kind, action_set=None):
        """
        :param kind: one of KINDS
        :type kind: str

        :param action_set: strategies RANDOM draws from
        :type action_set: sequence of str
        """
        if kind not in KINDS:
            raise ValueError("Unknown strategy '%s', expected one of %s" % (kind, ", ".join(KINDS)))
        self.kind = kind
        self.action_set = list(action_set or _ACTION_SPACES[DRIM_A])

    @property
    def name(self):
        return self.kind

    def select(self, episode, party):
        kind = resolve_kind(self.kind, self.action_set, episode.rng)
        return episode.select_with_fallback(kind, party)

    def __repr__(self):
        return "StrategyAgent(%r)" % self.kind
