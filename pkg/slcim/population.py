# Users of the simulated social network and their evolving opinions.
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

__all__ = ["UserProfile", "PopulationState", "PopulationError", "init_population",
           "promote_seed", "classify", "influence_counts", "decided_counts",
           "belongs_to", "free_nodes", "most_active_user", "population_rows",
           "write_population_csv"]

import csv
import logging

import numpy as np

from slcim import (TRUE_PARTY, FALSE_PARTY, TIP_SEED, FIP_SEED, LEGITIMATE,
                   TRUE_ALIGNED, FALSE_ALIGNED)
from slcim.opinion import (opinion_from_evidence, project, LEGITIMATE_EVIDENCE,
                           TIP_EVIDENCE, FIP_EVIDENCE)

log = logging.getLogger("slcim")

# reading/sharing probability levels: always, daily/half the time, weekly/sometimes, never
BEHAVIOR_LEVELS = (1.0, 0.5, 0.25, 0.1)

# users at or above this vacuity have not aligned with any party yet
FREE_VACUITY = 0.5

# absorbs rounding of b + a*u around the 0.5 decision boundary
_BOUNDARY_TOL = 1e-12

_SEED_ROLES = {TRUE_PARTY: TIP_SEED, FALSE_PARTY: FIP_SEED}


class PopulationError(ValueError):
    """Invalid population parameters or an illegal role transition."""
    pass


class UserProfile(object):
    """Behavior and role of one user."""

    __slots__ = ("user_id", "role", "p_read", "p_share")

    def __init__(self, user_id, p_read, p_share, role=LEGITIMATE):
        """
        :param user_id: index of the user in the graph
        :type user_id: int

        :param p_read: probability of reading an incoming message
        :type p_read: float

        :param p_share: probability of sharing after reading
        :type p_share: float

        :param role: LEGITIMATE, TIP_SEED or FIP_SEED
        :type role: str
        """
        if p_read not in BEHAVIOR_LEVELS or p_share not in BEHAVIOR_LEVELS:
            raise PopulationError("Behavior probabilities must be one of %s, got %r/%r"
                                  % (BEHAVIOR_LEVELS, p_read, p_share))
        self.user_id = user_id
        self.role = role
        self.p_read = p_read
        self.p_share = p_share

    @property
    def activity(self):
        return self.p_read * self.p_share

    @property
    def is_seed(self):
        return self.role != LEGITIMATE

    def __repr__(self):
        return "UserProfile(%d, %s, p_read=%r, p_share=%r)" % (self.user_id, self.role,
                                                                self.p_read, self.p_share)


class PopulationState(object):
    """Mutable state of one simulation replica.

    The three per-user sequences are index-aligned with the graph nodes.
    """

    def __init__(self, profiles, opinions):
        if len(profiles) != len(opinions):
            raise PopulationError("Got %d profiles but %d opinions" % (len(profiles), len(opinions)))
        self.profiles = list(profiles)
        self.opinions = list(opinions)
        # T_u freeze latch, seeds are latched on promotion
        self.frozen = [p.is_seed for p in self.profiles]
        self.seeds = {TRUE_PARTY: [], FALSE_PARTY: []}

    def __len__(self):
        return len(self.profiles)

    def is_seed(self, user):
        return self.profiles[user].is_seed

    def non_seed_users(self):
        return [p.user_id for p in self.profiles if not p.is_seed]

    def copy(self):
        state = PopulationState([UserProfile(p.user_id, p.p_read, p.p_share, p.role)
                                 for p in self.profiles], self.opinions)
        state.frozen = list(self.frozen)
        state.seeds = {party: list(seeds) for party, seeds in self.seeds.items()}
        return state


def init_population(n, rng_seed, prior_a=0.5, level_weights=None):
    """Create `n` legitimate users with highly uncertain opinions.

    :param n: number of users
    :type n: int

    :param rng_seed: seed for sampling the behavior probabilities
    :type rng_seed: int or numpy.random.Generator

    :param prior_a: base rate shared by everybody or a callable user_id -> base rate
    :type prior_a: float or callable

    :param level_weights: sampling weights of BEHAVIOR_LEVELS, uniform by default
    :type level_weights: sequence of 4 floats

    :rtype: PopulationState
    """
    if n < 1:
        raise PopulationError("Population needs at least one user, got %d" % n)

    if level_weights is None:
        weights = np.full(len(BEHAVIOR_LEVELS), 1.0 / len(BEHAVIOR_LEVELS))
    else:
        weights = np.asarray(level_weights, dtype=float)
        if weights.shape != (len(BEHAVIOR_LEVELS),) or np.any(weights < 0) or weights.sum() <= 0:
            raise PopulationError("Invalid behavior level weights %r" % (level_weights,))
        weights = weights / weights.sum()

    rng = np.random.default_rng(rng_seed)
    reads = rng.choice(len(BEHAVIOR_LEVELS), size=n, p=weights)
    shares = rng.choice(len(BEHAVIOR_LEVELS), size=n, p=weights)

    profiles = []
    opinions = []
    for user in range(n):
        a = prior_a(user) if callable(prior_a) else prior_a
        if not 0.0 <= a <= 1.0:
            raise PopulationError("Prior belief must lie in [0, 1], got %r for user %d" % (a, user))
        profiles.append(UserProfile(user, BEHAVIOR_LEVELS[reads[user]],
                                    BEHAVIOR_LEVELS[shares[user]]))
        opinions.append(opinion_from_evidence(LEGITIMATE_EVIDENCE, a))

    return PopulationState(profiles, opinions)


def promote_seed(state, user, party):
    """Turn a legitimate user into an immutable seed of `party`.

    :raises PopulationError: when the user already is a seed of any party
    """
    profile = state.profiles[user]
    if profile.is_seed:
        raise PopulationError("User %d already is a %s seed" % (user, profile.role))

    if party == TRUE_PARTY:
        opinion = opinion_from_evidence(TIP_EVIDENCE, 1.0)
    elif party == FALSE_PARTY:
        opinion = opinion_from_evidence(FIP_EVIDENCE, 0.0)
    else:
        raise PopulationError("Unknown party '%s'" % party)

    profile.role = _SEED_ROLES[party]
    state.opinions[user] = opinion
    state.frozen[user] = True
    state.seeds[party].append(user)
    log.debug("User %d promoted to %s seed", user, party)
    return state


def classify(op):
    """Label an opinion by the party its projected probabilities favor.

    P(b) >= 0.5 counts for the true party so that the labels partition.
    """
    pb, _pd = project(op)
    if pb >= 0.5 - _BOUNDARY_TOL:
        return TRUE_ALIGNED
    return FALSE_ALIGNED


def belongs_to(op, party):
    """Strict party membership used by the blocking strategy."""
    pb, pd = project(op)
    if party == TRUE_PARTY:
        return pb - 0.5 > _BOUNDARY_TOL
    return pd - 0.5 > _BOUNDARY_TOL


def influence_counts(state):
    """Return (n_true, n_false) over the whole population."""
    n_true = sum(1 for op in state.opinions if classify(op) == TRUE_ALIGNED)
    return n_true, len(state.opinions) - n_true


def decided_counts(state):
    """Return (n_true, n_false) restricted to users with vacuity below FREE_VACUITY."""
    n_true = n_false = 0
    for op in state.opinions:
        if op.u >= FREE_VACUITY:
            continue
        if classify(op) == TRUE_ALIGNED:
            n_true += 1
        else:
            n_false += 1
    return n_true, n_false


def free_nodes(state):
    """Users which have not aligned with either party yet."""
    return {i for i, op in enumerate(state.opinions) if op.u >= FREE_VACUITY}


def most_active_user(state, candidates):
    """Candidate with the highest p_read * p_share, lowest id on ties."""
    if not candidates:
        raise PopulationError("No candidates to choose the most active user from")
    return min(candidates, key=lambda i: (-state.profiles[i].activity, i))


POPULATION_HEADER = ("user_id", "role", "p_read", "p_share", "b", "d", "u", "a")


def population_rows(state):
    for profile, op in zip(state.profiles, state.opinions):
        yield (profile.user_id, profile.role, profile.p_read, profile.p_share,
               op.b, op.d, op.u, op.a)


def write_population_csv(state, stream):
    """Write a snapshot of the population in the documented tabular format."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(POPULATION_HEADER)
    for row in population_rows(state):
        writer.writerow(row)
