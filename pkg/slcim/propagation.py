# Information cascades and the round/episode schedule of the two parties.
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

__all__ = ["EpisodeConfig", "RoundLog", "Episode", "EpisodeError", "propagate_wave",
           "run_round", "extract_state", "instant_reward", "discounted_return",
           "discounted_returns", "write_round_logs_csv"]

import csv
import logging
from collections import namedtuple

import numpy as np

from slcim import TRUE_PARTY, FALSE_PARTY
from slcim.network import mask_network
from slcim.opinion import (TrustModel, DegenerateFusionError, apply_uom_refresh,
                           trust_coefficient, fuse)
from slcim.population import (init_population, promote_seed, influence_counts,
                              decided_counts, free_nodes)
from slcim.strategies import select_seed, NoCandidateError, SGF, CF

log = logging.getLogger("slcim")

DEFAULT_GAMMA = 0.95


class EpisodeError(Exception):
    """The episode cannot continue or was driven out of order."""
    pass


class EpisodeConfig(object):
    """Scenario of one k-round game."""

    # waves start from every seed of the party or only from the newest one
    ORIGIN_ALL = "all"
    ORIGIN_NEWEST = "newest"

    def __init__(self, k=50, p_t=2, p_f=1, opinion_model=None, p_nv=1.0, rng_seed=0,
                 propagate_on_masked=False, prior_a=0.5, level_weights=None,
                 wave_origin=ORIGIN_ALL, free_degree_into_free=False):
        """
        :param k: rounds per episode, each party picks one seed per round
        :param p_t: propagation waves of the true party after each pick
        :param p_f: propagation waves of the false party after each pick
        :param opinion_model: TrustModel used by every user, UOM by default
        :param p_nv: probability an edge is visible to the parties
        :param rng_seed: seed of the whole replica
        :param propagate_on_masked: spread over the visible edges only
        :param prior_a: base rate of legitimate users
        :param level_weights: sampling weights of the behavior levels
        :param wave_origin: ORIGIN_ALL or ORIGIN_NEWEST
        :param free_degree_into_free: the state's degree counts free neighbors only
        """
        if k < 1 or p_t < 1 or p_f < 1:
            raise ValueError("k, p_t and p_f must be at least 1, got %r/%r/%r" % (k, p_t, p_f))
        if not 0.0 <= p_nv <= 1.0:
            raise ValueError("p_nv must lie in [0, 1], got %r" % p_nv)
        if wave_origin not in (self.ORIGIN_ALL, self.ORIGIN_NEWEST):
            raise ValueError("Unknown wave origin '%s'" % wave_origin)

        self.k = int(k)
        self.p_t = int(p_t)
        self.p_f = int(p_f)
        self.opinion_model = opinion_model or TrustModel()
        self.p_nv = float(p_nv)
        self.rng_seed = rng_seed
        self.propagate_on_masked = propagate_on_masked
        self.prior_a = prior_a
        self.level_weights = level_weights
        self.wave_origin = wave_origin
        self.free_degree_into_free = free_degree_into_free

    def replace(self, **changes):
        """Copy of this config with some fields changed."""
        fields = dict(self.__dict__)
        fields.update(changes)
        return EpisodeConfig(**fields)

    def waves(self, party):
        return self.p_t if party == TRUE_PARTY else self.p_f

    def __repr__(self):
        return ("EpisodeConfig(k=%d, p_t=%d, p_f=%d, %r, p_nv=%r, seed=%r)"
                % (self.k, self.p_t, self.p_f, self.opinion_model, self.p_nv, self.rng_seed))


RoundLog = namedtuple("RoundLog", ["round", "t", "party", "strategy", "seed", "n_true", "n_false",
                                   "n_true_decided", "n_false_decided", "reward"])


def _receive(state, i, j, model):
    """User `i` reads the opinion shared by `j`."""
    if state.frozen[i]:
        return

    op_i = state.opinions[i]
    if model.variant == TrustModel.UOM:
        op_i = apply_uom_refresh(op_i, model)
    if model.should_freeze(op_i):
        state.frozen[i] = True
        state.opinions[i] = op_i
        return

    op_j = state.opinions[j]
    try:
        fused = fuse(op_i, op_j, trust_coefficient(model, op_i, op_j))
    except DegenerateFusionError:
        log.debug("Skipping degenerate fusion of user %d with %d", i, j)
        return
    state.opinions[i] = fused
    if model.should_freeze(fused):
        state.frozen[i] = True


def propagate_wave(state, g, party, model, rng, origins=None):
    """Spread the opinions of one party's seeds breadth first.

    A visited user reads with probability p_read, fuses every sender of the
    current level in ascending id order and then shares with probability
    p_share, which puts its neighbors on the next level. Every user is
    processed at most once per wave.

    :param origins: seeds to start from, all seeds of `party` by default
    :type origins: iterable of int
    """
    seeds = state.seeds[party] if origins is None else list(origins)
    if not seeds:
        return state

    processed = set(seeds)
    level = sorted(processed)
    while level:
        inbox = {}
        for j in level:
            for i in g.adjacency[j]:
                if i not in processed:
                    inbox.setdefault(i, []).append(j)

        next_level = []
        for i in sorted(inbox):
            processed.add(i)
            profile = state.profiles[i]
            if profile.is_seed:
                continue
            if rng.random() >= profile.p_read:
                continue
            for j in sorted(inbox[i]):
                _receive(state, i, j, model)
            if rng.random() < profile.p_share:
                next_level.append(i)
        level = next_level
    return state


def extract_state(state, g, into_free=False):
    """Return (edges among free nodes, highest degree of a free node) on `g`."""
    free = free_nodes(state)
    if not free:
        return 0, 0
    edges = sum(1 for i, j in g.edges if i in free and j in free)
    if into_free:
        top = max(sum(1 for w in g.adjacency[v] if w in free) for v in free)
    else:
        top = max(len(g.adjacency[v]) for v in free)
    return edges, top


def instant_reward(counts, party, t):
    """Net change of the party's aligned users since its previous step.

    :param counts: counts[t] is the (n_true, n_false) pair after step t, counts[0] the baseline
    :type counts: sequence of pairs

    :param t: 1-based step, odd steps belong to the false party, even to the true one
    :type t: int
    """
    if party == FALSE_PARTY:
        first, index = 1, 1
    elif party == TRUE_PARTY:
        first, index = 2, 0
    else:
        raise ValueError("Unknown party '%s'" % party)

    if t < first:
        raise EpisodeError("The %s party has no reward before step %d" % (party, first))
    if (t - first) % 2:
        raise EpisodeError("Step %d is not a step of the %s party" % (t, party))
    if t >= len(counts):
        raise EpisodeError("No counts recorded for step %d" % t)

    previous = t - 1 if t == 1 else t - 2
    return counts[t][index] - counts[previous][index]


def discounted_return(rewards, T, gamma=DEFAULT_GAMMA):
    """Sum of gamma^(t - T + 1) * R_t over the tail starting at T."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1), got %r" % gamma)
    return sum(gamma ** (n + 1) * r for n, r in enumerate(rewards[T:]))


def discounted_returns(rewards, gamma=DEFAULT_GAMMA):
    """discounted_return() for every start index in one backward pass."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1), got %r" % gamma)
    returns = np.zeros(len(rewards))
    acc = 0.0
    for T in range(len(rewards) - 1, -1, -1):
        acc = gamma * (rewards[T] + acc)
        returns[T] = acc
    return returns


class Episode(object):
    """One replica of the game: population, visibility mask, randomness and logs."""

    def __init__(self, graph, cfg, episode_id=0):
        """
        :param graph: the full social graph, shared read-only between replicas
        :type graph: Graph

        :param cfg: scenario of this episode
        :type cfg: EpisodeConfig

        :param episode_id: identifies the episode in the exported logs
        :type episode_id: int
        """
        self.graph = graph
        self.cfg = cfg
        self.episode_id = episode_id
        self.reset()

    def reset(self):
        population_seed, mask_seed, run_seed = np.random.SeedSequence(self.cfg.rng_seed).spawn(3)
        self.rng = np.random.default_rng(run_seed)
        self.state = init_population(self.graph.n, population_seed, self.cfg.prior_a,
                                     self.cfg.level_weights)
        if self.cfg.p_nv >= 1.0:
            self.observable = self.graph.full_view()
        else:
            self.observable = mask_network(self.graph, self.cfg.p_nv, mask_seed)
        self.spread_graph = self.observable if self.cfg.propagate_on_masked else self.graph

        self.counts = [decided_counts(self.state)]
        self.logs = []
        self.t = 0
        start = extract_state(self.state, self.observable, self.cfg.free_degree_into_free)
        self._scale = (float(max(start[0], 1)), float(max(start[1], 1)))

    def observation(self):
        """The normalized two-component state the policies see."""
        edges, top = extract_state(self.state, self.observable, self.cfg.free_degree_into_free)
        return np.array([edges / self._scale[0], top / self._scale[1]])

    def select_with_fallback(self, kind, party, candidates=None):
        """Run strategy `kind`, falling back to SGF, CF and the lowest free id.

        :return: (seed, strategy that fired)
        """
        chain = [kind] + [k for k in (SGF, CF) if k != kind]
        for n, current in enumerate(chain):
            try:
                seed = select_seed(current, party, self.state, self.observable, self.rng,
                                   candidates=candidates if n == 0 else None)
            except NoCandidateError:
                continue
            if n:
                log.info("Strategy %s had no candidate for the %s party, used %s",
                         kind, party, current)
            return seed, current

        legitimate = self.state.non_seed_users()
        free = free_nodes(self.state)
        pool = [v for v in legitimate if v in free] or legitimate
        if not pool:
            raise EpisodeError("No legitimate user left to promote")
        log.info("Falling back to the lowest free user for the %s party", party)
        return min(pool), "lowest"

    def step(self, party, agent, round_index):
        """One party picks a seed and propagates its waves."""
        expected = FALSE_PARTY if self.t % 2 == 0 else TRUE_PARTY
        if party != expected:
            raise EpisodeError("Step %d belongs to the %s party" % (self.t + 1, expected))

        seed, strategy = agent.select(self, party)
        promote_seed(self.state, seed, party)

        origins = [seed] if self.cfg.wave_origin == EpisodeConfig.ORIGIN_NEWEST else None
        for _i in range(self.cfg.waves(party)):
            propagate_wave(self.state, self.spread_graph, party, self.cfg.opinion_model,
                           self.rng, origins)

        self.t += 1
        self.counts.append(decided_counts(self.state))
        n_true, n_false = influence_counts(self.state)
        entry = RoundLog(round_index, self.t, party, strategy, seed, n_true, n_false,
                         self.counts[-1][0], self.counts[-1][1],
                         instant_reward(self.counts, party, self.t))
        self.logs.append(entry)
        log.debug("%r", entry)

        if hasattr(agent, "feedback"):
            agent.feedback(entry)
        return entry

    def run_round(self, t, tp_agent, fp_agent):
        """The false party moves first, then the true party."""
        if not 0 <= t < self.cfg.k:
            raise EpisodeError("Round %d is outside of the %d round episode" % (t, self.cfg.k))
        fp_log = self.step(FALSE_PARTY, fp_agent, t)
        tp_log = self.step(TRUE_PARTY, tp_agent, t)
        return fp_log, tp_log

    def run(self, tp_agent, fp_agent):
        """Play all rounds from a fresh state and return the logs."""
        if self.t:
            self.reset()
        for agent in (fp_agent, tp_agent):
            if hasattr(agent, "reset"):
                agent.reset(self)
        for t in range(self.cfg.k):
            self.run_round(t, tp_agent, fp_agent)
        log.debug("Episode %d finished: %r", self.episode_id, self.logs[-1])
        return self.logs

    @property
    def final_counts(self):
        return influence_counts(self.state)

    @property
    def final_decided_counts(self):
        return self.counts[-1]


def run_round(episode, t, tp_agent, fp_agent):
    return episode.run_round(t, tp_agent, fp_agent)


ROUND_LOG_HEADER = ("episode", "t", "party", "strategy", "seed_id", "n_true", "n_false", "reward")


def write_round_logs_csv(logs, stream, episode_id=0, header=True):
    writer = csv.writer(stream, lineterminator="\n")
    if header:
        writer.writerow(ROUND_LOG_HEADER)
    for entry in logs:
        writer.writerow((episode_id, entry.t, entry.party, entry.strategy, entry.seed,
                         entry.n_true, entry.n_false, entry.reward))
