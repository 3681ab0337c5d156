# STORM and community-based STORM adapted to the opinion dynamics.
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

__all__ = ["STORM", "C_STORM", "StormAgent", "CStormAgent", "CommunityCache", "storm_actions",
           "storm_agent", "cstorm_agent", "agent_factory"]

import logging
import threading

import numpy as np

from slcim.network import spectral_communities
from slcim.population import free_nodes
from slcim.rl.policy import PolicyParams, DEFAULT_HIDDEN
from slcim.rl.ppo import PolicyAgent
from slcim.strategies import STORM, C_STORM, DRIM_A, DRIM_NA, CF, BF, action_space

log = logging.getLogger("slcim")

DEFAULT_COMMUNITIES = 8


def storm_actions(blocking=True):
    """Max-degree (max-weight coincides on unweighted graphs) plus blocking."""
    return [CF, BF] if blocking else [CF]


class StormAgent(PolicyAgent):
    """Learned choice between the max-degree and the blocking action."""

    def __init__(self, params, actions=None, greedy=False, rng_seed=0, record=False, name=STORM):
        super().__init__(params, actions or storm_actions(), greedy, rng_seed, record, name)


class CommunityCache(object):
    """Community labels per visibility mask, shared by agents on several threads."""

    def __init__(self):
        self._labels = {}
        self._lock = threading.Lock()

    def get(self, g, k, rng_seed=0):
        key = (g.visible_edges, k, rng_seed)
        with self._lock:
            if key not in self._labels:
                self._labels[key] = spectral_communities(g, k, rng_seed)
                log.debug("Detected %d communities on %r", k, g)
            return self._labels[key]

    def __len__(self):
        return len(self._labels)


class CStormAgent(StormAgent):
    """STORM restricted to the community holding the most free users."""

    def __init__(self, params, community_count=DEFAULT_COMMUNITIES, actions=None, greedy=False,
                 rng_seed=0, record=False, community_seed=0, cache=None):
        """
        :param community_count: number of spectral communities
        :type community_count: int

        :param community_seed: seed of the k-means clustering
        :type community_seed: int

        :param cache: labels shared with other agents, a private one when None
        :type cache: CommunityCache
        """
        if community_count < 1:
            raise ValueError("Community count must be at least 1, got %r" % community_count)
        super().__init__(params, actions, greedy, rng_seed, record, C_STORM)
        self.community_count = community_count
        self.community_seed = community_seed
        self.community_cache = cache if cache is not None else CommunityCache()

    def communities(self, episode):
        """Community labels of the observable graph, computed once per visibility mask."""
        g = episode.observable
        return self.community_cache.get(g, min(self.community_count, g.n), self.community_seed)

    def reset(self, episode):
        super().reset(episode)
        self.communities(episode)

    def candidates(self, episode, party):
        labels = self.communities(episode)
        free = free_nodes(episode.state)
        sizes = np.bincount(np.array([labels[v] for v in free], dtype=int),
                            minlength=labels.max() + 1)
        # np.argmax keeps the lowest label on ties
        best = int(np.argmax(sizes))
        return {v for v in range(len(labels)) if labels[v] == best}


def storm_agent(params=None, blocking=True, greedy=True, rng_seed=0, hidden=DEFAULT_HIDDEN):
    """STORM agent, untrained (fresh weights) unless `params` is given."""
    actions = storm_actions(blocking)
    if params is None:
        params = PolicyParams.initialize(len(actions), hidden, rng_seed)
    return StormAgent(params, actions, greedy=greedy, rng_seed=rng_seed)


def cstorm_agent(params=None, community_count=DEFAULT_COMMUNITIES, greedy=True, rng_seed=0,
                 hidden=DEFAULT_HIDDEN):
    """C-STORM agent, untrained (fresh weights) unless `params` is given."""
    if params is None:
        params = PolicyParams.initialize(len(storm_actions()), hidden, rng_seed)
    return CStormAgent(params, community_count, greedy=greedy, rng_seed=rng_seed)


def agent_factory(scheme, community_count=DEFAULT_COMMUNITIES):
    """Return a callable building the true party's agent of `scheme` from its weights.

    The callable takes (params, greedy=False, rng_seed=0).
    """
    if scheme in (DRIM_A, DRIM_NA):
        actions = action_space(scheme)

        def make(params, greedy=False, rng_seed=0):
            return PolicyAgent(params, actions, greedy=greedy, rng_seed=rng_seed, name=scheme)
    elif scheme == STORM:
        def make(params, greedy=False, rng_seed=0):
            return StormAgent(params, greedy=greedy, rng_seed=rng_seed)
    elif scheme == C_STORM:
        # communities are shared between the agents of one training run
        cache = CommunityCache()

        def make(params, greedy=False, rng_seed=0):
            return CStormAgent(params, community_count, greedy=greedy, rng_seed=rng_seed,
                               cache=cache)
    else:
        raise ValueError("Unknown scheme '%s'" % scheme)
    return make
