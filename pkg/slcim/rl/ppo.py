# Proximal policy optimization of the seed-selection policies.
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

__all__ = ["PPOConfig", "SelfPlayConfig", "Trajectory", "Batch", "PolicyAgent", "TrainingError",
           "TrainingResult", "CurvePoint", "ppo_losses", "ppo_update", "collect_rollouts",
           "train_loop", "train_agent", "write_learning_curve_csv"]

import csv
import logging
from collections import namedtuple

import numpy as np

from slcim import TRUE_PARTY, FALSE_PARTY
from slcim.propagation import Episode, discounted_returns, DEFAULT_GAMMA
from slcim.rl.policy import (PolicyParams, PolicyError, mlp_forward, mlp_backward, log_softmax,
                             policy_forward, value_forward)
from slcim.strategies import StrategyAgent, action_space, KINDS, DRIM_A

log = logging.getLogger("slcim")

# opponent name of a learned false party
DRL = "drl"


class TrainingError(RuntimeError):
    """Training diverged or was fed an inconsistent batch."""
    pass


class PPOConfig(object):
    """Hyperparameters of the clipped-surrogate policy optimization."""

    def __init__(self, gamma=DEFAULT_GAMMA, clip=0.2, epochs=80, actor_lr=3e-4, critic_lr=1e-3,
                 episodes_per_update=8, updates=200, entropy_coef=0.01, hidden=64):
        if not 0.0 < gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1), got %r" % gamma)
        if not 0.0 < clip < 1.0:
            raise ValueError("clip must lie in (0, 1), got %r" % clip)
        for name, value in (("epochs", epochs), ("actor_lr", actor_lr), ("critic_lr", critic_lr),
                            ("episodes_per_update", episodes_per_update), ("updates", updates),
                            ("hidden", hidden)):
            if not value > 0:
                raise ValueError("%s must be positive, got %r" % (name, value))
        if entropy_coef < 0:
            raise ValueError("entropy_coef must not be negative, got %r" % entropy_coef)

        self.gamma = float(gamma)
        self.clip = float(clip)
        self.epochs = int(epochs)
        self.actor_lr = float(actor_lr)
        self.critic_lr = float(critic_lr)
        self.episodes_per_update = int(episodes_per_update)
        self.updates = int(updates)
        self.entropy_coef = float(entropy_coef)
        self.hidden = int(hidden)

    def replace(self, **changes):
        fields = dict(self.__dict__)
        fields.update(changes)
        return PPOConfig(**fields)


class SelfPlayConfig(object):
    """Alternating-freeze training of a learned false party."""

    def __init__(self, updates_per_phase=25, alternations=4):
        if updates_per_phase < 1 or alternations < 1:
            raise ValueError("Self-play needs at least one update and one alternation")
        self.updates_per_phase = int(updates_per_phase)
        self.alternations = int(alternations)


class Trajectory(object):
    """The steps one learner took in one episode."""

    def __init__(self):
        self.states = []
        self.actions = []
        self.log_probs = []
        self.values = []
        self.rewards = []

    def __len__(self):
        return len(self.actions)

    def append(self, state, action, log_prob, value):
        if len(self.rewards) != len(self.actions):
            raise TrainingError("The previous step never received its reward")
        self.states.append(np.asarray(state, dtype=float))
        self.actions.append(int(action))
        self.log_probs.append(float(log_prob))
        self.values.append(float(value))

    def reward(self, value):
        if len(self.rewards) >= len(self.actions):
            raise TrainingError("Reward received without a pending step")
        self.rewards.append(float(value))

    @property
    def episode_return(self):
        return float(sum(self.rewards))


class Batch(object):
    """Flattened trajectories with discounted returns and normalized advantages."""

    def __init__(self, states, actions, log_probs, returns, values):
        self.states = np.asarray(states, dtype=float).reshape(-1, 2)
        self.actions = np.asarray(actions, dtype=int)
        self.log_probs = np.asarray(log_probs, dtype=float)
        self.returns = np.asarray(returns, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if len(self.actions) == 0:
            raise TrainingError("Cannot update from an empty batch")

        advantages = self.returns - self.values
        advantages = advantages - advantages.mean()
        std = advantages.std()
        self.advantages = advantages / std if std > 1e-8 else advantages

    def __len__(self):
        return len(self.actions)

    @classmethod
    def from_trajectories(cls, trajectories, gamma=DEFAULT_GAMMA):
        states, actions, log_probs, returns, values = [], [], [], [], []
        for trajectory in trajectories:
            if len(trajectory.rewards) != len(trajectory):
                raise TrainingError("Trajectory has %d steps but %d rewards"
                                    % (len(trajectory), len(trajectory.rewards)))
            states += trajectory.states
            actions += trajectory.actions
            log_probs += trajectory.log_probs
            values += trajectory.values
            returns += list(discounted_returns(trajectory.rewards, gamma))
        return cls(states, actions, log_probs, returns, values)


def ppo_losses(params, batch, cfg):
    """Losses of the actor and critic and their analytic gradients.

    The actor loss is the negated clipped surrogate minus the entropy bonus,
    the critic loss is the mean squared return error.

    :return: dict with actor_loss, critic_loss, entropy, clip_fraction,
             actor_grads and critic_grads
    """
    N = len(batch)
    onehot = np.zeros((N, params.n_actions))
    onehot[np.arange(N), batch.actions] = 1.0

    logits, actor_inputs = mlp_forward(params.actor, batch.states)
    logp_all = log_softmax(logits)
    probs = np.exp(logp_all)
    logp = logp_all[np.arange(N), batch.actions]
    entropy = -(probs * logp_all).sum(axis=1)

    A = batch.advantages
    ratio = np.exp(logp - batch.log_probs)
    clipped = np.clip(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip)
    unclipped_term = ratio * A
    # the unclipped term carries the gradient only where it is the minimum
    active = unclipped_term <= clipped * A
    surrogate = np.minimum(unclipped_term, clipped * A)

    actor_loss = -surrogate.mean() - cfg.entropy_coef * entropy.mean()
    grad_logits = (-(active * unclipped_term)[:, None] * (onehot - probs) +
                   cfg.entropy_coef * probs * (logp_all + entropy[:, None])) / N

    values, critic_inputs = mlp_forward(params.critic, batch.states)
    error = values[:, 0] - batch.returns
    critic_loss = (error ** 2).mean()
    grad_values = (2.0 * error / N)[:, None]

    return {
        "actor_loss": float(actor_loss),
        "critic_loss": float(critic_loss),
        "entropy": float(entropy.mean()),
        "clip_fraction": float((~active).mean()),
        "actor_grads": mlp_backward(params.actor, actor_inputs, grad_logits),
        "critic_grads": mlp_backward(params.critic, critic_inputs, grad_values),
    }


def _step(layers, grads, lr):
    return [(W - lr * gW, b - lr * gb) for (W, b), (gW, gb) in zip(layers, grads)]


def ppo_update(params, batch, cfg):
    """Run cfg.epochs plain gradient steps over one batch.

    :return: (new PolicyParams, diagnostics averaged over the epochs)
    """
    diagnostics = {"actor_loss": 0.0, "critic_loss": 0.0, "entropy": 0.0, "clip_fraction": 0.0}
    actor, critic = params.actor, params.critic
    for _epoch in range(cfg.epochs):
        try:
            current = PolicyParams(actor, critic)
        except PolicyError as e:
            raise TrainingError("Update diverged: %s" % e) from e
        result = ppo_losses(current, batch, cfg)
        if not (np.isfinite(result["actor_loss"]) and np.isfinite(result["critic_loss"])):
            raise TrainingError("Non-finite loss (actor %r, critic %r)"
                                % (result["actor_loss"], result["critic_loss"]))
        for key in diagnostics:
            diagnostics[key] += result[key] / cfg.epochs
        actor = _step(actor, result["actor_grads"], cfg.actor_lr)
        critic = _step(critic, result["critic_grads"], cfg.critic_lr)
    return PolicyParams(actor, critic), diagnostics


class PolicyAgent(object):
    """A party choosing its strategy with a policy network."""

    def __init__(self, params, actions, greedy=False, rng_seed=0, record=False, name=DRL):
        """
        :param params: policy weights, their head must match `actions`
        :type params: PolicyParams

        :param actions: strategies indexed by the policy outputs
        :type actions: sequence of str

        :param greedy: pick the most probable strategy instead of sampling
        :type greedy: bool

        :param rng_seed: seed of the action sampling
        :type rng_seed: int

        :param record: keep a Trajectory of the steps for training
        :type record: bool
        """
        if params.n_actions != len(actions):
            raise ValueError("Policy has %d outputs for %d actions" % (params.n_actions, len(actions)))
        self.params = params
        self.actions = list(actions)
        self.greedy = greedy
        self.record = record
        self.name = name
        self._rng = np.random.default_rng(rng_seed)
        self.trajectory = Trajectory()

    def reset(self, episode):
        self.trajectory = Trajectory()

    def candidates(self, episode, party):
        """Restriction of the candidate pool, None means every legitimate user."""
        return None

    def choose(self, state):
        probs = policy_forward(self.params, state)
        if self.greedy:
            action = int(np.argmax(probs))
        else:
            action = int(self._rng.choice(len(probs), p=probs))
        return action, probs[action]

    def select(self, episode, party):
        state = episode.observation()
        action, prob = self.choose(state)
        if self.record:
            self.trajectory.append(state, action, np.log(max(prob, 1e-300)),
                                   value_forward(self.params, state))
        return episode.select_with_fallback(self.actions[action], party,
                                            self.candidates(episode, party))

    def feedback(self, entry):
        if self.record:
            self.trajectory.reward(entry.reward)

    def __repr__(self):
        return "PolicyAgent(%s, %s)" % (self.name, "/".join(self.actions))


TrainingResult = namedtuple("TrainingResult", ["params", "curve", "opponent_params"])
CurvePoint = namedtuple("CurvePoint", ["update", "mean_return", "entropy"])


def collect_rollouts(learner, opponent, graph, env_cfg, episodes, party=TRUE_PARTY, rng_seed=0):
    """Play `episodes` episodes and return the learner's trajectories.

    :param learner: recording agent of `party`
    :type learner: PolicyAgent

    :param opponent: agent of the other party
    :type opponent: StrategyAgent or PolicyAgent

    :param graph: the social graph
    :type graph: Graph

    :param env_cfg: scenario, its seed is replaced per episode
    :type env_cfg: EpisodeConfig

    :rtype: list of Trajectory
    """
    learner.record = True
    seeds = np.random.SeedSequence(rng_seed).generate_state(episodes)
    trajectories = []
    for n, seed in enumerate(seeds):
        episode = Episode(graph, env_cfg.replace(rng_seed=int(seed)), episode_id=n)
        if party == TRUE_PARTY:
            episode.run(learner, opponent)
        else:
            episode.run(opponent, learner)
        trajectories.append(learner.trajectory)
    return trajectories


def train_loop(params, collect_fn, cfg):
    """Alternate rollout collection and PPO updates.

    :param collect_fn: called as collect_fn(params, update) and returning trajectories
    :type collect_fn: callable

    :return: (trained params, list of CurvePoint)
    """
    curve = []
    for update in range(cfg.updates):
        trajectories = collect_fn(params, update)
        batch = Batch.from_trajectories(trajectories, cfg.gamma)
        params, diagnostics = ppo_update(params, batch, cfg)
        mean_return = float(np.mean([t.episode_return for t in trajectories]))
        curve.append(CurvePoint(update, mean_return, diagnostics["entropy"]))
        log.info("Update %d/%d: mean return %.3f, entropy %.3f, clipped %.2f",
                 update + 1, cfg.updates, mean_return, diagnostics["entropy"],
                 diagnostics["clip_fraction"])
    return params, curve


def _rollout_fn(factory, opponent, graph, env_cfg, cfg, party, rng_seed):
    def collect(params, update):
        learner = factory(params, greedy=False, rng_seed=rng_seed + update)
        return collect_rollouts(learner, opponent, graph, env_cfg, cfg.episodes_per_update,
                                party, rng_seed=(rng_seed, update))
    return collect


def train_agent(scheme, opponent, graph, env_cfg, ppo_cfg=None, rng_seed=0, selfplay_cfg=None,
                community_count=8):
    """Train the true party's policy of `scheme` against `opponent`.

    :param scheme: DRIM_A, DRIM_NA, STORM or C_STORM
    :type scheme: str

    :param opponent: a strategy name (see strategies.KINDS), DRL for self-play,
                     or an agent object
    :type opponent: str or agent

    :rtype: TrainingResult
    """
    # baselines builds on this module
    from slcim.baselines import agent_factory

    ppo_cfg = ppo_cfg or PPOConfig()
    actions = action_space(scheme)
    factory = agent_factory(scheme, community_count)
    params = PolicyParams.initialize(len(actions), ppo_cfg.hidden, rng_seed)

    if opponent != DRL:
        if isinstance(opponent, str):
            if opponent not in KINDS:
                raise ValueError("Unknown opponent '%s'" % opponent)
            opponent = StrategyAgent(opponent)
        log.info("Training %s against %r", scheme, opponent)
        params, curve = train_loop(params, _rollout_fn(factory, opponent, graph, env_cfg, ppo_cfg,
                                                       TRUE_PARTY, rng_seed), ppo_cfg)
        return TrainingResult(params, curve, None)

    selfplay_cfg = selfplay_cfg or SelfPlayConfig()
    phase_cfg = ppo_cfg.replace(updates=selfplay_cfg.updates_per_phase)
    fp_actions = action_space(DRIM_A)
    fp_params = PolicyParams.initialize(len(fp_actions), ppo_cfg.hidden, rng_seed + 1)

    def fp_factory(fp_params, greedy=False, rng_seed=0):
        return PolicyAgent(fp_params, fp_actions, greedy=greedy, rng_seed=rng_seed)

    curve = []
    for alternation in range(selfplay_cfg.alternations):
        log.info("Self-play alternation %d/%d of %s", alternation + 1,
                 selfplay_cfg.alternations, scheme)
        seed = rng_seed + 1000 * alternation
        frozen_fp = fp_factory(fp_params, greedy=True)
        params, tp_curve = train_loop(params, _rollout_fn(factory, frozen_fp, graph, env_cfg,
                                                          phase_cfg, TRUE_PARTY, seed), phase_cfg)
        curve += [p._replace(update=len(curve) + p.update) for p in tp_curve]

        frozen_tp = factory(params, greedy=True)
        fp_params, _fp_curve = train_loop(fp_params, _rollout_fn(fp_factory, frozen_tp, graph,
                                                                 env_cfg, phase_cfg, FALSE_PARTY,
                                                                 seed + 500), phase_cfg)
    return TrainingResult(params, curve, fp_params)


CURVE_HEADER = ("update", "mean_return", "entropy")


def write_learning_curve_csv(curve, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CURVE_HEADER)
    for point in curve:
        writer.writerow((point.update, repr(point.mean_return), repr(point.entropy)))
