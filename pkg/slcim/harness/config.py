# Experiment matrix and its INI configuration file.
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

__all__ = ["ExperimentSpec", "ConfigError", "load_spec", "parse_grid", "AXES", "AXIS_NONE",
           "AXIS_IP", "AXIS_P_NV", "AXIS_PRIOR", "DEFAULT_GRIDS", "FP_STRATEGIES"]

import configparser

from slcim.opinion import TrustModel, OpinionError
from slcim.propagation import EpisodeConfig
from slcim.rl.ppo import PPOConfig, SelfPlayConfig, DRL
from slcim.strategies import SCHEMES, KINDS, RANDOM, AF, BF, SGF, CF

# sweep axes
AXIS_NONE = "none"
AXIS_IP = "ip"
AXIS_P_NV = "p_nv"
AXIS_PRIOR = "prior_a"
AXES = (AXIS_NONE, AXIS_IP, AXIS_P_NV, AXIS_PRIOR)

DEFAULT_GRIDS = {
    AXIS_IP: (1, 2, 3, 4, 5),
    AXIS_P_NV: (0.2, 0.4, 0.6, 0.8, 1.0),
    AXIS_PRIOR: (0.1, 0.3, 0.5, 0.7, 0.9),
}

# column order of the false party's strategies in every report
FP_STRATEGIES = (RANDOM, AF, BF, SGF, CF, DRL)


class ConfigError(ValueError):
    """Invalid experiment configuration."""
    pass


def _split(value):
    if isinstance(value, str):
        value = value.replace(",", " ").split()
    return tuple(str(v).strip().lower() for v in value)


def parse_grid(axis, text):
    """Parse sweep values given as 'a,b,c', 'start:stop' or 'start:stop:step' (stop included).

    :rtype: tuple of int for the IP axis, of float otherwise
    """
    cast = int if axis == AXIS_IP else float
    text = text.strip()
    try:
        if ":" in text:
            parts = [cast(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(cast(1))
            if len(parts) != 3 or parts[2] <= 0:
                raise ConfigError("Invalid range '%s'" % text)
            start, stop, step = parts
            values = []
            n = 0
            # stepping by index avoids accumulating float error
            while start + n * step <= stop + 1e-9:
                values.append(cast(round(start + n * step, 10)))
                n += 1
            return tuple(values)
        return tuple(cast(v) for v in text.replace(",", " ").split())
    except ValueError as e:
        raise ConfigError("Invalid %s grid '%s': %s" % (axis, text, e)) from e


class ExperimentSpec(object):
    """The experiment matrix: schemes x opinion models x FP strategies x sweep points x runs."""

    def __init__(self, schemes=SCHEMES, opinion_models=TrustModel.VARIANTS,
                 fp_strategies=FP_STRATEGIES, runs=20, axis=AXIS_NONE, grid=None, dataset=None,
                 out_dir="results", master_seed=0, policy_dir="policies", auto_train=True,
                 community_count=8, threads=None, episode=None, xi=0.01, t_d=0.6, t_u=0.01,
                 ppo=None, selfplay=None):
        """
        :param schemes: true party's schemes, see strategies.SCHEMES
        :param opinion_models: TrustModel variants
        :param fp_strategies: false party's strategies, KINDS or DRL
        :param runs: evaluation episodes per cell and sweep point
        :param axis: one of AXES
        :param grid: sweep values, DEFAULT_GRIDS[axis] when None
        :param dataset: edge list of the social graph
        :param out_dir: where the CSV files go
        :param master_seed: seed every replica seed is derived from
        :param policy_dir: where trained policies are looked up and stored
        :param auto_train: train missing policies instead of failing
        :param community_count: number of communities of C-STORM
        :param threads: worker threads, see utils.thread_count()
        :param episode: scenario template, its opinion model and seed are replaced per run
        :type episode: EpisodeConfig
        :param ppo: training hyperparameters
        :type ppo: PPOConfig
        :param selfplay: alternating-freeze schedule used against a DRL false party
        :type selfplay: SelfPlayConfig
        """
        self.schemes = _split(schemes)
        self.opinion_models = _split(opinion_models)
        self.fp_strategies = _split(fp_strategies)
        self.axis = str(axis).lower()
        self.runs = int(runs)
        self.dataset = dataset
        self.out_dir = out_dir
        self.master_seed = int(master_seed)
        self.policy_dir = policy_dir
        self.auto_train = bool(auto_train)
        self.community_count = int(community_count)
        self.threads = threads
        self.episode = episode or EpisodeConfig()
        self.xi = xi
        self.t_d = t_d
        self.t_u = t_u
        self.ppo = ppo or PPOConfig()
        self.selfplay = selfplay or SelfPlayConfig()

        if self.axis not in AXES:
            raise ConfigError("Unknown sweep axis '%s', expected one of %s" % (axis, ", ".join(AXES)))
        if self.axis == AXIS_NONE:
            self.grid = (None,)
        else:
            self.grid = tuple(grid) if grid is not None else DEFAULT_GRIDS[self.axis]
        self._validate()

    def _validate(self):
        if self.runs < 1:
            raise ConfigError("runs must be at least 1, got %d" % self.runs)
        if not self.grid:
            raise ConfigError("The %s sweep grid is empty" % self.axis)
        for name, values, known in (("scheme", self.schemes, SCHEMES),
                                    ("opinion model", self.opinion_models, TrustModel.VARIANTS),
                                    ("FP strategy", self.fp_strategies, KINDS + (DRL,))):
            if not values:
                raise ConfigError("No %s given" % name)
            for value in values:
                if value not in known:
                    raise ConfigError("Unknown %s '%s', expected one of %s"
                                      % (name, value, ", ".join(known)))
        if self.community_count < 1:
            raise ConfigError("community_count must be at least 1")
        try:
            self.trust_model(self.opinion_models[0])
            for value in self.grid:
                if value is not None:
                    self.episode.replace(**self._axis_change(value))
        except (ValueError, OpinionError) as e:
            raise ConfigError(str(e)) from e

    def replace(self, **changes):
        """Copy with some fields changed, a changed axis drops the old grid."""
        fields = dict(self.__dict__)
        if "axis" in changes and "grid" not in changes:
            fields["grid"] = None
        fields.update(changes)
        if fields["axis"] == AXIS_NONE:
            fields["grid"] = None
        return ExperimentSpec(**fields)

    def trust_model(self, opinion_model):
        return TrustModel(opinion_model, self.xi, self.t_d, self.t_u)

    def _axis_change(self, value):
        if self.axis == AXIS_IP:
            return {"p_t": int(value)}
        if self.axis == AXIS_P_NV:
            return {"p_nv": float(value)}
        if self.axis == AXIS_PRIOR:
            return {"prior_a": float(value)}
        return {}

    def episode_config(self, opinion_model, value=None, rng_seed=0):
        """Scenario of one replica, `value` is the sweep point (None for the default scenario)."""
        changes = self._axis_change(value) if value is not None else {}
        return self.episode.replace(opinion_model=self.trust_model(opinion_model),
                                    rng_seed=rng_seed, **changes)

    def cells(self):
        """(scheme, opinion model, FP strategy) in the deterministic reduction order."""
        return [(s, om, fp) for s in self.schemes for om in self.opinion_models
                for fp in self.fp_strategies]

    def __repr__(self):
        return ("ExperimentSpec(schemes=%s, models=%s, fp=%s, runs=%d, axis=%s)"
                % ("/".join(self.schemes), "/".join(self.opinion_models),
                   "/".join(self.fp_strategies), self.runs, self.axis))


_EPISODE_KEYS = {"k": int, "p_t": int, "p_f": int, "p_nv": float, "prior_a": float,
                 "propagate_on_masked": "bool", "wave_origin": str,
                 "free_degree_into_free": "bool"}
_OPINION_KEYS = {"xi": float, "t_d": float, "t_u": float}
_TRAINING_KEYS = {"gamma": float, "clip": float, "epochs": int, "actor_lr": float,
                  "critic_lr": float, "episodes_per_update": int, "updates": int,
                  "entropy_coef": float, "hidden": int}
_SELFPLAY_KEYS = {"updates_per_phase": int, "alternations": int}
_EXPERIMENT_KEYS = {"schemes": str, "opinion_models": str, "fp_strategies": str, "runs": int,
                    "dataset": str, "out_dir": str, "master_seed": int, "policy_dir": str,
                    "auto_train": "bool", "community_count": int, "threads": int}


def _read_section(parser, section, keys):
    values = {}
    if not parser.has_section(section):
        return values
    for key in parser[section]:
        if key not in keys:
            raise ConfigError("Unknown option '%s' in section [%s]" % (key, section))
        kind = keys[key]
        try:
            if kind == "bool":
                values[key] = parser.getboolean(section, key)
            else:
                values[key] = kind(parser.get(section, key))
        except ValueError as e:
            raise ConfigError("Invalid value of '%s' in section [%s]: %s" % (key, section, e)) from e
    return values


def load_spec(source=None, **overrides):
    """Build an ExperimentSpec from an INI file and keyword overrides.

    Sections are [experiment], [episode], [opinion], [training] and [sweep]
    (keys axis and grid). Overrides take ExperimentSpec field names and win
    over the file; None values are ignored.

    :param source: path or open text stream, None for the defaults only
    """
    parser = configparser.ConfigParser()
    if source is not None:
        try:
            if hasattr(source, "read"):
                parser.read_file(source)
            elif not parser.read(source):
                raise ConfigError("Can't read configuration file '%s'" % source)
        except configparser.Error as e:
            raise ConfigError(str(e)) from e

    known = {"experiment", "episode", "opinion", "training", "sweep"}
    for section in parser.sections():
        if section not in known:
            raise ConfigError("Unknown section [%s]" % section)

    fields = _read_section(parser, "experiment", _EXPERIMENT_KEYS)
    fields.update(_read_section(parser, "opinion", _OPINION_KEYS))
    training = _read_section(parser, "training", dict(_TRAINING_KEYS, **_SELFPLAY_KEYS))

    try:
        fields["episode"] = EpisodeConfig(**_read_section(parser, "episode", _EPISODE_KEYS))
        fields["ppo"] = PPOConfig(**{k: v for k, v in training.items() if k in _TRAINING_KEYS})
        fields["selfplay"] = SelfPlayConfig(**{k: v for k, v in training.items()
                                              if k in _SELFPLAY_KEYS})
    except ValueError as e:
        raise ConfigError(str(e)) from e

    if parser.has_section("sweep"):
        sweep = parser["sweep"]
        for key in sweep:
            if key not in ("axis", "grid"):
                raise ConfigError("Unknown option '%s' in section [sweep]" % key)
        fields["axis"] = sweep.get("axis", AXIS_NONE).strip().lower()
        if "grid" in sweep:
            fields["grid"] = parse_grid(fields["axis"], sweep["grid"])

    fields.update((k, v) for k, v in overrides.items() if v is not None)
    if overrides.get("axis") is not None and overrides.get("grid") is None:
        fields.pop("grid", None)
    return ExperimentSpec(**fields)
