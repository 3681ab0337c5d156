# Experiment runner: replicas on worker threads, aggregation and CSV output.
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

__all__ = ["ExperimentRunner", "ExperimentError", "Job", "RunRecord", "ResultRow", "CellPolicies",
           "RESULT_HEADER", "RUN_HEADER", "DATASET_ENV", "DEFAULT_DATASET", "dataset_path",
           "load_dataset", "policy_path", "load_policies", "cell_agents", "evaluate_replica",
           "aggregate", "run_experiment", "bench_runtime", "write_result_rows_csv",
           "read_result_rows", "write_runs_csv"]

import csv
import logging
import os
import queue
import sys
import threading
import time
from collections import namedtuple

import numpy as np

from slcim import TRUE_PARTY, FALSE_PARTY
from slcim.baselines import agent_factory
from slcim.communication.communication import run_queue
from slcim.harness.config import AXIS_NONE, AXIS_IP
from slcim.network import load_graph, spectral_communities, write_communities_csv, GraphError
from slcim.population import write_population_csv
from slcim.propagation import Episode, write_round_logs_csv
from slcim.rl import (PolicyAgent, PolicyError, DRL, train_agent, save_params, load_params,
                      write_learning_curve_csv)
from slcim.strategies import StrategyAgent, action_space, DRIM_A, C_STORM
from slcim.utils import derive_seed, thread_count

log = logging.getLogger("slcim")

DATASET_ENV = "SLCIM_URV_PATH"
DEFAULT_DATASET = os.path.join("data", "email-univ.edges")


class ExperimentError(RuntimeError):
    """An experiment could not be carried out."""
    pass


# one evaluation episode: the cell, the sweep point and the run
Job = namedtuple("Job", ["scheme", "opinion_model", "fp_strategy", "axis", "value", "run", "seed"])

# population is the final state of the first run of a cell and sweep point, None otherwise
RunRecord = namedtuple("RunRecord", ["job", "n_true", "n_false", "n_true_decided",
                                     "n_false_decided", "wall_time", "logs", "population"])

ResultRow = namedtuple("ResultRow", ["scheme", "opinion_model", "fp_strategy", "axis", "value",
                                     "runs", "mean_n_true", "std_n_true", "mean_n_false",
                                     "mean_decided_n_true", "mean_wall_time"])

RESULT_HEADER = ResultRow._fields
RUN_HEADER = ("scheme", "opinion_model", "fp_strategy", "axis", "value", "run", "seed", "n_true",
              "n_false", "n_true_decided", "n_false_decided", "wall_time")


class ExperimentRunner(object):
    """Evaluate independent replicas on worker threads.

    Workers report through the run queue (see communication.run_queue());
    the calling thread drains it, so results are collected and exceptions
    re-raised in one place.
    """

    def __init__(self, threads=None):
        """
        :param threads: number of worker threads, SLCIM_THREADS overrides it
        :type threads: int
        """
        self.threads = thread_count(threads)
        self.run_q = run_queue()
        self._handlers = {}
        self._stop = threading.Event()
        self.register_event_handler(self.run_q.RUN_CODE_PROGRESS, self._on_progress)

    def register_event_handler(self, event, callback, data=None):
        """Call `callback(message, data)` when message `event` is processed.

        :param event: one of the RUN_CODE_* constants
        :type event: int
        """
        self._handlers.setdefault(event, []).append((callback, data))

    @staticmethod
    def _on_progress(event, data):
        log.debug("Started %r", event[1][0])

    def process_events(self, return_at=None):
        """Process queued messages until `return_at` arrives or the queue is empty.

        The message matching `return_at` is returned instead of being handled.
        A worker exception is raised here.
        """
        while return_at is not None or not self.run_q.empty():
            event = self.run_q.get()
            if event[0] == return_at:
                return event
            elif event[0] in self._handlers:
                for callback, data in self._handlers[event[0]]:
                    callback(event, data)
            elif event[0] == self.run_q.RUN_CODE_EXCEPTION:
                self._stop.set()
                exc_info = event[1][0]
                raise ExperimentError("A replica failed: %s" % exc_info[1]) from exc_info[1]
        return None

    def _worker(self, work, fn):
        while not self._stop.is_set():
            try:
                job = work.get_nowait()
            except queue.Empty:
                return
            self.run_q.send_progress(job)
            try:
                result = fn(job)
            except Exception:  # pylint: disable=broad-except
                self.run_q.send_exception(sys.exc_info())
                return
            self.run_q.send_done(job, result)

    def run(self, jobs, fn):
        """Run `fn(job)` for every job and return the results in job order."""
        jobs = list(jobs)
        if not jobs:
            return []

        work = queue.Queue()
        for job in jobs:
            work.put(job)

        self._stop.clear()
        workers = [threading.Thread(target=self._worker, name="ReplicaThread-%d" % n,
                                    args=(work, fn), daemon=True)
                   for n in range(min(self.threads, len(jobs)))]
        for worker in workers:
            worker.start()

        results = {}
        while len(results) < len(jobs):
            job, result = self.process_events(return_at=self.run_q.RUN_CODE_DONE)[1]
            results[job] = result
            if len(results) % max(1, len(jobs) // 10) == 0:
                log.info("%d/%d replicas done", len(results), len(jobs))

        for worker in workers:
            worker.join()
        return [results[job] for job in jobs]


def dataset_path(spec):
    """The configured dataset, else $SLCIM_URV_PATH, else data/email-univ.edges."""
    return spec.dataset or os.environ.get(DATASET_ENV) or DEFAULT_DATASET


def load_dataset(spec):
    path = dataset_path(spec)
    if not os.path.exists(path):
        raise ExperimentError("Dataset '%s' not found" % path)
    try:
        graph = load_graph(path)
    except GraphError as e:
        raise ExperimentError("Can't load dataset '%s': %s" % (path, e)) from e
    log.info("Loaded %r from %s", graph, path)
    return graph


def policy_path(policy_dir, scheme, opinion_model, fp_strategy, party=TRUE_PARTY):
    """<policy_dir>/<scheme>-<om>-<fp>.tp.bin, .fp.bin for the learned false party."""
    suffix = "tp" if party == TRUE_PARTY else "fp"
    return os.path.join(policy_dir, "%s-%s-%s.%s.bin" % (scheme, opinion_model, fp_strategy, suffix))


CellPolicies = namedtuple("CellPolicies", ["tp_params", "fp_params", "factory"])


def _train_cell(spec, graph, scheme, opinion_model, fp_strategy, tp_path, fp_path):
    log.warning("Training %s against %s under %s, no policy at %s",
                scheme, fp_strategy, opinion_model, tp_path)
    seed = derive_seed(spec.master_seed, ("train", scheme, opinion_model, fp_strategy), 0)
    result = train_agent(scheme, fp_strategy, graph, spec.episode_config(opinion_model, None, seed),
                         spec.ppo, seed, spec.selfplay, spec.community_count)

    os.makedirs(os.path.dirname(tp_path) or ".", exist_ok=True)
    save_params(result.params, tp_path)
    if result.opponent_params is not None:
        save_params(result.opponent_params, fp_path)
    with open(tp_path[:-len(".tp.bin")] + ".curve.csv", "w") as f:
        write_learning_curve_csv(result.curve, f)
    return result.params, result.opponent_params


def load_policies(spec, graph, scheme, opinion_model, fp_strategy):
    """Load the policies of one cell, training them when missing and allowed.

    :rtype: CellPolicies
    """
    tp_path = policy_path(spec.policy_dir, scheme, opinion_model, fp_strategy, TRUE_PARTY)
    fp_path = policy_path(spec.policy_dir, scheme, opinion_model, fp_strategy, FALSE_PARTY)
    needed = [tp_path] + ([fp_path] if fp_strategy == DRL else [])
    missing = [p for p in needed if not os.path.exists(p)]

    if missing:
        if not spec.auto_train:
            raise ExperimentError("Missing policy file %s and auto-training is off"
                                  % ", ".join(missing))
        tp_params, fp_params = _train_cell(spec, graph, scheme, opinion_model, fp_strategy,
                                           tp_path, fp_path)
    else:
        try:
            tp_params = load_params(tp_path, len(action_space(scheme)))
            fp_params = None
            if fp_strategy == DRL:
                fp_params = load_params(fp_path, len(action_space(DRIM_A)))
        except (OSError, PolicyError) as e:
            raise ExperimentError("Can't load policies of %s/%s/%s: %s"
                                  % (scheme, opinion_model, fp_strategy, e)) from e
    return CellPolicies(tp_params, fp_params, agent_factory(scheme, spec.community_count))


def cell_agents(policies, fp_strategy, rng_seed):
    """Greedy evaluation agents of both parties.

    :return: (true party's agent, false party's agent)
    """
    tp_agent = policies.factory(policies.tp_params, greedy=True, rng_seed=rng_seed)
    if fp_strategy == DRL:
        fp_agent = PolicyAgent(policies.fp_params, action_space(DRIM_A), greedy=True,
                               rng_seed=rng_seed)
    else:
        fp_agent = StrategyAgent(fp_strategy)
    return tp_agent, fp_agent


def evaluate_replica(graph, spec, policies, job):
    """Play the evaluation episode of `job`.

    :rtype: RunRecord
    """
    cfg = spec.episode_config(job.opinion_model, job.value, job.seed)
    episode = Episode(graph, cfg, episode_id=job.run)
    tp_agent, fp_agent = cell_agents(policies, job.fp_strategy, job.seed)

    start = time.perf_counter()
    logs = episode.run(tp_agent, fp_agent)
    wall_time = time.perf_counter() - start

    n_true, n_false = episode.final_counts
    n_true_decided, n_false_decided = episode.final_decided_counts
    population = episode.state if job.run == 0 else None
    return RunRecord(job, n_true, n_false, n_true_decided, n_false_decided, wall_time, logs,
                     population)


def _jobs(spec):
    jobs = []
    for scheme, opinion_model, fp_strategy in spec.cells():
        for value in spec.grid:
            coordinates = (scheme, opinion_model, fp_strategy, spec.axis, value)
            for run in range(spec.runs):
                jobs.append(Job(scheme, opinion_model, fp_strategy, spec.axis, value, run,
                                derive_seed(spec.master_seed, coordinates, run)))
    return jobs


def aggregate(records):
    """Reduce run records to one ResultRow per cell and sweep point, in first-seen order."""
    groups = {}
    for record in records:
        groups.setdefault(record.job[:5], []).append(record)

    rows = []
    for key, group in groups.items():
        n_true = np.array([r.n_true for r in group], dtype=float)
        rows.append(ResultRow(*key, runs=len(group),
                              mean_n_true=float(np.mean(n_true)),
                              std_n_true=float(np.std(n_true)),
                              mean_n_false=float(np.mean([r.n_false for r in group])),
                              mean_decided_n_true=float(np.mean([r.n_true_decided for r in group])),
                              mean_wall_time=float(np.mean([r.wall_time for r in group]))))
    return rows


def _value_text(value):
    return "" if value is None else repr(value)


def write_result_rows_csv(rows, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RESULT_HEADER)
    for row in rows:
        writer.writerow([_value_text(row.value) if name == "value" else
                         repr(v) if isinstance(v, float) else v
                         for name, v in zip(RESULT_HEADER, row)])


def _parse_value(axis, text):
    if axis == AXIS_NONE or text == "":
        return None
    return int(text) if axis == AXIS_IP else float(text)


def read_result_rows(source):
    """Read rows written by write_result_rows_csv().

    :param source: path or open text stream
    :rtype: list of ResultRow
    """
    if not hasattr(source, "read"):
        with open(source, newline="") as f:
            return read_result_rows(f)

    reader = csv.DictReader(source)
    if tuple(reader.fieldnames or ()) != RESULT_HEADER:
        raise ExperimentError("Unexpected result header %r" % (reader.fieldnames,))
    rows = []
    for line in reader:
        try:
            rows.append(ResultRow(line["scheme"], line["opinion_model"], line["fp_strategy"],
                                  line["axis"], _parse_value(line["axis"], line["value"]),
                                  int(line["runs"]), float(line["mean_n_true"]),
                                  float(line["std_n_true"]), float(line["mean_n_false"]),
                                  float(line["mean_decided_n_true"]),
                                  float(line["mean_wall_time"])))
        except ValueError as e:
            raise ExperimentError("Invalid result row %d: %s" % (reader.line_num, e)) from e
    return rows


def write_runs_csv(records, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RUN_HEADER)
    for r in records:
        job = r.job
        writer.writerow((job.scheme, job.opinion_model, job.fp_strategy, job.axis,
                         _value_text(job.value), job.run, job.seed, r.n_true, r.n_false,
                         r.n_true_decided, r.n_false_decided, repr(r.wall_time)))


def _output_name(job):
    name = "-".join(str(c) for c in job[:3])
    if job.value is not None:
        name += "-%s-%s" % (job.axis, job.value)
    return name


def _write_outputs(spec, graph, rows, records):
    os.makedirs(spec.out_dir, exist_ok=True)
    with open(os.path.join(spec.out_dir, "results.csv"), "w", newline="") as f:
        write_result_rows_csv(rows, f)
    with open(os.path.join(spec.out_dir, "runs.csv"), "w", newline="") as f:
        write_runs_csv(records, f)

    rounds_dir = os.path.join(spec.out_dir, "rounds")
    populations_dir = os.path.join(spec.out_dir, "populations")
    os.makedirs(rounds_dir, exist_ok=True)
    os.makedirs(populations_dir, exist_ok=True)
    files = {}
    try:
        for r in records:
            name = _output_name(r.job)
            if name not in files:
                files[name] = open(os.path.join(rounds_dir, name + ".csv"), "w", newline="")
                write_round_logs_csv([], files[name], header=True)
            write_round_logs_csv(r.logs, files[name], episode_id=r.job.run, header=False)
            if r.population is not None:
                with open(os.path.join(populations_dir, name + ".csv"), "w", newline="") as f:
                    write_population_csv(r.population, f)
    finally:
        for f in files.values():
            f.close()

    if C_STORM in spec.schemes:
        # the partition C-STORM plans on when every edge is visible
        labels = spectral_communities(graph.full_view(), min(spec.community_count, graph.n))
        with open(os.path.join(spec.out_dir, "communities.csv"), "w", newline="") as f:
            write_communities_csv(labels, f)


def run_experiment(spec, graph=None, runner=None, write=True):
    """Evaluate every cell of `spec` at every sweep point `spec.runs` times.

    Writes results.csv, runs.csv, rounds/*.csv and populations/*.csv into
    spec.out_dir, plus communities.csv when C-STORM is evaluated.

    :param graph: the social graph, loaded from the spec's dataset when None
    :param runner: the replica runner, a new ExperimentRunner(spec.threads) when None

    :return: (ResultRows, RunRecords) in coordinate order
    """
    graph = graph or load_dataset(spec)
    runner = runner or ExperimentRunner(spec.threads)

    # training is per cell; sweep points reuse the default scenario's policy
    policies = {}
    for scheme, opinion_model, fp_strategy in spec.cells():
        policies[(scheme, opinion_model, fp_strategy)] = load_policies(spec, graph, scheme,
                                                                       opinion_model, fp_strategy)

    jobs = _jobs(spec)
    log.info("Evaluating %r: %d replicas on %d threads", spec, len(jobs), runner.threads)
    records = runner.run(jobs, lambda job: evaluate_replica(graph, spec, policies[job[:3]], job))
    rows = aggregate(records)
    if write:
        _write_outputs(spec, graph, rows, records)
    return rows, records


def bench_runtime(spec, graph=None, episodes=20):
    """Mean wall-clock seconds per evaluation episode of every scheme of `spec`.

    Episodes run sequentially against the first opinion model and FP
    strategy of the spec, after one untimed warm-up episode.

    :rtype: dict scheme -> seconds
    """
    if episodes < 1:
        raise ExperimentError("Benchmarking needs at least one episode, got %d" % episodes)
    graph = graph or load_dataset(spec)
    opinion_model = spec.opinion_models[0]
    fp_strategy = spec.fp_strategies[0]

    times = {}
    for scheme in spec.schemes:
        policies = load_policies(spec, graph, scheme, opinion_model, fp_strategy)
        seeds = [derive_seed(spec.master_seed, ("bench", scheme), n) for n in range(episodes + 1)]

        elapsed = []
        for n, seed in enumerate(seeds):
            job = Job(scheme, opinion_model, fp_strategy, AXIS_NONE, None, n, seed)
            record = evaluate_replica(graph, spec, policies, job)
            if n:
                elapsed.append(record.wall_time)
        times[scheme] = float(np.mean(elapsed))
        log.info("%s: %.4f s per episode over %d episodes", scheme, times[scheme], episodes)
    return times
