import csv
import io
import os
import tempfile
import unittest
from unittest import mock

from slcim.harness.cli import main, build_parser, _print_tables
from slcim.harness.config import (ExperimentSpec, ConfigError, load_spec, parse_grid, AXIS_IP,
                                  AXIS_P_NV, AXIS_PRIOR, DEFAULT_GRIDS)
from slcim.harness.experiment import (ExperimentRunner, ExperimentError, ResultRow, policy_path,
                                      run_experiment, bench_runtime, aggregate,
                                      write_result_rows_csv, read_result_rows, load_dataset)
from slcim.harness.report import ReportError, emit_report, report_table, runtime_by_scheme
from slcim.network import Graph
from slcim.opinion import TrustModel
from slcim.propagation import EpisodeConfig
from slcim.rl import PPOConfig, SelfPlayConfig
from slcim.strategies import SCHEMES
from slcim.utils import derive_seed, thread_count

CONFIG = """
[experiment]
schemes = drim-a, storm
runs = 3
master_seed = 7

[episode]
k = 10
p_t = 3

[opinion]
t_d = 0.5

[training]
updates = 5
alternations = 2

[sweep]
axis = p_nv
grid = 0.2:0.6:0.2
"""

FP_COLUMNS = ("random", "af", "bf", "sgf", "cf", "drl")


def small_world(n=24):
    pairs = [(i, (i + 1) % n) for i in range(n)] + [(i, (i + 5) % n) for i in range(0, n, 2)]
    return Graph(n, pairs)


def table1_rows():
    rows = []
    for n, scheme in enumerate(SCHEMES):
        for om in TrustModel.VARIANTS:
            for fp in FP_COLUMNS:
                rows.append(ResultRow(scheme, om, fp, "none", None, 20, 100.0 + n, 1.0, 20.0,
                                      50.0 + n, 0.1 * (n + 1)))
    return rows


def tiny_spec(tmp, **changes):
    fields = dict(schemes=["drim-na"], opinion_models=["uom"], fp_strategies=["cf", "drl"],
                  runs=2, out_dir=os.path.join(tmp, "out"), policy_dir=os.path.join(tmp, "pol"),
                  episode=EpisodeConfig(k=2), threads=2,
                  ppo=PPOConfig(updates=1, epochs=1, episodes_per_update=1, hidden=4),
                  selfplay=SelfPlayConfig(1, 1))
    fields.update(changes)
    return ExperimentSpec(**fields)


class Config_TestCase(unittest.TestCase):

    def test_load_spec(self):
        spec = load_spec(io.StringIO(CONFIG))
        self.assertEqual(spec.schemes, ("drim-a", "storm"))
        self.assertEqual(spec.runs, 3)
        self.assertEqual(spec.master_seed, 7)
        self.assertEqual((spec.episode.k, spec.episode.p_t), (10, 3))
        self.assertEqual(spec.t_d, 0.5)
        self.assertEqual(spec.ppo.updates, 5)
        self.assertEqual(spec.selfplay.alternations, 2)
        self.assertEqual(spec.axis, AXIS_P_NV)
        self.assertEqual(spec.grid, (0.2, 0.4, 0.6))

    def test_overrides_win(self):
        spec = load_spec(io.StringIO(CONFIG), runs=5, axis=AXIS_IP, schemes=None)
        self.assertEqual(spec.runs, 5)
        self.assertEqual(spec.schemes, ("drim-a", "storm"))
        self.assertEqual(spec.grid, DEFAULT_GRIDS[AXIS_IP])

    def test_defaults(self):
        spec = load_spec()
        self.assertEqual(spec.runs, 20)
        self.assertEqual(spec.grid, (None,))
        self.assertEqual(len(spec.cells()), 4 * 3 * 6)

    def test_invalid_files(self):
        for text in ("[nowhere]\nx = 1\n", "[experiment]\nfoo = 1\n", "[episode]\nk = ten\n",
                     "[experiment]\nruns = 0\n", "[experiment]\nschemes = drim-b\n",
                     "[sweep]\naxis = height\n", "[episode]\np_t = 0\n", "[opinion]\nxi = 2\n"):
            with self.assertRaises(ConfigError, msg=text):
                load_spec(io.StringIO(text))

    def test_empty_grid(self):
        with self.assertRaises(ConfigError):
            ExperimentSpec(axis=AXIS_PRIOR, grid=())

    def test_parse_grid(self):
        self.assertEqual(parse_grid(AXIS_IP, "1:5"), (1, 2, 3, 4, 5))
        self.assertEqual(parse_grid(AXIS_PRIOR, "0.1, 0.5,0.9"), (0.1, 0.5, 0.9))
        self.assertEqual(parse_grid(AXIS_P_NV, "0.2:1.0:0.2"), (0.2, 0.4, 0.6, 0.8, 1.0))
        with self.assertRaises(ConfigError):
            parse_grid(AXIS_IP, "1:x")

    def test_episode_config(self):
        spec = ExperimentSpec(axis=AXIS_IP)
        cfg = spec.episode_config("hom", 3, rng_seed=11)
        self.assertEqual(cfg.p_t, 3)
        self.assertEqual(cfg.opinion_model, spec.trust_model("hom"))
        self.assertEqual(cfg.opinion_model.variant, "hom")
        self.assertEqual(cfg.rng_seed, 11)
        self.assertEqual(spec.episode_config("uom").p_t, 2)


class Utils_TestCase(unittest.TestCase):

    def test_derive_seed(self):
        first = derive_seed(0, ("drim-a", "uom", "cf", "none", None), 0)
        self.assertEqual(first, derive_seed(0, ("drim-a", "uom", "cf", "none", None), 0))
        self.assertNotEqual(first, derive_seed(0, ("drim-a", "uom", "cf", "none", None), 1))
        self.assertNotEqual(first, derive_seed(1, ("drim-a", "uom", "cf", "none", None), 0))
        self.assertTrue(0 <= first < 2 ** 32)

    def test_thread_count(self):
        with mock.patch.dict(os.environ, {"SLCIM_THREADS": "3"}):
            self.assertEqual(thread_count(8), 3)
        with mock.patch.dict(os.environ, {"SLCIM_THREADS": "many"}):
            with self.assertRaises(ValueError):
                thread_count()
        with mock.patch.dict(os.environ, {"SLCIM_THREADS": ""}):
            self.assertEqual(thread_count(5), 5)


class Runner_TestCase(unittest.TestCase):

    def test_results_in_job_order(self):
        runner = ExperimentRunner(threads=3)
        self.assertEqual(runner.run(range(20), lambda job: job * job),
                         [n * n for n in range(20)])
        self.assertEqual(runner.run([], lambda job: job), [])

    def test_worker_exception_reraised(self):
        def fail(job):
            if job == 3:
                raise KeyError("bad job")
            return job

        runner = ExperimentRunner(threads=2)
        with self.assertRaises(ExperimentError) as cm:
            runner.run(range(6), fail)
        self.assertIsInstance(cm.exception.__cause__, KeyError)

    def test_progress_handler(self):
        started = []
        runner = ExperimentRunner(threads=1)
        runner.register_event_handler(runner.run_q.RUN_CODE_PROGRESS,
                                      lambda event, data: started.append(event[1][0]))
        runner.run([1, 2], lambda job: job)
        runner.process_events()
        self.assertEqual(sorted(started), [1, 2])


class Experiment_TestCase(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.g = small_world()

    def tearDown(self):
        self.tmp.cleanup()

    def test_policy_path(self):
        self.assertEqual(policy_path("p", "drim-a", "uom", "cf"), os.path.join("p", "drim-a-uom-cf.tp.bin"))
        self.assertEqual(policy_path("p", "storm", "hom", "drl", "false"),
                         os.path.join("p", "storm-hom-drl.fp.bin"))

    def test_run_experiment(self):
        spec = tiny_spec(self.tmp.name)
        with self.assertLogs("slcim", level="WARNING"):
            rows, records = run_experiment(spec, self.g)

        self.assertEqual([(r.scheme, r.fp_strategy) for r in rows],
                         [("drim-na", "cf"), ("drim-na", "drl")])
        self.assertEqual(len(records), 4)
        for row in rows:
            self.assertEqual(row.runs, 2)
            self.assertGreaterEqual(row.std_n_true, 0.0)
            self.assertGreater(row.mean_wall_time, 0.0)
            raw = [r.n_true for r in records if r.job.fp_strategy == row.fp_strategy]
            self.assertAlmostEqual(row.mean_n_true, sum(raw) / len(raw))

        for name in ("drim-na-uom-cf.tp.bin", "drim-na-uom-drl.tp.bin", "drim-na-uom-drl.fp.bin",
                     "drim-na-uom-cf.curve.csv"):
            self.assertTrue(os.path.exists(os.path.join(spec.policy_dir, name)), name)
        for name in ("results.csv", "runs.csv", os.path.join("rounds", "drim-na-uom-cf.csv"),
                     os.path.join("populations", "drim-na-uom-cf.csv"),
                     os.path.join("populations", "drim-na-uom-drl.csv")):
            self.assertTrue(os.path.exists(os.path.join(spec.out_dir, name)), name)
        self.assertFalse(os.path.exists(os.path.join(spec.out_dir, "communities.csv")))
        self.assertEqual(sorted(r.job.run for r in records if r.population is not None), [0, 0])

        with open(os.path.join(spec.out_dir, "rounds", "drim-na-uom-cf.csv")) as f:
            self.assertEqual(len(f.read().splitlines()), 1 + 2 * 2 * 2)
        self.assertEqual(read_result_rows(os.path.join(spec.out_dir, "results.csv")), rows)

    def test_reproducible(self):
        first_rows, first = run_experiment(tiny_spec(self.tmp.name), self.g)
        second_rows, second = run_experiment(tiny_spec(self.tmp.name, threads=1), self.g,
                                             write=False)
        self.assertEqual([r[:-1] for r in first_rows], [r[:-1] for r in second_rows])
        self.assertEqual([r.logs for r in first], [r.logs for r in second])

    def test_single_run_has_zero_std(self):
        rows, _records = run_experiment(tiny_spec(self.tmp.name, runs=1, fp_strategies=["cf"]),
                                        self.g, write=False)
        self.assertEqual(rows[0].std_n_true, 0.0)

    def test_sweep(self):
        spec = tiny_spec(self.tmp.name, fp_strategies=["cf"], axis=AXIS_IP, grid=(1, 2), runs=1)
        rows, _records = run_experiment(spec, self.g, write=False)
        self.assertEqual([r.value for r in rows], [1, 2])
        self.assertTrue(all(r.axis == AXIS_IP for r in rows))

    def test_missing_policy(self):
        spec = tiny_spec(self.tmp.name, auto_train=False)
        with self.assertRaises(ExperimentError):
            run_experiment(spec, self.g)

    def test_missing_dataset(self):
        spec = tiny_spec(self.tmp.name, dataset=os.path.join(self.tmp.name, "none.edges"))
        with self.assertRaises(ExperimentError):
            load_dataset(spec)

    def test_bench_runtime(self):
        spec = tiny_spec(self.tmp.name, schemes=["drim-na", "storm"], fp_strategies=["cf"])
        times = bench_runtime(spec, self.g, episodes=2)
        self.assertEqual(list(times), ["drim-na", "storm"])
        self.assertTrue(all(t > 0 for t in times.values()))
        with self.assertRaises(ExperimentError):
            bench_runtime(spec, self.g, episodes=0)


class Report_TestCase(unittest.TestCase):

    def test_table1(self):
        header, table = report_table(table1_rows(), "table1")
        self.assertEqual(header, ("scheme", "opinion_model") + FP_COLUMNS)
        self.assertEqual(len(table), 12)
        self.assertEqual(table[0], ["drim-a", "uom"] + [50.0] * 6)

    def test_missing_cell_named(self):
        rows = [r for r in table1_rows() if not (r.scheme == "storm" and r.opinion_model == "hom"
                                                 and r.fp_strategy == "bf")]
        with self.assertRaisesRegex(ReportError, "storm/hom/bf"):
            report_table(rows, "table1")

    def test_fig2(self):
        header, table = report_table(table1_rows(), "fig2")
        self.assertEqual(header, ("scheme",) + FP_COLUMNS)
        self.assertEqual([line[0] for line in table], list(SCHEMES))

    def test_fig3c(self):
        rows = [ResultRow(s, "uom", "drl", AXIS_PRIOR, a, 20, 1.0, 0.0, 1.0, 10 * a, 0.1)
                for s in SCHEMES for a in DEFAULT_GRIDS[AXIS_PRIOR]]
        header, table = report_table(rows, "fig3c")
        self.assertEqual(header[2:], tuple("prior_a=%s" % a for a in (0.1, 0.3, 0.5, 0.7, 0.9)))
        self.assertEqual(len(table), 4)
        with self.assertRaises(ReportError):
            report_table(rows[1:], "fig3c")
        with self.assertRaises(ReportError):
            report_table(rows, "fig3a")

    def test_table2(self):
        times = runtime_by_scheme(table1_rows())
        self.assertAlmostEqual(times["drim-a"], 0.1)
        header, table = report_table(table1_rows(), "table2")
        self.assertEqual(header, ("scheme", "seconds_per_episode"))
        self.assertEqual([line[0] for line in table], list(SCHEMES))

    def test_emit_report(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = emit_report(table1_rows(), "table1", tmp)
            with open(path) as f:
                lines = list(csv.reader(f))
            self.assertEqual(len(lines), 13)
            self.assertEqual(lines[1][:3], ["drim-a", "uom", "50.0"])
            with self.assertRaises(ReportError):
                emit_report(table1_rows(), "table9", tmp)

    def test_aggregate_order(self):
        rows = aggregate([])
        self.assertEqual(rows, [])


class Cli_TestCase(unittest.TestCase):

    def test_report_command(self):
        with tempfile.TemporaryDirectory() as tmp:
            results = os.path.join(tmp, "results.csv")
            with open(results, "w", newline="") as f:
                write_result_rows_csv(table1_rows(), f)
            with mock.patch("sys.stdout", new_callable=io.StringIO) as out:
                status = main(["report", "-q", "--results", results, "--out", tmp])
            self.assertEqual(status, 0)
            self.assertIn("drim-a", out.getvalue())
            for layout in ("table1", "fig2", "table2"):
                self.assertTrue(os.path.exists(os.path.join(tmp, layout + ".csv")))
            self.assertFalse(os.path.exists(os.path.join(tmp, "fig3a.csv")))

    def print_two_tables(self, columns):
        tables = [("left", ("scheme", "n"), [["a", 1.0]]), ("right", ("scheme", "n"), [["b", 2.0]])]
        with mock.patch("shutil.get_terminal_size", return_value=os.terminal_size((columns, 24))), \
                mock.patch("sys.stdout", new_callable=io.StringIO) as out:
            _print_tables(tables)
        return out.getvalue().splitlines()

    def test_tables_side_by_side(self):
        lines = self.print_two_tables(80)
        self.assertEqual(lines[0], "left           right")
        self.assertEqual(lines[3], "a       1.0    b       2.0")
        self.assertEqual(len(lines), 4)

    def test_tables_stacked_when_narrow(self):
        lines = self.print_two_tables(20)
        self.assertEqual(lines[0], "left")
        self.assertIn("right", lines)
        self.assertEqual(lines[3], "a       1.0")
        self.assertEqual(lines[4], "")

    def test_report_incomplete_layout(self):
        with tempfile.TemporaryDirectory() as tmp:
            results = os.path.join(tmp, "results.csv")
            with open(results, "w", newline="") as f:
                write_result_rows_csv(table1_rows(), f)
            with mock.patch("sys.stderr", new_callable=io.StringIO) as err:
                status = main(["report", "-q", "--layout", "fig3b", "--results", results])
            self.assertEqual(status, 1)
            self.assertIn("fig3b", err.getvalue())

    def test_missing_results(self):
        with mock.patch("sys.stderr", new_callable=io.StringIO) as err:
            self.assertEqual(main(["report", "-q", "--results", "/nonexistent/results.csv"]), 1)
        self.assertTrue(err.getvalue().startswith("slcim: error:"))

    def test_train_command(self):
        with tempfile.TemporaryDirectory() as tmp:
            dataset = os.path.join(tmp, "g.edges")
            with open(dataset, "w") as f:
                f.write("".join("%d %d\n" % (i + 1, (i + 1) % 12 + 1) for i in range(12)))
            config = os.path.join(tmp, "spec.cfg")
            with open(config, "w") as f:
                f.write("[episode]\nk = 2\n[training]\nepochs = 1\nepisodes_per_update = 1\n"
                        "hidden = 4\n")
            out = os.path.join(tmp, "policy.bin")
            with mock.patch("sys.stdout", new_callable=io.StringIO):
                status = main(["train", "-q", "--spec", config, "--dataset", dataset,
                               "--scheme", "storm", "--opponent", "af", "--updates", "1",
                               "--out", out, "--curve", os.path.join(tmp, "curve.csv")])
            self.assertEqual(status, 0)
            self.assertTrue(os.path.exists(out))
            self.assertTrue(os.path.exists(os.path.join(tmp, "curve.csv")))

    def test_sweep_arguments(self):
        args = build_parser().parse_args(["sweep", "--axis", "ip", "--range", "1:3", "--runs", "2"])
        self.assertEqual((args.command, args.axis, args.grid, args.runs), ("sweep", "ip", "1:3", 2))
        with mock.patch("sys.stderr", new_callable=io.StringIO):
            with self.assertRaises(SystemExit):
                build_parser().parse_args(["sweep", "--axis", "height"])


class CliRun_TestCase(unittest.TestCase):
    """Whole commands on a small graph with tiny training."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dataset = os.path.join(self.tmp.name, "g.edges")
        with open(self.dataset, "w") as f:
            f.write("".join("%d %d\n" % (i + 1, j + 1) for i, j in sorted(small_world().edges)))
        self.config = os.path.join(self.tmp.name, "spec.cfg")
        with open(self.config, "w") as f:
            f.write("[episode]\nk = 2\n[training]\nupdates = 1\nepochs = 1\n"
                    "episodes_per_update = 1\nhidden = 4\nupdates_per_phase = 1\n"
                    "alternations = 1\n")
        self.out = os.path.join(self.tmp.name, "out")

    def tearDown(self):
        self.tmp.cleanup()

    def run_main(self, *args):
        argv = list(args) + ["-q", "--spec", self.config, "--dataset", self.dataset,
                             "--policy-dir", os.path.join(self.tmp.name, "pol"),
                             "--out", self.out]
        with mock.patch("sys.stdout", new_callable=io.StringIO):
            return main(argv)

    def read_csv(self, *path):
        with open(os.path.join(self.out, *path), newline="") as f:
            return list(csv.reader(f))

    def test_eval(self):
        status = self.run_main("eval", "--schemes", "drim-na,cstorm", "--opinion-models", "uom",
                               "--fp-strategies", "cf", "--runs", "2", "--threads", "2")
        self.assertEqual(status, 0)

        results = self.read_csv("results.csv")
        self.assertEqual(tuple(results[0]), ResultRow._fields)
        self.assertEqual([r[:3] for r in results[1:]], [["drim-na", "uom", "cf"],
                                                        ["cstorm", "uom", "cf"]])
        self.assertEqual(len(self.read_csv("runs.csv")), 1 + 4)
        self.assertEqual(len(self.read_csv("rounds", "drim-na-uom-cf.csv")), 1 + 2 * 2 * 2)

        population = self.read_csv("populations", "drim-na-uom-cf.csv")
        self.assertEqual(population[0][:2], ["user_id", "role"])
        self.assertEqual(len(population), 1 + 24)
        communities = self.read_csv("communities.csv")
        self.assertEqual(communities[0], ["node_id", "label"])
        self.assertEqual(len(communities), 1 + 24)

    def test_sweep(self):
        status = self.run_main("sweep", "--axis", "ip", "--range", "1:2", "--schemes", "drim-na",
                               "--opinion-models", "uom", "--fp-strategies", "cf", "--runs", "1")
        self.assertEqual(status, 0)
        results = self.read_csv("results.csv")
        self.assertEqual([(r[3], r[4]) for r in results[1:]], [("ip", "1"), ("ip", "2")])
        self.assertTrue(os.path.exists(os.path.join(self.out, "rounds",
                                                    "drim-na-uom-cf-ip-2.csv")))
        self.assertFalse(os.path.exists(os.path.join(self.out, "communities.csv")))

    def test_bench(self):
        status = self.run_main("bench", "--schemes", "drim-na,storm", "--episodes", "1")
        self.assertEqual(status, 0)
        runtime = self.read_csv("runtime.csv")
        self.assertEqual(runtime[0], ["scheme", "seconds_per_episode"])
        self.assertEqual([r[0] for r in runtime[1:]], ["drim-na", "storm"])
        self.assertTrue(all(float(r[1]) > 0 for r in runtime[1:]))

    def test_bad_config(self):
        with open(self.config, "w") as f:
            f.write("[experiment]\nruns = 0\n")
        with mock.patch("sys.stderr", new_callable=io.StringIO) as err:
            self.assertEqual(self.run_main("eval"), 1)
        self.assertIn("runs must be at least 1", err.getvalue())

        with open(self.config, "w") as f:
            f.write("[plotting]\ncolor = red\n")
        with mock.patch("sys.stderr", new_callable=io.StringIO) as err:
            self.assertEqual(self.run_main("eval"), 1)
        self.assertIn("Unknown section [plotting]", err.getvalue())
