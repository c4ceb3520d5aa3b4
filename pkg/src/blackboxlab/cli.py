"""Command-line front end.

Commands: ``nflt-verify``, ``optimize``, ``bench``, ``gp-plotdata``. Every
command takes ``--config PATH`` (JSON) plus flags that override config-file
values; the effective configuration is echoed into the output directory, so
any artifact can be reproduced from its own directory. All files are written
atomically (temp file + rename).

Exit codes: 0 success (and verdict EQUAL for nflt-verify), 1 verified
inequality (nflt-verify only), 2 configuration errors, 3 external evaluator
failures.
"""

from __future__ import annotations

import argparse
import json
import os
import select
import shlex
import subprocess
import sys

import numpy as np

from . import bayesopt, bench, gp, metaheuristics, nflt
from .core import BoxDomain, Dataset, FitnessFunction, RngStream, run_algorithm
from .reporting import atomic_write_text, fmt, write_json

__all__ = [
    "main",
    "EvaluatorTimeout",
    "EvaluatorProtocol",
    "ExternalEvaluator",
    "external_evaluator_bridge",
    "cmd_nflt_verify",
    "cmd_optimize",
    "cmd_bench",
    "cmd_gp_plotdata",
]

EXIT_OK = 0
EXIT_UNEQUAL = 1
EXIT_CONFIG = 2
EXIT_EVALUATOR = 3


class ConfigError(ValueError):
    pass


class EvaluatorTimeout(RuntimeError):
    """External evaluator did not answer within the per-call timeout."""


class EvaluatorProtocol(RuntimeError):
    """External evaluator wrote something that is not a finite number."""


class ExternalEvaluator:
    """Line-oriented bridge to a child process computing the fitness.

    Protocol: one space-separated coordinate line on the child's stdin per
    evaluation, one finite decimal number on its stdout in reply. The child
    is started once and serves one run.
    """

    def __init__(self, command, timeout: float = 10.0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = float(timeout)
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def __call__(self, x) -> float:
        proc = self._proc
        if proc.poll() is not None:
            raise EvaluatorProtocol(f"evaluator exited with code {proc.returncode}")
        line = " ".join(fmt(float(v)) for v in np.asarray(x, dtype=float)) + "\n"
        try:
            proc.stdin.write(line)
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise EvaluatorProtocol(f"evaluator pipe broke: {exc}") from None
        ready, _, _ = select.select([proc.stdout], [], [], self.timeout)
        if not ready:
            proc.kill()
            raise EvaluatorTimeout(f"no reply within {self.timeout} s")
        reply = proc.stdout.readline()
        if reply == "":
            raise EvaluatorProtocol("evaluator closed its output")
        try:
            value = float(reply.strip())
        except ValueError:
            raise EvaluatorProtocol(f"non-numeric reply {reply.strip()!r}") from None
        if not np.isfinite(value):
            raise EvaluatorProtocol(f"non-finite reply {reply.strip()!r}")
        return value

    def close(self):
        proc = self._proc
        if proc.poll() is None:
            try:
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                proc.kill()


def external_evaluator_bridge(spec: dict) -> FitnessFunction:
    """FitnessFunction backed by a child process; call accounting unchanged.

    ``spec`` needs "command", "lower", "upper", optionally "timeout" and
    "budget".
    """
    for key in ("command", "lower", "upper"):
        if key not in spec:
            raise ConfigError(f"evaluator spec needs {key!r}")
    domain = BoxDomain(np.asarray(spec["lower"], dtype=float), np.asarray(spec["upper"], dtype=float))
    evaluator = ExternalEvaluator(spec["command"], timeout=spec.get("timeout", 10.0))
    f = FitnessFunction(domain, evaluator, budget=spec.get("budget"))
    f.bridge = evaluator  # keep the handle so callers can close the child
    return f


# ---------------------------------------------------------------------------
# configuration plumbing

DEFAULTS = {
    "nflt-verify": {
        "m": 5,
        "r": 3,
        "k": 5,
        "policies": ["lexicographic", "reverse", "shuffle:0"],
        "class_name": "full",
        "cap": nflt.DEFAULT_CAP,
        "seed": 0,
        "out": "out",
    },
    "optimize": {
        "algorithm": "bo",
        "landscape": "sphere",
        "dimension": 2,
        "budget": 60,
        "seed": 0,
        "out": "out",
        "evaluator": None,
        "bo": {},
        "sa": {},
        "ga": {},
        "es": {},
    },
    "bench": {
        "algorithms": ["bo", "random"],
        "landscapes": ["sphere:2", "needle:2"],
        "seeds": 20,
        "budget": 60,
        "jobs": 1,
        "seed": 0,
        "out": "out",
        "bo": {},
        "sa": {},
        "ga": {},
        "es": {},
    },
    "gp-plotdata": {
        "data": None,
        "inline": None,
        "grid": 201,
        "seed": 0,
        "out": "out",
        "xi": None,
        "interpolate": True,
    },
}


def load_effective_config(command: str, args: argparse.Namespace) -> dict:
    config = json.loads(json.dumps(DEFAULTS[command]))  # deep copy
    if args.config is not None:
        try:
            with open(args.config) as handle:
                loaded = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(config)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        config.update(loaded)
    for key, value in vars(args).items():
        if key in ("config", "command", "handler") or value is None:
            continue
        if key in config:
            config[key] = value
    return config


def _echo_config(config: dict, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    write_json(os.path.join(out_dir, "effective-config.json"), config)


def _parse_landscape_spec(spec: str):
    name, _, dim = spec.partition(":")
    if not dim:
        raise ConfigError(f"landscape spec {spec!r} must look like name:dimension")
    try:
        return bench.landscape_by_name(name.strip(), int(dim))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_algorithm(name: str, config: dict):
    try:
        if name == "random":
            return metaheuristics.RandomSearch()
        if name == "sa":
            return metaheuristics.SimulatedAnnealing(metaheuristics.SaConfig(**config.get("sa", {})))
        if name == "ga":
            return metaheuristics.GeneticAlgorithm(metaheuristics.GaConfig(**config.get("ga", {})))
        if name == "es":
            return metaheuristics.EvolutionStrategy(metaheuristics.EsConfig(**config.get("es", {})))
        if name == "bo":
            return bayesopt.BayesianOptimization(_bo_config(config))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {name} configuration: {exc}") from None
    raise ConfigError(f"unknown algorithm {name!r} (have bo, random, sa, ga, es)")


def _bo_config(config: dict, budget: int | None = None) -> bayesopt.BoConfig:
    options = dict(config.get("bo", {}))
    if budget is not None and "iterations" not in options:
        init = options.get("init_design_size", 8)
        if budget <= init:
            raise ConfigError(f"budget {budget} must exceed the initial design size {init}")
        options["iterations"] = budget - init
    try:
        return bayesopt.BoConfig(**options)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad bo configuration: {exc}") from None


def trace_csv_text(trace) -> str:
    xs = trace.dataset.x_array()
    ys = trace.dataset.y_array()
    d = xs.shape[1]
    header = "iteration," + ",".join(f"x{i}" for i in range(d)) + ",y,best_so_far"
    lines = [header]
    for i in range(len(ys)):
        coords = ",".join(fmt(float(v)) for v in xs[i])
        lines.append(f"{i + 1},{coords},{fmt(float(ys[i]))},{fmt(float(trace.best_so_far[i]))}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_nflt_verify(config: dict) -> int:
    try:
        policies = [nflt.make_policy(p) for p in config["policies"]]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        report = nflt.verify_nflt(
            policies,
            m=int(config["m"]),
            r=int(config["r"]),
            k=int(config["k"]),
            cap=int(config["cap"]),
            class_name=config["class_name"],
        )
    except nflt.ClassTooLarge as exc:
        raise ConfigError(str(exc)) from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    out_dir = config["out"]
    _echo_config(config, out_dir)
    write_json(os.path.join(out_dir, "nflt-report.json"), report.to_dict())
    print(f"verdict: {report.verdict} "
          f"(class={report.class_name}, size={report.class_size}, k={report.k}, "
          f"{report.wall_time_s:.3f}s)")
    if not report.equal:
        print(f"first difference: {json.dumps(report.first_difference)}")
        for name in report.policy_names:
            fractions = [
                f"{report.success.counts[name][j]}/{report.class_size}"
                for j in range(report.k)
            ]
            print(f"  success[{name}]: {' '.join(fractions)}")
        return EXIT_UNEQUAL
    return EXIT_OK


def cmd_optimize(config: dict) -> int:
    seed = int(config["seed"])
    budget = int(config["budget"])
    algorithm_name = config["algorithm"]
    rng = RngStream(seed)

    bridge = None
    try:
        if config.get("evaluator"):
            f = external_evaluator_bridge({**config["evaluator"], "budget": budget})
            bridge = f.bridge
            domain = f.domain
            landscape_label = "external"
        else:
            landscape = bench.landscape_by_name(config["landscape"], int(config["dimension"]))
            f = landscape.fitness(budget)
            domain = landscape.domain
            landscape_label = landscape.name

        if algorithm_name == "bo":
            algorithm = bayesopt.BayesianOptimization(_bo_config(config, budget))
        else:
            algorithm = build_algorithm(algorithm_name, config)

        trace = run_algorithm(algorithm, f, domain, budget, rng)
    except (EvaluatorTimeout, EvaluatorProtocol) as exc:
        print(f"evaluator failure: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR
    finally:
        if bridge is not None:
            bridge.close()

    out_dir = config["out"]
    _echo_config(config, out_dir)
    atomic_write_text(os.path.join(out_dir, "trace.csv"), trace_csv_text(trace))
    best_index = int(np.argmax(trace.dataset.y_array()))
    write_json(
        os.path.join(out_dir, "summary.json"),
        {
            "algorithm": algorithm_name,
            "landscape": landscape_label,
            "seed": seed,
            "budget": budget,
            "evaluations": len(trace),
            "best_value": trace.best_value,
            "best_point": [float(v) for v in trace.dataset.records[best_index][0]],
            "clamped_evaluations": len(trace.clamped),
        },
    )
    print(f"best {fmt(trace.best_value)} after {len(trace)} evaluations -> {out_dir}")
    return EXIT_OK


def cmd_bench(config: dict) -> int:
    landscapes = [_parse_landscape_spec(s) for s in config["landscapes"]]
    budget = int(config["budget"])
    algorithms = []
    for name in config["algorithms"]:
        if name == "bo":
            algorithms.append((name, bayesopt.BayesianOptimization(_bo_config(config, budget))))
        else:
            algorithms.append((name, build_algorithm(name, config)))

    seeds_config = config["seeds"]
    master = int(config["seed"])
    if isinstance(seeds_config, int):
        # run i uses stream seed master+i: documented, paired across algorithms
        seeds = [master + i for i in range(seeds_config)]
    else:
        seeds = [int(s) for s in seeds_config]
    if not seeds:
        raise ConfigError("need at least one seed")

    results = bench.run_experiment(algorithms, landscapes, seeds, budget, jobs=int(config["jobs"]))
    out_dir = config["out"]
    _echo_config(config, out_dir)
    atomic_write_text(os.path.join(out_dir, "results.csv"), bench.results_csv_text(results))
    summary = bench.summarize(results)
    write_json(os.path.join(out_dir, "summary.json"), summary)
    for key, cell in summary["cells"].items():
        print(f"{key}: median_evals={cell['median_evals']} dnf={cell['dnf']}/{cell['runs']}")
    for key, comparison in summary["comparisons"].items():
        print(
            f"{key} vs {comparison['baseline']}: wins {comparison['wins_a']}-{comparison['wins_b']}"
            f" (ties {comparison['ties']}), p={comparison['p_value']:.4f} -> {comparison['verdict']}"
        )
    return EXIT_OK


def _load_xy(config: dict) -> Dataset:
    if config.get("inline"):
        rows = config["inline"]
    elif config.get("data"):
        rows = []
        try:
            with open(config["data"]) as handle:
                for line in handle:
                    line = line.strip()
                    if not line or line.startswith("#"):
                        continue
                    parts = line.replace(",", " ").split()
                    rows.append([float(p) for p in parts])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read data file: {exc}") from None
    else:
        raise ConfigError("gp-plotdata needs --data FILE or inline data in the config")
    dataset = Dataset()
    for row in rows:
        if len(row) != 2:
            raise ConfigError("gp-plotdata expects 1-D (x, y) rows")
        dataset.append([float(row[0])], float(row[1]))
    if len(dataset) < 2:
        raise ConfigError("need at least two observations")
    return dataset


def cmd_gp_plotdata(config: dict) -> int:
    dataset = _load_xy(config)
    rng = RngStream(int(config["seed"]))
    if config.get("interpolate", True):
        # observations are exact: pin the noise to the numerical floor so
        # the band collapses at the data sites
        fit_config = gp.GpFitConfig(noise_range=(1e-10, 1e-9))
    else:
        fit_config = gp.GpFitConfig()
    model = gp.gp_fit(dataset, fit_config, rng)

    xs = dataset.x_array()[:, 0]
    lo, hi = float(np.min(xs)), float(np.max(xs))
    pad = 0.1 * (hi - lo if hi > lo else 1.0)
    grid = np.linspace(lo - pad, hi + pad, int(config["grid"]))
    means, variances = model.posterior_batch(grid[:, None])
    sd = np.sqrt(variances)
    best = float(np.max(dataset.y_array()))
    xi = config["xi"]
    xi = 0.01 * abs(best) if xi is None else float(xi)
    ei = bayesopt.expected_improvement(means, variances, best, xi)
    x_star = float(grid[int(np.argmax(ei))])

    lines = [
        "# columns: x mean sd ei",
        "# band: mean +/- 2*sd",
        f"# x_star {fmt(x_star)}",
        f"# hyperparameters: {json.dumps(json.loads(model.to_json())['hyperparameters'])}",
    ]
    for i in range(grid.size):
        lines.append(
            f"{fmt(float(grid[i]))} {fmt(float(means[i]))} {fmt(float(sd[i]))} {fmt(float(ei[i]))}"
        )
    out_dir = config["out"]
    _echo_config(config, out_dir)
    atomic_write_text(os.path.join(out_dir, "gp-plotdata.txt"), "\n".join(lines) + "\n")
    print(f"x_star = {fmt(x_star)} -> {out_dir}/gp-plotdata.txt")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blackboxlab",
        description="Black-box optimization toolkit: exact no-free-lunch checks, "
        "GP-based Bayesian optimization, metaheuristics, benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("nflt-verify", help="exact trace-statistic comparison over a finite class")
    common(p)
    p.add_argument("--m", type=int, help="domain size |X|")
    p.add_argument("--r", type=int, help="value count |Y|")
    p.add_argument("--k", type=int, help="trace length")
    p.add_argument("--policies", type=lambda s: s.split(","), help="comma-separated policy names")
    p.add_argument("--class-name", dest="class_name", choices=["full", "monotone"])
    p.add_argument("--cap", type=int, help="enumeration cap")
    p.set_defaults(handler=cmd_nflt_verify)

    p = sub.add_parser("optimize", help="run one algorithm on one fitness")
    common(p)
    p.add_argument("--algorithm", help="bo | random | sa | ga | es")
    p.add_argument("--landscape", help="sphere | rastrigin | needle | step")
    p.add_argument("--dimension", type=int)
    p.add_argument("--budget", type=int)
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("bench", help="algorithm x landscape x seed grid with summaries")
    common(p)
    p.add_argument("--algorithms", type=lambda s: s.split(","))
    p.add_argument("--landscapes", type=lambda s: s.split(","), help="name:dimension list")
    p.add_argument("--seeds", type=int, help="number of paired seeds")
    p.add_argument("--budget", type=int)
    p.add_argument("--jobs", type=int, help="parallel worker processes")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("gp-plotdata", help="posterior mean/sd band and EI on a 1-D grid")
    common(p)
    p.add_argument("--data", help="text file with x y per line")
    p.add_argument("--grid", type=int, help="grid resolution")
    p.set_defaults(handler=cmd_gp_plotdata)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_effective_config(args.command, args)
        return args.handler(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
