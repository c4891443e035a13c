"""Plan execution: build the problem, run every (variant, seed), write outputs.

Output directory layout:

    <variant>_<seed>.csv          per-round metrics
    summary.json                  per-variant means and the list of every file written
    trajectory_<variant>.csv      2-D projection of the first seed's iterates (optional)
    bounds_<variant>_<seed>.json  theorem-mode bound reports
    trace_<variant>_<seed>.npz    iterates and update norms (save_trace)
    *.png                         figures (--figures)
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dpfedsim.analysis.bounds import (
    BoundInputs,
    TheoremViolation,
    bound_report,
    c_hat_threshold,
    check_theorem_mode,
    theorem_mode_schedule,
)
from dpfedsim.analysis.metrics import metrics_csv_text
from dpfedsim.analysis.projection import trajectory_projection_2d
from dpfedsim.cli.config import ConfigError, ExperimentPlan, parse_config, parse_grid
from dpfedsim.fedopt.engine import (
    DP_NORM,
    FEDAVG,
    DivergedRunError,
    IterateTrace,
    RunConfig,
    init_point,
    run_federated,
)
from dpfedsim.fedopt.operators import SensitivityPolicy
from dpfedsim.fedopt.schedule import ScheduleSpec
from dpfedsim.objectives.featureio import load_feature_matrix
from dpfedsim.objectives.logistic import LogisticClient, generate_gaussian_classes
from dpfedsim.objectives.partition import partition_by_label_shards
from dpfedsim.objectives.suite import (
    ProblemSuite,
    generate_quadratic_suite,
    heterogeneity_profile,
    solve_global_optimum,
)
from dpfedsim.privacy import PrivacyBudget, PrivacyConfigError
from dpfedsim.streams import StreamKey

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DIVERGED = 2
EXIT_CONFIG = 3


@dataclass
class Problem:
    suite: ProblemSuite
    w_star: np.ndarray
    heterogeneity: np.ndarray
    L: float
    data: tuple | None = None  # (features, labels, assignment) for logistic problems
    info: dict = field(default_factory=dict)


def build_problem(plan: ExperimentPlan) -> Problem:
    """The plan's problem instance with w*, L and the heterogeneity profile."""
    s = plan.settings
    key = StreamKey(s["suite_seed"]).child("suite")
    data = None
    if s["problem"] == "quadratic":
        suite = generate_quadratic_suite(key, s["n"], s["d"], s["rank"], s["factor_std"])
    else:
        if s["features"]:
            try:
                features, labels, classes = load_feature_matrix(s["features"])
            except (OSError, ValueError) as exc:
                raise ConfigError(str(exc), "features", plan.lines.get("features")) from None
        else:
            classes = s["classes"]
            features, labels = generate_gaussian_classes(
                key.child("data"), classes, s["per_class"], s["num_features"], s["separation"])
        try:
            assignment = partition_by_label_shards(labels, s["n"], s["shards"],
                                                   key.child("partition"), truncate=True)
        except ValueError as exc:
            raise ConfigError(str(exc), "shards", plan.lines.get("shards")) from None
        clients = [LogisticClient(features[idx], labels[idx], classes, s["l2"])
                   for _, idx in sorted(assignment.client_to_sample_indices.items())]
        suite = ProblemSuite(clients)
        data = (features, labels, assignment)
    w_star = solve_global_optimum(suite)
    het = heterogeneity_profile(suite, w_star)
    info = {
        "problem": s["problem"],
        "n": suite.n,
        "d": suite.dimension,
        "L": suite.smoothness_bound,
        "f_star": suite.optimal_value(),
        "heterogeneity_max": float(het.max()),
        "heterogeneity_mean": float(het.mean()),
    }
    if data is not None:
        info["centralized_accuracy"] = training_accuracy(suite, w_star)
        info["max_classes_per_client"] = max(data[2].classes_per_client(data[1]).values())
    return Problem(suite, w_star, het, suite.smoothness_bound, data, info)


def training_accuracy(suite: ProblemSuite, w: np.ndarray) -> float:
    correct = sum(int(np.sum(c.predict(w) == c.labels)) for c in suite.clients)
    return correct / sum(c.num_samples for c in suite.clients)


def privacy_budget(plan: ExperimentPlan, problem: Problem) -> PrivacyBudget:
    s = plan.settings
    try:
        budget = PrivacyBudget(s["epsilon"], s["delta"], problem.suite.n, problem.suite.dimension,
                               s["q"])
        budget.rho
    except PrivacyConfigError as exc:
        raise ConfigError(str(exc), "n", plan.lines.get("n")) from None
    return budget


@dataclass
class TheoremSetup:
    eta: float
    K: int
    C: float
    inputs: BoundInputs


def theorem_setup(plan: ExperimentPlan, problem: Problem, init: np.ndarray) -> TheoremSetup:
    """Constant eta, K and C = C_hat E chosen to meet the theorem hypotheses."""
    s = plan.settings
    rho = privacy_budget(plan, problem).rho
    c_hat = s["C_hat"] if s["C_hat"] is not None else c_hat_threshold(problem.L, problem.heterogeneity)
    dist = float(np.linalg.norm(init - problem.w_star))
    gamma = s["gamma"] if s["gamma"] is not None else problem.L * dist
    inputs = BoundInputs(problem.L, rho, c_hat, s["E"], dist, problem.heterogeneity,
                         s["alpha"], gamma)
    try:
        check_theorem_mode(inputs)
    except TheoremViolation as exc:
        raise ConfigError(str(exc), "theorem_mode", plan.lines.get("theorem_mode")) from None
    eta, K = theorem_mode_schedule(problem.L, rho, c_hat, s["E"], s["alpha"], gamma)
    inputs.K = K
    return TheoremSetup(eta, K, c_hat * s["E"], inputs)


def make_run_config(plan: ExperimentPlan, variant: str, seed: int, problem: Problem,
                    keep_iterates: bool) -> tuple[RunConfig, TheoremSetup | None]:
    s = plan.settings
    init = init_point(s["init"], problem.suite, StreamKey(seed))
    setup = None
    if s["theorem_mode"]:
        setup = theorem_setup(plan, problem, init)
        rounds, C = setup.K, setup.C
        schedule = ScheduleSpec(setup.eta, constant_override=setup.eta)
        keep_iterates = True
    else:
        rounds, C = s["K"], s["C"]
        schedule = ScheduleSpec(s["eta0"], s["decay"], beta_equals_eta=s["beta0"] is None,
                                server_momentum=s["momentum"], beta0=s["beta0"])
    if variant == FEDAVG:
        policy, budget = SensitivityPolicy(), None
    else:
        make = SensitivityPolicy.normalize if variant == DP_NORM else SensitivityPolicy.clip
        policy, budget = make(C), privacy_budget(plan, problem)
    if s["r"] > problem.suite.n:
        raise ConfigError(f"r must be <= n ({problem.suite.n})", "r", plan.lines.get("r"))
    config = RunConfig(variant, problem.suite, rounds, s["E"], s["r"], schedule, init, seed,
                       policy, budget, s["average_by_actual"], keep_iterates)
    return config, setup


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


class _Outputs:
    """Tracks files written so a failed run can remove them."""

    def __init__(self, directory: Path):
        self.directory = directory
        self.created_dir = not directory.exists()
        directory.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.directory / name
        self.files.append(p)
        return p

    def write_text(self, name: str, text: str) -> str:
        self.path(name).write_text(text)
        return name

    def rollback(self) -> None:
        for p in self.files:
            p.unlink(missing_ok=True)
        if self.created_dir:
            try:
                self.directory.rmdir()
            except OSError:
                pass


def _trajectory_csv(points: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["round", "x", "y"])
    for k, (x, y) in enumerate(points):
        writer.writerow([k, repr(float(x)), repr(float(y))])
    return buf.getvalue()


def execute_plan(plan: ExperimentPlan, threads: int = 1, figures: bool = False) -> dict:
    """Run the plan and return the summary; raises on config errors or divergence."""
    s = plan.settings
    if s["trajectory"] and len(plan.variants) > 2:
        raise ConfigError("trajectory projection takes at most two variants", "trajectory",
                          plan.lines.get("trajectory"))
    if s["theorem_mode"] and s["r"] != s["n"]:
        raise ConfigError("theorem mode needs full participation (r = n)", "r",
                          plan.lines.get("r"))
    problem = build_problem(plan)
    out = _Outputs(plan.output_directory)
    try:
        return _execute(plan, problem, out, threads, figures)
    except BaseException:
        out.rollback()
        raise


def _execute(plan, problem, out, threads, figures) -> dict:
    s = plan.settings
    keep = s["trajectory"] or s["save_trace"] or s["theorem_mode"]
    summary = {
        "config": str(plan.source) if plan.source else None,
        "variants_run": list(plan.variants),
        "seeds": list(plan.seeds),
        "suite": dict(problem.info),
        "variants": {},
        "trajectories": {},
        "figures": [],
    }
    first_traces: dict[str, IterateTrace] = {}
    all_records: dict[str, list] = {}
    for variant in plan.variants:
        runs = []
        for seed in plan.seeds:
            config, setup = make_run_config(plan, variant, seed, problem, keep)
            log.info("running %s seed %d (K=%d)", variant, seed, config.rounds)
            trace = run_federated(config, threads=threads)
            run = {"seed": seed, **trace.summary()}
            run["csv"] = out.write_text(f"{variant}_{seed}.csv", metrics_csv_text(trace.records))
            if problem.data is not None:
                run["train_accuracy"] = training_accuracy(problem.suite, trace.final)
            if setup is not None:
                run["eta"], run["C"] = setup.eta, setup.C
                report = bound_report(variant, problem.suite, trace, problem.w_star, setup.inputs)
                run["bound_report"] = out.write_text(f"bounds_{variant}_{seed}.json",
                                                     dump_json(report.to_dict()))
            if s["save_trace"]:
                name = f"trace_{variant}_{seed}.npz"
                np.savez(out.path(name), iterates=trace.iterates, update_norms=trace.update_norms,
                         algorithm=variant, seed=seed, E=config.local_steps,
                         C=config.policy.scale if config.policy.scale else np.nan,
                         init_distance=float(np.linalg.norm(config.init - problem.w_star)))
                run["trace"] = name
            runs.append(run)
            if seed == plan.seeds[0]:
                first_traces[variant] = trace
                all_records[variant] = trace.records
        summary["variants"][variant] = {
            "runs": runs,
            "mean_final_suboptimality": float(np.mean([r["final_suboptimality"] for r in runs])),
            "mean_suboptimality": float(np.mean([r["mean_suboptimality"] for r in runs])),
        }
    projection = None
    if s["trajectory"]:
        names = list(plan.variants)
        a = first_traces[names[0]].iterates
        b = first_traces[names[-1]].iterates
        projection = trajectory_projection_2d(a, b, problem.w_star, s["smoothing"])
        summary["trajectory_anchor"] = projection.anchor
        summary["trajectory_degenerate"] = projection.degenerate
        summary["trajectories"][names[0]] = out.write_text(
            f"trajectory_{names[0]}.csv", _trajectory_csv(projection.first))
        if len(names) > 1:
            summary["trajectories"][names[-1]] = out.write_text(
                f"trajectory_{names[-1]}.csv", _trajectory_csv(projection.second))
    if figures:
        from dpfedsim.cli.plotting import render_figures

        summary["figures"] = render_figures(out, all_records, projection, list(plan.variants))
    out.write_text("summary.json", dump_json(summary))
    return summary


def run_plan(plan: ExperimentPlan, threads: int = 1, figures: bool = False) -> int:
    """Execute ``plan``; 0 on success, 2 on a diverged run, 3 on a config error."""
    try:
        execute_plan(plan, threads, figures)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except DivergedRunError as exc:
        log.error("%s", exc)
        return EXIT_DIVERGED
    return EXIT_OK


def _point_label(point: dict) -> str:
    return "_".join(f"{k}={v}" for k, v in point.items())


def sweep(config_path, grid_path, output: Path | None = None, threads: int = 1,
          overrides: dict | None = None) -> int:
    """Run the config once per grid point, sequentially, into ``<output>/<key=value_...>``.

    A diverged point is recorded as such and the sweep continues.
    """
    try:
        grid = parse_grid(grid_path)
        base = parse_config(config_path, overrides)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    root = Path(output) if output else base.output_directory
    keys = list(grid)
    points = []
    for values in itertools.product(*(grid[k] for k in keys)):
        point = dict(zip(keys, values))
        label = _point_label(point)
        try:
            plan = parse_config(config_path, {**(overrides or {}), **point,
                                              "output": str(root / label)})
            summary = execute_plan(plan, threads)
        except ConfigError as exc:
            log.error("config error at %s: %s", label, exc)
            return EXIT_CONFIG
        except DivergedRunError as exc:
            log.warning("%s diverged: %s", label, exc)
            points.append({"point": point, "directory": label, "status": "diverged"})
            continue
        points.append({
            "point": point,
            "directory": label,
            "status": "ok",
            "mean_final_suboptimality": {v: summary["variants"][v]["mean_final_suboptimality"]
                                         for v in plan.variants},
        })
    root.mkdir(parents=True, exist_ok=True)
    (root / "sweep.json").write_text(dump_json({"grid": grid, "points": points}))
    return EXIT_OK


def bounds_from_trace(plan: ExperimentPlan, trace_path) -> dict:
    """Bound report for a saved theorem-mode trace, recomputed from the config's problem."""
    with np.load(trace_path) as npz:
        iterates = npz["iterates"]
        norms = npz["update_norms"]
        variant = str(npz["algorithm"])
        seed = int(npz["seed"])
    problem = build_problem(plan)
    init = init_point(plan.settings["init"], problem.suite, StreamKey(seed))
    if not np.allclose(init, iterates[0], rtol=0, atol=1e-12):
        raise ConfigError("trace does not start at this config's initialization", "init",
                          plan.lines.get("init"))
    setup = theorem_setup(plan, problem, init)
    trace = IterateTrace([], iterates[-1], 0, iterates[0], None, iterates, norms)
    return bound_report(variant, problem.suite, trace, problem.w_star, setup.inputs).to_dict()


__all__ = [
    "EXIT_CONFIG", "EXIT_DIVERGED", "EXIT_OK", "Problem", "build_problem",
    "bounds_from_trace", "execute_plan", "make_run_config", "run_plan", "sweep",
    "theorem_setup", "training_accuracy",
]
