"""Experiment orchestration: JSON configs, replication ensembles, Monte
Carlo statistics, probes, and CSV/JSON persistence.

The config document is a single versioned JSON object; unknown keys are
rejected so a config that runs is a config that is fully understood.
Schema (defaults in parentheses):

    {
      "schema_version": 1,
      "problem":  {"kind": "strongly_monotone" | "linear_svi" |
                   "scaled_monotone" | "constant_noise" | "negative_control",
                   ... generator parameters ...,
                   "blocks": [n_1, ...]            (single block)},
      "solver":   {"stepsize": float | [floats],
                   "schedule": {"theta", "mu", "a", "b"} | [per-agent ...],
                   "max_iterations": int,
                   "coordination": "centralized" (default) | "distributed",
                   "master_seed": int (0),
                   "diagnostics": bool (false)},
      "replications": int (1),
      "x0": [floats] (origin),
      "merits": {"residual_alpha": float (stepsize),
                 "dgap_a": float, "dgap_b": float   (off unless both given),
                 "track_distance": bool (true)},
      "rate_fit_window": [k_lo, k_hi]   (optional),
      "epsilon": float                  (optional; enables K_eps),
      "threads": int (1)
    }

Result CSV columns: k, mean_r2, stderr_r2, mean_dist2, mean_dgap, cum_calls.
The JSON summary carries the config hash, K_eps, the fitted slope, and the
per-iteration arrays needed by the constants cross-check.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ProblemInstance, RngStreamKey, SolverConfig, validate
from .errors import ConfigError
from .merit import d_gap
from .projection import feasible_set_from_config
from .sampling import SampleSchedule, batch_mean, error_decay_probe
from .solver import fejer_audit, martingale_probe, run

SCHEMA_VERSION = 1


def _check_keys(obj, allowed, where):
    extra = set(obj) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys {sorted(extra)} in {where}")


def problem_from_config(cfg) -> ProblemInstance:
    """Instantiate a built-in problem from its JSON description."""
    from . import problems as P

    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    blocks = cfg.pop("blocks", None)
    fset_cfg = cfg.pop("set", None)
    makers = {
        "strongly_monotone": (P.gen_strongly_monotone,
                              {"n", "seed", "noise_scale", "strong_modulus",
                               "psd_scale", "skew_scale", "center"}),
        "linear_svi": (P.gen_linear_svi, {"n", "seed", "noise_scale", "feasible"}),
        "scaled_monotone": (P.gen_scaled_monotone, {"n", "seed", "noise_scale"}),
        "constant_noise": (P.gen_constant_noise, {"sigma", "n"}),
        "negative_control": (P.gen_negative_control, {"n", "noise_scale"}),
    }
    if kind not in makers:
        raise ConfigError(f"unknown problem kind {kind!r}")
    maker, allowed = makers[kind]
    _check_keys(cfg, allowed, f"problem kind {kind!r}")
    if fset_cfg is not None:
        if kind != "strongly_monotone":
            raise ConfigError("'set' override is only supported for strongly_monotone")
        cfg["feasible"] = feasible_set_from_config(fset_cfg)
    problem = maker(**cfg)
    if blocks is not None:
        problem = problem.with_blocks(blocks)
    return problem


def solver_config_from_config(cfg) -> SolverConfig:
    _check_keys(cfg, {"stepsize", "schedule", "max_iterations", "coordination",
                      "master_seed", "diagnostics", "residual_floor"}, "solver")
    return SolverConfig(
        stepsize=cfg["stepsize"],
        schedule=SampleSchedule.from_config(cfg["schedule"]),
        max_iterations=int(cfg["max_iterations"]),
        coordination=cfg.get("coordination", "centralized"),
        master_seed=int(cfg.get("master_seed", 0)),
        diagnostics=bool(cfg.get("diagnostics", False)),
        residual_floor=float(cfg.get("residual_floor", 1e-24)),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemInstance
    solver: SolverConfig
    replications: int = 1
    x0: np.ndarray | None = None
    residual_alpha: float | None = None
    dgap_a: float | None = None
    dgap_b: float | None = None
    track_distance: bool = True
    rate_fit_window: tuple | None = None
    epsilon: float | None = None
    threads: int = 1
    config_hash: str = ""

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.rate_fit_window is not None:
            lo, hi = self.rate_fit_window
            if not (0 < lo < hi <= self.solver.max_iterations):
                raise ConfigError("rate_fit_window needs 0 < k_lo < k_hi <= max_iterations")
        if (self.dgap_a is None) != (self.dgap_b is None):
            raise ConfigError("dgap tracking needs both dgap_a and dgap_b")


def config_hash(document) -> str:
    return hashlib.sha256(
        json.dumps(document, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()[:16]


def experiment_from_config(document) -> ExperimentConfig:
    _check_keys(document, {"schema_version", "problem", "solver", "replications",
                           "x0", "merits", "rate_fit_window", "epsilon", "threads"},
                "experiment config")
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}")
    merits = dict(document.get("merits", {}))
    _check_keys(merits, {"residual_alpha", "dgap_a", "dgap_b", "track_distance"},
                "merits")
    problem = problem_from_config(document["problem"])
    solver = solver_config_from_config(document["solver"])
    window = document.get("rate_fit_window")
    return ExperimentConfig(
        problem=problem,
        solver=solver,
        replications=int(document.get("replications", 1)),
        x0=None if document.get("x0") is None else np.asarray(document["x0"], float),
        residual_alpha=merits.get("residual_alpha"),
        dgap_a=merits.get("dgap_a"),
        dgap_b=merits.get("dgap_b"),
        track_distance=bool(merits.get("track_distance", True)),
        rate_fit_window=None if window is None else (int(window[0]), int(window[1])),
        epsilon=document.get("epsilon"),
        threads=int(document.get("threads", 1)),
        config_hash=config_hash(document),
    )


def effective_mean_operator(problem: ProblemInstance, n_samples: int = 100_000,
                            master_seed: int = 987_654_321):
    """Closed-form mean operator, or a frozen-stream batch-mean surrogate.

    Returns (operator, estimated): ``estimated`` is True when the surrogate
    is in use, so outputs can be labeled accordingly.
    """
    if problem.mean_operator is not None:
        return problem.mean_operator, False

    def surrogate(x):
        digest = hashlib.sha256(np.asarray(x, float).tobytes()).digest()
        key = RngStreamKey(master_seed, sample=int.from_bytes(digest[:4], "little"))
        return batch_mean(problem, x, n_samples, key).mean

    return surrogate, True


@dataclass
class ExperimentResult:
    """Aggregated per-iteration ensemble statistics plus derived quantities."""

    mean_r2: np.ndarray | None
    stderr_r2: np.ndarray | None
    mean_dist2: np.ndarray | None
    mean_dgap: np.ndarray | None
    cum_calls: np.ndarray
    replications: int
    k_eps: int | None
    epsilon: float | None
    nonconvergence: bool
    slope: float | None
    intercept: float | None
    rate_fit_window: tuple | None
    config_hash: str
    merit_mode: str
    traces: list

    def k_eps_for(self, eps: float):
        """First index with mean r^2 <= eps; None when never reached."""
        if self.mean_r2 is None:
            return None
        hits = np.nonzero(self.mean_r2 <= eps)[0]
        return int(hits[0]) if hits.size else None

    def to_csv(self, path):
        n = len(self.cum_calls)
        nan = np.full(n, np.nan)
        cols = [
            ("k", np.arange(n)),
            ("mean_r2", self.mean_r2 if self.mean_r2 is not None else nan),
            ("stderr_r2", self.stderr_r2 if self.stderr_r2 is not None else nan),
            ("mean_dist2", self.mean_dist2 if self.mean_dist2 is not None else nan),
            ("mean_dgap", self.mean_dgap if self.mean_dgap is not None else nan),
            ("cum_calls", self.cum_calls),
        ]
        with open(path, "w") as fh:
            fh.write(",".join(name for name, _ in cols) + "\n")
            for row in range(n):
                cells = []
                for name, arr in cols:
                    v = arr[row]
                    cells.append(str(int(v)) if name in ("k", "cum_calls") else repr(float(v)))
                fh.write(",".join(cells) + "\n")

    def summary(self):
        out = {
            "replications": self.replications,
            "config_hash": self.config_hash,
            "merit_mode": self.merit_mode,
            "epsilon": self.epsilon,
            "k_eps": self.k_eps,
            "nonconvergence": self.nonconvergence,
            "slope": self.slope,
            "intercept": self.intercept,
            "rate_fit_window": list(self.rate_fit_window) if self.rate_fit_window else None,
            "cum_calls": [int(v) for v in self.cum_calls],
        }
        for name in ("mean_r2", "stderr_r2", "mean_dist2", "mean_dgap"):
            arr = getattr(self, name)
            out[name] = None if arr is None else [float(v) for v in arr]
        return out


def fit_loglog_slope(values, window):
    """Least-squares slope/intercept of ln(values[k]) against ln(k) over
    k in [window[0], window[1]]."""
    lo, hi = window
    ks = np.arange(max(lo, 1), hi + 1)
    vals = np.asarray(values, dtype=float)[ks]
    mask = vals > 0
    if mask.sum() < 2:
        return None, None
    slope, intercept = np.polyfit(np.log(ks[mask]), np.log(vals[mask]), 1)
    return float(slope), float(intercept)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Execute the replication ensemble and aggregate per-iteration stats.

    Replications run independently (optionally on a thread pool) and are
    merged by index, so results do not depend on execution order.  Traces
    shorter than max_iterations (early residual-floor stops) are carried
    forward at their final value for ensemble averaging.
    """
    validate(config.problem, config.solver)
    problem, solver = config.problem, config.solver
    R = config.replications
    K = solver.max_iterations

    def one(rep):
        return run(problem, solver, replication=rep, x0=config.x0, check=False)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            traces = list(pool.map(one, range(R)))
    else:
        traces = [one(rep) for rep in range(R)]

    T_op, estimated = (problem.mean_operator, False) if problem.mean_operator \
        else effective_mean_operator(problem)
    has_r2 = traces[0].r2 is not None
    has_dist = traces[0].dist2 is not None

    def padded(values, length):
        out = np.full(length, values[-1], dtype=float)
        out[:len(values)] = values
        return out

    mean_r2 = stderr_r2 = None
    if has_r2:
        stack = np.stack([padded(t.r2, K + 1) for t in traces])
        mean_r2 = stack.mean(axis=0)
        stderr_r2 = (stack.std(axis=0, ddof=1) / math.sqrt(R)) if R > 1 \
            else np.zeros(K + 1)
    mean_dist2 = None
    if has_dist and config.track_distance:
        stack = np.stack([padded(t.dist2, K + 1) for t in traces])
        mean_dist2 = stack.mean(axis=0)

    mean_dgap = None
    if config.dgap_a is not None:
        vals = np.zeros(K + 1)
        for t in traces:
            its = t.iterates
            gaps = np.array([d_gap(T_op, problem.feasible_set, x,
                                   config.dgap_a, config.dgap_b) for x in its])
            vals += padded(gaps, K + 1)
        mean_dgap = vals / R

    cum = padded(traces[0].cum_calls.astype(float), K + 1).astype(np.int64)
    for t in traces[1:]:
        if t.n_steps == traces[0].n_steps and not np.array_equal(t.cum_calls, traces[0].cum_calls):
            raise AssertionError("replications disagree on the call schedule")

    k_eps = None
    noncvg = False
    if config.epsilon is not None and mean_r2 is not None:
        hits = np.nonzero(mean_r2 <= config.epsilon)[0]
        k_eps = int(hits[0]) if hits.size else None
        noncvg = k_eps is None

    slope = intercept = None
    if config.rate_fit_window is not None and mean_r2 is not None:
        slope, intercept = fit_loglog_slope(mean_r2, config.rate_fit_window)

    return ExperimentResult(
        mean_r2=mean_r2, stderr_r2=stderr_r2, mean_dist2=mean_dist2,
        mean_dgap=mean_dgap, cum_calls=cum, replications=R,
        k_eps=k_eps, epsilon=config.epsilon, nonconvergence=noncvg,
        slope=slope, intercept=intercept, rate_fit_window=config.rate_fit_window,
        config_hash=config.config_hash,
        merit_mode="estimated" if estimated else "exact",
        traces=traces,
    )


def write_rows_csv(path, rows):
    """Write a list of homogeneous dicts as CSV with repr-formatted floats."""
    path = Path(path)
    header = list(rows[0])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(
                repr(float(r[h])) if isinstance(r[h], float) else str(r[h])
                for h in header) + "\n")


def probe(kind: str, params: dict, out_dir) -> dict:
    """Run one named probe and persist CSV rows plus a JSON verdict.

    Kinds: ``error_decay`` (1/N law), ``martingale`` (zero-mean increments),
    ``variance_scaling`` (ergodic baseline variance laws), ``fejer_audit``
    (pathwise recursion), ``pm_check`` (pseudo-monotonicity sampling).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = dict(params)
    verdict = {"kind": kind}
    rows = []

    if kind == "error_decay":
        problem = problem_from_config(params.pop("problem"))
        x = np.asarray(params.pop("x"), dtype=float)
        rows = error_decay_probe(problem, x, params.pop("N_grid"),
                                 int(params.pop("replications")),
                                 int(params.pop("master_seed", 0)))
        _check_keys(params, set(), "error_decay params")
        products = [r["product"] for r in rows]
        spread = (max(products) - min(products)) / max(max(products), 1e-300)
        verdict.update(passed=all(
            abs(r["product"] - products[0]) <= 4.0 * r["N"] * r["stderr"] + 1e-12
            for r in rows), product_spread=spread)
    elif kind == "martingale":
        problem = problem_from_config(params.pop("problem"))
        solver = solver_config_from_config(params.pop("solver"))
        x = np.asarray(params.pop("x"), dtype=float)
        res = martingale_probe(problem, solver, x, int(params.pop("replications")))
        _check_keys(params, set(), "martingale params")
        rows = [{"mean_dM": res.mean, "stderr": res.stderr,
                 "replications": res.replications}]
        verdict.update(passed=res.passed, detail=str(res))
    elif kind == "variance_scaling":
        from .baselines import variance_scaling_probe

        reps = int(params.pop("replications"))
        rows = variance_scaling_probe(
            params.pop("K_list"), float(params.pop("sigma")),
            float(params.pop("L", 1.0)), reps,
            int(params.pop("master_seed", 0)))
        _check_keys(params, set(), "variance_scaling params")
        ok = True
        for r in rows:
            for which in ("zK", "zbar"):
                emp, exact = r[f"var_{which}_emp"], r[f"var_{which}_exact"]
                # variance of a Gaussian sample variance: 2 sigma^4 / (R - 1)
                stderr = exact * math.sqrt(2.0 / max(reps - 1, 1)) if exact else 0.0
                ok = ok and abs(emp - exact) <= max(4.0 * stderr, 1e-12)
        verdict.update(passed=ok)
    elif kind == "fejer_audit":
        problem = problem_from_config(params.pop("problem"))
        solver = solver_config_from_config(params.pop("solver"))
        reps = int(params.pop("replications"))
        x0 = params.pop("x0", None)
        _check_keys(params, set(), "fejer_audit params")
        validate(problem, solver)
        worst = 0.0
        bad = 0
        for rep in range(reps):
            trace = run(problem, solver, replication=rep, check=False,
                        x0=None if x0 is None else np.asarray(x0, float))
            rep_report = fejer_audit(trace, problem.known_solutions[0], problem, solver)
            worst = max(worst, rep_report.max_rel_violation)
            bad += rep_report.n_violations
            rows.append({"replication": rep,
                         "max_rel_violation": rep_report.max_rel_violation,
                         "violations": rep_report.n_violations})
        verdict.update(passed=bad == 0, max_rel_violation=worst, violations=bad)
    elif kind == "pm_check":
        from .problems import check_pseudo_monotone

        problem = problem_from_config(params.pop("problem"))
        report = check_pseudo_monotone(
            problem.mean_operator, problem.feasible_set,
            samples=int(params.pop("samples", 1000)),
            seed=int(params.pop("seed", 0)), n=problem.dimension)
        _check_keys(params, set(), "pm_check params")
        rows = [{"n_pairs": report.n_pairs, "n_applicable": report.n_applicable,
                 "violations": len(report.violations)}]
        verdict.update(passed=report.passed, detail=str(report))
    else:
        raise ConfigError(f"unknown probe kind {kind!r}")

    if rows:
        write_rows_csv(out_dir / f"{kind}.csv", rows)
    with open(out_dir / f"{kind}_verdict.json", "w") as fh:
        json.dump(verdict, fh, indent=2, sort_keys=True)
    return verdict


def constants_inputs_from_config(cfg):
    from .constants import ConstantsInputs

    _check_keys(cfg, {"L", "alpha", "sigma", "schedule", "phi", "d0", "p",
                      "c2", "cp", "cq", "c_remainder", "m", "shared_samples",
                      "S", "J", "op_bound_L", "op_bound_M"}, "constants inputs")
    kwargs = dict(cfg)
    kwargs["schedule"] = SampleSchedule.from_config(kwargs["schedule"])
    return ConstantsInputs(**kwargs)


def constants_cmd(inputs_cfg: dict, eps: float, run_summary: dict | None = None,
                  out_dir=None) -> dict:
    """Full constants report; with a run summary attached, appends the
    empirical-vs-bound direction verdict."""
    from .constants import (
        c_consistency,
        compare_bound_to_run,
        rate_and_complexity_bounds,
    )

    inputs = constants_inputs_from_config(inputs_cfg)
    mean_dist2 = None
    if run_summary is not None and run_summary.get("mean_dist2"):
        mean_dist2 = np.asarray(run_summary["mean_dist2"], dtype=float)
    report = rate_and_complexity_bounds(inputs, eps, mean_dist2=mean_dist2)
    consistency = c_consistency(inputs)
    doc = {
        "inputs": {k: v for k, v in inputs_cfg.items()},
        "eps": eps,
        "bounds": _jsonable(report.as_dict()),
        "c_consistency": {
            "default_c": consistency.default_c,
            "minimal_admissible_c": consistency.minimal_c,
            "holds_with_default": consistency.holds_with_default,
            "threshold_k": consistency.threshold_k,
        },
    }
    if run_summary is not None and run_summary.get("mean_r2") and \
            report.rate_Q_bar is not None:
        cmp_res = compare_bound_to_run(
            inputs, report.rate_Q_bar, run_summary["mean_r2"],
            k_min=run_summary.get("rate_fit_window", [1])[0] or 1)
        doc["empirical_check"] = {"passed": cmp_res.passed,
                                  "detail": str(cmp_res)}
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "constants_report.json", "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
    return doc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    return obj


def format_constants_table(doc) -> str:
    """Human-readable rendering of a constants report document."""
    lines = [f"constants report (eps = {doc['eps']:g})"]
    for key, val in sorted(doc["bounds"].items()):
        lines.append(f"  {key:28s} {val}")
    cc = doc["c_consistency"]
    lines.append(f"  c-consistency: default {cc['default_c']} "
                 f"minimal {cc['minimal_admissible_c']:.6g} "
                 f"holds={cc['holds_with_default']}")
    if "empirical_check" in doc:
        lines.append(f"  empirical: {doc['empirical_check']['detail']}")
    return "\n".join(lines)
