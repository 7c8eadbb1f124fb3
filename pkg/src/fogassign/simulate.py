"""Monte-Carlo realization of plans, reference strategies, and result files.

``simulate`` draws completion times for every placed task and scores the
realized utilities, which lets the planning expectations be checked
against averages with error bars.  The two reference strategies collapse
the latency distribution to a single consideration — lowest median
latency, or highest intrinsic quality — exactly the single-statistic
habits the expected-utility planner improves on; they pick per task and
ignore node capacities.

``emit`` writes results deterministically: keys sorted, floats at 9
significant digits, so identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .latency import make_rng
from .scenario import Scenario
from .solver import AssignmentPlan, Placement, UtilityTable

__all__ = [
    "SimulationResult",
    "simulate",
    "run_baseline",
    "round9",
    "emit",
    "emit_plan_csv",
]

BASELINES = ("min-latency", "max-quality")


@dataclass
class SimulationResult:
    plan: AssignmentPlan
    reps: int
    realized: dict[str, np.ndarray]
    per_task_mean: dict[str, float]
    per_task_se: dict[str, float]
    overall_mean: float
    overall_se: float
    baselines: dict[str, "SimulationResult"]

    def to_record(self) -> dict:
        rec = {
            "solver": self.plan.solver,
            "reps": self.reps,
            "overall_mean": self.overall_mean,
            "overall_se": self.overall_se,
            "per_task": {
                j: {"mean": self.per_task_mean[j], "se": self.per_task_se[j]}
                for j in self.per_task_mean
            },
        }
        if self.baselines:
            rec["baselines"] = {k: v.to_record() for k, v in self.baselines.items()}
        return rec


def simulate(
    scenario: Scenario,
    plan: AssignmentPlan,
    reps: int,
    rng,
    baselines: dict[str, AssignmentPlan] | None = None,
) -> SimulationResult:
    """Draw ``reps`` completion times per placed task and score them.

    Each task consumes an independent child stream spawned from the
    caller's generator, so results are reproducible and adding tasks does
    not perturb other tasks' draws.  Rejected tasks contribute 0; the
    overall mean averages over all tasks, matching how scenario-level
    average utility is defined.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    rng = make_rng(rng)
    streams = rng.spawn(len(scenario.tasks))
    realized: dict[str, np.ndarray] = {}
    means: dict[str, float] = {}
    ses: dict[str, float] = {}
    for t, stream in zip(scenario.tasks, streams):
        p = plan.decisions.get(t.id)
        if p is None:
            realized[t.id] = np.zeros(reps)
            means[t.id] = 0.0
            ses[t.id] = 0.0
            continue
        draws = scenario.dist(t.id, p.node, p.option).sample(stream, reps)
        vals = t.intrinsic[(p.node, p.option)] * t.time_utility.value(draws)
        realized[t.id] = vals
        means[t.id] = float(vals.mean())
        ses[t.id] = float(vals.std(ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0
    n_tasks = max(len(scenario.tasks), 1)
    overall = float(sum(means.values()) / n_tasks)
    overall_se = float(np.sqrt(sum(se**2 for se in ses.values())) / n_tasks)
    sub = {}
    for name, bplan in (baselines or {}).items():
        sub[name] = simulate(scenario, bplan, reps, rng.spawn(1)[0])
    return SimulationResult(
        plan=plan,
        reps=reps,
        realized=realized,
        per_task_mean=means,
        per_task_se=ses,
        overall_mean=overall,
        overall_se=overall_se,
        baselines=sub,
    )


def run_baseline(scenario: Scenario, strategy: str, table: UtilityTable | None = None) -> AssignmentPlan:
    """Single-statistic reference strategy.

    ``min-latency`` sends each task to its risk-feasible option with the
    lowest median completion time; ``max-quality`` to the one with the
    highest intrinsic utility.  Ties prefer earlier nodes then earlier
    options.  Capacities are ignored: these mirror strategies that place
    every task by one greedy criterion.
    """
    if strategy not in BASELINES:
        raise ValueError(f"unknown baseline {strategy!r}; expected one of {BASELINES}")
    table = table or UtilityTable(scenario)
    decisions: dict[str, Placement | None] = {}
    for t in scenario.tasks:
        best_key = None
        best: Placement | None = None
        for zpos, node in enumerate(scenario.nodes):
            for xpos, x in enumerate(node.options):
                if (node.id, x) not in t.intrinsic:
                    continue
                rep = table.report(t.id, node.id, x)
                if not rep.feasible:
                    continue
                if strategy == "min-latency":
                    score = float(scenario.dist(t.id, node.id, x).quantile(0.5))
                else:
                    score = -t.intrinsic[(node.id, x)]
                key = (score, zpos, xpos)
                if best_key is None or key < best_key:
                    best_key = key
                    best = Placement(node=node.id, option=x, utility=rep.utility, risk=rep.risk)
        decisions[t.id] = best
    return AssignmentPlan.from_decisions(decisions, solver=strategy)


# ---------------------------------------------------------------------------
# Deterministic result files
# ---------------------------------------------------------------------------

def round9(obj):
    """Recursively round floats to 9 significant digits (round-trip safe)."""
    if isinstance(obj, float):
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {k: round9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round9(v) for v in obj]
    return obj


def emit(record: dict, fmt: str, path) -> Path:
    """Write a result record as canonical JSON or as the plan CSV."""
    path = Path(path)
    if fmt == "json":
        blob = json.dumps(round9(record), sort_keys=True, indent=2)
        path.write_text(blob + "\n")
        return path
    if fmt == "csv":
        if "tasks" not in record:
            raise ValueError("CSV emission expects a plan record with task rows")
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["task_id", "status", "node", "option", "utility", "risk"])
            for row in record["tasks"]:
                writer.writerow(
                    [
                        row["task_id"],
                        row["status"],
                        row["node"],
                        row["option"],
                        f"{row['utility']:.9g}",
                        f"{row['risk']:.9g}",
                    ]
                )
        return path
    raise ValueError(f"unknown emit format {fmt!r}")


def emit_plan_csv(plan: AssignmentPlan, path) -> Path:
    return emit(plan.to_record(), "csv", path)
