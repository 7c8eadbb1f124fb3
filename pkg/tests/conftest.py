import numpy as np
import pytest

from fogassign.latency import Degenerate, Empirical, Gev, Mixture, Uniform, make_rng
from fogassign.scenario import NodeSpec, Scenario
from fogassign.utility import ExpDecay, Step, TaskSpec, WaitReadyFirst

# 99th-percentile point of the Kolmogorov distribution, for KS bounds.
KS_CRIT_001 = 1.62762


def ks_critical(n: int, coeff: float = KS_CRIT_001) -> float:
    return coeff / np.sqrt(n)


@pytest.fixture
def rng():
    return make_rng(20260810)


def _random_dist(rng) -> object:
    kind = rng.integers(0, 5)
    if kind == 0:
        lo = float(rng.uniform(0.0, 1.0))
        return Uniform(lo=lo, hi=lo + float(rng.uniform(0.05, 1.0)))
    if kind == 1:
        return Degenerate(value=float(rng.uniform(0.0, 1.5)))
    if kind == 2:
        return Empirical(rng.uniform(0.0, 2.0, int(rng.integers(3, 25))))
    if kind == 3:
        shape = float(rng.uniform(0.1, 0.8))
        scale = float(rng.uniform(0.01, 0.2))
        loc = scale / shape + float(rng.uniform(0.0, 1.0))  # keeps support nonnegative
        return Gev(shape=shape, scale=scale, loc=loc)
    lo1 = float(rng.uniform(0.0, 0.5))
    lo2 = float(rng.uniform(0.5, 1.2))
    w = float(rng.uniform(0.1, 0.9))
    return Mixture(
        [Uniform(lo1, lo1 + 0.4), Uniform(lo2, lo2 + 0.6)],
        [w, 1.0 - w],
    )


def _random_time_utility(rng) -> object:
    kind = rng.integers(0, 3)
    if kind == 0:
        return Step(tv=float(rng.uniform(0.1, 1.5)))
    if kind == 1:
        return ExpDecay(k=float(rng.uniform(0.3, 3.0)))
    te = float(rng.uniform(0.05, 0.8))
    return WaitReadyFirst(te=te, ts=te + float(rng.uniform(0.1, 1.0)))


def random_scenario(seed: int) -> Scenario:
    """Small random instance within the exhaustive-oracle guard rails.

    Up to 8 tasks over up to 4 nodes of which at most 2 are capacitated
    (capacities 1-3), 1-2 options per node, mixed utility families and
    latency variants, and occasionally binding risk budgets.
    """
    rng = make_rng(seed)
    n_tasks = int(rng.integers(1, 9))
    n_nodes = int(rng.integers(1, 5))
    n_finite = int(rng.integers(0, min(2, n_nodes) + 1))
    nodes = []
    for z in range(n_nodes):
        options = tuple(f"x{i}" for i in range(int(rng.integers(1, 3))))
        capacity = int(rng.integers(1, 4)) if z < n_finite else None
        nodes.append(NodeSpec(id=f"z{z}", options=options, capacity=capacity))
    tasks = []
    latency = {}
    for j in range(n_tasks):
        intrinsic = {}
        tid = f"j{j}"
        for node in nodes:
            for x in node.options:
                if rng.random() < 0.8:
                    intrinsic[(node.id, x)] = float(rng.uniform(0.05, 1.0))
        binding = rng.random() < 0.3
        tasks.append(
            TaskSpec(
                id=tid,
                time_utility=_random_time_utility(rng),
                intrinsic=intrinsic,
                quality_floor=float(rng.uniform(0.1, 0.8)) if binding else 0.0,
                risk_budget=float(rng.uniform(0.2, 0.9)) if binding else 1.0,
            )
        )
        for (z, x) in intrinsic:
            latency[(tid, z, x)] = _random_dist(rng)
    scen = Scenario(
        name=f"random-{seed}", tasks=tasks, nodes=nodes, latency=latency, seed=seed
    )
    scen.validate()
    return scen
