"""Normalized anytime performance.

Raw best-so-far trajectories become scores in [0,1]: known-optimum
suites through a log-scaled attainment of the error to the optimum,
unknown-optimum suites through per-instance extrema normalization over
everything the portfolio observed.  Tables index the scores by
(instance, optimizer, repetition, budget checkpoint) and round-trip
through CSV bit-exactly.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .optimizers import Trajectory, canonical_sort

ATTAIN_HI = 1e2
ATTAIN_LO = 1e-8


def attainment_score(error: float) -> float:
    """Log-scaled precision score: 1e2 -> 0, 1e-8 -> 1, linear in
    log10 between."""
    if error < 0.0:
        raise ValueError("error must be non-negative")
    e = max(error, ATTAIN_LO)
    score = (2.0 - math.log10(e)) / 10.0
    return min(1.0, max(0.0, score))


class AttainmentNormalizer:
    """Shared normalizer for suites with known optimum 0."""

    degenerate = False

    def perf(self, error: float) -> float:
        return attainment_score(error)


@dataclass(frozen=True)
class RogNormalizer:
    """Per-instance extrema normalizer for unknown-optimum suites."""

    v_min: float
    v_max: float
    degenerate: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "degenerate", not (self.v_max > self.v_min))

    def perf(self, value: float) -> float:
        if self.degenerate:
            return 0.5
        p = (self.v_max - value) / (self.v_max - self.v_min)
        return min(1.0, max(0.0, p))


def rog_normalize(trajectories) -> RogNormalizer:
    """Build the extrema normalizer for one instance from all of its
    trajectories: v_min is the best value any run reached, v_max the
    worst raw value seen inside the accounting window."""
    trajectories = list(trajectories)
    if not trajectories:
        raise ValueError("no trajectories")
    v_min = min(float(t.best_error[-1]) for t in trajectories)
    v_max = max(float(t.raw_window_max) for t in trajectories)
    return RogNormalizer(v_min, v_max)


def perf_at(trajectory: Trajectory, budget: int, normalizer) -> float:
    return normalizer.perf(trajectory.best_at(budget))


@dataclass(frozen=True)
class PerformanceTable:
    suite_id: str
    dimension: int
    instance_keys: tuple      # (function_id, instance_id) pairs
    optimizers: tuple
    n_reps: int
    checkpoints: tuple
    cells: dict               # (key, optimizer, rep, budget) -> perf
    degenerate_keys: frozenset = frozenset()

    def perf(self, key, optimizer: str, rep: int, budget: int) -> float:
        return self.cells[(key, optimizer, rep, budget)]

    def mean_over_reps(self, key, optimizer: str, budget: int) -> float:
        return float(np.mean([
            self.cells[(key, optimizer, r, budget)] for r in range(self.n_reps)
        ]))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("suite,d,instance_id,optimizer,rep,budget,perf\n")
            for key in self.instance_keys:
                for opt in self.optimizers:
                    for rep in range(self.n_reps):
                        for b in self.checkpoints:
                            p = self.cells[(key, opt, rep, b)]
                            fh.write(
                                f"{self.suite_id},{self.dimension},"
                                f"{key[0]}:{key[1]},{opt},{rep},{b},{p:.17g}\n"
                            )


def table_from_csv(path) -> PerformanceTable:
    cells = {}
    keys = []
    opts = []
    budgets = set()
    reps = set()
    suite = None
    dim = None
    with open(path) as fh:
        header = fh.readline()
        if header.strip() != "suite,d,instance_id,optimizer,rep,budget,perf":
            raise ValueError("unrecognized performance table header")
        for line in fh:
            s, d, iid, opt, rep, b, p = line.rstrip("\n").split(",")
            suite = s
            dim = int(d)
            fid, inst = iid.split(":")
            key = (int(fid), int(inst))
            if key not in keys:
                keys.append(key)
            if opt not in opts:
                opts.append(opt)
            reps.add(int(rep))
            budgets.add(int(b))
            cells[(key, opt, int(rep), int(b))] = float(p)
    return PerformanceTable(
        suite_id=suite,
        dimension=dim,
        instance_keys=tuple(keys),
        optimizers=tuple(opts),
        n_reps=max(reps) + 1,
        checkpoints=tuple(sorted(budgets)),
        cells=cells,
    )


def build_table(trajectories: dict, budget_checkpoints, normalizers) -> PerformanceTable:
    """Dense table from a complete (optimizer, instance, rep) run set.

    normalizers is either one normalizer applied to every instance or a
    mapping from instance key to normalizer.
    """
    if not trajectories:
        raise ValueError("no trajectories")
    opts = canonical_sort({k[0] for k in trajectories})
    keys = sorted({k[1] for k in trajectories})
    reps = sorted({k[2] for k in trajectories})
    n_reps = len(reps)
    if reps != list(range(n_reps)):
        raise ValueError("repetition indices must be 0..n-1")
    checkpoints = tuple(sorted(set(int(b) for b in budget_checkpoints)))

    any_traj = next(iter(trajectories.values()))
    if checkpoints and checkpoints[-1] > any_traj.length:
        raise ValueError("checkpoint beyond trajectory length")
    if checkpoints and checkpoints[0] < 1:
        raise ValueError("checkpoints must be >= 1")

    def norm_for(key):
        if isinstance(normalizers, dict):
            return normalizers[key]
        return normalizers

    cells = {}
    degenerate = set()
    for key in keys:
        nz = norm_for(key)
        if nz.degenerate:
            degenerate.add(key)
        for opt in opts:
            for rep in range(n_reps):
                t = trajectories.get((opt, key, rep))
                if t is None:
                    raise ValueError(
                        f"incomplete run set: missing ({opt}, {key}, {rep})")
                for b in checkpoints:
                    cells[(key, opt, rep, b)] = perf_at(t, b, nz)
    return PerformanceTable(
        suite_id=any_traj.suite_id,
        dimension=any_traj.dimension,
        instance_keys=tuple(keys),
        optimizers=tuple(opts),
        n_reps=n_reps,
        checkpoints=checkpoints,
        cells=cells,
        degenerate_keys=frozenset(degenerate),
    )
