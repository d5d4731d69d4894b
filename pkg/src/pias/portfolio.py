"""Complementarity-driven sub-portfolio construction.

The value of a subset is how much per-instance selection could gain
over its own single best member (mean virtual-best minus single-best
performance at full budget).  Member importance is estimated with a
Monte-Carlo permutation-prefix Shapley estimator, and the final size-k
subset comes from a random search weighted by the clipped Shapley
values, with a greedy-extension candidate as a floor.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .optimizers import canonical_sort
from .perfdb import PerformanceTable
from .seeding import rng_from


@dataclass(eq=False)
class ComplementarityTarget:
    """Caches mean performance per (instance, optimizer) at budget B and
    memoizes subset values."""

    table: PerformanceTable
    instance_keys: tuple
    budget: int
    _cols: dict = field(init=False, repr=False)
    _memo: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.instance_keys = tuple(self.instance_keys)
        self._cols = {
            opt: np.asarray([
                self.table.mean_over_reps(k, opt, self.budget)
                for k in self.instance_keys
            ])
            for opt in self.table.optimizers
        }
        self._memo = {}

    def value(self, subset) -> float:
        members = tuple(canonical_sort(subset))
        if not members:
            return 0.0
        fs = frozenset(members)
        if fs in self._memo:
            return self._memo[fs]
        cols = np.stack([self._cols[m] for m in members])
        vbs_mean = float(cols.max(axis=0).mean())
        sbs_mean = float(cols.mean(axis=1).max())
        v = vbs_mean - sbs_mean
        self._memo[fs] = v
        return v


def complementarity(target: ComplementarityTarget, subset) -> float:
    if not tuple(subset):
        raise ValueError("empty subset")
    return target.value(subset)


def shapley_estimate(target: ComplementarityTarget, full_portfolio,
                     n_permutations: int = 200, seed: int = 0,
                     enumerate_all: bool = False) -> dict:
    """Permutation-prefix estimate of each member's average marginal
    contribution to subset value.

    enumerate_all walks every permutation instead of sampling, which
    makes the estimate exact.
    """
    members = tuple(canonical_sort(full_portfolio))
    n = len(members)
    phi = {m: 0.0 for m in members}
    if enumerate_all:
        perms = itertools.permutations(range(n))
        count = math.factorial(n)
    else:
        if n_permutations < 1:
            raise ValueError("n_permutations must be >= 1")
        rng = rng_from(seed, "shapley")
        perms = (rng.permutation(n) for _ in range(n_permutations))
        count = n_permutations
    for perm in perms:
        prefix = []
        v_prev = 0.0
        for j in perm:
            prefix.append(members[j])
            v_cur = target.value(prefix)
            phi[members[j]] += v_cur - v_prev
            v_prev = v_cur
    return {m: phi[m] / count for m in members}


@dataclass(frozen=True)
class PortfolioChoice:
    members: tuple
    complementarity: float
    shapley: dict
    scheme: str


_SCHEME = ("shapley-weighted sequential draws without replacement, "
           "uniform fallback when all values clip to zero, greedy "
           "extension included as a candidate, ties to the "
           "lexicographically smallest member tuple")


def _greedy(target, members, size):
    chosen = []
    rest = list(members)
    while len(chosen) < size:
        best = max(rest, key=lambda m: (target.value(chosen + [m]),))
        # max() keeps the first of equals, i.e. canonical order
        chosen.append(best)
        rest.remove(best)
    return tuple(canonical_sort(chosen))


def select_portfolio(target: ComplementarityTarget, full_portfolio,
                     size: int = 4, iterations: int = 500,
                     seed: int = 0, n_permutations: int = 200) -> PortfolioChoice:
    members = tuple(canonical_sort(full_portfolio))
    if size > len(members) or size < 1:
        raise ValueError("size must be in 1..|portfolio|")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    shapley = shapley_estimate(target, members, n_permutations, seed)
    if size == len(members):
        return PortfolioChoice(members, target.value(members), shapley, _SCHEME)

    w = np.asarray([max(shapley[m], 0.0) for m in members])
    if w.sum() <= 0.0:
        w = np.ones(len(members))
    rng = rng_from(seed, "subset-search")

    def better(cand, cur):
        if cur is None:
            return True
        vc, vb = target.value(cand), target.value(cur)
        if vc != vb:
            return vc > vb
        return tuple(sorted(cand)) < tuple(sorted(cur))

    best = None
    greedy = _greedy(target, members, size)
    if better(greedy, best):
        best = greedy
    for _ in range(iterations):
        avail = list(range(len(members)))
        probs = w.copy()
        pick = []
        for _ in range(size):
            p = probs[avail]
            total = p.sum()
            if total <= 0.0:
                p = np.ones(len(avail))
                total = p.sum()
            j = int(rng.choice(len(avail), p=p / total))
            pick.append(members[avail[j]])
            avail.pop(j)
        cand = tuple(canonical_sort(pick))
        if better(cand, best):
            best = cand
    return PortfolioChoice(best, target.value(best), shapley, _SCHEME)
