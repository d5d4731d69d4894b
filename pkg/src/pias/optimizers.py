"""Black-box optimizer portfolio.

Eight optimizers spanning pure exploration, local search, population
methods, annealing, and a diagonal evolution strategy.  Every run
consumes its evaluation budget exactly: a shared recorder counts
evaluations, clamps points into bounds, tracks the best-so-far
trajectory, and aborts the driver mid-batch when the budget is spent.
Smaller budgets are therefore exact prefixes of larger runs for
drivers whose proposal stream does not read the budget.
"""

import math
from dataclasses import dataclass

import numpy as np

from .sampling import SamplePlan, scale_to_box, sobol_points
from .seeding import derive_seed, rng_from
from .suites import InstanceSet, ProblemInstance

CANONICAL_ORDER = (
    "RANDOM_SEARCH",
    "ONE_PLUS_ONE_ES",
    "DE_RAND_1_BIN",
    "PSO",
    "NELDER_MEAD_RESTART",
    "SA_GAUSS",
    "CMA_DIAG",
    "SOBOL_SEARCH",
)


def canonical_index(name: str) -> int:
    return CANONICAL_ORDER.index(name)


def canonical_sort(names) -> list:
    return sorted(names, key=canonical_index)


class BudgetExhausted(Exception):
    pass


@dataclass(frozen=True, eq=False)
class Trajectory:
    optimizer: str
    suite_id: str
    function_id: int
    instance_id: int
    dimension: int
    repetition: int
    seed: int
    best_error: np.ndarray
    raw_window_max: float

    @property
    def length(self) -> int:
        return self.best_error.shape[0]

    def best_at(self, budget: int) -> float:
        if budget < 1 or budget > self.length:
            raise ValueError(f"budget {budget} outside trajectory of length {self.length}")
        return float(self.best_error[budget - 1])


class _Recorder:
    """Counts evaluations, clamps points, records best-so-far, and
    raises BudgetExhausted the moment the cap is reached mid-request."""

    def __init__(self, instance: ProblemInstance, max_budget: int):
        self.inst = instance
        self.cap = int(max_budget)
        self.count = 0
        self.best = np.empty(self.cap)
        self.bsf = math.inf
        self.window_lo = 5 * instance.dimension
        self.window_max = -math.inf

    def eval(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        room = self.cap - self.count
        take = min(X.shape[0], room)
        if take > 0:
            pts = np.clip(X[:take], self.inst.lower, self.inst.upper)
            vals = self.inst.evaluate_batch(pts)
            if self.inst.optimum_value is not None:
                vals = vals - self.inst.optimum_value
            for v in vals:
                self.count += 1
                if v < self.bsf:
                    self.bsf = v
                self.best[self.count - 1] = self.bsf
                if self.count >= self.window_lo and v > self.window_max:
                    self.window_max = v
        else:
            vals = np.empty(0)
        if take < X.shape[0]:
            raise BudgetExhausted()
        return vals

    def eval1(self, x: np.ndarray) -> float:
        return float(self.eval(x[np.newaxis, :])[0])


def _popsize(d: int, cap: int) -> int:
    base = 4 + 2 * int(3.0 * math.log(d)) if d > 1 else 4
    # floor of 4 keeps population methods viable at tiny budgets; the
    # recorder still enforces the exact evaluation cap
    return max(4, min(base, cap // 10))


# --------------------------------------------------------------- drivers

def _drv_random_search(rec, rng, inst):
    lo, hi, d = inst.lower, inst.upper, inst.dimension
    while True:
        rec.eval(rng.uniform(lo, hi, size=(256, d)))


def _drv_sobol_search(rec, rng, inst):
    d = inst.dimension
    plan = SamplePlan(d, rec.cap,
                      scramble_seed=int(rng.integers(0, 2 ** 62)))
    pts = scale_to_box(sobol_points(plan), inst.lower, inst.upper)
    for s in range(0, rec.cap, 512):
        rec.eval(pts[s:s + 512])


def _drv_one_plus_one_es(rec, rng, inst):
    lo, hi, d = inst.lower, inst.upper, inst.dimension
    span = hi - lo
    x = rng.uniform(lo, hi, size=d)
    fx = rec.eval1(x)
    sigma = 0.25 * span
    while True:
        y = np.clip(x + sigma * rng.standard_normal(d), lo, hi)
        fy = rec.eval1(y)
        if fy <= fx:
            x, fx = y, fy
            sigma = min(sigma * 1.5, span)
        else:
            # 1/5th success rule in its exponential form
            sigma *= 1.5 ** -0.25


def _drv_sa_gauss(rec, rng, inst):
    lo, hi, d = inst.lower, inst.upper, inst.dimension
    span = hi - lo
    x = rng.uniform(lo, hi, size=d)
    fx = rec.eval1(x)
    t0 = max(abs(fx), 1.0)
    sigma = 0.1 * span
    t = t0
    while True:
        y = np.clip(x + sigma * rng.standard_normal(d), lo, hi)
        fy = rec.eval1(y)
        if fy <= fx or rng.random() < math.exp(-(fy - fx) / max(t, 1e-300)):
            x, fx = y, fy
        t *= 0.999


def _drv_de_rand_1_bin(rec, rng, inst):
    lo, hi, d = inst.lower, inst.upper, inst.dimension
    np_ = _popsize(d, rec.cap)
    F, CR = 0.5, 0.9
    pop = rng.uniform(lo, hi, size=(np_, d))
    fpop = rec.eval(pop)
    while True:
        trials = np.empty_like(pop)
        for i in range(np_):
            r = rng.permutation(np_)[:4]
            r = [j for j in r if j != i][:3]
            mutant = pop[r[0]] + F * (pop[r[1]] - pop[r[2]])
            cross = rng.random(d) < CR
            cross[int(rng.integers(0, d))] = True
            trials[i] = np.where(cross, mutant, pop[i])
        trials = np.clip(trials, lo, hi)
        ftr = rec.eval(trials)
        improved = ftr <= fpop
        pop[improved] = trials[improved]
        fpop[improved] = ftr[improved]


def _drv_pso(rec, rng, inst):
    lo, hi, d = inst.lower, inst.upper, inst.dimension
    span = hi - lo
    np_ = _popsize(d, rec.cap)
    w, c1, c2 = 0.7298, 1.49618, 1.49618
    vmax = 0.5 * span
    X = rng.uniform(lo, hi, size=(np_, d))
    V = rng.uniform(-0.1 * span, 0.1 * span, size=(np_, d))
    fX = rec.eval(X)
    pbest = X.copy()
    fp = fX.copy()
    while True:
        for i in range(np_):
            # ring neighborhood of radius 1
            nbr = [(i - 1) % np_, i, (i + 1) % np_]
            b = min(nbr, key=lambda j: (fp[j], j))
            r1 = rng.random(d)
            r2 = rng.random(d)
            V[i] = w * V[i] + c1 * r1 * (pbest[i] - X[i]) + c2 * r2 * (pbest[b] - X[i])
        V = np.clip(V, -vmax, vmax)
        X = np.clip(X + V, lo, hi)
        fX = rec.eval(X)
        improved = fX <= fp
        pbest[improved] = X[improved]
        fp[improved] = fX[improved]


def _drv_nelder_mead_restart(rec, rng, inst):
    lo, hi, d = inst.lower, inst.upper, inst.dimension
    span = hi - lo
    alpha, gamma, rho, shrink = 1.0, 2.0, 0.5, 0.5
    while True:
        x0 = rng.uniform(lo, hi, size=d)
        simplex = np.clip(
            np.vstack([x0] + [x0 + 0.25 * span * np.eye(d)[i] for i in range(d)]),
            lo, hi)
        fs = rec.eval(simplex)
        while True:
            order = np.argsort(fs, kind="mergesort")
            simplex = simplex[order]
            fs = fs[order]
            if fs[-1] - fs[0] < 1e-14 or np.max(np.abs(simplex - simplex[0])) < 1e-12:
                break  # converged locally; restart
            centroid = simplex[:-1].mean(axis=0)
            xr = np.clip(centroid + alpha * (centroid - simplex[-1]), lo, hi)
            fr = rec.eval1(xr)
            if fr < fs[0]:
                xe = np.clip(centroid + gamma * (xr - centroid), lo, hi)
                fe = rec.eval1(xe)
                if fe < fr:
                    simplex[-1], fs[-1] = xe, fe
                else:
                    simplex[-1], fs[-1] = xr, fr
            elif fr < fs[-2]:
                simplex[-1], fs[-1] = xr, fr
            else:
                xc = np.clip(centroid + rho * (simplex[-1] - centroid), lo, hi)
                fc = rec.eval1(xc)
                if fc < fs[-1]:
                    simplex[-1], fs[-1] = xc, fc
                else:
                    simplex = simplex[0] + shrink * (simplex - simplex[0])
                    fs = np.concatenate([fs[:1], rec.eval(simplex[1:])])


def _drv_cma_diag(rec, rng, inst):
    lo, hi, d = inst.lower, inst.upper, inst.dimension
    span = hi - lo
    lam = _popsize(d, rec.cap)
    mu = max(1, lam // 2)
    w = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    w = w / w.sum()
    mu_eff = 1.0 / np.sum(w * w)
    cs = (mu_eff + 2.0) / (d + mu_eff + 5.0)
    ds = 1.0 + cs + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (d + 1.0)) - 1.0)
    c1 = 2.0 / ((d + 1.3) ** 2 + mu_eff)
    cmu = min(1.0 - c1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((d + 2.0) ** 2 + mu_eff))
    chi_n = math.sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))

    m = rng.uniform(lo, hi, size=d)
    sigma = 0.3 * span
    var = np.ones(d)
    ps = np.zeros(d)
    while True:
        Z = rng.standard_normal((lam, d))
        X = np.clip(m + sigma * np.sqrt(var) * Z, lo, hi)
        f = rec.eval(X)
        idx = np.argsort(f, kind="mergesort")[:mu]
        Ysel = (X[idx] - m) / sigma
        ydw = w @ Ysel
        m = m + sigma * ydw
        ps = (1.0 - cs) * ps + math.sqrt(cs * (2.0 - cs) * mu_eff) * ydw / np.sqrt(var)
        sigma *= math.exp(cs / ds * (np.linalg.norm(ps) / chi_n - 1.0))
        sigma = float(np.clip(sigma, 1e-16, span))
        var = (1.0 - c1 - cmu) * var + c1 * ps * ps + cmu * (w @ (Ysel * Ysel))
        var = np.clip(var, 1e-20, 1e20)


_DRIVERS = {
    "RANDOM_SEARCH": _drv_random_search,
    "ONE_PLUS_ONE_ES": _drv_one_plus_one_es,
    "DE_RAND_1_BIN": _drv_de_rand_1_bin,
    "PSO": _drv_pso,
    "NELDER_MEAD_RESTART": _drv_nelder_mead_restart,
    "SA_GAUSS": _drv_sa_gauss,
    "CMA_DIAG": _drv_cma_diag,
    "SOBOL_SEARCH": _drv_sobol_search,
}


def run(optimizer: str, instance: ProblemInstance, max_budget: int, seed: int,
        repetition: int = 0) -> Trajectory:
    """One run, exactly max_budget evaluations."""
    if optimizer not in _DRIVERS:
        raise ValueError(f"unknown optimizer {optimizer!r}")
    if max_budget < 1:
        raise ValueError("max_budget must be >= 1")
    rec = _Recorder(instance, max_budget)
    rng = rng_from(seed, "opt-run", optimizer)
    try:
        _DRIVERS[optimizer](rec, rng, instance)
        # a driver that returns early falls back to uniform sampling
        while True:
            rec.eval(rng.uniform(instance.lower, instance.upper,
                                 size=(256, instance.dimension)))
    except BudgetExhausted:
        pass
    if rec.count != max_budget:
        raise RuntimeError("budget accounting violated")
    raw_max = rec.window_max if math.isfinite(rec.window_max) else float(rec.best[-1])
    return Trajectory(
        optimizer=optimizer,
        suite_id=instance.suite_id,
        function_id=instance.function_id,
        instance_id=instance.instance_id,
        dimension=instance.dimension,
        repetition=repetition,
        seed=seed,
        best_error=rec.best,
        raw_window_max=raw_max,
    )


def run_seed(master_seed: int, suite_id: str, dimension: int, function_id: int,
             instance_id: int, optimizer: str, rep: int) -> int:
    return derive_seed(master_seed, "traj", suite_id, dimension,
                       function_id, instance_id, optimizer, rep)


def run_portfolio(portfolio, instance_set: InstanceSet, max_budget: int,
                  n_reps: int = 5, master_seed: int = 0) -> dict:
    """All (optimizer, instance, rep) trajectories, keyed by
    (optimizer, (fid, iid), rep)."""
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    out = {}
    for opt in canonical_sort(portfolio):
        for inst in instance_set.instances:
            for rep in range(n_reps):
                seed = run_seed(master_seed, inst.suite_id, inst.dimension,
                                inst.function_id, inst.instance_id, opt, rep)
                out[(opt, inst.key, rep)] = run(opt, inst, max_budget, seed,
                                                repetition=rep)
    return out
