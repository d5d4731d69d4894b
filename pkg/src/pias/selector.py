"""Budget-split algorithm selection: baselines, selector model,
cross-validation, and the evaluation metrics.

A scenario splits its total budget B into B_ELA sampled points (used
for features and for the best-sampled-point score) and B_opt left for
the selected optimizer.  Baselines come from the performance table:
the single best solver of the training fold at B, the per-instance
virtual best at B and at B_opt.  The selector is a bagged multi-output
regression forest mapping features to predicted per-optimizer
performance at B_opt; the argmax is selected with canonical-order tie
breaking.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .forest import MultiOutputForest
from .optimizers import canonical_sort
from .perfdb import PerformanceTable
from .seeding import derive_seed, rng_from


class UndefinedGap(ValueError):
    pass


@dataclass(frozen=True)
class BudgetSplit:
    B: int
    B_ELA: int

    def __post_init__(self):
        if self.B_ELA < 1 or self.B < 1:
            raise ValueError("budgets must be positive")
        if not self.B_ELA < self.B:
            raise ValueError("B_ELA must be strictly below B")

    @property
    def B_opt(self) -> int:
        return self.B - self.B_ELA


@dataclass(frozen=True)
class Scenario:
    suite_id: str
    dimension: int
    portfolio: tuple
    budget_split: BudgetSplit
    instance_keys: tuple          # (function_id, instance_id) pairs
    instance_ids: tuple           # distinct ids used for CV splitting
    fold_count: int = 5
    master_seed: int = 0
    n_feature_reps: int = 5

    def __post_init__(self):
        object.__setattr__(self, "portfolio",
                           tuple(canonical_sort(self.portfolio)))


@dataclass(frozen=True)
class FeatureRecord:
    """One feature computation: named values plus the normalized
    performance of the best sampled point."""
    features: dict
    ela_perf: float


@dataclass(frozen=True)
class SelectorModel:
    forest: MultiOutputForest
    retained: tuple
    portfolio: tuple
    seed: int


@dataclass(frozen=True)
class Record:
    fold: int
    key: tuple
    rep: int
    ela_perf: float
    selected: str
    a_star_perf: float
    pias_perf: float
    vbs_full: float
    vbs_opt: float
    sbs_id: str
    sbs_perf: float


@dataclass(frozen=True)
class ScenarioResult:
    scenario: Scenario
    records: tuple
    fold_sbs: dict
    sbs_perf: float
    vbs_full: float
    vbs_opt: float
    ela_perf: float
    pias_perf: float
    gap_closed: Optional[float]
    budget_loss: float
    selection_loss: float
    relative_budget_loss: Optional[float]
    flags: tuple = ()


# ------------------------------------------------------------ baselines

def sbs_full(table: PerformanceTable, instance_keys, portfolio, budget: int) -> str:
    """Optimizer with the best mean performance over the given
    instances at the full budget; ties go to canonical order."""
    if not instance_keys:
        raise ValueError("empty instance set")
    best_name = None
    best_perf = -np.inf
    for opt in canonical_sort(portfolio):
        p = float(np.mean([
            table.mean_over_reps(k, opt, budget) for k in instance_keys
        ]))
        if p > best_perf:
            best_perf = p
            best_name = opt
    return best_name


def vbs(table: PerformanceTable, instance_keys, portfolio, budget: int) -> dict:
    """Per-instance best (perf, optimizer) at the budget."""
    out = {}
    for k in instance_keys:
        best_name = None
        best_perf = -np.inf
        for opt in canonical_sort(portfolio):
            p = table.mean_over_reps(k, opt, budget)
            if p > best_perf:
                best_perf = p
                best_name = opt
        out[k] = (best_perf, best_name)
    return out


# -------------------------------------------------------------- scoring

def pias_perf(ela_perf: float, selected_perf: float) -> float:
    return max(ela_perf, selected_perf)


def gap_closed(sbs: float, vbs_perf: float, pias: float) -> float:
    if vbs_perf < sbs:
        raise ValueError("vbs must be >= sbs")
    if vbs_perf == sbs:
        raise UndefinedGap("vbs equals sbs, gap undefined")
    return (pias - sbs) / (vbs_perf - sbs)


@dataclass(frozen=True)
class LossDecomposition:
    budget_loss: float
    selection_loss: float
    relative_budget_loss: Optional[float]


def decompose_loss(vbs_full_perf: float, vbs_opt_perf: float,
                   pias: float) -> LossDecomposition:
    budget = vbs_full_perf - vbs_opt_perf
    selection = vbs_opt_perf - pias
    denom = vbs_full_perf - pias
    rel = budget / denom if denom > 0.0 else None
    return LossDecomposition(budget, selection, rel)


# ------------------------------------------------------------- selector

def train_selector(feature_rows, retained, portfolio, seed: int,
                   n_trees: int = 100, min_leaf: int = 2) -> SelectorModel:
    """Fit the forest on (features, per-optimizer target perf) rows.

    feature_rows: iterable of (feature dict, target vector) where the
    target vector follows the canonical portfolio order.
    """
    retained = tuple(retained)
    if not retained:
        raise ValueError("no usable features")
    rows = list(feature_rows)
    if not rows:
        raise ValueError("no training rows")
    portfolio = tuple(canonical_sort(portfolio))
    X = np.asarray([[fr[name] for name in retained] for fr, _ in rows])
    Y = np.asarray([t for _, t in rows], dtype=np.float64)
    if Y.shape[1] != len(portfolio):
        raise ValueError("target width must equal portfolio size")
    forest = MultiOutputForest(n_trees=n_trees, min_leaf=min_leaf,
                               seed=seed).fit(X, Y)
    return SelectorModel(forest=forest, retained=retained,
                         portfolio=portfolio, seed=seed)


def argmax_canonical(portfolio, vector) -> str:
    """First maximum in canonical member order."""
    v = np.asarray(vector, dtype=np.float64)
    return tuple(portfolio)[int(np.argmax(v))]


def predict_vector(model: SelectorModel, feats: dict) -> np.ndarray:
    try:
        x = np.asarray([feats[name] for name in model.retained])
    except KeyError as exc:
        raise KeyError(f"missing feature {exc.args[0]!r}") from None
    return model.forest.predict(x[np.newaxis, :])[0]


def predict_select(model: SelectorModel, feats: dict) -> str:
    return argmax_canonical(model.portfolio, predict_vector(model, feats))


# ------------------------------------------------------- cross-validation

def cv_split(instance_ids, k: int = 5, seed: int = 0) -> list:
    """Seeded partition of ids into k near-equal test folds."""
    ids = list(instance_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("instance ids must be unique")
    if len(ids) < k:
        raise ValueError("fewer instances than folds")
    rng = rng_from(seed, "cv-folds")
    perm = rng.permutation(len(ids))
    folds = np.array_split(perm, k)
    return [tuple(sorted(ids[i] for i in f)) for f in folds]


# ------------------------------------------------------ scenario driver

def evaluate_scenario(scenario: Scenario, table: PerformanceTable,
                      feature_store: dict, retained=None) -> ScenarioResult:
    """Full leave-instance-out evaluation of one scenario.

    feature_store maps (instance_key, repetition) to a FeatureRecord
    computed with the scenario's B_ELA.  retained may carry a
    pre-computed feature filter; by default it is derived from every
    vector of the scenario.
    """
    from .features import filter_features

    split = scenario.budget_split
    B, B_opt = split.B, split.B_opt
    keys = tuple(scenario.instance_keys)
    portfolio = scenario.portfolio
    flags = set()

    if retained is None:
        vectors = [feature_store[(k, r)].features
                   for k in keys for r in range(scenario.n_feature_reps)]
        retained = filter_features(vectors)
    retained = tuple(retained)
    if not retained:
        flags.add("no_features")

    vbs_full_map = vbs(table, keys, portfolio, B)
    vbs_opt_map = vbs(table, keys, portfolio, B_opt)

    fold_seed = derive_seed(scenario.master_seed, "cv", scenario.suite_id,
                            scenario.dimension)
    folds = cv_split(scenario.instance_ids, scenario.fold_count, fold_seed)

    records = []
    fold_sbs = {}
    for fold_i, test_ids in enumerate(folds):
        test_set = set(test_ids)
        train_keys = [k for k in keys if k[1] not in test_set]
        test_keys = [k for k in keys if k[1] in test_set]
        if not train_keys or not test_keys:
            continue
        sbs_id = sbs_full(table, train_keys, portfolio, B)
        fold_sbs[fold_i] = sbs_id

        model = None
        if retained:
            rows = []
            for k in train_keys:
                target = np.asarray([
                    table.mean_over_reps(k, opt, B_opt) for opt in portfolio
                ])
                for rep in range(scenario.n_feature_reps):
                    rows.append((feature_store[(k, rep)].features, target))
            model = train_selector(
                rows, retained, portfolio,
                seed=derive_seed(scenario.master_seed, "selector",
                                 scenario.suite_id, scenario.dimension,
                                 B, split.B_ELA, fold_i))

        for k in test_keys:
            sbs_perf_k = table.mean_over_reps(k, sbs_id, B)
            vf, _ = vbs_full_map[k]
            vo, _ = vbs_opt_map[k]
            for rep in range(scenario.n_feature_reps):
                fr = feature_store[(k, rep)]
                if model is not None:
                    a_star = predict_select(model, fr.features)
                else:
                    # degenerate fallback: run the fold SBS on B_opt
                    a_star = sbs_id
                a_perf = table.mean_over_reps(k, a_star, B_opt)
                records.append(Record(
                    fold=fold_i, key=k, rep=rep,
                    ela_perf=fr.ela_perf,
                    selected=a_star,
                    a_star_perf=a_perf,
                    pias_perf=pias_perf(fr.ela_perf, a_perf),
                    vbs_full=vf, vbs_opt=vo,
                    sbs_id=sbs_id, sbs_perf=sbs_perf_k,
                ))

    records.sort(key=lambda r: (r.fold, r.key, r.rep))
    # per-instance means over feature repetitions, then scenario means
    by_key = {}
    for r in records:
        by_key.setdefault(r.key, []).append(r)
    inst_pias = [float(np.mean([r.pias_perf for r in rs])) for rs in by_key.values()]
    inst_ela = [float(np.mean([r.ela_perf for r in rs])) for rs in by_key.values()]
    inst_sbs = [rs[0].sbs_perf for rs in by_key.values()]
    inst_vf = [rs[0].vbs_full for rs in by_key.values()]
    inst_vo = [rs[0].vbs_opt for rs in by_key.values()]

    mean_pias = float(np.mean(inst_pias))
    mean_sbs = float(np.mean(inst_sbs))
    mean_vf = float(np.mean(inst_vf))
    mean_vo = float(np.mean(inst_vo))
    mean_ela = float(np.mean(inst_ela))

    try:
        gap = gap_closed(mean_sbs, mean_vf, mean_pias)
    except UndefinedGap:
        gap = None
        flags.add("degenerate_gap")
    dec = decompose_loss(mean_vf, mean_vo, mean_pias)
    if dec.relative_budget_loss is None:
        flags.add("relative_loss_undefined")

    return ScenarioResult(
        scenario=scenario,
        records=tuple(records),
        fold_sbs=fold_sbs,
        sbs_perf=mean_sbs,
        vbs_full=mean_vf,
        vbs_opt=mean_vo,
        ela_perf=mean_ela,
        pias_perf=mean_pias,
        gap_closed=gap,
        budget_loss=dec.budget_loss,
        selection_loss=dec.selection_loss,
        relative_budget_loss=dec.relative_budget_loss,
        flags=tuple(sorted(flags)),
    )
