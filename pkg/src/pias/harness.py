"""Grid orchestration: run trajectories and feature samples, build
sub-portfolios, evaluate selection scenarios, and emit plot-ready CSVs.

Storage is one directory per (suite, dimension) with content-hashed
manifests, so completed work is skipped on re-runs and every artifact
is a pure function of the config and master seed.
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from . import features as feat_mod
from . import optimizers as opt_mod
from . import perfdb, portfolio as port_mod, selector as sel_mod, suites
from .sampling import SamplePlan, scale_to_box, sobol_points
from .seeding import derive_seed, fnv1a64


class ConfigError(ValueError):
    pass


class MissingDependency(RuntimeError):
    pass


_DEFAULTS = {
    "suites": ["BBOB_LITE", "MABBOB_LITE", "ROG_LITE"],
    "dimensions": [2, 5],
    "budget_factors": [10, 15, 25, 50, 100, 250, 500],
    "ela_budget_factors": [5, 10, 25, 50, 100, 250],
    "portfolio_sizes": [4, "full"],
    "n_reps": 5,
    "bbob_instances": 5,
    "bbob_function_ids": list(suites.BBOB_FUNCTION_IDS),
    "generator_instances": 50,
    "optimizers": list(opt_mod.CANONICAL_ORDER),
    "max_budget_factor": 500,
    "master_seed": 0,
    "fold_count": 5,
    "rog_exclude": [],
    "shapley_permutations": 200,
    "search_iterations": 500,
    "forest_trees": 100,
    "out_dir": "pias_out",
    "jobs": 1,
}

# fields that do not change the data, only how it is produced
_NON_HASHED = ("out_dir", "jobs")


@dataclass(frozen=True)
class GridConfig:
    suites: tuple
    dimensions: tuple
    budget_factors: tuple
    ela_budget_factors: tuple
    portfolio_sizes: tuple
    n_reps: int
    bbob_instances: int
    bbob_function_ids: tuple
    generator_instances: int
    optimizers: tuple
    max_budget_factor: int
    master_seed: int
    fold_count: int
    rog_exclude: tuple
    shapley_permutations: int
    search_iterations: int
    forest_trees: int
    out_dir: str
    jobs: int

    def valid_pairs(self):
        """(B_factor, ELA_factor) pairs with B_ELA strictly below B."""
        return [
            (bf, ef)
            for bf in self.budget_factors
            for ef in self.ela_budget_factors
            if ef < bf and bf <= self.max_budget_factor
        ]

    def checkpoints(self, d: int):
        pts = {self.max_budget_factor * d}
        for bf, ef in self.valid_pairs():
            pts.add(bf * d)
            pts.add((bf - ef) * d)
        return tuple(sorted(pts))

    def ela_factors_used(self):
        return sorted({ef for _, ef in self.valid_pairs()})

    def resolved_sizes(self):
        out = []
        for s in self.portfolio_sizes:
            n = len(self.optimizers) if s == "full" else int(s)
            if n not in out:
                out.append(n)
        return out

    def canonical_dict(self) -> dict:
        d = asdict(self)
        for k in _NON_HASHED:
            d.pop(k)
        return d

    def content_hash(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True).encode()
        return f"{fnv1a64(blob):016x}"


def load_config(path, overrides=None) -> GridConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    return make_config(raw, overrides)


def make_config(raw: dict, overrides=None) -> GridConfig:
    unknown = set(raw) - set(_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = dict(_DEFAULTS)
    merged.update(raw)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})

    for suite in merged["suites"]:
        if suite not in (suites.BBOB_LITE, suites.MABBOB_LITE, suites.ROG_LITE):
            raise ConfigError(f"unknown suite {suite!r}")
    for opt in merged["optimizers"]:
        if opt not in opt_mod.CANONICAL_ORDER:
            raise ConfigError(f"unknown optimizer {opt!r}")
    for s in merged["portfolio_sizes"]:
        if s != "full" and (not isinstance(s, int) or s < 1):
            raise ConfigError(f"portfolio size must be a positive int or 'full', got {s!r}")
        if s != "full" and s > len(merged["optimizers"]):
            raise ConfigError(f"portfolio size {s} exceeds the optimizer count")
    if merged["max_budget_factor"] < max(merged["budget_factors"], default=0):
        raise ConfigError("max_budget_factor below the largest budget factor")
    for n in ("n_reps", "bbob_instances", "generator_instances", "fold_count",
              "shapley_permutations", "search_iterations", "forest_trees",
              "jobs"):
        if not isinstance(merged[n], int) or merged[n] < 1:
            raise ConfigError(f"{n} must be a positive integer")
    for fid in merged["bbob_function_ids"]:
        if fid not in suites.BBOB_FUNCTION_IDS:
            raise ConfigError(f"unknown function id {fid}")

    cfg = GridConfig(
        suites=tuple(merged["suites"]),
        dimensions=tuple(int(x) for x in merged["dimensions"]),
        budget_factors=tuple(sorted(int(x) for x in merged["budget_factors"])),
        ela_budget_factors=tuple(sorted(int(x) for x in merged["ela_budget_factors"])),
        portfolio_sizes=tuple(merged["portfolio_sizes"]),
        n_reps=merged["n_reps"],
        bbob_instances=merged["bbob_instances"],
        bbob_function_ids=tuple(merged["bbob_function_ids"]),
        generator_instances=merged["generator_instances"],
        optimizers=tuple(opt_mod.canonical_sort(merged["optimizers"])),
        max_budget_factor=merged["max_budget_factor"],
        master_seed=merged["master_seed"],
        fold_count=merged["fold_count"],
        rog_exclude=tuple(merged["rog_exclude"]),
        shapley_permutations=merged["shapley_permutations"],
        search_iterations=merged["search_iterations"],
        forest_trees=merged["forest_trees"],
        out_dir=str(merged["out_dir"]),
        jobs=merged["jobs"],
    )
    if not cfg.valid_pairs():
        raise ConfigError("no (B, B_ELA) pair satisfies B_ELA < B")
    return cfg


# ------------------------------------------------------------- storage

def _suite_dir(cfg: GridConfig, suite: str, d: int) -> str:
    return os.path.join(cfg.out_dir, f"{suite}_d{d}")


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.17g}"


def build_instance_set(cfg: GridConfig, suite: str, d: int) -> suites.InstanceSet:
    if suite == suites.BBOB_LITE:
        return suites.bbob_set(d, cfg.bbob_instances, cfg.bbob_function_ids)
    if suite == suites.MABBOB_LITE:
        return suites.mabbob_set(d, cfg.generator_instances, cfg.master_seed)
    if suite == suites.ROG_LITE:
        return suites.rog_set(d, cfg.generator_instances, cfg.master_seed,
                              exclude=cfg.rog_exclude)
    raise ConfigError(f"unknown suite {suite!r}")


@dataclass(frozen=True)
class StoredTrajectory:
    """A trajectory downsampled to the stored budget checkpoints."""
    optimizer: str
    suite_id: str
    function_id: int
    instance_id: int
    dimension: int
    repetition: int
    seed: int
    checkpoints: tuple
    values: np.ndarray
    raw_window_max: float

    @property
    def length(self) -> int:
        return self.checkpoints[-1]

    @property
    def best_error(self) -> np.ndarray:
        return self.values

    def best_at(self, budget: int) -> float:
        return float(self.values[self.checkpoints.index(budget)])


def _downsample(traj: opt_mod.Trajectory, checkpoints) -> StoredTrajectory:
    vals = np.asarray([traj.best_at(b) for b in checkpoints])
    return StoredTrajectory(
        optimizer=traj.optimizer, suite_id=traj.suite_id,
        function_id=traj.function_id, instance_id=traj.instance_id,
        dimension=traj.dimension, repetition=traj.repetition,
        seed=traj.seed, checkpoints=tuple(checkpoints), values=vals,
        raw_window_max=traj.raw_window_max)


def _write_trajectories(path, stored, checkpoints):
    cols = ",".join(f"b{b}" for b in checkpoints)
    lines = [f"optimizer,fid,iid,rep,seed,raw_window_max,{cols}"]
    for t in sorted(stored, key=lambda t: (opt_mod.canonical_index(t.optimizer),
                                           t.function_id, t.instance_id,
                                           t.repetition)):
        vals = ",".join(_fmt(v) for v in t.values)
        lines.append(f"{t.optimizer},{t.function_id},{t.instance_id},"
                     f"{t.repetition},{t.seed},{_fmt(t.raw_window_max)},{vals}")
    _atomic_write(path, "\n".join(lines) + "\n")


def _read_trajectories(path, suite, d):
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split(",")
        checkpoints = tuple(int(c[1:]) for c in header[6:])
        out = {}
        for line in fh:
            parts = line.rstrip("\n").split(",")
            opt, fid, iid, rep = parts[0], int(parts[1]), int(parts[2]), int(parts[3])
            seed = int(parts[4])
            raw_max = float(parts[5])
            vals = np.asarray([float(v) for v in parts[6:]])
            out[(opt, (fid, iid), rep)] = StoredTrajectory(
                optimizer=opt, suite_id=suite, function_id=fid,
                instance_id=iid, dimension=d, repetition=rep, seed=seed,
                checkpoints=checkpoints, values=vals, raw_window_max=raw_max)
    return out, checkpoints


def _write_features(path, rows):
    head = "fid,iid,ela_budget,rep,best_raw," + ",".join(feat_mod.FEATURE_NAMES)
    lines = [head]
    for (fid, iid, eb, rep), (best_raw, fv) in sorted(rows.items()):
        vals = ",".join(_fmt(fv[n]) for n in feat_mod.FEATURE_NAMES)
        lines.append(f"{fid},{iid},{eb},{rep},{_fmt(best_raw)},{vals}")
    _atomic_write(path, "\n".join(lines) + "\n")


def _read_features(path):
    rows = {}
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split(",")
        names = header[5:]
        for line in fh:
            parts = line.rstrip("\n").split(",")
            fid, iid, eb, rep = (int(parts[0]), int(parts[1]),
                                 int(parts[2]), int(parts[3]))
            best_raw = float(parts[4])
            fv = {}
            for name, tok in zip(names, parts[5:]):
                fv[name] = float(tok) if tok else float("nan")
            rows[(fid, iid, eb, rep)] = (best_raw, fv)
    return rows


# ------------------------------------------------------------ run-suite

def _run_one_suite(cfg: GridConfig, suite: str, d: int) -> str:
    """Returns 'skipped' or 'completed'."""
    sdir = _suite_dir(cfg, suite, d)
    os.makedirs(sdir, exist_ok=True)
    man_path = os.path.join(sdir, "manifest.json")
    chash = cfg.content_hash()
    traj_path = os.path.join(sdir, "trajectories.csv")
    feat_path = os.path.join(sdir, "features.csv")
    table_path = os.path.join(sdir, "table.csv")
    inst_path = os.path.join(sdir, "instances.json")

    manifest = None
    if os.path.exists(man_path):
        with open(man_path) as fh:
            manifest = json.load(fh)
        if manifest.get("config_hash") != chash:
            raise ConfigError(
                f"{sdir} holds results for a different config "
                f"(hash {manifest.get('config_hash')} != {chash}); "
                "remove the directory or restore the original config")
        if all(os.path.exists(p) for p in (traj_path, feat_path, table_path,
                                           inst_path)):
            return "skipped"

    inst_set = build_instance_set(cfg, suite, d)
    checkpoints = cfg.checkpoints(d)
    max_budget = cfg.max_budget_factor * d

    # trajectories (parallel over runs, deterministic merge)
    work = []
    for opt in cfg.optimizers:
        for inst in inst_set.instances:
            for rep in range(cfg.n_reps):
                seed = opt_mod.run_seed(cfg.master_seed, suite, d,
                                        inst.function_id, inst.instance_id,
                                        opt, rep)
                work.append((opt, inst, rep, seed))

    def _one(args):
        opt, inst, rep, seed = args
        return _downsample(opt_mod.run(opt, inst, max_budget, seed, rep),
                           checkpoints)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            stored = list(pool.map(_one, work))
    else:
        stored = [_one(w) for w in work]
    trajs = {(t.optimizer, (t.function_id, t.instance_id), t.repetition): t
             for t in stored}

    # feature samples for every usable ELA factor
    frows = {}
    for inst in inst_set.instances:
        for ef in cfg.ela_factors_used():
            n = ef * d
            for rep in range(cfg.n_reps):
                sc = derive_seed(cfg.master_seed, "ela", suite, d,
                                 inst.function_id, inst.instance_id, ef, rep)
                plan = SamplePlan(d, n, repetition_index=rep, scramble_seed=sc)
                X = scale_to_box(sobol_points(plan), inst.lower, inst.upper)
                y = inst.evaluate_batch(X)
                sample = feat_mod.Sample(X, y)
                fv = feat_mod.compute_features(sample)
                frows[(inst.function_id, inst.instance_id, n, rep)] = (
                    float(y.min()), fv)

    # performance table
    if suite == suites.ROG_LITE:
        normalizers = {}
        for inst in inst_set.instances:
            k = inst.key
            normalizers[k] = perfdb.rog_normalize(
                [t for key, t in trajs.items() if key[1] == k])
    else:
        normalizers = perfdb.AttainmentNormalizer()
    table = perfdb.build_table(trajs, checkpoints, normalizers)

    _write_trajectories(traj_path, stored, checkpoints)
    _write_features(feat_path, frows)
    table.to_csv(table_path + ".tmp")
    os.replace(table_path + ".tmp", table_path)
    _atomic_write(inst_path, json.dumps(
        [i.manifest() for i in inst_set.instances], indent=1) + "\n")

    man = {
        "config_hash": chash,
        "suite": suite,
        "d": d,
        "status": "complete",
        "checkpoints": list(checkpoints),
        "instance_ids": list(inst_set.instance_ids),
        "degenerate_keys": sorted([list(k) for k in table.degenerate_keys]),
    }
    if suite == suites.ROG_LITE:
        man["rog_norm"] = {
            f"{k[0]}:{k[1]}": [normalizers[k].v_min, normalizers[k].v_max]
            for k in sorted(normalizers)
        }
    _atomic_write(man_path, json.dumps(man, indent=1) + "\n")
    return "completed"


def cmd_run_suite(cfg: GridConfig) -> dict:
    os.makedirs(cfg.out_dir, exist_ok=True)
    _atomic_write(os.path.join(cfg.out_dir, "run_manifest.json"), json.dumps({
        "config": cfg.canonical_dict(),
        "config_hash": cfg.content_hash(),
    }, indent=1, sort_keys=True) + "\n")
    summary = {"completed": [], "skipped": []}
    for suite in cfg.suites:
        for d in cfg.dimensions:
            status = _run_one_suite(cfg, suite, d)
            summary[status].append(f"{suite}_d{d}")
    return summary


# ------------------------------------------------------ portfolio build

def _load_suite_dir(cfg: GridConfig, suite: str, d: int):
    sdir = _suite_dir(cfg, suite, d)
    man_path = os.path.join(sdir, "manifest.json")
    if not os.path.exists(man_path):
        raise MissingDependency(f"run-suite output missing for {suite} d={d}")
    with open(man_path) as fh:
        man = json.load(fh)
    if man.get("config_hash") != cfg.content_hash():
        raise ConfigError(f"{sdir} was produced by a different config")
    table = perfdb.table_from_csv(os.path.join(sdir, "table.csv"))
    return sdir, man, table


def cmd_build_portfolio(cfg: GridConfig) -> dict:
    built = {}
    for suite in cfg.suites:
        for d in cfg.dimensions:
            sdir, man, table = _load_suite_dir(cfg, suite, d)
            degenerate = {tuple(k) for k in man.get("degenerate_keys", [])}
            keys = [k for k in table.instance_keys if k not in degenerate]
            sizes = [s for s in cfg.resolved_sizes() if s < len(cfg.optimizers)]
            entries = []
            for bf in sorted({bf for bf, _ in cfg.valid_pairs()}):
                target = port_mod.ComplementarityTarget(table, keys, bf * d)
                for size in sizes:
                    choice = port_mod.select_portfolio(
                        target, cfg.optimizers, size=size,
                        iterations=cfg.search_iterations,
                        seed=derive_seed(cfg.master_seed, "portfolio",
                                         suite, d, bf, size),
                        n_permutations=cfg.shapley_permutations)
                    entries.append({
                        "suite": suite, "d": d, "B_factor": bf, "size": size,
                        "members": list(choice.members),
                        "complementarity": choice.complementarity,
                        "shapley_values": choice.shapley,
                        "scheme": choice.scheme,
                    })
            _atomic_write(os.path.join(sdir, "portfolios.json"),
                          json.dumps(entries, indent=1) + "\n")
            built[f"{suite}_d{d}"] = len(entries)
    return built


# --------------------------------------------------------------- select

def _normalizer_for(man: dict, suite: str, key):
    if suite == suites.ROG_LITE:
        vmin, vmax = man["rog_norm"][f"{key[0]}:{key[1]}"]
        return perfdb.RogNormalizer(vmin, vmax)
    return perfdb.AttainmentNormalizer()


def _result_row(suite, d, size, bf, ef, res) -> str:
    if res is None:
        return f"{suite},{d},{size},{bf},{ef},,,,,,,,,error"
    return ",".join([
        suite, str(d), str(size), str(bf), str(ef),
        _fmt(res.sbs_perf), _fmt(res.vbs_full), _fmt(res.vbs_opt),
        _fmt(res.pias_perf),
        _fmt(res.gap_closed) if res.gap_closed is not None else "",
        _fmt(res.budget_loss), _fmt(res.selection_loss),
        _fmt(res.relative_budget_loss) if res.relative_budget_loss is not None else "",
        ";".join(res.flags),
    ])


_RESULT_HEADER = ("suite,d,portfolio_size,B_factor,B_ELA_factor,sbs_perf,"
                  "vbs_full,vbs_opt,pias_perf,gap_closed,budget_loss,"
                  "selection_loss,relative_budget_loss,flags")


def _scenario_json(res: sel_mod.ScenarioResult) -> dict:
    sc = res.scenario
    return {
        "suite": sc.suite_id,
        "d": sc.dimension,
        "portfolio": list(sc.portfolio),
        "B": sc.budget_split.B,
        "B_ELA": sc.budget_split.B_ELA,
        "fold_sbs": {str(k): v for k, v in res.fold_sbs.items()},
        "sbs_perf": res.sbs_perf,
        "vbs_full": res.vbs_full,
        "vbs_opt": res.vbs_opt,
        "ela_perf": res.ela_perf,
        "pias_perf": res.pias_perf,
        "gap_closed": res.gap_closed,
        "budget_loss": res.budget_loss,
        "selection_loss": res.selection_loss,
        "relative_budget_loss": res.relative_budget_loss,
        "flags": list(res.flags),
        "records": [
            {
                "fold": r.fold, "fid": r.key[0], "iid": r.key[1], "rep": r.rep,
                "ela_perf": r.ela_perf, "selected": r.selected,
                "a_star_perf": r.a_star_perf, "pias_perf": r.pias_perf,
                "vbs_full": r.vbs_full, "vbs_opt": r.vbs_opt,
                "sbs_id": r.sbs_id, "sbs_perf": r.sbs_perf,
            }
            for r in res.records
        ],
    }


def cmd_select(cfg: GridConfig) -> dict:
    results_dir = os.path.join(cfg.out_dir, "results")
    os.makedirs(results_dir, exist_ok=True)
    rows = []
    n_ok = 0
    n_flagged = 0
    for suite in cfg.suites:
        for d in cfg.dimensions:
            sdir, man, table = _load_suite_dir(cfg, suite, d)
            port_path = os.path.join(sdir, "portfolios.json")
            if not os.path.exists(port_path):
                raise MissingDependency(f"portfolios missing for {suite} d={d}")
            with open(port_path) as fh:
                port_entries = {(e["size"], e["B_factor"]): e["members"]
                                for e in json.load(fh)}
            frows = _read_features(os.path.join(sdir, "features.csv"))
            degenerate = {tuple(k) for k in man.get("degenerate_keys", [])}
            keys = tuple(k for k in table.instance_keys if k not in degenerate)
            iids = tuple(sorted({k[1] for k in keys}))

            for size in cfg.resolved_sizes():
                for bf, ef in cfg.valid_pairs():
                    if size == len(cfg.optimizers):
                        members = list(cfg.optimizers)
                    else:
                        members = port_entries[(size, bf)]
                    B, B_ELA = bf * d, ef * d
                    sc = sel_mod.Scenario(
                        suite_id=suite, dimension=d,
                        portfolio=tuple(members),
                        budget_split=sel_mod.BudgetSplit(B, B_ELA),
                        instance_keys=keys, instance_ids=iids,
                        fold_count=cfg.fold_count,
                        master_seed=cfg.master_seed,
                        n_feature_reps=cfg.n_reps)
                    store = {}
                    for k in keys:
                        for rep in range(cfg.n_reps):
                            best_raw, fv = frows[(k[0], k[1], B_ELA, rep)]
                            nz = _normalizer_for(man, suite, k)
                            store[(k, rep)] = sel_mod.FeatureRecord(
                                features=fv, ela_perf=nz.perf(best_raw))
                    try:
                        res = sel_mod.evaluate_scenario(sc, table, store)
                        n_ok += 1
                        if res.flags:
                            n_flagged += 1
                    except Exception:
                        res = None
                        n_flagged += 1
                    rows.append(((suite, d, size, bf, ef),
                                 _result_row(suite, d, size, bf, ef, res)))
                    if res is not None:
                        name = f"scenario_{suite}_d{d}_s{size}_B{bf}_E{ef}.json"
                        _atomic_write(os.path.join(results_dir, name),
                                      json.dumps(_scenario_json(res)) + "\n")
    rows.sort(key=lambda r: r[0])
    _atomic_write(os.path.join(results_dir, "results.csv"),
                  _RESULT_HEADER + "\n" + "\n".join(r[1] for r in rows) + "\n")
    n_pairs = len(cfg.valid_pairs())
    summary = {
        "scenarios": len(rows),
        "ok": n_ok,
        "flagged": n_flagged,
        "count_formula": (
            f"|suites|*|dims|*|sizes|*|valid pairs| = "
            f"{len(cfg.suites)}*{len(cfg.dimensions)}*"
            f"{len(cfg.resolved_sizes())}*{n_pairs} = {len(rows)}"),
    }
    return summary


# --------------------------------------------------------------- report

def _read_results(results_dir):
    path = os.path.join(results_dir, "results.csv")
    if not os.path.exists(path):
        raise MissingDependency(f"results.csv not found in {results_dir}")
    out = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split(",")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            row = dict(zip(header, parts))
            out.append(row)
    return out


def _scenario_files(results_dir):
    for name in sorted(os.listdir(results_dir)):
        if name.startswith("scenario_") and name.endswith(".json"):
            with open(os.path.join(results_dir, name)) as fh:
                yield json.load(fh)


def cmd_report(results_dir, out_dir) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    rows = _read_results(results_dir)
    ok_rows = [r for r in rows if "error" not in r["flags"]]

    # per-function PIAS minus SBS matrix over ELA factors
    cell = {}
    efs = sorted({int(r["B_ELA_factor"]) for r in ok_rows})
    for doc in _scenario_files(results_dir):
        ef = doc["B_ELA"] // doc["d"]
        for rec in doc["records"]:
            k = (f"{doc['suite']}:f{rec['fid']}", ef)
            cell.setdefault(k, []).append(rec["pias_perf"] - rec["sbs_perf"])
    funcs = sorted({k[0] for k in cell})
    lines = ["function," + ",".join(f"ela_{e}" for e in efs)]
    col_acc = {e: [] for e in efs}
    for fn in funcs:
        vals = []
        for e in efs:
            xs = cell.get((fn, e))
            v = float(np.mean(xs)) if xs else None
            if v is not None:
                col_acc[e].append(v)
            vals.append(_fmt(v))
        lines.append(fn + "," + ",".join(vals))
    lines.append("mean," + ",".join(
        _fmt(float(np.mean(col_acc[e]))) if col_acc[e] else "" for e in efs))
    _atomic_write(os.path.join(out_dir, "heatmap.csv"), "\n".join(lines) + "\n")

    # gap closed lines over B per ELA factor
    lines = ["suite,d,portfolio_size,B_factor,B_ELA_factor,gap_closed"]
    for r in ok_rows:
        if r["gap_closed"]:
            lines.append(",".join([r["suite"], r["d"], r["portfolio_size"],
                                   r["B_factor"], r["B_ELA_factor"],
                                   r["gap_closed"]]))
    _atomic_write(os.path.join(out_dir, "gap_lines.csv"), "\n".join(lines) + "\n")

    # PIAS vs SBS scatter with the budget fraction spent on features
    lines = ["suite,d,portfolio_size,B_factor,B_ELA_factor,sbs_perf,pias_perf,ela_fraction"]
    for r in ok_rows:
        frac = int(r["B_ELA_factor"]) / int(r["B_factor"])
        lines.append(",".join([r["suite"], r["d"], r["portfolio_size"],
                               r["B_factor"], r["B_ELA_factor"],
                               r["sbs_perf"], r["pias_perf"], _fmt(frac)]))
    _atomic_write(os.path.join(out_dir, "scatter.csv"), "\n".join(lines) + "\n")

    # loss decomposition scatter
    lines = ["suite,d,portfolio_size,B_factor,B_ELA_factor,budget_loss,selection_loss"]
    for r in ok_rows:
        lines.append(",".join([r["suite"], r["d"], r["portfolio_size"],
                               r["B_factor"], r["B_ELA_factor"],
                               r["budget_loss"], r["selection_loss"]]))
    _atomic_write(os.path.join(out_dir, "decomposition.csv"),
                  "\n".join(lines) + "\n")

    # relative budget loss vs fraction, mean and normal-approx 95% CI
    groups = {}
    for r in ok_rows:
        if not r["relative_budget_loss"]:
            continue
        frac = int(r["B_ELA_factor"]) / int(r["B_factor"])
        groups.setdefault(frac, []).append(float(r["relative_budget_loss"]))
    lines = ["ela_fraction,n,mean,ci_lo,ci_hi"]
    for frac in sorted(groups):
        xs = np.asarray(groups[frac])
        m = float(xs.mean())
        if xs.size > 1:
            half = 1.96 * float(xs.std(ddof=1)) / math.sqrt(xs.size)
        else:
            half = 0.0
        lines.append(f"{_fmt(frac)},{xs.size},{_fmt(m)},{_fmt(m - half)},"
                     f"{_fmt(m + half)}")
    _atomic_write(os.path.join(out_dir, "relative_loss.csv"),
                  "\n".join(lines) + "\n")
    return {"rows": len(rows), "ok": len(ok_rows)}
