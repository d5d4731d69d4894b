"""Grid configuration, on-disk study layout, stage wiring and the
CLI: validation errors, cardinality formulas, idempotent reruns and
byte-identical regeneration."""

import json
import os

import pytest

from pias import cli, harness
from pias.harness import ConfigError, GridConfig, MissingDependency, make_config

from conftest import MINIMAL_RAW


def minimal_cfg(**over):
    raw = dict(MINIMAL_RAW)
    raw.update(over)
    return make_config(raw)


# -------------------------------------------------------------- config

def test_defaults_fill_missing_keys():
    cfg = make_config({})
    assert cfg.suites == ("BBOB_LITE", "MABBOB_LITE", "ROG_LITE")
    assert cfg.n_reps == 5
    assert cfg.fold_count == 5
    assert len(cfg.optimizers) == 8
    assert cfg.master_seed == 0


@pytest.mark.parametrize("raw,msg", [
    ({"bogus_key": 1}, "unknown config keys"),
    ({"suites": ["NOPE"]}, "unknown suite"),
    ({"optimizers": ["RANDOM_SEARCH", "GRADIENT_DESCENT"]}, "unknown optimizer"),
    ({"portfolio_sizes": [0]}, "portfolio size"),
    ({"portfolio_sizes": ["half"]}, "portfolio size"),
    ({"portfolio_sizes": [9]}, "exceeds the optimizer count"),
    ({"budget_factors": [100], "max_budget_factor": 50},
     "max_budget_factor below"),
    ({"n_reps": 0}, "positive integer"),
    ({"fold_count": -1}, "positive integer"),
    ({"jobs": 0}, "positive integer"),
    ({"bbob_function_ids": [1, 99]}, "unknown function id"),
    ({"budget_factors": [10], "ela_budget_factors": [10],
      "max_budget_factor": 10}, "no .B, B_ELA. pair"),
])
def test_config_rejections(raw, msg):
    with pytest.raises(ConfigError, match=msg):
        make_config(raw)


def test_valid_pairs_and_checkpoints_minimal():
    cfg = minimal_cfg()
    assert cfg.valid_pairs() == [(10, 5), (25, 5), (25, 10)]
    assert cfg.ela_factors_used() == [5, 10]
    # 25*2 cap, full budgets 20/50, leftovers 10/40/30
    assert cfg.checkpoints(2) == (10, 20, 30, 40, 50)


def test_resolved_sizes_full_and_dedup():
    cfg = make_config({"portfolio_sizes": [4, "full"]})
    assert cfg.resolved_sizes() == [4, 8]
    cfg = make_config({"portfolio_sizes": ["full", 8, 4]})
    assert cfg.resolved_sizes() == [8, 4]
    assert minimal_cfg().resolved_sizes() == [2]


def test_optimizers_stored_canonical():
    cfg = make_config({"optimizers": ["PSO", "RANDOM_SEARCH"],
                       "portfolio_sizes": [2]})
    assert cfg.optimizers == ("RANDOM_SEARCH", "PSO")


def test_content_hash_ignores_out_dir_and_jobs():
    a = minimal_cfg()
    b = minimal_cfg(out_dir="elsewhere", jobs=7)
    assert a.content_hash() == b.content_hash()
    c = minimal_cfg(n_reps=3)
    assert c.content_hash() != a.content_hash()


def test_overrides_apply_and_none_ignored():
    cfg = make_config(dict(MINIMAL_RAW),
                      overrides={"master_seed": 5, "jobs": None})
    assert cfg.master_seed == 5
    assert cfg.jobs == 1


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        harness.load_config(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError, match="not valid JSON"):
        harness.load_config(bad)


def test_load_config_round_trip(tmp_path):
    p = tmp_path / "grid.json"
    p.write_text(json.dumps(MINIMAL_RAW))
    cfg = harness.load_config(p, {"master_seed": 3})
    assert isinstance(cfg, GridConfig)
    assert cfg.master_seed == 3
    assert cfg.budget_factors == (10, 25)


# ---------------------------------------------------------- study layout

SUITE_FILES = ("manifest.json", "trajectories.csv", "features.csv",
               "table.csv", "instances.json", "portfolios.json")


def test_minimal_run_layout(minimal_run):
    out = minimal_run.out_dir
    assert os.path.exists(os.path.join(out, "run_manifest.json"))
    sdir = os.path.join(out, "BBOB_LITE_d2")
    for name in SUITE_FILES:
        assert os.path.exists(os.path.join(sdir, name)), name
    rdir = os.path.join(out, "results")
    assert os.path.exists(os.path.join(rdir, "results.csv"))
    names = sorted(n for n in os.listdir(rdir) if n.startswith("scenario_"))
    assert names == [
        "scenario_BBOB_LITE_d2_s2_B10_E5.json",
        "scenario_BBOB_LITE_d2_s2_B25_E10.json",
        "scenario_BBOB_LITE_d2_s2_B25_E5.json",
    ]


def test_run_manifest_carries_config_hash(minimal_run):
    with open(os.path.join(minimal_run.out_dir, "run_manifest.json")) as fh:
        man = json.load(fh)
    assert man["config_hash"] == minimal_run.content_hash()
    assert man["config"] == json.loads(
        json.dumps(minimal_run.canonical_dict()))


def count_lines(path):
    with open(path) as fh:
        return sum(1 for _ in fh)


def test_row_counts_match_cardinalities(minimal_run):
    sdir = os.path.join(minimal_run.out_dir, "BBOB_LITE_d2")
    n_keys = 3 * 2          # functions x instances
    n_opts = 2
    n_reps = 2
    n_ckpts = 5
    assert count_lines(os.path.join(sdir, "trajectories.csv")) == \
        1 + n_keys * n_opts * n_reps
    assert count_lines(os.path.join(sdir, "table.csv")) == \
        1 + n_keys * n_opts * n_reps * n_ckpts
    # features: one row per (key, usable ELA factor, rep)
    assert count_lines(os.path.join(sdir, "features.csv")) == \
        1 + n_keys * 2 * n_reps
    with open(os.path.join(sdir, "instances.json")) as fh:
        inst = json.load(fh)
    assert len(inst) == n_keys


def test_suite_manifest_contents(minimal_run):
    sdir = os.path.join(minimal_run.out_dir, "BBOB_LITE_d2")
    with open(os.path.join(sdir, "manifest.json")) as fh:
        man = json.load(fh)
    assert man["config_hash"] == minimal_run.content_hash()
    assert man["checkpoints"] == [10, 20, 30, 40, 50]
    assert man["instance_ids"] == [1, 2]
    assert "rog_norm" not in man


def test_minimal_portfolios_empty_for_full_size(minimal_run):
    # the only requested size equals the optimizer count, so no subset
    # search output is needed
    sdir = os.path.join(minimal_run.out_dir, "BBOB_LITE_d2")
    with open(os.path.join(sdir, "portfolios.json")) as fh:
        assert json.load(fh) == []


def test_results_csv_shape(minimal_run):
    rdir = os.path.join(minimal_run.out_dir, "results")
    with open(os.path.join(rdir, "results.csv")) as fh:
        header = fh.readline().rstrip("\n")
        rows = [l.rstrip("\n").split(",") for l in fh]
    assert header == harness._RESULT_HEADER
    assert len(rows) == 3  # 1 suite x 1 dim x 1 size x 3 pairs
    for r in rows:
        assert len(r) == 14
        assert "error" not in r[13]
        assert float(r[8]) >= 0.0  # pias_perf parses


def test_scenario_json_consistent_with_results(minimal_run):
    rdir = os.path.join(minimal_run.out_dir, "results")
    with open(os.path.join(rdir, "scenario_BBOB_LITE_d2_s2_B25_E5.json")) as fh:
        doc = json.load(fh)
    assert doc["B"] == 50 and doc["B_ELA"] == 10
    assert len(doc["records"]) == 6 * 2  # keys x reps
    with open(os.path.join(rdir, "results.csv")) as fh:
        fh.readline()
        row = next(l.split(",") for l in fh
                   if l.startswith("BBOB_LITE,2,2,25,5,"))
    assert float(row[8]) == doc["pias_perf"]
    assert float(row[5]) == doc["sbs_perf"]


# ----------------------------------------------------- rerun behaviour

def test_rerun_skips_completed_suite(minimal_run):
    out = harness.cmd_run_suite(minimal_run)
    assert out == {"completed": [], "skipped": ["BBOB_LITE_d2"]}


def test_deleted_file_regenerated_byte_identically(minimal_run):
    sdir = os.path.join(minimal_run.out_dir, "BBOB_LITE_d2")
    before = {}
    for name in ("trajectories.csv", "features.csv", "table.csv"):
        with open(os.path.join(sdir, name), "rb") as fh:
            before[name] = fh.read()
    os.remove(os.path.join(sdir, "trajectories.csv"))
    out = harness.cmd_run_suite(minimal_run)
    assert out["completed"] == ["BBOB_LITE_d2"]
    for name, blob in before.items():
        with open(os.path.join(sdir, name), "rb") as fh:
            assert fh.read() == blob, name


def test_foreign_config_hash_refused(minimal_run):
    other = make_config({**MINIMAL_RAW, "n_reps": 3,
                         "out_dir": minimal_run.out_dir})
    with pytest.raises(ConfigError, match="different config"):
        harness.cmd_run_suite(other)
    with pytest.raises(ConfigError, match="different config"):
        harness.cmd_build_portfolio(other)
    with pytest.raises(ConfigError, match="different config"):
        harness.cmd_select(other)


def test_missing_upstream_artifacts(tmp_path):
    cfg = make_config({**MINIMAL_RAW, "out_dir": str(tmp_path / "empty")})
    with pytest.raises(MissingDependency, match="run-suite output missing"):
        harness.cmd_build_portfolio(cfg)
    with pytest.raises(MissingDependency, match="run-suite output missing"):
        harness.cmd_select(cfg)
    with pytest.raises(MissingDependency, match="results.csv"):
        harness.cmd_report(str(tmp_path / "nowhere"), str(tmp_path / "rep"))


def test_jobs_override_reproduces_results(minimal_run, tmp_path):
    # thread-parallel trajectory runs merge deterministically
    out = tmp_path / "jobs2"
    cfg = make_config({**MINIMAL_RAW, "out_dir": str(out), "jobs": 2})
    harness.cmd_run_suite(cfg)
    for name in ("trajectories.csv", "table.csv", "features.csv"):
        a = os.path.join(minimal_run.out_dir, "BBOB_LITE_d2", name)
        b = os.path.join(out, "BBOB_LITE_d2", name)
        with open(a, "rb") as fa, open(b, "rb") as fb:
            assert fa.read() == fb.read(), name


# --------------------------------------------------------------- report

def test_report_outputs(minimal_run, tmp_path):
    rdir = os.path.join(minimal_run.out_dir, "results")
    out = tmp_path / "report"
    summary = harness.cmd_report(rdir, str(out))
    assert summary == {"rows": 3, "ok": 3}
    for name in ("heatmap.csv", "gap_lines.csv", "scatter.csv",
                 "decomposition.csv", "relative_loss.csv"):
        assert (out / name).exists(), name

    lines = (out / "heatmap.csv").read_text().strip().split("\n")
    assert lines[0] == "function,ela_5,ela_10"
    body = [l.split(",") for l in lines[1:]]
    assert [r[0] for r in body] == ["BBOB_LITE:f1", "BBOB_LITE:f3",
                                    "BBOB_LITE:f9", "mean"]
    # the mean row averages the per-function cells above it
    for col in (1, 2):
        vals = [float(r[col]) for r in body[:-1] if r[col] != ""]
        assert abs(float(body[-1][col]) - sum(vals) / len(vals)) < 1e-12

    scatter = (out / "scatter.csv").read_text().strip().split("\n")
    assert len(scatter) == 1 + 3
    # ela fractions 5/10, 5/25, 10/25
    fracs = sorted(float(l.split(",")[-1]) for l in scatter[1:])
    assert fracs == [0.2, 0.4, 0.5]

    rel = (out / "relative_loss.csv").read_text().strip().split("\n")
    assert rel[0] == "ela_fraction,n,mean,ci_lo,ci_hi"
    for line in rel[1:]:
        frac, n, m, lo, hi = line.split(",")
        assert float(lo) <= float(m) <= float(hi)


# ------------------------------------------------------------------ CLI

def test_cli_bad_config_exits_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"bogus": 1}))
    assert cli.main(["run-suite", "--config", str(p)]) == 2
    assert "config error" in capsys.readouterr().err


def test_cli_override_can_invalidate(tmp_path):
    p = tmp_path / "grid.json"
    p.write_text(json.dumps(MINIMAL_RAW))
    # capping below the largest requested budget factor is a config error
    assert cli.main(["run-suite", "--config", str(p),
                     "--max-budget-factor", "5"]) == 2


def test_cli_missing_artifacts_exits_3(tmp_path, capsys):
    p = tmp_path / "grid.json"
    p.write_text(json.dumps({**MINIMAL_RAW,
                             "out_dir": str(tmp_path / "none")}))
    assert cli.main(["select", "--config", str(p)]) == 3
    assert "missing artifacts" in capsys.readouterr().err
    assert cli.main(["report", "--results", str(tmp_path / "no"),
                     "--out", str(tmp_path / "rep")]) == 3


def test_cli_report_success_prints_summary(minimal_run, tmp_path, capsys):
    rdir = os.path.join(minimal_run.out_dir, "results")
    rc = cli.main(["report", "--results", rdir,
                   "--out", str(tmp_path / "rep")])
    assert rc == 0
    assert json.loads(capsys.readouterr().out) == {"rows": 3, "ok": 3}


def test_cli_requires_subcommand():
    with pytest.raises(SystemExit):
        cli.main([])
