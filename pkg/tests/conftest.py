import os

import pytest

from pias import harness

# minimal grid per the smallest supported study: one suite, one dim,
# a couple of functions/instances, two optimizers
MINIMAL_RAW = {
    "suites": ["BBOB_LITE"],
    "dimensions": [2],
    "budget_factors": [10, 25],
    "ela_budget_factors": [5, 10],
    "portfolio_sizes": [2],
    "n_reps": 2,
    "bbob_instances": 2,
    "bbob_function_ids": [1, 3, 9],
    "optimizers": ["RANDOM_SEARCH", "ONE_PLUS_ONE_ES"],
    "max_budget_factor": 25,
    "fold_count": 2,
    "search_iterations": 30,
    "shapley_permutations": 30,
    "forest_trees": 30,
    "master_seed": 11,
}


def run_minimal(out_dir, master_seed=11) -> harness.GridConfig:
    cfg = harness.make_config({**MINIMAL_RAW, "out_dir": str(out_dir),
                               "master_seed": master_seed})
    harness.cmd_run_suite(cfg)
    harness.cmd_build_portfolio(cfg)
    harness.cmd_select(cfg)
    return cfg


@pytest.fixture(scope="session")
def minimal_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("minimal_grid")
    cfg = run_minimal(out)
    return cfg


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_recorder():
    def record(criterion: int, ok: bool, detail: str = ""):
        line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f"  ({detail})"
        _ACCEPTANCE_LINES.append((criterion, line))
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.line(line)
