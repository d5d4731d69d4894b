"""Budget-aware per-instance algorithm selection for black-box optimization.

The budget B is split into a probing phase (B_ELA evaluations that feed
landscape features to a trained selector) and an optimization phase for
the chosen algorithm; the package measures what that split costs and
when it pays off.
"""

from ._backend import backend_name
from .seeding import derive_seed, rng_from
from .sampling import SamplePlan, sobol_points, scale_to_box
from .suites import (
    BBOB_LITE, MABBOB_LITE, ROG_LITE,
    ProblemInstance, InstanceSet,
    bbob_instance, bbob_set, mabbob_instance, mabbob_from_seed, mabbob_set,
    rog_instance, rog_set, instance_from_manifest, evaluate,
)
from .features import FEATURE_NAMES, Sample, compute_features, filter_features
from .optimizers import (
    CANONICAL_ORDER, BudgetExhausted, Trajectory, run, run_portfolio,
)
from .perfdb import (
    attainment_score, AttainmentNormalizer, RogNormalizer, rog_normalize,
    PerformanceTable, build_table, table_from_csv,
)
from .forest import MultiOutputForest
from .selector import (
    BudgetSplit, Scenario, FeatureRecord, ScenarioResult, UndefinedGap,
    sbs_full, vbs, pias_perf, gap_closed, decompose_loss, LossDecomposition,
    train_selector, predict_select, cv_split, evaluate_scenario,
)
from .portfolio import (
    ComplementarityTarget, complementarity, shapley_estimate, select_portfolio,
)
from .harness import GridConfig, load_config, make_config

__version__ = "0.1.0"
