"""Problem suites: three families of box-constrained instances.

BBOB_LITE    twelve classic benchmark shapes with per-instance
             translation/rotation transforms and known optimum 0.
MABBOB_LITE  log-space affine blends of BBOB_LITE components sharing a
             drawn optimum, known optimum 0.
ROG_LITE     random expression-tree functions on [-1,1]^d, optimum
             unknown.

Every instance evaluates in batch (n, d) -> (n,) and is deterministic
in its identifiers.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import kernels
from .sampling import SamplePlan, scale_to_box, sobol_points
from .seeding import derive_seed, rng_from

BBOB_LITE = "BBOB_LITE"
MABBOB_LITE = "MABBOB_LITE"
ROG_LITE = "ROG_LITE"

BBOB_FUNCTION_IDS = tuple(range(1, 13))
BBOB_FUNCTION_NAMES = {
    1: "sphere",
    2: "ellipsoid_separable",
    3: "rastrigin",
    4: "bueche_rastrigin",
    5: "slope_cone",
    6: "attractive_sector",
    7: "ellipsoid_rotated",
    8: "discus",
    9: "bent_cigar",
    10: "sharp_ridge",
    11: "rosenbrock",
    12: "schaffers_f7",
}


class EvalResult(NamedTuple):
    value: float
    error: Optional[float]


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    suite_id: str
    function_id: int
    instance_id: int
    dimension: int
    lower: float
    upper: float
    optimum_value: Optional[float]
    generator_seed: int
    x_opt: Optional[np.ndarray] = field(repr=False, default=None)
    raw: Callable = field(repr=False, default=None)

    @property
    def key(self):
        return (self.function_id, self.instance_id)

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        """Raw objective values for an (n, d) batch inside the domain.

        Use .raw directly for unchecked evaluation (blend components
        probe translated points outside the box on purpose).
        """
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dimension:
            raise ValueError(f"points must have {self.dimension} columns")
        if np.any(X < self.lower) or np.any(X > self.upper):
            raise ValueError("out of domain")
        return self.raw(X)

    def manifest(self) -> dict:
        return {
            "suite": self.suite_id,
            "fid": self.function_id,
            "iid": self.instance_id,
            "d": self.dimension,
            "seed": self.generator_seed,
        }


@dataclass(frozen=True)
class InstanceSet:
    suite_id: str
    dimension: int
    instances: tuple
    instance_ids: tuple

    def __post_init__(self):
        ids = [i.instance_id for i in self.instances]
        if len(set(self.instance_ids)) != len(self.instance_ids):
            raise ValueError("instance_ids must be unique")
        if set(ids) != set(self.instance_ids):
            raise ValueError("instance ids do not match the instance list")


def evaluate(instance: ProblemInstance, x) -> EvalResult:
    """Single-point evaluation with bounds checking."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (instance.dimension,):
        raise ValueError(f"point must have shape ({instance.dimension},)")
    if np.any(x < instance.lower) or np.any(x > instance.upper):
        raise ValueError("out of domain")
    v = float(instance.evaluate_batch(x[np.newaxis, :])[0])
    if instance.optimum_value is None:
        return EvalResult(v, None)
    return EvalResult(v, v - instance.optimum_value)


# ---------------------------------------------- instance transformations

def _t_osz(x):
    # monotone oscillation transform, elementwise, sign-preserving
    x = np.asarray(x, dtype=np.float64)
    sign = np.sign(x)
    absx = np.abs(x)
    with np.errstate(divide="ignore"):
        xhat = np.where(absx > 0.0, np.log(np.where(absx > 0.0, absx, 1.0)), 0.0)
    c1 = np.where(x > 0.0, 10.0, 5.5)
    c2 = np.where(x > 0.0, 7.9, 3.1)
    return sign * np.exp(xhat + 0.049 * (np.sin(c1 * xhat) + np.sin(c2 * xhat)))


def _t_asy(x, beta: float, d: int):
    # asymmetry transform; identity on non-positive coordinates
    idx = np.arange(d) / max(d - 1, 1)
    pos = np.maximum(x, 0.0)
    expo = 1.0 + beta * idx[np.newaxis, :] * np.sqrt(pos)
    return np.where(x > 0.0, pos ** expo, x)


def _scales(alpha: float, d: int):
    return alpha ** (0.5 * np.arange(d) / max(d - 1, 1))


def _rotation(rng: np.random.Generator, d: int) -> np.ndarray:
    """Orthogonal matrix from a seeded Gaussian draw via Gram-Schmidt."""
    B = rng.standard_normal((d, d))
    for i in range(d):
        for j in range(i):
            B[i] -= (B[i] @ B[j]) * B[j]
        B[i] /= np.linalg.norm(B[i])
    return B


def _xopt(rng: np.random.Generator, d: int) -> np.ndarray:
    return rng.uniform(-4.0, 4.0, size=d)


def _bbob_raw(fid: int, d: int, x_opt, R, Q):
    """Batch evaluator for one transformed base function.

    Every returned function is >= 0 on all of R^d and exactly 0 at
    x_opt; this global nonnegativity is what makes the log-space blend
    of the MABBOB suite well defined.
    """
    idx = np.arange(d) / max(d - 1, 1)

    if fid == 1:
        def raw(X):
            z = X - x_opt
            return np.sum(z * z, axis=1)
    elif fid == 2:
        coeff = 10.0 ** (6.0 * idx)

        def raw(X):
            z = _t_osz(X - x_opt)
            return np.sum(coeff * z * z, axis=1)
    elif fid == 3:
        lam = _scales(10.0, d)

        def raw(X):
            z = _t_asy(_t_osz(X - x_opt), 0.2, d) * lam
            return 10.0 * (d - np.sum(np.cos(2.0 * np.pi * z), axis=1)) + np.sum(z * z, axis=1)
    elif fid == 4:
        s = 10.0 ** (0.5 * idx)
        even = (np.arange(d) % 2 == 0)

        def raw(X):
            z = _t_osz(X - x_opt)
            scale = np.where(even[np.newaxis, :] & (z > 0.0), 10.0 * s, s)
            z = scale * z
            return 10.0 * (d - np.sum(np.cos(2.0 * np.pi * z), axis=1)) + np.sum(z * z, axis=1)
    elif fid == 5:
        coeff = 10.0 ** idx

        def raw(X):
            return np.sum(coeff * np.abs(X - x_opt), axis=1)
    elif fid == 6:
        lam = _scales(10.0, d)

        def raw(X):
            z = ((X - x_opt) @ R.T * lam) @ Q.T
            s = np.where(z * x_opt[np.newaxis, :] > 0.0, 100.0, 1.0)
            v = np.sum((s * z) ** 2, axis=1)
            return _t_osz(v) ** 0.9
    elif fid == 7:
        coeff = 10.0 ** (6.0 * idx)

        def raw(X):
            z = _t_osz((X - x_opt) @ R.T)
            return np.sum(coeff * z * z, axis=1)
    elif fid == 8:
        def raw(X):
            z = _t_osz((X - x_opt) @ R.T)
            return 1.0e6 * z[:, 0] ** 2 + np.sum(z[:, 1:] ** 2, axis=1)
    elif fid == 9:
        def raw(X):
            z = _t_asy((X - x_opt) @ R.T, 0.5, d) @ R.T
            return z[:, 0] ** 2 + 1.0e6 * np.sum(z[:, 1:] ** 2, axis=1)
    elif fid == 10:
        lam = _scales(10.0, d)

        def raw(X):
            z = ((X - x_opt) @ R.T * lam) @ Q.T
            return z[:, 0] ** 2 + 100.0 * np.sqrt(np.sum(z[:, 1:] ** 2, axis=1))
    elif fid == 11:
        c = max(1.0, math.sqrt(d) / 8.0)

        def raw(X):
            z = c * (X - x_opt) + 1.0
            if d == 1:
                return (z[:, 0] - 1.0) ** 2
            a = z[:, :-1]
            b = z[:, 1:]
            return np.sum(100.0 * (a * a - b) ** 2 + (a - 1.0) ** 2, axis=1)
    elif fid == 12:
        lam = _scales(10.0, d)

        def raw(X):
            z = (_t_asy((X - x_opt) @ R.T, 0.5, d) @ Q.T) * lam
            if d == 1:
                return z[:, 0] ** 2
            s = np.sqrt(z[:, :-1] ** 2 + z[:, 1:] ** 2)
            t = np.sqrt(s) * (1.0 + np.sin(50.0 * s ** 0.2) ** 2)
            return (np.mean(t, axis=1)) ** 2
    else:
        raise ValueError("unknown function")
    return raw


def bbob_instance(function_id: int, instance_id: int, dimension: int) -> ProblemInstance:
    if function_id not in BBOB_FUNCTION_IDS:
        raise ValueError("unknown function")
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    seed = derive_seed("bbob", function_id, instance_id, dimension)
    x_opt = _xopt(rng_from(seed, "xopt"), dimension)
    R = _rotation(rng_from(seed, "rot-r"), dimension)
    Q = _rotation(rng_from(seed, "rot-q"), dimension)
    x_opt.setflags(write=False)
    raw = _bbob_raw(function_id, dimension, x_opt, R, Q)
    return ProblemInstance(
        suite_id=BBOB_LITE,
        function_id=function_id,
        instance_id=instance_id,
        dimension=dimension,
        lower=-5.0,
        upper=5.0,
        optimum_value=0.0,
        generator_seed=seed,
        x_opt=x_opt,
        raw=raw,
    )


# -------------------------------------------------------- affine blends

_BLEND_EPS = 1e-8


def mabbob_instance(component_fids, component_iids, weights, seed: int,
                    dimension: int, instance_id: int = 0) -> ProblemInstance:
    """Log-space affine blend of BBOB_LITE components with a shared
    optimum drawn from seed."""
    fids = list(component_fids)
    iids = list(component_iids)
    w = np.asarray(weights, dtype=np.float64)
    if len(fids) != len(iids) or len(fids) != w.size or len(fids) < 1:
        raise ValueError("component lists and weights must have equal length >= 1")
    if np.any(w < 0.0) or not np.any(w > 0.0):
        raise ValueError("weights must be non-negative with at least one positive")
    w = w / w.sum()

    comps = [bbob_instance(f, i, dimension) for f, i in zip(fids, iids)]
    x_star = _xopt(rng_from(seed, "blend-xopt"), dimension)
    x_star.setflags(write=False)
    shifts = [c.x_opt - x_star for c in comps]
    raws = [c.raw for c in comps]

    def raw(X):
        acc = np.zeros(X.shape[0])
        for wi, sh, ri in zip(w, shifts, raws):
            if wi == 0.0:
                continue
            acc += wi * np.log10(ri(X + sh) + _BLEND_EPS)
        # mathematically >= 0; floor against rounding of the exp/log pair
        return np.maximum(10.0 ** acc - _BLEND_EPS, 0.0)

    return ProblemInstance(
        suite_id=MABBOB_LITE,
        function_id=0,
        instance_id=instance_id,
        dimension=dimension,
        lower=-5.0,
        upper=5.0,
        optimum_value=0.0,
        generator_seed=seed,
        x_opt=x_star,
        raw=raw,
    )


def mabbob_from_seed(seed: int, instance_id: int, dimension: int) -> ProblemInstance:
    """Draw component ids and weights from seed alone, so the manifest
    (suite, iid, d, seed) reconstructs the instance."""
    rng = rng_from(seed, "blend-draw")
    k = int(rng.integers(2, 5))
    fids = (rng.permutation(len(BBOB_FUNCTION_IDS))[:k] + 1).tolist()
    iids = rng.integers(1, 6, size=k).tolist()
    weights = rng.random(k)
    return mabbob_instance(fids, iids, weights, seed, dimension, instance_id)


# ---------------------------------------------------- expression trees

_ROG_MAX_DEPTH = 4
_ROG_UNARY = (kernels.OP_NEG, kernels.OP_ABS, kernels.OP_SINPI,
              kernels.OP_COSPI, kernels.OP_SQ, kernels.OP_TANH)
_ROG_BINARY = (kernels.OP_ADD, kernels.OP_SUB, kernels.OP_MUL)


def _gen_tree(rng, d: int, depth: int):
    # nested tuples: ("leaf", op, payload) | (op, child) | (op, l, r)
    if depth >= _ROG_MAX_DEPTH or (depth > 0 and rng.random() < 0.3):
        if rng.random() < 0.6:
            return ("leaf", kernels.OP_VAR, int(rng.integers(0, d)))
        return ("leaf", kernels.OP_CONST, float(rng.uniform(-1.0, 1.0)))
    if rng.random() < 0.5:
        op = _ROG_BINARY[int(rng.integers(0, len(_ROG_BINARY)))]
        return (op, _gen_tree(rng, d, depth + 1), _gen_tree(rng, d, depth + 1))
    op = _ROG_UNARY[int(rng.integers(0, len(_ROG_UNARY)))]
    return (op, _gen_tree(rng, d, depth + 1))


def _flatten(tree, prog):
    # post-order: children land before their parent
    if tree[0] == "leaf":
        _, op, payload = tree
        prog["ops"].append(op)
        prog["a1"].append(-1)
        prog["a2"].append(-1)
        if op == kernels.OP_VAR:
            prog["vidx"].append(payload)
            prog["cval"].append(0.0)
        else:
            prog["vidx"].append(-1)
            prog["cval"].append(payload)
        return len(prog["ops"]) - 1
    if len(tree) == 3:
        op, l, r = tree
        li = _flatten(l, prog)
        ri = _flatten(r, prog)
        prog["ops"].append(op)
        prog["a1"].append(li)
        prog["a2"].append(ri)
    else:
        op, c = tree
        ci = _flatten(c, prog)
        prog["ops"].append(op)
        prog["a1"].append(ci)
        prog["a2"].append(-1)
    prog["vidx"].append(-1)
    prog["cval"].append(0.0)
    return len(prog["ops"]) - 1


def _program_arrays(tree):
    prog = {"ops": [], "a1": [], "a2": [], "vidx": [], "cval": []}
    _flatten(tree, prog)
    return (
        np.asarray(prog["ops"], dtype=np.int64),
        np.asarray(prog["a1"], dtype=np.int64),
        np.asarray(prog["a2"], dtype=np.int64),
        np.asarray(prog["cval"], dtype=np.float64),
        np.asarray(prog["vidx"], dtype=np.int64),
    )


def _fallback_tree(d: int):
    t = ("leaf", kernels.OP_VAR, 0)
    for i in range(1, d):
        t = (kernels.OP_ADD, t, ("leaf", kernels.OP_VAR, i))
    return t


def rog_instance(seed: int, dimension: int, instance_id: int = 0) -> ProblemInstance:
    """Random expression-tree instance on [-1,1]^d; optimum unknown.

    Degenerate draws (constant or variable-free on a probe grid) are
    rejected and redrawn; the operator set excludes division and exp so
    values are finite everywhere on the box.
    """
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    probe_plan = SamplePlan(dimension, 64,
                            scramble_seed=derive_seed(seed, "rog-probe"))
    probe = scale_to_box(sobol_points(probe_plan), -1.0, 1.0)
    chosen = None
    for attempt in range(1000):
        rng = rng_from(seed, "rog-tree", attempt)
        tree = _gen_tree(rng, dimension, 0)
        ops, a1, a2, cval, vidx = _program_arrays(tree)
        if not np.any(ops == kernels.OP_VAR):
            continue
        vals = kernels.rog_eval(ops, a1, a2, cval, vidx, probe)
        if not np.all(np.isfinite(vals)):
            continue
        if vals.max() - vals.min() < 1e-9:
            continue
        chosen = (ops, a1, a2, cval, vidx)
        break
    if chosen is None:
        chosen = _program_arrays(_fallback_tree(dimension))
    ops, a1, a2, cval, vidx = chosen

    def raw(X):
        return kernels.rog_eval(ops, a1, a2, cval, vidx, X)

    return ProblemInstance(
        suite_id=ROG_LITE,
        function_id=0,
        instance_id=instance_id,
        dimension=dimension,
        lower=-1.0,
        upper=1.0,
        optimum_value=None,
        generator_seed=seed,
        x_opt=None,
        raw=raw,
    )


# ------------------------------------------------------------ suite sets

def bbob_set(dimension: int, n_instances: int = 5,
             function_ids=BBOB_FUNCTION_IDS) -> InstanceSet:
    iids = tuple(range(1, n_instances + 1))
    instances = tuple(
        bbob_instance(fid, iid, dimension)
        for fid in function_ids for iid in iids
    )
    return InstanceSet(BBOB_LITE, dimension, instances, iids)


def mabbob_set(dimension: int, n_instances: int, master_seed: int) -> InstanceSet:
    instances = []
    for idx in range(n_instances):
        seed = derive_seed(master_seed, "mabbob", idx, dimension)
        instances.append(mabbob_from_seed(seed, idx, dimension))
    return InstanceSet(MABBOB_LITE, dimension, tuple(instances),
                       tuple(range(n_instances)))


def rog_set(dimension: int, n_instances: int, master_seed: int,
            exclude=()) -> InstanceSet:
    instances = []
    for idx in range(n_instances):
        if idx in exclude:
            continue
        seed = derive_seed(master_seed, "rog", idx, dimension)
        instances.append(rog_instance(seed, dimension, instance_id=idx))
    return InstanceSet(ROG_LITE, dimension, tuple(instances),
                       tuple(i.instance_id for i in instances))


def instance_from_manifest(m: dict, master_seed: int = 0) -> ProblemInstance:
    suite = m["suite"]
    if suite == BBOB_LITE:
        return bbob_instance(m["fid"], m["iid"], m["d"])
    if suite == MABBOB_LITE:
        return mabbob_from_seed(m["seed"], m["iid"], m["d"])
    if suite == ROG_LITE:
        return rog_instance(m["seed"], m["d"], instance_id=m["iid"])
    raise ValueError(f"unknown suite {suite!r}")
