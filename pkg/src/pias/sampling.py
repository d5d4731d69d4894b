"""Low-discrepancy sampling for feature computation.

Gray-code Sobol sequences with Joe-Kuo style direction numbers for up
to 32 dimensions, plus a seeded digital (XOR) scramble so the five
feature repetitions see different point sets while keeping the dyadic
stratification structure intact.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import kernels
from .seeding import rng_from

MAX_DIM = 32
MAXBIT = kernels.MAXBIT

# Primitive polynomials (full binary encoding, degree = bit_length - 1)
# and initial m-values, one row per dimension.  Dimension 1 degenerates
# to the van der Corput sequence (all m = 1).
_POLY = (
    1, 3, 7, 11, 13, 19, 25, 37, 41, 47, 55, 59, 61, 67, 91, 97,
    103, 109, 115, 131, 137, 143, 145, 157, 167, 171, 185, 191, 193,
    203, 211, 213,
)
_MINIT = (
    (1,),
    (1,),
    (1, 3),
    (1, 3, 1),
    (1, 1, 1),
    (1, 1, 3, 3),
    (1, 3, 5, 13),
    (1, 1, 5, 5, 17),
    (1, 1, 5, 5, 5),
    (1, 1, 7, 11, 19),
    (1, 1, 5, 1, 1),
    (1, 1, 1, 3, 11),
    (1, 3, 5, 5, 31),
    (1, 3, 3, 9, 7, 49),
    (1, 1, 1, 15, 21, 21),
    (1, 3, 1, 13, 27, 49),
    (1, 1, 1, 15, 7, 5),
    (1, 3, 1, 15, 13, 25),
    (1, 1, 5, 5, 19, 61),
    (1, 3, 7, 11, 23, 15, 103),
    (1, 3, 7, 13, 13, 15, 69),
    (1, 1, 3, 13, 7, 35, 63),
    (1, 3, 5, 9, 1, 25, 53),
    (1, 3, 1, 13, 9, 35, 107),
    (1, 3, 1, 5, 27, 61, 31),
    (1, 1, 5, 11, 19, 41, 61),
    (1, 3, 5, 3, 3, 13, 69),
    (1, 1, 7, 13, 1, 19, 1),
    (1, 3, 7, 5, 13, 19, 59),
    (1, 1, 3, 9, 25, 29, 41),
    (1, 3, 5, 13, 23, 1, 55),
    (1, 3, 7, 3, 13, 59, 17),
)


@lru_cache(maxsize=None)
def _direction_matrix(d: int) -> np.ndarray:
    """Integer direction numbers V[j, k], k = 1..MAXBIT, scaled by
    2^MAXBIT.  Column 0 is unused padding."""
    if d < 1 or d > MAX_DIM:
        raise ValueError(f"dimension must be in 1..{MAX_DIM}, got {d}")
    V = np.zeros((d, MAXBIT + 1), dtype=np.int64)
    for j in range(d):
        p = _POLY[j]
        s = p.bit_length() - 1
        m = [0] * (MAXBIT + 1)
        if s == 0:
            for k in range(1, MAXBIT + 1):
                m[k] = 1
        else:
            for k in range(1, s + 1):
                m[k] = _MINIT[j][k - 1]
            for k in range(s + 1, MAXBIT + 1):
                # m_k = 2^s m_{k-s} ^ m_{k-s} ^ sum_i 2^i a_i m_{k-i}
                newm = m[k - s] ^ (m[k - s] << s)
                for i in range(1, s):
                    if (p >> (s - i)) & 1:
                        newm ^= m[k - i] << i
                m[k] = newm
        for k in range(1, MAXBIT + 1):
            V[j, k] = m[k] << (MAXBIT - k)
    V.setflags(write=False)
    return V


@dataclass(frozen=True)
class SamplePlan:
    """One feature-sampling request: n points in [0,1)^d.

    scramble_seed None means the raw sequence.  A seeded plan applies a
    per-dimension XOR mask drawn from the seed, so plans differing only
    in their seed emit different point sets.
    """

    dimension: int
    count: int
    repetition_index: int = 0
    scramble_seed: Optional[int] = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.dimension < 1 or self.dimension > MAX_DIM:
            raise ValueError(f"dimension must be in 1..{MAX_DIM}")
        if self.repetition_index < 0:
            raise ValueError("repetition_index must be >= 0")


def _masks(plan: SamplePlan) -> np.ndarray:
    if plan.scramble_seed is None:
        return np.zeros(plan.dimension, dtype=np.int64)
    rng = rng_from(int(plan.scramble_seed), "sobol-scramble",
                   plan.repetition_index)
    # nonzero masks so the index-0 point never sits at the origin
    return rng.integers(1, 1 << MAXBIT, size=plan.dimension, dtype=np.int64)


def sobol_points(plan: SamplePlan) -> np.ndarray:
    """Emit plan.count points of the (possibly scrambled) sequence.

    The all-zeros index-0 point is skipped exactly when it would be
    emitted, i.e. for unscrambled plans; scrambled streams start at
    index 0, which keeps their leading 2^k blocks exact dyadic nets.
    """
    V = _direction_matrix(plan.dimension)
    masks = _masks(plan)
    skip = 1 if plan.scramble_seed is None else 0
    return kernels.sobol_fill(V, masks, plan.count, skip)


def scale_to_box(points: np.ndarray, lower, upper) -> np.ndarray:
    """Affine map from [0,1)^d into the box [lower, upper]^d."""
    lo = np.asarray(lower, dtype=np.float64)
    hi = np.asarray(upper, dtype=np.float64)
    return lo + points * (hi - lo)
