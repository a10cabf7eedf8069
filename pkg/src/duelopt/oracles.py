"""Comparison oracles and batched 1-bit measurement collection.

Two oracles are provided: a function-value comparison (is the candidate point
strictly better under a hidden objective?) and a preference comparison over a
policy and a batch of preference pairs (does the candidate strictly raise the
likelihood of every preferred response and strictly lower that of every
dispreferred one?). Both return only a sign, never a value.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import ParamVector, RngState, UnitVector, embed_perturbation, _sphere_rows
from .errors import DimensionError, InvalidBatchError, OracleError


class Sign(enum.IntEnum):
    """Oracle verdict: MINUS means the candidate point is strictly better."""

    MINUS = -1
    PLUS = 1


# (theta, theta_prime) -> Sign
ComparisonOracle = Callable[[ParamVector, ParamVector], Sign]
# (theta_values, prompt, response) -> log-likelihood
LikelihoodEvaluator = Callable[[np.ndarray, Sequence[int], Sequence[int]], float]


@dataclass(frozen=True)
class BitMeasurementBatch:
    """m perturbation directions with their oracle signs.

    ``directions`` is an (m, k) matrix of unit rows; ``signs`` the matching
    +/-1 responses. ``iteration`` records which counter block produced the
    directions, and ``oracle_calls`` equals m.
    """

    directions: np.ndarray
    signs: np.ndarray
    radius: float
    iteration: int
    oracle_calls: int

    def __post_init__(self) -> None:
        dirs = np.asarray(self.directions, dtype=np.float64)
        signs = np.asarray(self.signs, dtype=np.int8)
        if dirs.ndim != 2 or dirs.shape[0] < 1:
            raise InvalidBatchError("directions must be a nonempty (m, k) matrix")
        if signs.shape != (dirs.shape[0],):
            raise InvalidBatchError("signs length must match direction count")
        if not np.all(np.abs(signs) == 1):
            raise InvalidBatchError("signs must be +1 or -1")
        if self.radius <= 0:
            raise InvalidBatchError(f"radius must be > 0, got {self.radius}")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise InvalidBatchError("direction rows must be unit vectors")
        dirs = dirs.copy()
        dirs.setflags(write=False)
        signs = signs.copy()
        signs.setflags(write=False)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "signs", signs)
        object.__setattr__(self, "oracle_calls", int(self.oracle_calls))

    @property
    def m(self) -> int:
        return self.directions.shape[0]

    def direction(self, i: int) -> UnitVector:
        return UnitVector(self.directions[i])

    def negative_fraction(self) -> float:
        """Fraction of queries where the perturbed point was strictly better."""
        return float(np.count_nonzero(self.signs == -1)) / self.m

    def signed_direction_sum(self) -> np.ndarray:
        """Sum of sign-weighted directions, accumulated in index order."""
        # numpy's own reduction (no BLAS) keeps the result bit-reproducible
        return np.add.reduce(self.signs[:, None].astype(np.float64) * self.directions, axis=0)


def compare_function(
    objective: Callable[[np.ndarray], float],
    theta: ParamVector,
    theta_prime: ParamVector,
) -> Sign:
    """Sign of ``f(theta_prime) - f(theta)``: MINUS iff strictly smaller.

    Ties (including a constant objective) fall through to PLUS.
    """
    if theta.dim != theta_prime.dim:
        raise DimensionError("points must share a dimension")
    f_base = float(objective(theta.values))
    f_cand = float(objective(theta_prime.values))
    if math.isnan(f_base) or math.isnan(f_cand):
        raise OracleError("objective evaluated to NaN")
    return Sign.MINUS if f_cand < f_base else Sign.PLUS


def compare_preference(
    policy_at: LikelihoodEvaluator,
    theta: ParamVector,
    theta_prime: ParamVector,
    batch: Sequence,
) -> Sign:
    """Preference verdict over a batch of (prompt, preferred, dispreferred) pairs.

    MINUS iff for EVERY pair the candidate strictly raises the preferred
    log-likelihood and strictly lowers the dispreferred one; any equality or
    reversal anywhere yields PLUS. Comparisons happen in log space, which is
    monotone-equivalent to raw likelihoods and safe for long sequences.
    """
    if len(batch) == 0:
        raise InvalidBatchError("preference batch must be nonempty")
    if theta.dim != theta_prime.dim:
        raise DimensionError("points must share a dimension")
    for pair in batch:
        lp_base = policy_at(theta.values, pair.prompt, pair.preferred)
        lp_cand = policy_at(theta_prime.values, pair.prompt, pair.preferred)
        if not lp_cand > lp_base:
            return Sign.PLUS
        lm_base = policy_at(theta.values, pair.prompt, pair.dispreferred)
        lm_cand = policy_at(theta_prime.values, pair.prompt, pair.dispreferred)
        if not lm_cand < lm_base:
            return Sign.PLUS
    return Sign.MINUS


def measure_bits(
    oracle: ComparisonOracle,
    theta: ParamVector,
    radius: float,
    m: int,
    rng: RngState,
    workers: int = 1,
) -> BitMeasurementBatch:
    """Collect m one-bit measurements around ``theta``.

    Direction i comes from the substream ``(seed, block, i)``, so the batch is
    identical no matter how the oracle queries are scheduled; ``workers > 1``
    fans the queries out to a thread pool and collects results by index.
    """
    if m < 1:
        raise InvalidBatchError(f"m must be >= 1, got {m}")
    if radius <= 0:
        raise InvalidBatchError(f"radius must be > 0, got {radius}")
    block = rng.next_block()
    k = theta.scope_dim
    directions = np.empty((m, k), dtype=np.float64)
    for i in range(m):
        directions[i] = _sphere_rows(rng.substream(block, i), 1, k)[0]

    def query(i: int) -> int:
        perturbed = embed_perturbation(theta, UnitVector(directions[i]), radius)
        return int(oracle(theta, perturbed))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            signs = np.fromiter(pool.map(query, range(m)), dtype=np.int8, count=m)
    else:
        signs = np.fromiter((query(i) for i in range(m)), dtype=np.int8, count=m)
    return BitMeasurementBatch(
        directions=directions, signs=signs, radius=radius, iteration=block, oracle_calls=m
    )
