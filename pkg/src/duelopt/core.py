"""Deterministic randomness, unit-sphere sampling, and masked parameter vectors.

Randomness is counter-based: every consumer derives an independent Philox
substream from ``(seed, block, index)``, so the i-th perturbation of block t
is reproducible regardless of the order (or concurrency) in which substreams
are actually drawn.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

_MASK64 = (1 << 64) - 1
_MASK32 = (1 << 32) - 1


@dataclass
class RngState:
    """Counter-based random state.

    ``seed`` selects the family of streams; ``counter`` is the next unused
    block index. Substreams are keyed by ``(seed, block, index)`` packed into
    a 128-bit Philox key, so distinct paths never collide within a run.
    """

    seed: int
    counter: int = 0

    def __post_init__(self) -> None:
        self.seed = int(self.seed) & _MASK64
        if self.counter < 0:
            raise ValueError("counter must be nonnegative")

    def substream(self, block: int, index: int = 0) -> np.random.Generator:
        """Generator for a fixed derivation path; does not advance the counter."""
        key = self.seed | ((block & _MASK32) << 64) | ((index & _MASK32) << 96)
        return np.random.Generator(np.random.Philox(key=key))

    def next_block(self) -> int:
        """Reserve the next block index and advance the counter."""
        block = self.counter
        self.counter += 1
        return block


@dataclass(frozen=True)
class UnitVector:
    """A vector on the Euclidean unit sphere (norm within 1e-12 of 1)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise DimensionError("unit vector must be a nonempty 1-D array")
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"norm {norm!r} is not within 1e-12 of 1")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ParamVector:
    """Dense parameter vector with an optional perturbation-scope mask.

    ``scope_mask`` holds the (0-based, sorted, unique) indices of the
    coordinates that perturbation and updates may touch; every other
    coordinate is carried through operations bit-identically. With no mask
    the full vector is in scope.
    """

    values: np.ndarray
    scope_mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise DimensionError("parameter vector must be a nonempty 1-D array")
        if not np.all(np.isfinite(v)):
            raise ValueError("parameter vector contains NaN or Inf")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.scope_mask is not None:
            m = np.asarray(self.scope_mask, dtype=np.intp)
            if m.ndim != 1 or m.size == 0:
                raise DimensionError("scope mask must be a nonempty 1-D index array")
            if np.any(m < 0) or np.any(m >= v.size):
                raise DimensionError("scope mask index out of range")
            if np.any(np.diff(m) <= 0):
                raise DimensionError("scope mask indices must be strictly increasing")
            m = m.copy()
            m.setflags(write=False)
            object.__setattr__(self, "scope_mask", m)

    @property
    def dim(self) -> int:
        return self.values.size

    @property
    def scope_dim(self) -> int:
        """Dimension of the perturbable subspace."""
        return self.dim if self.scope_mask is None else self.scope_mask.size

    def scope_values(self) -> np.ndarray:
        """Copy of the in-scope coordinates."""
        if self.scope_mask is None:
            return self.values.copy()
        return self.values[self.scope_mask]

    def with_scope_values(self, new_scope: np.ndarray) -> "ParamVector":
        """New vector with in-scope coordinates replaced; others bit-identical."""
        new_scope = np.asarray(new_scope, dtype=np.float64)
        if new_scope.shape != (self.scope_dim,):
            raise DimensionError(
                f"expected {self.scope_dim} in-scope values, got {new_scope.shape}"
            )
        out = self.values.copy()
        if self.scope_mask is None:
            out[:] = new_scope
        else:
            out[self.scope_mask] = new_scope
        return ParamVector(out, self.scope_mask)

    def content_hash(self) -> str:
        """SHA-256 of the raw float64 bytes (mask excluded)."""
        return hashlib.sha256(np.ascontiguousarray(self.values).tobytes()).hexdigest()


def sample_unit_sphere(dim: int, rng: RngState) -> UnitVector:
    """Draw one point uniformly from the unit sphere in ``dim`` dimensions.

    Generates ``dim`` standard normals from the next counter block and
    normalizes; rotational invariance of the Gaussian makes the result
    uniform on the sphere. Advances ``rng`` by one block.
    """
    if dim < 1:
        raise DimensionError(f"dimension must be >= 1, got {dim}")
    gen = rng.substream(rng.next_block())
    return UnitVector(_sphere_rows(gen, 1, dim)[0])


def sample_unit_sphere_batch(dim: int, count: int, rng: RngState) -> np.ndarray:
    """Draw ``count`` sphere points as a (count, dim) matrix from one block.

    Bulk variant for Monte-Carlo checks; consumes a single counter block.
    """
    if dim < 1:
        raise DimensionError(f"dimension must be >= 1, got {dim}")
    if count < 1:
        raise ValueError("count must be >= 1")
    gen = rng.substream(rng.next_block())
    return _sphere_rows(gen, count, dim)


def _sphere_rows(gen: np.random.Generator, count: int, dim: int) -> np.ndarray:
    rows = gen.standard_normal((count, dim))
    norms = np.linalg.norm(rows, axis=1)
    # a zero draw has probability zero but would poison the normalization
    while np.any(norms == 0.0):
        bad = norms == 0.0
        rows[bad] = gen.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(rows, axis=1)
    return rows / norms[:, None]


def embed_perturbation(theta: ParamVector, z: UnitVector, radius: float) -> ParamVector:
    """Add ``radius * z`` to the in-scope coordinates of ``theta``.

    Coordinates outside the scope mask are returned bit-identical.
    """
    if radius <= 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    if z.dim != theta.scope_dim:
        raise DimensionError(
            f"perturbation dim {z.dim} does not match scope dim {theta.scope_dim}"
        )
    out = theta.values.copy()
    if theta.scope_mask is None:
        out += radius * z.values
    else:
        out[theta.scope_mask] += radius * z.values
    return ParamVector(out, theta.scope_mask)
