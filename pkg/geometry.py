from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

# Relative slack on radii when checking coverage in evaluation.
DEFAULT_SLACK = 1e-9


class ContractViolation(ValueError):
    """A precondition of a library call was not met."""


class ConfigError(ValueError):
    """An algorithm, instance or plan configuration is invalid."""


@dataclass(frozen=True)
class PointSet:
    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ContractViolation(f"PointSet needs an n x d matrix with n, d >= 1, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ContractViolation("PointSet coordinates must be finite")
        if arr is self.data:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    @property
    def d(self) -> int:
        return int(self.data.shape[1])

    def __len__(self) -> int:
        return self.n

    def row(self, index: int) -> np.ndarray:
        return self.data[index]

    def rows(self, indices: Sequence[int]) -> np.ndarray:
        return self.data[np.asarray(indices, dtype=np.intp)]

    def subset(self, indices: Sequence[int]) -> "PointSet":
        return PointSet(self.rows(indices))


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        center = np.asarray(self.center, dtype=np.float64).reshape(-1)
        if not (self.radius >= 0.0):
            raise ContractViolation(f"Ball radius must be nonnegative, got {self.radius}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return int(self.center.shape[0])


@dataclass
class RngStream:
    """
    Seeded random stream. The generator is PCG64 over SeedSequence(seed, spawn_key=(stream_id,)),
    so equal (seed, stream_id) pairs replay the same draws and distinct stream ids are
    independent children of the same root entropy.
    """

    seed: int
    stream_id: int = 0
    _generator: Optional[np.random.Generator] = field(default=None, init=False, repr=False, compare=False)

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            seq = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
            self._generator = np.random.Generator(np.random.PCG64(seq))
        return self._generator


def _check_same_dim(p: np.ndarray, q: np.ndarray) -> None:
    if p.shape[-1] != q.shape[-1]:
        raise ContractViolation(f"Dimension mismatch: {p.shape[-1]} vs {q.shape[-1]}")


def dist(p: Sequence[float], q: Sequence[float]) -> float:
    pa = np.asarray(p, dtype=np.float64).reshape(-1)
    qa = np.asarray(q, dtype=np.float64).reshape(-1)
    _check_same_dim(pa, qa)
    return float(np.linalg.norm(pa - qa))


def distances_to(points: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Euclidean distances from each row of `points` to `c`."""
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    _check_same_dim(points, c)
    diff = points - c
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def coverage_count(P: PointSet, B: Ball, slack: float = DEFAULT_SLACK) -> int:
    if slack < 0:
        raise ContractViolation(f"slack must be >= 0, got {slack}")
    dists = distances_to(P.data, B.center)
    return int(np.count_nonzero(dists <= B.radius * (1.0 + slack)))


def _ranked(P: PointSet, indices: Sequence[int], c: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    idx = np.asarray(indices, dtype=np.intp).reshape(-1)
    if idx.size == 0:
        raise ContractViolation("index sequence must be nonempty")
    if idx.min() < 0 or idx.max() >= P.n:
        raise ContractViolation(f"row index out of range for n={P.n}")
    return idx, distances_to(P.data[idx], c)


def farthest_in(P: PointSet, indices: Sequence[int], c: Sequence[float]) -> Tuple[int, float]:
    idx, dists = _ranked(P, indices, np.asarray(c, dtype=np.float64))
    best = dists.max()
    tied = idx[dists == best]
    return int(tied.min()), float(best)


def kth_farthest(P: PointSet, indices: Sequence[int], c: Sequence[float], t: int) -> Tuple[int, float]:
    """
    Row whose distance to c has rank t in decreasing order (rank 1 = farthest).
    The t-th largest distance is located with np.partition (introselect, expected linear);
    among equal distances the smaller row index ranks as farther.
    """
    idx, dists = _ranked(P, indices, np.asarray(c, dtype=np.float64))
    m = idx.size
    if not 1 <= t <= m:
        raise ContractViolation(f"rank t={t} out of range 1..{m}")
    value = np.partition(dists, m - t)[m - t]
    farther = int(np.count_nonzero(dists > value))
    tied = np.sort(idx[dists == value])
    return int(tied[t - farther - 1]), float(value)


def sample_indices(rng: RngStream, n: int, m: int) -> np.ndarray:
    """m row indices drawn uniformly from 0..n-1 with replacement."""
    if n < 1 or m < 1:
        raise ContractViolation(f"sample_indices needs n >= 1 and m >= 1, got n={n}, m={m}")
    return rng.generator.integers(0, n, size=m, dtype=np.int64)
