from __future__ import annotations

from typing import Callable, List, Tuple

import numpy as np
import pytest

from coreset import coreset_meb
from geometry import Ball, PointSet, RngStream
from stability import InstanceSpec, generate

# reduced-scale defaults; tests/test_acceptance.py runs the full sizes
REF_EPSILON = 1e-2


def random_points(seed: int, n: int, d: int, scale: float = 1.0) -> PointSet:
    gen = np.random.default_rng(seed)
    return PointSet(gen.normal(size=(n, d)) * scale)


def tiny_instances(count: int, *, max_n: int = 16, max_d: int = 8, base_seed: int = 0) -> List[PointSet]:
    out: List[PointSet] = []
    for k in range(count):
        gen = np.random.default_rng(base_seed + k)
        n = int(gen.integers(2, max_n + 1))
        d = int(gen.integers(1, max_d + 1))
        out.append(PointSet(gen.uniform(-1.0, 1.0, size=(n, d))))
    return out


def equilateral_with_far_point() -> PointSet:
    h = np.sqrt(3.0) / 2.0
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, h]])
    centroid = tri.mean(axis=0)
    far = centroid + np.array([10.0, 0.0])
    return PointSet(np.vstack([tri, far]))


@pytest.fixture
def rng_factory() -> Callable[[int], RngStream]:
    return lambda stream_id: RngStream(seed=12345, stream_id=stream_id)


@pytest.fixture(scope="session")
def ball_instance() -> Tuple[PointSet, Ball]:
    """Uniform-ball instance (n=20000, d=20) with its near-exact reference ball."""
    P, _ = generate(InstanceSpec(family="uniform-ball", n=20_000, d=20, seed=7))
    ref, _ = coreset_meb(P, REF_EPSILON)
    return P, ref


@pytest.fixture(scope="session")
def planted_instance() -> Tuple[PointSet, List[int], Ball]:
    """Planted-outliers instance (n=20000, d=20, gamma=0.1, spread 10) with the inlier reference ball."""
    P, inliers = generate(InstanceSpec(family="planted-outliers", n=20_000, d=20, gamma=0.1, outlier_spread=10.0, seed=11))
    assert inliers is not None
    ref, _ = coreset_meb(P.subset(inliers), REF_EPSILON)
    return P, inliers, ref
