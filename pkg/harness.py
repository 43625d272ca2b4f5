from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from coreset import EXACT_MAX_D, EXACT_MAX_N, coreset_meb, exact_meb_small
from dataset_io import Sidecar, load_points, load_sidecar, save_sidecar
from geometry import Ball, ConfigError, PointSet, RngStream
from outliers import OutlierConfig, meb_outliers_sublinear
from reports import TrialReport
from stability import InstanceSpec, brute_meb_outliers, generate
from sublinear import AlgoConfig, alg1_meb, alg2_meb, coreset_trial, quick_meb_trial

logger = logging.getLogger(__name__)

ALGORITHMS = ("coreset", "alg1", "quick", "alg2", "outlier")
REFERENCE_MODES = ("none", "coreset-highprec", "ground-truth", "brute-force")
REFERENCE_EPSILON = 1e-3
THREADS_ENV = "STABLE_MEB_THREADS"

Runner = Callable[[PointSet, Any, RngStream], Tuple[Ball, TrialReport]]

RUNNERS: Dict[str, Runner] = {
    "coreset": coreset_trial,
    "alg1": alg1_meb,
    "quick": quick_meb_trial,
    "alg2": alg2_meb,
    "outlier": meb_outliers_sublinear,
}


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError as e:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from e
        if value < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


@dataclass
class ExperimentPlan:
    algorithm: str
    cfg: Union[AlgoConfig, OutlierConfig]
    trials: int = 1
    base_seed: int = 0
    reference_mode: str = "none"
    dataset: Optional[str] = None
    instance: Optional[InstanceSpec] = None
    threads: Optional[int] = None
    combo: Optional[Dict[str, Any]] = None

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; expected one of {', '.join(ALGORITHMS)}")
        if self.reference_mode not in REFERENCE_MODES:
            raise ConfigError(f"unknown reference mode {self.reference_mode!r}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError(f"base seed must be a 64-bit unsigned integer, got {self.base_seed}")
        if (self.dataset is None) == (self.instance is None):
            raise ConfigError("a plan needs exactly one of dataset path or instance spec")
        wants_outlier_cfg = self.algorithm == "outlier"
        if wants_outlier_cfg != isinstance(self.cfg, OutlierConfig):
            raise ConfigError(f"algorithm {self.algorithm!r} got a {type(self.cfg).__name__}")
        self.cfg.validate()


@dataclass
class LoadedInstance:
    points: PointSet
    sidecar: Sidecar
    path: Optional[str] = None


def open_dataset(path: str) -> LoadedInstance:
    return LoadedInstance(load_points(path), load_sidecar(path), path)


def load_instance(plan: ExperimentPlan) -> LoadedInstance:
    if plan.dataset is not None:
        return open_dataset(plan.dataset)
    assert plan.instance is not None
    points, inliers = generate(plan.instance)
    return LoadedInstance(points, Sidecar(spec=plan.instance.to_dict(), inliers=inliers))


def _outlier_count(plan: ExperimentPlan, n: int) -> int:
    if isinstance(plan.cfg, OutlierConfig):
        g = plan.cfg.gamma * n
        if abs(g - round(g)) > 1e-9:
            raise ConfigError(f"brute-force reference needs gamma * n integral, got {g:g}")
        return int(round(g))
    return 0


def compute_reference(inst: LoadedInstance, mode: str, plan: ExperimentPlan) -> Optional[Ball]:
    P = inst.points
    if mode == "none":
        return None
    if mode == "coreset-highprec":
        ball, _ = coreset_meb(P, REFERENCE_EPSILON)
        return ball
    if mode == "ground-truth":
        if inst.sidecar.inliers is None:
            raise ConfigError("ground-truth reference needs a sidecar with inlier indices")
        ball, _ = coreset_meb(P.subset(inst.sidecar.inliers), REFERENCE_EPSILON)
        return ball
    if P.n > EXACT_MAX_N or P.d > EXACT_MAX_D:
        raise ConfigError(f"brute-force reference limited to n <= {EXACT_MAX_N}, d <= {EXACT_MAX_D}")
    k = _outlier_count(plan, P.n)
    if k:
        ball, _ = brute_meb_outliers(P, k)
        return ball
    return exact_meb_small(P)


def reference_key(inst: LoadedInstance, plan: ExperimentPlan) -> str:
    """Sidecar cache key; brute-force radii depend on how many points may be dropped."""
    mode = plan.reference_mode
    if mode == "brute-force":
        return f"{mode}:k={_outlier_count(plan, inst.points.n)}"
    return mode


def reference_radius(inst: LoadedInstance, plan: ExperimentPlan) -> Optional[float]:
    """Reference radius for ratio checks, cached in the sidecar of on-disk datasets."""
    mode = plan.reference_mode
    if mode == "none":
        return None
    key = reference_key(inst, plan)
    cached = inst.sidecar.references.get(key)
    if cached is not None and "radius" in cached:
        logger.info("using cached %s reference radius %.6g", key, cached["radius"])
        return float(cached["radius"])
    t0 = time.perf_counter()
    ball = compute_reference(inst, mode, plan)
    assert ball is not None
    logger.info("computed %s reference radius %.6g in %.1f ms", mode, ball.radius, (time.perf_counter() - t0) * 1000)
    inst.sidecar.references[key] = {
        "radius": ball.radius,
        "center": ball.center.tolist(),
        "epsilon": REFERENCE_EPSILON if mode != "brute-force" else 0.0,
    }
    if inst.path is not None:
        save_sidecar(inst.path, inst.sidecar)
    return ball.radius


def run_trial(P: PointSet, plan: ExperimentPlan, index: int, reference: Optional[float]) -> TrialReport:
    rng = RngStream(seed=plan.base_seed, stream_id=plan.base_seed + index)
    t0 = time.perf_counter()
    ball, report = RUNNERS[plan.algorithm](P, plan.cfg, rng)
    report.wall_time_ms = (time.perf_counter() - t0) * 1000.0
    if report.coverage_count is None:
        report.attach_coverage(P, ball)
    report.attach_reference(reference)
    report.combo = plan.combo
    if report.fallback:
        logger.info("trial %d of %s fell back to the quick ball", index, plan.algorithm)
    return report


def run_plan(plan: ExperimentPlan, inst: Optional[LoadedInstance] = None) -> List[TrialReport]:
    """
    Runs every trial of the plan on stream ids base_seed + 0..trials-1. Trials run in a
    thread pool; the returned reports are in trial-index order.
    """
    plan.validate()
    inst = inst if inst is not None else load_instance(plan)
    ref = reference_radius(inst, plan)
    threads = max(1, min(plan.threads or default_threads(), plan.trials))
    logger.info(
        "running %d %s trials on n=%d d=%d with %d threads", plan.trials, plan.algorithm, inst.points.n, inst.points.d, threads
    )
    if threads == 1:
        return [run_trial(inst.points, plan, i, ref) for i in range(plan.trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: run_trial(inst.points, plan, i, ref), range(plan.trials)))
