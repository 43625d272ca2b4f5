from dataclasses import replace

import numpy as np
import pytest

import harness
from dataset_io import Sidecar, load_sidecar, save_sidecar, write_mebd
from geometry import ConfigError, PointSet
from harness import (
    THREADS_ENV,
    ExperimentPlan,
    default_threads,
    load_instance,
    open_dataset,
    reference_radius,
    run_plan,
)
from outliers import OutlierConfig
from stability import InstanceSpec, brute_meb_outliers, generate
from sublinear import AlgoConfig

BALL = InstanceSpec(family="uniform-ball", n=2_000, d=5, seed=2)


def strip_timing(reports):
    return [replace(r, wall_time_ms=0.0) for r in reports]


def test_plan_validation():
    cfg = AlgoConfig(0.1, 0.1)
    with pytest.raises(ConfigError, match="unknown algorithm"):
        ExperimentPlan("alg3", cfg, instance=BALL).validate()
    with pytest.raises(ConfigError, match="reference mode"):
        ExperimentPlan("alg1", cfg, instance=BALL, reference_mode="exact").validate()
    with pytest.raises(ConfigError, match="trials"):
        ExperimentPlan("alg1", cfg, trials=0, instance=BALL).validate()
    with pytest.raises(ConfigError, match="64-bit"):
        ExperimentPlan("alg1", cfg, base_seed=-1, instance=BALL).validate()
    with pytest.raises(ConfigError, match="exactly one"):
        ExperimentPlan("alg1", cfg).validate()
    with pytest.raises(ConfigError, match="OutlierConfig"):
        ExperimentPlan("alg1", OutlierConfig(0.1, 0.05, 0.2), instance=BALL).validate()
    with pytest.raises(ConfigError):
        ExperimentPlan("outlier", cfg, instance=BALL).validate()
    ExperimentPlan("alg2", cfg, instance=BALL).validate()


def test_default_threads_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert default_threads() == 3
    monkeypatch.setenv(THREADS_ENV, "zero")
    with pytest.raises(ConfigError):
        default_threads()
    monkeypatch.setenv(THREADS_ENV, "0")
    with pytest.raises(ConfigError):
        default_threads()
    monkeypatch.delenv(THREADS_ENV)
    assert default_threads() >= 1


def test_run_plan_deterministic_across_thread_counts():
    plan = ExperimentPlan("quick", AlgoConfig(0.1, 0.05), trials=12, base_seed=40, instance=BALL, threads=1)
    serial = run_plan(plan)
    threaded = run_plan(replace(plan, threads=4))
    assert [r.stream_id for r in threaded] == list(range(40, 52))
    assert strip_timing(serial) == strip_timing(threaded)
    assert all(r.seed == 40 for r in serial)


def test_run_plan_alg2_reports():
    plan = ExperimentPlan(
        "alg2", AlgoConfig(0.1, 0.05), trials=4, base_seed=1, instance=BALL, reference_mode="coreset-highprec", threads=2
    )
    reports = run_plan(plan)
    assert len(reports) == 4
    for r in reports:
        assert r.algorithm == "alg2"
        assert r.coverage_count is not None
        assert r.reference_radius is not None and r.ratio_vs_reference is not None
        assert r.samples_drawn <= r.sample_budget
        assert r.wall_time_ms >= 0.0


def test_combo_is_attached():
    plan = ExperimentPlan("alg1", AlgoConfig(0.2, 0.2), trials=2, instance=BALL, combo={"epsilon": 0.2})
    assert all(r.combo == {"epsilon": 0.2} for r in run_plan(plan))


def test_reference_cached_in_sidecar(tmp_path, monkeypatch):
    P, _ = generate(BALL)
    path = str(tmp_path / "ball.mebd")
    write_mebd(path, P)
    save_sidecar(path, Sidecar(spec=BALL.to_dict()))
    plan = ExperimentPlan("alg1", AlgoConfig(0.1, 0.1), dataset=path, reference_mode="coreset-highprec")

    first = reference_radius(open_dataset(path), plan)
    stored = load_sidecar(path).references["coreset-highprec"]
    assert stored["radius"] == pytest.approx(first)
    assert len(stored["center"]) == P.d

    def boom(*args, **kwargs):
        raise AssertionError("reference recomputed")

    monkeypatch.setattr(harness, "compute_reference", boom)
    assert reference_radius(open_dataset(path), plan) == pytest.approx(first)


def test_reference_none_mode():
    plan = ExperimentPlan("alg1", AlgoConfig(0.1, 0.1), instance=BALL)
    assert reference_radius(load_instance(plan), plan) is None


def test_ground_truth_reference_needs_inliers():
    plan = ExperimentPlan("alg1", AlgoConfig(0.1, 0.1), instance=BALL, reference_mode="ground-truth")
    with pytest.raises(ConfigError, match="inlier"):
        run_plan(plan)


def test_brute_force_reference_for_tiny_outlier_instance():
    spec = InstanceSpec(family="planted-outliers", n=12, d=3, gamma=1 / 6, seed=21)
    plan = ExperimentPlan(
        "outlier", OutlierConfig(1 / 6, 0.1, 0.2), trials=3, instance=spec, reference_mode="brute-force"
    )
    reports = run_plan(plan)
    opt, _ = brute_meb_outliers(generate(spec)[0], 2)
    assert all(r.reference_radius == pytest.approx(opt.radius) for r in reports)
    assert all(r.target_coverage == 10 for r in reports)


def test_brute_force_reference_limits():
    plan = ExperimentPlan("alg1", AlgoConfig(0.1, 0.1), instance=BALL, reference_mode="brute-force")
    with pytest.raises(ConfigError, match="brute-force"):
        run_plan(plan)


def test_brute_force_reference_without_outliers(tmp_path):
    P = PointSet(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
    path = str(tmp_path / "square.mebd")
    write_mebd(path, P)
    plan = ExperimentPlan("alg1", AlgoConfig(0.1, 0.5), dataset=path, reference_mode="brute-force")
    assert reference_radius(open_dataset(path), plan) == pytest.approx(np.sqrt(0.5))


def test_brute_force_reference_tracks_gamma(tmp_path):
    gen = np.random.default_rng(5)
    inliers = gen.uniform(-1.0, 1.0, size=(12, 2))
    far = 20.0 * np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    P = PointSet(np.vstack([inliers, far]))
    path = str(tmp_path / "mixed.mebd")
    write_mebd(path, P)

    got = {}
    for k in (1, 4):
        plan = ExperimentPlan(
            "outlier", OutlierConfig(k / 16, 0.1, 0.2), trials=1, dataset=path, reference_mode="brute-force"
        )
        reports = run_plan(plan)
        got[k] = reports[0].reference_radius
        assert got[k] == pytest.approx(brute_meb_outliers(P, k)[0].radius)
    assert got[4] < got[1]

    stored = load_sidecar(path).references
    assert set(stored) == {"brute-force:k=1", "brute-force:k=4"}
    # cached values are served per outlier count on a fresh load
    plan = ExperimentPlan("outlier", OutlierConfig(4 / 16, 0.1, 0.2), dataset=path, reference_mode="brute-force")
    assert reference_radius(open_dataset(path), plan) == pytest.approx(got[4])
