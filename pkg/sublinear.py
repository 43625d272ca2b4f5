from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from coreset import STEP_RULES, approx_center, ceil_tol, center_tolerance, coreset_meb, iteration_cap
from geometry import Ball, ConfigError, PointSet, RngStream, farthest_in, sample_indices
from reports import TrialReport

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


@dataclass
class AlgoConfig:
    epsilon: float
    beta: float
    eta: float = 0.1
    eta0: float = 0.1
    s: float = 1.0 / 3.0
    c_net: float = 1.0
    c_hit: float = 1.0
    center_step: str = "line-search"
    max_sample: int = 5_000_000

    def validate(self) -> None:
        for name in ("epsilon", "beta", "eta", "eta0", "s"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {value}")
        if self.c_net < 1.0 or self.c_hit < 1.0:
            raise ConfigError(f"C_net and C_hit must be >= 1, got {self.c_net}, {self.c_hit}")
        if self.center_step not in STEP_RULES:
            raise ConfigError(f"center_step must be one of {STEP_RULES}, got {self.center_step!r}")
        if self.max_sample < 1:
            raise ConfigError(f"max_sample must be >= 1, got {self.max_sample}")

    @property
    def z(self) -> int:
        return iteration_cap(self.epsilon, self.s)

    @property
    def xi(self) -> float:
        return center_tolerance(self.epsilon, self.s)

    def net_sample_size(self, d: int) -> int:
        ratio = d / self.beta
        # +e keeps the log positive when d/beta is small
        return ceil_tol(self.c_net * ratio * math.log(ratio + math.e))

    def hit_sample_size(self, eta: Optional[float] = None) -> int:
        eta = self.eta if eta is None else eta
        return ceil_tol(self.c_hit / self.beta * math.log(1.0 / eta))

    def oracle_sample_size(self, eta: Optional[float] = None) -> int:
        eta = self.eta if eta is None else eta
        return ceil_tol(self.c_hit / self.beta * math.log(self.z / eta))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class RadiusRange:
    a: float
    b: float
    p1: int
    p2: int
    witness: float
    samples_drawn: int = 0

    def contains(self, radius: float, slack: float = 1e-9) -> bool:
        return self.a * (1.0 - slack) <= radius <= self.b * (1.0 + slack)


@dataclass
class OracleOutcome:
    answer: bool
    center: Optional[np.ndarray]
    iterations: int
    samples_drawn: int
    core_set: List[int]

    @property
    def label(self) -> str:
        return "yes" if self.answer else "no"


def alg1_expansion(epsilon: float) -> float:
    return (1.0 + (2.0 + SQRT2) * math.sqrt(epsilon)) / (1.0 - epsilon)


def alg1_ratio_bound(epsilon: float) -> float:
    return alg1_expansion(epsilon) * (1.0 + epsilon)


def quick_ratio_bound(epsilon: float) -> float:
    return 4.0 / (1.0 - epsilon)


def alg2_expansion(epsilon: float) -> float:
    return (1.0 + (4.0 + 4.0 * SQRT2) * math.sqrt(epsilon / (1.0 - epsilon))) / (1.0 + epsilon)


def alg2_ratio_bound(epsilon: float) -> float:
    x1 = 8.0 * epsilon / (1.0 - epsilon)
    x2 = (4.0 + 4.0 * SQRT2) * math.sqrt(epsilon / (1.0 - epsilon))
    return (1.0 + x1) * (1.0 + x2) / (1.0 + epsilon)


def expand_stable_ball(ball: Ball, epsilon: float) -> Ball:
    return Ball(ball.center, alg1_expansion(epsilon) * ball.radius)


def _report(algorithm: str, P: PointSet, cfg: AlgoConfig, rng: RngStream) -> TrialReport:
    return TrialReport(
        algorithm=algorithm, seed=int(rng.seed), stream_id=int(rng.stream_id), n=P.n, d=P.d, cfg=cfg.to_dict()
    )


def alg1_meb(P: PointSet, cfg: AlgoConfig, rng: RngStream) -> Tuple[Ball, TrialReport]:
    """
    Epsilon-net sampling: core-set MEB of a sample of size ceil(C_net d/beta ln(d/beta + e)),
    expanded by (1 + (2+sqrt2) sqrt(eps)) / (1 - eps). Only sampled rows are read.
    """
    cfg.validate()
    m = cfg.net_sample_size(P.d)
    if m > cfg.max_sample:
        raise ConfigError(f"epsilon-net sample size m={m} exceeds the cap of {cfg.max_sample} rows")
    idx = sample_indices(rng, P.n, m)
    ball, state = coreset_meb(P.subset(idx), cfg.epsilon, cfg.s, step=cfg.center_step)
    out = expand_stable_ball(ball, cfg.epsilon)
    report = _report("alg1", P, cfg, rng)
    report.set_ball(out)
    report.samples_drawn = m
    report.sample_budget = m
    report.ratio_bound = alg1_ratio_bound(cfg.epsilon)
    report.details = {"sample_radius": ball.radius, "core_set_size": state.size, "iterations": state.iterations}
    return out, report


def partial_meb(P: PointSet, available: Sequence[int], epsilon: float, s: float = 1.0 / 3.0) -> Ball:
    """
    Approximate MEB of all of P when only the rows in `available` can be read. On a
    beta-stable P with at most beta*n rows missing the expanded ball still covers P.
    """
    if len(available) == 0:
        raise ConfigError("partial_meb needs at least one available row")
    ball, _ = coreset_meb(P.subset(available), epsilon, s)
    return expand_stable_ball(ball, epsilon)


def estimate_radius_range(
    P: PointSet, cfg: AlgoConfig, rng: RngStream, *, eta: Optional[float] = None
) -> RadiusRange:
    p1 = int(sample_indices(rng, P.n, 1)[0])
    q = cfg.hit_sample_size(eta)
    Q = sample_indices(rng, P.n, q)
    p2, witness = farthest_in(P, Q, P.row(p1))
    return RadiusRange(
        a=witness / 2.0,
        b=witness / (1.0 - cfg.epsilon),
        p1=p1,
        p2=p2,
        witness=witness,
        samples_drawn=1 + q,
    )


def _quick(P: PointSet, cfg: AlgoConfig, rng: RngStream) -> Tuple[Ball, RadiusRange]:
    rr = estimate_radius_range(P, cfg, rng)
    return Ball(P.row(rr.p1), 2.0 / (1.0 - cfg.epsilon) * rr.witness), rr


def quick_meb(P: PointSet, cfg: AlgoConfig, rng: RngStream) -> Ball:
    cfg.validate()
    ball, _ = _quick(P, cfg, rng)
    return ball


def quick_meb_trial(P: PointSet, cfg: AlgoConfig, rng: RngStream) -> Tuple[Ball, TrialReport]:
    cfg.validate()
    ball, rr = _quick(P, cfg, rng)
    report = _report("quick", P, cfg, rng)
    report.set_ball(ball)
    report.samples_drawn = rr.samples_drawn
    report.sample_budget = 1 + cfg.hit_sample_size()
    report.ratio_bound = quick_ratio_bound(cfg.epsilon)
    report.details = {"p1": rr.p1, "p2": rr.p2, "witness": rr.witness, "range": [rr.a, rr.b]}
    return ball, report


def oracle_budget(cfg: AlgoConfig, eta: Optional[float] = None) -> int:
    return 1 + cfg.z * cfg.oracle_sample_size(eta)


def oracle_test_h(
    P: PointSet, h: float, cfg: AlgoConfig, rng: RngStream, *, eta: Optional[float] = None
) -> OracleOutcome:
    """
    Randomized core-set growth against a candidate radius h: each round samples
    ceil(C_hit/beta ln(z/eta)) rows and adds the farthest one while it is at least h away.
    Returns yes with the current center when a round finds nothing that far.
    """
    if not h > 0.0:
        raise ConfigError(f"oracle threshold h must be > 0, got {h}")
    z = cfg.z
    xi = cfg.xi
    q = cfg.oracle_sample_size(eta)
    T: List[int] = [int(sample_indices(rng, P.n, 1)[0])]
    drawn = 1
    weights: Optional[np.ndarray] = None
    for i in range(1, z + 1):
        fit = approx_center(P, T, xi, step=cfg.center_step, weights=weights)
        Q = sample_indices(rng, P.n, q)
        drawn += q
        far, far_d = farthest_in(P, Q, fit.center)
        if far_d < h:
            return OracleOutcome(True, fit.center, i, drawn, T)
        T.append(far)
        weights = np.append(fit.weights, 0.0)
    return OracleOutcome(False, None, z, drawn, T)


def radius_grid(a: float, epsilon: float) -> np.ndarray:
    """Candidate radii (1+eps)^i (1-eps) a for i = 0..w."""
    w = ceil_tol(math.log(2.0 / (1.0 - epsilon) ** 2) / math.log1p(epsilon)) + 1
    return (1.0 - epsilon) * a * (1.0 + epsilon) ** np.arange(w + 1)


def _search_eta(cfg: AlgoConfig, w: int) -> float:
    return cfg.eta0 / (2.0 * math.log2(w))


def _bisect_grid(
    P: PointSet, grid: np.ndarray, cfg: AlgoConfig, rng: RngStream, eta: float
) -> Tuple[Optional[int], int, int]:
    """
    First grid index where the oracle says yes, assuming no -> yes monotonicity.
    Returns (index or None when answers are inconsistent, oracle calls, samples drawn).
    """
    answers: Dict[int, bool] = {}
    drawn = 0

    def ask(i: int) -> bool:
        nonlocal drawn
        if i not in answers:
            outcome = oracle_test_h(P, float(grid[i]), cfg, rng, eta=eta)
            drawn += outcome.samples_drawn
            answers[i] = outcome.answer
            logger.debug("oracle h[%d]=%.6g -> %s after %d rounds", i, grid[i], outcome.label, outcome.iterations)
        return answers[i]

    w = grid.shape[0] - 1
    lo, hi = 0, w
    while lo < hi:
        mid = (lo + hi) // 2
        if ask(mid):
            hi = mid
        else:
            lo = mid + 1
    if not ask(lo):
        return None, len(answers), drawn
    yes = [i for i, a in answers.items() if a]
    no = [i for i, a in answers.items() if not a]
    if no and yes and min(yes) < max(no):
        return None, len(answers), drawn
    return lo, len(answers), drawn


def alg2_budget(cfg: AlgoConfig, w: int) -> int:
    # range estimate + two bisections (one restart) of at most ceil(log2(w+1)) + 1 probes + final run
    probes = math.ceil(math.log2(w + 1)) + 1
    search = 2 * probes * oracle_budget(cfg, _search_eta(cfg, w))
    return 1 + cfg.hit_sample_size() + search + oracle_budget(cfg, cfg.eta0 / 2.0) + 1 + cfg.hit_sample_size()


def alg2_meb(P: PointSet, cfg: AlgoConfig, rng: RngStream) -> Tuple[Ball, TrialReport]:
    """
    Binary search over the geometric radius grid with the core-set oracle, then one more
    oracle run at (1+eps)^(i0+2) a whose yes-center is expanded into the output ball.
    Falls back to the quick 4/(1-eps) ball when the search or the final oracle fails.
    """
    cfg.validate()
    report = _report("alg2", P, cfg, rng)
    report.ratio_bound = alg2_ratio_bound(cfg.epsilon)

    rr = estimate_radius_range(P, cfg, rng)
    drawn = rr.samples_drawn
    grid = radius_grid(rr.a, cfg.epsilon)
    w = grid.shape[0] - 1
    report.sample_budget = alg2_budget(cfg, w)
    details: Dict[str, Any] = {"range": [rr.a, rr.b], "w": w, "p1": rr.p1, "p2": rr.p2}

    if rr.witness == 0.0:
        # every sampled row equals p1: no grid to search, and the sample cannot tell an
        # all-identical P from an unlucky draw, so the trial is reported as a fallback
        ball = Ball(P.row(rr.p1), 0.0)
        details["degenerate"] = True
        report.fallback = True
        logger.warning("zero witness distance from p1=%d; returning the radius-0 ball", rr.p1)
        report.set_ball(ball)
        report.samples_drawn = drawn
        report.details = details
        return ball, report

    eta = _search_eta(cfg, w)
    first_yes: Optional[int] = None
    calls = 0
    for attempt in range(2):
        first_yes, n_calls, n_drawn = _bisect_grid(P, grid, cfg, rng, eta)
        calls += n_calls
        drawn += n_drawn
        if first_yes is not None:
            break
        logger.warning("inconsistent oracle answers on the radius grid (attempt %d)", attempt + 1)

    ball: Optional[Ball] = None
    if first_yes is not None:
        i0 = first_yes - 1
        # no (1-eps) factor here, matching the final step of the search as stated
        h = (1.0 + cfg.epsilon) ** (i0 + 2) * rr.a
        final = oracle_test_h(P, h, cfg, rng, eta=cfg.eta0 / 2.0)
        calls += 1
        drawn += final.samples_drawn
        details.update({"i0": i0, "h": h, "final_rounds": final.iterations})
        if final.answer:
            ball = Ball(final.center, alg2_expansion(cfg.epsilon) * h)
        else:
            logger.warning("final oracle run at h=%.6g answered no; falling back to the quick ball", h)

    if ball is None:
        ball, fallback_range = _quick(P, cfg, rng)
        drawn += fallback_range.samples_drawn
        report.fallback = True

    details["oracle_calls"] = calls
    report.set_ball(ball)
    report.samples_drawn = drawn
    report.details = details
    return ball, report


def coreset_trial(P: PointSet, cfg: AlgoConfig, rng: RngStream) -> Tuple[Ball, TrialReport]:
    """Full-pass core-set MEB wrapped in a report; every scan reads all n rows."""
    cfg.validate()
    ball, state = coreset_meb(P, cfg.epsilon, cfg.s, step=cfg.center_step)
    report = _report("coreset", P, cfg, rng)
    report.set_ball(ball)
    report.samples_drawn = state.full_scans * P.n
    report.sample_budget = (cfg.z + 1) * P.n
    report.ratio_bound = 1.0 + cfg.epsilon
    report.details = {"iterations": state.iterations, "core_set_size": state.size, "z": state.z}
    return ball, report


def center_robustness_bound(epsilon: float) -> float:
    """Distance bound (in units of Rad(P)) between a covering center and the MEB center."""
    return (2.0 + SQRT2) * math.sqrt(epsilon)
