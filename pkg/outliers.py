from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Tuple

from coreset import ceil_tol, floor_tol
from geometry import Ball, ConfigError, PointSet, RngStream, kth_farthest, sample_indices
from reports import TrialReport
from sublinear import RadiusRange

logger = logging.getLogger(__name__)


@dataclass
class OutlierConfig:
    gamma: float
    beta: float
    epsilon: float
    eta: float = 0.1
    c_out: float = 1.0
    max_sample: int = 5_000_000

    @property
    def sigma(self) -> float:
        return 0.5 * self.beta / (2.0 * self.gamma + self.beta)

    def sample_size(self) -> int:
        g, b = self.gamma, self.beta
        return ceil_tol(self.c_out * max(1.0 / b, 1.0 / g) * ((2.0 * g + b) ** 2 / b**2) * math.log(1.0 / self.eta))

    def rank(self, m: int) -> int:
        g, b = self.gamma, self.beta
        return floor_tol((2.0 * g + 2.0 * b) / (2.0 * g + b) * g * m) + 1

    def proof_rank(self, m: int) -> int:
        return floor_tol((1.0 + self.sigma) * self.gamma * m) + 1

    def validate(self) -> None:
        for name in ("gamma", "beta", "epsilon", "eta"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {value}")
        if self.gamma + self.beta >= 1.0:
            raise ConfigError(f"gamma + beta must be < 1, got {self.gamma} + {self.beta}")
        if self.c_out < 1.0:
            raise ConfigError(f"C_out must be >= 1, got {self.c_out}")
        sigma = self.sigma
        if not 0.0 < sigma < 0.5:
            raise ConfigError(f"sigma = {sigma} outside (0, 1/2)")
        m = self.sample_size()
        if m > self.max_sample:
            raise ConfigError(f"outlier sample size m={m} exceeds the cap of {self.max_sample} rows")
        t = self.rank(m)
        if t > m:
            raise ConfigError(f"rank t={t} exceeds sample size m={m} (gamma={self.gamma}, beta={self.beta})")
        low = (1.0 + 2.0 * sigma) * self.gamma * m
        high = (1.0 - sigma) * (self.gamma + self.beta) * m + 1.0
        # rank must separate the outlier ring from the inlier ring
        if not (low < t <= high + 1e-9):
            raise ConfigError(f"rank t={t} outside the window ({low:.6g}, {high:.6g}] for m={m}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def target_keep(n: int, gamma: float) -> int:
    """Points a ball must cover when a gamma fraction may be left out; rounds up for fractional gamma*n."""
    return ceil_tol((1.0 - gamma) * n)


def outlier_ratio_bound(epsilon: float) -> float:
    return 4.0 / (1.0 - epsilon)


def outlier_radius_witness(P: PointSet, cfg: OutlierConfig, rng: RngStream) -> RadiusRange:
    cfg.validate()
    p1 = int(sample_indices(rng, P.n, 1)[0])
    m = cfg.sample_size()
    Q = sample_indices(rng, P.n, m)
    t = cfg.rank(m)
    p2, witness = kth_farthest(P, Q, P.row(p1), t)
    logger.debug("outlier witness: m=%d t=%d p1=%d p2=%d distance=%.6g", m, t, p1, p2, witness)
    return RadiusRange(
        a=witness / 2.0,
        b=witness / (1.0 - cfg.epsilon),
        p1=p1,
        p2=p2,
        witness=witness,
        samples_drawn=1 + m,
    )


def meb_outliers_sublinear(P: PointSet, cfg: OutlierConfig, rng: RngStream) -> Tuple[Ball, TrialReport]:
    rr = outlier_radius_witness(P, cfg, rng)
    ball = Ball(P.row(rr.p1), 2.0 / (1.0 - cfg.epsilon) * rr.witness)
    m = rr.samples_drawn - 1
    report = TrialReport(
        algorithm="outlier",
        seed=int(rng.seed),
        stream_id=int(rng.stream_id),
        n=P.n,
        d=P.d,
        cfg=cfg.to_dict(),
        target_coverage=target_keep(P.n, cfg.gamma),
        ratio_bound=outlier_ratio_bound(cfg.epsilon),
    )
    report.set_ball(ball)
    report.samples_drawn = rr.samples_drawn
    report.sample_budget = rr.samples_drawn
    report.attach_coverage(P, ball)
    report.details = {
        "gamma": cfg.gamma,
        "sigma": cfg.sigma,
        "rank_t": cfg.rank(m),
        "rank_t_proof": cfg.proof_rank(m),
        "p1": rr.p1,
        "p2": rr.p2,
        "witness": rr.witness,
        "range": [rr.a, rr.b],
    }
    return ball, report
