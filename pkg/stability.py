from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from coreset import SupportCandidates, candidate_coverage, support_candidates
from geometry import Ball, ConfigError, ContractViolation, PointSet, RngStream

logger = logging.getLogger(__name__)

FAMILIES = ("uniform-ball", "gaussian", "regular-simplex", "planted-outliers")
BETA_HINT_CAP = 0.999


@dataclass
class InstanceSpec:
    family: str
    n: int = 1000
    d: int = 2
    gamma: float = 0.0
    outlier_spread: float = 10.0
    seed: int = 0

    @property
    def outlier_count(self) -> int:
        return int(round(self.gamma * self.n))

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {', '.join(FAMILIES)}")
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if self.family != "regular-simplex" and self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.outlier_spread < 1.0:
            raise ConfigError(f"outlier spread must be >= 1, got {self.outlier_spread}")
        if self.family == "planted-outliers":
            count = self.gamma * self.n
            if abs(count - round(count)) > 1e-9:
                raise ConfigError(f"gamma * n = {count:g} is not an integer (gamma={self.gamma}, n={self.n})")
            if self.outlier_count >= self.n:
                raise ConfigError("planted-outliers needs at least one inlier")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class StabilityReport:
    epsilon: float
    m_star: int
    beta_max: float
    base_radius: float


def simplex_radius(d: int) -> float:
    return math.sqrt(d / (2.0 * (1.0 + d)))


def family_beta_hint(family: str, d: int, epsilon: float) -> Optional[float]:
    """
    Closed-form stability estimates for the generated families (None where none is known).
    Capped at BETA_HINT_CAP so a hint that rounds to 1 in high dimension stays a valid beta.
    """
    if family == "uniform-ball":
        # dense uniform mass: the innermost (1-beta) fraction sits in a ball of radius (1-eps)
        hint = 1.0 - (1.0 - epsilon) ** d
    elif family == "regular-simplex":
        hint = 1.0 - 1.0 / (1.0 + (2.0 * epsilon - epsilon * epsilon) * d)
    else:
        return None
    return min(hint, BETA_HINT_CAP)


def _unit_directions(gen: np.random.Generator, count: int, d: int) -> np.ndarray:
    g = gen.standard_normal((count, d))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    # a zero gaussian vector has probability zero, but keep the division safe
    norms[norms == 0.0] = 1.0
    return g / norms


def _uniform_ball(gen: np.random.Generator, count: int, d: int) -> np.ndarray:
    # radial method: uniform direction, radius U^(1/d)
    dirs = _unit_directions(gen, count, d)
    radii = gen.random(count) ** (1.0 / d)
    return dirs * radii[:, None]


def _regular_simplex(d: int) -> np.ndarray:
    V = np.eye(d + 1) / math.sqrt(2.0)
    V -= V.mean(axis=0)
    U, S, _ = np.linalg.svd(V)
    return U[:, :d] * S[:d]


def generate(spec: InstanceSpec) -> Tuple[PointSet, Optional[List[int]]]:
    spec.validate()
    gen = RngStream(seed=spec.seed, stream_id=0).generator
    if spec.family == "regular-simplex":
        return PointSet(_regular_simplex(spec.d)), None
    if spec.family == "uniform-ball":
        return PointSet(_uniform_ball(gen, spec.n, spec.d)), None
    if spec.family == "gaussian":
        return PointSet(gen.standard_normal((spec.n, spec.d)) / math.sqrt(spec.d)), None

    k = spec.outlier_count
    inliers = _uniform_ball(gen, spec.n - k, spec.d)
    outliers = _unit_directions(gen, k, spec.d) * spec.outlier_spread
    data = np.vstack([inliers, outliers]) if k else inliers
    # shuffle so outliers are not a contiguous tail
    order = gen.permutation(spec.n)
    inverse = np.empty_like(order)
    inverse[order] = np.arange(spec.n)
    truth = sorted(int(i) for i in inverse[: spec.n - k])
    return PointSet(data[order]), truth


@dataclass
class _RemovalTable:
    cands: SupportCandidates
    covers: np.ndarray  # (M, n) coverage matrix
    counts: np.ndarray  # points covered per candidate


def _removal_table(P: PointSet) -> _RemovalTable:
    cands = support_candidates(P)
    covers = candidate_coverage(P, cands)
    return _RemovalTable(cands, covers, covers.sum(axis=1))


def brute_meb_outliers(P: PointSet, k_remove: int) -> Tuple[Ball, List[int]]:
    """
    Exact MEB with k_remove outliers. Every (n-k)-subset has a support candidate as its MEB, so
    the optimum is the smallest candidate ball covering at least n-k points; among all subsets
    fitting in a minimum-radius ball the lexicographically smallest is returned.
    """
    if not 0 <= k_remove < P.n:
        raise ContractViolation(f"k_remove must lie in 0..{P.n - 1}, got {k_remove}")
    table = _removal_table(P)
    keep = P.n - k_remove
    radii = np.where(table.counts >= keep, table.cands.radii, np.inf)
    best_r = float(radii.min())
    ties = np.flatnonzero(radii <= best_r * (1.0 + 1e-12) + 1e-15)
    best_set: Optional[List[int]] = None
    best = int(ties[0])
    for m in ties:
        covered = np.flatnonzero(table.covers[m])[:keep].tolist()
        if best_set is None or covered < best_set:
            best_set, best = covered, int(m)
    return Ball(table.cands.centers[best], float(table.cands.radii[best])), best_set


def _removal_radii(P: PointSet) -> np.ndarray:
    """Optimal radius after removing m points, for m = 0..n-1."""
    table = _removal_table(P)
    out = np.empty(P.n)
    for m in range(P.n):
        out[m] = table.cands.radii[table.counts >= P.n - m].min()
    return out


def _first_drop(radii: np.ndarray, threshold: float, start: int) -> int:
    below = np.flatnonzero(radii[start:] < threshold)
    return int(start + below[0]) if below.size else int(radii.shape[0])


def stability_coefficient(P: PointSet, epsilon: float) -> StabilityReport:
    if not 0.0 < epsilon < 1.0:
        raise ContractViolation(f"epsilon must lie in (0, 1), got {epsilon}")
    radii = _removal_radii(P)
    base = float(radii[0])
    m_star = _first_drop(radii, (1.0 - epsilon) * base, 1)
    return StabilityReport(epsilon=epsilon, m_star=m_star, beta_max=(m_star - 1) / P.n, base_radius=base)


def check_outlier_stability_claim(P: PointSet, gamma: float, epsilon: float) -> bool:
    """
    Brute-force check that a beta-stable outlier instance (P, gamma) has a P_opt that is
    beta/(1-gamma)-stable as a plain MEB instance.
    """
    g = gamma * P.n
    if abs(g - round(g)) > 1e-9:
        raise ContractViolation(f"gamma * n = {g:g} must be an integer")
    g = int(round(g))
    if not 0 <= g < P.n:
        raise ContractViolation(f"gamma * n = {g} leaves no inliers")
    radii = _removal_radii(P)
    # largest beta for (P, gamma): total removals tolerated before dropping below (1-eps) Rad(P_opt)
    drop = _first_drop(radii, (1.0 - epsilon) * float(radii[g]), g)
    beta = (drop - 1 - g) / P.n

    _, kept = brute_meb_outliers(P, g)
    # same threshold for P_opt, whose radius equals radii[g]
    opt_radii = _removal_radii(P.subset(kept))
    m_star = _first_drop(opt_radii, (1.0 - epsilon) * float(radii[g]), 1)
    # beta/(1-gamma) * |P_opt| == beta * n, and P_opt is that stable iff it is <= m_star - 1
    holds = drop - 1 - g <= m_star - 1
    if not holds:
        logger.warning("stability claim failed: beta=%.4f, P_opt m_star=%d", beta, m_star)
    return holds
