from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from geometry import Ball, ConfigError, ContractViolation, PointSet, distances_to

logger = logging.getLogger(__name__)

EXACT_MAX_N = 16
EXACT_MAX_D = 8
# Gram matrices whose smallest singular value falls below this (relative) are rank-deficient.
RANK_TOL = 1e-10
STEP_RULES = ("harmonic", "line-search")


def ceil_tol(x: float) -> int:
    """Ceiling that ignores float noise just above an integer (3/0.1 -> 30)."""
    return int(math.ceil(x - 1e-9))


def floor_tol(x: float) -> int:
    return int(math.floor(x + 1e-9))


def iteration_cap(epsilon: float, s: float) -> int:
    return ceil_tol(2.0 / ((1.0 - s) * epsilon))


def center_tolerance(epsilon: float, s: float) -> float:
    return s * epsilon / (1.0 + epsilon)


@dataclass
class CenterFit:
    center: np.ndarray
    weights: np.ndarray
    radius: float  # max distance from center to T
    lower: float  # sqrt of the dual value, a lower bound on the exact radius of T
    steps: int
    certified: bool


@dataclass
class CoresetState:
    indices: List[int]
    center: np.ndarray
    iterations: int
    z: int
    s: float
    xi: float
    radii: List[float] = field(default_factory=list)
    full_scans: int = 0

    @property
    def size(self) -> int:
        return len(self.indices)


def _certified(far2: float, phi: float, xi: float) -> bool:
    # ||c - c*||^2 <= R(c)^2 - r*^2 <= R(c)^2 - phi
    return far2 - phi <= xi * xi * phi


def _harmonic(X: np.ndarray, xi: float, K: int) -> CenterFit:
    m = X.shape[0]
    u = np.zeros(m)
    u[0] = 1.0
    c = X[0].copy()
    steps = 0
    for k in range(1, K + 1):
        diff = X - c
        D = np.einsum("ij,ij->i", diff, diff)
        j = int(np.argmax(D))
        phi = float(u @ D)
        if _certified(float(D[j]), phi, xi):
            break
        step = 1.0 / (k + 1)
        c = c + (X[j] - c) * step
        u *= 1.0 - step
        u[j] += step
        steps = k
    diff = X - c
    D = np.einsum("ij,ij->i", diff, diff)
    far2 = float(D.max())
    phi = float(u @ D)
    return CenterFit(c, u, math.sqrt(far2), math.sqrt(max(phi, 0.0)), steps, _certified(far2, phi, xi))


def _line_search(X: np.ndarray, xi: float, K: int, weights: Optional[np.ndarray]) -> CenterFit:
    m = X.shape[0]
    if weights is None or weights.shape[0] != m or weights.sum() <= 0:
        u = np.zeros(m)
        u[0] = 1.0
    else:
        u = np.clip(np.asarray(weights, dtype=np.float64), 0.0, None)
        u /= u.sum()
    c = u @ X
    steps = 0
    for k in range(1, K + 1):
        diff = X - c
        D = np.einsum("ij,ij->i", diff, diff)
        j = int(np.argmax(D))
        far2 = float(D[j])
        phi = float(u @ D)
        if _certified(far2, phi, xi):
            break
        if phi <= 0.0:
            # single support point: halfway toward the farthest point
            lam = 0.5
            u *= 1.0 - lam
            u[j] += lam
        else:
            support = np.flatnonzero(u > 0.0)
            a = int(support[np.argmin(D[support])])
            d_plus = far2 / phi - 1.0
            d_minus = 1.0 - float(D[a]) / phi
            if d_plus >= d_minus or u[a] >= 1.0:
                lam = d_plus / (2.0 * (1.0 + d_plus))
                u *= 1.0 - lam
                u[j] += lam
            else:
                lam_max = u[a] / (1.0 - u[a])
                lam = min(d_minus / (2.0 * (1.0 - d_minus)), lam_max)
                u *= 1.0 + lam
                u[a] -= lam
                if lam >= lam_max:
                    u[a] = 0.0
            u = np.clip(u, 0.0, None)
            u /= u.sum()
        c = u @ X
        steps = k
    diff = X - c
    D = np.einsum("ij,ij->i", diff, diff)
    far2 = float(D.max())
    phi = float(u @ D)
    return CenterFit(c, u, math.sqrt(far2), math.sqrt(max(phi, 0.0)), steps, _certified(far2, phi, xi))


def approx_center(
    P: PointSet,
    T: Sequence[int],
    xi: float,
    *,
    step: str = "harmonic",
    weights: Optional[np.ndarray] = None,
) -> CenterFit:
    """
    Approximate MEB center of the rows T, within xi times the exact radius of the exact center.

    Runs at most K = ceil(1/xi^2) Frank-Wolfe steps and stops as soon as the duality gap
    certifies the bound. `weights` warm-starts the line-search rule.
    """
    if len(T) == 0:
        raise ContractViolation("approx_center needs a nonempty core-set")
    if not 0.0 < xi < 1.0:
        raise ContractViolation(f"xi must lie in (0, 1), got {xi}")
    if step not in STEP_RULES:
        raise ConfigError(f"unknown center step rule {step!r}")
    X = P.rows(T)
    K = ceil_tol(1.0 / (xi * xi))
    if step == "harmonic":
        return _harmonic(X, xi, K)
    fit = _line_search(X, xi, K, weights)
    if not fit.certified:
        logger.warning("line-search center uncertified after %d steps; rerunning harmonic scheme", fit.steps)
        return _harmonic(X, xi, K)
    return fit


def coreset_meb(
    P: PointSet,
    epsilon: float,
    s: float = 1.0 / 3.0,
    *,
    step: str = "line-search",
) -> Tuple[Ball, CoresetState]:
    if not 0.0 < epsilon < 1.0:
        raise ConfigError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0.0 < s < 1.0:
        raise ConfigError(f"s must lie in (0, 1), got {s}")
    z = iteration_cap(epsilon, s)
    xi = center_tolerance(epsilon, s)

    T: List[int] = [0]
    weights: Optional[np.ndarray] = None
    radii: List[float] = []
    growths = 0
    scans = 0
    while True:
        fit = approx_center(P, T, xi, step=step, weights=weights)
        radii.append(fit.radius)
        dists = distances_to(P.data, fit.center)
        scans += 1
        far = int(np.argmax(dists))
        far_d = float(dists[far])
        # fit.lower <= Rad(T) <= Rad(P), so stopping here keeps far_d <= (1+eps) Rad(P).
        # Certified fits have radius <= sqrt(1+xi^2) * lower, so rows of T are never re-added.
        if far_d <= (1.0 + epsilon) * fit.lower or growths >= z:
            break
        T.append(far)
        weights = np.append(fit.weights, 0.0)
        growths += 1
        logger.debug("core-set growth %d: added row %d at distance %.6g (r_i=%.6g)", growths, far, far_d, fit.radius)

    assert growths <= z, "core-set growth exceeded the iteration cap"
    state = CoresetState(
        indices=T, center=fit.center, iterations=growths, z=z, s=s, xi=xi, radii=radii, full_scans=scans
    )
    return Ball(fit.center, far_d), state


@dataclass
class SupportCandidates:
    """Smallest balls through every affinely independent support subset of size 1..d+1."""

    centers: np.ndarray  # (M, d)
    radii: np.ndarray  # (M,)
    supports: List[Tuple[int, ...]]


def _check_small(P: PointSet) -> None:
    if P.n > EXACT_MAX_N or P.d > EXACT_MAX_D:
        raise ContractViolation(
            f"exact enumeration limited to n <= {EXACT_MAX_N}, d <= {EXACT_MAX_D}; got n={P.n}, d={P.d}"
        )


def support_candidates(P: PointSet) -> SupportCandidates:
    _check_small(P)
    X = P.data
    centers: List[np.ndarray] = [X.copy()]
    radii: List[np.ndarray] = [np.zeros(P.n)]
    supports: List[Tuple[int, ...]] = [(i,) for i in range(P.n)]
    for size in range(2, min(P.n, P.d + 1) + 1):
        combos = np.array(list(combinations(range(P.n), size)), dtype=np.intp)
        S = X[combos]  # (B, size, d)
        U = S[:, 1:, :] - S[:, :1, :]
        G = np.einsum("bik,bjk->bij", U, U)
        sv = np.linalg.svd(G, compute_uv=False)
        ok = sv[:, -1] > RANK_TOL * np.maximum(sv[:, 0], 1e-300)
        if not ok.any():
            continue
        combos, S, U, G = combos[ok], S[ok], U[ok], G[ok]
        rhs = 0.5 * np.einsum("bii->bi", G)
        alpha = np.linalg.solve(G, rhs[..., None])[..., 0]
        # barycentric coordinates (1 - sum(alpha), alpha) must be nonnegative
        inside = (alpha >= -1e-12).all(axis=1) & (alpha.sum(axis=1) <= 1.0 + 1e-12)
        if not inside.any():
            continue
        combos, S, U, alpha = combos[inside], S[inside], U[inside], alpha[inside]
        offset = np.einsum("bi,bik->bk", alpha, U)
        centers.append(S[:, 0, :] + offset)
        radii.append(np.sqrt(np.einsum("bk,bk->b", offset, offset)))
        supports.extend(tuple(int(i) for i in row) for row in combos)
    return SupportCandidates(np.vstack(centers), np.concatenate(radii), supports)


def candidate_coverage(P: PointSet, cands: SupportCandidates, slack: float = 1e-9) -> np.ndarray:
    """Boolean (M, n) matrix: candidate ball m covers point i."""
    diff = cands.centers[:, None, :] - P.data[None, :, :]
    D = np.sqrt(np.einsum("mik,mik->mi", diff, diff))
    return D <= cands.radii[:, None] * (1.0 + slack) + 1e-12


def exact_meb_small(P: PointSet) -> Ball:
    cands = support_candidates(P)
    covers_all = candidate_coverage(P, cands).all(axis=1)
    radii = np.where(covers_all, cands.radii, np.inf)
    best = int(np.argmin(radii))
    return Ball(cands.centers[best], float(cands.radii[best]))
