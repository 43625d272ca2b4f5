from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

from reports import TrialReport

# two-sided 99% normal quantile
Z99 = 2.5758293035489


def binomial_margin(trials: int, p: float, z: float = Z99) -> float:
    """Normal-approximation margin of a success frequency around p over `trials` trials."""
    if trials <= 0:
        return 1.0
    p = min(max(p, 0.0), 1.0)
    return z * math.sqrt(p * (1.0 - p) / trials)


def wilson_interval(successes: int, trials: int, z: float = Z99) -> Tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    phat = successes / trials
    denom = 1.0 + z * z / trials
    mid = (phat + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z * z / (4.0 * trials * trials)) / denom
    return max(0.0, mid - half), min(1.0, mid + half)


def default_threshold(algorithm: str, cfg: Dict[str, Any]) -> Optional[float]:
    """Success probability each algorithm guarantees; None where no constant is stated."""
    if algorithm == "quick":
        return 1.0 - float(cfg.get("eta", 0.1))
    if algorithm == "alg2":
        return 1.0 - float(cfg.get("eta0", 0.1))
    if algorithm == "outlier":
        return (1.0 - float(cfg.get("eta", 0.1))) * (1.0 - float(cfg.get("gamma", 0.0)))
    return None


@dataclass
class GroupSummary:
    algorithm: str
    cfg: Dict[str, Any]
    combo: Optional[Dict[str, Any]]
    trials: int
    successes: int
    fallbacks: int
    covered: int
    within_ratio: int
    threshold: Optional[float]
    margin: float
    wilson: Tuple[float, float]
    max_ratio: Optional[float] = None
    max_samples: int = 0

    @property
    def frequency(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @property
    def fallback_rate(self) -> float:
        return self.fallbacks / self.trials if self.trials else 0.0

    @property
    def passed(self) -> bool:
        if self.threshold is None:
            return True
        return self.frequency >= self.threshold - self.margin

    def to_dict(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm,
            "cfg": self.cfg,
            "combo": self.combo,
            "trials": self.trials,
            "successes": self.successes,
            "frequency": self.frequency,
            "fallback_rate": self.fallback_rate,
            "covered": self.covered,
            "within_ratio": self.within_ratio,
            "threshold": self.threshold,
            "margin": self.margin,
            "wilson": list(self.wilson),
            "max_ratio": self.max_ratio,
            "max_samples": self.max_samples,
            "passed": self.passed,
        }


@dataclass
class EvalResult:
    groups: List[GroupSummary] = field(default_factory=list)
    malformed: List[Tuple[int, str]] = field(default_factory=list)

    @property
    def trials(self) -> int:
        return sum(g.trials for g in self.groups)

    @property
    def passed(self) -> bool:
        return self.trials > 0 and not self.malformed and all(g.passed for g in self.groups)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trials": self.trials,
            "malformed": [{"line": ln, "reason": why} for ln, why in self.malformed],
            "groups": [g.to_dict() for g in self.groups],
            "passed": self.passed,
        }


def _group_key(r: TrialReport) -> str:
    return json.dumps([r.algorithm, r.cfg, r.combo], sort_keys=True)


def summarize(
    reports: Iterable[TrialReport],
    *,
    min_success: Optional[float] = None,
    malformed: Optional[List[Tuple[int, str]]] = None,
) -> EvalResult:
    """
    Groups reports by (algorithm, cfg, combo) and compares each group's success frequency
    with its threshold minus the 99% binomial margin. `min_success` overrides the defaults
    and also applies to algorithms without a stated success probability.
    """
    buckets: Dict[str, List[TrialReport]] = {}
    for r in reports:
        buckets.setdefault(_group_key(r), []).append(r)

    result = EvalResult(malformed=list(malformed or []))
    for rows in buckets.values():
        first = rows[0]
        threshold = min_success if min_success is not None else default_threshold(first.algorithm, first.cfg)
        successes = sum(1 for r in rows if r.succeeded)
        ratios = [r.ratio_vs_reference for r in rows if r.ratio_vs_reference is not None and not r.fallback]
        result.groups.append(
            GroupSummary(
                algorithm=first.algorithm,
                cfg=first.cfg,
                combo=first.combo,
                trials=len(rows),
                successes=successes,
                fallbacks=sum(1 for r in rows if r.fallback),
                covered=sum(1 for r in rows if r.covered),
                within_ratio=sum(1 for r in rows if r.within_ratio),
                threshold=threshold,
                margin=binomial_margin(len(rows), threshold) if threshold is not None else 0.0,
                wilson=wilson_interval(successes, len(rows)),
                max_ratio=max(ratios) if ratios else None,
                max_samples=max(r.samples_drawn for r in rows),
            )
        )
    result.groups.sort(key=lambda g: (g.algorithm, json.dumps(g.combo, sort_keys=True)))
    return result
