from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, IO, Iterable, List, Optional, Tuple

import numpy as np

from geometry import DEFAULT_SLACK, Ball, PointSet, coverage_count

SCHEMA_VERSION = 1


@dataclass
class TrialReport:
    algorithm: str
    seed: int
    stream_id: int
    n: int
    d: int
    cfg: Dict[str, Any]
    radius: float = 0.0
    center_norm: float = 0.0
    samples_drawn: int = 0
    sample_budget: int = 0
    coverage_count: Optional[int] = None
    target_coverage: Optional[int] = None
    reference_radius: Optional[float] = None
    ratio_vs_reference: Optional[float] = None
    ratio_bound: Optional[float] = None
    fallback: bool = False
    wall_time_ms: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict)
    combo: Optional[Dict[str, Any]] = None

    def set_ball(self, ball: Ball) -> None:
        self.radius = float(ball.radius)
        self.center_norm = float(np.linalg.norm(ball.center))

    def attach_coverage(self, P: PointSet, ball: Ball, slack: float = DEFAULT_SLACK) -> None:
        # evaluation-only full scan, never counted in samples_drawn
        self.coverage_count = coverage_count(P, ball, slack)
        if self.target_coverage is None:
            self.target_coverage = P.n

    def attach_reference(self, reference_radius: Optional[float]) -> None:
        self.reference_radius = reference_radius
        self.ratio_vs_reference = self._ratio()

    def _ratio(self) -> Optional[float]:
        ref = self.reference_radius
        if ref is None:
            return None
        if ref > 0:
            return self.radius / ref
        return 1.0 if self.radius == 0.0 else float("inf")

    @property
    def covered(self) -> bool:
        return (
            self.coverage_count is not None
            and self.target_coverage is not None
            and self.coverage_count >= self.target_coverage
        )

    @property
    def within_ratio(self) -> bool:
        if self.ratio_bound is None:
            return True
        # an infinite ratio is written as null; recover it from the radii
        ratio = self.ratio_vs_reference if self.ratio_vs_reference is not None else self._ratio()
        if ratio is None:
            return True
        return ratio <= self.ratio_bound * (1.0 + 1e-9)

    @property
    def succeeded(self) -> bool:
        return not self.fallback and self.covered and self.within_ratio

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json_line(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, allow_nan=False)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrialReport":
        known = {f.name for f in fields(cls)}
        missing = [k for k in ("algorithm", "seed", "stream_id", "n", "d", "cfg") if k not in data]
        if missing:
            raise ValueError(f"missing fields: {', '.join(missing)}")
        return cls(**{k: v for k, v in data.items() if k in known})


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_reports(stream: IO[str], reports: Iterable[TrialReport]) -> int:
    count = 0
    for r in reports:
        stream.write(r.to_json_line() + "\n")
        count += 1
    stream.flush()
    return count


def read_reports(path: str) -> Tuple[List[TrialReport], List[Tuple[int, str]]]:
    """
    Reads a JSON-lines report file. Returns parsed reports and (line number, reason) for every
    malformed line instead of silently skipping it.
    """
    reports: List[TrialReport] = []
    malformed: List[Tuple[int, str]] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("not a JSON object")
                reports.append(TrialReport.from_dict(obj))
            except (ValueError, TypeError) as e:
                malformed.append((lineno, str(e)))
    return reports, malformed
