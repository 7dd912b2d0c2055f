"""Summary record of one solver run."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Dict, Optional

from .core import Instance, instance_digest, variant_to_mapping
from .localsearch import SolveResult, StuckAtFeasibleTarget


@dataclass(frozen=True)
class RunReport:
    """Structured outcome of a ``solve`` run; the ratio is an exact fraction."""

    instance_digest: str
    T: int
    makespan: Optional[int]
    ratio: Optional[Fraction]
    iterations: int
    blockers_added: int
    wall_time_ms: float
    variant: Dict[str, Any]
    stuck: bool = False
    certificate: Optional[Dict[str, Any]] = None
    trace_summary: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.stuck and self.certificate is None:
            raise ValueError("a stuck run must carry its certificate")

    @classmethod
    def from_result(cls, instance: Instance, result: SolveResult, wall_time_ms: float) -> "RunReport":
        return cls(
            instance_digest=instance_digest(instance),
            T=result.T,
            makespan=result.makespan,
            ratio=result.ratio,
            iterations=result.iterations,
            blockers_added=result.blockers_added,
            wall_time_ms=wall_time_ms,
            variant=variant_to_mapping(result.variant),
            trace_summary=dict(result.trace_summary),
        )

    @classmethod
    def from_stuck(cls, instance: Instance, error: StuckAtFeasibleTarget, wall_time_ms: float) -> "RunReport":
        return cls(
            instance_digest=instance_digest(instance),
            T=error.T,
            makespan=None,
            ratio=None,
            iterations=0,
            blockers_added=0,
            wall_time_ms=wall_time_ms,
            variant={},
            stuck=True,
            certificate={
                **error.certificate.to_mapping(),
                "job": error.job,
                "verified": error.check.certifies_infeasibility,
            },
        )

    def to_mapping(self) -> Dict[str, Any]:
        data = asdict(self)
        ratio = self.ratio
        data["ratio"] = None if ratio is None else f"{ratio.numerator}/{ratio.denominator}"
        data["ratio_num"] = None if ratio is None else ratio.numerator
        data["ratio_den"] = None if ratio is None else ratio.denominator
        return data
