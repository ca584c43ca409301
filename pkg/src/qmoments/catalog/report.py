from __future__ import annotations

import math
from dataclasses import dataclass, field

DEFAULT_TOL = 1e-9
KINDS = ("inequality", "equality")


@dataclass(frozen=True)
class InequalityReport:
    """Outcome of one classical-bound check.

    ``margin`` is ``rhs - lhs`` for inequalities ``lhs <= rhs`` and
    ``-|lhs - rhs|`` for equalities; negative beyond ``tolerance`` means
    violated.  A report whose premise fails (``applicable=False``) carries
    margin 0 and is never violated.
    """

    name: str
    lhs: float
    rhs: float
    kind: str = "inequality"
    tolerance: float = DEFAULT_TOL
    applicable: bool = True
    details: dict = field(default_factory=dict)
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not (math.isfinite(self.lhs) and math.isfinite(self.rhs)):
            raise ValueError(f"{self.name}: lhs/rhs must be finite, got {self.lhs!r}, {self.rhs!r}")

    @property
    def margin(self) -> float:
        if not self.applicable:
            return 0.0
        if self.kind == "equality":
            return -abs(self.lhs - self.rhs)
        return self.rhs - self.lhs

    @property
    def violated(self) -> bool:
        return self.margin < -self.tolerance

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "margin": float(self.margin),
            "violated": self.violated,
            "applicable": self.applicable,
            "tolerance": float(self.tolerance),
            "details": _jsonable(self.details),
            "seed": self.seed,
            "params": _jsonable(self.params),
        }

    def summary(self) -> str:
        state = "VIOLATED" if self.violated else ("n/a" if not self.applicable else "holds")
        return f"{self.name}: lhs={self.lhs:.10g} rhs={self.rhs:.10g} margin={self.margin:.3e} [{state}]"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        # big exact integers travel as decimal strings
        return str(x) if abs(x) > 2**53 else x
    if hasattr(x, "tolist"):
        return _jsonable(x.tolist())
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return float(x)
