"""
Core report records for the lab.

Array-carrying objects (grids, operators, kernel slices) are frozen
dataclasses next to the code that builds them; everything that ends up in
a JSON report is a Pydantic model defined here.
"""

from enum import Enum
from typing import Any, Self

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Provenance(str, Enum):
    """Where an ellipticity estimate came from."""

    SCAN = "scan"
    RECOVERED = "recovered-from-kernel"
    OSCILLATION = "oscillation"


class TikhonovStatus(str, Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


class TacklindStatus(str, Enum):
    DIVERGENT = "divergent"
    CONVERGENT = "convergent"
    INCONCLUSIVE = "inconclusive"


class FellerStatus(str, Enum):
    CONSERVATIVE = "conservative"
    EXPLOSIVE = "explosive"
    INCONCLUSIVE = "inconclusive"


class EllipticityEstimate(BaseModel):
    """Bounds lambda*I >= C(x) >= mu*I; either side may be absent for one-sided estimates."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    mu: float | None = Field(default=None, ge=0.0, description="Lower ellipticity bound")
    lambda_: float | None = Field(
        default=None, alias="lambda", gt=0.0, description="Upper ellipticity bound"
    )
    provenance: Provenance = Field(..., description="How the bounds were obtained")
    mu_point: list[float] | None = Field(default=None, description="Sample attaining mu")
    lambda_point: list[float] | None = Field(default=None, description="Sample attaining lambda")

    @model_validator(mode="after")
    def check_order(self) -> Self:
        if (
            self.mu is not None
            and self.lambda_ is not None
            and self.mu > self.lambda_ * (1.0 + 1e-9)
        ):
            raise ValueError(f"mu={self.mu} exceeds lambda={self.lambda_}")
        return self

    @property
    def strongly_elliptic(self) -> bool:
        return self.mu is not None and self.mu > 0.0

    def merge(self, other: "EllipticityEstimate") -> "EllipticityEstimate":
        """Combine a mu-part and a lambda-part of the same provenance."""
        return EllipticityEstimate(
            mu=self.mu if self.mu is not None else other.mu,
            lambda_=self.lambda_ if self.lambda_ is not None else other.lambda_,
            provenance=self.provenance,
            mu_point=self.mu_point or other.mu_point,
            lambda_point=self.lambda_point or other.lambda_point,
        )


class GrowthVerdict(BaseModel):
    """Finite-window classification of the Tikhonov and Tacklind growth conditions."""

    tikhonov: TikhonovStatus = TikhonovStatus.INCONCLUSIVE
    tikhonov_a: float | None = Field(default=None, description="Fitted a in |B| <= a e^{b r^2}")
    tikhonov_b: float | None = Field(default=None, description="Fitted b in |B| <= a e^{b r^2}")
    residual_slope: float | None = Field(
        default=None, description="Out-of-sample residual slope against r^2"
    )
    tacklind: TacklindStatus = TacklindStatus.INCONCLUSIVE
    tail_exponent: float | None = Field(default=None, description="p in log|B| ~ c r^p")
    log_exponent: float | None = Field(
        default=None, description="g in log|B| ~ c r^p (log r)^g, when the window allows it"
    )
    partial_integrals: list[tuple[float, float]] = Field(
        default_factory=list, description="(T, I(T)) on the doubling sequence"
    )
    notes: list[str] = Field(default_factory=list)

    @property
    def consistent(self) -> bool:
        """Tikhonov satisfied implies Tacklind divergent."""
        return not (
            self.tikhonov is TikhonovStatus.SATISFIED
            and self.tacklind is not TacklindStatus.DIVERGENT
        )


class GaussianEnvelope(BaseModel):
    """a G_{b;t} >= K_t >= a' G_{b';t} on the fitting window."""

    model_config = ConfigDict(frozen=True)

    d: int = Field(..., ge=1, le=3)
    a: float = Field(..., gt=0.0)
    b: float = Field(..., gt=0.0)
    a_lower: float | None = Field(default=None, gt=0.0)
    b_lower: float | None = Field(default=None, gt=0.0)
    t_values: list[float] = Field(default_factory=list)
    u_max: float = Field(default=0.0, description="Largest |x-y|^2/t in the window")
    n_points: int = Field(default=0, description="Kernel samples in the window")
    upper_gap: float = Field(default=0.0, description="min over samples of log(a G) - log K")
    lower_gap: float | None = Field(
        default=None, description="min over samples of log K - log(a' G)"
    )

    @model_validator(mode="after")
    def check_ordering(self) -> Self:
        if self.a_lower is not None and self.b_lower is not None:
            if self.a < self.a_lower * (1.0 - 1e-12):
                raise ValueError(f"upper amplitude {self.a} below lower {self.a_lower}")
            if self.b_lower < self.b * (1.0 - 1e-12):
                raise ValueError(f"lower rate {self.b_lower} below upper rate {self.b}")
        return self

    @property
    def has_lower_bound(self) -> bool:
        return self.a_lower is not None


class FellerEnd(BaseModel):
    """Feller test at one end of the line."""

    status: FellerStatus
    scale_finite: bool
    scale_limit: float | None = None
    scale_tail_exponent: float | None = None
    explosion_tail_exponent: float | None = None


class FellerVerdict(BaseModel):
    status: FellerStatus
    plus: FellerEnd
    minus: FellerEnd
    cutoff: float


class InvariantCheck(BaseModel):
    """Outcome of one invariant or acceptance check."""

    name: str
    passed: bool
    value: float | None = None
    threshold: float | None = None
    detail: str = ""


class RunReport(BaseModel):
    """Everything an experiment run emits besides CSV payloads."""

    kind: str
    config: dict[str, Any] = Field(default_factory=dict)
    results: dict[str, Any] = Field(default_factory=dict)
    checks: list[InvariantCheck] = Field(default_factory=list)
    payloads: list[str] = Field(default_factory=list, description="CSV files written")
    timings: dict[str, float] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add_check(
        self,
        name: str,
        passed: bool,
        value: float | None = None,
        threshold: float | None = None,
        detail: str = "",
    ) -> InvariantCheck:
        check = InvariantCheck(
            name=name,
            passed=bool(passed),
            value=None if value is None else float(value),
            threshold=None if threshold is None else float(threshold),
            detail=detail,
        )
        self.checks.append(check)
        return check
