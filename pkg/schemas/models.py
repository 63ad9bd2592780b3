from __future__ import annotations

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field, model_validator


class ScalarMode(str, Enum):
    exact = "exact"
    float = "float"


class Verdict(str, Enum):
    accept = "accept"
    reject = "reject"
    probabilistic_accept = "probabilistic-accept"


class ProbeConfig(BaseModel):
    """Numeric-probe settings for the tilde construction."""

    trials: int = Field(5, ge=1)
    seed: int = 0
    z_entry_range: int = Field(9, ge=1, description="Z entries are drawn from [-range, range]")
    mode: ScalarMode = ScalarMode.exact
    tol: float = Field(1e-9, gt=0)


class Witness(BaseModel):
    """Evidence that a tensor lies outside a zero set."""

    kind: str = Field(..., description="rank | generator | probe")
    generator: str = Field(..., description="Generator source tag or flattening label")
    value: str = Field(..., description="Nonzero value (rational p/q) or rank")
    location: Optional[str] = Field(default=None, description="Edge split or vertex")
    rows: List[int] = Field(default_factory=list, description="Nonsingular minor rows")
    cols: List[int] = Field(default_factory=list, description="Nonsingular minor cols")


class EdgeRank(BaseModel):
    edge: str
    split: str
    rank: int = Field(..., ge=0)
    rows: int = Field(..., ge=1)
    cols: int = Field(..., ge=1)
    within_bound: bool


class ProbeTrial(BaseModel):
    trial: int = Field(..., ge=0)
    values: List[str] = Field(default_factory=list)
    nonzero: int = Field(0, ge=0)


class ProbeReport(BaseModel):
    """Per-trial evaluations of a base set at numerically pulled-back tensors."""

    location: Optional[str] = None
    target_states: List[int]
    n_generators: int = Field(..., ge=0)
    config: ProbeConfig
    trials: List[ProbeTrial] = Field(default_factory=list)
    certificate: bool = Field(False, description="True when some value is an exact nonzero")
    first_nonzero: Optional[Witness] = None
    miss_bound: float = Field(
        1.0,
        ge=0,
        le=1,
        description="Upper bound on the chance that a nonvanishing generator looked zero in every trial",
    )


class MembershipReport(BaseModel):
    verdict: Verdict
    kappa: int = Field(..., ge=1)
    taxa: List[str]
    mode: str = Field("exact", description="edge-rank | exact | probe")
    edge_ranks: List[EdgeRank] = Field(default_factory=list)
    witnesses: List[Witness] = Field(default_factory=list)
    probes: List[ProbeReport] = Field(default_factory=list)
    generators_checked: int = Field(0, ge=0)
    notes: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _reject_iff_witness(self) -> "MembershipReport":
        if (self.verdict == Verdict.reject) != bool(self.witnesses):
            raise ValueError("reject_requires_witness: verdict and witnesses disagree")
        return self


class SplitScore(BaseModel):
    split: str
    score: float = Field(..., ge=0)
    rank: int = Field(..., ge=0)
    singular_values: List[float] = Field(default_factory=list)
    max_abs_minor: Optional[float] = None


class FactorStep(BaseModel):
    """One split-off piece: ``q_axes`` are its axes, ``r_axes`` the shared axis and the taxa across the edge."""

    edge: str
    split: str
    inner_rank: int = Field(..., ge=0)
    shared_axis: str
    q_axes: List[str]
    r_axes: List[str]


class FactorizationSummary(BaseModel):
    kappa: int
    taxa: List[str]
    steps: List[FactorStep] = Field(default_factory=list)
    recomposed_exact: bool = False


class GeneratorSummary(BaseModel):
    kappa: int
    states: List[int]
    total: int = Field(..., ge=0)
    by_source: Dict[str, int] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)


class RunConfig(BaseModel):
    """Effective settings of one CLI run; echoed as header lines of randomized outputs."""

    command: str
    seed: int = 0
    scalar_mode: ScalarMode = ScalarMode.exact
    tol: float = Field(1e-9, gt=0)
    probe_trials: int = Field(5, ge=1)
    threads: int = Field(1, ge=1)
    paths: Dict[str, str] = Field(default_factory=dict)

    def header_lines(self) -> List[str]:
        lines = [f"# command: {self.command}", f"# seed: {self.seed}", f"# mode: {self.scalar_mode.value}"]
        if self.scalar_mode == ScalarMode.float:
            lines.append(f"# tol: {self.tol}")
        return lines


# ---------------------------------------------------------------------- API requests


class JointRequest(BaseModel):
    tree: str = Field(..., description="Newick text")
    params: str = Field(..., description="Parameter file contents")
    method: str = Field("inductive", pattern="^(inductive|history)$")


class FlattenRequest(BaseModel):
    tensor: str
    blocks: List[List[str]]


class MembershipRequest(BaseModel):
    tree: str
    tensor: str
    kappa: int = Field(..., ge=2)
    test: str = Field("edge-rank", pattern="^(edge-rank|exact|probe)$")
    base3: Optional[str] = Field(None, description="Generator set for valency-3 vertices")
    probe: Optional[ProbeConfig] = None


class InvariantSummaryRequest(BaseModel):
    tree: str
    kappa: int = Field(..., ge=2)
    states: Optional[List[int]] = None
    base3: Optional[str] = None


class SplitSupportRequest(BaseModel):
    tensor: str
    kappa: int = Field(..., ge=2)
    splits: Optional[List[str]] = None
    raw_minors: bool = False
