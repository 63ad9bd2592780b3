from .models import (
    ScalarMode,
    Verdict,
    ProbeConfig,
    Witness,
    EdgeRank,
    ProbeTrial,
    ProbeReport,
    MembershipReport,
    SplitScore,
    FactorStep,
    FactorizationSummary,
    GeneratorSummary,
    RunConfig,
    JointRequest,
    FlattenRequest,
    MembershipRequest,
    InvariantSummaryRequest,
    SplitSupportRequest,
)

__all__ = [
    "ScalarMode",
    "Verdict",
    "ProbeConfig",
    "Witness",
    "EdgeRank",
    "ProbeTrial",
    "ProbeReport",
    "MembershipReport",
    "SplitScore",
    "FactorStep",
    "FactorizationSummary",
    "GeneratorSummary",
    "RunConfig",
    "JointRequest",
    "FlattenRequest",
    "MembershipRequest",
    "InvariantSummaryRequest",
    "SplitSupportRequest",
]
