"""driftwatch: dynamic safety-assurance engine.

Binds safety performance measurement (measures -> metrics -> indicators) to a
bow-tie safety architecture and a structured safety argument, revises
operational risk by conjugate Bayesian updating, quantifies drift from the
approved baseline via risk ratios and trends, and verifies consistency
between the measurement basis and the argument.
"""
from .architecture import (
    Barrier,
    BarrierRole,
    BowTieView,
    ConsequenceChain,
    Event,
    EventKind,
    OperatingContext,
    RiskClassification,
    RiskLevel,
    RiskMatrixConfig,
    SafetyArchitecture,
    ThreatChain,
    classify_risk,
    initial_risk_level,
    load_architecture,
    propagate_risk,
    validate,
)
from .argument import (
    Argument,
    ArgumentNode,
    ConsistencyVerdict,
    NodeKind,
    check_consistency,
    check_refinement,
    extract_indicators,
    generate_skeleton,
    load_argument,
)
from .bayes import BetaDist, BinomialObservation, likelihood, posterior, prior_from_dev_metrics
from .expr import ExpressionSyntaxError, parse_expression
from .ingest import DataRun, IngestError, LifetimeStore, Window, build_run, query
from .project import Project, ProjectConfig
from .riskdyn import (
    DriftConfig,
    DriftVerdict,
    ReferenceKind,
    RevisionLog,
    RevisionRecord,
    RiskRatio,
    Tlos,
    TrendEstimate,
    allocate_scenario,
    derive_barrier_si,
    drift_verdict,
    fit_trend,
    revise_risk,
    risk_ratio,
    tlos_to_indicator,
)
from .smb import (
    ArtifactLink,
    Comparator,
    Exposure,
    ExposureKind,
    Indicator,
    IndicatorStatus,
    LinkKind,
    Measure,
    Metric,
    MetricScope,
    Smb,
    Verdict,
    evaluate_indicator,
    evaluate_metric,
    list_statuses,
    load_smb,
    validate_smb,
)

__version__ = "0.1.0"
