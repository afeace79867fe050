# Pydantic models
from .network_models import SizeReport, MulConfig
from .certificate_models import ConstructionId, ApproxCertificate, RiemannNetCertificate, BuildCertificate
from .problem_models import InitialKind, Variant, SmoothTarget, InitialCondition, VectorFieldProblem
from .experiment_models import (
    ExperimentConfig, SweepRow, ScalingFit, DirectBaseline, ExperimentResult, PropertyCheck, PropertyReport,
)

__all__ = [
    "SizeReport", "MulConfig",
    "ConstructionId", "ApproxCertificate", "RiemannNetCertificate", "BuildCertificate",
    "InitialKind", "Variant", "SmoothTarget", "InitialCondition", "VectorFieldProblem",
    "ExperimentConfig", "SweepRow", "ScalingFit", "DirectBaseline", "ExperimentResult", "PropertyCheck",
    "PropertyReport",
]
