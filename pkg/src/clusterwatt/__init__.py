"""Energy and response-time models for parallel hash joins on mixed clusters."""

from .domain import (
    CacheMode,
    ClusterDesign,
    ExecutionMode,
    JoinQuerySpec,
    ModeKind,
    NodeGroup,
    NodeTypeSpec,
    Strategy,
    select_execution_mode,
    validate_scenario,
)
from .errors import (
    ClusterwattError,
    Infeasible,
    InsufficientData,
    InvalidSpec,
    MissingSection,
    NoFeasibleDesign,
    NoProgress,
    ParseError,
    UnknownKey,
)
from .explorer import (
    DesignPoint,
    find_knee,
    mix_space,
    recommend,
    relative_metrics,
    size_space,
    sweep_designs,
)
from .model import Bottleneck, JoinEstimate, Phase, PhaseEstimate, estimate
from .power import CalibrationSample, FitReport, PowerFamily, PowerModel, fit_power_model
from .scenario import Scenario, load_scenario, parse_scenario, serialize_scenario
from .simulator import SimResult, simulate

__all__ = [name for name in dir() if not name.startswith("_")]
