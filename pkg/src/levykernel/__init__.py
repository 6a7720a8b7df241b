"""Nonparametric estimation of state-dependent Levy densities from discretely
observed jump-diffusions, with simulation and coverage tooling."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    CapabilityError,
    ConfigError,
    DomainError,
    LevyKernelError,
    NoDataError,
    SimulationError,
)
from .kernels import Bandwidth, KernelSpec, get_kernel  # noqa: E402
from .models import CompoundPoissonToy, LevyModel, StableExample, model_from_config  # noqa: E402
from .simulate import JumpLog, SamplePath, SimulationScheme, simulate_path  # noqa: E402
from .estimate import estimate_continuous, estimate_discrete  # noqa: E402
from .inference import ci_inversion, ci_wald  # noqa: E402
from .bandwidth import AsymptoticRegime, PowerLawBandwidth, check_conditions, optimal_exponents  # noqa: E402
from .estimators import ContinuousLevyKernelDensity, LevyKernelDensity  # noqa: E402

__all__ = [
    "__version__",
    "LevyKernelError", "DomainError", "CapabilityError", "NoDataError", "SimulationError", "ConfigError",
    "Bandwidth", "KernelSpec", "get_kernel",
    "LevyModel", "StableExample", "CompoundPoissonToy", "model_from_config",
    "SimulationScheme", "SamplePath", "JumpLog", "simulate_path",
    "estimate_discrete", "estimate_continuous", "ci_wald", "ci_inversion",
    "PowerLawBandwidth", "AsymptoticRegime", "check_conditions", "optimal_exponents",
    "LevyKernelDensity", "ContinuousLevyKernelDensity",
]
