"""Sign-statistic estimation for fixed-design shape-restricted regression."""

from .core import (
    Design,
    FunctionOnDesign,
    MomentProfile,
    Observations,
    ell_s_loss,
    load_csv,
    sigma_p,
)
from .errors import (
    ContractError,
    RefusalError,
    SignRegError,
    SimulationError,
    StructuralError,
)

__version__ = "0.1.0"

__all__ = [
    "ContractError",
    "Design",
    "FunctionOnDesign",
    "MomentProfile",
    "Observations",
    "RefusalError",
    "SignRegError",
    "SimulationError",
    "StructuralError",
    "ell_s_loss",
    "load_csv",
    "sigma_p",
]
