"""Sharp constants and explicit Bellman functions for the integral John--Nirenberg
inequality in L2-based BMO, continuous and dyadic."""

from .errors import (
    BellmanError,
    DomainError,
    NumericalError,
    ParameterError,
    PreconditionError,
    UnsupportedShapeError,
)
from .domain import BellmanPoint, ParabolicStrip, Sign, SplitResult
from .bellman import (
    BellmanDerivatives,
    bellman_derivatives,
    bellman_value,
    ode_residual,
    quadratic_form,
    w_profile,
)
from .constants import (
    EPS0_CONTINUOUS,
    EPS0_DYADIC,
    RootResult,
    c_continuous,
    c_dyadic,
    conjectured_nd,
    delta_root,
    g_function,
)

__version__ = "0.1.0"
