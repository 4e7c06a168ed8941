from .config import RunConfig, parse_config  # noqa: F401
from .graph_ops import (  # noqa: F401
    log_determinant,
    perturbation_determinant,
    trace_resolvent_diff_formula,
)
from .jost import jost_boundary, jost_solution, regular_solution, wronskian  # noqa: F401
from .models import StarGraph  # noqa: F401
from .potentials import (  # noqa: F401
    Exponential,
    PiecewiseLinear,
    Sampled,
    SquareWell,
    ZeroPotential,
)
from .spectrum import classify_zero_energy, count_negative_eigenvalues  # noqa: F401
from .ssf import levinson_check, spectral_shift_curve  # noqa: F401
