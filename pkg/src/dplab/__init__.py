"""Solvable models for Schroedinger operators with squeezed potentials
alpha/eps^2 Phi(x/eps) + beta/eps Psi(x/eps)."""

from .errors import (
    DegenerateDenominator,
    IllConditioned,
    NotConverged,
    NotResonant,
    NumericalError,
    SingularAlpha,
    StepUnderflow,
    ZeroShape,
)
from .ode_core import FundamentalPair, SolverSettings, fundamental_pair, integrate_ivp, transfer_matrix
from .potential import (
    LimitClass,
    MomentReport,
    PiecewisePolynomial,
    ShapePotential,
    evaluate,
    load_shape,
    moments,
    save_shape,
    squeezed_value,
)
from .resolvent_lab import (
    LimitOperator,
    ResolventProbe,
    resolvent_error,
    solve_eps_resolvent,
    solve_limit_resolvent,
)
from .resonance import (
    ResonanceRecord,
    ResonantSet,
    coupling_matrix,
    kurasov_matrix,
    resonance_record,
    scan_resonances,
    shooting_residual,
)
from .scattering import (
    LimitScattering,
    ScatteringData,
    scatter_finite,
    scatter_limit,
    scattering_convergence,
    sweep_alpha,
    transmission_probability,
)

__version__ = "0.1.0"
