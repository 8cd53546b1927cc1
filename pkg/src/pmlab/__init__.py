"""Feedback-communication laboratory built on posterior-matched transport maps."""

from .channels import (
    CapacityReport,
    DmcKernel,
    GaussianChannel,
    binary_entropy,
    bsc,
    capacity_dmc,
    capacity_gaussian,
    qsc,
)
from .errors import (
    BadInput,
    BadParam,
    BadPrior,
    DegenerateDensity,
    NoConvergence,
    NotPSD,
    OutOfDomain,
    PmLabError,
    ZeroLikelihood,
)
from .linalg import SymMatrix, jacobi_eigh
from .maps import (
    AffineMap,
    Box,
    ComposedMap1D,
    MonotoneMap1D,
    PiecewiseConstantDensity1D,
    TriangularMap,
    compose1d,
    invert1d,
)
from .codec import (
    DyadicMessage,
    bit_error_experiment,
    decode_bits,
    decode_box,
    encode_bits,
)
from .engine import (
    EnsembleResult,
    PmSession,
    PosteriorHandle,
    session_from_json,
    simulate_ensemble,
)
from .exactpm import Exact1DSystem
from .metrics import (
    EpsilonWindow,
    MixingReport,
    RateTrace,
    ergodicity_diagnostics,
    information_density_trace,
    prior_sensitivity,
    pulled_back_set,
    rate_sequence,
    rate_trace,
)
from .transport import (
    DiscretePhi,
    GaussianPhi,
    GridDensity,
    GridPhi,
    MEpsilonFamily,
    PmMapKit,
    brenier_gaussian,
    kr_gaussian,
    kr_grid,
    make_kit,
    phi_1d,
    s_cdf_1d,
    weighted_cost_schedule,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
