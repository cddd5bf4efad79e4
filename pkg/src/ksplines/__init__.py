"""Geometric k-splines fitted to data on embedded manifolds by gradient flow."""

from .compatibility import CompatibilityReport, check_compatibility, compatibilize
from .complementary import build_roots, complementary_sweep, det_E_and_H
from .config import RunConfig, emit_config, load_config, parse_config
from .energy import EnergyReport, apriori_bounds_check, energy, z1_diagnostic
from .errors import (
    ConfigError,
    DegeneratePoint,
    FormulaMismatch,
    GeodesicFailure,
    InvalidP,
    KSplineError,
    ManifoldError,
    NotConverged,
    SingularSystem,
    StencilTooWide,
    StepRejected,
)
from .flow import FlowStepper, initialize_network, run_to_convergence, step
from .manifold import Euclidean, Manifold, Sphere, Torus, make_manifold
from .network import FlowParams, NetworkState
from .oracle import euclidean_stationary_solve, oracle_vs_flow

__version__ = "0.1.0"
