"""Driver-node selection for networks with saturated inputs.

Each candidate driver node gets an LQ feedback law; the contractively
invariant ellipsoid of the saturated loop is its guaranteed region of
attraction, and the node whose ellipsoid has the largest measure wins.
"""

from .care import RiccatiSolution, care_residual, solve_care
from .errors import RoaSelectError
from .kernel import SchurForm, lu_determinant, numerical_rank, real_schur, reorder_schur, solve_sylvester
from .network import (
    AnalysisConfig,
    NetworkSpec,
    input_matrix,
    is_controllable,
    load_document,
    parse_document,
    parse_network,
    serialize_network,
    validate_candidates,
)
from .roa import (
    DriverReport,
    EllipsoidRoa,
    boundary_points,
    contains,
    ellipsoid_measure,
    ellipsoid_radius,
    rank_drivers,
    rank_drivers_antistable,
    rank_drivers_general,
    unit_ball_volume,
)
from .sim import ControlLaw, simulate, verify_roa
from .split import SubsystemSplit, partition_input, split_spectrum, transform_state

__all__ = [
    "RiccatiSolution",
    "care_residual",
    "solve_care",
    "RoaSelectError",
    "SchurForm",
    "lu_determinant",
    "numerical_rank",
    "real_schur",
    "reorder_schur",
    "solve_sylvester",
    "AnalysisConfig",
    "NetworkSpec",
    "input_matrix",
    "is_controllable",
    "load_document",
    "parse_document",
    "parse_network",
    "serialize_network",
    "validate_candidates",
    "DriverReport",
    "EllipsoidRoa",
    "boundary_points",
    "contains",
    "ellipsoid_measure",
    "ellipsoid_radius",
    "rank_drivers",
    "rank_drivers_antistable",
    "rank_drivers_general",
    "unit_ball_volume",
    "ControlLaw",
    "simulate",
    "verify_roa",
    "SubsystemSplit",
    "partition_input",
    "split_spectrum",
    "transform_state",
]

__version__ = "0.1.0"
