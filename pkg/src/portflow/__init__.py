"""portflow: 2x2 linear hyperbolic systems on metric graphs.

Builds the network (netgraph), diagonalizes each edge into Riemann
invariants (edge_dynamics), resolves generalized Kirchhoff vertex
conditions into a global transfer matrix (kirchhoff), evolves the reduced
diagonal system by exact characteristic windows (flow_solver), and
cross-checks everything against the explicit resolvent (resolvent).
"""

from . import errors
from .edge_dynamics import CoefficientField, EdgeSystem, classify_edge, eigen_decompose
from .flow_solver import (
    LowerOrderCoupling,
    NetworkState,
    Speed,
    TravelTimeMap,
    evolve,
    lp_norm,
    propagate_small_time,
    state_from_functions,
    travel_time_map,
    weighted_c_norm,
)
from .kernels import BACKEND as kernel_backend
from .kirchhoff import (
    GlobalFlowMatrix,
    VertexCondition,
    arc_order,
    assemble_global,
    build_vertex_condition,
    classify_vertex,
    count_outgoing,
    outgoing_mask,
)
from .netgraph import MetricGraph, VertexIncidence, build_graph
from .resolvent import (
    ResolventWorkspace,
    boundary_vector,
    fd_residual,
    laplace_check,
    neumann_boundary_vector,
    resolvent_apply,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "CoefficientField",
    "EdgeSystem",
    "classify_edge",
    "eigen_decompose",
    "LowerOrderCoupling",
    "NetworkState",
    "Speed",
    "TravelTimeMap",
    "evolve",
    "lp_norm",
    "propagate_small_time",
    "state_from_functions",
    "travel_time_map",
    "weighted_c_norm",
    "kernel_backend",
    "GlobalFlowMatrix",
    "VertexCondition",
    "arc_order",
    "assemble_global",
    "build_vertex_condition",
    "classify_vertex",
    "count_outgoing",
    "outgoing_mask",
    "MetricGraph",
    "VertexIncidence",
    "build_graph",
    "ResolventWorkspace",
    "boundary_vector",
    "fd_residual",
    "laplace_check",
    "neumann_boundary_vector",
    "resolvent_apply",
    "__version__",
]
