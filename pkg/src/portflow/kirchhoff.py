"""Generalized Kirchhoff vertex conditions and the global flow matrix.

A vertex condition is a k_v x 2|J_v| coefficient matrix Phi acting on the
stacked endpoint values (p1, p2) of the incident edges, column-ordered by
ascending edge id. Splitting the Riemann traces into outgoing and incoming
families turns Phi into the pair (Phi F_out, Phi F_in); local solvability
means Phi F_out is nonsingular, and the resolution matrix sends incoming
traces to outgoing ones.

Globally, the per-vertex blocks are permuted into arc order. Arcs list the
rightward transport unknowns first (component 1 of edges with at least one
positive eigenvalue, then component 2 of edges with two), then the leftward
ones; this fixes every matrix layout deterministically. The stored xi_in
already carries the incoming block moved to the right-hand side, so
b = xi_out^-1 xi_in maps incoming traces (right family at 1, left at 0)
to outgoing ones (right at 0, left at 1).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .edge_dynamics import EdgeSystem
from .errors import (
    CountMismatchError,
    GloballyUnsolvableError,
    LocallyUnsolvableError,
    WrongRowCountError,
)
from .flow_solver import LowerOrderCoupling, NetworkState, Speed
from .netgraph import MetricGraph, VertexIncidence
from .numerics import equilibrated_rcond, lu_rcond

RCOND_THRESHOLD = 1e-12

SINK = "sink"
SOURCE = "source"
TRANSIENT = "transient"


def _is_outgoing(endpoint: int, comp: int, alpha: int) -> bool:
    """Outgoing-trace rule: positive-speed components leave through the tail,
    negative-speed ones through the head."""
    positive = alpha >= 1 if comp == 0 else alpha == 2
    return positive if endpoint == 0 else not positive


def classify_vertex(inc: VertexIncidence, alpha: Mapping[int, int]) -> str:
    """Sink, source or transient, from the incident eigenvalue sign patterns."""
    sink = all(
        (alpha[e] == 2 and l == 1) or (alpha[e] == 0 and l == 0)
        for e, l in zip(inc.edges, inc.endpoint)
    )
    if sink:
        return SINK
    source = all(
        (alpha[e] == 0 and l == 1) or (alpha[e] == 2 and l == 0)
        for e, l in zip(inc.edges, inc.endpoint)
    )
    return SOURCE if source else TRANSIENT


def count_outgoing(inc: VertexIncidence, alpha: Mapping[int, int]) -> int:
    """Number of outgoing Riemann traces k_v = sum_j (2(1-alpha_j) l_j + alpha_j)."""
    return sum(2 * (1 - alpha[e]) * l + alpha[e] for e, l in zip(inc.edges, inc.endpoint))


def outgoing_mask(inc: VertexIncidence, alpha: Mapping[int, int]) -> list[tuple[int, int]]:
    """Outgoing (edge, component) pairs in local column order (edges ascending,
    component 0 then 1)."""
    out = []
    for e, l in zip(inc.edges, inc.endpoint):
        for comp in (0, 1):
            if _is_outgoing(l, comp, alpha[e]):
                out.append((e, comp))
    return out


@dataclass
class VertexCondition:
    """One vertex's boundary block and its outgoing/incoming split."""

    vertex: int
    k_v: int
    vclass: str
    phi: np.ndarray
    psi: np.ndarray
    f_out: np.ndarray
    f_in: np.ndarray
    psi_out: np.ndarray
    psi_in: np.ndarray
    out_traces: list[tuple[int, int]]
    in_traces: list[tuple[int, int]]
    solvable: bool
    rcond: float
    rcond_equilibrated: float
    resolution: np.ndarray | None


def build_vertex_condition(
    inc: VertexIncidence,
    systems: Mapping[int, EdgeSystem],
    phi,
    rcond_threshold: float = RCOND_THRESHOLD,
    on_unsolvable: str = "raise",
) -> VertexCondition:
    """Assemble and (attempt to) resolve the condition at one vertex.

    phi must have exactly k_v rows and 2|J_v| columns. With on_unsolvable
    set to "warn" a singular Phi F_out is reported but the condition is
    still returned, leaving the verdict to the global assembly.
    """
    alpha = {e: systems[e].alpha for e in inc.edges}
    k_v = count_outgoing(inc, alpha)
    d = inc.degree
    phi = np.asarray(phi, dtype=float)
    if phi.size == 0:
        phi = phi.reshape(0, 2 * d)
    phi = np.atleast_2d(phi)
    if phi.shape != (k_v, 2 * d):
        raise WrongRowCountError(
            f"vertex {inc.vertex}: expected a {k_v} x {2 * d} condition matrix, "
            f"got shape {phi.shape}"
        )

    fv = np.zeros((2 * d, 2 * d))
    for i, (e, l) in enumerate(zip(inc.edges, inc.endpoint)):
        node = 0 if l == 0 else systems[e].grid
        fv[2 * i: 2 * i + 2, 2 * i: 2 * i + 2] = systems[e].basis[node]
    psi = phi @ fv

    out_traces = []
    in_traces = []
    out_cols = []
    in_cols = []
    for i, (e, l) in enumerate(zip(inc.edges, inc.endpoint)):
        for comp in (0, 1):
            col = 2 * i + comp
            if _is_outgoing(l, comp, alpha[e]):
                out_traces.append((e, comp))
                out_cols.append(col)
            else:
                in_traces.append((e, comp))
                in_cols.append(col)
    f_out = fv[:, out_cols]
    f_in = fv[:, in_cols]
    psi_out = phi @ f_out
    psi_in = phi @ f_in

    if k_v == 0:
        solvable, rcond, rcond_eq = True, 1.0, 1.0
        resolution = np.zeros((0, len(in_cols)))
    else:
        factors, rcond = lu_rcond(psi_out)
        rcond_eq = equilibrated_rcond(psi_out)
        solvable = rcond >= rcond_threshold
        if solvable:
            resolution = -scipy.linalg.lu_solve(factors, psi_in)
        else:
            resolution = None
            msg = (
                f"vertex {inc.vertex}: Phi F_out is singular to working precision "
                f"(rcond {rcond:.3e}, row-equilibrated {rcond_eq:.3e})"
            )
            if on_unsolvable == "raise":
                raise LocallyUnsolvableError(msg)
            warnings.warn(msg + "; deferring to global solvability", stacklevel=2)

    return VertexCondition(
        vertex=inc.vertex,
        k_v=k_v,
        vclass=classify_vertex(inc, alpha),
        phi=phi,
        psi=psi,
        f_out=f_out,
        f_in=f_in,
        psi_out=psi_out,
        psi_in=psi_in,
        out_traces=out_traces,
        in_traces=in_traces,
        solvable=solvable,
        rcond=rcond,
        rcond_equilibrated=rcond_eq,
        resolution=resolution,
    )


def arc_order(alphas: Sequence[int]) -> tuple[list[tuple[int, int]], int]:
    """Deterministic arc numbering: rightward family first.

    Returns (arcs, n_plus) where arcs[i] = (edge, component) and the first
    n_plus arcs carry positive speeds.
    """
    m = len(alphas)
    plus = [(j, 0) for j in range(m) if alphas[j] >= 1]
    plus += [(j, 1) for j in range(m) if alphas[j] == 2]
    minus = [(j, 0) for j in range(m) if alphas[j] == 0]
    minus += [(j, 1) for j in range(m) if alphas[j] <= 1]
    return plus + minus, len(plus)


class GlobalFlowMatrix:
    """Arc-ordered boundary system xi_out (out traces) = xi_in (in traces).

    Attributes:
        arcs: (edge, component) per global arc index, rightward family first.
        n_plus: size of the rightward family.
        xi_out, xi_in: 2m x 2m blocks in arc column order; xi_in holds the
            incoming coefficients already moved to the right-hand side.
        b: transfer matrix xi_out^-1 xi_in.
        speeds: per-arc Speed fields (absolute eigenvalues).
    """

    def __init__(self, graph, systems, arcs, n_plus, xi_out, xi_in, b, rcond, row_vertices):
        self.graph = graph
        self.systems = dict(systems)
        self.arcs = arcs
        self.n_plus = n_plus
        self.xi_out = xi_out
        self.xi_in = xi_in
        self.b = b
        self.rcond = rcond
        self.row_vertices = row_vertices
        self.arc_index = {trace: i for i, trace in enumerate(arcs)}
        self.speeds = tuple(self._speed(e, comp) for e, comp in arcs)

    def _speed(self, edge: int, comp: int) -> Speed:
        sys = self.systems[edge]
        vals = sys.speed_values(comp)
        if sys.is_constant:
            return Speed.constant(float(vals[0]))
        return Speed.sampled(vals)

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)

    def column_sums(self) -> tuple[np.ndarray, np.ndarray]:
        """Block column sums (b^11+b^21 over the rightward columns,
        b^12+b^22 over the leftward ones)."""
        totals = self.b.sum(axis=0)
        return totals[: self.n_plus].copy(), totals[self.n_plus:].copy()

    def case_label(self, tol: float = 1e-12) -> str:
        """Contraction-case classification of a nonnegative transfer matrix."""
        if np.min(self.b) < -tol:
            return "mixed-sign"
        s_plus, s_minus = self.column_sums()
        sums = np.concatenate([s_plus, s_minus])
        if np.all(sums <= 1.0 + tol):
            return "case-1"
        if np.all(sums >= 1.0 - tol):
            return "case-2"
        return "case-3"

    def coupling(self) -> LowerOrderCoupling | None:
        """Lower-order relaxation pairs for edges with a nonzero transformed N."""
        pairs = []
        for e in sorted(self.systems):
            sys = self.systems[e]
            if not sys.has_lower_order:
                continue
            nbar = sys.nbar_nodes()
            if not np.any(np.abs(nbar) > 0.0):
                continue
            pairs.append((self.arc_index[(e, 0)], self.arc_index[(e, 1)], nbar))
        return LowerOrderCoupling(pairs) if pairs else None

    def initial_state(self, p_profiles, grid: int, t: float = 0.0) -> NetworkState:
        """Sample per-edge (p1, p2) callables and transform to arc samples."""
        xs = np.linspace(0.0, 1.0, grid + 1)
        values = np.zeros((self.n_arcs, grid + 1))
        for e in sorted(self.systems):
            sys = self.systems[e]
            if sys.grid != grid:
                raise ValueError("edge system grid does not match the requested grid")
            p1f, p2f = p_profiles[e]
            p = np.stack([
                np.broadcast_to(np.asarray(p1f(xs), dtype=float), xs.shape),
                np.broadcast_to(np.asarray(p2f(xs), dtype=float), xs.shape),
            ])
            u = sys.riemann_transform(p)
            values[self.arc_index[(e, 0)]] = u[0]
            values[self.arc_index[(e, 1)]] = u[1]
        return NetworkState(t, values, self.n_plus)

    def edge_fields(self, state: NetworkState) -> dict[int, np.ndarray]:
        """Back-transform arc samples to per-edge (2, G+1) physical fields."""
        out = {}
        for e in sorted(self.systems):
            sys = self.systems[e]
            u = np.stack([
                state.values[self.arc_index[(e, 0)]],
                state.values[self.arc_index[(e, 1)]],
            ])
            out[e] = sys.inverse_transform(u)
        return out

    def arc_label(self, a: int) -> str:
        e, comp = self.arcs[a]
        direction = "+" if a < self.n_plus else "-"
        return f"e{e}:u{comp + 1}{direction}"


def assemble_global(
    graph: MetricGraph,
    systems: Mapping[int, EdgeSystem],
    conditions: Mapping[int, VertexCondition],
    rcond_threshold: float = RCOND_THRESHOLD,
) -> GlobalFlowMatrix:
    """Permute the vertex blocks into arc order and solve for the transfer matrix.

    conditions maps every non-sink vertex to its VertexCondition; sinks carry
    no rows and need no entry. Raises GloballyUnsolvableError when xi_out is
    singular to the configured threshold.
    """
    alphas = [systems[j].alpha for j in range(graph.m)]
    arcs, n_plus = arc_order(alphas)
    two_m = 2 * graph.m
    arc_index = {trace: i for i, trace in enumerate(arcs)}

    total_k = 0
    row_vertices = []
    for v in range(graph.n):
        inc = graph.incidence(v)
        alpha_v = {e: systems[e].alpha for e in inc.edges}
        k_v = count_outgoing(inc, alpha_v)
        total_k += k_v
        if k_v == 0:
            continue
        if v not in conditions:
            raise WrongRowCountError(f"vertex {v} needs {k_v} condition rows, none supplied")
        cond = conditions[v]
        if cond.k_v != k_v or cond.vertex != v:
            raise WrongRowCountError(f"condition for vertex {v} does not match its incidence")
        row_vertices.append(v)
    if total_k != two_m:
        raise CountMismatchError(
            f"sum of outgoing counts {total_k} != 2m = {two_m}; "
            "this indicates an internal bookkeeping bug"
        )
    for v, cond in conditions.items():
        if cond.k_v == 0:
            continue
        if v not in row_vertices:
            raise WrongRowCountError(f"condition supplied for vertex {v} with k_v = 0")

    xi_out = np.zeros((two_m, two_m))
    xi_in = np.zeros((two_m, two_m))
    row = 0
    for v in row_vertices:
        cond = conditions[v]
        rows = slice(row, row + cond.k_v)
        for s, trace in enumerate(cond.out_traces):
            xi_out[rows, arc_index[trace]] = cond.psi_out[:, s]
        for s, trace in enumerate(cond.in_traces):
            # move the incoming block to the right-hand side
            xi_in[rows, arc_index[trace]] = -cond.psi_in[:, s]
        row += cond.k_v

    factors, rcond = lu_rcond(xi_out)
    if rcond < rcond_threshold:
        raise GloballyUnsolvableError(
            f"xi_out is singular to working precision (rcond {rcond:.3e})"
        )
    b = scipy.linalg.lu_solve(factors, xi_in)
    return GlobalFlowMatrix(graph, systems, arcs, n_plus, xi_out, xi_in, b, rcond, row_vertices)
