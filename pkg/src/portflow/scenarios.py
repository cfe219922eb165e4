"""Built-in scenario constructors mirroring the classic worked examples.

A Scenario bundles a graph, per-edge coefficient data, vertex condition
rows, initial profiles and a list of machine-checkable expected facts; it
compiles into the edge systems, vertex conditions and global flow matrix
ready for simulation, and exports losslessly to the CLI config format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .edge_dynamics import CoefficientField, EdgeSystem
from .errors import (
    BadCoefficientError,
    NotOrthogonalError,
    SubcriticalError,
    WrongDimensionsError,
)
from .flow_solver import LowerOrderCoupling, NetworkState, TravelTimeMap, travel_time_map
from .kirchhoff import (
    VertexCondition,
    assemble_global,
    build_vertex_condition,
    classify_vertex,
    count_outgoing,
)
from .netgraph import MetricGraph, build_graph
from .numerics import simpson_weights
from .resolvent import ResolventWorkspace


@dataclass(frozen=True)
class Profile:
    """Named initial-data profile on [0,1]; exportable to the config format."""

    kind: str = "zero"
    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0
    value: float = 0.0
    center: float = 0.5
    width: float = 0.1
    values: tuple = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "constant":
            return np.full_like(x, self.value)
        if self.kind == "sin":
            return self.amplitude * np.sin(self.frequency * math.pi * x + self.phase)
        if self.kind == "cos":
            return self.amplitude * np.cos(self.frequency * math.pi * x + self.phase)
        if self.kind == "bump":
            return self.amplitude * np.exp(-(((x - self.center) / self.width) ** 2))
        if self.kind == "samples":
            vals = np.asarray(self.values, dtype=float)
            return np.interp(x, np.linspace(0.0, 1.0, vals.size), vals)
        raise ValueError(f"unknown profile kind {self.kind!r}")

    def to_config(self) -> dict:
        d = {"kind": self.kind}
        if self.kind in ("sin", "cos"):
            d.update(amplitude=self.amplitude, frequency=self.frequency, phase=self.phase)
        elif self.kind == "constant":
            d.update(value=self.value)
        elif self.kind == "bump":
            d.update(amplitude=self.amplitude, center=self.center, width=self.width)
        elif self.kind == "samples":
            d.update(values=list(self.values))
        return d

    @classmethod
    def from_config(cls, d: Mapping) -> "Profile":
        d = dict(d)
        kind = d.pop("kind", "zero")
        if "values" in d:
            d["values"] = tuple(d["values"])
        return cls(kind=kind, **d)


@dataclass
class EdgeSpec:
    """Per-edge coefficient data before grid sampling."""

    m_field: CoefficientField
    n_field: CoefficientField | None = None
    explicit_basis: np.ndarray | None = None

    def build(self, edge: int, grid: int) -> EdgeSystem:
        return EdgeSystem(
            edge,
            self.m_field,
            self.n_field,
            grid=grid,
            explicit_basis=self.explicit_basis,
        )


@dataclass
class Fact:
    """Machine-checkable assertion about a compiled scenario."""

    kind: str
    expected: object
    target: object = None
    provenance: str = ""

    def check(self, compiled: "CompiledScenario") -> tuple[bool, str]:
        kind = self.kind
        if kind == "vertex_class":
            actual = compiled.vertex_class(self.target)
            return actual == self.expected, f"vertex {self.target} class {actual}"
        if kind == "k_v":
            inc = compiled.gfm.graph.incidence(self.target)
            alpha = {e: compiled.systems[e].alpha for e in inc.edges}
            actual = count_outgoing(inc, alpha)
            return actual == self.expected, f"k_v({self.target}) = {actual}"
        if kind == "k_total":
            g = compiled.gfm.graph
            total = sum(
                count_outgoing(
                    g.incidence(v), {e: compiled.systems[e].alpha for e in g.incidence(v).edges}
                )
                for v in range(g.n)
            )
            return total == self.expected, f"sum k_v = {total}"
        if kind == "alpha":
            actual = compiled.systems[self.target].alpha
            return actual == self.expected, f"alpha({self.target}) = {actual}"
        if kind == "b_matrix":
            actual = compiled.gfm.b
            ok = np.allclose(actual, np.asarray(self.expected), atol=1e-12)
            return ok, f"B = {actual.tolist()}"
        if kind == "xi_out_invertible":
            ok = compiled.gfm.rcond >= 1e-12
            return ok == self.expected, f"rcond(xi_out) = {compiled.gfm.rcond:.3e}"
        if kind == "identity_block":
            v, cols = self.target
            block = compiled.conditions[v].phi[:, cols]
            ok = np.array_equal(block, np.eye(block.shape[0]))
            return ok == self.expected, f"vertex {v} outgoing-column block identity: {ok}"
        if kind == "resolvent_singular_at":
            bad = [lam for lam in self.expected if compiled.resolvent(lam).solvable]
            return not bad, f"unexpectedly solvable at {bad}" if bad else "singular as expected"
        if kind == "resolvent_solvable_at":
            bad = [lam for lam in self.expected if not compiled.resolvent(lam).solvable]
            return not bad, f"unexpectedly singular at {bad}" if bad else "solvable as expected"
        if kind == "case_label":
            actual = compiled.gfm.case_label()
            return actual == self.expected, f"case {actual}"
        raise ValueError(f"unknown fact kind {kind!r}")


@dataclass
class Scenario:
    """A named, self-validating problem setup."""

    name: str
    graph: MetricGraph
    edge_specs: list[EdgeSpec]
    phi: dict[int, np.ndarray]
    initial: dict[int, tuple[Profile, Profile]]
    facts: list[Fact] = field(default_factory=list)
    grid: int = 128
    t_end: float = 2.0
    output_times: tuple[float, ...] = ()
    lambdas: tuple[float, ...] = (1.0,)
    lower_order: bool = False


class CompiledScenario:
    """Scenario materialized on a grid: systems, conditions, transfer matrix."""

    def __init__(self, scenario: Scenario, grid: int, on_unsolvable: str = "warn"):
        self.scenario = scenario
        self.grid = int(grid)
        self.systems = {
            e: spec.build(e, self.grid) for e, spec in enumerate(scenario.edge_specs)
        }
        self.conditions: dict[int, VertexCondition] = {}
        for v in range(scenario.graph.n):
            inc = scenario.graph.incidence(v)
            alpha = {e: self.systems[e].alpha for e in inc.edges}
            if count_outgoing(inc, alpha) == 0:
                continue
            self.conditions[v] = build_vertex_condition(
                inc, self.systems, scenario.phi[v], on_unsolvable=on_unsolvable
            )
        self.gfm = assemble_global(scenario.graph, self.systems, self.conditions)
        self._ttm: TravelTimeMap | None = None

    @property
    def ttm(self) -> TravelTimeMap:
        if self._ttm is None:
            self._ttm = travel_time_map(self.gfm.speeds, self.grid)
        return self._ttm

    def coupling(self) -> LowerOrderCoupling | None:
        return self.gfm.coupling()

    def initial_state(self) -> NetworkState:
        profiles = {e: self.scenario.initial[e] for e in self.systems}
        return self.gfm.initial_state(profiles, self.grid)

    def resolvent(self, lam: float) -> ResolventWorkspace:
        return ResolventWorkspace(lam, self.gfm.b, self.ttm, self.gfm.n_plus)

    def vertex_class(self, v: int) -> str:
        inc = self.scenario.graph.incidence(v)
        alpha = {e: self.systems[e].alpha for e in inc.edges}
        return classify_vertex(inc, alpha)

    def energy(self, state: NetworkState) -> float:
        """0.5 * sum_e int (p1^2 + p2^2) dx over the physical edge fields."""
        w = simpson_weights(self.grid, 1.0 / self.grid)
        fields = self.gfm.edge_fields(state)
        return 0.5 * float(sum((p**2).sum(axis=0) @ w for p in fields.values()))

    def mass(self, state: NetworkState) -> float:
        """sum_e int p1 dx, the conserved total for density-flux systems."""
        w = simpson_weights(self.grid, 1.0 / self.grid)
        fields = self.gfm.edge_fields(state)
        return float(sum(p[0] @ w for p in fields.values()))

    def check_facts(self) -> list[tuple[Fact, bool, str]]:
        return [(f, *f.check(self)) for f in self.scenario.facts]


def compile_scenario(sc: Scenario, grid: int | None = None, on_unsolvable: str = "warn") -> CompiledScenario:
    return CompiledScenario(sc, sc.grid if grid is None else grid, on_unsolvable)


# -- edge fragments ----------------------------------------------------------


def telegraph_edge(k_coef: float, l_coef: float, paper_basis: bool = False) -> EdgeSpec:
    """Lossless-line edge dt p1 + K dx p2 = 0, dt p2 + L dx p1 = 0 (speeds +-sqrt(LK))."""
    if k_coef <= 0 or l_coef <= 0:
        raise BadCoefficientError("telegraph coefficients must be positive")
    m = CoefficientField.constant([[0.0, k_coef], [l_coef, 0.0]])
    basis = None
    if paper_basis:
        s = math.sqrt(l_coef * k_coef)
        basis = np.array([[k_coef, k_coef], [s, -s]])
    return EdgeSpec(m_field=m, explicit_basis=basis)


def random_walk_edge(gamma: float, switch_rate: float) -> EdgeSpec:
    """Correlated random walk in density/net-current variables.

    Principal part matches telegraph_edge(gamma, gamma); the direction
    reversal enters through the lower-order matrix diag(0, 2*rate).
    """
    if gamma <= 0:
        raise BadCoefficientError("random walk speed gamma must be positive")
    if switch_rate < 0:
        raise BadCoefficientError("switch rate must be nonnegative")
    m = CoefficientField.constant([[0.0, gamma], [gamma, 0.0]])
    n = CoefficientField.constant([[0.0, 0.0], [0.0, 2.0 * switch_rate]])
    return EdgeSpec(m_field=m, n_field=n)


def wave_edge() -> EdgeSpec:
    """Single telegraph edge written as dt p1 = dx p2, dt p2 = dx p1 (speeds +-1)."""
    return EdgeSpec(m_field=CoefficientField.constant([[0.0, -1.0], [-1.0, 0.0]]))


# -- full scenarios -----------------------------------------------------------


def telegraph_dirichlet() -> Scenario:
    """One wave edge with p1 clamped at both ends (Dirichlet wave equation)."""
    graph = build_graph([(0, 1)])
    phi = {0: np.array([[1.0, 0.0]]), 1: np.array([[1.0, 0.0]])}
    facts = [
        Fact("alpha", 1, 0, "one positive and one negative speed"),
        Fact("k_v", 1, 0, "one outgoing trace per endpoint"),
        Fact("k_v", 1, 1, ""),
        Fact("b_matrix", [[0.0, -1.0], [-1.0, 0.0]], provenance="clamped ends reflect with sign flip"),
        Fact("resolvent_singular_at", [0.0], provenance="constants are stationary under clamped ends"),
        Fact("resolvent_solvable_at", [1.0, -1.0, 0.1, -0.1], provenance="group on the line"),
    ]
    return Scenario(
        name="telegraph_dirichlet",
        graph=graph,
        edge_specs=[wave_edge()],
        phi=phi,
        initial={0: (Profile("sin"), Profile("zero"))},
        facts=facts,
        grid=256,
        t_end=2.0,
        output_times=(0.5, 1.0, 1.5, 2.0),
        lambdas=(-1.0, 0.0, 1.0),
    )


def telegraph_mixed() -> Scenario:
    """One wave edge with p1 clamped at x=0 and p2 clamped at x=1."""
    graph = build_graph([(0, 1)])
    phi = {0: np.array([[1.0, 0.0]]), 1: np.array([[0.0, 1.0]])}
    facts = [
        Fact("b_matrix", [[0.0, -1.0], [1.0, 0.0]], provenance="mixed clamping"),
        Fact("resolvent_solvable_at", [0.0, 1.0, -1.0], provenance="0 is not an eigenvalue"),
    ]
    return Scenario(
        name="telegraph_mixed",
        graph=graph,
        edge_specs=[wave_edge()],
        phi=phi,
        initial={0: (Profile("sin"), Profile("zero"))},
        facts=facts,
        grid=256,
        t_end=2.0,
        output_times=(0.5, 1.0, 1.5, 2.0),
        lambdas=(0.0, 1.0),
    )


def absorbing_edge() -> Scenario:
    """One wave edge whose incoming characteristics are set to zero (B = 0)."""
    graph = build_graph([(0, 1)])
    # rows of F^-1 select single Riemann components: u1(0) = 0 and u2(1) = 0
    s = 1.0 / math.sqrt(2.0)
    phi = {0: np.array([[s, -s]]), 1: np.array([[s, s]])}
    facts = [
        Fact("b_matrix", [[0.0, 0.0], [0.0, 0.0]], provenance="absorbing ends"),
        Fact("resolvent_solvable_at", [0.0, 1.0, 5.0], provenance="no feedback loop"),
    ]
    return Scenario(
        name="absorbing_edge",
        graph=graph,
        edge_specs=[wave_edge()],
        phi=phi,
        initial={0: (Profile("bump", amplitude=1.0, center=0.5, width=0.12), Profile("zero"))},
        facts=facts,
        grid=256,
        t_end=1.5,
        output_times=(0.5, 1.0, 1.5),
        lambdas=(1.0, 5.0),
    )


def saint_venant_star(
    n_edges: int,
    velocity: float,
    depth: float,
    gravity: float,
    inflow_rows: np.ndarray | None = None,
) -> Scenario:
    """Supercritical channel star: one inflow edge feeding n_edges - 1 branches.

    Edge 0 runs from the inflow vertex into the junction; every branch leaves
    the junction. All speeds point downstream (both eigenvalues positive), so
    branch ends are sinks, the inflow vertex is a source needing two
    conditions, and the junction needs 2*n_edges - 2.
    """
    if n_edges < 2:
        raise BadCoefficientError("a star needs at least 2 edges")
    if depth <= 0 or gravity <= 0:
        raise BadCoefficientError("depth and gravity must be positive")
    froude = velocity / math.sqrt(gravity * depth)
    if froude <= 1.0:
        raise SubcriticalError(
            f"Froude number {froude:.3f} <= 1; this builder covers the supercritical regime"
        )
    c = math.sqrt(gravity * depth)
    m = CoefficientField.constant([[velocity, depth], [gravity, velocity]])
    basis = np.array([[depth, depth], [c, -c]])
    spec = EdgeSpec(m_field=m, explicit_basis=basis)

    edges = [(0, 1)] + [(1, i + 2) for i in range(n_edges - 1)]
    graph = build_graph(edges)

    if inflow_rows is None:
        inflow_rows = np.eye(2)
    inflow_rows = np.asarray(inflow_rows, dtype=float)

    k_junction = 2 * n_edges - 2
    phi_junction = np.zeros((k_junction, 2 * n_edges))
    for j in range(1, n_edges):
        phi_junction[2 * (j - 1), 0] = -1.0
        phi_junction[2 * (j - 1), 2 * j] = 1.0
        phi_junction[2 * (j - 1) + 1, 1] = -1.0
        phi_junction[2 * (j - 1) + 1, 2 * j + 1] = 1.0

    phi = {0: inflow_rows, 1: phi_junction}
    initial = {e: (Profile("bump", amplitude=0.2, width=0.15), Profile("zero")) for e in range(n_edges)}
    branch_cols = list(range(2, 2 * n_edges))
    facts = [
        Fact("vertex_class", "source", 0, "all characteristics leave the inflow vertex"),
        Fact("vertex_class", "transient", 1, ""),
        Fact("k_v", 2, 0, "two conditions at the inflow"),
        Fact("k_v", k_junction, 1, "2N-2 conditions at the junction"),
        Fact("k_total", 2 * n_edges, provenance="outgoing counts always sum to 2m"),
        Fact("xi_out_invertible", True, provenance="continuity junction is solvable"),
        Fact("identity_block", True, (1, branch_cols), "junction rows restricted to branch columns"),
    ]
    for i in range(n_edges - 1):
        facts.append(Fact("vertex_class", "sink", i + 2, "branch ends absorb everything"))
        facts.append(Fact("k_v", 0, i + 2, ""))
    return Scenario(
        name="saint_venant_star",
        graph=graph,
        edge_specs=[spec] * n_edges,
        phi=phi,
        initial=initial,
        facts=facts,
        grid=128,
        t_end=1.0,
        output_times=(0.5, 1.0),
        lambdas=(1.0,),
    )


def random_walk_chain(gamma: float = 1.0, switch_rate: float = 1.0) -> Scenario:
    """Two random-walk edges joined conservatively, reflecting outer ends.

    Zero net current at the outer ends plus continuity of density and
    current at the junction conserve the total mass int p1 dx.
    """
    graph = build_graph([(0, 1), (1, 2)])
    spec = random_walk_edge(gamma, switch_rate)
    phi = {
        0: np.array([[0.0, 1.0]]),
        1: np.array([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]]),
        2: np.array([[0.0, 1.0]]),
    }
    facts = [
        Fact("alpha", 1, 0, ""),
        Fact("alpha", 1, 1, ""),
        Fact("k_v", 1, 0, ""),
        Fact("k_v", 2, 1, ""),
        Fact("k_v", 1, 2, ""),
        Fact("xi_out_invertible", True, provenance="junction continuity is solvable"),
    ]
    initial = {
        0: (Profile("bump", amplitude=1.0, center=0.4, width=0.15), Profile("zero")),
        1: (Profile("bump", amplitude=0.5, center=0.6, width=0.2), Profile("zero")),
    }
    return Scenario(
        name="random_walk_chain",
        graph=graph,
        edge_specs=[spec, spec],
        phi=phi,
        initial=initial,
        facts=facts,
        grid=256,
        t_end=4.0,
        output_times=(1.0, 2.0, 3.0, 4.0),
        lambdas=(1.0,),
        lower_order=True,
    )


# -- trace-space conditions from orthogonal splittings -------------------------


def nicaise_conditions(nu: Sequence[int], x_basis, xperp_basis) -> np.ndarray:
    """Condition rows from an orthogonal splitting of the vertex trace space.

    x_basis rows span the subspace X containing the p1 traces; xperp_basis
    rows span its orthogonal complement. The emitted rows clamp p1 against
    the complement and the sign-weighted p2 traces against X.
    """
    nu = np.asarray(nu, dtype=float)
    d = nu.size
    xb = np.asarray(x_basis, dtype=float).reshape(-1, d) if np.size(x_basis) else np.zeros((0, d))
    xp = (
        np.asarray(xperp_basis, dtype=float).reshape(-1, d)
        if np.size(xperp_basis)
        else np.zeros((0, d))
    )
    if xb.shape[0] + xp.shape[0] != d:
        raise WrongDimensionsError(
            f"subspace dimensions {xb.shape[0]} + {xp.shape[0]} != vertex degree {d}"
        )
    if xb.size and xp.size:
        gram = xb @ xp.T
        scale = max(np.max(np.abs(xb)), 1.0) * max(np.max(np.abs(xp)), 1.0)
        if np.max(np.abs(gram)) > 1e-10 * scale:
            raise NotOrthogonalError("the two bases are not mutually orthogonal")
    rows = np.zeros((d, 2 * d))
    r = 0
    for vec in xp:  # p1 traces orthogonal to the complement
        rows[r, 0::2] = vec
        r += 1
    for vec in xb:  # sign-weighted p2 traces orthogonal to X
        rows[r, 1::2] = nu * vec
        r += 1
    return rows


def dirichlet_p2_row() -> np.ndarray:
    """Single-edge vertex recipe clamping p2."""
    return np.array([[0.0, 1.0]])


def dissipative_row(alpha: float, nu: int) -> np.ndarray:
    """Single-edge vertex recipe p1 = alpha * nu * p2 with alpha >= 0."""
    if alpha < 0:
        raise BadCoefficientError("dissipation coefficient must be nonnegative")
    return np.array([[1.0, -alpha * float(nu)]])


# -- KMN vs Kirchhoff flux comparison ------------------------------------------


@dataclass
class KmnComparison:
    coincide: bool
    kirchhoff_row: np.ndarray
    isotropic_row: np.ndarray
    products: np.ndarray


def compare_kmn_kirchhoff(ks: Sequence[float], ls: Sequence[float], nu: Sequence[int] | None = None) -> KmnComparison:
    """Compare the plain flux balance with the isotropic-form flux at one vertex.

    Within the continuity subspace (all p1 traces equal) the two conditions
    reduce to the linear functionals sum_j nu_j p2_j and sum_j nu_j K_j L_j p2_j
    on the p2 traces; their kernels coincide exactly when the products K_j L_j
    agree across the incident edges.
    """
    ks = np.asarray(ks, dtype=float)
    ls = np.asarray(ls, dtype=float)
    if ks.shape != ls.shape or ks.ndim != 1 or ks.size == 0:
        raise WrongDimensionsError("need matching nonempty coefficient lists")
    if np.any(ks <= 0) or np.any(ls <= 0):
        raise BadCoefficientError("telegraph coefficients must be positive")
    if nu is None:
        nu = np.array([1.0] + [-1.0] * (ks.size - 1))
    else:
        nu = np.asarray(nu, dtype=float)
        if nu.shape != ks.shape:
            raise WrongDimensionsError("orientation signs must match the edge count")
    row1 = nu.copy()
    row2 = nu * ks * ls
    if ks.size == 1:
        coincide = True  # two multiples of the same single coordinate
    else:
        svals = np.linalg.svd(np.vstack([row1, row2]), compute_uv=False)
        coincide = bool(svals[1] <= 1e-10 * svals[0])
    return KmnComparison(coincide, row1, row2, ks * ls)


BUILTIN_SCENARIOS: dict[str, Callable[[], Scenario]] = {
    "telegraph_dirichlet": telegraph_dirichlet,
    "telegraph_mixed": telegraph_mixed,
    "absorbing_edge": absorbing_edge,
    "saint_venant_star": lambda: saint_venant_star(3, 2.0, 1.0, 1.0),
    "random_walk_chain": random_walk_chain,
}
