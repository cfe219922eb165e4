"""Shared fixtures: random pipeline generators and the acceptance summary hook."""

import numpy as np
import pytest

from portflow.edge_dynamics import CoefficientField, EdgeSystem
from portflow.errors import LocallyUnsolvableError
from portflow.kirchhoff import assemble_global, build_vertex_condition, count_outgoing
from portflow.netgraph import build_graph

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_graph(rng):
    """Connected simple graph with 2..6 vertices and random orientations."""
    n = int(rng.integers(2, 7))
    edges = []
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.append((u, v) if rng.random() < 0.5 else (v, u))
    pairs = {tuple(sorted(e)) for e in edges}
    for _ in range(int(rng.integers(0, 3))):
        a, b = (int(x) for x in rng.integers(0, n, size=2))
        if a == b or tuple(sorted((a, b))) in pairs:
            continue
        e = (a, b) if rng.random() < 0.5 else (b, a)
        edges.append(e)
        pairs.add(tuple(sorted(e)))
    return build_graph(edges)


def random_edge_system(edge, alpha, rng, grid=16):
    """Constant-coefficient edge with the requested eigenvalue sign pattern."""
    if alpha == 2:
        lam_m = rng.uniform(0.3, 1.0)
        lam_p = lam_m + rng.uniform(0.3, 1.0)
    elif alpha == 0:
        lam_p = -rng.uniform(0.3, 1.0)
        lam_m = lam_p - rng.uniform(0.3, 1.0)
    else:
        lam_p = rng.uniform(0.3, 1.5)
        lam_m = -rng.uniform(0.3, 1.5)
    while True:
        f = rng.uniform(-1, 1, size=(2, 2))
        if abs(np.linalg.det(f)) > 0.3:
            break
    m = f @ np.diag([lam_p, lam_m]) @ np.linalg.inv(f)
    return EdgeSystem(edge, CoefficientField.constant(m), grid=grid)


def random_pipeline(rng, grid=16):
    """Random graph + systems + solvable random conditions + assembled flow matrix."""
    graph = random_graph(rng)
    alphas = [int(rng.integers(0, 3)) for _ in range(graph.m)]
    systems = {j: random_edge_system(j, alphas[j], rng, grid) for j in range(graph.m)}
    conditions = {}
    for v in range(graph.n):
        inc = graph.incidence(v)
        alpha = {e: systems[e].alpha for e in inc.edges}
        k_v = count_outgoing(inc, alpha)
        if k_v == 0:
            continue
        for _ in range(100):
            phi = rng.standard_normal((k_v, 2 * inc.degree))
            try:
                cond = build_vertex_condition(inc, systems, phi)
            except LocallyUnsolvableError:
                continue
            if cond.rcond > 1e-6:
                conditions[v] = cond
                break
        else:  # pragma: no cover - vanishingly unlikely
            raise RuntimeError("failed to draw a solvable condition")
    gfm = assemble_global(graph, systems, conditions)
    return graph, systems, conditions, gfm


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
