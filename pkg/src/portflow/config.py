"""Config ingestion and export for CLI runs.

The on-disk format is a single TOML document. Normative sections and keys:

    [graph]            edges = [[tail, head], ...]
    [[edge]]           id, m | m_samples, n | n_samples (optional),
                       basis (optional, row-major 2x2),
                       initial_p1 / initial_p2 sub-tables (profile specs)
    [[vertex_condition]]  vertex, rows (list of rows, length 2*|J_v|)
    [solver]           grid, t_end, output_times, p_norms, lower_order, max_step
    [resolvent]        lambdas, laplace, laplace_t_max, laplace_dt
    [output]           dir

Matrices are row-major flat arrays; tabulated fields list one flat row per
uniform sample node. Exporting a built-in scenario and re-ingesting the file
reproduces the same run configuration exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - version dependent
    import tomli as tomllib

from .edge_dynamics import CoefficientField
from .errors import ConfigError, ParseError
from .netgraph import build_graph
from .scenarios import EdgeSpec, Profile, Scenario


@dataclass
class RunConfig:
    """A scenario plus run-only knobs (norm exponents, Laplace probe, paths)."""

    scenario: Scenario
    p_norms: tuple[float, ...] = (1.0, 2.0)
    max_step: float | None = None
    lower_order: bool | None = None  # None = use coupling when present
    laplace: bool = False
    laplace_t_max: float = 20.0
    laplace_dt: float | None = None
    output_dir: str = "."


def load_config(path) -> dict:
    """Parse the TOML document, mapping syntax errors to ParseError."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc}") from exc
    try:
        return tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"config is not valid TOML: {exc}") from exc


def _matrix(flat, where: str) -> np.ndarray:
    arr = np.asarray(flat, dtype=float)
    if arr.shape != (4,):
        raise ParseError(f"{where}: expected 4 row-major entries, got shape {arr.shape}")
    return arr.reshape(2, 2)


def _field(section: Mapping, base: str, where: str) -> CoefficientField | None:
    flat_key, samples_key = base, base + "_samples"
    if flat_key in section and samples_key in section:
        raise ParseError(f"{where}: give either {flat_key} or {samples_key}, not both")
    if flat_key in section:
        return CoefficientField.constant(_matrix(section[flat_key], where))
    if samples_key in section:
        rows = section[samples_key]
        try:
            samples = np.stack([_matrix(r, where) for r in rows])
        except (TypeError, ParseError) as exc:
            raise ParseError(f"{where}: bad {samples_key}: {exc}") from exc
        if samples.shape[0] < 3:
            raise ParseError(f"{where}: {samples_key} needs at least 3 sample nodes")
        return CoefficientField.tabulated(samples)
    return None


def _profile(section: Mapping, key: str, where: str) -> Profile:
    if key not in section:
        return Profile("zero")
    try:
        return Profile.from_config(section[key])
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}.{key}: {exc}") from exc


def config_to_run(cfg: Mapping, name: str = "config") -> RunConfig:
    """Validate the parsed document and build the runnable configuration."""
    if "graph" not in cfg or "edges" not in cfg["graph"]:
        raise ParseError("missing [graph] section with an edges list")
    graph = build_graph([tuple(e) for e in cfg["graph"]["edges"]])

    edge_sections = cfg.get("edge", [])
    if not isinstance(edge_sections, list):
        raise ParseError("[[edge]] must be an array of tables")
    seen = {}
    for sec in edge_sections:
        if "id" not in sec:
            raise ParseError("[[edge]] section without an id")
        eid = int(sec["id"])
        if eid in seen:
            raise ConfigError(f"edge {eid} configured twice")
        seen[eid] = sec
    missing = sorted(set(range(graph.m)) - set(seen))
    if missing:
        raise ConfigError(f"edges {missing} have no [[edge]] section")
    extra = sorted(set(seen) - set(range(graph.m)))
    if extra:
        raise ConfigError(f"[[edge]] sections for unknown edges {extra}")

    edge_specs = []
    initial = {}
    for eid in range(graph.m):
        sec = seen[eid]
        where = f"edge {eid}"
        m_field = _field(sec, "m", where)
        if m_field is None:
            raise ParseError(f"{where}: missing principal matrix m / m_samples")
        n_field = _field(sec, "n", where)
        basis = _matrix(sec["basis"], where) if "basis" in sec else None
        edge_specs.append(EdgeSpec(m_field=m_field, n_field=n_field, explicit_basis=basis))
        initial[eid] = (_profile(sec, "initial_p1", where), _profile(sec, "initial_p2", where))

    phi = {}
    for sec in cfg.get("vertex_condition", []):
        if "vertex" not in sec or "rows" not in sec:
            raise ParseError("[[vertex_condition]] needs vertex and rows keys")
        v = int(sec["vertex"])
        if v in phi:
            raise ConfigError(f"vertex {v} configured twice")
        if not (0 <= v < graph.n):
            raise ConfigError(f"vertex_condition references unknown vertex {v}")
        rows = np.asarray(sec["rows"], dtype=float)
        if rows.size == 0:
            rows = rows.reshape(0, 2 * graph.incidence(v).degree)
        phi[v] = np.atleast_2d(rows)

    solver = cfg.get("solver", {})
    grid = int(solver.get("grid", 128))
    if grid < 8:
        raise ConfigError(f"solver.grid must be >= 8, got {grid}")
    t_end = float(solver.get("t_end", 1.0))
    output_times = tuple(float(t) for t in solver.get("output_times", ()))
    res = cfg.get("resolvent", {})
    lambdas = tuple(float(x) for x in res.get("lambdas", (1.0,)))

    scenario = Scenario(
        name=name,
        graph=graph,
        edge_specs=edge_specs,
        phi=phi,
        initial=initial,
        facts=[],
        grid=grid,
        t_end=t_end,
        output_times=output_times,
        lambdas=lambdas,
    )
    lower = solver.get("lower_order")
    return RunConfig(
        scenario=scenario,
        p_norms=tuple(float(p) for p in solver.get("p_norms", (1.0, 2.0))),
        max_step=float(solver["max_step"]) if "max_step" in solver else None,
        lower_order=bool(lower) if lower is not None else None,
        laplace=bool(res.get("laplace", False)),
        laplace_t_max=float(res.get("laplace_t_max", 20.0)),
        laplace_dt=float(res["laplace_dt"]) if "laplace_dt" in res else None,
        output_dir=str(cfg.get("output", {}).get("dir", ".")),
    )


def scenario_to_config(sc: Scenario) -> dict:
    """Lossless export of a scenario to the config document structure."""
    doc: dict = {"graph": {"edges": [list(e) for e in sc.graph.edges]}}
    edges = []
    for eid, spec in enumerate(sc.edge_specs):
        sec: dict = {"id": eid}
        if spec.m_field.is_constant:
            sec["m"] = [float(x) for x in spec.m_field.data.ravel()]
        else:
            sec["m_samples"] = [[float(x) for x in row.ravel()] for row in spec.m_field.data]
        nf = spec.n_field
        if nf is not None and not nf.is_zero:
            if nf.is_constant:
                sec["n"] = [float(x) for x in nf.data.ravel()]
            else:
                sec["n_samples"] = [[float(x) for x in row.ravel()] for row in nf.data]
        if spec.explicit_basis is not None:
            sec["basis"] = [float(x) for x in np.asarray(spec.explicit_basis).ravel()]
        p1, p2 = sc.initial.get(eid, (Profile("zero"), Profile("zero")))
        sec["initial_p1"] = p1.to_config()
        sec["initial_p2"] = p2.to_config()
        edges.append(sec)
    doc["edge"] = edges
    doc["vertex_condition"] = [
        {"vertex": v, "rows": [[float(x) for x in row] for row in np.atleast_2d(rows)]}
        for v, rows in sorted(sc.phi.items())
    ]
    doc["solver"] = {
        "grid": sc.grid,
        "t_end": float(sc.t_end),
        "output_times": [float(t) for t in sc.output_times],
        "p_norms": [1.0, 2.0],
    }
    doc["resolvent"] = {"lambdas": [float(x) for x in sc.lambdas]}
    return doc


# -- minimal TOML emitter -----------------------------------------------------
# tomli is read-only; the emitter below covers exactly the value shapes used
# by the config documents (tables, arrays of tables, scalars, nested lists).


def _fmt_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise ConfigError("cannot emit non-finite float")
        text = repr(float(value))
        return text if ("." in text or "e" in text or "E" in text) else text + ".0"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt_scalar(v) for v in value) + "]"
    raise ConfigError(f"cannot emit value of type {type(value).__name__}")


def _emit_table(name: str, table: Mapping, lines: list[str], array_item: bool) -> None:
    lines.append(f"[[{name}]]" if array_item else f"[{name}]")
    subtables = []
    for key, value in table.items():
        if isinstance(value, Mapping):
            subtables.append((key, value))
        else:
            lines.append(f"{key} = {_fmt_scalar(value)}")
    for key, value in subtables:
        lines.append("")
        _emit_table(f"{name}.{key}", value, lines, array_item=False)


def dumps_toml(doc: Mapping) -> str:
    lines: list[str] = []
    for key, value in doc.items():
        if isinstance(value, Mapping):
            if lines:
                lines.append("")
            _emit_table(key, value, lines, array_item=False)
        elif isinstance(value, list) and value and isinstance(value[0], Mapping):
            for item in value:
                if lines:
                    lines.append("")
                _emit_table(key, item, lines, array_item=True)
        else:
            lines.append(f"{key} = {_fmt_scalar(value)}")
    return "\n".join(lines) + "\n"
