"""Batch front end: solvability checks, simulation runs, resolvent sweeps.

Exit codes: 0 ok, 1 globally unsolvable boundary system, 2 validation
error, 3 config parse error.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import RunConfig, config_to_run, dumps_toml, load_config, scenario_to_config
from .errors import GloballyUnsolvableError, ParseError, PortflowError
from .flow_solver import evolve, lp_norm, state_from_functions, weighted_c_norm
from .kirchhoff import assemble_global, build_vertex_condition, classify_vertex, count_outgoing
from .resolvent import ResolventWorkspace, fd_residual, laplace_check, resolvent_apply
from .scenarios import BUILTIN_SCENARIOS, CompiledScenario, Profile, compile_scenario

EXIT_OK = 0
EXIT_UNSOLVABLE = 1
EXIT_VALIDATION = 2
EXIT_PARSE = 3


def _fmt(x: float) -> str:
    return repr(float(x))


def check_report(run: RunConfig) -> tuple[str, int]:
    """Per-vertex solvability table plus the global verdict, byte-stable."""
    sc = run.scenario
    systems = {e: spec.build(e, sc.grid) for e, spec in enumerate(sc.edge_specs)}
    lines = [
        f"scenario: {sc.name}",
        f"vertices: {sc.graph.n}  edges: {sc.graph.m}  grid: {sc.grid}",
        "vertex  class      k_v  local  rcond         rcond_eq",
    ]
    conditions = {}
    for v in range(sc.graph.n):
        inc = sc.graph.incidence(v)
        alpha = {e: systems[e].alpha for e in inc.edges}
        k_v = count_outgoing(inc, alpha)
        vclass = classify_vertex(inc, alpha)
        if k_v == 0:
            lines.append(f"{v:<6}  {vclass:<9}  {k_v:<3}  -      -             -")
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cond = build_vertex_condition(inc, systems, sc.phi.get(v, []), on_unsolvable="warn")
        conditions[v] = cond
        local = "yes" if cond.solvable else "no"
        lines.append(
            f"{v:<6}  {vclass:<9}  {k_v:<3}  {local:<5}  "
            f"{cond.rcond:.6e}  {cond.rcond_equilibrated:.6e}"
        )
    try:
        gfm = assemble_global(sc.graph, systems, conditions)
    except GloballyUnsolvableError as exc:
        lines.append(f"global: UNSOLVABLE ({exc})")
        return "\n".join(lines) + "\n", EXIT_UNSOLVABLE
    lines.append(f"global: OK  rcond(xi_out)={gfm.rcond:.6e}")
    lines.append(f"arcs: {gfm.n_arcs} (rightward {gfm.n_plus})")
    s_plus, s_minus = gfm.column_sums()
    lines.append("column sums b11+b21: " + " ".join(f"{x:.6e}" for x in s_plus))
    lines.append("column sums b12+b22: " + " ".join(f"{x:.6e}" for x in s_minus))
    lines.append(f"case: {gfm.case_label()}")
    if gfm.case_label() == "mixed-sign":
        # the contraction cases classify |B|, which dominates the flow
        a_plus = np.abs(gfm.b).sum(axis=0)[: gfm.n_plus]
        a_minus = np.abs(gfm.b).sum(axis=0)[gfm.n_plus:]
        lines.append("column sums |B| b11+b21: " + " ".join(f"{x:.6e}" for x in a_plus))
        lines.append("column sums |B| b12+b22: " + " ".join(f"{x:.6e}" for x in a_minus))
    return "\n".join(lines) + "\n", EXIT_OK


def _arc_forcing(compiled: CompiledScenario):
    """Initial data as per-arc callables; falls back to constant 1 when all zero."""
    sc = compiled.scenario
    all_zero = all(
        p.kind == "zero" for pair in sc.initial.values() for p in pair
    ) or not sc.initial
    n = compiled.gfm.n_arcs
    if all_zero:
        return [lambda x: np.ones_like(np.asarray(x, dtype=float))] * n
    funcs = [None] * n
    for e, sys in compiled.systems.items():
        p1, p2 = sc.initial.get(e, (Profile("zero"), Profile("zero")))
        for comp in (0, 1):
            a = compiled.gfm.arc_index[(e, comp)]
            funcs[a] = _riemann_component(sys, p1, p2, comp)
    return funcs


def _riemann_component(sys, p1, p2, comp):
    if sys.is_constant:
        finv = sys.basis_inv[0]

        def f(x, finv=finv, comp=comp):
            x = np.asarray(x, dtype=float)
            return finv[comp, 0] * p1(x) + finv[comp, 1] * p2(x)

        return f
    xs = sys.xs
    row0 = sys.basis_inv[:, comp, 0]
    row1 = sys.basis_inv[:, comp, 1]

    def f(x, xs=xs, row0=row0, row1=row1):
        x = np.asarray(x, dtype=float)
        return np.interp(x, xs, row0) * p1(x) + np.interp(x, xs, row1) * p2(x)

    return f


def simulate_files(run: RunConfig, out_dir: Path) -> tuple[Path, Path]:
    """Run the evolution and write trajectory.csv + norms.csv."""
    compiled = compile_scenario(run.scenario)
    sc = run.scenario
    state = compiled.initial_state()
    coupling = compiled.coupling() if run.lower_order in (None, True) else None
    times = list(sc.output_times) if sc.output_times else [sc.t_end]
    states = evolve(
        state, compiled.gfm.b, compiled.ttm, max(sc.t_end, times[-1]),
        nbar=coupling, output_times=times, max_step=run.max_step,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    traj_path = out_dir / "trajectory.csv"
    norms_path = out_dir / "norms.csv"
    xs = compiled.ttm.xs
    with traj_path.open("w", encoding="utf-8") as fh:
        fh.write("t,arc,node,x,value\n")
        for st in states:
            for a in range(st.n_arcs):
                for i, x in enumerate(xs):
                    fh.write(f"{_fmt(st.t)},{a},{i},{_fmt(x)},{_fmt(st.values[a][i])}\n")
    with norms_path.open("w", encoding="utf-8") as fh:
        header = ["t"] + [f"lp_{_fmt(p)}" for p in run.p_norms] + ["c_norm", "energy"]
        fh.write(",".join(header) + "\n")
        for st in states:
            row = [_fmt(st.t)]
            row += [_fmt(lp_norm(st, p)) for p in run.p_norms]
            row.append(_fmt(weighted_c_norm(st, compiled.ttm)))
            row.append(_fmt(compiled.energy(st)))
            fh.write(",".join(row) + "\n")
    return traj_path, norms_path


def resolvent_file(run: RunConfig, out_dir: Path, lambdas=None) -> Path:
    """Sweep lambda values; rows (lambda, solvable, fd residual, laplace residual)."""
    compiled = compile_scenario(run.scenario)
    sweep = list(lambdas if lambdas is not None else run.scenario.lambdas)
    forcing = _arc_forcing(compiled)
    trajectory = None
    if run.laplace:
        f_state = state_from_functions(forcing, compiled.gfm.n_plus, compiled.grid)
        dt = run.laplace_dt if run.laplace_dt else compiled.ttm.window / 8.0
        steps = int(round(run.laplace_t_max / dt))
        times = [i * dt for i in range(steps + 1)]
        trajectory = evolve(
            f_state, compiled.gfm.b, compiled.ttm, run.laplace_t_max,
            nbar=compiled.coupling() if run.lower_order in (None, True) else None,
            output_times=times,
        )
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "resolvent.csv"
    with path.open("w", encoding="utf-8") as fh:
        fh.write("lambda,solvable,fd_residual,laplace_residual\n")
        for lam in sweep:
            ws = ResolventWorkspace(lam, compiled.gfm.b, compiled.ttm, compiled.gfm.n_plus)
            if not ws.solvable:
                fh.write(f"{_fmt(lam)},no,,\n")
                continue
            result = resolvent_apply(ws, forcing)
            resid = fd_residual(ws, forcing, result)
            lap = ""
            if trajectory is not None:
                lap = _fmt(laplace_check(ws, forcing, trajectory))
            fh.write(f"{_fmt(lam)},yes,{_fmt(resid)},{lap}\n")
    return path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="portflow",
        description="Hyperbolic network systems: checks, simulation, resolvent sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="validate a config and report solvability")
    p_check.add_argument("config")
    p_check.add_argument("--grid", type=int, default=None)

    p_sim = sub.add_parser("simulate", help="evolve the network and write CSV output")
    p_sim.add_argument("config")
    p_sim.add_argument("--grid", type=int, default=None)
    p_sim.add_argument("--tend", type=float, default=None)
    p_sim.add_argument("--out", default=None, help="output directory")

    p_res = sub.add_parser("resolvent", help="sweep resolvent lambdas and write CSV")
    p_res.add_argument("config")
    p_res.add_argument("--grid", type=int, default=None)
    p_res.add_argument("--lambda", dest="lambdas", default=None,
                       help="comma-separated lambda values")
    p_res.add_argument("--out", default=None)

    p_scen = sub.add_parser("scenario", help="built-in scenario utilities")
    scen_sub = p_scen.add_subparsers(dest="scenario_command", required=True)
    scen_sub.add_parser("list", help="list built-in scenarios")
    p_export = scen_sub.add_parser("export", help="export a built-in scenario as config")
    p_export.add_argument("name")
    p_export.add_argument("-o", "--output", default=None, help="file path (default stdout)")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except GloballyUnsolvableError as exc:
        print(f"unsolvable: {exc}", file=sys.stderr)
        return EXIT_UNSOLVABLE
    except PortflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def _load_run(args) -> RunConfig:
    run = config_to_run(load_config(args.config), name=Path(args.config).stem)
    if getattr(args, "grid", None):
        run.scenario.grid = args.grid
    if getattr(args, "tend", None) is not None:
        run.scenario.t_end = args.tend
        if run.scenario.output_times and max(run.scenario.output_times) > args.tend:
            run.scenario.output_times = tuple(
                t for t in run.scenario.output_times if t <= args.tend
            ) or (args.tend,)
    return run


def _dispatch(args) -> int:
    if args.command == "check":
        run = _load_run(args)
        report, code = check_report(run)
        sys.stdout.write(report)
        return code
    if args.command == "simulate":
        run = _load_run(args)
        out_dir = Path(args.out) if args.out else Path(run.output_dir)
        traj, norms = simulate_files(run, out_dir)
        print(f"wrote {traj} and {norms}")
        return EXIT_OK
    if args.command == "resolvent":
        run = _load_run(args)
        out_dir = Path(args.out) if args.out else Path(run.output_dir)
        lambdas = None
        if args.lambdas:
            lambdas = [float(s) for s in args.lambdas.split(",") if s.strip()]
        path = resolvent_file(run, out_dir, lambdas)
        print(f"wrote {path}")
        return EXIT_OK
    if args.command == "scenario":
        if args.scenario_command == "list":
            for name in sorted(BUILTIN_SCENARIOS):
                print(name)
            return EXIT_OK
        if args.scenario_command == "export":
            if args.name not in BUILTIN_SCENARIOS:
                print(f"unknown scenario {args.name!r}; try 'portflow scenario list'",
                      file=sys.stderr)
                return EXIT_VALIDATION
            doc = scenario_to_config(BUILTIN_SCENARIOS[args.name]())
            text = dumps_toml(doc)
            if args.output:
                Path(args.output).write_text(text, encoding="utf-8")
                print(f"wrote {args.output}")
            else:
                sys.stdout.write(text)
            return EXIT_OK
    raise AssertionError("unreachable")


if __name__ == "__main__":
    raise SystemExit(main())
