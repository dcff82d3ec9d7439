"""Command-line front end: ``garnier <command> --config job.json``.

Exit codes: 0 success, 1 I/O or schema error, 2 domain validation, 3
Riemann-Hilbert failure, 4 Plateau failure, 5 wall or pole report.
"""

import os
import sys


def _apply_thread_cap():
    cap = os.environ.get("GARNIER_THREADS")
    if not cap:
        return None
    if not cap.isdigit() or int(cap) < 1:
        raise SystemExit(f"GARNIER_THREADS must be a positive integer, got {cap!r}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = cap
    return int(cap)


_apply_thread_cap()

import argparse  # noqa: E402
import csv  # noqa: E402
from pathlib import Path  # noqa: E402

import numpy as np  # noqa: E402

from . import io  # noqa: E402
from .errors import DomainError, GarnierError, WallError  # noqa: E402

COMMANDS = ("validate", "rh-solve", "deform", "ratios", "solve", "mesh", "verify")


def build_parser():
    p = argparse.ArgumentParser(prog="garnier",
                                description="Maximal surfaces in Minkowski space bounded by "
                                            "polygons, through Fuchsian systems.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="job configuration (JSON)")
        sp.add_argument("--out", help="output directory (default: the config's 'out')")
        sp.add_argument("--seed", type=int, help="seed of the solver restarts")
        sp.add_argument("--tol-ode", type=float, help="relative tolerance of the ODE integrator")
        sp.add_argument("--tol-solve", type=float, help="tolerance of the Plateau solve")
        sp.add_argument("--grid", type=int, nargs=2, metavar=("NX", "NY"), help="mesh grid")
        sp.add_argument("--rmax", type=float, help="mesh radius in the parameter plane")
        return sp

    common(sub.add_parser("validate", help="genericity, exterior angles and closure"))
    common(sub.add_parser("rh-solve", help="real Fuchsian system with the target monodromy"))
    sp = common(sub.add_parser("deform", help="isomonodromic deformation to t_final"))
    sp.add_argument("--system", help="solution file to start from (default: solve first)")
    sp = common(sub.add_parser("ratios", help="edge lengths and length ratios"))
    sp.add_argument("--system", help="solution file (default: solve first)")
    common(sub.add_parser("solve", help="full pipeline: solve, match ratios, mesh"))
    sp = common(sub.add_parser("mesh", help="sample the surface of a solution"))
    sp.add_argument("--system", help="solution file (default: solve first)")
    sp = common(sub.add_parser("verify", help="residual report of a system file"), False)
    sp.add_argument("system", help="system or solution file")
    sp.add_argument("--loops", help="comma-separated 1-based loop indices ('' for none)")
    return p


def _config(args):
    if args.config is None:
        cfg = None
    else:
        cfg = io.load_config(args.config)
    if cfg is not None:
        if args.seed is not None:
            cfg.seed = args.seed
        if args.tol_ode is not None:
            cfg.tol_ode = args.tol_ode
        if args.tol_solve is not None:
            cfg.tol_solve = args.tol_solve
        if args.grid is not None:
            cfg.grid = tuple(args.grid)
        if args.rmax is not None:
            cfg.rmax = args.rmax
        for name in ("tol_ode", "tol_solve", "rmax"):
            if not getattr(cfg, name) > 0:
                raise io.ConfigError(f"--{name.replace('_', '-')} must be positive")
    return cfg


def _outdir(args, cfg):
    out = Path(args.out or (cfg.out if cfg is not None else "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _directions(cfg):
    from .polygon import DirectionTuple
    return DirectionTuple(cfg.directions)


def _solve_rh(cfg):
    from .monodromy import solve_riemann_hilbert
    from .polygon import validate_direction_tuple
    D = _directions(cfg)
    rep = validate_direction_tuple(D, coplanar_pair=cfg.coplanar_pair)
    if not rep.generic:
        raise DomainError("direction tuple is not generic: " + "; ".join(rep.failures()))
    return solve_riemann_hilbert(D, t0=cfg.t_init, seed=cfg.seed, restarts=cfg.restarts,
                                 rtol=cfg.tol_ode, check_generic=False)


def _solution(args, cfg):
    if getattr(args, "system", None):
        _, sol = io.load_system_or_solution(args.system)
        if sol is None:
            raise io.ConfigError(f"{args.system} holds no gauge data; pass a solution file")
        return sol
    return _solve_rh(cfg)


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args, cfg, out):
    from .polygon import PolygonSpec, build_polygon, exterior_angles, validate_direction_tuple
    D = _directions(cfg)
    rep = validate_direction_tuple(D, coplanar_pair=cfg.coplanar_pair)
    ang = exterior_angles(D)
    print(f"n = {D.n}, generic: {rep.generic}")
    print(" pair   margin       normal")
    for p in rep.pairs:
        print(f" {p['i']},{p['j']}  {p['margin']:.6e}  {p['normal']}")
    a, b = rep.coplanar_pair
    for c in rep.coplanarity:
        print(f" det(u{c['i']}, u{a}, u{b}) = {c['det']:.6e}")
    print(" i   theta_i        v_i")
    for i, (th, v) in enumerate(zip(ang.theta, ang.v)):
        print(f" {i + 1}  {th:.12f}  [{v[0]: .6f} {v[1]: .6f} {v[2]: .6f}]")
    result = {"schema": "garnier.validate/1", "genericity": rep.as_dict(),
              "theta": ang.theta.tolist(), "v": ang.v.tolist(), "closed": None}
    if cfg.ratios is not None:
        poly = build_polygon(PolygonSpec(D, cfg.ratios))
        result["closed"] = bool(poly.closed)
        result["closure_gap"] = poly.closure_gap
        result["vertices"] = poly.vertices.tolist()
        print(f"closed: {poly.closed} (gap {poly.closure_gap:.3e})")
    io.write_json(out / "validate.json", io.plain(result))
    if not rep.generic:
        raise DomainError("; ".join(rep.failures()))
    return result


def cmd_rh_solve(args, cfg, out):
    sol = _solve_rh(cfg)
    io.write_json(out / "solution.json", io.solution_to_json(sol))
    r = sol.report
    print(f"solved n = {r['n']}: trace residual {r['trace_residual']:.2e}, "
          f"edge residual {r['edge_residual']:.2e}, restarts {r['restarts']}")
    return sol


def cmd_deform(args, cfg, out):
    from .schlesinger import DeformationPath, deform
    sol = _solution(args, cfg)
    if cfg.t_final is None:
        raise io.ConfigError("deform needs 't_final' in the configuration")
    sys0 = sol.system
    path = DeformationPath.segment(sys0.t_free.real, cfg.t_final)
    try:
        sys1, trace = deform(sys0, path, record=True)
    except WallError as exc:
        if exc.system is not None:
            io.write_json(out / "deformed_partial.json", io.system_to_json(exc.system))
        raise
    trace.write_csv(out / "deform_trace.csv")
    io.write_json(out / "deformed.json", io.system_to_json(sys1))
    print(f"deformed to t = {cfg.t_final.tolist()}: spectral drift {trace.max_spectral_drift:.2e}, "
          f"sum drift {trace.max_sum_drift:.2e}, projections {trace.projections}")
    return sys1


def _ratio_rows(sigs):
    rows = []
    for s in sigs:
        rows.append({"edge": s.edge + 1, "zeros": s.m, "length": f"{s.length:.15g}",
                     "length_quadrature": f"{s.length_quadrature:.15g}"
                     if s.length_quadrature is not None else ""})
    return rows


def _write_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        w.writeheader()
        w.writerows(rows)


def cmd_ratios(args, cfg, out):
    from .ratio import LengthRatioMap, edge_signatures, length_ratios
    from .weierstrass import WeierstrassFrame
    sol = _solution(args, cfg)
    if cfg.t_final is not None and sol.system.n:
        frame = LengthRatioMap(sol).frame_at(cfg.t_final)
    else:
        frame = WeierstrassFrame.from_solution(sol)
    sigs = edge_signatures(frame, quadrature=True)
    F = length_ratios(frame, signatures=sigs)
    _write_csv(out / "edges.csv", _ratio_rows(sigs))
    result = {"schema": "garnier.ratios/1", "t": frame.sys.t_free.real.tolist(),
              "ratios": F.tolist(), "edges": [s.as_dict() for s in sigs]}
    io.write_json(out / "ratios.json", io.plain(result))
    print("F_D =", " ".join(f"{v:.12g}" for v in F))
    return F


def _mesh(frame, cfg, out, stem="mesh"):
    from .weierstrass import sample_mesh
    mesh = sample_mesh(frame, grid=cfg.grid, R_max=cfg.rmax, check=True)
    mesh.write(str(out / stem))
    return mesh


def cmd_mesh(args, cfg, out):
    from .weierstrass import WeierstrassFrame
    sol = _solution(args, cfg)
    mesh = _mesh(WeierstrassFrame.from_solution(sol), cfg, out)
    print(f"mesh: {len(mesh.points)} vertices, {len(mesh.faces)} faces")
    return mesh


def _verify_system(sys, sol=None, loops=None, rtol=1e-11):
    """Pass/fail per invariant; ``loops=[]`` skips the monodromy section."""
    from .fuchsian import check_conditions, reality_check
    from .lorentz import su11_minus_residual, su11_residual
    from .monodromy import monodromy_of, standard_loops
    tol = 1e3 * rtol
    checks = {}
    cond = check_conditions(sys, sol.target.u if sol is not None else None)
    checks["spectrum"] = {"residual": cond.residual_a, "pass": cond.residual_a < 1e-8}
    checks["reality"] = {"residual": cond.residual_c, "pass": cond.residual_c < 1e-8}
    checks["ordering"] = {"pass": cond.t_ordered}
    if cond.angles is not None:
        checks["angles"] = {"residual": cond.angles, "pass": cond.angles < 1e-8}
    rc = reality_check(sys)
    checks["reality_samples"] = {"residual": float(rc), "pass": float(rc) < 1e-8}
    if loops is None or len(loops):
        all_loops = standard_loops(sys)
        chosen = all_loops if loops is None else [all_loops[k - 1] for k in loops]
        frame = None
        if sol is not None:
            from .monodromy import infinity_frame
            frame = infinity_frame(sys, rtol=rtol) @ sol.C0
        mono = monodromy_of(sys, loops=chosen, frame=frame, rtol=rtol)
        idx = [lp.index for lp in chosen if lp.center is not None]
        if len(idx) == sys.t.size:
            idx = idx + [sys.t.size]
        sec = {"loops": [k + 1 for k in idx]}
        if sol is not None:
            su = max(su11_residual(N) for N in mono.N)
            sec["su11"] = {"residual": float(su), "pass": float(su) < tol}
            M = sol.target.M[idx]
            err = float(np.abs(mono.N - M).max())
            sec["target"] = {"residual": err, "pass": err < tol}
            dres = max(float(su11_minus_residual(Di)) for Di in sol.target.D)
            sec["half_turns"] = {"residual": dres, "pass": dres < 1e-10}
        if mono.product_residual is not None:
            sec["product"] = {"residual": mono.product_residual,
                              "pass": mono.product_residual < tol}
        checks["monodromy"] = sec
    ok = all(v["pass"] for v in _leaves(checks))
    return {"schema": "garnier.verify/1", "pass": bool(ok), "checks": checks}


def _leaves(d):
    for k, v in d.items():
        if isinstance(v, dict) and "pass" in v:
            yield v
        elif isinstance(v, dict):
            yield from _leaves(v)


def cmd_verify(args, cfg, out):
    sys_, sol = io.load_system_or_solution(args.system)
    loops = None
    if args.loops is not None:
        try:
            loops = [int(k) for k in args.loops.split(",") if k.strip()]
        except ValueError as exc:
            raise io.ConfigError("--loops must be comma-separated integers") from exc
    elif cfg is not None and cfg.loops is not None:
        loops = cfg.loops
    if loops and not all(1 <= k <= sys_.t.size + 1 for k in loops):
        raise io.ConfigError(f"loop indices must lie in 1..{sys_.t.size + 1}")
    rtol = cfg.tol_ode if cfg is not None else 1e-11
    rep = io.plain(_verify_system(sys_, sol, loops, rtol=rtol))
    io.write_json(out / "verify.json", rep)
    for name, v in rep["checks"].items():
        if "pass" in v:
            print(f"{'PASS' if v['pass'] else 'FAIL'} {name}")
        else:
            for sub_name, w in v.items():
                if isinstance(w, dict):
                    print(f"{'PASS' if w['pass'] else 'FAIL'} {name}.{sub_name}")
    if not rep["pass"]:
        raise DomainError("verification failed")
    return rep


def cmd_solve(args, cfg, out):
    from .ratio import solve_plateau
    from .weierstrass import boundary_check
    stage = "validate"
    summary = {"schema": "garnier.solve/1", "stages": []}
    try:
        if cfg.ratios is None:
            raise io.ConfigError("solve needs target 'ratios' in the configuration")
        cmd_validate(args, cfg, out)
        summary["stages"].append(stage)
        stage = "rh-solve"
        sol = cmd_rh_solve(args, cfg, out)
        summary["stages"].append(stage)
        stage = "plateau"
        res = solve_plateau(_directions(cfg), cfg.ratios, solution=sol, tol=cfg.tol_solve)
        res.write_json(out / "plateau.json")
        res.write_csv(out / "plateau.csv")
        _write_csv(out / "ratios.csv", _ratio_rows(res.signatures))
        io.write_json(out / "system.json", io.system_to_json(res.frame.sys))
        summary["stages"].append(stage)
        print(f"t* = {res.t.tolist()}, ratio residual {res.residual:.2e}")
        stage = "mesh"
        _mesh(res.frame, cfg, out)
        summary["stages"].append(stage)
        stage = "verify"
        deformed = sol.__class__(system=res.frame.sys, target=sol.target, gauge=sol.gauge,
                                 report={})
        ver = _verify_system(res.frame.sys, deformed, rtol=cfg.tol_ode)
        b = boundary_check(res.frame, R_max=cfg.rmax)
        ver["boundary"] = b.as_dict()
        ver["ratios"] = {"residual": res.residual, "pass": res.residual < cfg.tol_solve}
        ver["pass"] = bool(ver["pass"] and b.passes() and ver["ratios"]["pass"])
        summary["verification"] = io.plain(ver)
        summary["t"] = res.t.tolist()
        summary["ratios"] = res.ratios.tolist()
        summary["stages"].append(stage)
        io.write_json(out / "summary.json", summary)
    except GarnierError as exc:
        summary["failed_stage"] = stage
        summary["error"] = f"{type(exc).__name__}: {exc}"
        if getattr(exc, "report", None) is not None:
            summary["report"] = io.plain(exc.report)
        io.write_json(out / "failure.json", summary)
        raise
    return summary


HANDLERS = {"validate": cmd_validate, "rh-solve": cmd_rh_solve, "deform": cmd_deform,
            "ratios": cmd_ratios, "solve": cmd_solve, "mesh": cmd_mesh, "verify": cmd_verify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        out = _outdir(args, cfg)
        HANDLERS[args.command](args, cfg, out)
    except GarnierError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
