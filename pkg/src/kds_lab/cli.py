"""Command line entry point: ``kds-lab <subcommand> --config <path> --out <dir>``.

Every subcommand writes its JSON/CSV artifacts under the output directory
together with ``manifest.json``.  Failures produce ``error.json`` and a
nonzero exit status.
"""
import argparse
import csv
import datetime
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, currents, gauge, geometry, scenarios, thresholds
from .config import parse_config
from .errors import KdsLabError
from .evolution import kernels as kernel_backend
from .evolution import solver
from .evolution.background import SYM_PAIRS
from .evolution.grid import restrict_to_coarse

EXIT_ERROR = 2
EXIT_CHECK_FAILED = 3
TENSOR_AMPLITUDE = 1e-3


class CheckFailed(KdsLabError):
    code = "CheckFailed"


# ---------------------------------------------------------------------------
# output helpers


def _clean(obj):
    """Convert numpy scalars/arrays and tuples into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    return obj


class Output:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files = []

    def json(self, name, payload):
        path = self.root / name
        path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")
        self.files.append(name)
        return path

    def csv(self, name, header, rows):
        path = self.root / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(x) for x in row])
        self.files.append(name)
        return path

    def snapshot(self, stem, grid, state, components):
        solver.write_snapshot(self.root / stem, grid, state, components)
        self.files += [stem + ".bin", stem + ".json"]


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out, subcommand, cfg, args, status):
    manifest = {
        "subcommand": subcommand,
        "status": status,
        "version": __version__,
        "kernel_backend": kernel_backend.BACKEND,
        "seed": args.seed if args.seed is not None else (cfg.seed if cfg else None),
        "threads": args.threads,
        "config": cfg.echo() if cfg is not None else None,
        "thresholds": thresholds.table(),
        "artifacts": {name: _digest(out.root / name) for name in sorted(out.files)},
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    (out.root / "manifest.json").write_text(json.dumps(_clean(manifest), indent=2,
                                                       sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_horizons(cfg, out, args):
    p = cfg.params
    params = geometry.validate_params(p.lam, p.mass, p.spin, spin_cap=p.spin_cap)
    hz = geometry.horizon_radii(params, epsilon_fraction=cfg.grid.epsilon_ext_fraction)
    report = dict(hz.as_dict())
    report["subextremal"] = True
    report["params"] = params.as_dict()
    out.json("horizons.json", report)
    return True


def cmd_verify_geometry(cfg, out, args):
    s = scenarios.setup_from_config(cfg)
    bg, params = s.background, s.params
    R, TH = bg.R, bg.TH
    piT = geometry.lie_derivative_metric(params, s.profile, geometry.killing_T(), r=R, theta=TH)
    piP = geometry.lie_derivative_metric(params, s.profile, geometry.killing_Phi(), r=R,
                                         theta=TH)
    n = cfg.grid.n_r
    ric = [geometry.einstein_residual_on_grid(params, s.profile, k, max(16, k // 2))
           for k in (n, 2 * n)]
    order = float(np.log2(ric[0] / ric[1]))
    values = {
        "inverse_residual": geometry.inverse_residual(bg.jet),
        "delta_event": abs(float(params.delta(s.horizons.r_event))),
        "delta_cosmo": abs(float(params.delta(s.horizons.r_cosmo))),
        "pi_T": float(np.abs(piT).max()),
        "pi_Phi": float(np.abs(piP).max()),
        "upsilon_background": float(np.abs(gauge.constraint_op(bg.jet, bg.jet)).max()),
    }
    limits = {"inverse_residual": thresholds.get("inverse_residual"),
              "delta_event": thresholds.get("delta_at_horizon"),
              "delta_cosmo": thresholds.get("delta_at_horizon"),
              "pi_T": thresholds.get("killing_deformation"),
              "pi_Phi": thresholds.get("killing_deformation"),
              "upsilon_background": thresholds.get("upsilon_background")}
    checks = {k: {"value": values[k], "limit": limits[k], "pass": values[k] < limits[k]}
              for k in values}
    checks["ricci_convergence"] = {
        "n_r": [n, 2 * n], "residual": ric, "order": order,
        "limit": thresholds.get("convergence_order"),
        "pass": order >= thresholds.get("convergence_order")}
    ok = all(c["pass"] for c in checks.values())
    out.json("geometry_report.json", {"checks": checks, "all_pass": ok,
                                      "grid": s.grid.as_dict()})
    return ok


def cmd_chart_report(cfg, out, args):
    s = scenarios.setup_from_config(cfg)
    bg, prof = s.background, s.profile
    r1, r2 = prof.middle_interval
    rm = np.linspace(r1, r2, 201)
    F_mid = float(np.max(np.abs(prof.F(rm))))
    erg = geometry.ergosphere_indicator(s.params, prof, r=bg.R, theta=bg.TH)
    report = {
        "finite": bool(np.all(np.isfinite(bg.jet.g)) and np.all(np.isfinite(bg.jet.dg))),
        "max_g_inv_tt": float(bg.g_inv[..., 0, 0].max()),
        "dt_star_timelike": bool(np.all(bg.g_inv[..., 0, 0] < 0.0)),
        "middle_interval": [r1, r2],
        "F_max_on_middle": F_mid,
        "F_limit": thresholds.get("middle_interval_F"),
        "flat_radii": [prof.event_flat, prof.cosmo_flat],
        "spacelike_margin": prof.spacelike_margin,
        "ergoregion_nodes": int(np.count_nonzero(np.asarray(erg) > 0)),
        "horizons": s.horizons.as_dict(),
        "grid": s.grid.as_dict(),
    }
    ok = report["finite"] and report["dt_star_timelike"] and F_mid < report["F_limit"]
    report["all_pass"] = ok
    out.json("chart_report.json", report)
    return ok


def _evolution_config(cfg, t_end=None):
    e = cfg.evolution
    return solver.EvolutionConfig(cfl=e.cfl, t_end=e.t_end if t_end is None else t_end,
                                  dissipation_strength=e.dissipation,
                                  output_stride=e.output_stride)


def _initial_state(cfg, setup, kind):
    e = cfg.evolution
    if kind == solver.SCALAR:
        return scenarios.scalar_pulse(setup, e.amplitude or 1.0, e.pulse_center, e.pulse_width)
    return scenarios.tensor_bump(setup, e.amplitude or TENSOR_AMPLITUDE, e.pulse_center,
                                 max(e.pulse_width, 0.08), nonlinear=kind == solver.NONLINEAR)


def _components(kind):
    return ["u"] if kind == solver.SCALAR else ["h_%d%d" % p for p in SYM_PAIRS]


def _run(cfg, kind, setup=None, t_end=None):
    setup = setup or scenarios.setup_from_config(cfg)
    state = _initial_state(cfg, setup, kind)
    mults = scenarios.multipliers(cfg.multipliers, setup)
    fns = {m.label: (lambda s, m=m: currents.slice_energy(m, s, setup.background))
           for m in mults}
    if kind != solver.SCALAR:
        fns["upsilon_max"] = lambda s: scenarios.upsilon_max(setup, s)
    for k in cfg.norms:
        fns[f"H{k}"] = (lambda s, k=k: analysis.hk_norm(np.real(s.u), k,
                                                      background=setup.background))
    res = solver.evolve(state, _evolution_config(cfg, t_end), setup.background, rhs_kind=kind,
                        energy_fns=fns, symmetry=cfg.evolution.symmetry)
    return setup, res


def _write_run(out, setup, res, kind):
    names = list(res.energies)
    rows = [[t] + [res.energies[n][i] for n in names] for i, t in enumerate(res.times)]
    out.csv("energies.csv", ["t_star"] + names, rows)
    if res.snapshots:
        out.snapshot("final", setup.grid, res.snapshots[-1], _components(kind))
    out.json("run.json", {"kind": kind, "completed": res.completed, "error": res.error,
                          "dt": res.dt, "steps": res.steps,
                          "t_final": res.times[-1] if res.times else None,
                          "crossing_time": solver.crossing_time(setup.grid, setup.background),
                          "grid": setup.grid.as_dict()})


def _error_class(err):
    return type(err.get("error", "RunFailed"), (KdsLabError,), {"code": err.get("error")})


def _run_failed(res):
    cls = _error_class(res.error)
    return cls(res.error.get("message", "run failed"), **res.error.get("details", {}))


def cmd_evolve(kind):
    def run(cfg, out, args):
        setup, res = _run(cfg, kind)
        _write_run(out, setup, res, kind)
        if not res.completed:
            raise _run_failed(res)
        return True
    return run


def cmd_project_initial_data(cfg, out, args):
    setup = scenarios.setup_from_config(cfg)
    bg = setup.background
    e = cfg.evolution
    raw = scenarios.tensor_bump(setup, e.amplitude or TENSOR_AMPLITUDE, e.pulse_center,
                                max(e.pulse_width, 0.08), nonlinear=False)
    h0 = bg.unpack(raw.u)
    rows = {}
    for label, fn in (("linear", gauge.gauge_project_slice),
                      ("nonlinear", gauge.gauge_project_slice_nonlinear)):
        p0, p1 = fn(h0, np.zeros_like(h0), bg)
        lin = gauge.linearized_constraint(bg.slice_jet(p0, p1), bg.jet)
        full = gauge.constraint_op(bg.jet + bg.slice_jet(p0, p1), bg.jet)
        rows[label] = {"linearized_constraint_max": float(np.abs(lin).max()),
                       "constraint_max": float(np.abs(full).max())}
        if label == "nonlinear":
            out.snapshot("projected", setup.grid,
                         solver.StateVector(bg.pack(p0), bg.pack(p1)), _components("tensor"))
    before = gauge.linearized_constraint(bg.slice_jet(h0, np.zeros_like(h0)), bg.jet)
    out.json("projection.json", {"before": float(np.abs(before).max()), "after": rows,
                                 "amplitude": e.amplitude or TENSOR_AMPLITUDE})
    return True


def cmd_divergence_check(cfg, out, args):
    setup, res = _run(cfg, solver.SCALAR)
    if not res.completed:
        raise _run_failed(res)
    mults = scenarios.multipliers(cfg.multipliers, setup)
    report = {}
    for m in mults:
        b = currents.divergence_residual(m, res.snapshots, setup.background)
        report[m.label] = {"residual": b.residual, "E1": b.E1, "E2": b.E2,
                           "flux_inner": b.flux_inner, "flux_outer": b.flux_outer,
                           "bulk": b.bulk}
    series = currents.energy_series(mults, res.snapshots, setup.background)
    names = [m.label for m in mults]
    out.csv("balance.csv", ["t_star"] + names + ["flux_inner", "flux_outer", "bulk_K",
                                                 "identity_residual"],
            [r.as_row(names) for r in series])
    out.json("divergence.json", {"multipliers": report, "dt": res.dt, "steps": res.steps})
    return True


def cmd_decay_fit(cfg, out, args):
    setup, res = _run(cfg, solver.SCALAR)
    if not res.completed:
        raise _run_failed(res)
    label = cfg.decay.multiplier
    mult = scenarios.multipliers([label], setup)[0]
    energies = [currents.slice_energy(mult, s, setup.background) for s in res.snapshots]
    fit = analysis.decay_rate_fit(energies, window=cfg.decay.window, times=res.times,
                                  resolution_tag=f"{setup.grid.n_r}x{setup.grid.n_theta}")
    out.csv("energy.csv", ["t_star", label], zip(res.times, energies))
    out.json("decay_fit.json", {"multiplier": label, **fit.as_dict()})
    return True


def cmd_interp_check(cfg, out, args):
    ic = cfg.interpolation
    seed = args.seed if args.seed is not None else cfg.seed
    fields = analysis.random_periodic_fields(ic.n_fields, ic.n_grid, ic.k_max, seed=seed)
    rnd = analysis.interpolation_check(fields, ic.l, ic.N)
    single = analysis.interpolation_check(
        analysis.single_frequency_fields(ic.n_grid, ic.k_max), ic.l, ic.N)
    ok = rnd.holds and single.holds
    out.json("interpolation.json", {"random": rnd.as_dict(), "single_frequency":
                                    single.as_dict(), "seed": seed, "all_pass": ok})
    return ok


def cmd_convergence(cfg, out, args):
    setup = scenarios.setup_from_config(cfg)
    finals, runs = [], []
    for level in range(cfg.convergence.levels):
        if level:
            setup = scenarios.refined_setup(setup)
        setup, res = _run(cfg, solver.SCALAR, setup=setup)
        if not res.completed:
            raise _run_failed(res)
        finals.append(res.snapshots[-1].u[0])
        runs.append({"grid": setup.grid.as_dict(), "dt": res.dt, "steps": res.steps})
    # compare on the coarsest nodes
    par = setup.background.scalar_parity[0]
    fields = []
    for k, u in enumerate(finals):
        for _ in range(k):
            u = restrict_to_coarse(u, par)
        fields.append(u)
    order = analysis.convergence_order(*fields)
    limit = thresholds.get("convergence_order")
    out.json("convergence.json", {"runs": runs, "order": order, "limit": limit,
                                  "pass": order >= limit})
    return order >= limit


COMMANDS = {
    "horizons": cmd_horizons,
    "verify-geometry": cmd_verify_geometry,
    "chart-report": cmd_chart_report,
    "evolve-scalar": cmd_evolve(solver.SCALAR),
    "evolve-tensor": cmd_evolve(solver.TENSOR),
    "evolve-nonlinear": cmd_evolve(solver.NONLINEAR),
    "project-initial-data": cmd_project_initial_data,
    "divergence-check": cmd_divergence_check,
    "decay-fit": cmd_decay_fit,
    "interp-check": cmd_interp_check,
    "convergence": cmd_convergence,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="kds-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="JSON scenario file (defaults if omitted)")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--threads", type=int, default=None,
                        help="kernel threads (fallback: KDS_LAB_THREADS)")
        sp.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    return ap


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("KDS_LAB_THREADS")
    return int(env) if env else None


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = Output(args.out)
    cfg = None
    status = "ok"
    code = 0
    try:
        args.threads = _threads(args)
        if args.threads is not None:
            kernel_backend.set_num_threads(args.threads)
        cfg = parse_config(args.config)
        if not COMMANDS[args.subcommand](cfg, out, args):
            status = "check_failed"
            code = EXIT_CHECK_FAILED
    except KdsLabError as err:
        status, code = "error", EXIT_ERROR
        out.json("error.json", err.to_dict())
        print(json.dumps(_clean(err.to_dict())), file=sys.stderr)
    except ValueError as err:
        status, code = "error", EXIT_ERROR
        payload = {"error": type(err).__name__, "message": str(err), "details": {}}
        out.json("error.json", payload)
        print(json.dumps(payload), file=sys.stderr)
    write_manifest(out, args.subcommand, cfg, args, status)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
