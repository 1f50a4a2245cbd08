"""Command-line front end.

Every run prints one summary line on success. Failures print a single line
``lctdelay: error[validation]: ...`` (exit 1) or ``lctdelay: error[numerical]: ...``
(exit 2) on stderr.

CSV column orders:
  phase_diagram.csv  sigma,epsilon,class,D1..Dr
  hopf_locus.csv     epsilon,sigma,transversality,frequency
  stability.csv      sigma,epsilon,D1..Dr,verdict
  equilibria.csv     sigma,epsilon,x_e,residual
  trajectory.csv     t,<state columns in layout order>
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bifurcation import BracketError, LogisticHopfModel, phase_diagram, resolve_threads, trace_locus
from .equilibria import ConvergenceError, SingularJacobianError, find_equilibrium, logistic_equilibrium
from .history import ConstantHistory, HistoryDivergenceError
from .integrators import StepUnderflowError, continuity_gap, integrate_direct, integrate_ode
from .lct import SpecError, transform
from .logistic import LogisticParams, logistic_spec, logistic_system, canonical_order
from .output import svg_heatmap, svg_lines, write_csv, write_json
from .specio import load_spec, parse_spec, spec_to_dict
from .stability import jacobian, stability_report
from .verify import SUITES, run_suite

COMMANDS = ("transform", "equilibrium", "stability", "hopf", "phase-diagram", "simulate", "continuity", "verify")
LOGISTIC_KEYS = ("r", "K", "sigma", "Omega", "epsilon")
DEFAULTS = {"r": 2.0, "K": 1.0, "sigma": 1.0, "Omega": 0.8, "epsilon": 0.0}

NUMERICAL_ERRORS = (
    ArithmeticError,
    ConvergenceError,
    SingularJacobianError,
    StepUnderflowError,
    BracketError,
    HistoryDivergenceError,
    np.linalg.LinAlgError,
)


class ValidationError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    input_path: str | None
    output_dir: Path
    overrides: dict = field(default_factory=dict)
    seed: int = 0
    options: argparse.Namespace | None = None


def _range(text: str, name: str):
    try:
        a, b = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValidationError(f"--{name} expects a:b, got {text!r}") from None
    if not b >= a:
        raise ValidationError(f"--{name} needs a <= b, got {text!r}")
    return a, b


def _grid(text: str):
    try:
        nx, ny = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise ValidationError(f"--grid expects NXxNY, got {text!r}") from None
    if nx < 1 or ny < 1:
        raise ValidationError("--grid sizes must be positive")
    return nx, ny


def _overrides(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise ValidationError(f"--set {key}: value {val!r} is not a number") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="JSON delay-system spec")
    common.add_argument("--builtin", choices=["logistic"], help="use a built-in model instead of --input")
    for key in LOGISTIC_KEYS:
        common.add_argument(f"--{key}", type=float, help=f"logistic {key} (default {DEFAULTS[key]})")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="parameter override (repeatable)")
    common.add_argument("--out", default="lctdelay_out", help="output directory")
    common.add_argument("--plot", action="store_true", help="also write SVG plots")
    common.add_argument("--tol", type=float, default=None, help="numerical tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="worker processes (fallback: LCT_THREADS)")

    parser = argparse.ArgumentParser(prog="lctdelay", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"lctdelay {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("transform", parents=[common], help="apply the linear chain trick")
    p = sub.add_parser("equilibrium", parents=[common], help="equilibrium point(s)")
    p.add_argument("--sigma-range")
    p.add_argument("--eps-range")
    p.add_argument("--grid", default="20x20")
    sub.add_parser("stability", parents=[common], help="Routh-Hurwitz report at the equilibrium")
    p = sub.add_parser("hopf", parents=[common], help="trace the Hopf locus")
    p.add_argument("--eps-range", default="0:2")
    p.add_argument("--sigma-range", default="0.05:3", help="initial sigma bracket")
    p.add_argument("--steps", type=int, default=100)
    p = sub.add_parser("phase-diagram", parents=[common], help="stability classes on a (sigma, epsilon) grid")
    p.add_argument("--grid", default="200x200")
    p.add_argument("--sigma-range", default="0:3")
    p.add_argument("--eps-range", default="0:2")
    p = sub.add_parser("simulate", parents=[common], help="time series")
    p.add_argument("--T", type=float, default=200.0)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--method", choices=["rk4", "rk45", "direct"], default="rk4")
    p.add_argument(
        "--perturb", type=float, default=0.05, help="built-in model: constant history K*(1+perturb) (default 0.05)"
    )
    p = sub.add_parser("continuity", parents=[common], help="kernel-continuity certificate")
    p.add_argument("--input2", help="second spec (same as --input except kernels)")
    p.add_argument("--epsilon2", type=float, default=None, help="built-in model: perturbed epsilon (default epsilon+0.05)")
    p.add_argument("--T", type=float, default=10.0)
    p.add_argument("--h", type=float, default=1e-2)
    p = sub.add_parser("verify", parents=[common], help="built-in oracle checks")
    p.add_argument("--suite", default="all", choices=sorted(SUITES) + ["all"])
    return parser


def _logistic_params(cfg: RunConfig) -> LogisticParams:
    opts = cfg.options
    vals = {k: (getattr(opts, k) if getattr(opts, k, None) is not None else DEFAULTS[k]) for k in LOGISTIC_KEYS}
    for key, val in cfg.overrides.items():
        if key not in LOGISTIC_KEYS:
            raise ValidationError(f"unknown override key {key!r}; allowed: {', '.join(LOGISTIC_KEYS)}")
        vals[key] = val
    try:
        return LogisticParams(**vals)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _is_builtin(cfg: RunConfig) -> bool:
    if cfg.input_path and cfg.options.builtin:
        raise ValidationError("use either --input or --builtin, not both")
    return not cfg.input_path


def _load(cfg: RunConfig, path: str | None = None):
    path = path or cfg.input_path
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read spec {path}: {exc.strerror}") from None
    except json.JSONDecodeError:
        return load_spec(path)  # re-raise with the field-level message
    if cfg.overrides:
        params = data.get("params") if isinstance(data, dict) else None
        if not isinstance(params, dict):
            raise ValidationError("overrides need a 'params' object in the spec")
        for key, val in cfg.overrides.items():
            if key not in params:
                raise ValidationError(f"unknown override key {key!r}; spec params are {sorted(params)}")
            params[key] = val
    return parse_spec(data)


def _spec(cfg: RunConfig, history=None):
    if _is_builtin(cfg):
        p = _logistic_params(cfg)
        return logistic_spec(p, history), p
    return _load(cfg), None


def cmd_transform(cfg):
    spec, _ = _spec(cfg)
    system = transform(spec)
    layout = [{"name": b.name, "start": b.start, "stop": b.stop} for b in system.layout]
    write_json(cfg.output_dir / "transform.json", {
        "r": system.r, "layout": layout, "initial_state": system.initial_state, "spec": spec_to_dict(spec),
    })
    return f"r={system.r} blocks={len(layout)}"


def cmd_equilibrium(cfg):
    opts = cfg.options
    if _is_builtin(cfg):
        p = _logistic_params(cfg)
        if opts.sigma_range or opts.eps_range:
            s_lo, s_hi = _range(opts.sigma_range or f"{p.sigma}:{p.sigma}", "sigma-range")
            e_lo, e_hi = _range(opts.eps_range or f"{p.epsilon}:{p.epsilon}", "eps-range")
            nx, ny = _grid(opts.grid)
            if s_lo <= 0:
                raise ValidationError("--sigma-range must be positive")
            records, rows = [], []
            for eps in np.linspace(e_lo, e_hi, ny):
                for sig in np.linspace(s_lo, s_hi, nx):
                    e = logistic_equilibrium(p.r, p.K, float(sig), p.Omega, float(eps))
                    records.append(e.to_record(sigma=sig, epsilon=eps))
                    rows.append((sig, eps, e.x_e[0], e.residual))
            write_json(cfg.output_dir / "equilibria.json", records)
            write_csv(cfg.output_dir / "equilibria.csv", ["sigma", "epsilon", "x_e", "residual"], rows)
            worst = max(r[3] for r in rows)
            return f"points={len(rows)} max_residual={worst:.3g}"
        closed = logistic_equilibrium(p.r, p.K, p.sigma, p.Omega, p.epsilon)
        spec = logistic_spec(p)
        general = find_equilibrium(spec, [p.K], tol=cfg.options.tol or 1e-12)
        diff = float(np.max(np.abs(general.state[canonical_order(transform(spec))] - closed.state)))
        write_json(cfg.output_dir / "equilibrium.json", {
            "closed_form": closed.to_record(sigma=p.sigma, epsilon=p.epsilon),
            "general": general.to_record(sigma=p.sigma, epsilon=p.epsilon),
            "max_difference": diff,
        })
        return f"x_e={closed.x_e[0]:.17g} residual={general.residual:.3g} diff={diff:.3g}"
    spec = _load(cfg)
    e = find_equilibrium(spec, spec.history(0.0), tol=cfg.options.tol or 1e-12)
    write_json(cfg.output_dir / "equilibrium.json", {"general": e.to_record()})
    return f"x_e={[float(v) for v in e.x_e]} residual={e.residual:.3g}"


def _stability_rows(rep, sigma, epsilon):
    dets = rep.routh_hurwitz.determinants
    return [sigma, epsilon, *dets, rep.verdict.value], [f"D{j}" for j in range(1, dets.size + 1)]


def cmd_stability(cfg):
    tol = cfg.options.tol or 1e-9
    if _is_builtin(cfg):
        p = _logistic_params(cfg)
        model = LogisticHopfModel(p.r, p.K, p.Omega)
        J = model.jacobian(p.sigma, p.epsilon)
        X = model.equilibrium_state(p.sigma, p.epsilon)
        fd = jacobian(logistic_system(p, X), X)
        rep = stability_report(J, tol)
        info = {"sigma": p.sigma, "epsilon": p.epsilon, "fd_jacobian_max_diff": float(np.max(np.abs(fd - J)))}
        sigma, epsilon = p.sigma, p.epsilon
    else:
        spec = _load(cfg)
        eq = find_equilibrium(spec, spec.history(0.0))
        system = transform(spec)
        rep = stability_report(jacobian(system, eq.state), tol)
        info = {"equilibrium": eq.to_record()}
        sigma, epsilon = spec.sigma, float("nan")
    row, dcols = _stability_rows(rep, sigma, epsilon)
    write_csv(cfg.output_dir / "stability.csv", ["sigma", "epsilon", *dcols, "verdict"], [row])
    write_json(cfg.output_dir / "stability.json", {**info, **rep.to_dict()})
    return f"verdict={rep.verdict.value} first_failure={rep.routh_hurwitz.first_failure_index}"


def _hopf_model(cfg) -> tuple[LogisticHopfModel, LogisticParams]:
    if not _is_builtin(cfg):
        raise ValidationError(f"{cfg.command} supports only --builtin logistic")
    p = _logistic_params(cfg)
    return LogisticHopfModel(p.r, p.K, p.Omega), p


def _locus_rows(locus):
    return [(pt.epsilon, pt.sigma, pt.transversality, pt.frequency) for pt in locus.points]


def cmd_hopf(cfg):
    model, _ = _hopf_model(cfg)
    opts = cfg.options
    eps_range = _range(opts.eps_range, "eps-range")
    bracket = _range(opts.sigma_range, "sigma-range")
    locus = trace_locus(model, eps_range, opts.steps, opts.tol or 1e-10, bracket)
    write_csv(cfg.output_dir / "hopf_locus.csv", ["epsilon", "sigma", "transversality", "frequency"], _locus_rows(locus))
    write_json(cfg.output_dir / "hopf.json", {
        "params": {"r": model.r, "K": model.K, "Omega": model.Omega},
        "slope_at_origin": locus.slope_at_origin,
        "stop_reason": locus.stop_reason,
        "points": len(locus.points),
    })
    if opts.plot:
        svg_lines(cfg.output_dir / "hopf_locus.svg", locus.epsilons, {"sigma*": locus.sigmas},
                  xlabel="epsilon", ylabel="sigma", title="Hopf locus")
    start = locus.points[0]
    return f"points={len(locus.points)} start=({start.sigma:.10g},{start.epsilon:g}) stop='{locus.stop_reason}'"


def cmd_phase_diagram(cfg):
    model, _ = _hopf_model(cfg)
    opts = cfg.options
    nx, ny = _grid(opts.grid)
    s_lo, s_hi = _range(opts.sigma_range, "sigma-range")
    e_lo, e_hi = _range(opts.eps_range, "eps-range")
    if s_hi <= 0 or s_lo < 0:
        raise ValidationError("--sigma-range must lie in (0, inf)")
    # sigma at cell centres keeps sigma > 0 when the range starts at zero
    sig = s_lo + (np.arange(nx) + 0.5) * (s_hi - s_lo) / nx
    eps = np.linspace(e_lo, e_hi, ny)
    pd = phase_diagram(model, sig, eps, opts.tol or 1e-9, resolve_threads(opts.threads))
    r = model.order
    write_csv(
        cfg.output_dir / "phase_diagram.csv",
        ["sigma", "epsilon", "class", *[f"D{j}" for j in range(1, r + 1)]],
        ([s, e, c, *d] for s, e, c, d in pd.rows()),
    )
    counts = pd.counts()
    if opts.plot:
        curve = None
        try:
            locus = trace_locus(model, (e_lo, e_hi), 100, 1e-10)
            curve = (locus.sigmas, locus.epsilons)
        except (BracketError, ArithmeticError):
            pass
        svg_heatmap(cfg.output_dir / "phase_diagram.svg", sig, eps, pd.classification, curve,
                    title=f"r={model.r:g}, K={model.K:g}, Omega={model.Omega:g}")
    return " ".join(f"{k}={v}" for k, v in counts.items())


def cmd_simulate(cfg):
    opts = cfg.options
    if _is_builtin(cfg):
        p = _logistic_params(cfg)
        spec = logistic_spec(p, ConstantHistory([p.K * (1.0 + opts.perturb)]))
    else:
        spec, p = _load(cfg), None
    if opts.method == "direct":
        traj = integrate_direct(spec, opts.T, opts.h or 1e-2)
    elif p is not None:
        general = transform(spec)
        system = logistic_system(p, general.initial_state[canonical_order(general)])
        traj = integrate_ode(system, opts.T, opts.method, opts.h)
    else:
        traj = integrate_ode(transform(spec), opts.T, opts.method, opts.h)
    labels = traj.labels or [f"X{i}" for i in range(traj.states.shape[1])]
    write_csv(cfg.output_dir / "trajectory.csv", ["t", *labels],
              (np.concatenate([[t], s]) for t, s in zip(traj.times, traj.states)))
    if opts.plot:
        svg_lines(cfg.output_dir / "trajectory.svg", traj.times, {labels[0]: traj.states[:, 0]},
                  ylabel=labels[0], title="trajectory")
    return f"steps={len(traj) - 1} t_end={traj.times[-1]:g} x_end={traj.states[-1, 0]:.10g} blowup={traj.blowup}"


def cmd_continuity(cfg):
    opts = cfg.options
    if _is_builtin(cfg):
        p = _logistic_params(cfg)
        eps2 = opts.epsilon2 if opts.epsilon2 is not None else p.epsilon + 0.05
        spec1 = logistic_spec(p)
        spec2 = logistic_spec(p.with_(epsilon=eps2), spec1.history)
    else:
        if not opts.input2:
            raise ValidationError("continuity with --input needs --input2")
        spec1, spec2 = _load(cfg), _load(cfg, opts.input2)
    cert = continuity_gap(spec1, spec2, opts.T, opts.h)
    write_json(cfg.output_dir / "continuity.json", cert.to_dict())
    return f"delta_T={cert.delta_T:.6g} bound={cert.bound:.6g} satisfied={cert.satisfied}"


def cmd_verify(cfg):
    results = run_suite(cfg.options.suite, cfg.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
    write_json(cfg.output_dir / "verify.json", [{"check": n, "passed": ok, "detail": d} for n, ok, d in results])
    failed = sum(1 for _, ok, _ in results if not ok)
    if failed:
        raise ArithmeticError(f"{failed} of {len(results)} checks failed")
    return f"suite={cfg.options.suite} seed={cfg.seed} passed={len(results)}"


HANDLERS = {
    "transform": cmd_transform,
    "equilibrium": cmd_equilibrium,
    "stability": cmd_stability,
    "hopf": cmd_hopf,
    "phase-diagram": cmd_phase_diagram,
    "simulate": cmd_simulate,
    "continuity": cmd_continuity,
    "verify": cmd_verify,
}


def run(cfg: RunConfig) -> int:
    try:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        if not os.access(cfg.output_dir, os.W_OK):
            raise ValidationError(f"output directory {cfg.output_dir} is not writable")
        summary = HANDLERS[cfg.command](cfg)
    except NUMERICAL_ERRORS as exc:
        print(f"lctdelay: error[numerical]: {_one_line(exc)}", file=sys.stderr)
        return 2
    except (ValidationError, SpecError, ValueError, KeyError, OSError) as exc:
        print(f"lctdelay: error[validation]: {_one_line(exc)}", file=sys.stderr)
        return 1
    print(f"lctdelay {cfg.command}: ok {summary}")
    return 0


def _one_line(exc) -> str:
    text = str(exc) or type(exc).__name__
    return " ".join(text.split())


def main(argv=None) -> int:
    parser = build_parser()
    try:
        opts = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        overrides = _overrides(opts.set)
    except ValidationError as exc:
        print(f"lctdelay: error[validation]: {_one_line(exc)}", file=sys.stderr)
        return 1
    cfg = RunConfig(opts.command, opts.input, Path(opts.out), overrides, opts.seed, opts)
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
