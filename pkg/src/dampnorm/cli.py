"""Command-line entry point: ``dampnorm {eval,optimize,sweep,verify,decay}``."""

import argparse
import io
import sys

import numpy as np

from . import config as cfgmod
from .criteria import criterion_value
from .errors import DampNormError
from .linalg import spectral_abscissa
from .modal import modal_form, tilde_system
from .model import assemble_damping
from .optimize import (best_configuration, optimize_viscosities, placement_sweep,
                       resolve_threads)
from .theory import alpha_decay_curve, has_feedthrough, verify_global_optimum

SWEEP_HEADER = "i,j,v1,v2,f,evals,converged,bound_active"


def g12(x):
    """Format with 12 significant digits."""
    return f"{float(x):.12g}"


def _emit_csv(path, header, rows):
    buf = io.StringIO(newline="")
    buf.write(header + "\n")
    for r in rows:
        buf.write(",".join(r) + "\n")
    text = buf.getvalue()
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def _p_values(cfg):
    c = cfg.criterion
    return list(c.p_grid) if c.p_grid is not None else [c.p]


def cmd_eval(cfg, out=None):
    out = sys.stdout if out is None else out
    model = cfgmod.build_model(cfg)
    mf = modal_form(model.M, model.K)
    ss = tilde_system(mf, assemble_damping(model), model.B2, model.C1, model.C2)
    v = model.viscosities
    print(f"model: {model.name} (n={model.n}, dampers={len(model.dampers)})", file=out)
    print("viscosities: " + " ".join(g12(x) for x in v), file=out)
    print(f"spectral_abscissa: {g12(spectral_abscissa(ss.A))}", file=out)
    print("omega: " + " ".join(g12(w) for w in mf.omega), file=out)
    rows = []
    for p in _p_values(cfg):
        spec = cfgmod.build_criterion(cfg, p)
        f = criterion_value(model, spec, v, mf)
        print(f"{spec.flavor} p={g12(p)}: norm={g12(f)} norm_sq={g12(f * f)}", file=out)
        rows.append([g12(p), g12(f), g12(f * f)])
    _emit_csv(cfg.output.path, "p,norm,norm_sq", rows)
    return 0


def cmd_optimize(cfg, out=None):
    out = sys.stdout if out is None else out
    model = cfgmod.build_model(cfg)
    bounds = cfgmod.build_bounds(cfg, model)
    opts = cfgmod.build_options(cfg)
    mf = modal_form(model.M, model.K)
    x0 = cfg.optimizer.x0
    r = len(model.dampers)
    vcols = ",".join(f"v{k + 1}" for k in range(r))
    rows = []
    for p in _p_values(cfg):
        spec = cfgmod.build_criterion(cfg, p)
        res = optimize_viscosities(model, spec, bounds, x0, opts, cfg.optimizer.method, mf)
        print(f"p={g12(p)} v=" + " ".join(g12(x) for x in res.x_opt)
              + f" f={g12(res.f_opt)} f_sq={g12(res.f_opt ** 2)} evals={res.evals}"
              + f" converged={str(res.converged).lower()}", file=out)
        rows.append([g12(p)] + [g12(x) for x in res.x_opt]
                    + [g12(res.f_opt), g12(res.f_opt ** 2), str(res.evals),
                       str(res.converged).lower(),
                       str(bool(np.any(res.bound_active))).lower()])
    _emit_csv(cfg.output.path, f"p,{vcols},f,f_sq,evals,converged,bound_active", rows)
    return 0


def sweep_csv(rows):
    """Sweep rows as CSV text with the fixed header."""
    lines = []
    for r in rows:
        lines.append([str(r.i), str(r.j)] + [g12(x) for x in r.v_opt]
                     + [g12(r.f_opt), str(r.evals), str(r.converged).lower(),
                        str(r.bound_active).lower()])
    return lines


def cmd_sweep(cfg, out=None):
    out = sys.stdout if out is None else out
    template = cfgmod.build_model(cfg)
    if len(template.dampers) != 2:
        raise DampNormError("placement sweeps need a two-damper model")
    bounds = cfgmod.build_bounds(cfg, template)
    opts = cfgmod.build_options(cfg)
    pairs = cfgmod.parse_positions(cfg.optimizer.positions, template.n)
    spec = cfgmod.build_criterion(cfg)
    x0 = "midpoint" if cfg.optimizer.x0 is None else cfg.optimizer.x0
    rows = placement_sweep(template, pairs, spec, bounds, x0, opts,
                           resolve_threads(cfg.optimizer.threads), method=cfg.optimizer.method)
    text = _emit_csv(cfg.output.path, SWEEP_HEADER, sweep_csv(rows))
    if not cfg.output.path:
        out.write(text)
    best = best_configuration(rows)
    print(f"best: ({best.i}, {best.j}) v=" + " ".join(g12(x) for x in best.v_opt)
          + f" f={g12(best.f_opt)}", file=out)
    failed = sum(1 for r in rows if r.error)
    if failed:
        print(f"failed placements: {failed}", file=out)
    return 0


def _decay_rows(cfg, model):
    curve = alpha_decay_curve(model, cfg.optimizer.alphas)
    return [[g12(a), g12(f)] for a, f in curve]


def cmd_verify(cfg, out=None):
    out = sys.stdout if out is None else out
    model = cfgmod.build_model(cfg)
    o = cfg.optimizer
    rep = verify_global_optimum(model.M, model.K, cfg.criterion.p, o.trials, o.seed)
    print(f"p: {g12(rep.p)}", file=out)
    print(f"value_at_star: {g12(rep.value_at_star)}", file=out)
    print(f"theoretical_min: {g12(rep.theoretical_min)}", file=out)
    print(f"min_perturbed: {g12(rep.min_perturbed)}", file=out)
    print(f"trials: {rep.perturbation_trials} violations: {rep.violations}", file=out)
    for note in rep.notes:
        print(f"note: {note}", file=out)
    if not has_feedthrough(model):
        print("decay: skipped, C2 B2 = 0 for this model", file=out)
        rows = []
    else:
        rows = _decay_rows(cfg, model)
    for a, f in rows:
        print(f"decay alpha={a} h2={f}", file=out)
    _emit_csv(cfg.output.path, "alpha,h2_norm", rows)
    return 0 if rep.ok else 1


def cmd_decay(cfg, out=None):
    out = sys.stdout if out is None else out
    model = cfgmod.build_model(cfg)
    rows = _decay_rows(cfg, model)
    text = _emit_csv(cfg.output.path, "alpha,h2_norm", rows)
    if not cfg.output.path:
        out.write(text)
    return 0


COMMANDS = {"eval": cmd_eval, "optimize": cmd_optimize, "sweep": cmd_sweep,
            "verify": cmd_verify, "decay": cmd_decay}


def build_parser():
    ap = argparse.ArgumentParser(prog="dampnorm", description="Damping optimization with mixed H2 criteria.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="INI configuration file")
    ap.add_argument("--out", help="CSV output path")
    ap.add_argument("--threads", type=int, help="worker threads (default: DAMPNORM_THREADS or 1)")
    ap.add_argument("--p", type=float, help="override the criterion weight p")
    ap.add_argument("--model", choices=cfgmod.MODEL_KINDS, help="override the model kind")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load_config(args.config) if args.config else cfgmod.RunConfig()
        cfg = cfgmod.with_overrides(cfg, p=args.p, model=args.model, threads=args.threads, out=args.out)
        return COMMANDS[args.command](cfg)
    except (DampNormError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
