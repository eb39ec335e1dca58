"""Command-line interface: ``sparse-legendre <subcommand> ...``.

Results go to stdout as JSON (sorted keys) or, with ``--out``, to a CSV
file.  Unknown flags exit with status 2; numerical or configuration
failures exit with status 1 and a JSON diagnostic on stdout.
"""
import argparse
import csv
import json
import math
import sys

import numpy as np

from .experiments import TrialConfig, _canonical_method, phase_diagram, run_cell, run_trials, solve_instance
from .funcapprox import FunctionModel, reconstruct_from_samples
from .orthopoly import OrthoBasis
from .rip import rip_exhaustive, rip_montecarlo
from .sampling import sample_chebyshev, sample_uniform
from .sensing import build_system

__all__ = ["main", "build_parser", "FUNCTIONS"]

FULL_SCALE = {"n": 300, "trials": 50}

FUNCTIONS = {
    "decay3": lambda: FunctionModel.from_decay(lambda k: (1.0 + np.asarray(k, float)) ** -3.0),
    "decay2": lambda: FunctionModel.from_decay(lambda k: (1.0 + np.asarray(k, float)) ** -2.0),
}


def _basis(text):
    try:
        return OrthoBasis.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _method(text):
    try:
        return _canonical_method(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fraction(text):
    num, _, den = text.partition("/")
    value = float(num) / float(den) if den else float(num)
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"not a finite number: {text}")
    return value


def _trial_flags(p, trials=True):
    p.add_argument("--basis", type=_basis, default=OrthoBasis.legendre(),
                   help="legendre, chebyshev or jacobi:a,b (default legendre)")
    p.add_argument("--n", type=int, required=True, help="number of basis functions N")
    p.add_argument("--m", type=int, required=True, help="number of samples")
    p.add_argument("--s", type=int, required=True, help="sparsity")
    p.add_argument("--method", type=_method, default="BP", help="BP, BPDN, CoSaMP or IHT")
    p.add_argument("--eps", type=float, default=0.0, help="BPDN noise level")
    p.add_argument("--noise-std", type=float, default=0.0, help="std of additive sample noise")
    p.add_argument("--threshold", type=float, default=1e-4,
                   help="relative l2 error counted as success")
    p.add_argument("--max-iters", type=int, default=None, help="solver iteration cap")
    p.add_argument("--seed", type=int, required=True)
    if trials:
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", help="write a CSV file instead of JSON to stdout")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sparse-legendre",
        description="Sparse orthogonal-polynomial recovery experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("recover", help="one seeded recovery instance")
    _trial_flags(p, trials=False)

    p = sub.add_parser("trials", help="success rate over seeded trials")
    _trial_flags(p)

    p = sub.add_parser("phase-diagram", help="BP success rates over (s/m, m/N)")
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--steps", type=int, default=8)
    p.add_argument("--trials", type=int, default=25)
    p.add_argument("--max-ratio", type=float, default=0.7)
    p.add_argument("--basis", type=_basis, default=OrthoBasis.legendre())
    p.add_argument("--threshold", type=float, default=1e-4)
    p.add_argument("--full-scale", action="store_true",
                   help="N=300 with 50 trials per cell (overrides --n and --trials)")
    p.add_argument("--cell", nargs=2, type=_fraction, metavar=("S_OVER_M", "M_OVER_N"),
                   help="run a single cell only")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("rip", help="restricted isometry constant of a sampled system")
    p.add_argument("--basis", type=_basis, default=OrthoBasis.legendre())
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--mode", choices=("exhaustive", "montecarlo"), default="exhaustive")
    p.add_argument("--mc-trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("approx", help="sample-based reconstruction of a test function")
    p.add_argument("--function", choices=sorted(FUNCTIONS), default="decay3")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--q", type=_fraction, default=2 / 3)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--C", type=float, default=1.0, dest="C")
    p.add_argument("--eps-rule", choices=("rate", "tail"), default="rate")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("sample", help="draw sample points")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--density", choices=("chebyshev", "uniform"), default="chebyshev")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    return parser


def _opts(args):
    return {} if args.max_iters is None else {"max_iters": args.max_iters}


def _config(args, n_trials):
    return TrialConfig(args.n, args.m, args.s, basis=args.basis, noise_std=args.noise_std,
                       eps=args.eps, method=args.method, base_seed=args.seed,
                       n_trials=n_trials, success_threshold=args.threshold,
                       solver_opts=_opts(args))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x):
    return f"{x:.6f}"


def _cmd_recover(args):
    cfg = _config(args, 1)
    inst = solve_instance(cfg, args.seed)
    rel = inst.rel_error
    out = {
        "config": cfg.to_dict(),
        "system": inst.system.summary(),
        "truth": inst.truth.tolist(),
        "relative_error": rel,
        "l2_error": inst.l2_error,
        "success": rel <= cfg.success_threshold,
        "result": inst.result.to_dict(),
    }
    if args.out:
        _write_csv(args.out, ["index", "truth", "estimate"],
                   [[k, repr(float(a)), repr(float(b))]
                    for k, (a, b) in enumerate(zip(inst.truth, inst.estimate))])
        return None
    return out


def _cmd_trials(args):
    summary = run_trials(_config(args, args.trials), workers=args.workers)
    if args.out:
        _write_csv(args.out,
                   ["index", "seed", "rel_error", "l2_error", "success", "iterations", "converged"],
                   [[t.index, t.seed, repr(t.rel_error), repr(t.l2_error), int(t.success),
                     t.iterations, int(t.converged)] for t in summary.trials])
        return None
    return summary.to_dict()


def _cmd_phase(args):
    n, trials = args.n, args.trials
    if args.full_scale:
        n, trials = FULL_SCALE["n"], FULL_SCALE["trials"]
    if args.cell:
        s_m, m_n = args.cell
        rate = run_cell(n, s_m, m_n, trials, args.seed, args.basis, args.threshold)
        row = [_fmt(s_m), _fmt(m_n), _fmt(rate), trials]
        if args.out:
            _write_csv(args.out, ["s_over_m", "m_over_n", "success_rate", "trials"], [row])
            return None
        return {"s_over_m": s_m, "m_over_n": m_n, "success_rate": rate, "trials": trials}
    pd = phase_diagram(n, args.steps, trials, args.seed, max_ratio=args.max_ratio,
                       basis=args.basis, success_threshold=args.threshold,
                       workers=args.workers)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(pd.to_csv())
        return None
    return pd.to_dict()


def _cmd_rip(args):
    system = build_system(args.basis, sample_chebyshev(args.m, args.seed), args.n)
    if args.mode == "exhaustive":
        report = rip_exhaustive(system.normalized, args.s)
    else:
        report = rip_montecarlo(system.normalized, args.s, args.mc_trials, args.seed)
    out = report.to_dict()
    out["system"] = system.summary()
    if args.out:
        _write_csv(args.out, ["s", "delta_lower_bound", "supports_examined", "mode"],
                   [[report.s, repr(report.delta_lower_bound), report.supports_examined,
                     report.mode]])
        return None
    return out


def _cmd_approx(args):
    f = FUNCTIONS[args.function]()
    coeffs, N, m, report = reconstruct_from_samples(
        f, args.s, args.q, args.alpha, args.seed, C=args.C, eps_rule=args.eps_rule)
    if args.out:
        _write_csv(args.out, ["k", "coeff"], [[k, repr(float(c))] for k, c in enumerate(coeffs)])
        return None
    return {"function": args.function, "error_report": report.to_dict(),
            "coeffs": coeffs.tolist()}


def _cmd_sample(args):
    draw = sample_chebyshev if args.density == "chebyshev" else sample_uniform
    samples = draw(args.m, args.seed)
    if args.out:
        _write_csv(args.out, ["x"], [[repr(float(x))] for x in samples.points])
        return None
    return samples.to_dict()


COMMANDS = {
    "recover": _cmd_recover,
    "trials": _cmd_trials,
    "phase-diagram": _cmd_phase,
    "rip": _cmd_rip,
    "approx": _cmd_approx,
    "sample": _cmd_sample,
}


def _clean(obj):
    """JSON-safe copy: ndarrays to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(obj, stream):
    stream.write(json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n")


def main(argv=None, stdout=None):
    """Run the CLI and return its exit status."""
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        out = COMMANDS[args.command](args)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        _emit({"error": type(exc).__name__, "message": str(exc), "command": args.command},
              stdout)
        return 1
    if out is not None:
        _emit(out, stdout)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
