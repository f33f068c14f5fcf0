"""Command-line entry point: ``robustmdp validate|solve|waterpour|kappa|bench``."""
import argparse
import json
import sys

import numpy as np

from robustmdp import backend, bench, mdpfile
from robustmdp.dispersion import check_norm, dispersion
from robustmdp.mdp import FILE_ATOL, validate_mdp
from robustmdp.robust_bellman import radii_warnings
from robustmdp.solver import SolveConfig, solve
from robustmdp.water_pouring import WaterPouringProblem, solve as pour

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_UNREADABLE = 2
EXIT_NOT_CONVERGED = 3


def _floats(text):
    return [float(x) for x in text.replace(" ", "").split(",") if x]


def _sizes(text):
    out = []
    for item in text.split(","):
        s, a = item.lower().split("x")
        out.append((int(s), int(a)))
    return out


def _load(path):
    try:
        return mdpfile.load(path)
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror}", file=sys.stderr)
    except mdpfile.MdpFileError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
    return None


def cmd_validate(args):
    loaded = _load(args.path)
    if loaded is None:
        return EXIT_UNREADABLE
    m, u = loaded
    problems = validate_mdp(m, FILE_ATOL)
    for msg in problems:
        print(f"violation: {msg}")
    if not problems:
        for msg in radii_warnings(m, u):
            print(msg)
        print("ok")
    return EXIT_INVALID if problems else EXIT_OK


def cmd_solve(args):
    loaded = _load(args.path)
    if loaded is None:
        return EXIT_UNREADABLE
    m, u = loaded
    problems = validate_mdp(m, FILE_ATOL)
    if problems:
        for msg in problems:
            print(f"violation: {msg}", file=sys.stderr)
        return EXIT_INVALID
    cfg = SolveConfig(target_eps=args.eps, max_sweeps=args.max_sweeps)
    result = solve(m, u, cfg, backend_name=args.backend)
    text = json.dumps(mdpfile.solve_report(result, m, u, args.eps), indent=1, allow_nan=False) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not result.converged:
        print(f"warning: not converged after {result.sweeps} sweeps "
              f"(residual {result.final_residual:.3g})", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_waterpour(args):
    prob, order = WaterPouringProblem.from_unsorted(_floats(args.b), args.alpha, check_norm(args.p))
    res = pour(prob, backend_name=args.backend)
    weights = np.empty_like(res.weights)
    weights[order] = res.weights
    print(f"zeta {res.zeta!r}")
    print(f"chi {res.chi}")
    print("weights " + " ".join(repr(float(w)) for w in weights))
    print(f"residual {res.residual!r}")
    return EXIT_OK


def cmd_kappa(args):
    res = dispersion(np.array(_floats(args.v)), check_norm(args.p))
    print(f"omega {res.omega!r}")
    print(f"kappa {res.kappa!r}")
    return EXIT_OK


def cmd_bench(args):
    def progress(rec):
        print(f"S={rec.S} A={rec.A} rect={rec.rect} p={rec.p} sweeps={rec.sweeps} "
              f"per_sweep={rec.time_per_sweep:.3e}s", file=sys.stderr)

    records = bench.run_bench(
        _sizes(args.sizes),
        [check_norm(p) for p in args.p.split(",")],
        args.rect.split(","),
        trials=args.trials,
        seed=args.seed,
        eps=args.eps,
        gamma=args.gamma,
        backend_name=args.backend,
        progress=None if args.quiet else progress,
    )
    bench.write_csv(records, args.out)
    ratios_path = args.ratios or args.out.rsplit(".", 1)[0] + "_ratios.csv"
    bench.write_ratios(bench.ratio_rows(records), ratios_path)
    print(f"wrote {args.out} and {ratios_path}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="robustmdp", description="Rectangular L_p robust MDP solver")
    parser.add_argument("--backend", choices=backend.available(), default=None,
                        help="kernel implementation (default: compiled when available)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="robust value iteration on a model file")
    p.add_argument("path")
    p.add_argument("--eps", type=float, default=1e-6, help="target sup-norm accuracy")
    p.add_argument("--max-sweeps", type=int, default=100_000)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("waterpour", help="solve one water-pouring problem")
    p.add_argument("b", help="comma-separated values")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--p", default="2")
    p.set_defaults(func=cmd_waterpour)

    p = sub.add_parser("kappa", help="p-mean and p-variance of a vector")
    p.add_argument("v", help="comma-separated values")
    p.add_argument("--p", default="2")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("bench", help="scaling benchmark to CSV")
    p.add_argument("--sizes", default="50x10,100x20", help="comma-separated SxA pairs")
    p.add_argument("--p", default="1,2", help="comma-separated norm indices")
    p.add_argument("--rect", default="sa,s", help="comma-separated rectangularities")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--out", default="bench.csv")
    p.add_argument("--ratios", help="ratio CSV path (default: <out>_ratios.csv)")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNREADABLE


if __name__ == "__main__":
    sys.exit(main())
