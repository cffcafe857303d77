"""Command-line harness: ``gen``, ``run``, ``eval`` and ``backproject``.

Exit codes: 0 on success, 1 when the solver aborts, 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from .exceptions import ConfigurationError, InfeasiblePackingError, MalformedParameterError
from .experiment import (
    DEFAULT_MU,
    DEFAULT_RADIUS,
    DEFAULT_SIGMA_FACTOR,
    build_report,
    evaluate,
    generate_instance,
    load_instance,
    report_estimate,
    run_pipeline,
    save_json,
    write_backprojection_csv,
    write_spikes_csv,
    write_trajectory_csv,
)
from .initializer import backproject, make_grid
from .optimizer import SolverConfig

EXIT_OK, EXIT_ABORT, EXIT_BAD_INPUT = 0, 1, 2

log = logging.getLogger("spikepgd")

BAD_INPUT = (ConfigurationError, MalformedParameterError, InfeasiblePackingError,
             OSError, ValueError, KeyError)


def _add_gen(sub):
    p = sub.add_parser("gen", help="generate a random separated instance")
    p.add_argument("--k", type=int, required=True, help="number of spikes")
    p.add_argument("--d", type=int, default=2, help="dimension (default 2)")
    p.add_argument("--eps", type=float, required=True, help="minimum separation")
    p.add_argument("--scheme", choices=["gaussian", "torus_regular"], default="gaussian")
    p.add_argument("--m", type=int, default=None, help="Gaussian frequency count")
    p.add_argument("--mu", type=float, default=None,
                   help=f"oversampling factor, m = round(mu k d) when --m is absent (default {DEFAULT_MU})")
    p.add_argument("--sigma", type=float, default=None,
                   help=f"frequency scale, frequencies ~ N(0, sigma^-2 I) (default {DEFAULT_SIGMA_FACTOR} eps)")
    p.add_argument("--f-max", type=int, default=None, help="torus cutoff (default ceil(2/eps))")
    p.add_argument("--R", type=float, default=DEFAULT_RADIUS, help="ball radius for Euclidean domains")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amp-min", type=float, default=0.5)
    p.add_argument("--amp-max", type=float, default=1.5)
    p.add_argument("--positive", action="store_true", help="disable random amplitude signs")
    p.add_argument("--noise-energy", type=float, default=0.0, help="l2 norm of the added noise")
    p.add_argument("--out", default="-", help="instance path (default stdout)")


def _add_solver_flags(p):
    p.add_argument("--eps", type=float, default=None, help="separation (default: the instance's)")
    p.add_argument("--k-in", type=int, default=None, help="initial spike count (default 4k)")
    p.add_argument("--eps-g", type=float, default=None, help="grid step (default eps)")
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--project-after", type=int, default=20)
    p.add_argument("--no-projection", action="store_true", help="plain gradient descent")
    p.add_argument("--merge-weight-mode", choices=["pre", "post"], default="pre")
    p.add_argument("--ls-shrink", type=float, default=0.5)
    p.add_argument("--ls-grow", type=float, default=2.0)
    p.add_argument("--ls-max-tries", type=int, default=30)
    p.add_argument("--no-ls-refine", action="store_true",
                   help="accept the first decreasing step without further shrinking")
    p.add_argument("--tol-g-abs", type=float, default=None, help="default 1e-10 ||y||^2")
    p.add_argument("--tol-g-rel", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=0, help="recorded only; runs are deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spikepgd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_gen(sub)

    p = sub.add_parser("run", help="back-project, threshold and descend")
    p.add_argument("instance")
    _add_solver_flags(p)
    p.add_argument("--out", default="run_out", help="output directory")

    p = sub.add_parser("eval", help="metrics of a report against its instance")
    p.add_argument("report")
    p.add_argument("instance")
    p.add_argument("--kernel-sigma", type=float, default=None, help="default eps/5")
    p.add_argument("--radius", type=float, default=None, help="matching radius (default eps/2)")
    p.add_argument("--out", default=None, help="also write the table as CSV")

    p = sub.add_parser("backproject", help="dump the grid back-projection as CSV")
    p.add_argument("instance")
    p.add_argument("--eps-g", type=float, default=None, help="grid step (default eps)")
    p.add_argument("--out", default="backprojection.csv")
    return parser


def solver_config(args, inst) -> SolverConfig:
    return SolverConfig(
        eps=inst.eps if args.eps is None else args.eps,
        k_in=4 * inst.k if args.k_in is None else args.k_in,
        max_iters=args.max_iters,
        project_after=math.inf if args.no_projection else args.project_after,
        ls_shrink=args.ls_shrink,
        ls_grow=args.ls_grow,
        ls_max_tries=args.ls_max_tries,
        tol_g_abs=args.tol_g_abs,
        tol_g_rel=args.tol_g_rel,
        merge_weight_mode=args.merge_weight_mode,
        ls_refine=not args.no_ls_refine,
    )


def cmd_gen(args) -> int:
    inst = generate_instance(
        args.k, args.d, args.eps, args.scheme, m=args.m, mu=args.mu, sigma=args.sigma,
        f_max=args.f_max, R=args.R, seed=args.seed, amp_min=args.amp_min, amp_max=args.amp_max,
        random_sign=not args.positive, noise_energy=args.noise_energy,
    )
    save_json(inst.to_dict(), args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    inst = load_instance(args.instance)
    cfg = solver_config(args, inst)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_pipeline(inst, cfg, args.eps_g)
    d = inst.domain.d
    write_backprojection_csv(result.backprojection, out / "backprojection.csv")
    write_spikes_csv(result.theta_init, d, out / "init.csv")
    write_trajectory_csv(result.trace, d, out / "trajectory.csv")
    report = build_report(inst, result)
    report["seed"] = args.seed
    save_json(report, out / "report.json")
    met = report["metrics"]
    print(f"status={report['status']} iterations={report['iterations']} stop={report['stop_reason']} "
          f"k_est={met['k_est']} matched={met['matched']}/{met['k_true']} "
          f"max_pos_err={met['max_pos_err']:.3e} g={met['g_final']:.3e} wall={report['wall_time']:.2f}s")
    if result.aborted:
        log.error("solver aborted: %s (partial trace saved in %s)", result.aborted, out)
        return EXIT_ABORT
    return EXIT_OK


def cmd_eval(args) -> int:
    inst = load_instance(args.instance)
    report = json.loads(Path(args.report).read_text())
    estimate = report_estimate(report, inst.domain)
    metrics = evaluate(estimate, inst, args.kernel_sigma, args.radius)
    lines = ["metric,value"] + [f"{k},{v!r}" for k, v in metrics.items()]
    print("\n".join(lines))
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_backproject(args) -> int:
    inst = load_instance(args.instance)
    A = inst.operator()
    step = inst.eps if args.eps_g is None else args.eps_g
    z = backproject(inst.y, A, inst.backprojection_weights(A), make_grid(inst.domain, step))
    write_backprojection_csv(z, args.out)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "eval": cmd_eval, "backproject": cmd_backproject}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except BAD_INPUT as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
