"""
Command line front end

Exit codes: 0 success, 2 solver failure (partial results are still written),
3 invalid configuration or arguments outside the supported range.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .config import BOUNDARIES, PRESETS, PROBLEMS, ConfigError, RunConfig, preset
from .harness import (
    ConvergenceAborted,
    ConvergenceResult,
    emit_outputs,
    run_convergence,
)

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_CONFIG = 3


class _Parser(argparse.ArgumentParser):
    """ArgumentParser reporting usage errors as ConfigError"""

    def error(self, message: str):
        raise ConfigError(f"❌ {self.prog}: {message}")


def _parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="gpwtdg",
        description="Trefftz DG convergence studies with generalized plane waves",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser(
        "solve",
        help="Run one refinement study",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    solve.add_argument(
        "--problem", choices=PROBLEMS, default="airy", help="Model problem"
    )
    solve.add_argument("--kappa", type=float, default=15.0, help="Wavenumber")
    solve.add_argument(
        "--n", type=int, default=2, help="Direction parameter, p = 2n + 1"
    )
    solve.add_argument("--q", type=int, default=3, help="GPW approximation order")
    solve.add_argument(
        "--gamma0", type=float, default=1.0, help="Stabilization scale"
    )
    solve.add_argument(
        "--gamma-exp",
        type=float,
        default=3.0,
        help="Stabilization exponent r in gamma0 h^r",
    )
    solve.add_argument(
        "--levels",
        type=int,
        default=5,
        help="Number of meshes including the initial one",
    )
    solve.add_argument(
        "--quad-order", type=int, help="Edge quadrature points, overrides the defaults"
    )
    solve.add_argument(
        "--mesh", type=Path, help="Initial mesh file instead of the 8 triangle square"
    )
    solve.add_argument(
        "--boundary",
        choices=BOUNDARIES,
        default="robin",
        help="Outer boundary condition",
    )
    solve.add_argument(
        "--weber-a", type=float, default=5.0, help="Weber parameter a"
    )
    solve.add_argument(
        "--theta",
        type=float,
        default=0.0,
        help="Plane wave direction for the constant problem",
    )
    solve.add_argument(
        "--out", type=Path, default=Path("results"), help="Output directory"
    )

    sweep = sub.add_parser(
        "sweep",
        help="Run every study of a preset",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sweep.add_argument(
        "--preset", required=True, help=f"One of: {', '.join(sorted(PRESETS))}"
    )
    sweep.add_argument(
        "--out", type=Path, default=Path("results"), help="Output directory"
    )
    return parser


def _configs(args: argparse.Namespace) -> List[RunConfig]:
    if args.command == "sweep":
        return preset(args.preset, out=args.out)
    return [
        RunConfig(
            problem=args.problem,
            kappa=args.kappa,
            n=args.n,
            q=args.q,
            gamma0=args.gamma0,
            gamma_exp=args.gamma_exp,
            levels=args.levels,
            quad_order=args.quad_order,
            mesh=args.mesh,
            out=args.out,
            boundary=args.boundary,
            weber_a=args.weber_a,
            theta=args.theta,
        )
    ]


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line

    :param argv: (optional) arguments, sys.argv[1:] when None

    :return: exit code
    """
    try:
        args = _parser().parse_args(argv)
        configs = _configs(args)
    except ConfigError as err:
        print(err)
        return EXIT_CONFIG

    stem = args.preset if args.command == "sweep" else configs[0].label
    results: List[ConvergenceResult] = []
    code = EXIT_OK
    for config in configs:
        try:
            results.append(run_convergence(config))
        except ConvergenceAborted as err:
            print(err)
            results.append(err.result)
            code = EXIT_SOLVER
            break
        except (ValueError, FileNotFoundError) as err:
            print(err)
            return EXIT_CONFIG

    emit_outputs(results, args.out, stem)
    if code == EXIT_OK:
        print(f"✅ {len(results)} studies complete")
    return code


if __name__ == "__main__":
    sys.exit(main())
