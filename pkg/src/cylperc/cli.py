"""Command-line front end: reproducible batch runs with CSV output.

Subcommands: mu, sample, check, slice, experiment, describe.  Exit codes:
0 success, 2 configuration error, 3 precondition violation, 4 internal
invariant violation.  Flags override an optional key=value config file,
which overrides defaults; master seeds are required for every stochastic
command.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import experiments
from .errors import ConfigError, InvariantViolation, PreconditionError
from .geometry import PlanarSquare, PlaneSpec
from .measure import mu_hit_ball_exact, mu_hit_mc, mu_joint_hit_mc
from .measure import MeasureValue
from .geometry import Ball
from .sampler import WindowSpec, load_lines, sample_process, save_lines
from .vacancy import build_slice, read_pgm_header, write_pgm

MU_CSV_HEADER = "# cylperc-mu v1"


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x != ""]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> _Parser:
    p = _Parser(prog="cylperc", description=__doc__)
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--threads", type=int, default=1,
                   help="thread budget (output is seed-deterministic at any value)")
    sub = p.add_subparsers(dest="command", required=True)

    mu = sub.add_parser("mu", help="hitting-measure values")
    mu.add_argument("--mode", choices=["exact", "mc", "joint"], default="exact")
    mu.add_argument("--d", type=int, default=3)
    mu.add_argument("--r", type=float, default=1.0)
    mu.add_argument("--R", type=float, default=None, help="envelope ball radius (mc mode)")
    mu.add_argument("--alpha", type=float, default=None, help="center distance (joint mode)")
    mu.add_argument("--n", type=int, default=100_000)
    mu.add_argument("--seed", type=int, default=None)
    mu.add_argument("--out", default=None)

    sp = sub.add_parser("sample", help="draw one line-process realization")
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--R", type=float, default=5.0)
    sp.add_argument("--u", type=float, default=1.0)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--replicate", type=int, default=0)
    sp.add_argument("--out", default=None)

    ck = sub.add_parser("check", help="validate a line-set file")
    ck.add_argument("file")

    sl = sub.add_parser("slice", help="export a planar occupancy bitmap (PGM)")
    sl.add_argument("--d", type=int, default=3)
    sl.add_argument("--u", type=float, default=1.0)
    sl.add_argument("--side", type=float, default=20.0)
    sl.add_argument("--eps", type=float, default=0.1)
    sl.add_argument("--seed", type=int, default=None)
    sl.add_argument("--replicate", type=int, default=0)
    sl.add_argument("--out", required=True)

    ex = sub.add_parser("experiment", help="run a named experiment")
    ex.add_argument("name", choices=[
        "mu-scaling", "square-scaling", "cov-decay", "occupied-crossing",
        "vacant-reach", "triangle-contrast", "d2-sanity",
    ])
    ex.add_argument("--d", type=int, default=3)
    ex.add_argument("--u", type=float, default=1.0)
    ex.add_argument("--u-list", type=_float_list, default=None)
    ex.add_argument("--r", type=float, default=1.0)
    ex.add_argument("--s", type=float, default=4.0)
    ex.add_argument("--alphas", type=_float_list, default=[16, 32, 64, 128])
    ex.add_argument("--rs", type=_float_list, default=[16, 32, 64, 128])
    ex.add_argument("--separations", type=_float_list, default=[8, 16, 32, 64])
    ex.add_argument("--a", type=_float_list, default=[27, 81, 243],
                    help="triangle scales")
    ex.add_argument("--scales", type=_float_list, default=None,
                    help="explicit crossing scales (overrides the schedule)")
    ex.add_argument("--a0", type=float, default=10.0)
    ex.add_argument("--growth", choices=["power32", "power5", "geometric"],
                    default="power5")
    ex.add_argument("--n-levels", type=int, default=3)
    ex.add_argument("--R", type=float, default=8.0)
    ex.add_argument("--eps", type=float, default=0.1)
    ex.add_argument("--n", type=int, default=200_000)
    ex.add_argument("--reps", type=int, default=200)
    ex.add_argument("--seed", type=int, default=None)
    ex.add_argument("--out", default=None)

    de = sub.add_parser("describe", help="print the header of an artifact file")
    de.add_argument("file")
    return p


def _apply_config(parser: _Parser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    try:
        with open(args.config) as f:
            entries = {}
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"malformed config line: {line!r}")
                k, v = line.split("=", 1)
                entries[k.strip()] = v.strip()
    except OSError as e:
        raise ConfigError(str(e))
    allowed = set(vars(args))
    for k in entries:
        if k not in allowed:
            raise ConfigError(f"unknown config key: {k}")
    # Flags win: apply config values only for options absent from argv.
    for k, v in entries.items():
        flag = "--" + k.replace("_", "-")
        if flag in argv:
            continue
        setattr(args, k, _coerce(getattr(args, k), v))
    return args


def _coerce(current, text: str):
    """Convert a config string to the type of the parsed default."""
    if isinstance(current, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(text)
    if isinstance(current, float):
        return float(text)
    if isinstance(current, list):
        return _float_list(text)
    if current is None:
        for cast in (int, float):
            try:
                return cast(text)
            except ValueError:
                pass
    return text


def _require_seed(args) -> int:
    if args.seed is None:
        raise ConfigError("--seed is required for stochastic commands")
    return args.seed


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as f:
            f.write(text)


def _mu_csv(rows: list[tuple]) -> str:
    lines = [MU_CSV_HEADER, "mode,d,r,alpha,n,seed,value,stderr,method"]
    for mode, d, r, alpha, n, seed, mv in rows:
        alpha_s = "" if alpha is None else f"{alpha:.10g}"
        n_s = "" if n is None else str(n)
        seed_s = "" if seed is None else str(seed)
        lines.append(
            f"{mode},{d},{r:.10g},{alpha_s},{n_s},{seed_s},"
            f"{mv.value:.10g},{mv.stderr:.10g},{mv.method}"
        )
    return "\n".join(lines) + "\n"


def cmd_mu(args) -> int:
    if args.mode == "exact":
        mv = mu_hit_ball_exact(args.d, np.zeros(args.d), args.r)
        _emit(_mu_csv([("exact", args.d, args.r, None, None, None, mv)]), args.out)
        return 0
    seed = _require_seed(args)
    if args.mode == "mc":
        R = args.R if args.R is not None else args.r
        mv = mu_hit_mc(
            args.d, Ball(np.zeros(args.d), args.r), Ball(np.zeros(args.d), R),
            args.n, seed,
        )
        _emit(_mu_csv([("mc", args.d, args.r, None, args.n, seed, mv)]), args.out)
        return 0
    if args.alpha is None:
        raise ConfigError("--alpha is required for joint mode")
    b1 = Ball(np.zeros(args.d), args.r)
    c2 = np.zeros(args.d)
    c2[0] = args.alpha
    mv = mu_joint_hit_mc(args.d, b1, Ball(c2, args.r), b1, args.n, seed)
    _emit(_mu_csv([("joint", args.d, args.r, args.alpha, args.n, seed, mv)]), args.out)
    return 0


def cmd_sample(args) -> int:
    seed = _require_seed(args)
    window = WindowSpec(args.d, np.zeros(args.d), args.R)
    sample = sample_process(window, args.u, seed, args.replicate)
    if args.out is None:
        save_lines(sys.stdout, sample)
    else:
        save_lines(args.out, sample)
    return 0


def cmd_check(args) -> int:
    try:
        sample = load_lines(args.file)
    except (OSError, ValueError, IndexError) as e:
        raise ConfigError(f"cannot parse line-set file: {e}")
    rho = sample.window.envelope_radius
    center = sample.window.center
    for i in range(sample.n_lines):
        u = sample.directions[i]
        a = sample.anchors[i]
        if abs(np.dot(u, u) - 1.0) > 1e-9:
            raise PreconditionError(f"row {i}: direction not unit")
        if abs(np.dot(u, a)) > 1e-8:
            raise PreconditionError(f"row {i}: anchor not orthogonal to direction")
        nz = np.nonzero(np.abs(u) > 1e-12)[0]
        if nz.size and u[nz[0]] < 0:
            raise PreconditionError(f"row {i}: direction sign not canonical")
        w = center - a
        off = np.sqrt(max(0.0, np.dot(w, w) - np.dot(w, u) ** 2))
        if off > rho + 1e-9:
            raise PreconditionError(f"row {i}: line misses the window envelope")
    sys.stdout.write(f"ok {sample.n_lines} lines\n")
    return 0


def cmd_slice(args) -> int:
    seed = _require_seed(args)
    half = args.side / 2.0
    window = WindowSpec(args.d, np.zeros(args.d), half * np.sqrt(2.0))
    sample = sample_process(window, args.u, seed, args.replicate,
                            experiment_id="slice")
    plane = PlaneSpec(args.d, np.zeros(args.d))
    square = PlanarSquare(plane, np.zeros(2), half)
    slc = build_slice(sample, plane, square, args.eps, with_obstacles=False)
    write_pgm(slc, args.out, {
        "d": args.d, "u": f"{args.u:.17g}", "seed": seed,
        "replicate": args.replicate,
    })
    return 0


def cmd_experiment(args) -> int:
    seed = _require_seed(args)
    name = args.name
    if name == "mu-scaling":
        rep = experiments.exp_mu_scaling(args.d, args.r, args.alphas, args.n, seed)
    elif name == "square-scaling":
        rep = experiments.exp_square_scaling(args.d, args.s, args.rs, args.n, seed)
    elif name == "cov-decay":
        rep = experiments.exp_covariance_decay(
            args.d, args.u, args.separations, args.n, seed
        )
    elif name == "occupied-crossing":
        if args.scales is not None:
            rep = _occupied_with_scales(args, seed)
        else:
            sched = experiments.ScaleSchedule(args.a0, args.growth, args.n_levels)
            rep = experiments.exp_occupied_crossing(
                args.d, args.u, sched, args.eps, args.reps, seed
            )
    elif name == "vacant-reach":
        u_list = args.u_list if args.u_list is not None else [args.u]
        rep = experiments.exp_vacant_reach(
            args.d, u_list, args.R, args.eps, args.reps, seed
        )
    elif name == "triangle-contrast":
        rep = experiments.exp_triangle_contrast(args.d, args.u, args.a,
                                                args.reps, seed)
    elif name == "d2-sanity":
        scales = args.scales if args.scales is not None else [10, 30, 90]
        rep = experiments.exp_d2_sanity(args.u, scales, args.eps, args.reps, seed)
    else:  # unreachable: argparse restricts choices
        raise ConfigError(f"unknown experiment: {name}")
    _emit(rep.to_csv(), args.out)
    sys.stderr.write(rep.summary() + "\n")
    return 0


def _occupied_with_scales(args, seed):
    """Run the occupied-crossing experiment on explicit scales."""
    scales = sorted(args.scales)

    class _S(experiments.ScaleSchedule):
        def scales(self):
            return scales

    sched = _S(scales[0], "geometric", len(scales))
    return experiments.exp_occupied_crossing(
        args.d, args.u, sched, args.eps, args.reps, seed
    )


def cmd_describe(args) -> int:
    path = args.file
    try:
        if path.endswith(".pgm"):
            fields = read_pgm_header(path)
            for k, v in fields.items():
                sys.stdout.write(f"{k}={v}\n")
            return 0
        with open(path) as f:
            first = f.readline().rstrip("\n")
        if first.startswith("# cylperc-lines"):
            sys.stdout.write(first[2:] + "\n")
            return 0
        if first.startswith("# cylperc-report") or first.startswith("# cylperc-mu"):
            sys.stdout.write(first[2:] + "\n")
            return 0
        raise ConfigError("unrecognized artifact file")
    except OSError as e:
        raise ConfigError(str(e))


_COMMANDS = {
    "mu": cmd_mu,
    "sample": cmd_sample,
    "check": cmd_check,
    "slice": cmd_slice,
    "experiment": cmd_experiment,
    "describe": cmd_describe,
}


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return _COMMANDS[args.command](args)
    except ConfigError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except PreconditionError as e:
        sys.stderr.write(f"precondition violated: {e}\n")
        return 3
    except InvariantViolation as e:
        sys.stderr.write(f"invariant violated: {e}\n")
        return 4


if __name__ == "__main__":
    sys.exit(main())
