"""Command-line entry point.

Exit codes: 0 pass, 1 constraint violation, 2 invalid configuration.
"""
from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, ProtocolError
from .field import mat_mul
from .harness import (
    compare_kimlee,
    emit_tradeoff_csv,
    privacy_test,
    random_instance,
    run_protocol,
    security_test,
    write_points_csv,
)
from .planner import build_plan, validate_plan
from .scheme import SchemeParams, validate_params

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


def _dims(text: str) -> tuple[int, int, int]:
    try:
        d = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dims {text!r}; expected d1,d2,d3")
    if len(d) != 3:
        raise argparse.ArgumentTypeError(f"bad dims {text!r}; expected d1,d2,d3")
    return d


def _scheme_args(p: argparse.ArgumentParser, dims: str = "32,4,4") -> None:
    p.add_argument("--servers", "-N", type=int, default=4)
    p.add_argument("--messages", "-M", type=int, default=2)
    p.add_argument("--mds-k", "-K", type=int, default=3)
    p.add_argument("--prime", "-p", type=int, default=11)
    p.add_argument("--dims", type=_dims, default=_dims(dims))
    p.add_argument("--theta", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)


def _params(args) -> SchemeParams:
    d1, d2, d3 = args.dims
    return SchemeParams(
        args.servers, args.messages, args.mds_k, args.prime, d1, d2, d3, args.theta, args.seed
    )


def cmd_run(args) -> int:
    params = validate_params(_params(args))
    A, library = random_instance(params, args.data_seed)
    t = run_protocol(params, A, library, data_seed=args.data_seed)
    if args.transcript:
        t.write(args.transcript)
    correct = t.result == mat_mul(A, library[params.theta - 1])
    c = t.costs
    print(f"decoded A*B_{params.theta}: {'exact' if correct else 'WRONG'}")
    print(f"uploaded symbols={c.uploaded} downloaded symbols={c.downloaded}")
    print(f"U measured={c.U_measured} formula={c.U_formula}")
    print(f"D measured={c.D_measured} formula={c.D_formula}" + (" (d1 padded)" if c.padded else ""))
    return EXIT_OK if correct and (c.matches or c.padded) else EXIT_VIOLATION


def cmd_tradeoff(args) -> int:
    points = emit_tradeoff_csv(args.servers, args.messages, args.out)
    print(f"wrote {len(points)} operating points to {args.out}")
    return EXIT_OK


def cmd_compare_kimlee(args) -> int:
    rows = compare_kimlee(args.servers, args.messages)
    if not rows:
        print(f"N={args.servers} has no (m1+1)(m2+1) factorization with m1, m2 >= 1")
        return EXIT_CONFIG
    points = []
    ok = True
    for K, ours, theirs in rows:
        better = ours.U == theirs.U and ours.D < theirs.D
        ok &= better
        print(f"K={K} U={ours.U}: ours D={ours.D} kim-lee D={theirs.D} {'lower' if better else 'NOT lower'}")
        points += [ours, theirs]
    if args.out:
        write_points_csv(points, args.out)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_privacy(args) -> int:
    params = SchemeParams(args.servers, args.messages, args.mds_k, args.prime, 1, 1, 1, 1, args.seed)
    rep = privacy_test(params, args.trials, permute=not args.no_permutations, buckets=args.buckets)
    print(rep.line())
    for d in rep.details:
        print(f"  server {d['server']}: chi2={d['chi2']:.3f} dof={d['dof']} p={d['p']:.4g}")
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def cmd_security(args) -> int:
    params = SchemeParams(args.servers, args.messages, args.mds_k, args.prime, 1, 1, 1, 1, args.seed)
    rep = security_test(params, args.trials, mask_disabled=args.no_mask)
    print(rep.line())
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def cmd_validate_plan(args) -> int:
    params = validate_params(_params(args))
    report = validate_plan(build_plan(params))
    print(report.summary())
    print(f"closed form: desired={report.expected_desired} undesired={report.expected_undesired}")
    for v in report.violations[:20]:
        print(f"  {v.constraint}: {v.message}")
    totals_ok = (
        report.desired_total == report.expected_desired
        and report.undesired_total == report.expected_undesired
    )
    return EXIT_OK if report.ok and totals_ok else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="privmatmul",
        description="Secure and private distributed matrix multiplication simulator",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one protocol instance end to end")
    _scheme_args(p)
    p.add_argument("--data-seed", type=int, default=None, help="seed for A and the library")
    p.add_argument("--transcript", default=None, help="write the JSON transcript here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("tradeoff", help="emit the (U, D) operating points as CSV")
    p.add_argument("--servers", "-N", type=int, default=12)
    p.add_argument("--messages", "-M", type=int, default=6)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("compare-kimlee", help="compare download cost with Kim-Lee at equal upload")
    p.add_argument("--servers", "-N", type=int, default=12)
    p.add_argument("--messages", "-M", type=int, default=6)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare_kimlee)

    p = sub.add_parser("privacy-test", help="chi-square test of query views across desired indices")
    _scheme_args(p)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--buckets", type=int, default=64)
    p.add_argument("--no-permutations", action="store_true", help="negative control")
    p.set_defaults(func=cmd_privacy)

    p = sub.add_parser("security-test", help="chi-square test of share uniformity")
    _scheme_args(p)
    p.set_defaults(prime=5)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--no-mask", action="store_true", help="negative control: R = 0")
    p.set_defaults(func=cmd_security)

    p = sub.add_parser("validate-plan", help="build a download plan and check C1-C6")
    _scheme_args(p)
    p.set_defaults(func=cmd_validate_plan)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProtocolError as exc:
        print(f"protocol violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
