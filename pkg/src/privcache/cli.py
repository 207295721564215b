"""Command-line front end: ``rates``, ``simulate`` and ``audit``.

Exit codes: 0 success, 2 invalid parameters, 3 decode failure, 4 leakage
detected, 5 enumeration ceiling exceeded.

Libraries and tapes for ``simulate`` come from one splitmix64 stream per
seed: the library takes the first ``N * F / w`` symbols and the scheme tape
continues from there.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from fractions import Fraction
from typing import Sequence

from . import rates
from .auditor import DEFAULT_CEILING, audit_centralized, audit_decentralized_tiny
from .centralized import (
    EXTREME,
    CentralizedScheme,
    CentralizedSystem,
    MemorySharedScheme,
    Optimal2x2Scheme,
    T,
    check_demand,
)
from .decentralized import DecentralizedScheme, DecParams, demand_round_robin, expected_rate, sample_pattern, trial_seed
from .errors import BelowThreshold, EnumerationTooLarge, InvalidParams, PrivCacheError
from .gf import FieldSpec, FieldSymbolVector, tape_from_seed

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DECODE = 3
EXIT_LEAKAGE = 4
EXIT_OVERFLOW = 5


# -- argument parsing ---------------------------------------------------


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def parse_fraction_list(text: str) -> list[Fraction]:
    return [parse_fraction(p) for p in text.split(",") if p.strip()]


def parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from exc


def parse_corner(text: str):
    if text.strip().lower() == "extreme":
        return EXTREME
    try:
        return T(int(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--t takes an integer or 'extreme', got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="privcache", description="Private coded caching: rates, simulation and audits.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, scheme=True):
        if scheme:
            p.add_argument("--scheme", choices=["centralized", "decentralized", "2x2"], default="centralized")
        p.add_argument("--n", type=int, default=2, help="number of files N")
        p.add_argument("--k", type=int, default=2, help="number of users K")
        p.add_argument("--out", help="write output here instead of stdout")

    p = sub.add_parser("rates", help="CSV sweep of R_C, R_D, the lower bound, ratio and gap")
    common(p, scheme=False)
    p.add_argument("--m", type=parse_fraction_list, help="comma-separated memory values, p/q allowed")
    p.add_argument("--grid", type=int, default=50, help="grid points on [1, N(K-1)] when --m is absent")

    for name, help_ in (("simulate", "run one placement and delivery end to end"), ("audit", "exhaustive leakage and error audit")):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.add_argument("--t", type=parse_corner, help="corner: integer t or 'extreme'")
        p.add_argument("--m", type=parse_fraction, help="memory M (p/q allowed)")
        p.add_argument("--f-bits", type=int, help="file size F in bits")
        p.add_argument("--field-width", type=int, choices=[2, 4, 8, 16], help="symbol width w")
        p.add_argument("--g-shares", type=int, default=2000 if name == "simulate" else 2, help="shares per file G")
        p.add_argument("--r-slack", type=parse_fraction, default=Fraction(1, 10), help="key pool slack r")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=1)
        p.add_argument("--demand", type=parse_int_list, help="comma-separated demand vector (1-based)")
        if name == "audit":
            p.add_argument("--fault-inject-drop-key", type=parse_int_list, help="omit this key from every transmission")
            p.add_argument("--ceiling", type=int, default=DEFAULT_CEILING, help="maximum number of enumerated worlds")
    return parser


# -- formatting ---------------------------------------------------------


def fmt_num(x) -> str:
    """Exact integers print bare; everything else as a fixed-width float."""
    if x is None:
        return ""
    if isinstance(x, Fraction) and x.denominator == 1:
        return str(x.numerator)
    if isinstance(x, int):
        return str(x)
    return f"{float(x):.10g}"


def fmt_exact(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _lines(lines: list[str]) -> str:
    return "".join(line + "\n" for line in lines)


# -- rates --------------------------------------------------------------


RATE_COLUMNS = ["M", "R_C", "R_D", "lower_bound", "ratio", "gap"]


def _guarded(fn, *args):
    try:
        return fn(*args)
    except (BelowThreshold, InvalidParams):
        return None


def rate_row(N: int, K: int, M: Fraction) -> list:
    rc = rates.rate_centralized(N, K, M)
    lb = _guarded(lambda: rates.lower_bound(N, K, M).value)
    ratio = _guarded(rates.optimality_ratio, N, K, M)
    return [M, rc, rates.rate_decentralized(N, K, M), lb, ratio, _guarded(rates.dec_cent_gap, N, K, M)]


def rates_csv(N: int, K: int, grid: Sequence[Fraction]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RATE_COLUMNS)
    for M in grid:
        writer.writerow([fmt_num(v) for v in rate_row(N, K, M)])
    return buf.getvalue()


def cmd_rates(args) -> int:
    N, K = args.n, args.k
    if N < 1 or K < 2:
        raise InvalidParams("need N >= 1 and K >= 2")
    hi = Fraction(N * (K - 1))
    if args.m:
        grid = args.m
    else:
        if args.grid < 1:
            raise InvalidParams("--grid needs at least one point")
        grid = rates.memory_grid(1, hi, args.grid)
    for M in grid:
        if not 1 <= M <= hi:
            raise InvalidParams(f"M={M} outside [1, {hi}]")
    _emit(rates_csv(N, K, grid), args.out)
    return EXIT_OK


# -- simulate -----------------------------------------------------------


def seeded_library(seed: int, spec: FieldSpec, N: int, F: int) -> list[FieldSymbolVector]:
    n = F // spec.w
    stream = tape_from_seed(seed, spec, N * n).stream
    return [FieldSymbolVector(spec, stream[i * n : (i + 1) * n]) for i in range(N)]


def _demand(args, N: int, K: int) -> tuple[int, ...]:
    return check_demand(args.demand, N, K) if args.demand else demand_round_robin(N, K)


def _centralized_scheme(args, default_w: int, default_f: int):
    w = args.field_width or default_w
    spec = FieldSpec.of_width(w)
    F = args.f_bits or default_f
    if args.scheme == "2x2":
        if (args.n, args.k) != (2, 2):
            raise InvalidParams("the 2x2 scheme needs --n 2 --k 2")
        return Optimal2x2Scheme(F, spec)
    if args.t is not None:
        return CentralizedScheme(CentralizedSystem(args.n, args.k, F, spec, args.t))
    if args.m is not None:
        return MemorySharedScheme(args.n, args.k, F, spec, args.m)
    raise InvalidParams("centralized runs need --t or --m")


def _bits(obj) -> int:
    if isinstance(obj, list):
        return sum(_bits(o) for o in obj)
    return obj.used_bits if hasattr(obj, "used_bits") else obj.total_bits


def _simulate_centralized(args) -> tuple[list[str], bool]:
    scheme = _centralized_scheme(args, 8, 240)
    N, K, F, spec = scheme.N, scheme.K, scheme.F, scheme.spec
    d = _demand(args, N, K)
    library = seeded_library(args.seed, spec, N, F)
    tape = tape_from_seed(args.seed, spec, scheme.tape_budget(), start=N * (F // spec.w))
    caches, server = scheme.place(library, tape)
    X = scheme.deliver(server, d)
    M = scheme.sys.M if isinstance(scheme, CentralizedScheme) else (scheme.M if isinstance(scheme, Optimal2x2Scheme) else args.m)
    lines = [
        "command: simulate",
        f"scheme: {args.scheme}",
        f"N: {N}",
        f"K: {K}",
        f"F_bits: {F}",
        f"field: {spec}",
    ]
    if isinstance(scheme, CentralizedScheme):
        lines.append(f"corner: {scheme.sys.corner}")
    lines += [f"M: {fmt_exact(Fraction(M))}", f"seed: {args.seed}", f"demand: {','.join(map(str, d))}"]
    lines.append(f"cache_limit_bits: {fmt_num(Fraction(M) * F)}")
    for k in range(1, K + 1):
        lines.append(f"cache_bits[{k}]: {_bits(caches[k - 1])}")
    tx = _bits(X)
    lines += [f"transmission_bits: {tx}", f"rate: {fmt_exact(Fraction(tx, F))}"]
    ok = True
    for k in range(1, K + 1):
        try:
            good = scheme.decode(k, caches[k - 1], X) == library[d[k - 1] - 1]
        except PrivCacheError:
            good = False
        ok &= good
        lines.append(f"decoded[{k}]: {'ok' if good else 'FAIL'}")
    return lines, ok


def _dec_params(args, default_w: int) -> DecParams:
    if args.m is None:
        raise InvalidParams("decentralized runs need --m")
    spec = FieldSpec.of_width(args.field_width or default_w)
    return DecParams.from_memory(args.n, args.k, args.f_bits, args.m, args.g_shares, r=args.r_slack, spec=spec)


def _simulate_decentralized(args) -> tuple[list[str], bool]:
    p = _dec_params(args, 16)
    if args.trials < 1:
        raise InvalidParams("--trials must be at least 1")
    d = _demand(args, p.N, p.K)
    scheme = DecentralizedScheme(p)
    lines = [
        "command: simulate",
        "scheme: decentralized",
        f"N: {p.N}",
        f"K: {p.K}",
        f"F_bits: {p.F}",
        f"field: {p.spec}",
        f"M: {fmt_exact(p.M)}",
        f"G: {p.G}",
        f"r: {fmt_exact(p.r)}",
        f"shares_per_user: {p.shares_per_user}",
        f"key_pool_size: {p.key_pool_size}",
        f"keys_per_user: {p.keys_per_user}",
        f"seed: {args.seed}",
        f"trials: {args.trials}",
        f"demand: {','.join(map(str, d))}",
        f"cache_limit_bits: {fmt_num(p.M * p.F)}",
    ]
    ok, keyed, rate_sum = True, 0, Fraction(0)
    for j in range(args.trials):
        seed = trial_seed(args.seed, j)
        library = seeded_library(seed, p.spec, p.N, p.F)
        tape = tape_from_seed(seed, p.spec, scheme.tape_budget(), start=p.N * p.file_symbols)
        caches, server = scheme.place(library, tape)
        X = scheme.deliver(server, d)
        rate = Fraction(X.total_bits, p.F)
        keyed += X.keyed
        rate_sum += rate
        n_ok = 0
        for k in range(1, p.K + 1):
            try:
                n_ok += scheme.decode(k, caches[k - 1], X) == library[d[k - 1] - 1]
            except PrivCacheError:
                pass
        ok &= n_ok == p.K
        if j == 0:
            for k in range(1, p.K + 1):
                lines.append(f"cache_bits[{k}]: {caches[k - 1].used_bits}")
        lines.append(
            f"trial[{j}]: path={'keyed' if X.keyed else 'fallback'} transmission_bits={X.total_bits} "
            f"rate={fmt_num(rate)} decoded={n_ok}/{p.K}"
        )
    lines += [
        f"keyed_fraction: {fmt_num(Fraction(keyed, args.trials))}",
        f"mean_rate: {fmt_num(rate_sum / args.trials)}",
        f"expected_rate: {fmt_num(expected_rate(p.N, p.K, p.M) if p.keyed else float(p.K))}",
        f"decoded_all: {'ok' if ok else 'FAIL'}",
    ]
    return lines, ok


def cmd_simulate(args) -> int:
    if args.scheme == "decentralized":
        lines, ok = _simulate_decentralized(args)
    else:
        lines, ok = _simulate_centralized(args)
    _emit(_lines(lines), args.out)
    return EXIT_OK if ok else EXIT_DECODE


# -- audit --------------------------------------------------------------


def cmd_audit(args) -> int:
    drop = args.fault_inject_drop_key
    if args.scheme == "decentralized":
        p = _dec_params(args, 2)
        if args.demand:
            raise InvalidParams("decentralized audits cover every demand; drop --demand")
        patterns = [
            sample_pattern(p, tape_from_seed(trial_seed(args.seed, j), p.spec, p.pattern_budget()))
            for j in range(max(args.trials, 1))
        ]
        if drop is not None and len(drop) != 1:
            raise InvalidParams("decentralized keys are single pool indices")
        audit = audit_decentralized_tiny(p, patterns, drop_key=drop[0] if drop else None, ceiling=args.ceiling)
        lines = ["command: audit", f"scheme: {DecentralizedScheme(p)!r}", f"seed: {args.seed}"] + audit.lines()
        leak, p_e = audit.max_leakage, audit.P_e
    else:
        scheme = _centralized_scheme(args, 2, 4 if args.scheme == "2x2" else 2)
        if isinstance(scheme, MemorySharedScheme):
            raise InvalidParams("audits run at a single corner; pass --t")
        demands = [check_demand(args.demand, scheme.N, scheme.K)] if args.demand else None
        report = audit_centralized(scheme, demands, drop_key=drop, ceiling=args.ceiling)
        lines = ["command: audit"] + report.lines()
        leak, p_e = report.max_leakage, report.P_e
    if leak > 0:
        verdict, code = "leakage detected", EXIT_LEAKAGE
    elif p_e > 0:
        verdict, code = "decode failure", EXIT_DECODE
    else:
        verdict, code = "private and correct", EXIT_OK
    lines.append(f"result: {verdict}")
    _emit(_lines(lines), args.out)
    return code


COMMANDS = {"rates": cmd_rates, "simulate": cmd_simulate, "audit": cmd_audit}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except EnumerationTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except PrivCacheError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
