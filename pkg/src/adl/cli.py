"""Command-line entry point.

Subcommands: simulate, hopdist, estimate, experiment, verify, protocol-dump.
Exit codes: 0 = success / all checks pass, 1 = a verdict or check failed,
2 = usage or validation error.  Every subcommand is deterministic given its
flags; parallelism (experiment only) is capped by ADL_THREADS and cannot
change any output byte except the wall-time field.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

from adl import closed_form, oracle
from adl.diffusion import Snapshot, simulate
from adl.estimators import (
    generic_mle,
    k_obs_subtree,
    single_mle,
    three_obs_intersection,
    two_obs_path,
    uniform_mle_cases,
)
from adl.experiments import ConfigError, ExperimentConfig, run
from adl.protocol import (
    Protocol,
    hop_distribution,
    infected_count_even,
    load_protocol_table,
    local_spreading_protocol,
    perfect_protocol,
    stay_probability_at,
    uniform_protocol,
)


def _add_protocol_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=int, required=True, help="tree degree (>= 3)")
    p.add_argument(
        "--protocol",
        required=True,
        choices=["uniform", "perfect", "local", "table"],
        help="protocol family",
    )
    p.add_argument("--gamma", type=float, help="gamma for --protocol local")
    p.add_argument("--table", help="CSV path for --protocol table")


def _protocol_from_args(args: argparse.Namespace) -> Protocol:
    if args.protocol == "uniform":
        return uniform_protocol(args.d)
    if args.protocol == "perfect":
        return perfect_protocol(args.d)
    if args.protocol == "local":
        if args.gamma is None:
            raise ValueError("--protocol local needs --gamma")
        return local_spreading_protocol(args.d, args.gamma)
    if args.table is None:
        raise ValueError("--protocol table needs --table")
    with open(args.table, "rb") as fh:
        return load_protocol_table(fh.read(), args.d)


def _cmd_simulate(args: argparse.Namespace) -> int:
    protocol = _protocol_from_args(args)
    tr = simulate(protocol, args.t, args.seed)
    if args.json:
        print(json.dumps(json.loads(tr.to_json()), indent=2))
    else:
        print(tr.to_json())
    return 0


def _cmd_hopdist(args: argparse.Namespace) -> int:
    protocol = _protocol_from_args(args)
    hop = hop_distribution(protocol, args.T, exact=True if args.exact else None)
    sys.stdout.write(hop.to_csv(exact=args.exact))
    return 0


_METHODS = {
    "mle": "generic",
    "single-mle": "single",
    "two-obs-path": "two",
    "three-obs": "three",
    "k-obs": "kobs",
    "cases": "cases",
}


def _cmd_estimate(args: argparse.Namespace) -> int:
    protocol = _protocol_from_args(args)
    with open(args.snapshots, "r", encoding="utf-8") as fh:
        snaps = [Snapshot.from_dict(obj) for obj in json.load(fh)]
    for s in snaps:
        if s.d != args.d:
            raise ValueError(f"snapshot degree {s.d} disagrees with --d {args.d}")
    rng = random.Random(args.seed)
    kind = _METHODS[args.method]
    hop = None
    if kind in ("generic", "single"):
        t_eff = max(t if t % 2 == 0 else t - 1 for t in (s.t for s in snaps))
        hop = hop_distribution(protocol, max(2, t_eff))
    if kind == "single":
        if len(snaps) != 1:
            raise ValueError("single-mle takes exactly one snapshot")
        est = single_mle(snaps[0], hop, protocol, rng)
    elif kind == "generic":
        est = generic_mle(snaps, hop, protocol, rng, search_depth=args.search_depth)
    elif kind == "two":
        if len(snaps) != 2:
            raise ValueError("two-obs-path takes exactly two snapshots")
        est = two_obs_path(snaps[0], snaps[1], rng)
    elif kind == "three":
        if len(snaps) != 3:
            raise ValueError("three-obs takes exactly three snapshots")
        est = three_obs_intersection(snaps[0], snaps[1], snaps[2], rng)
    elif kind == "kobs":
        est = k_obs_subtree(snaps, rng)
    else:
        if len(snaps) != 2:
            raise ValueError("cases takes exactly two snapshots")
        est = uniform_mle_cases(snaps[0], snaps[1], rng)
    print(est.to_json())
    return 0


def _cmd_experiment(args: argparse.Namespace) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = ExperimentConfig.from_json(fh.read())
    report = run(config)
    text = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
    return 1 if report.any_fail else 0


# ---------------------------------------------------------------------------
# verify: exact, Monte-Carlo-free check suites
# ---------------------------------------------------------------------------


def _suite_identities():
    """Path-sum collapse, uniform hop law, stay probability, DP normalization."""
    for s in range(1, 31):
        for t in range(s, 31):
            yield (
                f"path-fraction-sum(s={s},t={t}) == s+t-1",
                closed_form.path_fraction_sum(s, t) == s + t - 1,
            )
    for d in (3, 4, 5):
        hop = hop_distribution(uniform_protocol(d), 60)
        ok = all(
            hop.p_exact(t, h) == Fraction(2, t)
            for t in range(2, 61, 2)
            for h in hop.support(t)
        )
        yield f"uniform hop law p(t,h) == 2/t, d={d}, t <= 60", ok
        norm = all(
            sum(hop.p_exact(t, h) for h in hop.support(t)) == 1 for t in range(2, 61, 2)
        )
        yield f"hop normalization sum_h p(t,h) == 1, d={d}, t <= 60", norm
    uni = uniform_protocol(3)
    hop3 = hop_distribution(uni, 60)
    ok = all(
        stay_probability_at(uni, t_odd, hop3) == Fraction(1, 2)
        for t_odd in range(5, 42, 2)
    )
    yield "uniform stay probability == 1/2 for odd t in 5..41", ok


def _suite_dp_perfect():
    """Equal-likelihood identity p(t,h) (N_t - 1) == d (d-1)^(h-1)."""
    for d in (3, 4, 5):
        hop = hop_distribution(perfect_protocol(d), 30)
        for t in range(2, 31, 2):
            n_t = infected_count_even(d, t)
            ok = all(
                hop.p_exact(t, h) * (n_t - 1) == d * (d - 1) ** (h - 1)
                for h in hop.support(t)
            )
            yield f"perfect protocol equal likelihood, d={d}, t={t}", ok


def _suite_oracle_even_even():
    uni = uniform_protocol(3)
    got = oracle.exact_success("uniform_mle_cases", uni, (4, 4))
    yield "oracle even-even MLE (d=3, t=(4,4)) == 41/72", got == Fraction(41, 72)
    want = closed_form.even_even_mle_exact(3, 4, 6).exact_value
    got = oracle.exact_success("uniform_mle_cases", uni, (4, 6))
    yield "oracle even-even MLE (d=3, t=(4,6)) == closed form", got == want
    uni4 = uniform_protocol(4)
    want = closed_form.even_even_mle_exact(4, 4, 4).exact_value
    got = oracle.exact_success("uniform_mle_cases", uni4, (4, 4))
    yield "oracle even-even MLE (d=4, t=(4,4)) == closed form", got == want


def _suite_oracle_even_odd():
    uni = uniform_protocol(3)
    want = closed_form.even_odd_mle_exact(3, 4, 5).exact_value
    got = oracle.exact_success("uniform_mle_cases", uni, (4, 5))
    yield "oracle even-odd MLE (d=3, t=(4,5)) == closed form", got == want
    got = oracle.exact_success("uniform_mle_cases", uni, (5, 4))
    yield "oracle even-odd MLE (d=3, t=(5,4)) == closed form", got == want


def _suite_oracle_odd_odd():
    uni = uniform_protocol(3)
    got = oracle.exact_success("uniform_mle_cases", uni, (5, 5))
    cap = closed_form.odd_odd_mle_upper(3, 5, 5).exact_value
    yield "oracle odd-odd MLE (d=3, t=(5,5)) <= closed-form cap", got <= cap
    yield "oracle odd-odd MLE (d=3, t=(5,5)) is a probability", 0 <= got <= 1


def _suite_generic_vs_cases():
    """Candidate-set equality of the generic MLE and the case dispatch on a
    small deterministic sweep (the full randomized sweep lives in the tests)."""
    from adl.estimators import generic_mle_candidates, uniform_mle_cases_candidates
    from adl.experiments import derive_seed

    for d in (3, 4):
        proto = uniform_protocol(d)
        hop = hop_distribution(proto, 8)
        mismatches = 0
        checked = 0
        for t1, t2 in ((4, 4), (4, 5), (5, 4), (5, 5), (6, 7), (7, 7), (8, 9), (9, 9)):
            for n in range(150):
                snaps = [
                    simulate(proto, t, derive_seed(20_000 + d, n, i)).snapshot_at(t)
                    for i, t in enumerate((t1, t2))
                ]
                a, _ = generic_mle_candidates(snaps, hop, proto, 3)
                b, _ = uniform_mle_cases_candidates(snaps[0], snaps[1])
                checked += 1
                if a.members != b.members:
                    mismatches += 1
        yield f"generic MLE == case dispatch on {checked} instances, d={d}", mismatches == 0


_SUITES = {
    "identities": _suite_identities,
    "dp-perfect": _suite_dp_perfect,
    "oracle-even-even": _suite_oracle_even_even,
    "oracle-even-odd": _suite_oracle_even_odd,
    "oracle-odd-odd": _suite_oracle_odd_odd,
    "generic-vs-cases": _suite_generic_vs_cases,
}


def _cmd_verify(args: argparse.Namespace) -> int:
    names = list(_SUITES) if args.suite == "all" else [args.suite]
    if any(n not in _SUITES for n in names):
        print(
            f"unknown suite {args.suite!r}; available: {', '.join(list(_SUITES) + ['all'])}",
            file=sys.stderr,
        )
        return 2
    failures = 0
    for name in names:
        for label, ok in _SUITES[name]():
            failures += 0 if ok else 1
            print(f"[{'PASS' if ok else 'FAIL'}] {name}: {label}")
    print(f"{'OK' if failures == 0 else 'FAILED'} ({failures} failing checks)")
    return 0 if failures == 0 else 1


def _cmd_protocol_dump(args: argparse.Namespace) -> int:
    protocol = _protocol_from_args(args)
    lines = ["t,h,alpha"]
    for t in range(2, args.T + 1, 2):
        for h in range(1, t // 2 + 1):
            a = (
                str(protocol.alpha_exact(t, h))
                if args.exact and protocol.exact
                else repr(protocol.alpha(t, h))
            )
            lines.append(f"{t},{h},{a}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adl",
        description="Adaptive diffusion on the d-regular tree: simulate, infer, verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a virtual-source trajectory")
    _add_protocol_flags(p)
    p.add_argument("-t", type=int, required=True, help="number of steps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="pretty-print the JSON")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("hopdist", help="dump the hop distribution as CSV")
    _add_protocol_flags(p)
    p.add_argument("-T", type=int, required=True, help="even horizon")
    p.add_argument("--exact", action="store_true", help="rational p values")
    p.set_defaults(fn=_cmd_hopdist)

    p = sub.add_parser("estimate", help="run one estimator on a snapshots file")
    _add_protocol_flags(p)
    p.add_argument("--snapshots", required=True, help="JSON array of snapshot objects")
    p.add_argument("--method", required=True, choices=sorted(_METHODS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--search-depth", type=int, default=3)
    p.set_defaults(fn=_cmd_estimate)

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--csv", help="also write a CSV summary here")
    p.set_defaults(fn=_cmd_experiment)

    p = sub.add_parser("verify", help="run an exact (non-Monte-Carlo) check suite")
    p.add_argument("--suite", required=True, help=f"one of: {', '.join(list(_SUITES) + ['all'])}")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("protocol-dump", help="dump a protocol's alpha table as CSV")
    _add_protocol_flags(p)
    p.add_argument("-T", type=int, required=True, help="even horizon")
    p.add_argument("--exact", action="store_true", help="rational alpha values")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_protocol_dump)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
