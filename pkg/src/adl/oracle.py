"""Exhaustive small-instance oracle for exact detection probabilities.

Instead of sampling the virtual-source chain, enumerate every reachable
snapshot endpoint pair (vs_{t-1}, vs_t) with its exact probability, run an
estimator's deterministic candidate core on every joint combination, and
integrate the uniform tie-break analytically (a candidate set C contributes
[origin in C] / |C|).  With a built-in protocol everything is a Fraction, so
identities can be certified exactly; table protocols fall back to floats.

Outcome counts grow like (d-1)^(t/2) per snapshot, so this is a desk-scale
instrument; joint enumerations are capped by an outcome budget.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Sequence, Union

from adl.diffusion import Snapshot
from adl.estimators import (
    generic_mle_candidates,
    k_obs_candidates,
    single_mle_candidates,
    three_obs_candidates,
    two_obs_path_candidates,
    uniform_mle_cases_candidates,
)
from adl.protocol import Protocol, hop_distribution
from adl.tree import SOURCE, TreeContext, labels_at_depth, sphere_size

DEFAULT_BUDGET = 10_000_000

ORACLE_ESTIMATORS = (
    "single_mle",
    "two_obs_path",
    "three_obs_intersection",
    "k_obs_subtree",
    "generic_mle",
    "uniform_mle_cases",
)


@dataclass(frozen=True)
class WeightedOutcome:
    """One reachable (vs_{t-1}, vs_t) endpoint pair and its probability."""

    vs_prev: tuple
    vs_now: tuple
    prob: Union[Fraction, float]


def outcome_count(d: int, t: int) -> int:
    """Number of distinct endpoint pairs a time-t snapshot can take."""
    if t == 1:
        return d
    if t % 2 == 0:
        return sum(sphere_size(d, h) for h in range(1, t // 2 + 1))
    # odd: every ball center, plus every (parent, child) central edge
    return sum(sphere_size(d, h) * d for h in range(1, (t - 1) // 2 + 1))


def enumerate_single(
    protocol: Protocol, t: int, budget: int = DEFAULT_BUDGET
) -> list[WeightedOutcome]:
    """All endpoint pairs of one diffusion observed at time t, with exact
    probabilities (Fractions for built-in protocols).

    Distinct move timings that land on the same pair are merged: the pair
    determines the geometry, and its mass is p(t, h) split evenly over the
    d (d-1)^(h-1) positions at hop h (times the move/stay factor at odd t).
    """
    if t < 1:
        raise ValueError(f"observation time must be >= 1, got {t}")
    n = outcome_count(protocol.d, t)
    if n > budget:
        raise ValueError(f"enumeration needs {n} outcomes, over the budget of {budget}")
    d = protocol.d
    ctx = TreeContext(d)
    exact = protocol.exact
    one = Fraction(1) if exact else 1.0

    if t == 1:
        return [
            WeightedOutcome(SOURCE, (i,), one / d) for i in range(d)
        ]

    t_eff = t if t % 2 == 0 else t - 1
    hop = hop_distribution(protocol, t_eff, exact=exact)
    p = hop.p_exact if exact else hop.p
    out: list[WeightedOutcome] = []
    if t % 2 == 0:
        for h in hop.support(t):
            per_vertex = p(t, h) / sphere_size(d, h)
            if per_vertex:
                out.extend(WeightedOutcome(v, v, per_vertex) for v in labels_at_depth(ctx, h))
        return out
    a = protocol.alpha_exact if exact else protocol.alpha
    for h in hop.support(t_eff):
        stay = p(t_eff, h) * a(t_eff, h) / sphere_size(d, h)
        move = p(t_eff, h) * (one - a(t_eff, h)) / (sphere_size(d, h) * (d - 1))
        for v in labels_at_depth(ctx, h):
            if stay:
                out.append(WeightedOutcome(v, v, stay))
            if move:
                out.extend(
                    WeightedOutcome(v, v + (j,), move) for j in range(d - 1)
                )
    return out


def _resolutions(snaps: Sequence[Snapshot], exact: bool):
    """All ways to pick one virtual source per snapshot, with weights."""
    sets = [s.virtual_sources() for s in snaps]
    denom = prod(len(vs) for vs in sets)
    w = Fraction(1, denom) if exact else 1.0 / denom
    for choice in itertools.product(*sets):
        yield choice, w


def _success_fraction(
    estimator: str,
    snaps: list[Snapshot],
    hop,
    protocol: Protocol,
    search_depth: int,
    exact: bool,
):
    """P(chosen = origin | these snapshots), tie-break integrated out."""

    def hit(cands):
        if not cands.contains(SOURCE):
            return Fraction(0) if exact else 0.0
        return Fraction(1, cands.size()) if exact else 1.0 / cands.size()

    if estimator == "single_mle":
        (s,) = snaps
        return hit(single_mle_candidates(s, hop, protocol)[0])
    if estimator == "two_obs_path":
        s1, s2 = snaps
        return hit(two_obs_path_candidates(s1, s2)[0])
    if estimator == "uniform_mle_cases":
        s1, s2 = snaps
        return hit(uniform_mle_cases_candidates(s1, s2)[0])
    if estimator == "generic_mle":
        return hit(generic_mle_candidates(snaps, hop, protocol, search_depth)[0])
    if estimator == "three_obs_intersection":
        d = snaps[0].d
        total = Fraction(0) if exact else 0.0
        for (v1, v2, v3), w in _resolutions(snaps, exact):
            total += w * hit(three_obs_candidates(d, v1, v2, v3))
        return total
    if estimator == "k_obs_subtree":
        d = snaps[0].d
        total = Fraction(0) if exact else 0.0
        for choice, w in _resolutions(snaps, exact):
            total += w * hit(k_obs_candidates(d, list(choice))[0])
        return total
    raise ValueError(f"unknown estimator {estimator!r}; pick one of {ORACLE_ESTIMATORS}")


def exact_success(
    estimator: str,
    protocol: Protocol,
    times: Sequence[int],
    search_depth: int = 3,
    budget: int = DEFAULT_BUDGET,
):
    """Exact probability that the estimator's pick equals the origin.

    Sums over the full joint enumeration of the independent diffusions; every
    source of estimator randomness (tie-break, odd-snapshot virtual-source
    disambiguation) is integrated analytically, so the result carries no
    sampling noise at all.
    """
    if estimator not in ORACLE_ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}; pick one of {ORACLE_ESTIMATORS}")
    if estimator == "uniform_mle_cases" and protocol.name != "uniform":
        raise ValueError("the closed-form case dispatch is only valid for the uniform protocol")
    times = list(times)
    if not times:
        raise ValueError("at least one observation time required")
    arity = {"single_mle": 1, "two_obs_path": 2, "uniform_mle_cases": 2, "three_obs_intersection": 3}
    if estimator in arity and len(times) != arity[estimator]:
        raise ValueError(f"{estimator} takes exactly {arity[estimator]} observation times")

    combos = prod(outcome_count(protocol.d, t) for t in times)
    if combos > budget:
        raise ValueError(f"joint enumeration needs {combos} outcomes, over the budget of {budget}")

    exact = protocol.exact
    singles = [enumerate_single(protocol, t, budget) for t in times]
    hop = None
    if estimator in ("single_mle", "generic_mle"):
        t_eff = max(t if t % 2 == 0 else t - 1 for t in times)
        hop = hop_distribution(protocol, t_eff, exact=exact)

    d = protocol.d
    total = Fraction(0) if exact else 0.0
    for combo in itertools.product(*singles):
        snaps = [
            Snapshot(d=d, t=t, vs_prev=o.vs_prev, vs_now=o.vs_now)
            for t, o in zip(times, combo)
        ]
        weight = prod(o.prob for o in combo)
        total += weight * _success_fraction(
            estimator, snaps, hop, protocol, search_depth, exact
        )
    return total


def total_mass(outcomes: Sequence[WeightedOutcome]):
    return sum(o.prob for o in outcomes)


def outcomes_to_csv(outcomes: Sequence[WeightedOutcome]) -> str:
    """Debug dump: ``vs_prev,vs_now,prob`` rows."""
    from adl.tree import format_label

    lines = ["vs_prev,vs_now,prob"]
    for o in outcomes:
        lines.append(f"{format_label(o.vs_prev)},{format_label(o.vs_now)},{o.prob}")
    return "\n".join(lines) + "\n"
