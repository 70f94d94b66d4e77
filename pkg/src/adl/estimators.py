"""Source-detection estimators over infected-set snapshots.

Every estimator consumes snapshots (and, for likelihood-based ones, a hop
distribution plus its protocol) and produces an :class:`Estimate`: the full
argmax/candidate set plus one uniformly chosen representative.  Estimators
never see the true origin; they interact with vertices only through tree
operations, so their output distribution is invariant under relabelling of
child indices.

Tie-breaking policy: uniform at random over the candidate set, always, with
the caller-supplied RNG.  The two underspecified corners (empty path set in
the two-snapshot estimator, ill-defined minimum in the subtree-count
estimator) follow the same policy and flag themselves in diagnostics.

Each public estimator has a deterministic ``*_candidates`` core (used by the
exhaustive oracle, which integrates the tie-break analytically instead of
sampling it).
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from adl.diffusion import Snapshot
from adl.protocol import HopDistribution, Protocol
from adl.tree import (
    Label,
    TreeContext,
    bfs_depths,
    format_label,
    neighbors,
    path_between,
    steiner_tree,
)

_REL_TOL = 1e-12  # float-mode tie grouping for log-likelihood comparisons


def _dist(u: Label, v: Label) -> int:
    # internal fast path: labels are already validated
    n = 0
    for a, b in zip(u, v):
        if a != b:
            break
        n += 1
    return len(u) + len(v) - 2 * n


# ---------------------------------------------------------------------------
# candidate sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExplicitCandidates:
    """A small, fully enumerated candidate set."""

    members: frozenset

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("candidate set must be nonempty")

    def size(self) -> int:
        return len(self.members)

    def contains(self, v: Label) -> bool:
        return v in self.members

    def sample(self, rng: random.Random) -> Label:
        ordered = sorted(self.members)
        return ordered[rng.randrange(len(ordered))]


@dataclass(frozen=True)
class ShellCandidates:
    """Union of equal-score distance shells around a center or a center edge.

    A shell at radius r holds every vertex whose distance to the center set
    is exactly r: d(d-1)^(r-1) vertices around a single center, 2(d-1)^r
    around an adjacent pair.  Used where the candidate set is exponentially
    large (single-snapshot MLE), so membership stays symbolic.
    """

    d: int
    centers: tuple  # one label, or two adjacent labels
    radii: tuple  # strictly increasing radii >= 1

    def __post_init__(self) -> None:
        if len(self.centers) not in (1, 2) or not self.radii:
            raise ValueError("need 1 or 2 centers and at least one radius")
        if any(r < 1 for r in self.radii):
            raise ValueError("shell radii must be >= 1")

    def _shell_size(self, r: int) -> int:
        if len(self.centers) == 1:
            return self.d * (self.d - 1) ** (r - 1)
        return 2 * (self.d - 1) ** r

    def size(self) -> int:
        return sum(self._shell_size(r) for r in self.radii)

    def _set_distance(self, v: Label) -> int:
        return min(_dist(v, c) for c in self.centers)

    def contains(self, v: Label) -> bool:
        return self._set_distance(v) in self.radii

    def sample(self, rng: random.Random) -> Label:
        # shell proportional to its size, then an outward non-backtracking walk
        total = self.size()
        pick = rng.randrange(total)
        for r in self.radii:
            s = self._shell_size(r)
            if pick < s:
                break
            pick -= s
        ctx = TreeContext(self.d)
        if len(self.centers) == 1:
            prev, cur = self.centers[0], None
            options = neighbors(ctx, prev)
        else:
            a, b = self.centers
            prev = a if rng.randrange(2) == 0 else b
            other = b if prev == a else a
            options = [w for w in neighbors(ctx, prev) if w != other]
        cur = options[rng.randrange(len(options))]
        for _ in range(r - 1):
            options = [w for w in neighbors(ctx, cur) if w != prev]
            prev, cur = cur, options[rng.randrange(len(options))]
        return cur


Candidates = Union[ExplicitCandidates, ShellCandidates]


@dataclass(frozen=True)
class Estimate:
    """Candidate set, the uniformly chosen representative, and diagnostics."""

    method: str
    chosen: Label
    candidates: Candidates
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.candidates.contains(self.chosen):
            raise ValueError("chosen vertex must belong to the candidate set")

    def tie_count(self) -> int:
        return self.candidates.size()

    def to_json(self) -> str:
        return json.dumps(
            {
                "method": self.method,
                "chosen": format_label(self.chosen),
                "ties": self.tie_count(),
                "diagnostics": self.diagnostics,
            }
        )


def _finish(method: str, cands: Candidates, diagnostics: dict, rng: random.Random) -> Estimate:
    return Estimate(
        method=method, chosen=cands.sample(rng), candidates=cands, diagnostics=diagnostics
    )


def _check_common(snaps: Sequence[Snapshot]) -> int:
    if not snaps:
        raise ValueError("at least one snapshot required")
    d = snaps[0].d
    for s in snaps:
        if s.d != d:
            raise ValueError(f"snapshots disagree on degree: {s.d} != {d}")
        if s.t < 2:
            raise ValueError("estimators require observation times t >= 2")
    return d


def _resolve_vs(s: Snapshot, rng: random.Random) -> Label:
    """One virtual source per snapshot; uniform over the pair at odd non-ball."""
    vs = s.virtual_sources()
    return vs[0] if len(vs) == 1 else vs[rng.randrange(2)]


# ---------------------------------------------------------------------------
# single-snapshot maximum likelihood
# ---------------------------------------------------------------------------


def _snapshot_hop_weights(s: Snapshot, hop: HopDistribution, protocol: Protocol, exact: bool):
    """Per-hop posterior weights for one snapshot.

    Even t: p(t, h).  Odd ball: p(t-1, h) alpha(t-1, h).  Odd non-ball:
    p(t-1, h) (1 - alpha(t-1, h)).  Constant factors shared by every h are
    dropped; each weight still has to be divided by d(d-1)^(h-1) to become a
    per-vertex score.
    """
    t_eff = s.t if s.t % 2 == 0 else s.t - 1
    if t_eff < 2:
        raise ValueError(f"snapshot at t={s.t} is too early for likelihood inference")
    p = hop.p_exact if exact else hop.p
    if s.t % 2 == 0:
        return t_eff, [p(t_eff, h) for h in range(1, t_eff // 2 + 1)]
    a = protocol.alpha_exact if exact else protocol.alpha
    one = Fraction(1) if exact else 1.0
    if s.is_ball:
        return t_eff, [p(t_eff, h) * a(t_eff, h) for h in range(1, t_eff // 2 + 1)]
    return t_eff, [p(t_eff, h) * (one - a(t_eff, h)) for h in range(1, t_eff // 2 + 1)]


def _argmax_hops(d: int, weights: list, exact: bool) -> list[int]:
    """Hops h (1-based) maximizing weight(h) / (d (d-1)^(h-1))."""
    if exact:
        scores = [Fraction(w, d * (d - 1) ** h) for h, w in enumerate(weights)]
        best = max(scores)
        if best == 0:
            raise ValueError("all hop likelihoods are zero for this snapshot")
        return [h + 1 for h, sc in enumerate(scores) if sc == best]
    scores = [w / (d * (d - 1) ** h) for h, w in enumerate(weights)]
    best = max(scores)
    if best <= 0.0:
        raise ValueError("all hop likelihoods are zero for this snapshot")
    return [
        h + 1
        for h, sc in enumerate(scores)
        if math.isclose(sc, best, rel_tol=_REL_TOL, abs_tol=0.0)
    ]


def single_mle_candidates(
    s: Snapshot, hop: HopDistribution, protocol: Protocol
) -> tuple[Candidates, dict]:
    exact = hop.exact and protocol.exact
    t_eff, weights = _snapshot_hop_weights(s, hop, protocol, exact)
    h_star = _argmax_hops(s.d, weights, exact)
    cands = ShellCandidates(d=s.d, centers=s.virtual_sources(), radii=tuple(h_star))
    diagnostics = {"h_star": h_star, "ball": s.is_ball, "candidate_count": cands.size()}
    if s.t % 2 == 0:
        diagnostics["success_probability"] = float(hop.mle_success_probability(s.t))
    return cands, diagnostics


def single_mle(
    s: Snapshot, hop: HopDistribution, protocol: Protocol, rng: random.Random
) -> Estimate:
    """Likelihood argmax for one snapshot.

    The likelihood of a non-excluded vertex depends only on its hop distance
    X(v) to the virtual-source set, so the argmax is taken over hops and the
    candidate set is the union of the maximizing distance shells; the
    representative is sampled by walking a uniform outward path.  At even t
    the diagnostics carry the exact success probability
    max_h p(t, h) / (d (d-1)^(h-1)).
    """
    _check_common([s])
    cands, diagnostics = single_mle_candidates(s, hop, protocol)
    return _finish("single_mle", cands, diagnostics, rng)


# ---------------------------------------------------------------------------
# two snapshots: path estimator
# ---------------------------------------------------------------------------


def _closest_pair(ctx: TreeContext, set1: Sequence[Label], set2: Sequence[Label]):
    return min(
        ((x, y) for x in set1 for y in set2),
        key=lambda xy: (_dist(xy[0], xy[1]), xy),
    )


def two_obs_path_candidates(s1: Snapshot, s2: Snapshot) -> tuple[Candidates, dict]:
    d = _check_common([s1, s2])
    ctx = TreeContext(d)
    vs1, vs2 = s1.virtual_sources(), s2.virtual_sources()
    known = set(vs1) | set(vs2)
    x, y = _closest_pair(ctx, vs1, vs2)
    interior = [v for v in path_between(ctx, x, y)[1:-1] if v not in known]
    s_set = [v for v in interior if s1.contains(v) and s2.contains(v)]
    if s_set:
        return ExplicitCandidates(frozenset(s_set)), {"S_size": len(s_set), "fallback": False}
    # the connecting path has no interior (virtual sources coincide or touch):
    # fall back to a uniform pick among the fringe of the known virtual sources
    fringe = {w for v in known for w in neighbors(ctx, v)} - known
    return ExplicitCandidates(frozenset(fringe)), {"S_size": 0, "fallback": True}


def two_obs_path(s1: Snapshot, s2: Snapshot, rng: random.Random) -> Estimate:
    """Uniform pick from S = (path between the virtual-source sets, interior
    only) intersected with both infected sets."""
    cands, diagnostics = two_obs_path_candidates(s1, s2)
    return _finish("two_obs_path", cands, diagnostics, rng)


# ---------------------------------------------------------------------------
# three snapshots: path intersection
# ---------------------------------------------------------------------------


def three_obs_candidates(d: int, v1: Label, v2: Label, v3: Label) -> Candidates:
    ctx = TreeContext(d)
    p12 = set(path_between(ctx, v1, v2))
    p13 = set(path_between(ctx, v1, v3))
    p23 = set(path_between(ctx, v2, v3))
    meet = p12 & p13 & p23
    if not meet:
        raise ValueError("pairwise paths in a tree always meet")  # unreachable
    return ExplicitCandidates(frozenset(meet))


def three_obs_intersection(
    s1: Snapshot, s2: Snapshot, s3: Snapshot, rng: random.Random
) -> Estimate:
    """Intersection of the three pairwise virtual-source paths.

    On a tree this is always a single vertex (the median); a uniform pick
    over a larger intersection is kept for safety.  Odd non-ball snapshots
    contribute a uniformly chosen element of their virtual-source pair.
    """
    d = _check_common([s1, s2, s3])
    v1, v2, v3 = (_resolve_vs(s, rng) for s in (s1, s2, s3))
    cands = three_obs_candidates(d, v1, v2, v3)
    return _finish(
        "three_obs_intersection", cands, {"intersection_size": cands.size()}, rng
    )


# ---------------------------------------------------------------------------
# k snapshots: subtree-count minimax
# ---------------------------------------------------------------------------


def k_obs_candidates(d: int, resolved: Sequence[Label]) -> tuple[Candidates, dict]:
    """argmin_v max_(w ~ v) #(virtual sources in the subtree behind w).

    Any vertex off every virtual-source-to-virtual-source path scores k, so
    the search runs over the spanning subtree of the resolved virtual
    sources.  A virtual source sitting exactly at v belongs to no subtree of
    v, which makes k = 1 degenerate (the virtual source itself wins with
    score 0).
    """
    if not resolved:
        raise ValueError("at least one virtual source required")
    ctx = TreeContext(d)
    k = len(resolved)
    mult: dict = {}
    for v in resolved:
        mult[v] = mult.get(v, 0) + 1
    domain = steiner_tree(ctx, list(mult))
    top = min(domain, key=lambda v: (len(v), v))
    children: dict = {v: [] for v in domain}
    for v in domain:
        if v != top:
            children[v[:-1]].append(v)
    below: dict = {}
    for v in sorted(domain, key=len, reverse=True):
        below[v] = mult.get(v, 0) + sum(below[c] for c in children[v])
    best: Optional[int] = None
    ties: list[Label] = []
    for v in domain:
        counts = [below[c] for c in children[v]]
        if v != top:
            counts.append(k - below[v])
        worst = max(counts, default=0)
        if best is None or worst < best:
            best, ties = worst, [v]
        elif worst == best:
            ties.append(v)
    diagnostics = {"k": k, "min_max_subtree_count": best, "well_defined": len(ties) == 1}
    return ExplicitCandidates(frozenset(ties)), diagnostics


def k_obs_subtree(snaps: Sequence[Snapshot], rng: random.Random) -> Estimate:
    d = _check_common(snaps)
    resolved = [_resolve_vs(s, rng) for s in snaps]
    cands, diagnostics = k_obs_candidates(d, resolved)
    return _finish("k_obs_subtree", cands, diagnostics, rng)


# ---------------------------------------------------------------------------
# generic multi-snapshot maximum likelihood
# ---------------------------------------------------------------------------


def generic_mle_candidates(
    snaps: Sequence[Snapshot],
    hop: HopDistribution,
    protocol: Protocol,
    search_depth: int = 3,
) -> tuple[Candidates, dict]:
    if search_depth < 0:
        raise ValueError("search_depth must be >= 0")
    d = _check_common(snaps)
    ctx = TreeContext(d)
    exact = hop.exact and protocol.exact

    per_snap = []
    all_vs: list[Label] = []
    for s in snaps:
        t_eff, weights = _snapshot_hop_weights(s, hop, protocol, exact)
        vs = s.virtual_sources()
        all_vs.extend(vs)
        per_snap.append((vs, t_eff // 2, weights))

    core = steiner_tree(ctx, all_vs)
    depths = bfs_depths(ctx, core, search_depth)

    # likelihood depends on a vertex only through its hop vector, so score
    # each distinct vector once and bucket the domain by it
    buckets: dict = {}
    for v in depths:
        key = []
        for vs, max_h, _ in per_snap:
            x = _dist(v, vs[0])
            if len(vs) == 2:
                x2 = _dist(v, vs[1])
                if x2 < x:
                    x = x2
            if x < 1 or x > max_h:  # excluded virtual source, or outside V_t
                key = None
                break
            key.append(x)
        if key is not None:
            buckets.setdefault(tuple(key), []).append(v)

    diagnostics = {
        "domain_size": len(depths),
        "feasible_count": sum(len(vs) for vs in buckets.values()),
        "exact": exact,
        "fallback": False,
        "domain_boundary": False,
    }
    if not buckets:
        first = snaps[0].virtual_sources()[0]
        fringe = set(neighbors(ctx, first)) - set(all_vs)
        diagnostics["fallback"] = True
        return ExplicitCandidates(frozenset(fringe)), diagnostics

    def score_of(key):
        if exact:
            total = Fraction(1)
            for (_, _, weights), x in zip(per_snap, key):
                total *= Fraction(weights[x - 1], d * (d - 1) ** (x - 1))
            return total
        total = 0.0
        for (_, _, weights), x in zip(per_snap, key):
            w = weights[x - 1]
            if w <= 0.0:
                return None
            total += math.log(w) - (x - 1) * math.log(d - 1)
        return total

    scored = {key: score_of(key) for key in buckets}
    if exact:
        best = max(scored.values())
        if best == 0:
            best = None
        win = [k for k, sc in scored.items() if sc == best] if best is not None else []
    else:
        finite = {k: sc for k, sc in scored.items() if sc is not None}
        best = max(finite.values(), default=None)
        win = (
            [k for k, sc in finite.items() if math.isclose(sc, best, rel_tol=_REL_TOL, abs_tol=1e-300)]
            if best is not None
            else []
        )
    if not win:
        first = snaps[0].virtual_sources()[0]
        fringe = set(neighbors(ctx, first)) - set(all_vs)
        diagnostics["fallback"] = True
        return ExplicitCandidates(frozenset(fringe)), diagnostics

    ties = [v for k in win for v in buckets[k]]
    diagnostics["domain_boundary"] = any(depths[v] == search_depth for v in ties)
    return ExplicitCandidates(frozenset(ties)), diagnostics


def generic_mle(
    snaps: Sequence[Snapshot],
    hop: HopDistribution,
    protocol: Protocol,
    rng: random.Random,
    search_depth: int = 3,
) -> Estimate:
    """Joint log-likelihood argmax over the Steiner tree of all virtual
    sources expanded by ``search_depth``, intersected with every infected set
    and minus every virtual source.

    Candidates with a zero hop probability are excluded (log 0 = -inf).  For
    the built-in protocols likelihoods are compared as exact rationals; for
    table protocols a float log-likelihood with relative tie tolerance is
    used.  For arbitrary alpha tables no claim is made that the true argmax
    lies inside the truncated domain; when the winners touch the outer BFS
    fringe, diagnostics["domain_boundary"] is set.
    """
    cands, diagnostics = generic_mle_candidates(snaps, hop, protocol, search_depth)
    return _finish("generic_mle", cands, diagnostics, rng)


# ---------------------------------------------------------------------------
# uniform-protocol two-snapshot MLE, closed-form case dispatch
# ---------------------------------------------------------------------------


def _nbrs_minus(ctx: TreeContext, centers: Sequence[Label], minus) -> frozenset:
    out = {w for c in centers for w in neighbors(ctx, c)}
    return frozenset(out - set(minus) - set(centers))


def _feasible_interior(
    ctx: TreeContext, a: Label, b: Label, s1: Snapshot, s2: Snapshot
) -> list[Label]:
    """Interior of the a-b path, filtered to vertices infected in both."""
    return [
        v
        for v in path_between(ctx, a, b)[1:-1]
        if s1.contains(v) and s2.contains(v)
    ]


def _require(cands, case: str) -> frozenset:
    if not cands:
        raise ValueError(f"inconsistent snapshot pair: empty candidate set in case {case}")
    return frozenset(cands)


def uniform_mle_cases_candidates(s1: Snapshot, s2: Snapshot) -> tuple[Candidates, dict]:
    d = _check_common([s1, s2])
    for s in (s1, s2):
        low = 4 if s.t % 2 == 0 else 5
        if s.t < low:
            raise ValueError(
                f"case dispatch needs t >= {low} at {'even' if low == 4 else 'odd'} times, got t={s.t}"
            )
    ctx = TreeContext(d)
    if s1.t % 2 == 0 and s2.t % 2 == 0:
        members, case = _cases_even_even(ctx, s1, s2)
    elif s1.t % 2 == 0:
        members, case = _cases_even_odd(ctx, s1, s2)
    elif s2.t % 2 == 0:
        members, case = _cases_even_odd(ctx, s2, s1)
        case += "-swapped"
    else:
        members, case = _cases_odd_odd(ctx, s1, s2)
    return ExplicitCandidates(members), {"case": case}


def uniform_mle_cases(s1: Snapshot, s2: Snapshot, rng: random.Random) -> Estimate:
    """Two-snapshot MLE under the uniform protocol as an explicit case split.

    Mirrors the closed-form analysis case by case (all parity combinations,
    including the d = 3 specials); the matched case tag is reported in
    diagnostics.  Inputs must come from the uniform protocol and satisfy
    t >= 4 (even) / t >= 5 (odd); earlier times are refused.
    """
    cands, diagnostics = uniform_mle_cases_candidates(s1, s2)
    return _finish("uniform_mle_cases", cands, diagnostics, rng)


def _cases_even_even(ctx: TreeContext, s1: Snapshot, s2: Snapshot):
    v1, v2 = s1.vs_now, s2.vs_now
    gap = _dist(v1, v2)
    if gap == 0:
        return _require(_nbrs_minus(ctx, [v1], []), "even-even-1"), "even-even-1"
    if gap == 1:
        return _require(_nbrs_minus(ctx, [v1, v2], []), "even-even-2"), "even-even-2"
    s_set = _feasible_interior(ctx, v1, v2, s1, s2)
    return _require(s_set, "even-even-3"), "even-even-3"


def _cases_even_odd(ctx: TreeContext, se: Snapshot, so: Snapshot):
    """se has even t (ball, center vs1); so has odd t."""
    vs1 = se.vs_now
    pair = so.virtual_sources()
    x2 = min(_dist(vs1, w) for w in pair)
    if so.is_ball:
        vs2 = so.vs_now
        if x2 == 0:
            return _require(_nbrs_minus(ctx, [vs1], []), "even-odd-1"), "even-odd-1"
        if x2 == 1:
            return _require(_nbrs_minus(ctx, [vs2], [vs1]), "even-odd-3"), "even-odd-3"
        # deterministic: the feasible path vertex closest to the odd center
        feas = _feasible_interior(ctx, vs1, vs2, se, so)
        _require(feas, "even-odd-5")
        best = min(feas, key=lambda v: _dist(v, vs2))
        return frozenset([best]), "even-odd-5"
    if x2 <= 1:
        case = "even-odd-2" if x2 == 0 else "even-odd-4"
        return _require(_nbrs_minus(ctx, [vs1], pair), case), case
    near = min(pair, key=lambda w: (_dist(vs1, w), w))
    feas = _feasible_interior(ctx, vs1, near, se, so)
    _require(feas, "even-odd-6")
    best = min(feas, key=lambda v: _dist(v, vs1))
    return frozenset([best]), "even-odd-6"


def _cases_odd_odd(ctx: TreeContext, s1: Snapshot, s2: Snapshot):
    if s1.is_ball and s2.is_ball:
        return _cases_odd_odd_balls(ctx, s1, s2)
    if s1.is_ball:
        members, case = _cases_odd_odd_ball_nonball(ctx, s1, s2)
    elif s2.is_ball:
        members, case = _cases_odd_odd_ball_nonball(ctx, s2, s1)
        case += "-swapped"
    else:
        return _cases_odd_odd_nonballs(ctx, s1, s2)
    return members, case


def _cases_odd_odd_balls(ctx: TreeContext, s1: Snapshot, s2: Snapshot):
    v1, v2 = s1.vs_now, s2.vs_now
    t1, t2 = s1.t, s2.t
    gap = _dist(v1, v2)
    if gap == 0:
        return _require(_nbrs_minus(ctx, [v1], []), "odd-odd-1"), "odd-odd-1"
    if gap == 1:
        # the later snapshot localizes better; equal times leave both sides tied
        if t1 == t2:
            members = _nbrs_minus(ctx, [v1, v2], [])
        elif t1 > t2:
            members = _nbrs_minus(ctx, [v2], [v1])
        else:
            members = _nbrs_minus(ctx, [v1], [v2])
        return _require(members, "odd-odd-2"), "odd-odd-2"
    feas = _feasible_interior(ctx, v1, v2, s1, s2)
    _require(feas, "odd-odd-3")
    scores = {
        v: (t1 + 1 - 2 * _dist(v, v1)) * (t2 + 1 - 2 * _dist(v, v2)) for v in feas
    }
    best = max(scores.values())
    return frozenset(v for v, sc in scores.items() if sc == best), "odd-odd-3"


def _cases_odd_odd_ball_nonball(ctx: TreeContext, sb: Snapshot, sn: Snapshot):
    """sb is the odd ball, sn the odd non-ball."""
    vb = sb.vs_now
    pair = sn.virtual_sources()
    x = min(_dist(vb, w) for w in pair)
    if x == 0:
        return _require(_nbrs_minus(ctx, [vb], pair), "odd-odd-4"), "odd-odd-4"
    if x == 1:
        return _require(_nbrs_minus(ctx, [vb], pair), "odd-odd-5"), "odd-odd-5"
    near = min(pair, key=lambda w: (_dist(vb, w), w))
    feas = _feasible_interior(ctx, vb, near, sb, sn)
    _require(feas, "odd-odd-6")
    best = min(feas, key=lambda v: _dist(v, vb))
    return frozenset([best]), "odd-odd-6"


def _cases_odd_odd_nonballs(ctx: TreeContext, s1: Snapshot, s2: Snapshot):
    e1, e2 = s1.virtual_sources(), s2.virtual_sources()
    gap = min(_dist(a, b) for a in e1 for b in e2)
    union = set(e1) | set(e2)
    if gap == 0:
        if set(e1) == set(e2):
            if ctx.d >= 4:
                return _require(_nbrs_minus(ctx, e1, []), "odd-odd-7"), "odd-odd-7"
            band = {
                v
                for v, r in bfs_depths(ctx, e1, 2).items()
                if r in (1, 2)
            }
            return _require(band, "odd-odd-7(d=3)"), "odd-odd-7(d=3)"
        (shared,) = set(e1) & set(e2)
        if ctx.d >= 4:
            return _require(_nbrs_minus(ctx, [shared], union), "odd-odd-8"), "odd-odd-8"
        near2 = {
            v
            for v, r in bfs_depths(ctx, [shared], 2).items()
            if r in (1, 2) and v not in union
        }
        return _require(near2, "odd-odd-8(d=3)"), "odd-odd-8(d=3)"
    a, b = _closest_pair(ctx, e1, e2)
    if gap == 1:
        return _require(_nbrs_minus(ctx, [a, b], union), "odd-odd-9"), "odd-odd-9"
    if ctx.d == 3 and gap == 2:
        (mid,) = [v for v in path_between(ctx, a, b)[1:-1]]
        (w2,) = [w for w in neighbors(ctx, mid) if w not in (a, b)]
        return frozenset([mid, w2]), "odd-odd-10(d=3,gap=2)"
    feas = _feasible_interior(ctx, a, b, s1, s2)
    _require(feas, "odd-odd-10")
    scores = {v: _dist(v, a) * _dist(v, b) for v in feas}
    best = max(scores.values())
    return frozenset(v for v, sc in scores.items() if sc == best), "odd-odd-10"
