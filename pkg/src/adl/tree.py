"""Geometry of the infinite d-regular tree.

Vertices are addressed by their path from a distinguished origin (the true
source of a diffusion): a label is a tuple of integers where the first entry
in ``{0, ..., d-1}`` picks the edge out of the origin and every later entry in
``{0, ..., d-2}`` picks one of the remaining outward edges.  The empty tuple
``()`` is the origin itself.  The labelling is injective, so tuple equality is
vertex equality, and all metric operations reduce to prefix arithmetic.

This coordinate system exists for the benefit of simulators and exhaustive
enumerators; inference code is expected to treat labels as opaque and go
through the operations in this module only (results must be invariant under
relabelling of child indices; see the test suite).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator

Label = tuple  # tuple[int, ...]; alias kept loose for 3.10-friendly hot paths

SOURCE: Label = ()


@dataclass(frozen=True)
class TreeContext:
    """Degree of the regular tree; everything else is derived."""

    d: int

    def __post_init__(self) -> None:
        if self.d < 3:
            raise ValueError(f"degree must be >= 3, got {self.d}")


def check_label(ctx: TreeContext, v: Label) -> Label:
    """Validate entry ranges for degree ``ctx.d``; returns ``v`` unchanged."""
    if v:
        if not 0 <= v[0] < ctx.d:
            raise ValueError(f"first label entry {v[0]} out of range for d={ctx.d}")
        for step in v[1:]:
            if not 0 <= step < ctx.d - 1:
                raise ValueError(f"label entry {step} out of range for d={ctx.d}")
    return v


def parse_label(text: str) -> Label:
    """Parse the text form: "/" is the origin, "/2/0/1" is the label (2, 0, 1)."""
    if not text.startswith("/"):
        raise ValueError(f"label text must start with '/': {text!r}")
    body = text[1:]
    if not body:
        return ()
    try:
        return tuple(int(part) for part in body.split("/"))
    except ValueError:
        raise ValueError(f"malformed label text: {text!r}") from None


def format_label(v: Label) -> str:
    """Inverse of :func:`parse_label`."""
    return "/" + "/".join(str(step) for step in v) if v else "/"


def lcp_len(u: Label, v: Label) -> int:
    """Length of the longest common prefix of two labels."""
    n = 0
    for a, b in zip(u, v):
        if a != b:
            break
        n += 1
    return n


def distance(ctx: TreeContext, u: Label, v: Label) -> int:
    """Graph distance: |u| + |v| - 2 * lcp(u, v)."""
    check_label(ctx, u)
    check_label(ctx, v)
    return len(u) + len(v) - 2 * lcp_len(u, v)


def path_between(ctx: TreeContext, u: Label, v: Label) -> list[Label]:
    """The unique path from u to v inclusive; passes through their meet.

    Length is always distance(u, v) + 1 vertices.
    """
    check_label(ctx, u)
    check_label(ctx, v)
    k = lcp_len(u, v)
    down = [u[:i] for i in range(len(u), k, -1)]  # u ... just above the meet
    up = [v[:i] for i in range(k, len(v) + 1)]  # meet ... v
    return down + up


def parent(v: Label) -> Label:
    """Neighbor of ``v`` toward the origin; undefined for the origin."""
    if not v:
        raise ValueError("the origin has no parent")
    return v[:-1]


def neighbors(ctx: TreeContext, v: Label) -> list[Label]:
    """All d neighbors of ``v``: parent first (if any), then children in order."""
    check_label(ctx, v)
    if not v:
        return [(i,) for i in range(ctx.d)]
    return [v[:-1]] + [v + (j,) for j in range(ctx.d - 1)]


def same_subtree(ctx: TreeContext, root: Label, x: Label, y: Label) -> bool:
    """True iff x and y fall in the same component of the tree minus ``root``.

    Decided via the neighbor of ``root`` closest to each argument; for
    root = origin this reduces to first-entry equality.
    """
    check_label(ctx, root)
    if x == root or y == root:
        raise ValueError("same_subtree arguments must differ from the root")
    return _step_toward(ctx, root, x) == _step_toward(ctx, root, y)


def _step_toward(ctx: TreeContext, frm: Label, to: Label) -> Label:
    """The neighbor of ``frm`` on the path toward ``to`` (to != frm)."""
    check_label(ctx, to)
    if lcp_len(frm, to) == len(frm):  # frm is a prefix of to: step down
        return to[: len(frm) + 1]
    return frm[:-1]


def steiner_tree(ctx: TreeContext, terminals: Iterable[Label]) -> set[Label]:
    """Minimal subtree spanning the terminals, as a vertex set.

    Equals the union of path_between over all terminal pairs; computed as the
    union of paths from one fixed terminal, which is the same set.
    """
    terms = list(terminals)
    if not terms:
        raise ValueError("steiner_tree requires a nonempty terminal set")
    base = terms[0]
    out: set[Label] = {check_label(ctx, base)}
    for t in terms[1:]:
        out.update(path_between(ctx, base, t))
    return out


def bfs_depths(ctx: TreeContext, core: Iterable[Label], depth: int) -> dict:
    """Map every vertex within ``depth`` of the core to its distance from it."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    dist: dict = {check_label(ctx, v): 0 for v in core}
    if not dist:
        raise ValueError("core must be nonempty")
    frontier = deque(dist)
    while frontier:
        v = frontier.popleft()
        r = dist[v]
        if r == depth:
            continue
        for w in neighbors(ctx, v):
            if w not in dist:
                dist[w] = r + 1
                frontier.append(w)
    return dist


def neighborhood_of_set(ctx: TreeContext, core: Iterable[Label], depth: int) -> set[Label]:
    """All vertices at distance <= depth from some core vertex."""
    return set(bfs_depths(ctx, core, depth))


def ball_size(d: int, radius: int) -> int:
    """|B_r(v)| = 1 + d * ((d-1)^r - 1) / (d-2) in a d-regular tree."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    return 1 + d * ((d - 1) ** radius - 1) // (d - 2)


def sphere_size(d: int, radius: int) -> int:
    """Number of vertices at distance exactly ``radius`` from a vertex."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return 1
    return d * (d - 1) ** (radius - 1)


def labels_at_depth(ctx: TreeContext, depth: int) -> Iterator[Label]:
    """All labels at the given distance from the origin, lexicographically."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if depth == 0:
        yield ()
        return
    stack: list[Label] = [(i,) for i in range(ctx.d - 1, -1, -1)]
    while stack:
        v = stack.pop()
        if len(v) == depth:
            yield v
        else:
            stack.extend(v + (j,) for j in range(ctx.d - 2, -1, -1))
