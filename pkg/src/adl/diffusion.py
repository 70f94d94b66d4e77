"""Virtual-source walk simulation and infected-set snapshots.

The infected set at even t is the radius-t/2 ball around the virtual source;
at odd t it is either the previous ball (the walker stayed) or two depth
(t-1)/2 trees joined by the central edge (vs_{t-1}, vs_t) (the walker moved).
Snapshots therefore never materialize the infected set; they carry the pair
(vs_{t-1}, vs_t) and answer membership queries.

Determinism contract: a trajectory is a pure function of (protocol, T, seed).
The generator is stdlib ``random.Random`` (seeded Mersenne Twister, whose
``random()``/``getrandbits`` streams are stable across platforms and Python
versions), and the draw sequence is fixed: one ``randrange(d)`` for the first
step, then exactly one ``random()`` and one ``randrange(d-1)`` per even time,
both always drawn even when alpha is 0 or 1, so runs with different alpha
tables but equal seeds stay coupled draw-for-draw.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from functools import cached_property

from adl.protocol import Protocol
from adl.tree import (
    Label,
    SOURCE,
    TreeContext,
    ball_size,
    check_label,
    distance,
    format_label,
    parse_label,
)


@dataclass(frozen=True)
class Trajectory:
    """Virtual-source path vs_0 ... vs_T in origin-rooted coordinates."""

    d: int
    protocol: str
    seed: int
    vs: tuple  # tuple[Label, ...]

    def __post_init__(self) -> None:
        ctx = TreeContext(self.d)
        if not self.vs or self.vs[0] != SOURCE:
            raise ValueError("trajectory must start at the origin")
        for v in self.vs:
            check_label(ctx, v)
        if len(self.vs) > 1 and len(self.vs[1]) != 1:
            raise ValueError("vs_1 must be a neighbor of the origin")
        for t in range(1, len(self.vs) - 1):
            cur, nxt = self.vs[t], self.vs[t + 1]
            if t % 2 == 1:
                if nxt != cur:
                    raise ValueError(f"the virtual source must hold still at odd t={t}")
            elif nxt != cur and (len(nxt) != len(cur) + 1 or nxt[: len(cur)] != cur):
                raise ValueError(f"moves must step one edge away from the origin (t={t})")

    @property
    def T(self) -> int:
        return len(self.vs) - 1

    def h(self, t: int) -> int:
        """Distance of vs_t from the origin (depth of its label)."""
        return len(self.vs[t])

    def snapshot_at(self, t: int) -> "Snapshot":
        if not 1 <= t <= self.T:
            raise ValueError(f"snapshot time must be in 1..{self.T}, got {t}")
        return Snapshot(d=self.d, t=t, vs_prev=self.vs[t - 1], vs_now=self.vs[t])

    def to_json(self) -> str:
        return json.dumps(
            {
                "d": self.d,
                "protocol": self.protocol,
                "seed": self.seed,
                "vs": [format_label(v) for v in self.vs],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Trajectory":
        obj = json.loads(text)
        return cls(
            d=obj["d"],
            protocol=obj["protocol"],
            seed=obj["seed"],
            vs=tuple(parse_label(s) for s in obj["vs"]),
        )


def simulate(protocol: Protocol, T: int, seed: int) -> Trajectory:
    """Sample the virtual-source chain for T steps.

    t=0: move to a uniform neighbor of the origin.  Odd t: stay.  Even t:
    stay with probability alpha(t, h_t), else append a uniform child entry.
    """
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    last_even = T - 1 if (T - 1) % 2 == 0 else T - 2
    if protocol.t_max is not None and last_even >= 2 and last_even > protocol.t_max:
        raise ValueError(
            f"T={T} needs alpha at t={last_even} but the protocol stops at {protocol.t_max}"
        )
    d = protocol.d
    rng = random.Random(seed)
    vs: list[Label] = [SOURCE]
    if T >= 1:
        vs.append((rng.randrange(d),))
    cur = vs[-1]
    for t in range(1, T):
        if t % 2 == 1:
            vs.append(cur)
            continue
        u = rng.random()
        child = rng.randrange(d - 1)  # always drawn: keeps seeds couplable
        if u >= protocol.alpha(t, len(cur)):
            cur = cur + (child,)
        vs.append(cur)
    return Trajectory(d=d, protocol=protocol.name, seed=seed, vs=tuple(vs))


@dataclass(frozen=True)
class Snapshot:
    """One observed infected subgraph, reduced to (t, vs_{t-1}, vs_t).

    At t = 1 the pair is (vs_0, vs_1) = (origin, first step); for every t >= 2
    neither entry can be the origin.  Construction checks the pair is
    consistent (equal at even t, equal-or-adjacent at odd t).
    """

    d: int
    t: int
    vs_prev: Label
    vs_now: Label

    def __post_init__(self) -> None:
        ctx = TreeContext(self.d)
        check_label(ctx, self.vs_prev)
        check_label(ctx, self.vs_now)
        if self.t < 1:
            raise ValueError(f"observation time must be >= 1, got {self.t}")
        if self.t % 2 == 0 and self.vs_prev != self.vs_now:
            raise ValueError("even-time snapshots have vs_prev == vs_now")
        if self.vs_prev != self.vs_now and distance(ctx, self.vs_prev, self.vs_now) != 1:
            raise ValueError("a moved virtual source must be adjacent to its predecessor")
        if self.t >= 2 and (self.vs_prev == SOURCE or self.vs_now == SOURCE):
            raise ValueError("the virtual source never sits at the origin for t >= 2")

    @property
    def is_ball(self) -> bool:
        return self.t % 2 == 0 or self.vs_prev == self.vs_now

    @property
    def radius(self) -> int:
        """Ball radius: t/2 at even t, (t-1)/2 at odd t."""
        return self.t // 2

    @cached_property
    def _ctx(self) -> TreeContext:
        return TreeContext(self.d)

    def virtual_sources(self) -> tuple:
        """The identifiable virtual-source set: one label (ball) or two (edge)."""
        if self.vs_prev == self.vs_now:
            return (self.vs_now,)
        return (self.vs_prev, self.vs_now)

    def min_vs_distance(self, v: Label) -> int:
        """min over the virtual-source set of the distance to v."""
        dv = distance(self._ctx, v, self.vs_now)
        if self.vs_prev == self.vs_now:
            return dv
        return min(dv, distance(self._ctx, v, self.vs_prev))

    def contains(self, v: Label) -> bool:
        """Membership in the infected set."""
        return self.min_vs_distance(v) <= self.radius

    def infected_count(self) -> int:
        """|V_t|: ball-size formula, or two joined depth-(t-1)/2 trees."""
        d = self.d
        if self.is_ball:
            return ball_size(d, self.radius)
        return 2 * ((d - 1) ** ((self.t + 1) // 2) - 1) // (d - 2)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "t": self.t,
            "vs_prev": format_label(self.vs_prev),
            "vs_now": format_label(self.vs_now),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Snapshot":
        return cls(
            d=obj["d"],
            t=obj["t"],
            vs_prev=parse_label(obj["vs_prev"]),
            vs_now=parse_label(obj["vs_now"]),
        )


def local_radius(trajectory: Trajectory, t: int) -> int:
    """Radius of the largest fully infected ball around the origin at even t.

    Equals t/2 - h_t.  Odd times are rejected: the identity is an even-time
    statement and no closed form is adopted for odd t.
    """
    if t % 2:
        raise ValueError("local_radius is defined at even times only")
    if not 0 <= t <= trajectory.T:
        raise ValueError(f"t must be in 0..{trajectory.T}, got {t}")
    return t // 2 - trajectory.h(t)
