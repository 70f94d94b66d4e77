"""Adaptive diffusion protocols and the hop-distance dynamic program.

A protocol is a degree d together with a table alpha(t, h) of stay
probabilities, defined for even t >= 2 and 1 <= h <= t/2: at each even time t
the virtual source stays put with probability alpha(t, h_t) and otherwise
moves one step further from the origin.  Three closed-form protocols are
built in:

* ``uniform``   -- alpha(t, h) = (t - 2h + 2) / (t + 2); makes h_t uniform on
                  {1, ..., t/2} at every even t.
* ``perfect``   -- alpha(t, h) = ((d-1)^(t/2-h+1) - 1) / ((d-1)^(t/2+1) - 1);
                  makes every infected vertex other than the virtual source
                  equally likely to be the origin.
* ``local``     -- the 0/1 gamma-indexed schedule that pins h_t to
                  floor(gamma * t / 2) once t > 2/gamma, trading obfuscation
                  for local spread around the origin.

All built-in alphas are rational, so the hop distribution p(t, h) = P(h_t = h)
can be carried both as exact fractions and as floats; table-backed protocols
(loaded from CSV) are float-only.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

from adl.tree import ball_size

Rational = Union[int, Fraction]


def _check_domain(t: int, h: int) -> None:
    if t < 2 or t % 2 != 0:
        raise ValueError(f"alpha is defined for even t >= 2 only, got t={t}")
    if not 1 <= h <= t // 2:
        raise ValueError(f"alpha is defined for 1 <= h <= t/2, got (t={t}, h={h})")


def alpha_uniform(t: int, h: int) -> Fraction:
    """Stay probability (t - 2h + 2) / (t + 2) of the uniform protocol."""
    _check_domain(t, h)
    return Fraction(t - 2 * h + 2, t + 2)


def alpha_perfect(d: int, t: int, h: int) -> Fraction:
    """Stay probability ((d-1)^(t/2-h+1) - 1) / ((d-1)^(t/2+1) - 1)."""
    if d < 3:
        raise ValueError(f"degree must be >= 3, got {d}")
    _check_domain(t, h)
    m = d - 1
    return Fraction(m ** (t // 2 - h + 1) - 1, m ** (t // 2 + 1) - 1)


def alpha_local_spreading(gamma: Union[float, str, Fraction], t: int, h: int) -> int:
    """0/1 stay rule of the local-spreading protocol with parameter gamma.

    Returns 1 for t <= 2/gamma; afterwards 1 exactly when
    floor(gamma * t/2) == floor(gamma * (t/2 + 1)), i.e. when the deterministic
    hop target does not advance at the next even time.  Evaluated in exact
    rational arithmetic so floor boundaries are unambiguous.
    """
    g = Fraction(gamma)
    if not 0 < g < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    _check_domain(t, h)
    if t * g <= 2:
        return 1
    return 1 if (g * t // 2) == (g * (t + 2) // 2) else 0


def local_hop_target(gamma: Union[float, str, Fraction], t: int) -> int:
    """Deterministic h_t of the local-spreading protocol at even t."""
    g = Fraction(gamma)
    if t < 2 or t % 2:
        raise ValueError(f"even t >= 2 required, got {t}")
    if t * g <= 2:
        return 1
    return int(g * t // 2)


@dataclass(frozen=True)
class Protocol:
    """Degree + alpha table.  Query outside the domain (odd t, h out of range,
    or beyond a table's horizon) is an error, never a default."""

    d: int
    name: str
    _alpha: Callable[[int, int], Fraction] = field(repr=False)
    t_max: Optional[int] = None  # inclusive horizon for table-backed protocols
    exact: bool = True  # whether _alpha returns exact rationals

    def __post_init__(self) -> None:
        if self.d < 3:
            raise ValueError(f"degree must be >= 3, got {self.d}")

    def alpha(self, t: int, h: int) -> float:
        return float(self._alpha_checked(t, h))

    def alpha_exact(self, t: int, h: int) -> Fraction:
        if not self.exact:
            raise ValueError(f"protocol {self.name!r} has no exact alpha values")
        return Fraction(self._alpha_checked(t, h))

    def _alpha_checked(self, t: int, h: int):
        _check_domain(t, h)
        if self.t_max is not None and t > self.t_max:
            raise ValueError(f"t={t} beyond protocol horizon T_max={self.t_max}")
        a = self._alpha(t, h)
        if not 0 <= a <= 1:
            raise ValueError(f"alpha({t},{h}) = {a} outside [0, 1]")
        return a


def uniform_protocol(d: int) -> Protocol:
    return Protocol(d=d, name="uniform", _alpha=lambda t, h: alpha_uniform(t, h))


def perfect_protocol(d: int) -> Protocol:
    return Protocol(d=d, name="perfect", _alpha=lambda t, h: alpha_perfect(d, t, h))


def local_spreading_protocol(d: int, gamma: Union[float, str, Fraction]) -> Protocol:
    g = Fraction(gamma)
    if not 0 < g < 1:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    return Protocol(
        d=d,
        name=f"local(gamma={float(g):g})",
        _alpha=lambda t, h: Fraction(alpha_local_spreading(g, t, h)),
    )


def constant_protocol(d: int, value: Rational, name: Optional[str] = None) -> Protocol:
    """alpha == value everywhere; handy for degenerate schedules (0 or 1)."""
    v = Fraction(value)
    if not 0 <= v <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {value}")
    return Protocol(d=d, name=name or f"const({float(v):g})", _alpha=lambda t, h: v)


def load_protocol_table(source: Union[str, bytes, io.IOBase], d: int) -> Protocol:
    """Build a table-backed protocol from CSV with header ``t,h,alpha``.

    The table must cover every even t from 2 up to its largest t, with every
    h in 1..t/2 present exactly once.  Violations (odd t, h out of range,
    alpha outside [0, 1], duplicates, gaps) are collected and reported.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [c.strip() for c in header] != ["t", "h", "alpha"]:
        raise ValueError(f"expected header 't,h,alpha', got {header}")

    table: dict = {}
    problems: list[str] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 3:
            problems.append(f"line {lineno}: expected 3 fields, got {len(row)}")
            continue
        try:
            t, h, a = int(row[0]), int(row[1]), float(row[2])
        except ValueError:
            problems.append(f"line {lineno}: malformed row {row}")
            continue
        if t < 2 or t % 2:
            problems.append(f"line {lineno}: odd or too-small t={t}")
            continue
        if not 1 <= h <= t // 2:
            problems.append(f"line {lineno}: h={h} out of range for t={t}")
            continue
        if not 0.0 <= a <= 1.0:
            problems.append(f"line {lineno}: alpha={a} outside [0, 1]")
            continue
        if (t, h) in table:
            problems.append(f"line {lineno}: duplicate entry for (t={t}, h={h})")
            continue
        table[(t, h)] = a
    if problems:
        raise ValueError("invalid protocol table: " + "; ".join(problems))
    if not table:
        raise ValueError("protocol table is empty")
    t_max = max(t for t, _ in table)
    missing = [
        (t, h)
        for t in range(2, t_max + 1, 2)
        for h in range(1, t // 2 + 1)
        if (t, h) not in table
    ]
    if missing:
        raise ValueError(f"protocol table has gaps: missing {missing}")

    return Protocol(
        d=d,
        name="table",
        _alpha=lambda t, h: table[(t, h)],
        t_max=t_max,
        exact=False,
    )


@dataclass(frozen=True)
class HopDistribution:
    """p(t, h) = P(h_t = h) for even 2 <= t <= t_max, 1 <= h <= t/2.

    ``p`` returns 0 outside the support band; querying an odd time or beyond
    the horizon is an error.  When built from an exact protocol the table is
    carried as fractions and ``p_exact`` is available.
    """

    d: int
    protocol: str
    t_max: int
    _table: dict = field(repr=False)  # (t, h) -> Fraction or float
    exact: bool = True

    def _check_t(self, t: int) -> None:
        if t < 2 or t % 2:
            raise ValueError(f"hop distribution is defined at even t >= 2, got {t}")
        if t > self.t_max:
            raise ValueError(f"t={t} beyond computed horizon {self.t_max}")

    def p(self, t: int, h: int) -> float:
        self._check_t(t)
        if not 1 <= h <= t // 2:
            return 0.0
        return float(self._table[(t, h)])

    def p_exact(self, t: int, h: int) -> Fraction:
        if not self.exact:
            raise ValueError(f"hop distribution for {self.protocol!r} is float-only")
        self._check_t(t)
        if not 1 <= h <= t // 2:
            return Fraction(0)
        return Fraction(self._table[(t, h)])

    def support(self, t: int) -> range:
        self._check_t(t)
        return range(1, t // 2 + 1)

    def mean_h(self, t: int):
        """E[h_t]; exact when the table is exact."""
        self._check_t(t)
        return sum(h * self._table[(t, h)] for h in self.support(t))

    def mle_success_probability(self, t: int):
        """max_h p(t, h) / (d (d-1)^(h-1)): single-snapshot MLE hit rate at even t."""
        self._check_t(t)
        d = self.d
        return max(
            self._table[(t, h)] / (d * (d - 1) ** (h - 1)) for h in self.support(t)
        )

    def to_csv(self, exact: bool = False) -> str:
        """Dump as ``t,h,p`` rows; with exact=True p is a rational string."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["t", "h", "p"])
        for t in range(2, self.t_max + 1, 2):
            for h in self.support(t):
                v = self._table[(t, h)]
                writer.writerow([t, h, str(Fraction(v)) if exact else repr(float(v))])
        return out.getvalue()


def hop_distribution(protocol: Protocol, T: int, exact: Optional[bool] = None) -> HopDistribution:
    """Run the hop recurrence up to even horizon T.

    p(2, 1) = 1 (the first step is forced to a neighbor of the origin) and

        p(t+2, h) = alpha(t, h) p(t, h) + (1 - alpha(t, h-1)) p(t, h-1),

    with p(t, h) = 0 outside 1 <= h <= t/2.  The recurrence never queries
    alpha outside its domain.
    """
    if T < 2 or T % 2:
        raise ValueError(f"horizon must be an even integer >= 2, got {T}")
    if protocol.t_max is not None and T - 2 > protocol.t_max:
        raise ValueError(
            f"horizon {T} needs alpha up to t={T - 2} but the protocol stops at {protocol.t_max}"
        )
    use_exact = protocol.exact if exact is None else exact
    if use_exact and not protocol.exact:
        raise ValueError(f"protocol {protocol.name!r} cannot provide exact alphas")

    one = Fraction(1) if use_exact else 1.0
    get_alpha = protocol.alpha_exact if use_exact else protocol.alpha

    table: dict = {(2, 1): one}
    for t in range(2, T, 2):
        for h in range(1, t // 2 + 2):
            stay = get_alpha(t, h) * table[(t, h)] if h <= t // 2 else 0
            come = (
                (one - get_alpha(t, h - 1)) * table[(t, h - 1)]
                if 1 <= h - 1 <= t // 2
                else 0
            )
            table[(t + 2, h)] = stay + come
    return HopDistribution(
        d=protocol.d,
        protocol=protocol.name,
        t_max=T,
        _table=table,
        exact=use_exact,
    )


def stay_probability_at(protocol: Protocol, t_odd: int, hop: HopDistribution):
    """P(the time-t_odd snapshot is a ball) = sum_h p(t_odd - 1, h) alpha(t_odd - 1, h).

    Exact when the hop table is exact (the uniform protocol gives exactly 1/2
    for every odd t >= 3).
    """
    if t_odd < 3 or t_odd % 2 == 0:
        raise ValueError(f"odd t >= 3 required, got {t_odd}")
    t = t_odd - 1
    hop._check_t(t)
    get_alpha = protocol.alpha_exact if hop.exact else protocol.alpha
    return sum(hop._table[(t, h)] * get_alpha(t, h) for h in hop.support(t))


def infected_count_even(d: int, t: int) -> int:
    """N_t = d/(d-2) ((d-1)^(t/2) - 1) + 1 for even t."""
    if t < 0 or t % 2:
        raise ValueError(f"even t >= 0 required, got {t}")
    return ball_size(d, t // 2)
