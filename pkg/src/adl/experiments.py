"""Monte Carlo experiment harness.

A job = (protocol, observation times, estimator list, trial count, master
seed).  Each trial simulates the k diffusions from a shared origin, runs
every estimator on the same snapshots, and counts exact hits (chosen equals
the origin label, which the estimators themselves never see).  Frequencies are
compared against closed-form targets with 3-sigma verdict bands and reported
with Wilson 95% intervals.

Determinism: the seed of diffusion i in trial n is derive_seed(master, n, i);
estimator j in trial n draws from derive_seed(master, n, ESTIMATOR_STREAM+j).
derive_seed is a splitmix64 chain, so any scheduling or chunking of trials
yields bit-identical reports (aggregation is a commutative sum); thread count
(ADL_THREADS) cannot change the result body.
"""

from __future__ import annotations

import json
import math
import os
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from adl import closed_form
from adl.diffusion import Snapshot, simulate
from adl.estimators import (
    generic_mle,
    k_obs_subtree,
    single_mle,
    three_obs_intersection,
    two_obs_path,
    uniform_mle_cases,
)
from adl.protocol import (
    Protocol,
    hop_distribution,
    load_protocol_table,
    local_spreading_protocol,
    perfect_protocol,
    uniform_protocol,
)
from adl.tree import SOURCE

_MASK64 = (1 << 64) - 1
ESTIMATOR_STREAM = 1_000_000


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, *stream: int) -> int:
    """Counter-mix seed derivation: fold each stream index into a splitmix64
    chain.  Pure function of (master, stream), independent of call order."""
    x = _splitmix64(master & _MASK64)
    for s in stream:
        x = _splitmix64(x ^ ((s & _MASK64) * 0x9E3779B97F4A7C15 & _MASK64))
    return x


def wilson_interval(successes: int, trials: int, z: float = 1.959964) -> tuple[float, float]:
    """Wilson score 95% interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


ESTIMATOR_ARITY = {
    "single_mle": 1,
    "two_obs_path": 2,
    "three_obs_intersection": 3,
    "uniform_mle_cases": 2,
    "k_obs_subtree": None,  # any k >= 1
    "generic_mle": None,
}

_FORMULA_TARGETS: dict[str, Callable] = {
    "two_obs_detection_lower": lambda d, times, p: closed_form.two_obs_detection_lower(
        d, times[0], times[1]
    ),
    "two_obs_obfuscation_upper": lambda d, times, p: closed_form.two_obs_obfuscation_upper(
        d, times[0], times[1]
    ),
    "even_even_mle_exact": lambda d, times, p: closed_form.even_even_mle_exact(
        d, times[0], times[1]
    ),
    "even_odd_mle_exact": lambda d, times, p: closed_form.even_odd_mle_exact(
        d, times[0], times[1]
    ),
    "odd_odd_mle_upper": lambda d, times, p: closed_form.odd_odd_mle_upper(
        d, times[0], times[1]
    ),
    "three_obs_lower": lambda d, times, p: closed_form.three_obs_lower(d),
    "multi_obs_lower": lambda d, times, p: closed_form.multi_obs_lower(
        d, p.get("k", len(times))
    ),
}


class ConfigError(ValueError):
    """Raised with every validation violation collected, not just the first."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("invalid experiment config: " + "; ".join(self.problems))


@dataclass(frozen=True)
class EstimatorSpec:
    method: str
    params: dict = field(default_factory=dict)
    target: Optional[closed_form.Target] = None


@dataclass(frozen=True)
class ExperimentConfig:
    d: int
    protocol: Protocol
    times: tuple
    trials: int
    seed: int
    estimators: tuple  # tuple[EstimatorSpec, ...]

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        problems: list[str] = []

        d = obj.get("d")
        if not isinstance(d, int) or d < 3:
            problems.append(f"d must be an integer >= 3, got {d!r}")
            d = 3

        trials = obj.get("trials")
        if not isinstance(trials, int) or trials < 1:
            problems.append(f"trials must be an integer >= 1, got {trials!r}")
            trials = 1

        seed = obj.get("seed", 0)
        if not isinstance(seed, int):
            problems.append(f"seed must be an integer, got {seed!r}")
            seed = 0

        times_raw = obj.get("times")
        k = obj.get("k")
        if isinstance(times_raw, int):
            times = [times_raw] * (k if isinstance(k, int) and k >= 1 else 1)
            if k is None:
                problems.append("scalar 'times' needs an explicit 'k'")
        elif isinstance(times_raw, list) and times_raw:
            times = list(times_raw)
            if k is not None and k != len(times):
                problems.append(f"k={k} disagrees with len(times)={len(times)}")
        else:
            problems.append(f"times must be an int or a nonempty list, got {times_raw!r}")
            times = [2]
        for t in times:
            if not isinstance(t, int) or t < 1:
                problems.append(f"every observation time must be an integer >= 1, got {t!r}")

        protocol = None
        spec = obj.get("protocol")
        if not isinstance(spec, dict) or "name" not in spec:
            problems.append(f"protocol must be an object with a 'name', got {spec!r}")
        else:
            try:
                protocol = _build_protocol(d, spec)
            except (ValueError, OSError) as exc:
                problems.append(f"protocol: {exc}")
        if protocol is None:
            protocol = uniform_protocol(d)

        est_raw = obj.get("estimators")
        specs: list[EstimatorSpec] = []
        if not isinstance(est_raw, list) or not est_raw:
            problems.append("estimators must be a nonempty list")
        else:
            for idx, e in enumerate(est_raw):
                if not isinstance(e, dict) or "method" not in e:
                    problems.append(f"estimators[{idx}] must be an object with a 'method'")
                    continue
                method = e["method"]
                if method not in ESTIMATOR_ARITY:
                    problems.append(
                        f"estimators[{idx}]: unknown method {method!r} "
                        f"(known: {sorted(ESTIMATOR_ARITY)})"
                    )
                    continue
                arity = ESTIMATOR_ARITY[method]
                if arity is not None and len(times) != arity:
                    problems.append(
                        f"estimators[{idx}]: {method} needs exactly {arity} snapshots, "
                        f"config has {len(times)}"
                    )
                target = None
                if "target" in e and e["target"] is not None:
                    try:
                        target = _build_target(e["target"], d, times)
                    except ValueError as exc:
                        problems.append(f"estimators[{idx}].target: {exc}")
                specs.append(
                    EstimatorSpec(method=method, params=e.get("params", {}), target=target)
                )

        if problems:
            raise ConfigError(problems)
        return cls(
            d=d,
            protocol=protocol,
            times=tuple(times),
            trials=trials,
            seed=seed,
            estimators=tuple(specs),
        )

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))


def _build_protocol(d: int, spec: dict) -> Protocol:
    name = spec["name"]
    if name == "uniform":
        return uniform_protocol(d)
    if name == "perfect":
        return perfect_protocol(d)
    if name == "local":
        if "gamma" not in spec:
            raise ValueError("local protocol needs 'gamma'")
        return local_spreading_protocol(d, spec["gamma"])
    if name == "table":
        if "table" in spec:
            with open(spec["table"], "rb") as fh:
                return load_protocol_table(fh.read(), d)
        if "table_csv" in spec:
            return load_protocol_table(spec["table_csv"], d)
        raise ValueError("table protocol needs 'table' (path) or 'table_csv' (inline)")
    raise ValueError(f"unknown protocol {name!r} (known: uniform, perfect, local, table)")


def _build_target(spec: dict, d: int, times: Sequence[int]) -> closed_form.Target:
    if "formula" in spec:
        name = spec["formula"]
        if name not in _FORMULA_TARGETS:
            raise ValueError(f"unknown formula {name!r} (known: {sorted(_FORMULA_TARGETS)})")
        return _FORMULA_TARGETS[name](d, list(times), spec.get("params", {}))
    if "kind" in spec and "value" in spec:
        return closed_form.Target(
            kind=spec["kind"],
            value=float(spec["value"]),
            provenance=spec.get("provenance", "inline"),
        )
    raise ValueError("target needs either 'formula' or ('kind' and 'value')")


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

_RUNNERS = {
    "single_mle": lambda snaps, hop, proto, rng, params: single_mle(
        snaps[0], hop, proto, rng
    ),
    "two_obs_path": lambda snaps, hop, proto, rng, params: two_obs_path(
        snaps[0], snaps[1], rng
    ),
    "three_obs_intersection": lambda snaps, hop, proto, rng, params: three_obs_intersection(
        snaps[0], snaps[1], snaps[2], rng
    ),
    "uniform_mle_cases": lambda snaps, hop, proto, rng, params: uniform_mle_cases(
        snaps[0], snaps[1], rng
    ),
    "k_obs_subtree": lambda snaps, hop, proto, rng, params: k_obs_subtree(snaps, rng),
    "generic_mle": lambda snaps, hop, proto, rng, params: generic_mle(
        snaps, hop, proto, rng, search_depth=params.get("search_depth", 3)
    ),
}


@dataclass
class EstimatorResult:
    method: str
    params: dict
    successes: int
    failures: int
    trials: int
    target: Optional[closed_form.Target]

    @property
    def frequency(self) -> float:
        return self.successes / self.trials

    def verdict(self) -> str:
        """3-sigma band: sigma from the target for exact values, from the
        empirical frequency for one-sided bounds."""
        t = self.target
        if t is None:
            return "informational"
        f, n = self.frequency, self.trials
        if t.kind == "exact":
            sigma = math.sqrt(t.value * (1.0 - t.value) / n)
            return "pass" if abs(f - t.value) <= 3.0 * sigma else "fail"
        sigma = math.sqrt(f * (1.0 - f) / n)
        if t.kind == "lower_bound":
            return "pass" if f >= t.value - 3.0 * sigma else "fail"
        return "pass" if f <= t.value + 3.0 * sigma else "fail"

    def to_dict(self) -> dict:
        low, high = wilson_interval(self.successes, self.trials)
        out = {
            "method": self.method,
            "params": self.params,
            "successes": self.successes,
            "failures": self.failures,
            "trials": self.trials,
            "frequency": self.frequency,
            "wilson_95": [low, high],
            "verdict": self.verdict(),
        }
        if self.target is not None:
            out["target"] = {
                "kind": self.target.kind,
                "value": self.target.value,
                "provenance": self.target.provenance,
                "vacuous": self.target.vacuous,
            }
        return out


@dataclass
class ExperimentReport:
    d: int
    protocol: str
    times: tuple
    trials: int
    seed: int
    results: list  # list[EstimatorResult]
    wall_time_s: float

    @property
    def any_fail(self) -> bool:
        return any(r.verdict() == "fail" for r in self.results)

    def body_dict(self) -> dict:
        """Everything except wall time; the determinism contract covers this."""
        return {
            "d": self.d,
            "protocol": self.protocol,
            "times": list(self.times),
            "trials": self.trials,
            "seed": self.seed,
            "results": [r.to_dict() for r in self.results],
        }

    def to_dict(self) -> dict:
        out = self.body_dict()
        out["wall_time_s"] = self.wall_time_s
        return out

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def to_csv(self) -> str:
        lines = ["method,successes,failures,trials,frequency,wilson_low,wilson_high,target_kind,target_value,verdict"]
        for r in self.results:
            low, high = wilson_interval(r.successes, r.trials)
            tk = r.target.kind if r.target else ""
            tv = repr(r.target.value) if r.target else ""
            lines.append(
                f"{r.method},{r.successes},{r.failures},{r.trials},"
                f"{r.frequency!r},{low!r},{high!r},{tk},{tv},{r.verdict()}"
            )
        return "\n".join(lines) + "\n"


def _needs_hop(config: ExperimentConfig) -> bool:
    return any(s.method in ("single_mle", "generic_mle") for s in config.estimators)


def _run_block(config: ExperimentConfig, hop, trial_range) -> list[tuple[int, int]]:
    tallies = [[0, 0] for _ in config.estimators]
    for n in trial_range:
        snaps: list[Snapshot] = []
        for i, t in enumerate(config.times):
            tr = simulate(config.protocol, t, derive_seed(config.seed, n, i))
            snaps.append(tr.snapshot_at(t))
        for j, spec in enumerate(config.estimators):
            rng = random.Random(derive_seed(config.seed, n, ESTIMATOR_STREAM + j))
            try:
                est = _RUNNERS[spec.method](snaps, hop, config.protocol, rng, spec.params)
            except ValueError:
                tallies[j][1] += 1
                continue
            if est.chosen == SOURCE:
                tallies[j][0] += 1
    return [(s, f) for s, f in tallies]


def run(config: ExperimentConfig, threads: Optional[int] = None) -> ExperimentReport:
    """Execute the job.  ``threads`` defaults to the ADL_THREADS environment
    variable (or 1); the report body is identical for every thread count."""
    start = time.perf_counter()
    if threads is None:
        threads = max(1, int(os.environ.get("ADL_THREADS", "1") or "1"))

    hop = None
    if _needs_hop(config):
        t_eff = max(t if t % 2 == 0 else t - 1 for t in config.times)
        hop = hop_distribution(config.protocol, max(2, t_eff))

    n = config.trials
    if threads <= 1 or n < 2 * threads:
        blocks = [_run_block(config, hop, range(n))]
    else:
        step = (n + threads - 1) // threads
        ranges = [range(lo, min(lo + step, n)) for lo in range(0, n, step)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(lambda r: _run_block(config, hop, r), ranges))

    results = []
    for j, spec in enumerate(config.estimators):
        successes = sum(b[j][0] for b in blocks)
        failures = sum(b[j][1] for b in blocks)
        results.append(
            EstimatorResult(
                method=spec.method,
                params=spec.params,
                successes=successes,
                failures=failures,
                trials=config.trials,
                target=spec.target,
            )
        )
    return ExperimentReport(
        d=config.d,
        protocol=config.protocol.name,
        times=config.times,
        trials=config.trials,
        seed=config.seed,
        results=results,
        wall_time_s=time.perf_counter() - start,
    )
