"""Fans of prime tuples and the S3-cubic fields they generate.

A fan collects sorted tuples of distinct support primes (local torsion
dimension not full) under positional norm bounds L_1 <= L_2 <= ... built
from a nondecreasing growth function, filtered to a fixed total weight
w = sum of the local dimensions. Each tuple yields a pure-cubic
representative x^3 - prod(q_j) and 6^m character lifts; replaying the
tuple's classified primes through the rank walk gives the fan's empirical
Selmer-dimension law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chain import Distribution, RhoE, simulate_chain
from .curves import CurveQ, PrimeClassRecord, classify_range, primes_upto
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class GrowthFn:
    """Named nondecreasing function [1, inf) -> [1, inf)."""

    kind: str
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self) -> None:
        if self.kind == "log":
            return
        if self.kind == "pow":
            if self.a < 0:
                raise ConfigError("power growth needs a non-negative exponent")
            return
        if self.kind == "affine":
            if self.a < 0:
                raise ConfigError("affine growth needs a non-negative slope")
            if self.a + self.b < 1:
                raise ConfigError("affine growth must map 1 to at least 1")
            return
        raise ConfigError(f"unknown growth kind {self.kind!r}")

    def __call__(self, y: float) -> float:
        if y < 1:
            raise ConfigError(f"growth functions are defined on [1, inf), got {y}")
        if self.kind == "log":
            return max(1.0, math.log(y))
        if self.kind == "pow":
            return y**self.a
        return self.a * y + self.b

    def spec_string(self) -> str:
        if self.kind == "log":
            return "log"
        if self.kind == "pow":
            return f"pow:{self.a:g}"
        return f"affine:{self.a:g},{self.b:g}"


def parse_growth(text: str) -> GrowthFn:
    """Parse 'log', 'pow:alpha' or 'affine:a,b'."""
    name, _, args = text.partition(":")
    try:
        if name == "log":
            if args:
                raise ValueError("log takes no parameters")
            return GrowthFn("log")
        if name == "pow":
            return GrowthFn("pow", float(args))
        if name == "affine":
            a, b = (float(t) for t in args.split(","))
            return GrowthFn("affine", a, b)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"bad growth spec {text!r}: {e}") from e
    raise ConfigError(f"unknown growth function {name!r}")


class RangeOverflowError(ConfigError):
    """A norm-bound recursion left the double-precision range."""


def ln_sequence(L: GrowthFn, Y: float, n: int) -> list[float]:
    """Positional norm bounds L_1..L_n at parameter Y.

    L_1 = L(Y) and each later bound is the larger of L at the product of
    all earlier bounds and Y times the previous bound.
    """
    if Y < 1:
        raise ConfigError(f"Y must be at least 1, got {Y}")
    if n < 1:
        raise ConfigError(f"n must be at least 1, got {n}")
    out = [L(Y)]
    prod = out[0]
    for k in range(1, n):
        try:
            nxt = max(L(prod), Y * out[-1])
        except OverflowError:
            raise RangeOverflowError(f"norm bound overflows at index {k + 1}") from None
        if not math.isfinite(nxt):
            raise RangeOverflowError(f"norm bound overflows at index {k + 1}")
        out.append(nxt)
        prod *= nxt
        if not math.isfinite(prod):
            if k < n - 1:
                raise RangeOverflowError(f"norm-bound product overflows at index {k + 1}")
    return out


def _is_perfect_cube(d: int) -> bool:
    if d < 0:
        return _is_perfect_cube(-d)
    r = round(d ** (1 / 3))
    return any((r + e) ** 3 == d for e in (-1, 0, 1))


def cubic_is_irreducible(d: int) -> bool:
    """Whether x^3 - d has no rational root."""
    return not _is_perfect_cube(d)


@dataclass(frozen=True)
class FanElement:
    """One admissible prime tuple with its weight and cubic representative."""

    primes: tuple[int, ...]
    w: int
    d_value: int
    cubic_poly: str

    def __post_init__(self) -> None:
        if list(self.primes) != sorted(set(self.primes)):
            raise ConfigError("primes must be strictly increasing")
        if self.d_value != math.prod(self.primes):
            raise ConfigError("d_value must be the product of the primes")
        if self.cubic_poly != _cubic_string(self.d_value):
            raise ConfigError("cubic representative does not match d_value")

    @property
    def m(self) -> int:
        return len(self.primes)


def _cubic_string(d: int) -> str:
    return f"x^3 - {d}"


def make_element(primes: tuple[int, ...], records: dict[int, PrimeClassRecord]) -> FanElement:
    w = sum(records[q].dim_fp for q in primes)
    d = math.prod(primes)
    return FanElement(tuple(primes), w, d, _cubic_string(d))


def lift_count(elem: FanElement) -> int:
    """Number of character lifts over the element: 6 per prime."""
    return 6**elem.m


def case_filter(case: str, oracle=None):
    """Predicate on classification records for the three support cases.

    All cases require the local torsion to miss full rank; cases A and C
    additionally consult a caller-supplied splitting oracle on the prime.
    """
    if case not in ("A", "B", "C"):
        raise ConfigError(f"case must be 'A', 'B' or 'C', got {case!r}")
    if case in ("A", "C") and oracle is None:
        raise ConfigError(f"case {case} needs an external splitting oracle")
    if case == "B":
        oracle = lambda p: True

    def predicate(record: PrimeClassRecord) -> bool:
        return record.in_DB_support and bool(oracle(record.p))

    return predicate


def _coverage_records(
    curve: CurveQ,
    bound: float,
    records: dict[int, PrimeClassRecord] | None,
) -> dict[int, PrimeClassRecord]:
    """Records for every good prime below the bound, or a gap report."""
    from .curves import MAX_PRIME

    top = math.ceil(bound) - 1
    if top > MAX_PRIME:
        raise ConfigError(
            f"norm bounds need primes up to {top}, beyond the supported {MAX_PRIME}"
        )
    if records is None:
        return {r.p: r for r in classify_range(curve, top)}
    needed = [p for p in primes_upto(top) if p > 3 and curve.discriminant % p != 0]
    missing = [p for p in needed if p not in records]
    if missing:
        raise DataError(
            f"classification cache is missing {len(missing)} primes in "
            f"[{missing[0]}, {missing[-1]}]; classify up to {math.ceil(bound)} first"
        )
    return records


def enumerate_fan(
    curve: CurveQ,
    m: int,
    w: int,
    X: float,
    L: GrowthFn,
    records: dict[int, PrimeClassRecord] | None = None,
) -> list[FanElement]:
    """All weight-w support tuples under the positional bounds, sorted.

    A sorted tuple is admissible when q_j < L_j(X) position by position;
    the bounds are nondecreasing, so this is exactly the existence of an
    assignment of primes to positions. Pass cached records to avoid
    re-classification; a gap in them is an error, not a silent shrink.
    """
    if m < 1:
        raise ConfigError(f"fan needs m >= 1, got {m}")
    if w < 0 or w > m:
        raise ConfigError(f"weight must lie in 0..{m}, got {w}")
    bounds = ln_sequence(L, X, m)
    records = _coverage_records(curve, bounds[-1], records)
    support = [
        p for p in sorted(records) if p < bounds[-1] and records[p].in_DB_support
    ]
    out: list[FanElement] = []

    def extend(start: int, pos: int, picked: list[int], weight: int) -> None:
        if pos == m:
            if weight == w:
                out.append(make_element(tuple(picked), records))
            return
        for idx in range(start, len(support)):
            q = support[idx]
            if q >= bounds[pos]:
                break
            dq = records[q].dim_fp
            if weight + dq > w or weight + dq + (m - pos - 1) < w:
                continue
            picked.append(q)
            extend(idx + 1, pos + 1, picked, weight + dq)
            picked.pop()

    extend(0, 0, [], 0)
    return out


def _substream_seed(seed: int, tag: int, idx: int = 0) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(tag, idx))
    return int(ss.generate_state(1, np.uint64)[0])


def _sample_elements(
    m: int,
    w: int,
    bounds: list[float],
    records: dict[int, PrimeClassRecord],
    count: int,
    seed: int,
) -> list[FanElement]:
    """Uniform fan elements by rejection from sorted support m-subsets.

    Proposals are uniform over all strictly increasing m-tuples of support
    primes below the last bound; acceptance keeps exactly the admissible
    weight-w tuples, so accepted draws are uniform over the fan.
    """
    support = [p for p in sorted(records) if p < bounds[-1] and records[p].in_DB_support]
    if len(support) < m:
        raise ConfigError("support has fewer primes than fan positions")
    gen = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=_substream_seed(seed, 1)))
    )
    out: list[FanElement] = []
    attempts = 0
    limit = 10_000 * max(1, count)
    while len(out) < count:
        attempts += 1
        if attempts > limit:
            raise DataError(
                f"rejection sampling accepted only {len(out)} of {count} "
                f"elements after {limit} proposals"
            )
        picked = sorted(gen.choice(len(support), size=m, replace=False))
        qs = [support[i] for i in picked]
        if any(q >= bounds[j] for j, q in enumerate(qs)):
            continue
        if sum(records[q].dim_fp for q in qs) != w:
            continue
        out.append(make_element(tuple(qs), records))
    return out


def fan_distribution(
    curve: CurveQ,
    m: int,
    w: int,
    X: float,
    L: GrowthFn,
    rho: float | RhoE,
    trials: int,
    seed: int,
    records: dict[int, PrimeClassRecord] | None = None,
    enumeration_limit: int = 3,
) -> Distribution:
    """Empirical final-dimension law over the fan, lifts sampled per prime.

    Small fans (m up to enumeration_limit) are enumerated and trials are
    spread across all elements as evenly as possible; larger fans draw a
    uniform batch of elements by rejection. Each element's primes replay
    through the rank walk on an element-specific substream.
    """
    if trials < 1:
        raise ConfigError(f"trials must be positive, got {trials}")
    if m < 1:
        raise ConfigError(f"fan needs m >= 1, got {m}")
    rho_e = rho if isinstance(rho, RhoE) else RhoE(float(rho))
    initial = rho_e.initial_distribution()
    bounds = ln_sequence(L, X, m)
    records = _coverage_records(curve, bounds[-1], records)
    if m <= enumeration_limit:
        elements = enumerate_fan(curve, m, w, X, L, records)
        if not elements:
            raise ConfigError(
                f"empty fan: no admissible weight-{w} tuples of {m} primes below X={X}"
            )
        if len(elements) > trials:
            gen = np.random.Generator(
                np.random.Philox(np.random.SeedSequence(entropy=_substream_seed(seed, 2)))
            )
            keep = sorted(gen.choice(len(elements), size=trials, replace=False))
            elements = [elements[i] for i in keep]
    else:
        elements = _sample_elements(m, w, bounds, records, min(trials, 256), seed)
    base, extra = divmod(trials, len(elements))
    allocation = [base + (1 if i < extra else 0) for i in range(len(elements))]
    merged: dict[int, float] = {}
    total_kept = 0.0
    for idx, (elem, n_alloc) in enumerate(zip(elements, allocation)):
        if n_alloc == 0:
            continue
        stream = [records[q] for q in elem.primes]
        emp = simulate_chain(initial, stream, n_alloc, _substream_seed(seed, 3, idx))
        kept = n_alloc * (1.0 - emp.truncation_error)
        total_kept += kept
        for s, mass in emp.mass.items():
            merged[s] = merged.get(s, 0.0) + mass * kept
    return Distribution(
        {s: v / total_kept for s, v in merged.items()},
        initial.s_max,
        (trials - total_kept) / trials,
    )
