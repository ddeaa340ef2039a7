"""Alternating rank-walk on 3-Selmer dimensions: exact operators, Monte Carlo.

The walk lives on non-negative integers s. One step moves s -> s+2 with
probability 3^(-floor(s/2)) and s -> s-2 otherwise, so parity is conserved
and each parity class carries a stationary law with explicit product-form
masses and super-geometric tails. The Monte Carlo side replays a stream of
classified primes (split or inert, local class i) through the transition
tables and even rank deltas, one reproducible substream per trial.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConsistencyError

S_MAX = 64
PRODUCT_CUTOFF = 60
MASS_TOL = 1e-12


@dataclass(frozen=True)
class Distribution:
    """Probability masses on dimensions 0..s_max, total pinned to 1."""

    mass: dict[int, float]
    s_max: int = S_MAX
    truncation_error: float = 0.0

    def __post_init__(self) -> None:
        clean: dict[int, float] = {}
        for s, m in self.mass.items():
            if not isinstance(s, (int, np.integer)) or s < 0 or s > self.s_max:
                raise ConfigError(f"support point {s} outside 0..{self.s_max}")
            if m < 0:
                raise ConfigError(f"negative mass {m} at {s}")
            if m > 0:
                clean[int(s)] = float(m)
        object.__setattr__(self, "mass", clean)
        total = self.total()
        if abs(total - 1.0) > MASS_TOL:
            raise ConfigError(f"total mass {total} deviates from 1 beyond {MASS_TOL}")

    @classmethod
    def point_mass(cls, s: int, s_max: int = S_MAX) -> "Distribution":
        return cls({s: 1.0}, s_max)

    def total(self) -> float:
        return sum(self.mass.values())

    def pmf(self, s: int) -> float:
        return self.mass.get(s, 0.0)

    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.mass))

    def l1_distance(self, other: "Distribution") -> float:
        keys = set(self.mass) | set(other.mass)
        return sum(abs(self.pmf(s) - other.pmf(s)) for s in keys)

    def tv_distance(self, other: "Distribution") -> float:
        return 0.5 * self.l1_distance(other)


@dataclass(frozen=True)
class ChainState:
    dim: int
    steps_taken: int = 0

    def __post_init__(self) -> None:
        if self.dim < 0:
            raise ConsistencyError(f"negative dimension {self.dim}")


@dataclass(frozen=True)
class RhoE:
    """Probability that the auxiliary rank starts even."""

    value: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ConfigError(f"rho must lie in [0, 1], got {self.value}")

    def initial_distribution(self, s_max: int = S_MAX) -> Distribution:
        return Distribution({0: self.value, 1: 1.0 - self.value}, s_max)


def r_omega(dim: int) -> int:
    """Number of full hyperbolic layers below dim: floor(dim / 2)."""
    if dim < 0:
        raise ConfigError(f"dimension must be non-negative, got {dim}")
    return dim // 2


def cij(i: int, j: int, r: int) -> float:
    """Probability that a class-i prime leaves a j-dimensional local trace.

    Row i=2 is kept in factored form so that the j=2 entry vanishes exactly
    at r <= 1, where a drop by 4 is geometrically impossible.
    """
    if i not in (1, 2) or j not in (0, 1, 2):
        raise ConfigError(f"no transition entry for i={i}, j={j}")
    if r < 0:
        raise ConfigError(f"r must be non-negative, got {r}")
    x = 3.0 ** (-r)
    if i == 1:
        return (x, 1.0 - x, 0.0)[j]
    if j == 0:
        return x * x
    if j == 1:
        return 4.0 * x * (1.0 - x)
    return (1.0 - x) * (1.0 - 3.0 * x) + 0.0


def rank_delta_split(i: int, t: int, lift: int) -> int:
    """Even rank jump for a completely split prime of class i, trace t."""
    if i not in (0, 1, 2):
        raise ConfigError(f"split class must be 0, 1 or 2, got {i}")
    if not 0 <= lift <= 5:
        raise ConfigError(f"lift index must be in 0..5, got {lift}")
    if t < 0 or t > i:
        raise ConfigError(f"trace dimension {t} impossible for class {i}")
    if i == 0:
        return 0
    if i == 1:
        return 2 if t == 0 else -2
    if t == 2:
        return -4
    if t == 1:
        return 0
    return 4 if lift < 2 else 0


def rank_delta_inert(i: int, t: int) -> int:
    """Even rank jump for an inert prime of class i, trace t."""
    if i == 2:
        raise ConfigError("inert primes never carry a 2-dimensional local class")
    if i not in (0, 1):
        raise ConfigError(f"inert class must be 0 or 1, got {i}")
    if t < 0 or t > i:
        raise ConfigError(f"trace dimension {t} impossible for class {i}")
    if i == 0:
        return 0
    return 2 if t == 0 else -2


def ml_step(d: Distribution) -> Distribution:
    """One application of the alternating rank-walk operator."""
    out: dict[int, float] = {}
    lost = 0.0
    for s, m in d.mass.items():
        up = 3.0 ** (-r_omega(s))
        if s + 2 <= d.s_max:
            out[s + 2] = out.get(s + 2, 0.0) + m * up
        else:
            lost += m * up
        down = m * (1.0 - up)
        if down > 0.0:
            if s - 2 < 0:
                raise ConsistencyError(f"downward move from dimension {s}")
            out[s - 2] = out.get(s - 2, 0.0) + down
    if lost > 0.0:
        keep = 1.0 - lost
        out = {s: m / keep for s, m in out.items()}
    return Distribution(out, d.s_max, d.truncation_error + lost)


def evolve(d: Distribution, w: int) -> Distribution:
    """w-fold application of ml_step."""
    if w < 0:
        raise ConfigError(f"step count must be non-negative, got {w}")
    for _ in range(w):
        d = ml_step(d)
    return d


def rho(d: Distribution) -> float:
    """Total mass on even dimensions."""
    return sum(m for s, m in d.mass.items() if s % 2 == 0)


def _truncated_product(factors) -> float:
    out = 1.0
    for k, f in enumerate(factors):
        if k > 0 and abs(f - 1.0) < 1e-15:
            break
        out *= f
    return out


def stationary(parity: str, s_max: int = S_MAX) -> Distribution:
    """The invariant law of the even or odd parity class."""
    if parity not in ("even", "odd"):
        raise ConfigError(f"parity must be 'even' or 'odd', got {parity!r}")
    lead = _truncated_product(
        1.0 / (1.0 + 3.0 ** (-k)) for k in range(PRODUCT_CUTOFF + 1)
    )
    shift = 0 if parity == "even" else 1
    mass: dict[int, float] = {}
    for j in range(s_max // 2 + 1):
        s = 2 * j + shift
        if s > s_max:
            break
        value = lead
        for k in range(1, j + 1):
            value *= 3.0 / (3**k - 1)
        mass[s] = value
    return Distribution(mass, s_max)


def tail_constant() -> float:
    """The constant multiplying the super-geometric tail bound."""
    return _truncated_product(
        1.0 / (1.0 - 3.0 ** (-k)) for k in range(1, PRODUCT_CUTOFF + 1)
    )


def tail_bound(s: int) -> float:
    """Closed-form upper bound for the stationary mass at or above s."""
    if s < 4:
        raise ConfigError(f"tail bound needs s >= 4, got {s}")
    if s % 2 == 0:
        exponent = s * (s - 2) // 8
    else:
        exponent = (s - 1) * (s - 3) // 8
    return tail_constant() * 3.0 ** (-exponent)


def tail_exact(parity: str, s: int) -> float:
    """Exact stationary mass at or above s within one parity class."""
    if s < 4:
        raise ConfigError(f"exact tail needs s >= 4, got {s}")
    law = stationary(parity)
    value = sum(m for q, m in law.mass.items() if q >= s)
    if value >= tail_bound(s):
        raise ConsistencyError(f"exact tail at {s} is not below its closed-form bound")
    return value


def _stream_element(e) -> tuple[int, bool]:
    """Normalize a stream entry to (class index, is_split)."""
    if hasattr(e, "class_k") and hasattr(e, "split_in_F"):
        i, is_split = int(e.class_k), bool(e.split_in_F)
    else:
        i, kind = e
        if kind not in ("split", "inert"):
            raise ConfigError(f"prime kind must be 'split' or 'inert', got {kind!r}")
        is_split = kind == "split"
    if i not in (0, 1, 2):
        raise ConfigError(f"local class must be 0, 1 or 2, got {i}")
    if i == 2 and not is_split:
        raise ConfigError("inert primes never carry a 2-dimensional local class")
    return i, is_split


def _draw_initial(initial: Distribution, u: np.ndarray) -> np.ndarray:
    support = np.array(initial.support(), dtype=np.int64)
    cum = np.cumsum([initial.pmf(int(s)) for s in support])
    cum[-1] = 1.0
    return support[np.searchsorted(cum, u, side="right")]


def _uniform_matrix(seed: int, trials: int, width: int) -> np.ndarray:
    rows = np.empty((trials, width))
    for trial in range(trials):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial,))
        rows[trial] = np.random.Generator(np.random.Philox(ss)).random(width)
    return rows


def simulate_chain(initial: Distribution, prime_stream, trials: int, seed: int) -> Distribution:
    """Monte Carlo replay of a prime stream, one substream per trial.

    Every stream element consumes exactly two uniforms per trial (class
    draw, lift draw) whether or not it moves the walk, so trajectories are
    reproducible functions of (seed, trial) alone.
    """
    if trials < 1:
        raise ConfigError(f"trials must be positive, got {trials}")
    elements = [_stream_element(e) for e in prime_stream]
    u = _uniform_matrix(seed, trials, 1 + 2 * len(elements))
    s = _draw_initial(initial, u[:, 0])
    for idx, (i, _) in enumerate(elements):
        ut = u[:, 1 + 2 * idx]
        ul = u[:, 2 + 2 * idx]
        if i == 0:
            continue
        r = s >> 1
        x = np.power(3.0, -r.astype(np.float64))
        delta = np.zeros_like(s)
        if i == 1:
            t0 = ut < x
            delta = np.where(t0, 2, -2)
        else:
            p0 = x * x
            thr2 = 1.0 - (1.0 - x) * (1.0 - 3.0 * x)
            t0 = ut < p0
            t2 = ut >= thr2
            plus4 = t0 & ((ul * 6).astype(np.int64) < 2)
            delta = np.where(t2, -4, np.where(plus4, 4, 0))
        # the i=1 jump table is the same for split and inert primes
        s = s + delta
        if np.any(s < 0):
            raise ConsistencyError("walk reached a negative dimension")
    kept = s <= initial.s_max
    n_kept = int(kept.sum())
    if n_kept == 0:
        raise ConsistencyError("every trial overflowed the support bound")
    values, counts = np.unique(s[kept], return_counts=True)
    mass = {int(v): c / n_kept for v, c in zip(values, counts)}
    return Distribution(mass, initial.s_max, (trials - n_kept) / trials)


def _walk_scalar(state: ChainState, element, ut: float, ul: float) -> ChainState:
    """Single-trial reference step, kept in lockstep with the vector path."""
    i, is_split = _stream_element(element)
    if i == 0:
        return ChainState(state.dim, state.steps_taken + 1)
    r = r_omega(state.dim)
    if i == 1:
        t = 0 if ut < cij(1, 0, r) else 1
        delta = rank_delta_split(1, t, 0) if is_split else rank_delta_inert(1, t)
    else:
        if ut < cij(2, 0, r):
            t = 0
        elif ut >= 1.0 - cij(2, 2, r):
            t = 2
        else:
            t = 1
        delta = rank_delta_split(2, t, int(ul * 6))
    return ChainState(state.dim + delta, state.steps_taken + 1)


def simulate_chain_scalar(initial: Distribution, prime_stream, trials: int, seed: int) -> Distribution:
    """Loop-based twin of simulate_chain, for cross-checking the vector path."""
    if trials < 1:
        raise ConfigError(f"trials must be positive, got {trials}")
    elements = list(prime_stream)
    u = _uniform_matrix(seed, trials, 1 + 2 * len(elements))
    s0 = _draw_initial(initial, u[:, 0])
    counts: dict[int, int] = {}
    dropped = 0
    for trial in range(trials):
        st = ChainState(int(s0[trial]))
        for idx, e in enumerate(elements):
            st = _walk_scalar(st, e, u[trial, 1 + 2 * idx], u[trial, 2 + 2 * idx])
        if st.dim > initial.s_max:
            dropped += 1
        else:
            counts[st.dim] = counts.get(st.dim, 0) + 1
    kept = trials - dropped
    mass = {s: c / kept for s, c in counts.items()}
    return Distribution(mass, initial.s_max, dropped / trials)
