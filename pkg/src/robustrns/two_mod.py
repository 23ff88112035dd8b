"""Two-modulus fold recovery: trade-off levels, residue ladders, closed-form solvers.

A value N written as ``N = n_i * m_i + r_i`` for two moduli ``m_i = m * gamma_i``
can be recovered from erroneous remainders as long as the fold integers ``n_i``
are identified exactly.  The chain of Euclidean remainders of the cofactor pair
parameterizes a ladder of trade-off levels: lower levels tolerate larger
remainder errors over a smaller usable range, higher levels reach the full lcm
with the smallest error budget.  Everything here is exact: integer observations
go through ``fractions.Fraction``, real-scalar observations through floats.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .modmath import as_exact_ratio, mod_inverse, round_half_up


@dataclass(frozen=True)
class TwoModSystem:
    """Moduli ``m1 = m * gamma1 < m2 = m * gamma2`` with coprime cofactors.

    ``m`` is an int in integer mode and a float in real-scalar mode; the
    cofactors are integers either way and must satisfy ``1 < gamma1 < gamma2``.
    """

    m: int | float
    gamma1: int
    gamma2: int

    def __post_init__(self):
        if not isinstance(self.gamma1, int) or not isinstance(self.gamma2, int):
            raise ValueError("TwoModSystem: cofactors must be integers")
        if not 1 < self.gamma1 < self.gamma2:
            raise ValueError(
                f"TwoModSystem: need 1 < gamma1 < gamma2, got ({self.gamma1}, {self.gamma2})"
            )
        if math.gcd(self.gamma1, self.gamma2) != 1:
            raise ValueError(
                f"TwoModSystem: cofactors ({self.gamma1}, {self.gamma2}) are not coprime"
            )
        if not (isinstance(self.m, int) and self.m > 0) and not (
            isinstance(self.m, float) and math.isfinite(self.m) and self.m > 0
        ):
            raise ValueError(f"TwoModSystem: invalid common factor m={self.m!r}")

    @classmethod
    def from_moduli(cls, m1: int, m2: int) -> "TwoModSystem":
        """Integer-mode system from the two moduli themselves."""
        if not (isinstance(m1, int) and isinstance(m2, int)):
            raise ValueError("from_moduli: moduli must be integers")
        if not 0 < m1 < m2:
            raise ValueError(f"from_moduli: need 0 < m1 < m2, got ({m1}, {m2})")
        m = math.gcd(m1, m2)
        return cls(m, m1 // m, m2 // m)

    @classmethod
    def real(cls, m: float, gamma1: int, gamma2: int) -> "TwoModSystem":
        """Real-scalar system: real common factor, integer cofactors."""
        return cls(float(m), gamma1, gamma2)

    @property
    def is_real(self) -> bool:
        return isinstance(self.m, float)

    @property
    def m1(self):
        return self.m * self.gamma1

    @property
    def m2(self):
        return self.m * self.gamma2

    @property
    def lcm(self):
        return self.m * self.gamma1 * self.gamma2


@dataclass(frozen=True)
class RemainderObservation:
    """Observed (possibly erroneous) remainders.

    Values normally lie in ``[0, m_i)``; the solvers tolerate excursions, and
    every exactness guarantee is stated purely in terms of the error window.
    """

    r1: int | float
    r2: int | float


@dataclass(frozen=True)
class FoldingSolution:
    """Recovered fold integers plus the averaged reconstruction.

    ``estimate`` is the rounded mean in integer mode and the raw mean in
    real-scalar mode; ``mean`` always keeps the unrounded average.
    """

    n1: int
    n2: int
    estimate: int | float
    mean: Fraction | float


@dataclass(frozen=True)
class SigmaChain:
    """Euclidean remainder chain of the cofactors: values[0] is sigma_{-1}.

    ``sigma(-1) = gamma2``, ``sigma(0) = gamma1``, and each later entry is the
    remainder of the entry two back modulo the previous one; ``k`` is the last
    index whose entry exceeds 1, so the chain ends at ``sigma(k + 1) = 1``.
    """

    values: tuple[int, ...]
    k: int

    def sigma(self, i: int) -> int:
        return self.values[i + 1]

    @property
    def levels(self) -> int:
        return self.k + 1


@dataclass(frozen=True)
class DeltaChain:
    """Minimum-remainder chain used by the prior-art baseline bounds.

    ``values[0] = m2``, ``values[1] = m1``, ``values[2] = m2 mod m1`` and each
    later entry is ``min(x, prev - x)`` with ``x`` the remainder of the entry
    two back modulo the previous one.  Every entry is a multiple of ``m`` and
    ``g`` is the index of the final entry, which equals ``m``.
    """

    values: tuple
    g: int

    def delta(self, i: int) -> int | float:
        return self.values[i + 1]


@dataclass(frozen=True)
class ResidueLadder:
    """The residues ``|t * gamma_other|_gamma`` for ``t = 0..depth``.

    ``side=2`` reduces multiples of gamma2 modulo gamma1; ``side=1`` the other
    way around.  All elements are distinct; ``min_gap`` is the smallest
    pairwise distance.
    """

    side: int
    depth: int
    elements: tuple[int, ...]
    min_gap: int


@dataclass(frozen=True)
class RobustnessLevel:
    """One row of the range/error trade-off table."""

    j: int
    sigma: int
    depth1: int
    depth2: int
    dynamic_range: int | float
    robustness_bound: Fraction | float


@lru_cache(maxsize=None)
def _sigma_values(gamma1: int, gamma2: int) -> tuple[tuple[int, ...], int]:
    values = [gamma2, gamma1]
    while values[-1] != 1:
        values.append(values[-2] % values[-1])
    return tuple(values), len(values) - 3  # k: last index (from -1) with value > 1


def sigma_chain(system: TwoModSystem) -> SigmaChain:
    values, k = _sigma_values(system.gamma1, system.gamma2)
    return SigmaChain(values, k)


def delta_chain(system: TwoModSystem) -> DeltaChain:
    """Baseline chain, scaled by m so it starts at (m2, m1)."""
    rel = [system.gamma2, system.gamma1, system.gamma2 % system.gamma1]
    while rel[-1] != 1:
        x = rel[-2] % rel[-1]
        rel.append(min(x, rel[-1] - x))
    return DeltaChain(tuple(system.m * v for v in rel), len(rel) - 2)


def residue_ladder(system: TwoModSystem, side: int, depth: int) -> ResidueLadder:
    if side == 2:
        base, mod = system.gamma2, system.gamma1
    elif side == 1:
        base, mod = system.gamma1, system.gamma2
    else:
        raise ValueError(f"residue_ladder: side must be 1 or 2, got {side}")
    if not 1 <= depth < mod:
        raise ValueError(f"residue_ladder: depth {depth} out of range [1, {mod})")
    elements = tuple(t * base % mod for t in range(depth + 1))
    ordered = sorted(elements)
    min_gap = min(b - a for a, b in zip(ordered, ordered[1:]))
    return ResidueLadder(side, depth, elements, min_gap)


@lru_cache(maxsize=None)
def _depth_tables(gamma1: int, gamma2: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Ladder depths for j = 1..k+1, by the closed-form recurrences."""
    values, k = _sigma_values(gamma1, gamma2)

    def sig(i):
        return values[i + 1]

    if k == 0:
        return (gamma2 - 1,), (gamma1 - 1,)
    d1 = {1: (gamma2 // gamma1) * (gamma1 // sig(1))}
    d2 = {1: gamma1 // sig(1)}
    if k >= 2:
        q1, q2 = gamma2 // gamma1, sig(1) // sig(2)
        d1[2] = q1 * d2[1] * q2 + q2 + q1
        d2[2] = d2[1] * q2
    for j in range(3, k + 1):
        q = sig(j - 1) // sig(j)
        if j % 2 == 1:
            d2[j] = q * (d2[j - 1] + 1) + d2[j - 2]
            d1[j] = q * d1[j - 1] + d1[j - 2]
        else:
            d2[j] = q * d2[j - 1] + d2[j - 2]
            d1[j] = q * (d1[j - 1] + 1) + d1[j - 2]
    d1[k + 1] = gamma2 - 1
    d2[k + 1] = gamma1 - 1
    return (
        tuple(d1[j] for j in range(1, k + 2)),
        tuple(d2[j] for j in range(1, k + 2)),
    )


def ladder_depths(system: TwoModSystem, j: int) -> tuple[int, int]:
    """Closed-form ladder depths ``(depth1, depth2)`` at level ``j``."""
    d1, d2 = _depth_tables(system.gamma1, system.gamma2)
    if not 1 <= j <= len(d1):
        raise ValueError(f"ladder_depths: level {j} out of range [1, {len(d1)}]")
    return d1[j - 1], d2[j - 1]


def level_table(system: TwoModSystem) -> tuple[RobustnessLevel, ...]:
    """All trade-off rows, from the most robust level up to the full lcm."""
    chain = sigma_chain(system)
    d1s, d2s = _depth_tables(system.gamma1, system.gamma2)
    rows = []
    for j in range(1, chain.levels + 1):
        s = chain.sigma(j)
        depth1, depth2 = d1s[j - 1], d2s[j - 1]
        rng = min(system.m2 * (1 + depth2), system.m1 * (1 + depth1))
        if system.is_real:
            bound = system.m * s / 4.0
        else:
            bound = Fraction(system.m * s, 4)
        rows.append(RobustnessLevel(j, s, depth1, depth2, rng, bound))
    return tuple(rows)


@dataclass(frozen=True)
class LevelContext:
    """Cached per-(system, level) data so hot loops avoid rebuilding ladders."""

    system: TwoModSystem
    j: int
    sigma: int
    depth1: int
    depth2: int
    s1: tuple[int, ...]  # sorted ladder |t*gamma1|_gamma2, t = 0..depth1
    s2: tuple[int, ...]  # sorted ladder |t*gamma2|_gamma1, t = 0..depth2
    inv12: int  # inverse of gamma1 modulo gamma2
    inv21: int  # inverse of gamma2 modulo gamma1
    dynamic_range: int | float
    robustness_bound: Fraction | float
    half: Fraction  # sigma / 2, exact


@lru_cache(maxsize=None)
def level_context(system: TwoModSystem, j: int) -> LevelContext:
    depth1, depth2 = ladder_depths(system, j)
    chain = sigma_chain(system)
    s = chain.sigma(j)
    g1, g2 = system.gamma1, system.gamma2
    s1 = tuple(sorted(t * g1 % g2 for t in range(depth1 + 1)))
    s2 = tuple(sorted(t * g2 % g1 for t in range(depth2 + 1)))
    rng = min(system.m2 * (1 + depth2), system.m1 * (1 + depth1))
    if system.is_real:
        bound = system.m * s / 4.0
    else:
        bound = Fraction(system.m * s, 4)
    return LevelContext(
        system, j, s, depth1, depth2, s1, s2,
        mod_inverse(g1, g2), mod_inverse(g2, g1),
        rng, bound, Fraction(s, 2),
    )


def _q21(system: TwoModSystem, obs: RemainderObservation):
    return as_exact_ratio(obs.r1 - obs.r2, system.m)


def estimate_value(n1: int, n2: int, obs: RemainderObservation, system: TwoModSystem):
    """Averaged reconstruction from fold integers, rounded in integer mode."""
    mean = as_exact_ratio((n1 * system.m1 + obs.r1) + (n2 * system.m2 + obs.r2), 2)
    return mean if system.is_real else round_half_up(mean)


def _solution(system, obs, n1, n2) -> FoldingSolution:
    mean = as_exact_ratio((n1 * system.m1 + obs.r1) + (n2 * system.m2 + obs.r2), 2)
    estimate = mean if system.is_real else round_half_up(mean)
    return FoldingSolution(n1, n2, estimate, mean)


def solve_basic(system: TwoModSystem, obs: RemainderObservation) -> FoldingSolution:
    """Closed-form fold recovery for the coarsest trade-off level.

    Exact whenever the value lies below ``m1 * (1 + (g2 // g1) * (g1 // b))``
    with ``b = gamma2 mod gamma1`` and the scaled error difference
    ``(dr1 - dr2) / m`` falls in ``[-b/2, b/2)``.
    """
    g1 = system.gamma1
    beta = system.gamma2 % g1
    half = Fraction(beta, 2)
    q = _q21(system, obs)
    if q >= half:
        n2 = round_half_up(q / beta)
    elif q < -half:
        wrap = q - math.floor(q / g1) * g1
        if half <= wrap < (g1 // beta) * beta - half:
            n2 = round_half_up(wrap / beta)
        else:
            n2 = 0
    else:
        n2 = 0
    n1 = round_half_up(as_exact_ratio(n2 * system.m2 + obs.r2 - obs.r1, system.m1))
    return _solution(system, obs, n1, n2)


def _window_pick(elements: tuple[int, ...], target, half: Fraction, left_open: bool) -> int:
    """Unique ladder element in the half-open window around ``target``.

    Falls back to the nearest element (ties to the smaller one) when the
    window is empty; at most one element can ever sit inside the window
    because the ladder's minimum gap is at least ``2 * half``.
    """
    if left_open:  # want x with target - half < x <= target + half
        i = bisect.bisect_right(elements, target - half)
        if i < len(elements) and elements[i] <= target + half:
            return elements[i]
    else:  # want x with target - half <= x < target + half
        i = bisect.bisect_left(elements, target - half)
        if i < len(elements) and elements[i] < target + half:
            return elements[i]
    i = bisect.bisect_left(elements, target)
    lo = elements[max(i - 1, 0)]
    hi = elements[min(i, len(elements) - 1)]
    return lo if target - lo <= hi - target else hi


def solve_level(system: TwoModSystem, obs: RemainderObservation, j: int) -> FoldingSolution:
    """Ladder-window fold recovery at trade-off level ``j``.

    Exact whenever the value lies below the level's dynamic range and the
    scaled error difference ``(dr1 - dr2) / m`` falls in
    ``[-sigma_j / 2, sigma_j / 2)``.
    """
    ctx = level_context(system, j)
    return solve_with_context(ctx, obs)


def solve_with_context(ctx: LevelContext, obs: RemainderObservation) -> FoldingSolution:
    system = ctx.system
    q = _q21(system, obs)
    if q >= ctx.half:
        s2 = _window_pick(ctx.s2, q, ctx.half, left_open=True)
        n2 = s2 * ctx.inv21 % system.gamma1
        n1 = round_half_up(as_exact_ratio(n2 * system.m2 + obs.r2 - obs.r1, system.m1))
    elif q < -ctx.half:
        s1 = _window_pick(ctx.s1, -q, ctx.half, left_open=False)
        n1 = s1 * ctx.inv12 % system.gamma2
        n2 = round_half_up(as_exact_ratio(n1 * system.m1 + obs.r1 - obs.r2, system.m2))
    else:
        n1 = n2 = 0
    return _solution(system, obs, n1, n2)


def solve_level_real(system: TwoModSystem, obs: RemainderObservation, j: int) -> FoldingSolution:
    """Real-scalar entry point; identical control flow with real arithmetic."""
    if not system.is_real:
        raise ValueError("solve_level_real: system is not in real-scalar mode")
    return solve_level(system, obs, j)


def true_folds(system: TwoModSystem, value) -> tuple[int, int]:
    """Fold integers of an exact value: ``n_i = floor(value / m_i)``."""
    if system.is_real:
        return math.floor(value / system.m1), math.floor(value / system.m2)
    return value // system.m1, value // system.m2
