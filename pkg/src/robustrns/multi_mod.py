"""Robust reconstruction for many moduli: per-group recovery plus a two-group cascade.

A group of moduli ``m_k = m * gamma_k`` with pairwise-coprime cofactors is
solved in closed form through the rounded pairwise remainder differences.  Two
such groups combine into a cascade: each group's estimate becomes an erroneous
remainder of the value modulo the group lcm, and the two-modulus level solver
finishes the job.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .modmath import as_exact_ratio, mod_inverse, round_half_up
from .two_mod import (
    RemainderObservation,
    TwoModSystem,
    level_context,
    sigma_chain,
    solve_with_context,
)


@dataclass(frozen=True)
class ModuliGroup:
    """Moduli ``m_k = gcd * cofactor_k`` with pairwise-coprime cofactors."""

    moduli: tuple[int, ...]
    gcd: int
    cofactors: tuple[int, ...]
    eta: int  # lcm of the group

    @classmethod
    def from_moduli(cls, moduli) -> "ModuliGroup":
        ms = tuple(moduli)
        if not ms:
            raise ValueError("ModuliGroup: need at least one modulus")
        for m in ms:
            if not isinstance(m, int) or m < 1:
                raise ValueError(f"ModuliGroup: invalid modulus {m!r}")
        g = math.gcd(*ms)
        cof = tuple(m // g for m in ms)
        for i in range(len(cof)):
            for j in range(i + 1, len(cof)):
                if math.gcd(cof[i], cof[j]) != 1:
                    raise ValueError(
                        f"ModuliGroup: cofactors {cof[i]} and {cof[j]} share a factor; "
                        "only pairwise-coprime cofactors are supported"
                    )
        return cls(ms, g, cof, g * math.prod(cof))


def single_stage_robust_crt(group: ModuliGroup, remainders) -> tuple[tuple[int, ...], int, Fraction | float]:
    """Recover within-group fold integers and the rounded group estimate.

    Returns ``(folds, estimate, mean)``.  The folds are exact whenever every
    scaled error difference ``(dr_k - dr_1) / gcd`` lies in ``[-1/2, 1/2)``;
    error bound below ``gcd / 4`` is sufficient.
    """
    rs = tuple(remainders)
    if len(rs) != len(group.moduli):
        raise ValueError("single_stage_robust_crt: remainder/modulus count mismatch")
    g1 = group.cofactors[0]
    m = group.gcd
    # xi_k estimates (r_k - r_1) / m = h_1 * g_1 - h_k * g_k, exactly under the
    # window condition; h_1 then follows from the coprime congruences.
    xis = [round_half_up(as_exact_ratio(rs[k] - rs[0], m)) for k in range(1, len(rs))]
    h1, q = 0, 1
    for xi, gk in zip(xis, group.cofactors[1:]):
        if gk == 1:
            continue
        a = xi * mod_inverse(g1, gk) % gk
        t = (a - h1) * mod_inverse(q, gk) % gk
        h1 += q * t
        q *= gk
    folds = [h1]
    for xi, gk in zip(xis, group.cofactors[1:]):
        num = h1 * g1 - xi
        folds.append(num // gk)  # exact: h1 * g1 == xi (mod g_k) by construction
    total = sum(h * mod_ + r for h, mod_, r in zip(folds, group.moduli, rs))
    mean = as_exact_ratio(total, len(rs))
    return tuple(folds), round_half_up(mean), mean


@dataclass(frozen=True)
class GeneralCrtSolution:
    """Fold recovery over arbitrary moduli (cofactors need not be coprime)."""

    folds: tuple[int, ...]
    estimate: int
    mean: Fraction | float
    consistent: bool


def general_robust_crt(moduli, remainders) -> GeneralCrtSolution:
    """Single-stage fold recovery for arbitrary moduli at the lcm-wide range.

    Exact whenever every scaled error difference ``(dr_k - dr_1) / gcd`` lies
    in ``[-1/2, 1/2)`` (error bound below ``gcd / 4`` suffices).  The rounded
    pairwise differences induce congruences ``n_1 * g_1 = xi_k (mod g_k)``
    which are solved jointly; an infeasible system marks the trial as
    inconsistent and falls back to all-zero folds.
    """
    ms = tuple(moduli)
    rs = tuple(remainders)
    if len(ms) < 2 or len(rs) != len(ms):
        raise ValueError("general_robust_crt: need matching moduli/remainders, at least two")
    m = math.gcd(*ms)
    gammas = tuple(mi // m for mi in ms)
    g1 = gammas[0]
    xis = [round_half_up(as_exact_ratio(rs[k] - rs[0], m)) for k in range(1, len(rs))]
    n1, q = 0, 1
    consistent = True
    for xi, gk in zip(xis, gammas[1:]):
        g = math.gcd(g1, gk)
        if xi % g != 0:
            consistent = False
            break
        qk = gk // g
        if qk > 1:
            a = (xi // g) * mod_inverse((g1 // g) % qk, qk) % qk
            gq = math.gcd(q, qk)
            if (a - n1) % gq != 0:
                consistent = False
                break
            step = qk // gq
            if step > 1:
                t = ((a - n1) // gq) * mod_inverse((q // gq) % step, step) % step
                n1 += q * t
            q *= step
    if consistent:
        folds = [n1]
        for xi, gk in zip(xis, gammas[1:]):
            folds.append((n1 * g1 - xi) // gk)
    else:
        folds = [0] * len(ms)
    total = sum(n * mod_ + r for n, mod_, r in zip(folds, ms, rs))
    mean = as_exact_ratio(total, len(rs))
    return GeneralCrtSolution(tuple(folds), round_half_up(mean), mean, consistent)


@dataclass(frozen=True)
class CascadeSpec:
    """Two moduli groups plus the cross system over their lcms.

    ``group1``/``group2`` keep the caller's order; ``cross`` always has its
    smaller modulus first, and ``low_is_group1`` records which group that is.
    Overlapping groups are accepted but flagged.
    """

    group1: ModuliGroup
    group2: ModuliGroup
    level: int
    cross: TwoModSystem
    low_is_group1: bool
    overlapping: bool


def cascade_spec(moduli1, moduli2, level: int) -> CascadeSpec:
    group1 = ModuliGroup.from_moduli(moduli1)
    group2 = ModuliGroup.from_moduli(moduli2)
    if group1.eta == group2.eta:
        raise ValueError("cascade_spec: group lcms must differ")
    low_is_group1 = group1.eta < group2.eta
    lo, hi = sorted((group1.eta, group2.eta))
    cross = TwoModSystem.from_moduli(lo, hi)
    chain = sigma_chain(cross)
    if not 1 <= level <= chain.levels:
        raise ValueError(f"cascade_spec: level {level} out of range [1, {chain.levels}]")
    overlapping = bool(set(group1.moduli) & set(group2.moduli))
    return CascadeSpec(group1, group2, level, cross, low_is_group1, overlapping)


@dataclass(frozen=True)
class CascadeSolution:
    """Inner folds, outer folds, and the combined reconstruction.

    ``foldings1``/``foldings2`` are the total fold integers of the value with
    respect to each original modulus: ``l_i * (eta_i / m_ik) + h_ik``.
    """

    h1: tuple[int, ...]
    h2: tuple[int, ...]
    l1: int
    l2: int
    group_estimates: tuple[int, int]
    foldings1: tuple[int, ...]
    foldings2: tuple[int, ...]
    estimate: int
    mean: Fraction | float


def cascade_reconstruct(spec: CascadeSpec, remainders1, remainders2) -> CascadeSolution:
    """Run both group stages, then the cross stage, and assemble total folds."""
    rs1 = tuple(remainders1)
    rs2 = tuple(remainders2)
    h1, est1, _ = single_stage_robust_crt(spec.group1, rs1)
    h2, est2, _ = single_stage_robust_crt(spec.group2, rs2)
    if spec.low_is_group1:
        obs = RemainderObservation(est1, est2)
    else:
        obs = RemainderObservation(est2, est1)
    cross_sol = solve_with_context(level_context(spec.cross, spec.level), obs)
    if spec.low_is_group1:
        l1, l2 = cross_sol.n1, cross_sol.n2
    else:
        l1, l2 = cross_sol.n2, cross_sol.n1
    foldings1 = tuple(l1 * (spec.group1.eta // mk) + hk for mk, hk in zip(spec.group1.moduli, h1))
    foldings2 = tuple(l2 * (spec.group2.eta // mk) + hk for mk, hk in zip(spec.group2.moduli, h2))
    total = sum(n * mk + r for n, mk, r in zip(foldings1, spec.group1.moduli, rs1))
    total += sum(n * mk + r for n, mk, r in zip(foldings2, spec.group2.moduli, rs2))
    mean = as_exact_ratio(total, len(rs1) + len(rs2))
    return CascadeSolution(
        h1, h2, l1, l2, (est1, est2), foldings1, foldings2, round_half_up(mean), mean
    )


def cascade_bounds(spec: CascadeSpec) -> tuple[int, Fraction]:
    """Usable range and error bound of the cascade at its configured level."""
    ctx = level_context(spec.cross, spec.level)
    tau = Fraction(min(spec.group1.gcd, spec.group2.gcd, spec.cross.m * ctx.sigma), 4)
    return ctx.dynamic_range, tau
