"""Error-free reconstruction from remainders, for general (non-coprime) moduli."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .modmath import CoprimeFactorization, coprime_factorization, mod_inverse


class InconsistentRemainders(ValueError):
    """The remainders disagree on a shared factor of two moduli."""


@dataclass(frozen=True)
class CrtSystem:
    """Precomputed reconstruction data for a fixed list of moduli.

    ``M[j] = lcm // mu[j]`` and ``D[j]`` is the inverse of ``M[j]`` modulo
    ``mu[j]`` (0 when ``mu[j] == 1``), so that ``sum(r_j * D_j * M_j)`` reduced
    modulo the lcm recovers any value consistent with all the congruences.
    """

    moduli: tuple[int, ...]
    factorization: CoprimeFactorization
    M: tuple[int, ...]
    D: tuple[int, ...]
    lcm: int


def crt_system(moduli) -> CrtSystem:
    fact = coprime_factorization(moduli)
    lcm = fact.lcm
    M = tuple(lcm // mu for mu in fact.mu)
    D = tuple(0 if mu == 1 else mod_inverse(Mj % mu, mu) for Mj, mu in zip(M, fact.mu))
    return CrtSystem(fact.moduli, fact, M, D, lcm)


def remainders_of(value: int, system: CrtSystem) -> tuple[int, ...]:
    """Remainders of a nonnegative integer with respect to every modulus."""
    if value < 0:
        raise ValueError(f"remainders_of: value must be nonnegative, got {value}")
    return tuple(value % m for m in system.moduli)


def crt_reconstruct(remainders, system: CrtSystem) -> int:
    """The unique value in ``[0, lcm)`` matching all remainders.

    Raises :class:`InconsistentRemainders` when no such value exists, which
    can only happen for non-coprime moduli.
    """
    rs = tuple(remainders)
    if len(rs) != len(system.moduli):
        raise ValueError("crt_reconstruct: remainder/modulus count mismatch")
    for r, m in zip(rs, system.moduli):
        if not (0 <= r < m):
            raise ValueError(f"crt_reconstruct: remainder {r} out of range for modulus {m}")
    for i in range(len(rs)):
        for j in range(i + 1, len(rs)):
            g = math.gcd(system.moduli[i], system.moduli[j])
            if (rs[i] - rs[j]) % g != 0:
                raise InconsistentRemainders(
                    f"remainders {rs[i]} and {rs[j]} disagree modulo "
                    f"gcd({system.moduli[i]}, {system.moduli[j]}) = {g}"
                )
    total = sum(r * d * M for r, d, M in zip(rs, system.D, system.M))
    return total % system.lcm
