from fractions import Fraction

import pytest

from robustrns.crt_core import InconsistentRemainders
from robustrns.oracle import (
    crt_scan,
    exhaustive_fold_search,
    falsifier_report,
    ladder_depths_definitional,
    level_exactness_scan,
    range_falsifier,
)
from robustrns.two_mod import (
    RemainderObservation,
    TwoModSystem,
    ladder_depths,
    level_context,
    sigma_chain,
    solve_level,
    true_folds,
)
from tests_util import random_coprime_pair


class TestCrtScan:
    def test_examples(self):
        assert crt_scan([4, 24], [24, 38]) == 100
        assert crt_scan([0, 0], [24, 38]) == 0

    def test_inconsistent(self):
        with pytest.raises(InconsistentRemainders):
            crt_scan([1, 2], [12, 18])


class TestFoldSearch:
    def test_zero_errors_return_value_itself(self):
        s = TwoModSystem.from_moduli(234, 377)
        found = exhaustive_fold_search(s, RemainderObservation(64, 246), 1170)
        assert (found.value, found.n1, found.n2) == (1000, 4, 2)

    def test_noisy_observation(self):
        s = TwoModSystem.from_moduli(234, 377)
        found = exhaustive_fold_search(s, RemainderObservation(69, 240), 1170)
        assert (found.n1, found.n2) == (4, 2)

    def test_second_system(self):
        s = TwoModSystem.from_moduli(40, 136)
        found = exhaustive_fold_search(s, RemainderObservation(23, 98), 280)
        assert (found.n1, found.n2) == (2, 0)

    def test_tie_takes_smallest_value(self):
        s = TwoModSystem.from_moduli(234, 377)
        # deviations tie at 6 for values 999 and 1000; the scan keeps 999
        found = exhaustive_fold_search(s, RemainderObservation(69, 240), 1170)
        assert found.value == 999
        assert found.deviation == 6

    def test_bound_validation(self):
        s = TwoModSystem.from_moduli(24, 38)
        with pytest.raises(ValueError):
            exhaustive_fold_search(s, RemainderObservation(0, 0), 457)


class TestDefinitionalDepths:
    def test_reference_values(self):
        s = TwoModSystem(13, 18, 29)
        assert ladder_depths_definitional(s, 3) == (4, 3)
        assert ladder_depths_definitional(TwoModSystem(30, 20, 49), 2) == (22, 8)

    def test_top_level(self):
        for g1, g2 in [(18, 29), (20, 49), (5, 17)]:
            s = TwoModSystem(1, g1, g2)
            top = sigma_chain(s).levels
            assert ladder_depths_definitional(s, top) == (g2 - 1, g1 - 1)

    def test_matches_closed_form_randomized(self, rng):
        for _ in range(12):
            g1, g2 = random_coprime_pair(rng, hi=160)
            s = TwoModSystem(1, g1, g2)
            for j in range(1, sigma_chain(s).levels + 1):
                assert ladder_depths(s, j) == ladder_depths_definitional(s, j)


class TestFalsifier:
    def test_defeats_solver_everywhere(self):
        s = TwoModSystem.from_moduli(234, 377)
        for j in range(1, 6):
            assert falsifier_report(s, j).agrees

    def test_errors_are_legal(self):
        s = TwoModSystem.from_moduli(234, 377)
        for j in range(1, 6):
            inst = range_falsifier(s, j)
            ctx = level_context(s, j)
            diff = Fraction(inst.dr1 - inst.dr2) / s.m
            assert -Fraction(ctx.sigma, 2) <= diff < Fraction(ctx.sigma, 2)

    def test_reference_values(self):
        s = TwoModSystem.from_moduli(234, 377)
        assert [range_falsifier(s, j).value for j in range(1, 6)] == [
            468, 754, 1170, 1885, 6786]

    def test_same_construction_below_range_is_harmless(self):
        # one step below the range, the analogous half-distance nudge stays
        # inside the guarantee and the solver must recover exactly
        s = TwoModSystem.from_moduli(234, 377)
        for j in range(1, 6):
            ctx = level_context(s, j)
            value = ctx.dynamic_range - 1
            r1, r2 = value % 234, value % 377
            if s.m2 * (1 + ctx.depth2) <= s.m1 * (1 + ctx.depth1):
                w = min(ctx.s2, key=lambda x: (abs(x - Fraction(r1, s.m)), x))
                dr1, dr2 = Fraction(s.m * w - r1, 2), Fraction(0)
            else:
                w = min(ctx.s1, key=lambda x: (abs(x - Fraction(r2, s.m)), x))
                dr1, dr2 = Fraction(0), Fraction(s.m * w - r2, 2)
            diff = Fraction(dr1 - dr2) / s.m
            if not -Fraction(ctx.sigma, 2) <= diff < Fraction(ctx.sigma, 2):
                continue  # nudge not legal at this value; nothing to assert
            sol = solve_level(s, RemainderObservation(r1 + dr1, r2 + dr2), j)
            assert (sol.n1, sol.n2) == true_folds(s, value)


class TestExactnessScan:
    def test_small_system_all_levels(self):
        s = TwoModSystem.from_moduli(12, 18)
        scan = level_exactness_scan(s, 1)
        assert scan.ok
        assert scan.checked > 0
