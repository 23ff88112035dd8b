import pytest

from robustrns.multi_mod import cascade_reconstruct, cascade_spec, general_robust_crt
from robustrns.simkit import (
    BasicKernel,
    CascadeKernel,
    GeneralKernel,
    GroupKernel,
    LevelKernel,
    TrialConfig,
    run_boundary_probe,
    run_comparison,
    run_tau_sweep,
)
from robustrns.two_mod import (
    RemainderObservation,
    TwoModSystem,
    solve_basic,
    solve_level,
)


@pytest.fixture(scope="module")
def system():
    return TwoModSystem.from_moduli(234, 377)


class TestKernelsMatchScalar:
    def test_level_kernel(self, system, rng):
        for j in (1, 2, 3, 4, 5):
            kernel = LevelKernel(system, j)
            r1t = rng.uniform(-5.0, 239.0, size=4000)
            r2t = rng.uniform(-5.0, 382.0, size=4000)
            n1, n2 = kernel.solve(r1t, r2t)
            est = kernel.estimate(n1, n2, r1t, r2t)
            for i in range(0, 4000, 17):
                sol = solve_level(system, RemainderObservation(float(r1t[i]), float(r2t[i])), j)
                assert (sol.n1, sol.n2) == (n1[i], n2[i])
                assert sol.estimate == est[i]

    def test_basic_kernel(self, system, rng):
        kernel = BasicKernel(system)
        r1t = rng.uniform(0.0, 234.0, size=4000)
        r2t = rng.uniform(0.0, 377.0, size=4000)
        n1, n2 = kernel.solve(r1t, r2t)
        for i in range(0, 4000, 17):
            sol = solve_basic(system, RemainderObservation(float(r1t[i]), float(r2t[i])))
            assert (sol.n1, sol.n2) == (n1[i], n2[i])

    def test_cascade_kernel(self, rng):
        spec = cascade_spec([120, 300], [210, 490], 2)
        kernel = CascadeKernel(spec)
        size = 1500
        values = rng.integers(0, 13230, size=size)
        rts = [values % m + rng.uniform(-20, 20, size=size) for m in (120, 300, 210, 490)]
        f1, f2, est = kernel.solve(rts[:2], rts[2:])
        for i in range(0, size, 13):
            sol = cascade_reconstruct(spec, [float(rts[0][i]), float(rts[1][i])],
                                      [float(rts[2][i]), float(rts[3][i])])
            assert sol.foldings1 == (f1[0][i], f1[1][i])
            assert sol.foldings2 == (f2[0][i], f2[1][i])
            assert sol.estimate == est[i]

    def test_general_kernel(self, rng):
        moduli = (120, 300, 210, 490)
        kernel = GeneralKernel(moduli)
        size = 1500
        values = rng.integers(0, 29400, size=size)
        rts = [values % m + rng.uniform(-30, 30, size=size) for m in moduli]
        folds, est, consistent = kernel.solve(rts)
        for i in range(0, size, 13):
            sol = general_robust_crt(moduli, [float(rt[i]) for rt in rts])
            assert sol.consistent == consistent[i]
            assert sol.folds == tuple(int(f[i]) for f in folds)
            assert sol.estimate == est[i]

    def test_group_kernel(self, rng):
        from robustrns.multi_mod import ModuliGroup, single_stage_robust_crt
        group = ModuliGroup.from_moduli([30, 42, 66])
        kernel = GroupKernel(group)
        size = 1000
        values = rng.integers(0, group.eta, size=size)
        rts = [values % m + rng.uniform(-2, 2, size=size) for m in group.moduli]
        folds, est = kernel.solve(rts)
        for i in range(0, size, 11):
            h, e, _ = single_stage_robust_crt(group, [float(rt[i]) for rt in rts])
            assert h == tuple(int(f[i]) for f in folds)
            assert e == est[i]


class TestSweeps:
    def test_determinism(self, system):
        cfg = TrialConfig(system=system, level=3, tau_values=(2.0, 11.0),
                          trials_per_point=30_000, seed=123)
        assert run_tau_sweep(cfg) == run_tau_sweep(cfg)

    def test_zero_tau(self, system):
        cfg = TrialConfig(system=system, level=2, tau_values=(0.0,),
                          trials_per_point=10_000, seed=5)
        row = run_tau_sweep(cfg).rows[0]
        assert row.mean_abs_error == 0.0
        assert row.failure_rate == 0.0
        assert row.mean_rel_error == 0.0

    def test_sub_bound_exactness_and_envelope(self, system):
        for j in (1, 3, 5):
            bound = LevelKernel(system, j).robustness_bound
            taus = (0.5 * bound, 0.9 * bound, 0.99 * bound)
            cfg = TrialConfig(system=system, level=j, tau_values=taus,
                              trials_per_point=20_000, seed=77)
            for row in run_tau_sweep(cfg).rows:
                assert row.failure_rate == 0.0
                assert row.mean_abs_error <= row.x

    def test_failures_above_bound(self, system):
        bound = LevelKernel(system, 3).robustness_bound
        cfg = TrialConfig(system=system, level=3, tau_values=(1.5 * bound,),
                          trials_per_point=20_000, seed=9)
        assert run_tau_sweep(cfg).rows[0].failure_rate > 0

    def test_clamp_mode_counts_and_stays_robust(self, system):
        cfg = TrialConfig(system=system, level=1, tau_values=(30.0,),
                          trials_per_point=20_000, seed=3, range_mode="clamp")
        row = run_tau_sweep(cfg).rows[0]
        assert row.clamped_fraction > 0
        assert row.failure_rate == 0.0  # clamping shrinks errors, never grows them
        allow = TrialConfig(system=system, level=1, tau_values=(30.0,),
                            trials_per_point=20_000, seed=3, range_mode="allow")
        row2 = run_tau_sweep(allow).rows[0]
        assert row2.clamped_fraction == row.clamped_fraction  # same out-of-range draws

    def test_integer_error_mode(self, system):
        cfg = TrialConfig(system=system, level=3, tau_values=(12.0,),
                          trials_per_point=20_000, seed=13, error_mode="integer")
        row = run_tau_sweep(cfg).rows[0]
        assert row.failure_rate == 0.0
        assert row.mean_abs_error <= 12.0

    def test_real_value_mode(self):
        system = TwoModSystem.real(2.5, 18, 29)
        cfg = TrialConfig(system=system, level=3, tau_values=(2.0,),
                          trials_per_point=20_000, seed=21, value_mode="real")
        row = run_tau_sweep(cfg).rows[0]
        assert row.failure_rate == 0.0
        assert row.mean_abs_error <= 2.0

    def test_zero_value_exclusion_reported(self, system):
        cfg = TrialConfig(system=system, level=1, tau_values=(1.0,),
                          trials_per_point=50_000, seed=31)
        row = run_tau_sweep(cfg).rows[0]
        # values are uniform over [0, 468): about 1/468 of draws hit zero
        assert row.zero_value_excluded > 0
        assert row.trials == 50_000

    def test_cascade_sweep(self):
        spec = cascade_spec([120, 300], [210, 490], 2)
        cfg = TrialConfig(cascade=spec, level=2, tau_values=(5.0, 14.0),
                          trials_per_point=10_000, seed=8)
        rows = run_tau_sweep(cfg).rows
        assert rows[0].failure_rate == 0.0
        assert rows[1].failure_rate == 0.0
        assert rows[1].mean_abs_error <= 14.0


class TestBoundaryProbe:
    def test_interior_mae_near_third_of_bound(self, system):
        res = run_boundary_probe(system, 1, [300], 40_000, seed=17)
        row = res.rows[0]
        bound = LevelKernel(system, 1).robustness_bound
        assert row.failure_rate == 0.0
        assert row.mean_abs_error == pytest.approx(bound / 3, rel=0.1)

    def test_range_boundary_jump(self, system):
        res = run_boundary_probe(system, 1, [467, 468], 40_000, seed=17)
        below, at = res.rows
        assert below.failure_rate == 0.0
        assert at.failure_rate == 1.0
        assert at.mean_abs_error > 20 * below.mean_abs_error

    def test_determinism(self, system):
        a = run_boundary_probe(system, 2, [700, 754], 20_000, seed=4)
        b = run_boundary_probe(system, 2, [700, 754], 20_000, seed=4)
        assert a == b


class TestComparison:
    def test_bracketing_of_bounds(self):
        spec = cascade_spec([120, 300], [210, 490], 2)
        single, two_stage, cascade = run_comparison(spec, [2.0, 10.0, 14.0], 15_000, seed=29)
        assert single.series == "single_stage"
        assert two_stage.series == "two_stage"
        assert cascade.series == "cascade_level2"
        # tau = 2 < 2.5: everything exact
        assert single.rows[0].failure_rate == 0.0
        assert two_stage.rows[0].failure_rate == 0.0
        assert cascade.rows[0].failure_rate == 0.0
        # tau = 10 > 2.5: single stage fails, the level-2 cascade holds
        assert single.rows[1].failure_rate > 0
        assert cascade.rows[1].failure_rate == 0.0
        # tau = 14: only the level-2 cascade is still exact
        assert single.rows[2].failure_rate > 0
        assert two_stage.rows[2].failure_rate > 0
        assert cascade.rows[2].failure_rate == 0.0
        assert cascade.rows[2].mean_abs_error <= 14.0

    def test_envelope_below_all_bounds(self):
        spec = cascade_spec([120, 300], [210, 490], 2)
        for res in run_comparison(spec, [2.0], 10_000, seed=41):
            assert res.rows[0].mean_abs_error <= 2.0


class TestConfigValidation:
    def test_bad_modes(self, system):
        with pytest.raises(ValueError):
            TrialConfig(system=system, tau_values=(1.0,), value_mode="decimal")
        with pytest.raises(ValueError):
            TrialConfig(system=system, tau_values=(-1.0,))
        with pytest.raises(ValueError):
            TrialConfig(tau_values=(1.0,))
        with pytest.raises(ValueError):
            TrialConfig(system=system, cascade=cascade_spec([120, 300], [210, 490], 2))
