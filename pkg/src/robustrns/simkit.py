"""Deterministic Monte Carlo harness: error sweeps, boundary probes, comparisons.

Trials are vectorized with numpy in fixed-size chunks; the generator for chunk
``c`` of point ``p`` is seeded from ``SeedSequence(seed, spawn_key=(p, c))``, so
results are bit-identical for a given configuration no matter how the chunks
are scheduled.  Observed remainders are left out of range by default (the
fraction is reported); ``range_mode="clamp"`` pins them into ``[0, m_i)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modmath import mod_inverse
from .multi_mod import CascadeSpec
from .two_mod import TwoModSystem, level_context, sigma_chain

CHUNK = 1 << 16

_VALUE_MODES = ("integer", "real")
_ERROR_MODES = ("real", "integer")
_RANGE_MODES = ("allow", "clamp")


@dataclass(frozen=True)
class TrialConfig:
    """One sweep: a system (or cascade), a level, error bounds, and a seed."""

    system: TwoModSystem | None = None
    cascade: CascadeSpec | None = None
    level: int = 1
    tau_values: tuple[float, ...] = ()
    trials_per_point: int = 100_000
    seed: int = 0
    value_mode: str = "integer"
    error_mode: str = "real"
    range_mode: str = "allow"

    def __post_init__(self):
        if (self.system is None) == (self.cascade is None):
            raise ValueError("TrialConfig: provide exactly one of system / cascade")
        if self.trials_per_point < 1:
            raise ValueError("TrialConfig: trials_per_point must be at least 1")
        if any(t < 0 for t in self.tau_values):
            raise ValueError("TrialConfig: tau values must be nonnegative")
        if self.value_mode not in _VALUE_MODES:
            raise ValueError(f"TrialConfig: unknown value_mode {self.value_mode!r}")
        if self.error_mode not in _ERROR_MODES:
            raise ValueError(f"TrialConfig: unknown error_mode {self.error_mode!r}")
        if self.range_mode not in _RANGE_MODES:
            raise ValueError(f"TrialConfig: unknown range_mode {self.range_mode!r}")
        if self.cascade is not None and self.value_mode == "real":
            raise ValueError("TrialConfig: cascade sweeps are integer-valued")


@dataclass(frozen=True)
class SweepRow:
    """Statistics of one sweep point (x is the error bound or the probed value)."""

    x: float
    mean_abs_error: float
    mean_rel_error: float
    failure_rate: float
    clamped_fraction: float
    trials: int
    zero_value_excluded: int


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    series: str = ""


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _chunks(total: int):
    start = 0
    index = 0
    while start < total:
        size = min(CHUNK, total - start)
        yield index, size
        index += 1
        start += size


def _pick_window(elems: np.ndarray, target: np.ndarray, half: float, left_open: bool) -> np.ndarray:
    """Vector twin of the scalar ladder-window search (fallback: nearest, ties low)."""
    n = len(elems)
    if left_open:
        i = np.searchsorted(elems, target - half, side="right")
        cand = elems[np.minimum(i, n - 1)]
        ok = (i < n) & (cand <= target + half)
    else:
        i = np.searchsorted(elems, target - half, side="left")
        cand = elems[np.minimum(i, n - 1)]
        ok = (i < n) & (cand < target + half)
    k = np.searchsorted(elems, target)
    lo = elems[np.maximum(k - 1, 0)]
    hi = elems[np.minimum(k, n - 1)]
    near = np.where(target - lo <= hi - target, lo, hi)
    return np.where(ok, cand, near)


class LevelKernel:
    """Vectorized ladder-window solver for one (system, level) pair."""

    def __init__(self, system: TwoModSystem, level: int):
        ctx = level_context(system, level)
        self.system = system
        self.level = level
        self.m = float(system.m)
        self.m1 = float(system.m1)
        self.m2 = float(system.m2)
        self.g1 = system.gamma1
        self.g2 = system.gamma2
        self.half = ctx.sigma / 2.0
        self.s1 = np.asarray(ctx.s1, dtype=np.float64)
        self.s2 = np.asarray(ctx.s2, dtype=np.float64)
        self.inv12 = ctx.inv12
        self.inv21 = ctx.inv21
        self.dynamic_range = ctx.dynamic_range
        self.robustness_bound = float(ctx.robustness_bound)

    def solve(self, r1t: np.ndarray, r2t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        q = (r1t - r2t) / self.m
        n1 = np.zeros(q.shape, dtype=np.int64)
        n2 = np.zeros(q.shape, dtype=np.int64)
        hi = q >= self.half
        if hi.any():
            qh = q[hi]
            s2 = _pick_window(self.s2, qh, self.half, left_open=True)
            nn2 = (s2.astype(np.int64) * self.inv21) % self.g1
            nn1 = np.floor((nn2 * self.m2 + r2t[hi] - r1t[hi]) / self.m1 + 0.5)
            n2[hi] = nn2
            n1[hi] = nn1.astype(np.int64)
        lo = q < -self.half
        if lo.any():
            ql = -q[lo]
            s1 = _pick_window(self.s1, ql, self.half, left_open=False)
            nn1 = (s1.astype(np.int64) * self.inv12) % self.g2
            nn2 = np.floor((nn1 * self.m1 + r1t[lo] - r2t[lo]) / self.m2 + 0.5)
            n1[lo] = nn1
            n2[lo] = nn2.astype(np.int64)
        return n1, n2

    def estimate(self, n1, n2, r1t, r2t):
        mean = (n1 * self.m1 + r1t + n2 * self.m2 + r2t) * 0.5
        if self.system.is_real:
            return mean
        return np.floor(mean + 0.5)


class BasicKernel:
    """Vectorized quotient-rounding solver (the coarsest level's closed form)."""

    def __init__(self, system: TwoModSystem):
        self.system = system
        self.m = float(system.m)
        self.m1 = float(system.m1)
        self.m2 = float(system.m2)
        self.g1 = system.gamma1
        self.beta = system.gamma2 % system.gamma1
        self.half = self.beta / 2.0
        self.wrap_hi = (system.gamma1 // self.beta) * self.beta - self.half

    def solve(self, r1t: np.ndarray, r2t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        q = (r1t - r2t) / self.m
        n2 = np.zeros(q.shape, dtype=np.int64)
        hi = q >= self.half
        if hi.any():
            n2[hi] = np.floor(q[hi] / self.beta + 0.5).astype(np.int64)
        lo = q < -self.half
        if lo.any():
            ql = q[lo]
            wrap = ql - np.floor(ql / self.g1) * self.g1
            inside = (wrap >= self.half) & (wrap < self.wrap_hi)
            n2[lo] = np.where(inside, np.floor(wrap / self.beta + 0.5), 0.0).astype(np.int64)
        n1 = np.floor((n2 * self.m2 + r2t - r1t) / self.m1 + 0.5).astype(np.int64)
        return n1, n2

    def estimate(self, n1, n2, r1t, r2t):
        mean = (n1 * self.m1 + r1t + n2 * self.m2 + r2t) * 0.5
        if self.system.is_real:
            return mean
        return np.floor(mean + 0.5)


class GroupKernel:
    """Vectorized within-group solver (pairwise-coprime cofactors)."""

    def __init__(self, group):
        self.group = group
        self.m = float(group.gcd)
        self.moduli = [float(mk) for mk in group.moduli]
        g1 = group.cofactors[0]
        self.g1 = g1
        self.steps = []
        q = 1
        for gk in group.cofactors[1:]:
            if gk == 1:
                self.steps.append(None)
                continue
            self.steps.append((gk, mod_inverse(g1, gk), mod_inverse(q, gk)))
            q *= gk

    def solve(self, rts: list[np.ndarray]):
        xis = [np.floor((rts[k] - rts[0]) / self.m + 0.5).astype(np.int64)
               for k in range(1, len(rts))]
        h1 = np.zeros(rts[0].shape, dtype=np.int64)
        q = 1
        for xi, step in zip(xis, self.steps):
            if step is None:
                continue
            gk, inv_g1, inv_q = step
            a = (xi * inv_g1) % gk
            t = ((a - h1) * inv_q) % gk
            h1 = h1 + q * t
            q *= gk
        folds = [h1]
        for xi, gk in zip(xis, self.group.cofactors[1:]):
            folds.append((h1 * self.g1 - xi) // gk)
        total = sum(f * mk + rt for f, mk, rt in zip(folds, self.moduli, rts))
        estimate = np.floor(total / len(rts) + 0.5)
        return folds, estimate


class GeneralKernel:
    """Vectorized single-stage solver for arbitrary moduli (lcm-wide range)."""

    def __init__(self, moduli):
        ms = tuple(moduli)
        self.moduli = [float(mk) for mk in ms]
        m = math.gcd(*ms)
        self.m = float(m)
        gammas = tuple(mk // m for mk in ms)
        self.gammas = gammas
        self.g1 = gammas[0]
        self.steps = []
        q = 1
        for gk in gammas[1:]:
            g = math.gcd(self.g1, gk)
            qk = gk // g
            if qk == 1:
                self.steps.append((g, 1, 0, 1, 1, 0))
                continue
            inv1 = mod_inverse((self.g1 // g) % qk, qk)
            gq = math.gcd(q, qk)
            step = qk // gq
            inv_q = mod_inverse((q // gq) % step, step) if step > 1 else 0
            self.steps.append((g, qk, inv1, gq, step, inv_q))
            q *= step

    def solve(self, rts: list[np.ndarray]):
        xis = [np.floor((rts[k] - rts[0]) / self.m + 0.5).astype(np.int64)
               for k in range(1, len(rts))]
        shape = rts[0].shape
        n1 = np.zeros(shape, dtype=np.int64)
        consistent = np.ones(shape, dtype=bool)
        q_running = 1
        for xi, (g, qk, inv1, gq, step, inv_q) in zip(xis, self.steps):
            consistent &= (xi % g) == 0
            if qk == 1:
                continue
            a = ((xi // g) * inv1) % qk
            diff = a - n1
            consistent &= (diff % gq) == 0
            if step > 1:
                t = ((diff // gq) * inv_q) % step
                n1 = n1 + q_running * t
                q_running *= step
        folds = [np.where(consistent, n1, 0)]
        for xi, gk in zip(xis, self.gammas[1:]):
            fk = np.where(consistent, (n1 * self.g1 - xi) // gk, 0)
            folds.append(fk)
        total = sum(f * mk + rt for f, mk, rt in zip(folds, self.moduli, rts))
        estimate = np.floor(total / len(rts) + 0.5)
        return folds, estimate, consistent


class CascadeKernel:
    """Vectorized cascade: both group stages followed by the cross stage."""

    def __init__(self, spec: CascadeSpec, level: int | None = None):
        self.spec = spec
        self.level = spec.level if level is None else level
        self.k1 = GroupKernel(spec.group1)
        self.k2 = GroupKernel(spec.group2)
        self.cross = LevelKernel(spec.cross, self.level)
        self.dynamic_range = self.cross.dynamic_range

    def solve(self, rts1: list[np.ndarray], rts2: list[np.ndarray]):
        f1, est1 = self.k1.solve(rts1)
        f2, est2 = self.k2.solve(rts2)
        if self.spec.low_is_group1:
            l_lo, l_hi = self.cross.solve(est1, est2)
            l1, l2 = l_lo, l_hi
        else:
            l_lo, l_hi = self.cross.solve(est2, est1)
            l1, l2 = l_hi, l_lo
        folds1 = [l1 * (self.spec.group1.eta // mk) + h
                  for mk, h in zip(self.spec.group1.moduli, f1)]
        folds2 = [l2 * (self.spec.group2.eta // mk) + h
                  for mk, h in zip(self.spec.group2.moduli, f2)]
        total = sum(f * float(mk) + rt
                    for f, mk, rt in zip(folds1, self.spec.group1.moduli, rts1))
        total += sum(f * float(mk) + rt
                     for f, mk, rt in zip(folds2, self.spec.group2.moduli, rts2))
        estimate = np.floor(total / (len(rts1) + len(rts2)) + 0.5)
        return folds1, folds2, estimate


class _Accumulator:
    def __init__(self):
        self.trials = 0
        self.abs_sum = 0.0
        self.rel_sum = 0.0
        self.rel_n = 0
        self.failures = 0
        self.clamped = 0

    def add(self, values, estimates, failures, clamped):
        err = np.abs(estimates - values)
        self.trials += values.size
        self.abs_sum += float(err.sum())
        pos = values >= 1
        self.rel_sum += float((err[pos] / values[pos]).sum())
        self.rel_n += int(pos.sum())
        self.failures += int(failures.sum())
        self.clamped += int(clamped.sum())

    def row(self, x: float) -> SweepRow:
        return SweepRow(
            x=float(x),
            mean_abs_error=self.abs_sum / self.trials,
            mean_rel_error=self.rel_sum / self.rel_n if self.rel_n else 0.0,
            failure_rate=self.failures / self.trials,
            clamped_fraction=self.clamped / self.trials,
            trials=self.trials,
            zero_value_excluded=self.trials - self.rel_n,
        )


def _sample_errors(rng, tau: float, size: int, error_mode: str) -> np.ndarray:
    if error_mode == "integer":
        t = int(math.floor(tau))
        return rng.integers(-t, t + 1, size=size).astype(np.float64)
    return rng.uniform(-tau, tau, size=size)


def _apply_range_mode(rt: np.ndarray, modulus: float, range_mode: str):
    out = (rt < 0.0) | (rt >= modulus)
    if range_mode == "clamp":
        rt = np.clip(rt, 0.0, np.nextafter(modulus, 0.0))
    return rt, out


def _two_mod_point(system, level, tau, trials, seed, point_index, *,
                   fixed_value=None, value_mode="integer", error_mode="real",
                   range_mode="allow", kernel=None) -> SweepRow:
    kernel = kernel or LevelKernel(system, level)
    acc = _Accumulator()
    rng_range = kernel.dynamic_range
    m1, m2 = kernel.m1, kernel.m2
    for chunk_index, size in _chunks(trials):
        rng = _rng(seed, point_index, chunk_index)
        if fixed_value is not None:
            values = np.full(size, float(fixed_value))
            r1 = values % m1
            r2 = values % m2
            true1 = np.full(size, int(fixed_value // system.m1), dtype=np.int64)
            true2 = np.full(size, int(fixed_value // system.m2), dtype=np.int64)
        elif value_mode == "integer":
            ints = rng.integers(0, int(rng_range), size=size)
            values = ints.astype(np.float64)
            true1 = ints // int(system.m1)
            true2 = ints // int(system.m2)
            r1 = (ints % int(system.m1)).astype(np.float64)
            r2 = (ints % int(system.m2)).astype(np.float64)
        else:
            values = rng.uniform(0.0, float(rng_range), size=size)
            true1 = np.floor(values / m1)
            true2 = np.floor(values / m2)
            r1 = values - true1 * m1
            r2 = values - true2 * m2
            true1 = true1.astype(np.int64)
            true2 = true2.astype(np.int64)
        d1 = _sample_errors(rng, tau, size, error_mode)
        d2 = _sample_errors(rng, tau, size, error_mode)
        r1t, oor1 = _apply_range_mode(r1 + d1, m1, range_mode)
        r2t, oor2 = _apply_range_mode(r2 + d2, m2, range_mode)
        n1, n2 = kernel.solve(r1t, r2t)
        est = kernel.estimate(n1, n2, r1t, r2t)
        fail = (n1 != true1) | (n2 != true2)
        acc.add(values, est, fail, oor1 | oor2)
    return acc.row(tau if fixed_value is None else fixed_value)


def run_tau_sweep(config: TrialConfig) -> SweepResult:
    """Error-bound sweep: values uniform below the level's range, errors
    uniform on [-tau, tau] per point, fold failures and error moments tracked."""
    rows = []
    if config.cascade is not None:
        kernel = CascadeKernel(config.cascade, config.level)
        for p, tau in enumerate(config.tau_values):
            rows.append(_cascade_point(kernel, tau, config.trials_per_point,
                                       config.seed, p, config.error_mode,
                                       config.range_mode))
        return SweepResult(tuple(rows), series=f"cascade_level{config.level}")
    kernel = LevelKernel(config.system, config.level)
    for p, tau in enumerate(config.tau_values):
        rows.append(_two_mod_point(
            config.system, config.level, tau, config.trials_per_point,
            config.seed, p, value_mode=config.value_mode,
            error_mode=config.error_mode, range_mode=config.range_mode,
            kernel=kernel))
    return SweepResult(tuple(rows), series=f"level{config.level}")


def run_boundary_probe(system: TwoModSystem, level: int, neighbors, trials: int,
                       seed: int, tau: float | None = None,
                       range_mode: str = "allow") -> SweepResult:
    """Fixed-value probe around the dynamic range; errors default to uniform
    within the level's robustness bound."""
    kernel = LevelKernel(system, level)
    if tau is None:
        tau = kernel.robustness_bound
    rows = []
    for p, value in enumerate(neighbors):
        rows.append(_two_mod_point(
            system, level, tau, trials, seed, p, fixed_value=int(value),
            range_mode=range_mode, kernel=kernel))
    return SweepResult(tuple(rows), series=f"probe_level{level}")


def _cascade_point(kernel: CascadeKernel, tau, trials, seed, point_index,
                   error_mode="real", range_mode="allow", fixed_value=None) -> SweepRow:
    spec = kernel.spec
    moduli1, moduli2 = spec.group1.moduli, spec.group2.moduli
    acc = _Accumulator()
    for chunk_index, size in _chunks(trials):
        rng = _rng(seed, point_index, chunk_index)
        if fixed_value is None:
            ints = rng.integers(0, int(kernel.dynamic_range), size=size)
        else:
            ints = np.full(size, int(fixed_value), dtype=np.int64)
        values = ints.astype(np.float64)
        rts1, rts2 = [], []
        oor = np.zeros(size, dtype=bool)
        fail = np.zeros(size, dtype=bool)
        for mk in moduli1 + moduli2:
            r = (ints % mk).astype(np.float64)
            rt = r + _sample_errors(rng, tau, size, error_mode)
            rt, bad = _apply_range_mode(rt, float(mk), range_mode)
            oor |= bad
            (rts1 if len(rts1) < len(moduli1) else rts2).append(rt)
        folds1, folds2, est = kernel.solve(rts1, rts2)
        for f, mk in zip(folds1, moduli1):
            fail |= f != ints // mk
        for f, mk in zip(folds2, moduli2):
            fail |= f != ints // mk
        acc.add(values, est, fail, oor)
    return acc.row(tau if fixed_value is None else fixed_value)


def run_comparison(spec: CascadeSpec, tau_values, trials: int, seed: int,
                   error_mode: str = "real", range_mode: str = "allow") -> tuple[SweepResult, ...]:
    """Three estimators on identical noisy remainders, values below the
    configured cascade's range: lcm-wide single stage over all moduli, the
    two-stage cascade (coarsest cross level), and the cascade at its level."""
    moduli1, moduli2 = spec.group1.moduli, spec.group2.moduli
    all_moduli = moduli1 + moduli2
    general = GeneralKernel(all_moduli)
    top = sigma_chain(spec.cross).levels
    cascade_top = CascadeKernel(spec, level=top)
    cascade_cfg = CascadeKernel(spec)
    series = [
        ("single_stage", None),
        ("two_stage", cascade_top),
        (f"cascade_level{spec.level}", cascade_cfg),
    ]
    accs = {name: [_Accumulator() for _ in tau_values] for name, _ in series}
    rng_range = int(cascade_cfg.dynamic_range)
    for p, tau in enumerate(tau_values):
        for chunk_index, size in _chunks(trials):
            rng = _rng(seed, p, chunk_index)
            ints = rng.integers(0, rng_range, size=size)
            values = ints.astype(np.float64)
            rts = []
            oor = np.zeros(size, dtype=bool)
            for mk in all_moduli:
                r = (ints % mk).astype(np.float64)
                rt = r + _sample_errors(rng, tau, size, error_mode)
                rt, bad = _apply_range_mode(rt, float(mk), range_mode)
                oor |= bad
                rts.append(rt)
            true_folds = [ints // mk for mk in all_moduli]
            folds, est, consistent = general.solve(rts)
            fail = ~consistent
            for f, t in zip(folds, true_folds):
                fail |= f != t
            accs["single_stage"][p].add(values, est, fail, oor)
            rts1, rts2 = rts[: len(moduli1)], rts[len(moduli1):]
            for name, kernel in series[1:]:
                f1, f2, est_c = kernel.solve(rts1, rts2)
                fail = np.zeros(size, dtype=bool)
                for f, t in zip(f1 + f2, true_folds):
                    fail |= f != t
                accs[name][p].add(values, est_c, fail, oor)
    return tuple(
        SweepResult(tuple(acc.row(tau) for acc, tau in zip(accs[name], tau_values)), series=name)
        for name, _ in series
    )
