"""Acceptance suite: each test runs one criterion at full scale and prints a
single PASS/FAIL line (also repeated in the terminal summary).

Run with ``pytest -s tests/test_acceptance.py`` to see the lines inline.
"""
import math

import numpy as np
import pytest
from conftest import twin_runs
from scipy import stats

from cachelearn import CBFPS, CBMPS, CBSI, CBSILite, StructuralInfo
from cachelearn import analysis as an
from cachelearn import oracles
from cachelearn.harness import ExperimentConfig, run
from cachelearn.harness.runner import simulate
from cachelearn.workloads import PopularityProfile, sample_irm, zipf_profile

pytestmark = pytest.mark.acceptance


def rel_err(got, want) -> float:
    want = float(want)
    return abs(float(got) - want) / abs(want) if want else abs(float(got))


def test_criterion_01_lfu_plateau(criterion):
    log = criterion(1, "LFU regret is bounded and flat")
    T = 200_000
    cfg = ExperimentConfig(policy="lfu", L=50, C=5, beta=1.2, T=T, replications=100, seed=1)
    res = simulate(cfg, np.array([T // 2, T]))
    r_half, r_T = res.mean_regret()
    bound = an.bound_lfu(an.GapStructure(zipf_profile(50, 1.2), 5), 50, 5)
    log.check(r_T <= bound, f"R(T)={r_T:.2f} <= bound {bound:.1f}")
    log.check(r_T - r_half <= 1.0, f"R(T)-R(T/2)={r_T - r_half:.3f} <= 1")
    log.finish()


def test_criterion_02_wlfu_linear(criterion):
    log = criterion(2, "WLFU regret grows linearly")
    T, w = 50_000, 2
    prof = zipf_profile(10, 1.0)
    cfg = ExperimentConfig(policy="wlfu", L=10, C=1, beta=1.0, w=w, T=T, replications=100, seed=2)
    cps = np.linspace(T // 2, T, 101).astype(np.int64)
    res = simulate(cfg, cps)
    x = cps - cps.mean()
    slopes = (res.regret - res.regret.mean(axis=1, keepdims=True)) @ x / (x @ x)
    m = slopes.mean()
    half = stats.norm.ppf(0.995) * slopes.std(ddof=1) / math.sqrt(slopes.size)
    gaps = an.GapStructure(prof, 1)
    floor = an.bound_wlfu_lower(gaps.mu_C, gaps.mu_C1, w, 1)
    log.check(m - half > 0, f"slope 99% CI [{m - half:.4f}, {m + half:.4f}] excludes 0")
    log.check(m >= floor, f"slope {m:.4f} >= {floor:.4f}")

    exact = float(oracles.markov_wlfu_w1_regret([0.6, 0.4]))
    cfg1 = ExperimentConfig(policy="wlfu", L=2, C=1, beta=math.log(1.5) / math.log(2), w=1,
                            T=100_000, replications=10, seed=3)
    assert np.allclose(zipf_profile(2, cfg1.beta).probs, [0.6, 0.4])
    per_step = simulate(cfg1, np.array([cfg1.T])).mean_regret()[0] / cfg1.T
    log.check(abs(per_step - exact) <= 0.05 * exact,
              f"w=1 chain R(T)/T={per_step:.5f} vs {exact:.5f} (5%)")
    log.finish()


def test_criterion_03_lfulite(criterion):
    log = criterion(3, "LFU-Lite plateau and small bank")
    L, C, T = 50, 5, 200_000
    w = 98
    prof = zipf_profile(L, 1.2)
    cfg = ExperimentConfig(policy="lfulite", L=L, C=C, beta=1.2, w=w, T=T, replications=100, seed=4)
    res = simulate(cfg)
    r = res.mean_regret()
    r_half = r[res.at(T // 2)] if T // 2 in res.checkpoints else np.interp(T // 2, res.checkpoints, r)
    gaps = an.GapStructure(prof, C)
    bound = an.bound_lfulite(gaps, L, C, w, an.p_min(gaps.mu_C, gaps.mu_C1, w))
    log.check(r[-1] <= bound, f"R(T)={r[-1]:.2f} <= bound {bound:.0f}")
    log.check(r[-1] - r_half <= 1.0, f"R(T)-R(T/2)={r[-1] - r_half:.3f} <= 1")
    bank = res.mean_bank_size()[-1]
    log.check(bank <= 0.5 * L, f"terminal bank {bank:.1f} <= {0.5 * L:g}")

    # concavity after burn-in: second divided differences not significantly positive
    keep = res.checkpoints > w
    t = res.checkpoints[keep].astype(float)
    b = res.counters[:, keep].astype(float)
    slope = np.diff(b, axis=1) / np.diff(t)
    d2 = np.diff(slope, axis=1)
    se = d2.std(axis=0, ddof=1) / math.sqrt(d2.shape[0])
    ok_frac = np.mean(d2.mean(axis=0) <= 2 * se + 1e-12)
    log.check(ok_frac >= 0.95, f"concave on {ok_frac:.1%} of checkpoints")

    big = ExperimentConfig(policy="lfulite", L=1000, C=10, beta=1.0, T=100_000, replications=20, seed=5)
    big_bank = simulate(big, np.array([big.T])).mean_bank_size()[-1]
    log.check(18 <= big_bank <= 70, f"L=1000 bank {big_bank:.1f} in [18, 70]")
    log.finish()


def test_criterion_04_mps_logarithmic(criterion):
    log = criterion(4, "CB-MPS regret is sublinear and log-shaped")
    cfg = ExperimentConfig(policy="mps", L=20, C=2, beta=1.0, T=100_000, replications=100, seed=6)
    r4, r_half, r5 = simulate(cfg, np.array([10_000, 50_000, 100_000])).mean_regret()
    log.check(r5 - r_half <= r_half, f"R(T)-R(T/2)={r5 - r_half:.1f} <= R(T/2)={r_half:.1f}")
    ratio = (r5 / math.log(1e5)) / (r4 / math.log(1e4))
    log.check(0.5 <= ratio <= 2.0, f"R/lnT ratio {ratio:.3f} within x2")
    log.finish()


def test_criterion_05_si_bounded(criterion):
    log = criterion(5, "CB-SI regret plateaus under its bound")
    L, C, T = 100, 10, 100_000
    cfg = ExperimentConfig(policy="si", L=L, C=C, beta=1.0, T=T, replications=100, seed=7)
    r_half, r_T = simulate(cfg, np.array([T // 2, T])).mean_regret()
    delta = an.GapStructure(zipf_profile(L, 1.0), C).delta_min
    bound = an.bound_si(delta, L, C)
    log.check(r_T - r_half <= 2.0, f"R(T)-R(T/2)={r_T - r_half:.1f} <= 2")
    log.check(r_T <= bound, f"R(T)={r_T:.0f} <= bound {bound:.3g}")
    log.finish()


def test_criterion_06_fps(criterion):
    log = criterion(6, "CB-FPS beats CB-MPS with exact weights")
    L, C, T, reps, seed = 5, 1, 500, 200, 8
    prof = zipf_profile(L, 1.0)
    fps_rate = np.empty(reps)
    mps_rate = np.empty(reps)
    worst, prunes, first = 0.0, 0, None
    for k in range(reps):
        wseed, pseed = an.replication_seeds(seed, k)
        items = sample_irm(prof, T, seed=wseed).items
        fps = CBFPS(L, C, seed=pseed, max_components=4096)
        fps_rate[k] = fps.run(items)[0].mean()
        mps_rate[k] = CBMPS(L, C, seed=pseed).run(items)[0].mean()
        worst = max(worst, fps.max_weight_error)
        prunes += fps.prunes
        if fps.first_prune is not None:
            first = fps.first_prune if first is None else min(first, fps.first_prune)
    log.check(fps_rate.mean() >= mps_rate.mean(),
              f"hit rate {fps_rate.mean():.4f} >= MPS {mps_rate.mean():.4f}")
    log.check(worst < 1e-9, f"max weight error {worst:.2e} < 1e-9")
    log.check(prunes == 0, f"{prunes} prunes (earliest at step {first})")
    log.finish()


def test_criterion_07_calculators(criterion):
    log = criterion(7, "closed-form calculators match high-precision oracles")
    rng = np.random.default_rng(2024)
    n, worst = 25, {}

    def note(name, got, want):
        worst[name] = max(worst.get(name, 0.0), rel_err(got, want))

    for _ in range(n):
        L = int(rng.integers(3, 200))
        C = int(rng.integers(1, L))
        beta = float(rng.uniform(0.3, 2.0))
        w = int(rng.integers(1, 60))
        T = float(rng.uniform(1e3, 1e6))
        probs = np.array([float(p) for p in oracles.zipf_probs(L, beta)])
        gaps = an.GapStructure(PopularityProfile(probs), C)
        d, mc, mc1 = gaps.delta_min, gaps.mu_C, gaps.mu_C1
        note("lfu", an.bound_lfu(d, L, C), oracles.bound_lfu(d, L, C))
        note("wlfu", an.bound_wlfu_lower(mc, mc1, w, T), oracles.bound_wlfu_lower(mc, mc1, w, T))
        pm_want = oracles.p_min(mc, mc1, w)
        if pm_want > 0:
            pm = an.p_min(mc, mc1, w)
            note("p_min", pm, pm_want)
            note("lfulite", an.bound_lfulite(d, L, C, w, pm), oracles.bound_lfulite(d, L, C, w, pm))
        note("si", an.bound_si(d, L, C), oracles.bound_si(d, L, C))
        eps = float(rng.uniform(0.01, 1.0))
        t = int(rng.integers(1, int(1000 / eps ** 2)))
        note("dkw", an.dkw_envelope(t, eps), oracles.dkw_envelope(t, eps))
        tb = int(rng.integers(1, 100_000))
        note("bank", an.expected_bank_size(probs, C, w, tb), oracles.expected_bank_size(probs, C, w, tb))
    for name in ("lfu", "wlfu", "p_min", "lfulite", "si", "dkw", "bank"):
        log.check(worst.get(name, 1.0) <= 1e-12, f"{name} {worst.get(name, float('nan')):.1e}")
    ref = an.p_min(0.3, 0.2, 5)
    log.check(abs(ref - 0.47178) <= 1e-5, f"p_min(0.3,0.2,5)={ref:.5f}")
    log.finish()


def test_criterion_08_dkw(criterion):
    log = criterion(8, "empirical deviations respect the DKW envelope")
    trials, t, eps = 10_000, 50, 0.3
    prof = PopularityProfile(np.full(4, 0.25))
    items = sample_irm(prof, trials * t, seed=9).items.reshape(trials, t)
    freq = np.stack([(items == i).mean(axis=1) for i in range(1, 5)], axis=1)
    rate = np.mean(np.max(np.abs(freq - 0.25), axis=1) > eps)
    env = an.dkw_envelope(t, eps)
    log.check(rate <= env, f"violation rate {rate:.4f} <= {env:.4f}")
    log.finish()


def test_criterion_09_forgetting(criterion):
    log = criterion(9, "periodic halving helps under popularity change")
    base = dict(workload="change", L=100, C=10, beta=1.0, T=100_000, change_period=10_000,
                top_k=20, shift=5, replications=20, seed=10)
    for pol in ("lfu", "lfulite"):
        plain = simulate(ExperimentConfig(policy=pol, **base), np.array([base["T"]]))
        halved = simulate(ExperimentConfig(policy=pol, halve_every=5_000, **base), np.array([base["T"]]))
        diff = halved.hit_rate()[:, -1] - plain.hit_rate()[:, -1]
        lcb = diff.mean() - stats.t.ppf(0.95, diff.size - 1) * diff.std(ddof=1) / math.sqrt(diff.size)
        log.check(lcb >= 0, f"{pol} gain {diff.mean():+.4f}, 95% LCB {lcb:+.4f} >= 0")
    log.finish()


def test_criterion_10_determinism_and_boundary(criterion, tmp_path):
    log = criterion(10, "seeded runs are reproducible and misses stay hidden")
    cfg = ExperimentConfig(policy="mps", L=20, C=2, beta=1.0, T=5_000, replications=4, seed=11)
    a, b, c = (tmp_path / f"{n}.csv" for n in "abc")
    run(cfg.replace(out=str(a)))
    run(cfg.replace(out=str(b)))
    run(cfg.replace(out=str(c), workers=2))
    same = a.read_bytes() == b.read_bytes() == c.read_bytes()
    log.check(same, "CSV bytes identical across reruns and worker counts")

    L, C = 12, 3
    prof = zipf_profile(L, 1.0)
    info = StructuralInfo.from_profile(prof.probs, C)
    makers = {"mps": lambda: CBMPS(L, C, seed=1),
              "si": lambda: CBSI(L, C, info=info, seed=1),
              "silite": lambda: CBSILite(L, C, info=info, seed=1, w=20),
              "fps": lambda: CBFPS(L, C, seed=1, max_components=64)}
    for name, make in makers.items():
        ca, cb, oa, ob, differs = twin_runs(make, L, prof)
        log.check(ca == cb and oa == ob and differs > 0,
                  f"{name} identical on twins ({differs} hidden swaps)")
    log.finish()
