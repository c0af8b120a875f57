import functools
import math
import sys

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cachelearn import LFU, StaticPolicy, oracles
from cachelearn import analysis as A
from cachelearn.workloads import PopularityProfile, zipf_profile


def rel(a, b):
    return abs(mp.mpf(a) - b) / abs(b)


class TestGenie:
    def test_top_two(self):
        assert A.genie_set(PopularityProfile([0.5, 0.3, 0.2]), 2) == {1, 2}

    def test_whole_library(self):
        assert A.genie_set(zipf_profile(6, 1.0), 6) == set(range(1, 7))

    def test_canonical_zipf(self):
        assert A.genie_set(zipf_profile(50, 0.7), 7) == set(range(1, 8))

    def test_unsorted_profile(self):
        assert A.genie_set(PopularityProfile([0.1, 0.6, 0.3]), 1) == {2}

    def test_boundary_tie_warns(self):
        with pytest.warns(RuntimeWarning):
            assert A.genie_set(PopularityProfile([0.4, 0.3, 0.3]), 2) == {1, 2}


class TestRegret:
    @pytest.mark.parametrize("x,expected", [(1, 1), (2, -1), (3, 0)])
    def test_increment(self, x, expected):
        assert A.regret_increment(x, {1}, {2}) == expected

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=100))
    def test_ledger(self, pairs):
        hits = np.array([p for p, _ in pairs])
        genie = np.array([g for _, g in pairs])
        led = A.RegretLedger.from_hits(hits, genie)
        assert set(np.unique(led.increments)) <= {-1, 0, 1}
        np.testing.assert_array_equal(led.cumulative, np.cumsum(genie.astype(int) - hits))
        assert led.total == led.cumulative[-1] == led.genie_hits - led.policy_hits


class TestGapStructure:
    def test_gaps(self):
        g = A.GapStructure(PopularityProfile([0.1, 0.5, 0.25, 0.15]), 2)
        assert g.mu_C == 0.25 and g.mu_C1 == 0.15
        assert abs(g.delta_min - 0.1) < 1e-15
        assert np.all(g.pairwise() >= g.delta_min - 1e-15)
        np.testing.assert_allclose(g.gaps_to_C(), [0.1, 0.15])

    def test_needs_c_below_l(self):
        with pytest.raises(ValueError):
            A.GapStructure(zipf_profile(3, 1), 3)


class TestBounds:
    def test_lfu(self):
        assert A.bound_lfu(0.1, 100, 10) == pytest.approx(1600, rel=1e-12)
        assert rel(A.bound_lfu(0.1, 100, 10), oracles.bound_lfu(0.1, 100, 10)) < 1e-12

    def test_lfu_unit_gap(self):
        assert A.bound_lfu(1.0, 10, 2) == 16

    def test_lfu_small_gap_regime(self):
        # the 16/d^2 term takes over once L*C < 1/d fails
        assert A.bound_lfu(1e-4, 10, 2) == pytest.approx(4 * 2 * 8 / 1e-4)
        assert A.bound_lfu(0.5, 10, 2) == pytest.approx(64)

    def test_lfu_zero_gap(self):
        with pytest.warns(RuntimeWarning):
            assert A.bound_lfu(0.0, 10, 2) == math.inf

    def test_wlfu_lower(self):
        assert A.bound_wlfu_lower(0.6, 0.4, 1, 1000) == pytest.approx(80, rel=1e-12)
        assert A.bound_wlfu_lower(0.6, 0.4, 1, 1000) / 1000 == pytest.approx(
            float(oracles.markov_wlfu_w1_regret([0.6, 0.4])), rel=1e-12)
        assert A.bound_wlfu_lower(0.3, 0.3, 4, 1000) == 0
        assert A.bound_wlfu_lower(0.6, 0.4, 2000, 1e6) < 1e-300

    def test_p_min_value(self):
        assert A.p_min(0.3, 0.2, 5) == pytest.approx(0.47178, abs=1e-5)
        assert rel(A.p_min(0.3, 0.2, 5), oracles.p_min(0.3, 0.2, 5)) < 1e-12

    def test_p_min_complement(self):
        assert A.p_min(0.3, 0.2, 5) == pytest.approx(1 - 0.7 ** 5 - 5 * 0.3 * 0.7 ** 4, rel=1e-12)

    def test_p_min_certain(self):
        assert A.p_min(1.0, 0.4, 7) == 1.0

    def test_entry_threshold_floor(self):
        assert A.entry_threshold(0.2, 5) == 2
        assert A.entry_threshold(0.25, 8) == 3

    def test_empty_range(self):
        with pytest.warns(RuntimeWarning):
            assert A.window_entry_probability(0.5, 1.0, 5) == 0.0

    def test_p_min_invalid(self):
        with pytest.raises(ValueError):
            A.p_min(0.2, 0.3, 5)

    def test_lfulite_limit(self):
        assert A.bound_lfulite(0.1, 20, 2, 1e-9, 1.0) == pytest.approx(4 * 2 * 18 / 0.1, rel=1e-9)

    def test_mps_envelope_doubles(self):
        assert A.bound_mps(20, 2, 1e8) == pytest.approx(2 * A.bound_mps(20, 2, 1e4))

    def test_si_value(self):
        expected = 2 * 18 * (200 + 400 * (4 + 3200 * math.exp(-0.00125)))
        assert A.bound_si(0.1, 20, 2) == pytest.approx(expected, rel=1e-12)
        assert rel(A.bound_si(0.1, 20, 2), oracles.bound_si(0.1, 20, 2)) < 1e-12

    def test_dkw(self):
        assert A.dkw_envelope(800, 0.2) == pytest.approx(2 * math.exp(-16), rel=1e-15)
        assert A.dkw_envelope(800, 0.2) == pytest.approx(2.25e-7, rel=1e-2)
        assert A.dkw_envelope(10, 1e-12) == pytest.approx(2)

    def test_bound_report(self):
        r = A.BoundReport.for_profile(zipf_profile(50, 1.2), 5, 10_000, w=98)
        for v in (r.lfu, r.wlfu_lower, r.p_min, r.lfulite, r.mps_envelope, r.si, r.expected_bank):
            assert v is not None and math.isfinite(v) and v > 0


class TestExpectedBankSize:
    def test_single_window(self):
        prof = zipf_profile(8, 1.0)
        p = A.window_entry_probability(np.sort(prof.probs)[::-1], prof.probs[2], 20)
        assert A.expected_bank_size(prof, 2, 20, 7) == pytest.approx(p.sum(), rel=1e-13)

    @pytest.mark.parametrize("L,C,w", [(10, 2, 12), (50, 5, 98), (200, 10, 60)])
    def test_concave_in_windows(self, L, C, w):
        prof = zipf_profile(L, 1.0)
        curve = A.expected_bank_size(prof, C, w, w * np.arange(1, 400))
        assert np.all(np.diff(curve, 2) <= 1e-12)
        assert np.all(np.diff(curve) >= 0)

    def test_longer_window_shrinks_unpopular_contribution(self):
        mu = [0.4, 0.3, 0.2, 0.1]
        t = 240
        prev = None
        for w in (2, 4, 8, 16):
            k = oracles.entry_count(mu[1], w)
            tail = mp.fsum(1 - (1 - oracles.binomial_tail(m, w, k)) ** (-(-t // w)) for m in mu[2:])
            if prev is not None:
                assert tail <= prev
            prev = tail

    def test_matches_oracle(self):
        prof = zipf_profile(30, 0.9)
        for t in (1, 50, 999, 20_000):
            assert rel(A.expected_bank_size(prof, 3, 40, t),
                       oracles.expected_bank_size(list(prof.probs), 3, 40, t)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(L=st.integers(3, 60), beta=st.floats(0.3, 2.0), w=st.integers(1, 400), data=st.data())
def test_calculators_match_oracles(L, beta, w, data):
    C = data.draw(st.integers(1, L - 1))
    T = data.draw(st.integers(1, 10 ** 6))
    g = A.GapStructure(zipf_profile(L, beta), C)
    d = g.delta_min
    assert rel(A.bound_lfu(d, L, C), oracles.bound_lfu(d, L, C)) < 1e-12
    assert rel(A.bound_si(d, L, C), oracles.bound_si(d, L, C)) < 1e-12
    lower = oracles.bound_wlfu_lower(g.mu_C, g.mu_C1, w, T)
    if lower > sys.float_info.min:
        # subnormal doubles cannot carry 12 significant digits
        assert rel(A.bound_wlfu_lower(g.mu_C, g.mu_C1, w, T), lower) < 1e-12
    pm_exact = oracles.p_min(g.mu_C, g.mu_C1, w)
    assert rel(A.p_min(g.mu_C, g.mu_C1, w), pm_exact) < 1e-12
    assert rel(A.bound_lfulite(d, L, C, w, A.p_min(g.mu_C, g.mu_C1, w)),
               oracles.bound_lfulite(d, L, C, w, pm_exact)) < 1e-12


class TestSeeds:
    def test_mix64_reference_values(self):
        # first two SplitMix64 outputs from state 0
        assert A.mix64(0) == 0xE220A8397B1DCDAF
        assert A.mix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4

    def test_streams_are_distinct(self):
        seeds = {s for k in range(200) for s in A.replication_seeds(7, k)}
        assert len(seeds) == 400

    def test_checkpoint_grid(self):
        g = A.checkpoint_grid(100_000)
        assert g[0] == 1 and g[-1] == 100_000
        assert np.all(np.diff(g) > 0)
        assert 150 <= g.size <= 210


class TestMonteCarlo:
    def test_genie_has_zero_regret(self):
        prof = zipf_profile(10, 1.0)
        make = functools.partial(StaticPolicy, 10, 3, [1, 2, 3])
        res = A.mc_regret(make, prof, 2000, 5, seed=1)
        assert np.all(res.regret == 0)

    def test_never_cache_top(self):
        prof = PopularityProfile([0.6, 0.4])
        make = functools.partial(StaticPolicy, 2, 1, [2])
        T, reps = 20_000, 20
        res = A.mc_regret(make, prof, T, reps, seed=3, checkpoints=[T])
        exact = float(oracles.fixed_cache_regret([0.6, 0.4], {1}, {2}))
        assert exact == pytest.approx(0.2)
        # each step adds 1 or -1 or 0 with variance 1 - 0.2**2
        sd = math.sqrt((1 - 0.04) / (T * reps))
        assert abs(res.mean_regret()[-1] / T - exact) < 4 * sd

    def test_ci_shrinks_with_replications(self):
        prof = zipf_profile(20, 1.0)
        make = functools.partial(LFU, 20, 2)
        widths = []
        for reps in (25, 100):
            lo, hi = A.mc_regret(make, prof, 3000, reps, seed=5, checkpoints=[3000]).regret_ci()
            widths.append(hi[-1] - lo[-1])
        assert 1.4 < widths[0] / widths[1] < 2.9

    def test_parallel_is_bit_identical(self):
        prof = zipf_profile(20, 1.0)
        make = functools.partial(LFU, 20, 2)
        a = A.mc_regret(make, prof, 2000, 6, seed=11, workers=1)
        b = A.mc_regret(make, prof, 2000, 6, seed=11, workers=2)
        np.testing.assert_array_equal(a.regret, b.regret)
        np.testing.assert_array_equal(a.counters, b.counters)
        assert a.mean_regret().tobytes() == b.mean_regret().tobytes()

    def test_rejects_zero_replications(self):
        with pytest.raises(ValueError):
            A.mc_regret(functools.partial(LFU, 5, 1), zipf_profile(5, 1), 10, 0, seed=0)

    def test_segment_genie_follows_the_trace(self):
        from cachelearn.workloads import ChangeSchedule, change_trace
        tr = change_trace(PopularityProfile([0.4, 0.3, 0.2, 0.1]), ChangeSchedule(5, 4, 1), 10, seed=0)
        g = A.genie_hits(tr, 1)
        # segment one favours item 4 (0.4 moved there), segment two item 3
        np.testing.assert_array_equal(g[:5], tr.items[:5] == 4)
        np.testing.assert_array_equal(g[5:], tr.items[5:] == 3)
