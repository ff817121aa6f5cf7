import math
import random
from decimal import Decimal
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abba_ids import encoding
from abba_ids.analysis import (
    DetectionEstimate,
    TreeSpec,
    aligned_restart_tick,
    check_fixed_point_free,
    check_non_maximal_correlation,
    check_symbol_injective,
    enumerate_gap_agreement,
    enumerate_tree,
    gap_agreement_prob,
    map_f,
    map_f_inv,
    monte_carlo_detection,
    rekeyed,
    tree_undetected_prob,
)
from abba_ids.encoding import AffineInvertible, PrfDerived, default_config, g_interval
from abba_ids.simulation import SourceSpec, TamperAt

from .strategies import configs


class TestFixedPoint:
    def test_affine_family_is_free(self, modular_cfg):
        res = check_fixed_point_free(modular_cfg)
        assert res and res.exhaustive and res.checked == 16 * 3

    def test_zero_offset_is_caught(self, modular_cfg):
        broken = type(modular_cfg).unchecked(**{**vars(modular_cfg), "o_family": AffineInvertible((0, 2, 3))})
        res = check_fixed_point_free(broken)
        assert not res and res.witness == (0, 0)

    def test_prf_family_exhaustive(self, prf_cfg):
        assert check_fixed_point_free(prf_cfg).checked == 16 * 4

    def test_large_space_is_sampled(self):
        res = check_fixed_point_free(default_config(seed_space=1 << 64), samples=500)
        assert res and not res.exhaustive and res.checked == 500 * 4

    def test_sabotaged_update_is_reported(self, prf_cfg, monkeypatch):
        monkeypatch.setattr(encoding, "seed_update", lambda cfg, s, x: s if s == 7 else s ^ 1)
        assert check_fixed_point_free(prf_cfg).witness == (7, 0)

    @settings(max_examples=60, deadline=None)
    @given(configs(seed_spaces=(16, 64)))
    def test_every_shipped_family_is_free(self, cfg):
        assert check_fixed_point_free(cfg)

    def test_affine_symbols_injective(self, modular_cfg):
        assert check_symbol_injective(modular_cfg, range(16)) is None


class TestCorrelation:
    def test_modular_known_shift(self):
        cfg = default_config(levels=4, g_family="modular")
        rep = check_non_maximal_correlation(cfg, [(5, 6)], 32, 8)
        assert rep.violations == ((5, 6, 3),)

    def test_every_modular_pair_violates(self):
        cfg = default_config(levels=4, g_family="modular")
        pairs = [(a, b) for a in range(12) for b in range(12) if a != b]
        rep = check_non_maximal_correlation(cfg, pairs, 16, 4)
        assert len(rep.violations) == rep.pairs_tested == len(pairs)
        for a, b, P in rep.violations:
            assert P == (a - b) % 4
            assert all(g_interval(cfg, a, n) == g_interval(cfg, b, n + P) for n in range(1, 200))

    def test_equal_seeds_skipped(self):
        cfg = default_config(g_family="modular")
        rep = check_non_maximal_correlation(cfg, [(3, 3)], 8, 8)
        assert rep.pairs_tested == 0 and rep.skipped_equal == 1 and not rep.violations

    def test_prf_family_clean(self):
        rng = random.Random(5)
        pairs = [(rng.getrandbits(60), rng.getrandbits(60)) for _ in range(100)]
        rep = check_non_maximal_correlation(default_config(seed_space=1 << 64), pairs, 64, 64)
        assert rep.pairs_tested == 100 and rep.violations == ()

    def test_invalid_bounds(self):
        with pytest.raises(ValueError):
            check_non_maximal_correlation(default_config(), [(1, 2)], 0, 4)


@pytest.mark.parametrize("s_prime,M", [(6, 3), (9, 2), (2, 7)])
def test_aligned_restart_reproduces_tail(s_prime, M):
    cfg = default_config(levels=4, g_family="modular")
    s = (s_prime + M) % 4  # g(s, n) == g(s', n + M) in the modular family
    t_prime = 40
    t_r = aligned_restart_tick(cfg, s, s_prime, t_prime, M)
    base = [t_prime + sum(g_interval(cfg, s_prime, k) for k in range(m + 1)) for m in range(60)]
    restart = [t_r + sum(g_interval(cfg, s, k) for k in range(n + 1)) for n in range(60 - M)]
    assert restart == base[M:]


class TestGapDP:
    def test_examples(self):
        assert gap_agreement_prob(0, 4) == 1
        assert gap_agreement_prob(1, 2) == 1
        assert gap_agreement_prob(2, 2) == 0.5
        assert gap_agreement_prob(2, 2, exact=True) == Fraction(1, 2)

    @pytest.mark.parametrize("G", range(9))
    @pytest.mark.parametrize("K", [2, 3, 4])
    def test_matches_enumeration(self, G, K):
        assert gap_agreement_prob(G, K, exact=True) == enumerate_gap_agreement(G, K)

    @pytest.mark.parametrize("K", [2, 4, 8, 16])
    def test_monotone_in_gap(self, K):
        vals = [gap_agreement_prob(G, K) for G in range(60)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_float_close_to_exact(self):
        for G in range(40):
            for K in (2, 4, 8):
                exact = gap_agreement_prob(G, K, exact=True)
                assert abs(gap_agreement_prob(G, K) - float(exact)) <= 1e-12

    def test_tick_scaling(self):
        assert gap_agreement_prob(6, 4, tick=3) == gap_agreement_prob(2, 4)

    @pytest.mark.parametrize("args", [(-1, 2), (3, 1), (3, 2, 0)])
    def test_rejects(self, args):
        with pytest.raises(ValueError):
            gap_agreement_prob(*args)


fractions = st.fractions(0, 1, max_denominator=64)


@st.composite
def tree_specs(draw, max_depth=6):
    D = draw(st.integers(1, max_depth))
    P = [draw(fractions) for _ in range(D)]
    Q = [draw(st.fractions(0, 1 - P[i + 1], max_denominator=64)) if i + 1 < D else draw(fractions)
         for i in range(D)]
    return TreeSpec(P, Q)


class TestTree:
    def test_example(self):
        res = tree_undetected_prob(TreeSpec([0.5, 0.25], [0, 0.1]))
        assert res.undetected_by_level == (0.5, 0.125)
        assert res.permanent_escape == pytest.approx(0.0125, abs=1e-15)

    def test_all_zero_continuation(self):
        res = tree_undetected_prob(TreeSpec([0, 0, 0], [0, 0, 0]))
        assert res.undetected_by_level == (0, 0, 0) and res.permanent_escape == 0

    def test_geometric_decay(self):
        p = 0.3
        res = tree_undetected_prob(TreeSpec([p] * 40, [0] * 40))
        for d, v in enumerate(res.undetected_by_level, 1):
            assert abs(v - p ** d) < 1e-12

    @settings(max_examples=200, deadline=None)
    @given(tree_specs())
    def test_matches_path_enumeration(self, spec):
        res = tree_undetected_prob(spec)
        enum, total = enumerate_tree(spec)
        assert total == 1
        assert res == enum

    @pytest.mark.parametrize("P,Q", [([1.2], [0]), ([0.5], [-0.1]), ([0.5, 0.6], [0.5, 0]),
                                     ([0.5], [0, 0])])
    def test_rejects(self, P, Q):
        with pytest.raises(ValueError):
            TreeSpec(P, Q)


class TestMonteCarlo:
    def test_identity_tamper_never_detected(self):
        # every symbol is 0, so rewriting the last one to 0 changes nothing
        est = monte_carlo_detection(default_config(), SourceSpec((1.0, 0, 0, 0), 10.0, 5),
                                    TamperAt(-1, 0), 200, 300)
        assert est.detected == 0 and est.clean == 200 and est.point_estimate == 0

    def test_levels_monotone_and_reproducible(self):
        cfg = default_config(seed_space=1 << 64)
        src = SourceSpec.uniform(4, fixed_gap=4, count=5)
        a = monte_carlo_detection(cfg, src, TamperAt(1), 300, 40, rng_seed=3)
        assert a == monte_carlo_detection(cfg, src, TamperAt(1), 300, 40, rng_seed=3)
        lv = a.undetected_by_level
        assert all(y <= x for x, y in zip(lv, lv[1:]))
        assert a.detected + a.escaped + a.indeterminate + a.clean == a.trials

    def test_fixed_gap_matches_dp(self):
        cfg = default_config(seed_space=1 << 64, levels=4)
        G = 5
        src = SourceSpec.uniform(4, fixed_gap=G, count=2)
        est = monte_carlo_detection(cfg, src, TamperAt(0), 3000, 3 * G, rng_seed=1)
        p = gap_agreement_prob(G, 4)
        assert abs(est.undetected_frequency(0) - p) <= 4 * math.sqrt(p * (1 - p) / est.trials)

    def test_merge_is_commutative(self):
        a = DetectionEstimate(3, [2, 1], detected=1, clean=2)
        b = DetectionEstimate(5, [4, 4], detected=1, escaped=2, indeterminate=2)
        assert a.merge(b) == b.merge(a)
        with pytest.raises(ValueError):
            a.merge(DetectionEstimate(1, [0]))

    def test_prf_seed_collision_rate(self):
        """Two distinct symbols send a seed to the same place at rate 1 / (S - 1)."""
        rng = np.random.default_rng(9)
        base = default_config(seed_space=16, o_family=PrfDerived(0))
        n = 20_000
        hits = 0
        for _ in range(n):
            cfg = rekeyed(base, rng)
            s = int(rng.integers(16))
            x, x2 = (int(v) for v in rng.choice(4, size=2, replace=False))
            hits += encoding.seed_update(cfg, s, x) == encoding.seed_update(cfg, s, x2)
        p = 1 / 15
        assert abs(hits / n - p) <= 3 * math.sqrt(p * (1 - p) / n)


class TestMap:
    def test_examples(self):
        assert map_f(0, 3) == Decimal("3.5")
        t, n = map_f_inv(3.5)
        assert t == 0 and n == 3

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        worst = 0
        for t, n in zip(rng.uniform(0, 20, 1000), rng.integers(0, 10**6, 1000)):
            t2, n2 = map_f_inv(map_f(float(t), int(n)))
            assert n2 == n
            worst = max(worst, abs(float(t2) - t))
        assert worst < 1e-9

    @pytest.mark.parametrize("y", [3.0, 3.75, "4.5000001"])
    def test_inverse_rejects_out_of_range(self, y):
        with pytest.raises(ValueError):
            map_f_inv(y)

    @pytest.mark.parametrize("t,n", [(-1, 2), (1, -1), (1, 1.5)])
    def test_forward_rejects(self, t, n):
        with pytest.raises(ValueError):
            map_f(t, n)
