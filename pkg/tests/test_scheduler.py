"""Bandit statistics and emitter-slot scheduling tests."""

import math

import numpy as np
import pytest

from qdpool.emitters import EmitterKind, RandomEmitter
from qdpool.scheduler import (
    BanditStats,
    UcbScheduler,
    UniformScheduler,
    active_kind_counts,
)


def make_pool(n):
    return [RandomEmitter(i) for i in range(n)]


class TestBanditStats:
    def test_hand_worked_ucb_scores(self):
        """Two-arm table checked by hand arithmetic: 100 selections with
        20 successes vs 50 with 15, zeta=0.05, natural log of total=150."""
        stats = BanditStats(["a", "b"], window=50)
        stats.record({"a": (100, 20), "b": (50, 15)})
        score_a = stats.score("a", zeta=0.05)
        score_b = stats.score("b", zeta=0.05)
        assert score_a == pytest.approx(0.2 + 0.05 * math.sqrt(math.log(150) / 100), abs=1e-12)
        assert score_b == pytest.approx(0.3 + 0.05 * math.sqrt(math.log(150) / 50), abs=1e-12)
        assert score_a == pytest.approx(0.21119, abs=1e-5)
        assert score_b == pytest.approx(0.31583, abs=1e-5)
        assert score_b > score_a

    def test_unselected_arm_scores_infinity(self):
        stats = BanditStats(["a", "b"], window=50)
        stats.record({"a": (100, 20)})
        assert stats.score("b", zeta=0.05) == math.inf
        assert stats.score("b", zeta=0.05) > stats.score("a", zeta=0.05)

    def test_window_eviction(self):
        stats = BanditStats(["a"], window=2)
        stats.record({"a": (50, 10)})
        stats.record({"a": (50, 0)})
        stats.record({"a": (50, 20)})
        assert stats.windowed_selections("a") == 100
        assert stats.windowed_successes("a") == 20

    def test_idle_arm_expires_back_to_infinity(self):
        stats = BanditStats(["a"], window=3)
        stats.record({"a": (50, 10)})
        for _ in range(3):
            stats.record({})
        assert stats.windowed_selections("a") == 0
        assert stats.score("a", zeta=0.05) == math.inf

    def test_invalid_counts_rejected(self):
        stats = BanditStats(["a"], window=3)
        with pytest.raises(ValueError):
            stats.record({"a": (50, 60)})
        with pytest.raises(ValueError):
            stats.record({"a": (-1, 0)})

    def test_running_sums_match_recomputation(self):
        rng = np.random.default_rng(0)
        stats = BanditStats(list(range(5)), window=7)
        for _ in range(40):
            counts = {}
            for key in range(5):
                if rng.uniform() < 0.6:
                    sel = int(rng.integers(0, 60))
                    counts[key] = (sel, int(rng.integers(0, sel + 1)))
            stats.record(counts)
            total = 0
            for key in range(5):
                sel, succ = stats.recomputed_sums(key)
                assert sel == stats.windowed_selections(key)
                assert succ == stats.windowed_successes(key)
                total += sel
            assert total == stats.total_selections


class TestUcbScheduler:
    def test_first_selection_is_lowest_ids(self):
        sched = UcbScheduler(make_pool(10), slots=4)
        chosen = sched.select(4)
        assert [e.id for e in chosen] == [0, 1, 2, 3]
        assert [e.id for e in sched.active] == [0, 1, 2, 3]

    def test_select_zero_is_noop(self):
        sched = UcbScheduler(make_pool(10), slots=4)
        sched.select(4)
        assert sched.select(0) == []
        assert len(sched.active) == 4

    def test_selects_by_descending_score(self):
        sched = UcbScheduler(make_pool(3), slots=2, zeta=0.05)
        # give every arm history so no score is infinite
        sched.record_generation({0: (50, 20), 1: (50, 45), 2: (50, 5)})
        chosen = sched.select(2)
        assert [e.id for e in chosen] == [1, 0]

    def test_tie_breaks_by_ascending_id(self):
        sched = UcbScheduler(make_pool(4), slots=2, zeta=0.0)
        sched.record_generation({0: (50, 10), 1: (50, 30), 2: (50, 30), 3: (50, 10)})
        chosen = sched.select(2)
        assert [e.id for e in chosen] == [1, 2]

    def test_zeta_zero_equal_counts_is_argmax_of_success_ratio(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            sched = UcbScheduler(make_pool(6), slots=1, zeta=0.0)
            succ = rng.integers(0, 51, size=6)
            sched.record_generation({i: (50, int(succ[i])) for i in range(6)})
            chosen = sched.select(1)[0]
            assert succ[chosen.id] == succ.max()

    def test_active_and_idle_stay_disjoint_and_complete(self):
        rng = np.random.default_rng(2)
        sched = UcbScheduler(make_pool(12), slots=5, zeta=0.05)
        sched.select(5)
        for _ in range(60):
            counts = {}
            for e in list(sched.active):
                sel = 50
                counts[e.id] = (sel, int(rng.integers(0, 10)))
                if rng.uniform() < 0.5:
                    sched.deactivate(e)
            sched.record_generation(counts)
            freed = sched.slots - len(sched.active)
            sched.select(freed)
            active_ids = {e.id for e in sched.active}
            assert len(active_ids) == 5
            idle_ids = {e.id for e in sched.emitters} - active_ids
            assert len(idle_ids) == 7

    def test_over_allocation_raises(self):
        sched = UcbScheduler(make_pool(4), slots=4)
        sched.select(3)
        with pytest.raises(RuntimeError):
            sched.select(2)

    def test_kind_granularity_shares_statistics(self):
        from qdpool.emitters import ImprovementEmitter, OptimisingEmitter

        emitters = [
            OptimisingEmitter(0),
            OptimisingEmitter(1),
            ImprovementEmitter(2),
            ImprovementEmitter(3),
        ]
        sched = UcbScheduler(emitters, slots=2, zeta=0.05, stats_granularity="kind")
        sched.record_generation({0: (50, 40), 2: (50, 2)})
        # instance 1 inherits the optimising kind's stats, instance 3 the
        # improvement kind's: both finite, optimising clearly ahead
        assert sched.emitter_score(emitters[1]) == sched.emitter_score(emitters[0])
        assert sched.emitter_score(emitters[3]) == sched.emitter_score(emitters[2])
        assert sched.emitter_score(emitters[1]) > sched.emitter_score(emitters[3])
        # aggregation sums instances of the same kind within a generation
        sched.record_generation({0: (50, 10), 1: (50, 20)})
        assert sched.stats.windowed_selections(EmitterKind.OPTIMISING) == 150
        assert sched.stats.windowed_successes(EmitterKind.OPTIMISING) == 70

    def test_config_validation(self):
        with pytest.raises(ValueError):
            UcbScheduler(make_pool(4), slots=0)
        with pytest.raises(ValueError):
            UcbScheduler(make_pool(4), slots=2, zeta=-0.1)
        with pytest.raises(ValueError):
            UcbScheduler(make_pool(4), slots=2, stats_granularity="pool")
        with pytest.raises(ValueError):
            UcbScheduler(make_pool(2), slots=3)
        with pytest.raises(ValueError):
            BanditStats(["a"], window=0)


class TestUniformScheduler:
    def test_constant_kind_mix(self):
        from qdpool.emitters import EMITTER_CLASSES

        emitters = []
        for kind_index, (kind, cls) in enumerate(EMITTER_CLASSES.items()):
            for j in range(3):
                emitters.append(cls(kind_index * 3 + j))
        sched = UniformScheduler(emitters, slots=12)
        sched.select(12)
        reference = active_kind_counts(sched)
        assert all(v == 3 for v in reference.values())
        rng = np.random.default_rng(8)
        for _ in range(30):
            for e in list(sched.active):
                if rng.uniform() < 0.4:
                    sched.deactivate(e)
            sched.select(12 - len(sched.active))
            assert active_kind_counts(sched) == reference

    def test_reactivates_in_ascending_id_order(self):
        sched = UniformScheduler(make_pool(4), slots=4)
        sched.select(4)
        sched.deactivate(sched.emitters[2])
        sched.deactivate(sched.emitters[0])
        chosen = sched.select(2)
        assert [e.id for e in chosen] == [0, 2]
