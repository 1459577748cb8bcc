import json
import random

import pytest

from graphstage.events import EventKind, GraphEvent, GraphState, replay
from graphstage.staging import (Bin, StagingConfig, StagingEngine, StageTiming, Strategy,
                                TriggerCause, apply_diff, compose_stage, stage_timing)

from conftest import make_events, random_stream, run_trigger_pipeline


def node_add(seq, ts, name):
    return GraphEvent(seq, ts, EventKind.NODE_ADD, name)


FULL = StageTiming(450, 600, 450, 500)


class TestConfig:
    def test_defaults(self):
        cfg = StagingConfig()
        assert (cfg.t_d, cfg.t_m, cfg.t_a, cfg.t_p) == (450, 600, 450, 500)
        assert cfg.t_i == 2000 and cfg.n_events == 5
        assert cfg.total_animation_ms == 2000

    def test_monitoring_preset(self):
        assert StagingConfig.monitoring().n_events == 3

    def test_window_must_fit_animation(self):
        with pytest.raises(ValueError, match="shorter than a full animation"):
            StagingConfig(strategy=Strategy.TIME_BASED, t_i=1500)
        with pytest.raises(ValueError, match="shorter"):
            StagingConfig(strategy=Strategy.HYBRID, t_i=1999)
        # event-based does not bind t_i to the animation length
        StagingConfig(strategy=Strategy.EVENT_BASED, t_i=100)

    def test_positive_durations(self):
        with pytest.raises(ValueError):
            StagingConfig(t_d=0)
        with pytest.raises(ValueError):
            StagingConfig(n_events=0)

    def test_roundtrip(self):
        cfg = StagingConfig(strategy=Strategy.EVENT_BASED, n_events=3)
        assert StagingConfig.from_dict(cfg.to_dict()) == cfg


class TestFeed:
    def test_below_threshold_no_bin(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.EVENT_BASED))
        for i in range(4):
            engine.feed(node_add(i, i * 10, f"n{i}"))
        assert engine.poll(1_000_000) is None

    def test_fifth_event_triggers(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.EVENT_BASED))
        for i in range(5):
            engine.feed(node_add(i, i * 10, f"n{i}"))
        emitted = engine.poll(40)
        assert emitted is not None
        assert emitted.trigger_time == 40
        assert emitted.trigger_cause is TriggerCause.EVENT_THRESHOLD

    def test_timestamp_regression_names_both(self):
        engine = StagingEngine(StagingConfig())
        engine.feed(node_add(0, 500, "a"))
        with pytest.raises(ValueError, match="499.*500|500.*499"):
            engine.feed(node_add(1, 499, "b"))

    def test_equal_timestamps_fine(self):
        engine = StagingEngine(StagingConfig())
        engine.feed(node_add(0, 500, "a"))
        engine.feed(node_add(1, 500, "b"))


class TestHybridTriggers:
    def test_event_threshold_first(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.HYBRID))
        for i, ts in enumerate([100, 200, 300, 400, 500]):
            engine.feed(node_add(i, ts, f"n{i}"))
        emitted = engine.poll(500)
        assert emitted.trigger_time == 500
        assert emitted.trigger_cause is TriggerCause.EVENT_THRESHOLD
        assert len(emitted.events) == 5

    def test_time_threshold_first(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.HYBRID))
        engine.feed(node_add(0, 300, "a"))
        engine.feed(node_add(1, 900, "b"))
        assert engine.poll(1999) is None
        emitted = engine.poll(2000)
        assert emitted.trigger_time == 2000
        assert emitted.trigger_cause is TriggerCause.TIME_THRESHOLD
        assert len(emitted.events) == 2

    def test_tie_resolves_as_event_threshold(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.HYBRID))
        for i, ts in enumerate([100, 200, 300, 400, 2000]):
            engine.feed(node_add(i, ts, f"n{i}"))
        emitted = engine.poll(2000)
        assert emitted.trigger_time == 2000
        assert emitted.trigger_cause is TriggerCause.EVENT_THRESHOLD

    def test_convergence_tick_only_after_first_event(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.HYBRID))
        assert engine.poll(10_000) is None  # stream not started: no ticks
        engine.feed(node_add(0, 10_500, "a"))
        emitted = engine.poll(10_500)
        assert emitted is None or emitted.trigger_cause is not TriggerCause.CONVERGENCE_TICK

    def test_convergence_tick_in_gap(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.HYBRID))
        engine.feed(node_add(0, 100, "a"))
        first = engine.poll(2000)
        assert first.trigger_cause is TriggerCause.TIME_THRESHOLD
        engine.confirm_stage(StageTiming(0, 600, 450, 500))
        tick = engine.poll(4000)
        assert tick.trigger_cause is TriggerCause.CONVERGENCE_TICK
        assert tick.events == ()
        assert tick.trigger_time == 4000

    def test_gating_delays_event_bin(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.HYBRID))
        for i in range(10):
            engine.feed(node_add(i, 0, f"n{i}"))
        first = engine.poll(0)
        assert first.trigger_time == 0
        engine.confirm_stage(StageTiming(0, 600, 450, 500))  # busy until 1550
        assert engine.poll(1549) is None
        second = engine.poll(1549 + 1)
        assert second.trigger_time == 1550
        assert second.trigger_cause is TriggerCause.EVENT_THRESHOLD


class TestEventBasedTriggers:
    def test_pileup_from_slow_arrivals(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.EVENT_BASED))
        bins = []
        for k in range(8):
            engine.feed(node_add(k, k * 8000, f"n{k}"))
            emitted = engine.poll(k * 8000)
            if emitted:
                bins.append(emitted)
                engine.confirm_stage(FULL)
        assert len(bins) == 1
        assert bins[0].trigger_time == 32_000  # the 5th event's arrival

    def test_backlog_gating(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.EVENT_BASED))
        for i in range(10):
            engine.feed(node_add(i, 0, f"n{i}"))
        first = engine.poll(0)
        engine.confirm_stage(FULL)
        assert first.trigger_time == 0
        assert engine.poll(1999) is None
        second = engine.poll(2000)
        assert second.trigger_time == 2000

    def test_force_flush_remainder(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.EVENT_BASED))
        for i in range(3):
            engine.feed(node_add(i, i * 100, f"n{i}"))
        assert engine.poll(10_000) is None
        emitted = engine.force_flush(10_000)
        assert emitted.trigger_cause is TriggerCause.TIME_THRESHOLD
        assert len(emitted.events) == 3
        assert engine.pending_count == 0


class TestTimeBasedTriggers:
    def test_empty_windows_advance_silently(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.TIME_BASED))
        assert engine.poll(9999) is None
        engine.feed(node_add(0, 10_500, "a"))
        emitted = engine.poll(12_000)
        assert emitted.trigger_time == 12_000
        assert emitted.trigger_time - emitted.window_start == 2000

    def test_window_exactness(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.TIME_BASED))
        engine.feed(node_add(0, 100, "a"))
        emitted = engine.poll(5000)
        assert (emitted.window_start, emitted.trigger_time) == (0, 2000)
        engine.confirm_stage(FULL)
        engine.feed(node_add(1, 2100, "b"))
        second = engine.poll(5000)
        assert (second.window_start, second.trigger_time) == (2000, 4000)

    def test_event_on_boundary_joins_closing_window(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.TIME_BASED))
        engine.feed(node_add(0, 2000, "a"))
        emitted = engine.poll(2000)
        assert emitted is not None
        assert [e.subject for e in emitted.events] == ["a"]


class TestPollContract:
    def test_unconfirmed_bin_blocks_poll(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.EVENT_BASED))
        for i in range(5):
            engine.feed(node_add(i, 0, f"n{i}"))
        engine.poll(0)
        with pytest.raises(RuntimeError, match="not confirmed"):
            engine.poll(1)

    def test_poll_time_regression(self):
        engine = StagingEngine(StagingConfig())
        engine.poll(100)
        with pytest.raises(ValueError, match="regression"):
            engine.poll(99)

    def test_update_config_retains_pending(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.EVENT_BASED))
        for i in range(3):
            engine.feed(node_add(i, i, f"n{i}"))
        engine.update_config(StagingConfig(strategy=Strategy.HYBRID))
        assert engine.pending_count == 3
        emitted = engine.poll(2000)  # hybrid time threshold now applies
        assert emitted is not None
        assert len(emitted.events) == 3


class TestComposeStage:
    def test_ephemeral_add_then_remove(self):
        pre = GraphState(nodes={"Y"})
        stage_bin = Bin(0, 2000, TriggerCause.TIME_THRESHOLD, tuple(make_events([
            (10, EventKind.NODE_ADD, "X"),
            (20, EventKind.EDGE_ADD, ("X", "Y")),
            (30, EventKind.NODE_REMOVE, "X"),
        ])))
        diff = compose_stage(stage_bin, pre)
        assert diff.is_empty
        assert {p.entity for p in diff.ephemeral} == {"X", ("X", "Y")}
        assert diff.depicted == {}

    def test_plain_swap(self):
        pre = GraphState(nodes={"A", "B", "C"}, edges={("A", "B")})
        stage_bin = Bin(0, 2000, TriggerCause.TIME_THRESHOLD, tuple(make_events([
            (10, EventKind.EDGE_REMOVE, ("A", "B")),
            (20, EventKind.EDGE_ADD, ("A", "C")),
        ])))
        diff = compose_stage(stage_bin, pre)
        assert diff.edge_deletions == {("A", "B")}
        assert diff.edge_additions == {("A", "C")}
        assert diff.depicted == {0: "deletion", 1: "addition"}

    def test_convergence_tick_empty(self):
        diff = compose_stage(Bin(0, 2000, TriggerCause.CONVERGENCE_TICK, ()), GraphState())
        assert diff.is_empty and not diff.ephemeral

    def test_remove_then_readd_is_ephemeral(self):
        pre = GraphState(nodes={"A"})
        stage_bin = Bin(0, 2000, TriggerCause.TIME_THRESHOLD, tuple(make_events([
            (10, EventKind.NODE_REMOVE, "A"),
            (20, EventKind.NODE_ADD, "A"),
        ])))
        diff = compose_stage(stage_bin, pre)
        assert diff.is_empty
        assert len(diff.ephemeral) == 1
        assert diff.ephemeral[0].added.kind is EventKind.NODE_ADD
        assert diff.ephemeral[0].removed.kind is EventKind.NODE_REMOVE

    def test_duplicate_noop_not_depicted(self):
        pre = GraphState(nodes={"A"})
        stage_bin = Bin(0, 2000, TriggerCause.TIME_THRESHOLD, tuple(make_events([
            (10, EventKind.NODE_ADD, "A"),   # duplicate: no-op
            (20, EventKind.NODE_ADD, "B"),
        ])))
        diff = compose_stage(stage_bin, pre)
        assert diff.node_additions == {"B"}
        assert diff.depicted == {1: "addition"}

    def test_net_effect_equivalence_random(self, rng):
        for _ in range(150):
            events = random_stream(rng, max_events=30)
            pre_events = random_stream(rng, max_events=20)
            pre = replay(pre_events)
            ts = sorted(e.timestamp for e in events)
            stage_bin = Bin(window_start=0, trigger_time=ts[-1], events=tuple(events),
                            trigger_cause=TriggerCause.TIME_THRESHOLD)
            diff = compose_stage(stage_bin, pre)
            via_diff = apply_diff(diff, pre.copy())
            via_replay = replay(events, pre.copy())
            assert via_diff.nodes == via_replay.nodes
            assert via_diff.edges == via_replay.edges
            # deletion and addition sets are disjoint per entity
            assert not (diff.node_deletions & diff.node_additions)
            assert not (diff.edge_deletions & diff.edge_additions)


class TestStageTiming:
    CFG_H = StagingConfig(strategy=Strategy.HYBRID)

    def _diff(self, *, dels=False, adds=False):
        pre = GraphState(nodes={"D"} if dels else set())
        rows = []
        if dels:
            rows.append((10, EventKind.NODE_REMOVE, "D"))
        if adds:
            rows.append((20, EventKind.NODE_ADD, "N"))
        stage_bin = Bin(0, 2000,
                        TriggerCause.TIME_THRESHOLD if rows else TriggerCause.CONVERGENCE_TICK,
                        tuple(make_events(rows)))
        return compose_stage(stage_bin, pre)

    def test_uniform_strategies_always_full(self):
        for strategy in (Strategy.TIME_BASED, Strategy.EVENT_BASED):
            cfg = StagingConfig(strategy=strategy)
            timing = stage_timing(self._diff(adds=True), cfg)
            assert timing.total_ms == 2000
            assert timing.deletion_ms == 450

    def test_hybrid_full(self):
        assert stage_timing(self._diff(dels=True, adds=True), self.CFG_H).total_ms == 2000

    def test_hybrid_additions_only(self):
        timing = stage_timing(self._diff(adds=True), self.CFG_H)
        assert (timing.deletion_ms, timing.total_ms) == (0, 1550)

    def test_hybrid_deletions_only(self):
        timing = stage_timing(self._diff(dels=True), self.CFG_H)
        assert (timing.addition_ms, timing.total_ms) == (0, 1550)

    def test_hybrid_convergence(self):
        timing = stage_timing(self._diff(), self.CFG_H)
        assert timing.total_ms == 1100


class TestCheckpoint:
    def test_roundtrip(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.HYBRID))
        for i in range(3):
            engine.feed(node_add(i, i * 100, f"n{i}"))
        blob = engine.checkpoint()
        restored = StagingEngine.restore(blob)
        assert restored.pending_count == 3
        assert restored.checkpoint() == blob
        # both continue identically
        a = engine.poll(2000)
        b = restored.poll(2000)
        assert a.trigger_time == b.trigger_time
        assert [e.subject for e in a.events] == [e.subject for e in b.events]

    def test_version_mismatch(self):
        engine = StagingEngine(StagingConfig())
        blob = json.loads(engine.checkpoint())
        blob["version"] = 99
        with pytest.raises(ValueError, match="version mismatch"):
            StagingEngine.restore(json.dumps(blob))

    def test_checkpoint_refused_mid_handshake(self):
        engine = StagingEngine(StagingConfig(strategy=Strategy.EVENT_BASED))
        for i in range(5):
            engine.feed(node_add(i, 0, f"n{i}"))
        engine.poll(0)
        with pytest.raises(RuntimeError):
            engine.checkpoint()


class TestTriggerProperties:
    """Unit-sized versions of the acceptance property suite."""

    def _check_stream(self, config, events):
        bins, diffs = run_trigger_pipeline(config, events)
        # partition: every event in exactly one bin, order preserved
        flat = [e.seq for b in bins for e in b.events]
        assert flat == [e.seq for e in events]
        # window containment & monotonicity
        prev_trigger = None
        prev_end = None
        for b, d in zip(bins, diffs):
            for e in b.events:
                assert b.window_start <= e.timestamp <= b.trigger_time
            if prev_trigger is not None:
                assert b.trigger_time > prev_trigger
                assert b.trigger_time >= prev_end
            prev_trigger = b.trigger_time
            prev_end = b.trigger_time + stage_timing(d, config).total_ms
            if config.strategy is Strategy.TIME_BASED:
                assert b.trigger_time - b.window_start == config.t_i
            if b.trigger_cause is TriggerCause.EVENT_THRESHOLD:
                assert len(b.events) == config.n_events
            if (config.strategy is Strategy.HYBRID
                    and b.trigger_cause is TriggerCause.TIME_THRESHOLD):
                assert 1 <= len(b.events) < config.n_events
            if b.trigger_cause is TriggerCause.CONVERGENCE_TICK:
                assert config.strategy is Strategy.HYBRID
                assert b.events == ()

    def test_properties_over_random_streams(self, rng):
        for strategy in Strategy:
            for _ in range(25):
                events = random_stream(rng, max_events=150)
                self._check_stream(StagingConfig(strategy=strategy), events)
