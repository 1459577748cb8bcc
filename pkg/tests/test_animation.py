import pytest

from graphstage.animation import (EASING_LINEAR, HIGHLIGHT_ADD, HIGHLIGHT_DELETE,
                                  HIGHLIGHT_NONE, build_script, ease, export_frames_jsonl,
                                  frame_at, frame_to_svg, lag_report, stage_lag_records,
                                  visible_entities)
from graphstage.events import EventKind, GraphState, replay
from graphstage.layout import Movement
from graphstage.staging import (Bin, StagingConfig, StageTiming, Strategy, TriggerCause,
                                compose_stage, stage_timing)

from conftest import make_events

FULL = StageTiming(450, 600, 450, 500)


def script_for(rows, pre_state, *, strategy=Strategy.TIME_BASED, trigger=2000,
               positions_before=None, positions_after=None, moves=(), easing="smooth"):
    stage_bin = Bin(0, trigger, TriggerCause.TIME_THRESHOLD, tuple(make_events(rows)))
    diff = compose_stage(stage_bin, pre_state)
    timing = stage_timing(diff, StagingConfig(strategy=strategy))
    before = positions_before if positions_before is not None else {
        n: (0.0, 0.0) for n in pre_state.nodes}
    post_nodes = (pre_state.nodes - diff.node_deletions) | diff.node_additions
    after = positions_after if positions_after is not None else {
        n: before.get(n, (1.0, 1.0)) for n in post_nodes}
    script = build_script(diff, moves, timing, start_time=trigger,
                          positions_before=before, positions_after=after,
                          pre_edges=pre_state.edges, easing=easing)
    return stage_bin, diff, script


class TestEasing:
    def test_smooth_endpoints_and_midpoint(self):
        assert ease(0.0) == 0.0
        assert ease(1.0) == 1.0
        assert ease(0.5) == 0.5

    def test_smooth_slope_near_endpoints(self):
        eps = 1e-4
        assert ease(eps) / eps < 0.01
        assert (1 - ease(1 - eps)) / eps < 0.01

    def test_linear(self):
        assert ease(0.3, EASING_LINEAR) == 0.3


class TestBuildScript:
    def test_sub_stage_spans_with_defaults(self):
        pre = GraphState(nodes={"D", "S"})
        _, _, script = script_for([(100, EventKind.NODE_REMOVE, "D"),
                                   (200, EventKind.NODE_ADD, "N")], pre)
        assert script.deletion_span == (0, 450)
        assert script.movement_span == (450, 1050)
        assert script.addition_span == (1050, 1500)
        assert script.pause_span == (1500, 2000)
        assert [name for name, _ in script.sub_stages] == [
            "deletion", "movement", "addition", "pause"]

    def test_convergence_script_movement_and_pause_only(self):
        stage_bin = Bin(0, 2000, TriggerCause.CONVERGENCE_TICK, ())
        diff = compose_stage(stage_bin, GraphState(nodes={"a"}))
        timing = stage_timing(diff, StagingConfig(strategy=Strategy.HYBRID))
        script = build_script(diff, [], timing, 2000, positions_before={"a": (0.0, 0.0)},
                              positions_after={"a": (0.0, 0.0)}, pre_edges=set())
        assert [name for name, _ in script.sub_stages] == ["movement", "pause"]
        assert script.timing.total_ms == 1100

    def test_span_sum_equals_total(self):
        pre = GraphState(nodes={"D"})
        _, _, script = script_for([(100, EventKind.NODE_REMOVE, "D")], pre,
                                  strategy=Strategy.HYBRID)
        spans = [script.deletion_span, script.movement_span,
                 script.addition_span, script.pause_span]
        assert sum(b - a for a, b in spans) == script.timing.total_ms == 1550

    def test_timing_diff_mismatch_rejected(self):
        pre = GraphState(nodes={"D"})
        stage_bin = Bin(0, 2000, TriggerCause.TIME_THRESHOLD,
                        tuple(make_events([(100, EventKind.NODE_REMOVE, "D")])))
        diff = compose_stage(stage_bin, pre)
        bad = StageTiming(0, 600, 450, 500)  # drops deletion the diff needs
        with pytest.raises(ValueError, match="deletion"):
            build_script(diff, [], bad, 0, positions_before={"D": (0.0, 0.0)},
                         positions_after={}, pre_edges=set())


class TestFrameAt:
    def _deletion_script(self):
        pre = GraphState(nodes={"D", "S"}, edges={("D", "S")})
        return script_for([(100, EventKind.NODE_REMOVE, "D"),
                           (200, EventKind.NODE_ADD, "N")], pre,
                          positions_before={"D": (0.0, 1.0), "S": (2.0, 2.0)},
                          positions_after={"S": (2.0, 2.0), "N": (5.0, 5.0)})

    def test_deleted_fade_to_zero_at_sub_stage_end(self):
        _, _, script = self._deletion_script()
        frame = frame_at(script, 450)
        assert frame.opacity["D"] == 0.0
        assert frame.opacity[("D", "S")] == 0.0

    def test_flash_phase_highlights_orange(self):
        _, _, script = self._deletion_script()
        frame = frame_at(script, 100)  # inside the first 30% of 450 ms
        assert frame.opacity["D"] == 1.0
        assert frame.highlight["D"] == HIGHLIGHT_DELETE

    def test_additions_ramp_and_flash_blue(self):
        _, _, script = self._deletion_script()
        start, end = script.addition_span
        frame = frame_at(script, start + 50)
        assert 0 < frame.opacity["N"] < 1
        assert frame.highlight["N"] == HIGHLIGHT_ADD
        at_end = frame_at(script, script.timing.total_ms)
        assert at_end.opacity["N"] == 1.0
        assert at_end.highlight["N"] == HIGHLIGHT_NONE

    def test_movement_midpoint_symmetric(self):
        pre = GraphState(nodes={"m"})
        move = Movement("m", (0.0, 0.0), (10.0, 0.0))
        _, _, script = script_for([(100, EventKind.NODE_ADD, "x")], pre,
                                  positions_before={"m": (0.0, 0.0)},
                                  positions_after={"m": (10.0, 0.0), "x": (1.0, 1.0)},
                                  moves=[move])
        mid = sum(script.movement_span) // 2
        frame = frame_at(script, mid)
        assert frame.positions["m"] == pytest.approx((5.0, 0.0))

    def test_deleted_labels_persist_through_movement(self):
        _, _, script = self._deletion_script()
        move_start, move_end = script.movement_span
        frame = frame_at(script, (move_start + move_end) // 2)
        assert frame.label_opacity["D"] == 0.5
        after = frame_at(script, move_end + 10)
        assert after.label_opacity["D"] == 0.0

    def test_deleted_nodes_frozen_in_place(self):
        _, _, script = self._deletion_script()
        for t in (0, 200, 449):
            assert frame_at(script, t).positions["D"] == (0.0, 1.0)

    def test_out_of_range_rejected(self):
        _, _, script = self._deletion_script()
        with pytest.raises(ValueError):
            frame_at(script, -1)
        with pytest.raises(ValueError):
            frame_at(script, script.timing.total_ms + 1)

    def test_endpoint_fidelity(self):
        pre = GraphState(nodes={"D", "S"}, edges={("D", "S")})
        rows = [(100, EventKind.NODE_REMOVE, "D"), (200, EventKind.EDGE_ADD, ("S", "Z"))]
        stage_bin, diff, script = script_for(rows, pre,
                                             positions_before={"D": (0.0, 1.0), "S": (2.0, 2.0)},
                                             positions_after={"S": (2.0, 2.0), "Z": (4.0, 4.0)})
        post = replay([e for e in stage_bin.events], pre.copy())
        nodes0, edges0 = visible_entities(frame_at(script, 0))
        assert nodes0 == pre.nodes and edges0 == pre.edges
        nodes1, edges1 = visible_entities(frame_at(script, script.timing.total_ms))
        assert nodes1 == post.nodes and edges1 == post.edges

    def test_opacity_monotone_within_ramps(self):
        _, _, script = self._deletion_script()
        dels = [frame_at(script, t).opacity["D"] for t in range(0, 451, 25)]
        assert all(b <= a for a, b in zip(dels, dels[1:]))
        start, end = script.addition_span
        adds = [frame_at(script, t).opacity["N"] for t in range(start, end + 1, 25)]
        assert all(b >= a for a, b in zip(adds, adds[1:]))


class TestLag:
    def test_hand_traced_time_based_example(self):
        # one edge add at t=100 in an otherwise empty stream, defaults:
        # bin at 2000, addition sub-stage starts 2000+450+600 = 3050
        pre = GraphState()
        stage_bin = Bin(0, 2000, TriggerCause.TIME_THRESHOLD,
                        tuple(make_events([(100, EventKind.EDGE_ADD, ("C1", "C2"))])))
        diff = compose_stage(stage_bin, pre)
        timing = stage_timing(diff, StagingConfig(strategy=Strategy.TIME_BASED))
        script = build_script(diff, [], timing, start_time=2000,
                              positions_before={}, positions_after={"C1": (0.0, 0.0),
                                                                    "C2": (1.0, 0.0)},
                              pre_edges=set())
        [record] = stage_lag_records(stage_bin, diff, script)
        assert record.depiction_start == 3050
        assert record.lag == 2950

    def test_event_at_trigger_time(self):
        pre = GraphState(nodes={"D"})
        stage_bin = Bin(0, 2000, TriggerCause.TIME_THRESHOLD,
                        tuple(make_events([(2000, EventKind.NODE_REMOVE, "D")])))
        diff = compose_stage(stage_bin, pre)
        timing = stage_timing(diff, StagingConfig(strategy=Strategy.TIME_BASED))
        script = build_script(diff, [], timing, start_time=2000,
                              positions_before={"D": (0.0, 0.0)}, positions_after={},
                              pre_edges=set())
        [record] = stage_lag_records(stage_bin, diff, script)
        assert record.depiction_start == 2000  # deletion sub-stage starts at stage start
        assert record.lag == 0

    def test_ephemeral_flagged_and_excluded(self):
        pre = GraphState()
        rows = [(100, EventKind.NODE_ADD, "X"), (200, EventKind.NODE_REMOVE, "X"),
                (300, EventKind.NODE_ADD, "K")]
        stage_bin = Bin(0, 2000, TriggerCause.TIME_THRESHOLD, tuple(make_events(rows)))
        diff = compose_stage(stage_bin, pre)
        timing = stage_timing(diff, StagingConfig(strategy=Strategy.HYBRID))
        script = build_script(diff, [], timing, 2000, positions_before={},
                              positions_after={"K": (0.0, 0.0)}, pre_edges=set())
        records = stage_lag_records(stage_bin, diff, script)
        assert [r.ephemeral for r in records] == [True, True, False]
        assert records[0].lag is None
        summary = lag_report([("hybrid", stage_bin, diff, script)])
        assert summary.by_strategy["hybrid"].count == 1
        # hybrid with additions only: depiction at 2000 + 0 + 600
        assert records[2].depiction_start == 2600

    def test_lag_non_negative(self):
        pre = GraphState()
        stage_bin = Bin(0, 500, TriggerCause.EVENT_THRESHOLD, tuple(
            make_events([(100 * (i + 1), EventKind.NODE_ADD, f"n{i}") for i in range(5)])))
        diff = compose_stage(stage_bin, pre)
        timing = stage_timing(diff, StagingConfig(strategy=Strategy.HYBRID))
        script = build_script(diff, [], timing, 500, positions_before={},
                              positions_after={f"n{i}": (float(i), 0.0) for i in range(5)},
                              pre_edges=set())
        for record in stage_lag_records(stage_bin, diff, script):
            assert record.lag >= 0

    def test_summary_stats(self):
        pre = GraphState()
        stage_bin = Bin(0, 2000, TriggerCause.TIME_THRESHOLD, tuple(
            make_events([(i * 100, EventKind.NODE_ADD, f"n{i}") for i in range(10)])))
        diff = compose_stage(stage_bin, pre)
        timing = stage_timing(diff, StagingConfig(strategy=Strategy.TIME_BASED))
        script = build_script(diff, [], timing, 2000, positions_before={},
                              positions_after={f"n{i}": (float(i), 0.0) for i in range(10)},
                              pre_edges=set())
        summary = lag_report([("time", stage_bin, diff, script)])
        stats = summary.by_strategy["time"]
        lags = [3050 - i * 100 for i in range(10)]
        assert stats.max == max(lags)
        assert stats.mean == pytest.approx(sum(lags) / 10)
        assert stats.p95 == sorted(lags)[-1]  # nearest-rank with n=10 -> 10th value


class TestExport:
    def test_jsonl_frames(self):
        pre = GraphState(nodes={"S"})
        _, _, script = script_for([(100, EventKind.NODE_ADD, "N")], pre,
                                  positions_before={"S": (0.0, 0.0)},
                                  positions_after={"S": (0.0, 0.0), "N": (1.0, 1.0)})
        dump = export_frames_jsonl(script, [0, 1000, script.timing.total_ms])
        lines = dump.strip().split("\n")
        assert len(lines) == 3
        import json
        assert json.loads(lines[0])["t"] == 0

    def test_svg_contains_highlight_color(self):
        pre = GraphState(nodes={"D", "S"})
        _, _, script = script_for([(100, EventKind.NODE_REMOVE, "D")], pre,
                                  positions_before={"D": (0.0, 1.0), "S": (2.0, 2.0)},
                                  positions_after={"S": (2.0, 2.0)})
        svg = frame_to_svg(frame_at(script, 50))
        assert svg.startswith("<svg")
        assert "#e66a1f" in svg  # orange delete flash
