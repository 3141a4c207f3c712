import json
import math

import pytest

from roadcheck.geometry import BoxDims, Pose2D
from roadcheck.trace import (ActorState, RoleNotFoundError, Trace, TraceError,
                             derive_dynamics, distance_ahead, load_trace,
                             serialise_trace)
from roadcheck.worldmap import load_map

MPH = 0.44704

ROAD = load_map(json.dumps({
    "lanelets": [
        {"id": "east", "vertices": [[0, -3.65], [200, -3.65], [200, 0], [0, 0]],
         "orientation_rad": 0.0, "width_m": 3.65, "direction": "with_map_axis"},
        {"id": "west", "vertices": [[0, 0], [200, 0], [200, 3.65], [0, 3.65]],
         "orientation_rad": math.pi, "width_m": 3.65,
         "direction": "against_map_axis"},
    ],
    "centreline": [[0, 0], [200, 0]],
}))


def record(t, actor="ego", role="AV", x=0.0, y=-1.825, heading=0.0,
           length=4.0, width=2.0, **extra):
    obj = {"t": t, "actor_id": actor, "role": role, "x": x, "y": y,
           "heading_rad": heading, "length_m": length, "width_m": width}
    obj.update(extra)
    return json.dumps(obj)


def state(t, actor="ego", role="AV", x=0.0, y=-1.825, heading=0.0,
          length=4.0, width=2.0, speed=None):
    return ActorState(actor_id=actor, role=role, t=t,
                      pose=Pose2D(x, y, heading),
                      dims=BoxDims(length, width), speed=speed)


def make_trace(states_per_step):
    times = tuple(sorted({st.t for step in states_per_step for st in step}))
    steps = tuple({st.actor_id: st for st in step} for step in states_per_step)
    dt = times[1] - times[0] if len(times) > 1 else 1.0
    return Trace(times=times, steps=steps, dt=dt)


class TestLoadTrace:
    def test_three_records_one_actor(self):
        text = "\n".join(record(0.1 * k, x=k) for k in range(3))
        trace = load_trace(text)
        assert len(trace) == 3
        assert trace.dt == pytest.approx(0.1)

    def test_decreasing_time_reports_index(self):
        text = "\n".join([record(0.0), record(0.2, x=1), record(0.1, x=2)])
        with pytest.raises(TraceError, match="record 2"):
            load_trace(text)

    def test_missing_field_reports_index(self):
        bad = json.dumps({"t": 0.0, "actor_id": "a", "role": "AV"})
        with pytest.raises(TraceError, match="record 0"):
            load_trace(bad)

    def test_inconsistent_dims_rejected(self):
        text = "\n".join([record(0.0, length=4.0), record(0.1, length=4.5)])
        with pytest.raises(TraceError, match="dims"):
            load_trace(text)

    def test_speed_mph_converted(self):
        trace = load_trace(record(0.0, speed_mph=25.0))
        assert trace.steps[0]["ego"].speed == pytest.approx(25 * MPH)

    def test_round_trip(self):
        text = "\n".join([
            record(0.0, x=0.0, speed_mps=11.176),
            record(0.0, actor="other1", role="OV", y=1.825, x=50.0,
                   heading=math.pi),
            record(0.05, x=0.5588, speed_mps=11.176),
            record(0.05, actor="other1", role="OV", y=1.825, x=49.4,
                   heading=math.pi),
        ])
        trace = load_trace(text)
        again = load_trace(serialise_trace(trace))
        assert again == trace

    def test_generated_scenario_loads(self, safe_scenario):
        _, trace = safe_scenario
        again = load_trace(serialise_trace(trace))
        assert again.times == trace.times
        roles = set(again.actors().values())
        assert roles == {"AV", "VBP", "OV"}


class TestDeriveDynamics:
    def test_constant_speed_25mph(self):
        step_m = 1.1176
        steps = [[state(0.1 * k, x=step_m * k / 0.1 * 0.1)] for k in range(5)]
        # positions advance 1.1176 m per 0.1 s step
        steps = [[state(0.1 * k, x=step_m * k)] for k in range(5)]
        d = derive_dynamics(make_trace(steps), ROAD)
        for k in range(5):
            assert d.at(k, "ego").velocity == pytest.approx(11.176)
            assert d.at(k, "ego").speed == pytest.approx(11.176)

    def test_constant_velocity_zero_acceleration(self):
        steps = [[state(0.1 * k, x=2.0 * k)] for k in range(6)]
        d = derive_dynamics(make_trace(steps), ROAD)
        for k in range(1, 5):
            assert d.at(k, "ego").acceleration == pytest.approx(0.0, abs=1e-9)

    def test_quadratic_profile_matches_analytic(self):
        # x(t) = 3 + 2t + 0.7 t^2  ->  a = 1.4 exactly at interior steps
        steps = [[state(0.05 * k, x=3 + 2 * (0.05 * k) + 0.7 * (0.05 * k) ** 2)]
                 for k in range(10)]
        d = derive_dynamics(make_trace(steps), ROAD)
        for k in range(1, 9):
            assert d.at(k, "ego").acceleration == pytest.approx(1.4, abs=1e-6)
            t = 0.05 * k
            assert d.at(k, "ego").velocity == pytest.approx(2 + 1.4 * t,
                                                            abs=1e-9)

    def test_pull_out_angle_definition(self):
        # heading 0.1 rad in a lane of orientation 0, moving toward the
        # oncoming lane
        vx, vy = 11.0 * math.cos(0.1), 11.0 * math.sin(0.1)
        steps = [[state(0.1 * k, x=vx * 0.1 * k, y=-1.825 + vy * 0.1 * k,
                        heading=0.1)] for k in range(4)]
        d = derive_dynamics(make_trace(steps), ROAD)
        assert d.at(1, "ego").pull_out_angle == pytest.approx(0.1)
        assert d.at(1, "ego").cut_in_angle == 0.0

    def test_cut_in_angle_on_return(self):
        # back over the line into the home lane, still converging on the
        # lane centre: lane-relative heading is -0.1, so cut-in angle 0.1
        vx, vy = 11.0 * math.cos(0.1), -11.0 * math.sin(0.1)
        steps = [[state(0.1 * k, x=vx * 0.1 * k, y=-0.5 + vy * 0.1 * k,
                        heading=-0.1)] for k in range(4)]
        d = derive_dynamics(make_trace(steps), ROAD)
        assert d.at(1, "ego").cut_in_angle == pytest.approx(0.1)
        assert d.at(1, "ego").pull_out_angle == 0.0

    def test_single_step_velocity_undefined(self):
        with pytest.raises(TraceError, match="single step"):
            derive_dynamics(make_trace([[state(0.0)]]), ROAD)

    def test_speed_disagreement_warns_positional_wins(self):
        steps = [[state(0.1 * k, x=11.176 * 0.1 * k, speed=5.0)]
                 for k in range(3)]
        d = derive_dynamics(make_trace(steps), ROAD)
        assert d.warnings
        assert d.at(1, "ego").speed == pytest.approx(11.176)

    def test_order_independence(self):
        a = [state(0.1 * k, x=k) for k in range(3)]
        b = [state(0.1 * k, actor="b", role="OV", x=50 - k, y=1.825,
                   heading=math.pi) for k in range(3)]
        t1 = make_trace([[x, y] for x, y in zip(a, b)])
        t2 = make_trace([[y, x] for x, y in zip(a, b)])
        d1 = derive_dynamics(t1, ROAD)
        d2 = derive_dynamics(t2, ROAD)
        assert d1.entries == d2.entries


class TestDistanceAhead:
    def test_published_safe_gap(self):
        # AV front face at x=10, OV front face at x=86.43, facing each other
        av = state(0.0, x=8.0)                      # front at 10
        ov = state(0.0, actor="ov", role="OV", x=88.43, y=1.825,
                   heading=math.pi)                 # front at 86.43
        assert distance_ahead({"ego": av, "ov": ov}, ROAD) == pytest.approx(
            76.43)

    def test_overlapping_boxes_zero(self):
        av = state(0.0, x=10.0)
        ov = state(0.0, actor="ov", role="OV", x=11.0, y=-1.825,
                   heading=math.pi)
        assert distance_ahead({"ego": av, "ov": ov}, ROAD) == 0.0

    def test_missing_ov(self):
        with pytest.raises(RoleNotFoundError):
            distance_ahead({"ego": state(0.0)}, ROAD)
