"""Time-indexed actor state capture and derived dynamics.

Traces are ingested from JSON-lines, one record per actor per timestep:

    {"t": 0.0, "actor_id": "ego", "role": "AV", "x": 0.0, "y": -1.825,
     "heading_rad": 0.0, "length_m": 4.5, "width_m": 2.0, "speed_mps": 11.176}

``speed_mph`` is accepted and converted (1 mph = 0.44704 m/s).  Derived
dynamics use central finite differences at interior steps and first-order
one-sided differences at the endpoints; acceleration uses the three-point
second difference, which is exact for quadratic position profiles.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

from .geometry import BoxDims, Pose2D, normalize_angle, oriented_box, projection_interval
from .worldmap import OffRoadError, RoadMap, lane_orientation_at

MPH_TO_MPS = 0.44704

ROLES = ("AV", "VBP", "OV", "other")

# Disagreement between recorded and positionally-derived speed that earns a
# warning; the positional value wins either way.
SPEED_WARN_MPS = 0.5


class TraceError(ValueError):
    """Malformed or inconsistent trace stream."""

    def __init__(self, message, record_index=None):
        self.record_index = record_index
        if record_index is not None:
            message = f"record {record_index}: {message}"
        super().__init__(message)


class RoleNotFoundError(LookupError):
    """A required actor role is absent from the timestep."""


@dataclass(frozen=True)
class ActorState:
    actor_id: str
    role: str
    t: float
    pose: Pose2D
    dims: BoxDims
    speed: float | None = None
    low_confidence: bool = False

    def __post_init__(self):
        if self.role not in ROLES:
            raise TraceError(f"unknown role {self.role!r} for {self.actor_id!r}")
        if not (math.isfinite(self.t) and self.t >= 0.0):
            raise TraceError(f"timestamp must be finite and >= 0, got {self.t}")

    def box(self):
        return oriented_box(self.pose, self.dims)


@dataclass(frozen=True)
class Trace:
    times: tuple[float, ...]
    steps: tuple[dict, ...]          # per-step {actor_id: ActorState}
    dt: float
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(self.times))
        object.__setattr__(self, "steps", tuple(dict(s) for s in self.steps))
        if len(self.times) != len(self.steps):
            raise TraceError("times and steps length mismatch")
        for i in range(1, len(self.times)):
            if not self.times[i] > self.times[i - 1]:
                raise TraceError(
                    f"timestamps must be strictly increasing "
                    f"(step {i}: {self.times[i]} after {self.times[i - 1]})")
        if self.dt <= 0.0:
            raise TraceError(f"dt must be > 0, got {self.dt}")
        dims_seen: dict = {}
        for i, step in enumerate(self.steps):
            for aid, st in step.items():
                if st.actor_id != aid:
                    raise TraceError(f"step {i}: key {aid!r} != state id {st.actor_id!r}")
                prev = dims_seen.get(aid)
                if prev is not None and prev != st.dims:
                    raise TraceError(
                        f"step {i}: actor {aid!r} changed dims {prev} -> {st.dims}")
                dims_seen[aid] = st.dims

    def __len__(self):
        return len(self.times)

    def actors(self):
        seen = {}
        for step in self.steps:
            for aid, st in step.items():
                seen.setdefault(aid, st.role)
        return seen

    def by_role(self, step_index: int, role: str) -> ActorState:
        for st in self.steps[step_index].values():
            if st.role == role:
                return st
        raise RoleNotFoundError(f"no actor with role {role!r} at step {step_index}")


def _parse_record(obj: dict, index: int) -> ActorState:
    required = ("t", "actor_id", "role", "x", "y", "heading_rad",
                "length_m", "width_m")
    for key in required:
        if key not in obj:
            raise TraceError(f"missing required field {key!r}", index)
    speed = None
    if "speed_mps" in obj and "speed_mph" in obj:
        raise TraceError("both speed_mps and speed_mph present", index)
    if "speed_mps" in obj:
        speed = float(obj["speed_mps"])
    elif "speed_mph" in obj:
        speed = float(obj["speed_mph"]) * MPH_TO_MPS
    try:
        return ActorState(
            actor_id=str(obj["actor_id"]),
            role=str(obj["role"]),
            t=float(obj["t"]),
            pose=Pose2D(float(obj["x"]), float(obj["y"]), float(obj["heading_rad"])),
            dims=BoxDims(float(obj["length_m"]), float(obj["width_m"])),
            speed=speed,
            low_confidence=bool(obj.get("low_confidence", False)),
        )
    except (TraceError, ValueError) as exc:
        raise TraceError(str(exc), index) from exc


def load_trace(source) -> Trace:
    """Read a JSON-lines record stream and group it into timesteps."""
    if isinstance(source, (bytes, bytearray)):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    elif isinstance(source, io.IOBase) or hasattr(source, "read"):
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    else:
        raise TypeError(f"cannot read trace from {type(source).__name__}")

    times: list[float] = []
    steps: list[dict] = []
    index = -1
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        index += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceError(f"invalid JSON: {exc.msg}", index) from exc
        state = _parse_record(obj, index)
        if times and state.t < times[-1]:
            raise TraceError(
                f"out-of-order timestamp {state.t} after {times[-1]}", index)
        if not times or state.t > times[-1]:
            times.append(state.t)
            steps.append({})
        if state.actor_id in steps[-1]:
            raise TraceError(
                f"duplicate actor {state.actor_id!r} at t={state.t}", index)
        steps[-1][state.actor_id] = state

    if not times:
        raise TraceError("empty trace")
    if len(times) >= 2:
        dt = times[1] - times[0]
    else:
        dt = 1.0
    return Trace(times=tuple(times), steps=tuple(steps), dt=dt)


def serialise_trace(trace: Trace) -> str:
    """JSON-lines text; load_trace(serialise_trace(t)) round-trips."""
    lines = []
    for step in trace.steps:
        for aid in sorted(step):
            st = step[aid]
            obj = {
                "t": st.t, "actor_id": st.actor_id, "role": st.role,
                "x": st.pose.x, "y": st.pose.y, "heading_rad": st.pose.heading,
                "length_m": st.dims.length, "width_m": st.dims.width,
            }
            if st.speed is not None:
                obj["speed_mps"] = st.speed
            if st.low_confidence:
                obj["low_confidence"] = True
            lines.append(json.dumps(obj))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DerivedState:
    velocity: float                  # signed along heading, m/s
    acceleration: float | None       # m/s^2, None when < 3 usable steps
    speed: float                     # |velocity vector|, m/s
    heading_rel_lane: float | None   # radians in [-pi, pi), None off-road
    pull_out_angle: float = 0.0
    cut_in_angle: float = 0.0
    distance_ahead: float | None = None


def finite_velocity(prev: ActorState | None, cur: ActorState,
                    nxt: ActorState | None) -> tuple[float, float]:
    """Velocity vector at ``cur`` from neighbouring samples.

    Central difference when both neighbours exist, one-sided otherwise.
    Raises TraceError when the actor appears at a single step only.
    """
    if prev is None and nxt is None:
        raise TraceError(f"velocity undefined for single-step actor "
                         f"{cur.actor_id!r}")
    a = prev if prev is not None else cur
    b = nxt if nxt is not None else cur
    dt = b.t - a.t
    return ((b.pose.x - a.pose.x) / dt, (b.pose.y - a.pose.y) / dt)


def finite_acceleration(prev: ActorState | None, cur: ActorState,
                        nxt: ActorState | None) -> tuple[float, float] | None:
    """Three-point second difference; exact for quadratic trajectories."""
    if prev is None or nxt is None:
        return None
    t0, t1, t2 = prev.t, cur.t, nxt.t
    d01, d12, d02 = t1 - t0, t2 - t1, t2 - t0

    def second(p0, p1, p2):
        return 2.0 * (p0 / (d01 * d02) - p1 / (d12 * d01) + p2 / (d12 * d02))

    return (second(prev.pose.x, cur.pose.x, nxt.pose.x),
            second(prev.pose.y, cur.pose.y, nxt.pose.y))


def _nearest_centreline_point(road: RoadMap, p: tuple[float, float]):
    best = None
    best_d = math.inf
    px, py = p
    pts = road.centreline
    for i in range(len(pts) - 1):
        ax, ay = pts[i]
        bx, by = pts[i + 1]
        abx, aby = bx - ax, by - ay
        denom = abx * abx + aby * aby
        t = 0.0 if denom == 0.0 else max(0.0, min(1.0, ((px - ax) * abx + (py - ay) * aby) / denom))
        qx, qy = ax + t * abx, ay + t * aby
        d = (qx - px) ** 2 + (qy - py) ** 2
        if d < best_d:
            best_d = d
            best = (qx, qy)
    return best


def derive_state(prev: ActorState | None, cur: ActorState,
                 nxt: ActorState | None, road: RoadMap) -> DerivedState:
    """Derived dynamics for one actor at one step.

    Shared by batch derivation and the streaming engine so both produce
    identical values for identical neighbourhoods.
    """
    vx, vy = finite_velocity(prev, cur, nxt)
    speed = math.hypot(vx, vy)
    ch, sh = math.cos(cur.pose.heading), math.sin(cur.pose.heading)
    velocity = vx * ch + vy * sh
    acc_vec = finite_acceleration(prev, cur, nxt)
    acceleration = None if acc_vec is None else acc_vec[0] * ch + acc_vec[1] * sh

    heading_rel = None
    pull_out = 0.0
    cut_in = 0.0
    centre = (cur.pose.x, cur.pose.y)
    try:
        lane_o = lane_orientation_at(road, centre)
    except OffRoadError:
        lane_o = None
    if lane_o is not None:
        heading_rel = normalize_angle(cur.pose.heading - lane_o)
        # lateral motion sign relative to the oncoming side of the centreline
        nx, ny = -math.sin(lane_o), math.cos(lane_o)
        lat_v = vx * nx + vy * ny
        cl = _nearest_centreline_point(road, centre)
        side = (cl[0] - centre[0]) * nx + (cl[1] - centre[1]) * ny
        toward = lat_v * side
        if toward > 1e-9:
            pull_out = heading_rel
        elif toward < -1e-9:
            cut_in = abs(heading_rel)
    return DerivedState(velocity=velocity, acceleration=acceleration,
                        speed=speed, heading_rel_lane=heading_rel,
                        pull_out_angle=pull_out, cut_in_angle=cut_in)


@dataclass(frozen=True)
class Dynamics:
    """Per-step, per-actor derived state, aligned with Trace.steps."""

    entries: tuple[dict, ...]
    warnings: tuple[str, ...] = ()

    def at(self, step_index: int, actor_id: str) -> DerivedState:
        return self.entries[step_index][actor_id]


def derive_row(prev_step: dict | None, cur_step: dict, nxt_step: dict | None,
               road: RoadMap) -> tuple[dict, list[str]]:
    """Derived state for every actor of one step, given its neighbours.

    This single routine backs both batch derivation and the streaming
    engine, which keeps the two paths bitwise identical.  Returns the
    per-actor map plus any speed-disagreement warnings.
    """
    row = {}
    notes = []
    for aid in sorted(cur_step):
        cur = cur_step[aid]
        prev = prev_step.get(aid) if prev_step else None
        nxt = nxt_step.get(aid) if nxt_step else None
        try:
            derived = derive_state(prev, cur, nxt, road)
        except TraceError:
            # actor visible at this step only: no positional dynamics
            notes.append(f"t={cur.t}: actor {aid!r} appears at a single "
                         f"step; dynamics unavailable")
            continue
        if cur.speed is not None and abs(cur.speed - derived.speed) > SPEED_WARN_MPS:
            notes.append(
                f"t={cur.t}: actor {aid!r} recorded speed {cur.speed:.3f} "
                f"disagrees with positional {derived.speed:.3f}; positional wins")
        row[aid] = derived
    try:
        gap = distance_ahead(cur_step, road)
    except (RoleNotFoundError, OffRoadError):
        gap = None
    if gap is not None:
        for aid, st in cur_step.items():
            if st.role == "AV" and aid in row:
                d = row[aid]
                row[aid] = DerivedState(
                    velocity=d.velocity, acceleration=d.acceleration,
                    speed=d.speed, heading_rel_lane=d.heading_rel_lane,
                    pull_out_angle=d.pull_out_angle, cut_in_angle=d.cut_in_angle,
                    distance_ahead=gap)
    return row, notes


def derive_dynamics(trace: Trace, road: RoadMap) -> Dynamics:
    """Derived dynamics for every actor at every step.

    Deterministic and independent of actor iteration order.  Requires at
    least two steps in which each actor appears.
    """
    if len(trace) < 2:
        raise TraceError("velocity undefined: trace has a single step")
    entries = []
    notes = []
    for k in range(len(trace)):
        prev_step = trace.steps[k - 1] if k > 0 else None
        nxt_step = trace.steps[k + 1] if k + 1 < len(trace) else None
        row, row_notes = derive_row(prev_step, trace.steps[k], nxt_step, road)
        entries.append(row)
        notes.extend(row_notes)
    return Dynamics(entries=tuple(entries), warnings=tuple(notes))


def distance_ahead(step: dict, road: RoadMap) -> float:
    """AV-to-OV gap projected on the AV's lane orientation axis.

    Zero when the projected intervals overlap.
    """
    av = ov = None
    for st in step.values():
        if st.role == "AV":
            av = st
        elif st.role == "OV":
            ov = st
    if av is None:
        raise RoleNotFoundError("no actor with role 'AV' at this step")
    if ov is None:
        raise RoleNotFoundError("no actor with role 'OV' at this step")
    axis = lane_orientation_at(road, (av.pose.x, av.pose.y))
    a_lo, a_hi = projection_interval(av.box(), axis)
    b_lo, b_hi = projection_interval(ov.box(), axis)
    return max(0.0, b_lo - a_hi, a_lo - b_hi)
