"""Detection-to-trace estimation using pinhole approximations.

Longitudinal range from a detected box width:   s = c * W / w
Lateral offset from the centre-line position:   d = (wL_real / wL_px) * d_px

where ``c`` is an empirically calibrated focal constant, ``W`` the assumed
real vehicle width, ``w`` the detected box width in pixels, and ``d_px``
the pixel offset of the lane line from the frame centre.  ``c`` has no
sensible default and must be supplied by the calibration file.

Detections are consumed from JSON-lines produced offline by any detector:

    {"t": 0.0, "frame": 0, "class": "car", "box_width_px": 108.0,
     "box_centre_px": 320.0, "role_hint": "OV"}
    {"t": 0.0, "frame": 0, "line_px": 300.0}

Records with ``line_px`` carry the per-frame lane-line position used for
the ego's lateral offset.  Without a speed measurement the reconstruction
assumes worst-case class speed limits.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

from .models import MPH_TO_MPS, ModelConfig, default_profiles
from .trace import ActorState, Trace
from .geometry import BoxDims, Pose2D

LOW_CONFIDENCE_PX = 5.0

ACTOR_CLASSES = ("car", "goods_vehicle")


class PerceptionError(ValueError):
    def __init__(self, message, record_index=None):
        if record_index is not None:
            message = f"record {record_index}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class DetectionRecord:
    frame_index: int
    t: float
    actor_class: str
    box_width_px: float
    box_centre_px: float
    role_hint: str = "unknown"

    def __post_init__(self):
        if self.box_width_px <= 0.0:
            raise PerceptionError(
                f"box width must be > 0 px, got {self.box_width_px}")
        if self.actor_class not in ACTOR_CLASSES:
            raise PerceptionError(f"unknown class {self.actor_class!r}")


@dataclass(frozen=True)
class LineRecord:
    frame_index: int
    t: float
    line_px: float


@dataclass(frozen=True)
class CameraCalibration:
    c: float                      # focal constant, px*m/m
    assumed_vehicle_width: float
    lane_width_real: float
    lane_width_px: float
    frame_centre_px: float

    def __post_init__(self):
        for name in ("c", "assumed_vehicle_width", "lane_width_real",
                     "lane_width_px", "frame_centre_px"):
            if getattr(self, name) <= 0.0:
                raise PerceptionError(f"calibration {name} must be > 0")

    @classmethod
    def from_json(cls, source) -> "CameraCalibration":
        if hasattr(source, "read"):
            doc = json.load(source)
        elif isinstance(source, (str, bytes)) and str(source).lstrip().startswith("{"):
            doc = json.loads(source)
        else:
            with open(source, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        if "c" not in doc:
            raise PerceptionError("calibration must supply the focal "
                                  "constant 'c' (no default exists)")
        return cls(c=float(doc["c"]),
                   assumed_vehicle_width=float(doc.get("assumed_vehicle_width", 2.0)),
                   lane_width_real=float(doc.get("lane_width_real", 3.65)),
                   lane_width_px=float(doc.get("lane_width_px", 365.0)),
                   frame_centre_px=float(doc.get("frame_centre_px", 320.0)))

    def to_json(self) -> str:
        return json.dumps({
            "c": self.c, "assumed_vehicle_width": self.assumed_vehicle_width,
            "lane_width_real": self.lane_width_real,
            "lane_width_px": self.lane_width_px,
            "frame_centre_px": self.frame_centre_px}, sort_keys=True, indent=2)


@dataclass(frozen=True)
class EstimatorConfig:
    """Reconstruction assumptions for the 2-D scenario."""

    av_speed_mph: float = 60.0
    av_length: float = 4.5
    av_width: float = 2.0
    lane_width: float = 3.65
    class_lengths: dict = field(default_factory=lambda: {
        "car": 4.5, "goods_vehicle": 8.0})
    model: ModelConfig = field(default_factory=default_profiles)


def longitudinal_distance(rec: DetectionRecord, cal: CameraCalibration) -> float:
    """Range along the road from the detected pixel width."""
    return cal.c * cal.assumed_vehicle_width / rec.box_width_px


def lateral_offset(d_px: float, cal: CameraCalibration) -> float:
    """Metres from the centre line; positive is into the oncoming lane."""
    return (cal.lane_width_real / cal.lane_width_px) * d_px


def load_detections(source):
    """Parse the detection JSONL; returns (detections, line_records)."""
    if isinstance(source, (bytes, bytearray)):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    elif isinstance(source, io.IOBase) or hasattr(source, "read"):
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    else:
        raise TypeError(f"cannot read detections from {type(source).__name__}")
    detections = []
    lines = []
    index = -1
    last_t = None
    for raw in text.splitlines():
        raw = raw.strip()
        if not raw:
            continue
        index += 1
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise PerceptionError(f"invalid JSON: {exc.msg}", index) from exc
        t = float(obj["t"])
        if last_t is not None and t < last_t:
            raise PerceptionError(f"out-of-order timestamp {t}", index)
        last_t = t
        frame = int(obj.get("frame", 0))
        if "line_px" in obj:
            lines.append(LineRecord(frame_index=frame, t=t,
                                    line_px=float(obj["line_px"])))
            continue
        try:
            detections.append(DetectionRecord(
                frame_index=frame, t=t,
                actor_class=str(obj["class"]),
                box_width_px=float(obj["box_width_px"]),
                box_centre_px=float(obj.get("box_centre_px", 0.0)),
                role_hint=str(obj.get("role_hint", "unknown"))))
        except KeyError as exc:
            raise PerceptionError(f"missing field {exc.args[0]!r}", index) from exc
    return detections, lines


def boxes_to_trace(detections, line_records, cal: CameraCalibration,
                   config: EstimatorConfig | None = None) -> Trace:
    """Reconstruct a world-frame trace from per-frame detections.

    The ego advances at the assumed speed; its lateral position comes from
    the lane-line records.  Detected vehicles sit at their estimated range
    ahead of the ego, at fixed lateral offsets of half a lane width each
    side of the line.  Speeds are worst-case class limits.
    """
    config = config or EstimatorConfig()
    by_t: dict = {}
    for rec in detections:
        by_t.setdefault(rec.t, []).append(rec)
    line_by_t = {}
    for rec in line_records:
        line_by_t[rec.t] = rec.line_px

    times = sorted(set(by_t) | set(line_by_t))
    if not times:
        raise PerceptionError("no detection records")
    v_av = config.av_speed_mph * MPH_TO_MPS
    half_lane = config.lane_width / 2.0

    steps = []
    last_offset = -half_lane
    for t in times:
        if t in line_by_t:
            d_px = cal.frame_centre_px - line_by_t[t]
            last_offset = lateral_offset(d_px, cal)
        steps.append((t, v_av * t, last_offset, by_t.get(t, [])))

    # ego headings from the finite differences of its reconstructed path
    av_states = []
    for i, (t, x, y, _) in enumerate(steps):
        if len(steps) == 1:
            heading = 0.0
        elif i + 1 < len(steps):
            t2, x2, y2, _ = steps[i + 1]
            heading = math.atan2(y2 - y, x2 - x)
        else:
            t0, x0, y0, _ = steps[i - 1]
            heading = math.atan2(y - y0, x - x0)
        av_states.append(ActorState(
            actor_id="ego", role="AV", t=t, pose=Pose2D(x, y, heading),
            dims=BoxDims(config.av_length, config.av_width), speed=v_av))

    out_steps = []
    for i, (t, x_av, _, recs) in enumerate(steps):
        step = {"ego": av_states[i]}
        for rec in recs:
            s = longitudinal_distance(rec, cal)
            role = rec.role_hint if rec.role_hint in ("VBP", "OV") else "other"
            if role == "OV":
                y = half_lane
                heading = math.pi
            else:
                y = -half_lane
                heading = 0.0
            v = config.model.worst_case_speed_mph[rec.actor_class] * MPH_TO_MPS
            actor_id = f"{role.lower()}_{rec.actor_class}"
            step[actor_id] = ActorState(
                actor_id=actor_id, role=role, t=t,
                pose=Pose2D(x_av + s, y, heading),
                dims=BoxDims(config.class_lengths[rec.actor_class],
                             cal.assumed_vehicle_width),
                speed=v,
                low_confidence=rec.box_width_px < LOW_CONFIDENCE_PX)
        out_steps.append(step)
    dt = times[1] - times[0] if len(times) > 1 else 1.0
    return Trace(times=tuple(times), steps=tuple(out_steps), dt=dt)


def trace_to_detections(trace: Trace, cal: CameraCalibration,
                        config: EstimatorConfig | None = None) -> str:
    """Synthesise a detection JSONL from a trace (fixture generation).

    Inverts the pinhole range model for every VBP/OV ahead of the ego and
    emits a lane-line record per frame from the ego's lateral position.
    """
    config = config or EstimatorConfig()
    lines = []
    for frame, step in enumerate(trace.steps):
        av = next((s for s in step.values() if s.role == "AV"), None)
        if av is None:
            continue
        t = av.t
        line_px = cal.frame_centre_px - (av.pose.y * cal.lane_width_px
                                         / cal.lane_width_real)
        lines.append(json.dumps({"t": t, "frame": frame, "line_px": line_px}))
        for st in step.values():
            if st.role not in ("VBP", "OV"):
                continue
            s = st.pose.x - av.pose.x
            if s <= 1.0:
                continue   # behind or on top of the camera
            w_px = cal.c * cal.assumed_vehicle_width / s
            cls = ("goods_vehicle"
                   if st.dims.length > 6.0 else "car")
            lines.append(json.dumps({
                "t": t, "frame": frame, "class": cls,
                "box_width_px": w_px, "box_centre_px": cal.frame_centre_px,
                "role_hint": st.role}))
    return "\n".join(lines) + "\n"
