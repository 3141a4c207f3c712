"""Quantitative highway-code models.

Stopping distance follows the Rule 126 regression

    SD(v) = a*v + b + c*v + d*v^2        (v in mph, SD in metres)

with a=0.300, b=0.058, c=-0.011, d=0.015; a*v is the thinking component and
the rest is braking.  The regression operates in mph by construction, so all
callers convert from SI exactly once at this boundary.

The safe-distance-ahead model decomposes an overtake into pull-out, passing
and cut-in phases.  With lateral offset ``L``, clearances ``C_po``/``C_ci``,
passed-vehicle length ``len_vbp`` and steering angles ``beta``/``theta``:

    T  = L / (v_av * tan(beta))
       + (C_po + len_vbp + C_ci) / (v_av - v_vbp)
       + L / (v_av * tan(theta))
    SDA = (v_av + v_ov) * T + SD(v_ov)

The forward speed component is taken as v_av (small steering angles, so
cos of the angle is treated as 1).  The default profile parameters live in
``data/profiles.json`` and are calibrated so the model reproduces the
published required distances for the relaxed, nominal and aggressive
profiles (101.39 m, 63.73 m, 40.02 m at 25 mph all round, stationary VBP).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

MPH_TO_MPS = 0.44704


def mph_to_mps(v_mph: float) -> float:
    return v_mph * MPH_TO_MPS


def mps_to_mph(v_mps: float) -> float:
    return v_mps / MPH_TO_MPS


class ModelError(ValueError):
    pass


class OvertakeInfeasibleError(ModelError):
    """The AV is not faster than the vehicle being passed."""


class UndefinedTtcError(ModelError):
    """Time to collision is undefined for a non-positive closing speed."""


@dataclass(frozen=True)
class StoppingCoefficients:
    a: float = 0.300
    b: float = 0.058
    c: float = -0.011
    d: float = 0.015


DEFAULT_COEFFICIENTS = StoppingCoefficients()


@dataclass(frozen=True)
class StoppingDistance:
    thinking: float
    braking: float

    @property
    def total(self) -> float:
        return self.thinking + self.braking


def stopping_distance(v_mph: float,
                      coeffs: StoppingCoefficients = DEFAULT_COEFFICIENTS
                      ) -> StoppingDistance:
    """Thinking + braking distance in metres for a speed in mph."""
    if v_mph < 0.0:
        raise ModelError(f"speed must be >= 0 mph, got {v_mph}")
    thinking = coeffs.a * v_mph
    braking = coeffs.b + coeffs.c * v_mph + coeffs.d * v_mph * v_mph
    return StoppingDistance(thinking=thinking, braking=braking)


def danger_space_length(v_mph: float,
                        coeffs: StoppingCoefficients = DEFAULT_COEFFICIENTS
                        ) -> float:
    """Length of the forward danger space: equal to the stopping distance."""
    return stopping_distance(v_mph, coeffs).total


@dataclass(frozen=True)
class DrivingProfile:
    """Overtake urgency: clearances in metres, steering angles in radians."""

    name: str
    pull_out_clearance: float
    pull_out_angle: float
    cut_in_clearance: float
    cut_in_angle: float

    def __post_init__(self):
        if self.pull_out_clearance < 0.0 or self.cut_in_clearance < 0.0:
            raise ModelError(f"profile {self.name!r}: clearances must be >= 0")
        for ang in (self.pull_out_angle, self.cut_in_angle):
            if not 0.0 < ang < math.pi / 2:
                raise ModelError(
                    f"profile {self.name!r}: angles must lie in (0, pi/2)")


@dataclass(frozen=True)
class ManoeuvreGeometry:
    """Kinematic context of one overtake; speeds in m/s."""

    lateral_offset: float
    vbp_length: float
    v_av: float
    v_vbp: float
    v_ov: float

    def __post_init__(self):
        if self.lateral_offset <= 0.0:
            raise ModelError("lateral offset must be > 0")
        if min(self.v_av, self.v_vbp, self.v_ov) < 0.0:
            raise ModelError("speeds must be >= 0")
        if self.v_av <= self.v_vbp:
            raise OvertakeInfeasibleError(
                f"v_av={self.v_av} must exceed v_vbp={self.v_vbp}")


def manoeuvre_time(profile: DrivingProfile, geom: ManoeuvreGeometry) -> float:
    """Total pull-out + passing + cut-in time in seconds."""
    tan_po = math.tan(profile.pull_out_angle)
    tan_ci = math.tan(profile.cut_in_angle)
    if tan_po <= 0.0 or tan_ci <= 0.0:
        raise ModelError("steering angle tangents must be positive")
    t_pull_out = geom.lateral_offset / (geom.v_av * tan_po)
    t_pass = ((profile.pull_out_clearance + geom.vbp_length
               + profile.cut_in_clearance) / (geom.v_av - geom.v_vbp))
    t_cut_in = geom.lateral_offset / (geom.v_av * tan_ci)
    return t_pull_out + t_pass + t_cut_in


def safe_distance_ahead(profile: DrivingProfile, geom: ManoeuvreGeometry,
                        coeffs: StoppingCoefficients = DEFAULT_COEFFICIENTS
                        ) -> float:
    """Required gap to the oncoming vehicle at the start of the overtake.

    Closure during the manoeuvre plus the oncoming vehicle's own danger
    space, evaluated at its measured speed.
    """
    t_total = manoeuvre_time(profile, geom)
    ds_ov = danger_space_length(mps_to_mph(geom.v_ov), coeffs)
    return (geom.v_av + geom.v_ov) * t_total + ds_ov


def ttc(gap: float, closing_speed: float) -> float:
    """Time to collision: gap over closing speed."""
    if closing_speed <= 0.0:
        raise UndefinedTtcError(
            f"closing speed must be > 0, got {closing_speed}")
    return gap / closing_speed


@dataclass(frozen=True)
class ModelConfig:
    """Profiles plus shared manoeuvre geometry and speed assumptions."""

    profiles: dict
    lateral_offset: float
    vbp_length: float
    worst_case_speed_mph: dict
    role_vehicle_class: dict

    def profile(self, name: str) -> DrivingProfile:
        try:
            return self.profiles[name]
        except KeyError:
            raise ModelError(f"unknown driving profile {name!r}; "
                             f"have {sorted(self.profiles)}") from None

    def geometry(self, v_av: float, v_vbp: float, v_ov: float) -> ManoeuvreGeometry:
        return ManoeuvreGeometry(lateral_offset=self.lateral_offset,
                                 vbp_length=self.vbp_length,
                                 v_av=v_av, v_vbp=v_vbp, v_ov=v_ov)

    def worst_case_mph(self, role: str) -> float:
        cls = self.role_vehicle_class.get(role, "car")
        return self.worst_case_speed_mph[cls]


def _profiles_from_doc(doc: dict) -> ModelConfig:
    profiles = {}
    for name, p in doc["profiles"].items():
        profiles[name] = DrivingProfile(
            name=p.get("name", name),
            pull_out_clearance=float(p["pull_out_clearance_m"]),
            pull_out_angle=float(p["pull_out_angle_rad"]),
            cut_in_clearance=float(p["cut_in_clearance_m"]),
            cut_in_angle=float(p["cut_in_angle_rad"]),
        )
    man = doc.get("manoeuvre", {})
    return ModelConfig(
        profiles=profiles,
        lateral_offset=float(man.get("lateral_offset_m", 2.9)),
        vbp_length=float(man.get("vbp_length_m", 4.4)),
        worst_case_speed_mph=dict(doc.get("worst_case_speed_mph",
                                          {"car": 60.0, "goods_vehicle": 50.0})),
        role_vehicle_class=dict(doc.get("role_vehicle_class",
                                        {"AV": "car", "OV": "car",
                                         "VBP": "goods_vehicle", "other": "car"})),
    )


def load_profiles(source=None) -> ModelConfig:
    """Load profile config from a path/file, or the packaged defaults."""
    if source is None:
        text = resources.files("roadcheck.data").joinpath(
            "profiles.json").read_text("utf-8")
    elif hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    return _profiles_from_doc(json.loads(text))


def default_profiles() -> ModelConfig:
    return load_profiles(None)
