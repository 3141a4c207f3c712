"""Command-line interface.

Subcommands:

  check     batch-evaluate assertions over a recorded trace
  monitor   evaluate records streamed on stdin, emitting verdicts as they
            become decidable
  gen       write a scenario preset's map/trace fixtures
  estimate  convert detection JSONL into a trace via the pinhole model
  zones     classify the overtake decision point into zones A-D

Exit codes: 0 when every applicable safety assertion passes, 1 when any
safety assertion fails (performance failures are reported but never change
the exit code), 2 for usage or parse errors.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import engine, perception, rulepack, scenarios, zones as zones_mod
from .checker import TypecheckError, compile_text
from .dsl import ParseError
from .engine import (FAIL, DebounceFilter, EvaluationContext, StreamingEngine,
                     debounce, evaluate_document, summary_csv, summary_rows,
                     verdicts_to_jsonl)
from .models import load_profiles
from .perception import CameraCalibration, EstimatorConfig, PerceptionError
from .trace import TraceError, load_trace, serialise_trace
from .worldmap import MapError, load_map, serialise_map


def _die(message: str, code: int = 2):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_inputs(map_path, rules_paths, profiles_path):
    try:
        with open(map_path, "rb") as fh:
            road = load_map(fh)
    except (OSError, MapError) as exc:
        _die(str(exc))
    config = load_profiles(profiles_path)
    assertions = []
    if rules_paths:
        for path in rules_paths:
            try:
                text = Path(path).read_text("utf-8")
                assertions.extend(compile_text(text).assertions)
            except (OSError, ParseError, TypecheckError) as exc:
                _die(f"{path}: {exc}")
    else:
        assertions = list(rulepack.load_rulepack())
    return road, config, assertions


def _exit_code(verdicts, assertions) -> int:
    severity = {a.id: a.decl.severity for a in assertions}
    for v in verdicts:
        if v.result == FAIL and severity.get(v.assertion_id, "safety") == "safety":
            return 1
    return 0


@click.group()
def main():
    """Assertion checking of driving traces against highway-code rules."""


_shared_options = [
    click.option("--map", "map_path", required=True,
                 type=click.Path(exists=True, dir_okay=False),
                 help="Road map JSON."),
    click.option("--rules", "rules_paths", multiple=True,
                 type=click.Path(exists=True, dir_okay=False),
                 help="Assertion file(s); default is the shipped overtaking "
                      "rulepack."),
    click.option("--profiles", "profiles_path", default=None,
                 type=click.Path(exists=True, dir_okay=False),
                 help="Driving-profile config JSON (default: packaged)."),
    click.option("--profile", "profile_name", default="nominal",
                 show_default=True, help="Driving profile used by sda()."),
    click.option("--odd", "active_odd", multiple=True,
                 help="Active ODD tag (repeatable); empty means no filter."),
    click.option("--debounce", "debounce_n", default=1, show_default=True,
                 type=int, help="Publish result changes only after this many "
                                "consecutive steps."),
    click.option("--strict-windows/--lenient-windows", default=True,
                 show_default=True,
                 help="Incomplete pre/post windows fail (strict) or become "
                      "not_applicable (lenient)."),
    click.option("--worst-case-speeds/--measured-speeds", default=False,
                 show_default=True,
                 help="Danger spaces use per-class speed limits instead of "
                      "measured speeds."),
]


def _with_shared(fn):
    for opt in reversed(_shared_options):
        fn = opt(fn)
    return fn


@main.command()
@_with_shared
@click.option("--trace", "trace_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out-jsonl", type=click.Path(dir_okay=False),
              help="Write the verdict stream here.")
@click.option("--out-csv", type=click.Path(dir_okay=False),
              help="Write the per-assertion summary CSV here.")
@click.option("--print-verdicts", is_flag=True,
              help="Also print every verdict to stdout.")
def check(map_path, rules_paths, profiles_path, profile_name, active_odd,
          debounce_n, strict_windows, worst_case_speeds, trace_path,
          out_jsonl, out_csv, print_verdicts):
    """Retrospective analysis of a recorded trace."""
    road, config, assertions = _load_inputs(map_path, rules_paths, profiles_path)
    try:
        with open(trace_path, "rb") as fh:
            trace = load_trace(fh)
    except (OSError, TraceError) as exc:
        _die(str(exc))
    ctx = EvaluationContext(road=road, config=config,
                            profile_name=profile_name,
                            active_odd=frozenset(active_odd),
                            strict_windows=strict_windows,
                            worst_case_speeds=worst_case_speeds)
    verdicts = evaluate_document(assertions, trace, ctx)
    if debounce_n > 1:
        verdicts = debounce(verdicts, debounce_n)
    if out_jsonl:
        Path(out_jsonl).write_text(verdicts_to_jsonl(verdicts), "utf-8")
    if out_csv:
        Path(out_csv).write_text(summary_csv(verdicts), "utf-8")
    if print_verdicts:
        for v in verdicts:
            click.echo(v.to_json())
    for row in summary_rows(verdicts):
        status = "FAIL" if row["fail_count"] else "PASS"
        first = ("" if row["first_fail_t"] is None
                 else f" first_fail_t={row['first_fail_t']:g}")
        click.echo(f"{row['assertion_id']}: {status} "
                   f"({row['pass_count']} pass, {row['fail_count']} fail)"
                   f"{first}")
    sys.exit(_exit_code(verdicts, assertions))


@main.command()
@_with_shared
def monitor(map_path, rules_paths, profiles_path, profile_name, active_odd,
            debounce_n, strict_windows, worst_case_speeds):
    """Streaming evaluation of records arriving on stdin (JSON lines)."""
    road, config, assertions = _load_inputs(map_path, rules_paths, profiles_path)
    ctx = EvaluationContext(road=road, config=config,
                            profile_name=profile_name,
                            active_odd=frozenset(active_odd),
                            strict_windows=strict_windows,
                            worst_case_speeds=worst_case_speeds)
    stream = StreamingEngine(assertions, ctx)
    filters: dict = {}

    def publish(verdicts):
        # line-buffered so downstream pipeline stages see each verdict
        for v in verdicts:
            if debounce_n > 1:
                filt = filters.setdefault(v.assertion_id,
                                          DebounceFilter(debounce_n))
                for out in filt.feed(v):
                    click.echo(out.to_json())
            else:
                click.echo(v.to_json())
        sys.stdout.flush()

    pending_t = None
    pending: dict = {}
    failed = False
    index = -1
    try:
        for line in sys.stdin:
            line = line.strip()
            if not line:
                continue
            index += 1
            try:
                obj = json.loads(line)
                from .trace import _parse_record
                state = _parse_record(obj, index)
            except (TraceError, json.JSONDecodeError) as exc:
                _die(str(exc))
            if pending_t is None or state.t > pending_t:
                if pending:
                    publish(stream.feed(pending_t, pending))
                pending_t, pending = state.t, {}
            elif state.t < pending_t:
                raise engine.StreamError(
                    f"record {index}: time regression {state.t} "
                    f"after {pending_t}")
            pending[state.actor_id] = state
        if pending:
            publish(stream.feed(pending_t, pending))
        final = stream.finish()
        publish(final)
        for filt in filters.values():
            for out in filt.finish():
                click.echo(out.to_json())
    except engine.StreamError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    sys.exit(0)


@main.command()
@click.argument("preset_name")
@click.option("--out-dir", default=".", show_default=True,
              type=click.Path(file_okay=False))
def gen(preset_name, out_dir):
    """Write a preset scenario's map and trace (plus detections when the
    preset exercises the estimator path)."""
    try:
        spec = scenarios.preset(preset_name)
    except scenarios.InvalidSpecError as exc:
        _die(str(exc))
    road, trace = scenarios.generate(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{preset_name}_map.json").write_text(serialise_map(road), "utf-8")
    (out / f"{preset_name}_trace.jsonl").write_text(serialise_trace(trace), "utf-8")
    written = [f"{preset_name}_map.json", f"{preset_name}_trace.jsonl"]
    if spec.occlusion is not None:
        cal = CameraCalibration(c=1200.0, assumed_vehicle_width=2.0,
                                lane_width_real=spec.lane_width,
                                lane_width_px=365.0, frame_centre_px=320.0)
        (out / f"{preset_name}_detections.jsonl").write_text(
            perception.trace_to_detections(trace, cal), "utf-8")
        (out / f"{preset_name}_calibration.json").write_text(
            cal.to_json(), "utf-8")
        written += [f"{preset_name}_detections.jsonl",
                    f"{preset_name}_calibration.json"]
    for name in written:
        click.echo(f"wrote {out / name}")


@main.command()
@click.option("--detections", "detections_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--calibration", "calibration_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True,
              type=click.Path(dir_okay=False))
@click.option("--av-speed-mph", default=60.0, show_default=True)
def estimate(detections_path, calibration_path, out_path, av_speed_mph):
    """Convert detection JSONL into a world-frame trace."""
    try:
        cal = CameraCalibration.from_json(calibration_path)
        with open(detections_path, "rb") as fh:
            detections, lines = perception.load_detections(fh)
        trace = perception.boxes_to_trace(
            detections, lines, cal,
            EstimatorConfig(av_speed_mph=av_speed_mph))
    except (OSError, PerceptionError, TraceError) as exc:
        _die(str(exc))
    Path(out_path).write_text(serialise_trace(trace), "utf-8")
    click.echo(f"wrote {out_path} ({len(trace)} steps)")


@main.command(name="zones")
@click.option("--map", "map_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--trace", "trace_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--profiles", "profiles_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--profile", "profile_name", default="nominal",
              show_default=True)
@click.option("--margin", default=0.1, show_default=True,
              help="Zone B width as a fraction of SDA.")
@click.option("--ttc-limit", default=2.5, show_default=True,
              help="Zone D boundary in seconds.")
@click.option("--out", "out_path", default=None,
              type=click.Path(dir_okay=False))
def zones_cmd(map_path, trace_path, profiles_path, profile_name, margin,
              ttc_limit, out_path):
    """Zone classification at the overtake decision point."""
    try:
        with open(map_path, "rb") as fh:
            road = load_map(fh)
        with open(trace_path, "rb") as fh:
            trace = load_trace(fh)
    except (OSError, MapError, TraceError) as exc:
        _die(str(exc))
    config = load_profiles(profiles_path)
    ctx = EvaluationContext(road=road, config=config,
                            profile_name=profile_name)
    rule = rulepack.rule162_sda_assertion()
    refs = engine.find_reference_points(rule, trace, ctx)
    if not refs:
        _die("the ego never crosses the centre line", code=1)
    thresholds = zones_mod.ZoneThresholds(safety_margin_fraction=margin,
                                          ttc_conservative=ttc_limit)
    observations = []
    from .trace import distance_ahead as trace_da
    index_of = {t: i for i, t in enumerate(trace.times)}
    from .trace import derive_row
    for t in refs:
        k = index_of[t]
        prev_step = trace.steps[k - 1] if k > 0 else None
        nxt_step = trace.steps[k + 1] if k + 1 < len(trace) else None
        derived, _ = derive_row(prev_step, trace.steps[k], nxt_step, road)
        step = trace.steps[k]
        av = next(s for s in step.values() if s.role == "AV")
        ov = next(s for s in step.values() if s.role == "OV")
        vbp = next((s for s in step.values() if s.role == "VBP"), None)
        geom = config.geometry(
            derived[av.actor_id].speed,
            derived[vbp.actor_id].speed if vbp else 0.0,
            derived[ov.actor_id].speed)
        observations.append((t, trace_da(step, road), geom))
    profile = config.profile(profile_name)
    rows = zones_mod.zone_report_rows(observations, profile, thresholds)
    text = zones_mod.zone_report_csv(rows)
    if out_path:
        Path(out_path).write_text(text, "utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text, nl=False)
    sys.exit(0)


if __name__ == "__main__":
    main()
