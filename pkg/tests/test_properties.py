"""Randomised property tests: batch/stream equivalence and DSL fuzzing."""

import json
import math
import random

import pytest

from roadcheck import dsl
from roadcheck.checker import compile_text
from roadcheck.dsl import ParseError, format_document, parse
from roadcheck.engine import (EvaluationContext, StreamingEngine,
                              evaluate_document)
from roadcheck.geometry import BoxDims, Pose2D
from roadcheck.models import default_profiles
from roadcheck.trace import ActorState, Trace
from roadcheck.worldmap import load_map

ROAD = load_map(json.dumps({
    "lanelets": [
        {"id": "east", "vertices": [[-50, -3.65], [500, -3.65], [500, 0], [-50, 0]],
         "orientation_rad": 0.0, "width_m": 3.65, "direction": "with_map_axis"},
        {"id": "west", "vertices": [[-50, 0], [500, 0], [500, 3.65], [-50, 3.65]],
         "orientation_rad": math.pi, "width_m": 3.65,
         "direction": "against_map_axis"},
    ],
    "centreline": [[-50, 0], [500, 0]],
}))


# --- random traces and assertion sets --------------------------------------

def random_trace(rng: random.Random) -> Trace:
    n = rng.randint(5, 25)
    dt = rng.choice([0.05, 0.1, 0.2])
    times = tuple(round(k * dt, 10) for k in range(n))
    x_av = rng.uniform(0, 30)
    y_av = rng.uniform(-2.0, -0.5)
    v_av = rng.uniform(3, 15)
    x_ov = rng.uniform(60, 200)
    v_ov = rng.uniform(0, 15)
    ov_from = rng.randint(0, n - 1)
    ov_to = rng.randint(ov_from, n)
    drop = {rng.randrange(n) for _ in range(rng.randint(0, 2))}
    steps = []
    for k, t in enumerate(times):
        step = {}
        wiggle = math.sin(k * 0.7) * rng.uniform(0, 1.2)
        step["ego"] = ActorState(
            actor_id="ego", role="AV", t=t,
            pose=Pose2D(x_av + v_av * t, y_av + wiggle,
                        rng.uniform(-0.2, 0.4)),
            dims=BoxDims(4.0, 2.0),
            speed=v_av if rng.random() < 0.5 else None)
        if ov_from <= k < ov_to and k not in drop:
            step["ov1"] = ActorState(
                actor_id="ov1", role="OV", t=t,
                pose=Pose2D(x_ov - v_ov * t, 1.825, math.pi),
                dims=BoxDims(4.0, 2.0), speed=v_ov)
        steps.append(step)
    return Trace(times=times, steps=tuple(steps), dt=dt)


_CONDITIONS = [
    'speed_of("av") > {x:.2f}',
    'min_distance(box_of("av"), box_of("ov")) > {y:.1f}',
    'not overlaps(box_of("av"), box_of("ov"))',
    'within_lane("av")',
    'heading_rel_lane("av") < 0.3',
    'distance_ahead("av", "ov") > {y:.1f}',
    'true',
    'speed_of("av") >= 0 and not crosses_centreline("av")',
]

_REFERENCES = [
    'time() >= {t:.2f}s',
    'speed_of("av") > {x:.2f}',
    'crosses_centreline("av")',
    'true',
]

_KINDS = ["invariant", "execution", "pre_temporal", "pre_physical",
          "post_temporal", "post_physical"]


def random_assertions(rng: random.Random):
    rules = []
    for i, kind in enumerate(_KINDS):
        cond = rng.choice(_CONDITIONS).format(x=rng.uniform(0, 20),
                                              y=rng.uniform(0, 120))
        parts = [f"assertion r{i} {{", "odd: anywhere", f"type: {kind}"]
        if kind not in ("invariant", "execution"):
            parts.append(f"window: {rng.uniform(0.1, 1.0):.2f}s")
        parts.append(f"mode: {rng.choice(['first', 'all'])}")
        parts.append(f"on_missing: {rng.choice(['fail', 'pass', 'not_applicable'])}")
        if kind != "invariant":
            ref = rng.choice(_REFERENCES).format(t=rng.uniform(0, 2.0),
                                                 x=rng.uniform(0, 18))
            parts.append(f"reference: {ref}")
        parts.append(f"condition: {cond}")
        parts.append("}")
        rules.append("\n".join(parts))
    return compile_text("\n\n".join(rules)).assertions


def verdict_key(v):
    return (v.assertion_id, round(v.t, 9), v.result,
            tuple(sorted((k, repr(val)) for k, val in v.detail.items())))


@pytest.mark.parametrize("seed", range(100))
def test_batch_stream_equivalence(seed):
    """Streaming over the whole trace yields the batch verdict multiset."""
    rng = random.Random(seed * 7919 + 13)
    trace = random_trace(rng)
    assertions = random_assertions(rng)
    ctx = EvaluationContext(road=ROAD, config=default_profiles(),
                            profile_name="nominal",
                            strict_windows=rng.random() < 0.5)
    batch = evaluate_document(assertions, trace, ctx)
    engine = StreamingEngine(assertions, ctx)
    streamed = []
    for k in range(len(trace)):
        streamed.extend(engine.feed(trace.times[k], trace.steps[k]))
    streamed.extend(engine.finish())
    assert sorted(map(verdict_key, batch)) == sorted(map(verdict_key, streamed))


# --- DSL fuzzing ------------------------------------------------------------

def _atom(rng, depth):
    roll = rng.random()
    if roll < 0.25:
        return f"{rng.uniform(-100, 100):.4g}"
    if roll < 0.35:
        return f"{rng.uniform(0.01, 30):.3g}s"
    if roll < 0.45:
        return rng.choice(['"av"', '"ov"', '"vbp"'])
    if roll < 0.55:
        return rng.choice(["true", "false"])
    if roll < 0.7 and depth > 0:
        return f"({_expr(rng, depth - 1)})"
    name = rng.choice(["speed_of", "box_of", "crosses_centreline",
                       "within_lane", "heading_rel_lane", "frobnicate"])
    args = ", ".join(_expr(rng, depth - 1)
                     for _ in range(rng.randint(0, 2)))
    return f"{name}({args})"


def _expr(rng, depth):
    if depth <= 0:
        return _atom(rng, 0)
    roll = rng.random()
    if roll < 0.2:
        return f"not {_expr(rng, depth - 1)}"
    if roll < 0.3:
        return f"-{_atom(rng, depth - 1)}"
    if roll < 0.55:
        op = rng.choice(["and", "or"])
        return f"{_expr(rng, depth - 1)} {op} {_expr(rng, depth - 1)}"
    if roll < 0.75:
        op = rng.choice(["<", "<=", ">", ">=", "==", "!="])
        return f"{_atom(rng, depth - 1)} {op} {_atom(rng, depth - 1)}"
    op = rng.choice(["+", "-", "*", "/"])
    return f"{_atom(rng, depth - 1)} {op} {_atom(rng, depth - 1)}"


def random_document_text(rng: random.Random) -> str:
    chunks = []
    for i in range(rng.randint(0, 2)):
        chunks.append(f"const c{i} = {_expr(rng, 2)}")
    for i in range(rng.randint(1, 4)):
        kind = rng.choice(_KINDS)
        lines = [f"assertion fuzz{i} {{"]
        tags = ", ".join(f"tag{j}" for j in range(rng.randint(1, 3)))
        lines.append(f"odd: {tags}")
        lines.append(f"type: {kind}")
        if kind not in ("invariant", "execution"):
            lines.append(f"window: {rng.uniform(0.05, 9):.3g}s")
        if rng.random() < 0.5:
            lines.append(f"severity: {rng.choice(['safety', 'performance'])}")
        if rng.random() < 0.5:
            lines.append(f"mode: {rng.choice(['first', 'all'])}")
        if rng.random() < 0.4:
            lines.append("on_missing: pass")
        if kind != "invariant":
            lines.append(f"reference: {_expr(rng, 2)}")
        lines.append(f"condition: {_expr(rng, 3)}")
        lines.append("}")
        if rng.random() < 0.3:
            lines.insert(1, "// fuzz comment")
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + "\n"


@pytest.mark.parametrize("seed", range(500))
def test_fuzz_round_trip_fixed_point(seed):
    rng = random.Random(seed * 104729 + 7)
    text = random_document_text(rng)
    doc = parse(text)
    once = parse(format_document(doc))
    assert once == doc
    assert parse(format_document(once)) == once


@pytest.mark.parametrize("seed", range(200))
def test_fuzz_malformed_never_crashes(seed):
    rng = random.Random(seed * 31337 + 3)
    text = random_document_text(rng)
    kind = rng.random()
    if kind < 0.3:
        cut = rng.randrange(1, max(2, len(text)))
        bad = text[:cut]
    elif kind < 0.6:
        pos = rng.randrange(len(text))
        junk = rng.choice(["}", "{", ")", "((", "&", "@", '"', "==", "1.2.3"])
        bad = text[:pos] + junk + text[pos:]
    else:
        pos = rng.randrange(len(text))
        width = rng.randint(1, 15)
        bad = text[:pos] + text[pos + width:]
    try:
        parse(bad)
    except ParseError as exc:
        assert exc.line >= 1 and exc.col >= 1
    # a mutation may still be well-formed; parsing successfully is fine


def test_rulepack_corpus_fixed_point():
    from roadcheck import rulepack
    from importlib import resources
    corpus = [rulepack.RULE162_SDA, rulepack.RULE163_PULL_OUT,
              rulepack.DANGER_SPACE_RULES,
              resources.files("roadcheck.data").joinpath(
                  "overtaking.rules").read_text("utf-8")]
    for text in corpus:
        doc = parse(text)
        assert parse(format_document(doc)) == doc
