"""Taxonomy-typed assertion engine.

Four assertion kinds are evaluated against traces:

  * invariant          -- condition checked at every timestep
  * execution          -- condition checked at each reference point
  * pre/post temporal  -- condition must hold at every step of a window
                          before/after the reference point
  * pre/post physical  -- condition checked at the single step nearest a
                          fixed offset before/after the reference point

Reference points are the steps where the reference expression holds;
``mode: first`` (the default) keeps only the earliest.  Windows snap to
available timesteps.  A window reaching beyond the recorded data yields a
FAIL with reason "insufficient-data" under strict window semantics and a
not_applicable verdict under lenient semantics.

Batch evaluation and the streaming engine share the same per-step
derivation and decision helpers, and the streaming engine emits each
verdict as soon as it is decidable, so the two produce identical verdict
multisets over the same records.

Comparisons are encoded per rule with explicit <, <=, >, >=: a rule that
must fail on ties uses the strict operator.
"""

from __future__ import annotations

import csv
import io
import json
import math
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass, field, replace

from . import dsl
from .checker import CompiledAssertion
from .geometry import danger_space, min_distance as poly_min_distance, overlaps as poly_overlaps
from .models import ModelConfig, default_profiles, mps_to_mph
from .models import danger_space_length as model_ds_length
from .models import safe_distance_ahead
from .trace import ActorState, Trace, derive_row
from .worldmap import RoadMap, crosses_centreline as map_crosses_centreline
from .worldmap import OffRoadError, lane_orientation_at, lanelets_containing
from .geometry import projection_interval

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not_applicable"

_T_EPS = 1e-9
_AREA_EPS = 1e-6


class ActorNotFound(LookupError):
    """An actor reference does not resolve at the current step."""


class EvalError(ValueError):
    """Expression evaluation failed for a non-missing-actor reason."""


class StreamError(ValueError):
    """Record stream violated ordering or framing rules."""


@dataclass(frozen=True)
class Verdict:
    assertion_id: str
    t: float
    result: str
    detail: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"assertion_id": self.assertion_id, "t": self.t,
                           "result": self.result, "detail": self.detail},
                          sort_keys=True)


@dataclass(frozen=True)
class EvaluationContext:
    """Shared immutable evaluation configuration."""

    road: RoadMap
    config: ModelConfig = field(default_factory=default_profiles)
    profile_name: str | None = None
    active_odd: frozenset = frozenset()
    strict_windows: bool = True
    worst_case_speeds: bool = False

    def applicable(self, assertion: CompiledAssertion) -> bool:
        tags = frozenset(assertion.decl.odd_tags)
        return (not tags or not self.active_odd
                or bool(tags & self.active_odd))


class _StepView:
    """Resolves expression builtins against one timestep."""

    def __init__(self, ctx: EvaluationContext, t: float, step: dict,
                 derived: dict):
        self.ctx = ctx
        self.t = t
        self.step = step
        self.derived = derived
        self.touched: list[ActorState] = []

    def resolve(self, ref: str) -> ActorState:
        if ref in self.step:
            st = self.step[ref]
        else:
            matches = [s for s in self.step.values()
                       if s.role.lower() == ref.lower()]
            if not matches:
                raise ActorNotFound(ref)
            st = min(matches, key=lambda s: s.actor_id)
        self.touched.append(st)
        return st

    def speed_of(self, st: ActorState) -> float:
        d = self.derived.get(st.actor_id)
        if d is not None:
            return d.speed
        if st.speed is not None:
            return st.speed
        raise EvalError(f"speed of {st.actor_id!r} is unavailable")

    def danger_space_of(self, st: ActorState):
        if self.ctx.worst_case_speeds:
            v_mph = self.ctx.config.worst_case_mph(st.role)
        else:
            v_mph = mps_to_mph(self.speed_of(st))
        return danger_space(st.pose, st.dims, model_ds_length(v_mph))

    def sda(self) -> float:
        if self.ctx.profile_name is None:
            raise EvalError("sda() needs a configured driving profile")
        profile = self.ctx.config.profile(self.ctx.profile_name)
        av = self.resolve("av")
        ov = self.resolve("ov")
        try:
            vbp = self.resolve("vbp")
            v_vbp = self.speed_of(vbp)
        except ActorNotFound:
            v_vbp = 0.0
        geom = self.ctx.config.geometry(self.speed_of(av), v_vbp,
                                        self.speed_of(ov))
        return safe_distance_ahead(profile, geom)

    def distance_ahead(self, a: ActorState, b: ActorState) -> float:
        try:
            axis = lane_orientation_at(self.ctx.road, (a.pose.x, a.pose.y))
        except OffRoadError as exc:
            raise EvalError(f"{a.actor_id!r} is off-road") from exc
        a_lo, a_hi = projection_interval(a.box(), axis)
        b_lo, b_hi = projection_interval(b.box(), axis)
        return max(0.0, b_lo - a_hi, a_lo - b_hi)

    def within_lane(self, st: ActorState) -> bool:
        box = st.box()
        covered = sum(area for _, area in lanelets_containing(self.ctx.road, box))
        return abs(covered - box.area) <= _AREA_EPS

    def heading_rel_lane(self, st: ActorState) -> float:
        d = self.derived.get(st.actor_id)
        if d is not None and d.heading_rel_lane is not None:
            return d.heading_rel_lane
        raise EvalError(f"{st.actor_id!r} has no lane-relative heading "
                        f"(off-road?)")


def _eval(node, view: _StepView):
    if isinstance(node, dsl.NumberLit):
        return node.value
    if isinstance(node, dsl.DurationLit):
        return node.seconds
    if isinstance(node, dsl.BoolLit):
        return node.value
    if isinstance(node, dsl.StringLit):
        return view.resolve(node.value)
    if isinstance(node, dsl.Not):
        return not _eval(node.operand, view)
    if isinstance(node, dsl.Neg):
        return -_eval(node.operand, view)
    if isinstance(node, dsl.Compare):
        left = _eval(node.left, view)
        right = _eval(node.right, view)
        return {"<": left < right, "<=": left <= right,
                ">": left > right, ">=": left >= right,
                "==": left == right, "!=": left != right}[node.op]
    if isinstance(node, dsl.BinaryOp):
        if node.op == "and":
            return _eval(node.left, view) and _eval(node.right, view)
        if node.op == "or":
            return _eval(node.left, view) or _eval(node.right, view)
        left = _eval(node.left, view)
        right = _eval(node.right, view)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if right == 0:
            raise EvalError("division by zero")
        return left / right
    if isinstance(node, dsl.Call):
        return _call(node, view)
    raise EvalError(f"cannot evaluate {type(node).__name__}")


def _call(node: dsl.Call, view: _StepView):
    name = node.name
    args = node.args
    if name == "time":
        return view.t
    if name == "speed_of":
        return view.speed_of(_eval(args[0], view))
    if name == "box_of":
        return _eval(args[0], view).box()
    if name == "danger_space_of":
        return view.danger_space_of(_eval(args[0], view))
    if name == "overlaps":
        a = _eval(args[0], view)
        b = _eval(args[1], view)
        if a is None or b is None:
            return False    # degenerate danger space is overlap-inert
        return poly_overlaps(a, b)
    if name == "min_distance":
        a = _eval(args[0], view)
        b = _eval(args[1], view)
        if a is None or b is None:
            return math.inf
        return poly_min_distance(a, b)
    if name == "overlap_area":
        from .geometry import overlap_area as poly_overlap_area
        a = _eval(args[0], view)
        b = _eval(args[1], view)
        if a is None or b is None:
            return 0.0
        return poly_overlap_area(a, b)
    if name == "crosses_centreline":
        return map_crosses_centreline(view.ctx.road, _eval(args[0], view).box())
    if name == "distance_ahead":
        return view.distance_ahead(_eval(args[0], view), _eval(args[1], view))
    if name == "sda":
        return view.sda()
    if name == "within_lane":
        return view.within_lane(_eval(args[0], view))
    if name == "heading_rel_lane":
        return view.heading_rel_lane(_eval(args[0], view))
    if name == "danger_space_length":
        return model_ds_length(mps_to_mph(_eval(args[0], view)))
    raise EvalError(f"no evaluator for function {name!r}")


def _condition_verdict(assertion: CompiledAssertion, view: _StepView,
                       t: float) -> Verdict:
    """Evaluate the condition at one step and build the verdict."""
    detail: dict = {}
    try:
        ok = bool(_eval(assertion.condition, view))
    except ActorNotFound as exc:
        policy = assertion.decl.on_missing
        detail["reason"] = "actor-not-found"
        detail["actor"] = str(exc.args[0] if exc.args else "")
        if policy == "pass":
            return Verdict(assertion.id, t, PASS, detail)
        if policy == "not_applicable":
            return Verdict(assertion.id, t, NOT_APPLICABLE, detail)
        return Verdict(assertion.id, t, FAIL, detail)
    except EvalError as exc:
        detail["reason"] = "evaluation-error"
        detail["error"] = str(exc)
        return Verdict(assertion.id, t, FAIL, detail)
    # diagnostics: record the top-level comparison when there is one
    cond = assertion.condition
    if isinstance(cond, dsl.Compare):
        try:
            measured = _eval(cond.left, view)
            threshold = _eval(cond.right, view)
            if isinstance(measured, (int, float)):
                detail["measured"] = measured
            if isinstance(threshold, (int, float)):
                detail["threshold"] = threshold
            detail["op"] = cond.op
        except (ActorNotFound, EvalError):
            pass
    else:
        detail["condition"] = ok
    low_conf = sorted({s.actor_id for s in view.touched if s.low_confidence})
    if low_conf:
        detail["low_confidence_actors"] = low_conf
    return Verdict(assertion.id, t, PASS if ok else FAIL, detail)


def _reference_holds(assertion: CompiledAssertion, view: _StepView) -> bool:
    """A reference with a missing actor simply does not fire."""
    try:
        return bool(_eval(assertion.reference, view))
    except ActorNotFound:
        return False
    except EvalError as exc:
        raise EvalError(f"reference of {assertion.id!r} at t={view.t}: "
                        f"{exc}") from exc


def nearest_index(times, target: float) -> int:
    """Index of the timestep nearest to ``target``; ties go earlier."""
    i = bisect_left(times, target)
    if i <= 0:
        return 0
    if i >= len(times):
        return len(times) - 1
    before, after = times[i - 1], times[i]
    return i - 1 if target - before <= after - target else i


# --- batch evaluation -------------------------------------------------------

def _views(trace: Trace, ctx: EvaluationContext):
    """One _StepView per step, with derived dynamics shared per step."""
    views = []
    n = len(trace)
    for k in range(n):
        prev_step = trace.steps[k - 1] if k > 0 else None
        nxt_step = trace.steps[k + 1] if k + 1 < n else None
        derived, _ = derive_row(prev_step, trace.steps[k], nxt_step, ctx.road)
        views.append(_StepView(ctx, trace.times[k], trace.steps[k], derived))
    return views


def find_reference_points(assertion: CompiledAssertion, trace: Trace,
                          ctx: EvaluationContext, views=None) -> list[float]:
    """Timestamps where the reference expression holds."""
    if assertion.reference is None:
        raise EvalError(f"{assertion.id!r} is an invariant; it has no "
                        f"reference expression")
    views = _views(trace, ctx) if views is None else views
    hits = []
    for k, view in enumerate(views):
        fresh = _StepView(ctx, view.t, view.step, view.derived)
        if _reference_holds(assertion, fresh):
            hits.append(trace.times[k])
            if assertion.decl.mode == "first":
                break
    return hits


def _window_indices(times, lo: float, hi: float, lo_open: bool,
                    hi_open: bool) -> list[int]:
    out = []
    for i, t in enumerate(times):
        if t < lo - _T_EPS or t > hi + _T_EPS:
            continue
        if lo_open and t <= lo + _T_EPS:
            continue
        if hi_open and t >= hi - _T_EPS:
            continue
        out.append(i)
    return out


def evaluate(assertion: CompiledAssertion, trace: Trace,
             ctx: EvaluationContext, views=None) -> list[Verdict]:
    """All verdicts of one assertion over a complete trace."""
    if not ctx.applicable(assertion):
        return [Verdict(assertion.id, trace.times[0], NOT_APPLICABLE,
                        {"reason": "odd-excluded",
                         "active_odd": sorted(ctx.active_odd)})]
    views = _views(trace, ctx) if views is None else views
    kind = assertion.decl.kind
    times = trace.times

    def fresh(k):
        return _StepView(ctx, views[k].t, views[k].step, views[k].derived)

    if kind == "invariant":
        return [_condition_verdict(assertion, fresh(k), times[k])
                for k in range(len(times))]

    refs = []
    for k in range(len(times)):
        if _reference_holds(assertion, fresh(k)):
            refs.append(k)
            if assertion.decl.mode == "first":
                break
    if not refs:
        return [Verdict(assertion.id, times[-1], NOT_APPLICABLE,
                        {"reason": "reference-never-fired"})]

    out = []
    for r in refs:
        t_ref = times[r]
        if kind == "execution":
            out.append(_condition_verdict(assertion, fresh(r), t_ref))
            continue
        window = assertion.decl.window
        if kind == "pre_temporal":
            idxs = _window_indices(times, t_ref - window, t_ref,
                                   lo_open=False, hi_open=True)
            incomplete = t_ref - window < times[0] - _T_EPS
            out.append(_window_verdict(assertion, idxs, fresh, t_ref,
                                       incomplete, ctx))
        elif kind == "post_temporal":
            idxs = _window_indices(times, t_ref, t_ref + window,
                                   lo_open=True, hi_open=False)
            incomplete = t_ref + window > times[-1] + _T_EPS
            out.append(_window_verdict(assertion, idxs, fresh, t_ref,
                                       incomplete, ctx))
        elif kind in ("pre_physical", "post_physical"):
            target = t_ref - window if kind == "pre_physical" else t_ref + window
            if target < times[0] - _T_EPS or target > times[-1] + _T_EPS:
                out.append(_insufficient(assertion, t_ref, ctx))
            else:
                k = nearest_index(times, target)
                v = _condition_verdict(assertion, fresh(k), t_ref)
                detail = dict(v.detail)
                detail["checked_t"] = times[k]
                out.append(replace(v, detail=detail))
        else:
            raise EvalError(f"unknown assertion kind {kind!r}")
    return out


def _insufficient(assertion: CompiledAssertion, t_ref: float,
                  ctx: EvaluationContext) -> Verdict:
    detail = {"reason": "insufficient-data"}
    result = FAIL if ctx.strict_windows else NOT_APPLICABLE
    return Verdict(assertion.id, t_ref, result, detail)


def _window_verdict(assertion, idxs, fresh, t_ref, incomplete, ctx) -> Verdict:
    for k in idxs:
        v = _condition_verdict(assertion, fresh(k), t_ref)
        if v.result == FAIL:
            detail = dict(v.detail)
            detail["violated_t"] = fresh(k).t
            return replace(v, detail=detail)
        if v.result == NOT_APPLICABLE:
            return v
    if incomplete:
        return _insufficient(assertion, t_ref, ctx)
    return Verdict(assertion.id, t_ref, PASS,
                   {"steps_checked": len(idxs)})


def evaluate_document(assertions, trace: Trace,
                      ctx: EvaluationContext) -> list[Verdict]:
    """Evaluate many assertions, sharing derived dynamics across them.

    Output is deterministically ordered by (t, assertion_id).
    """
    views = _views(trace, ctx)
    out = []
    for assertion in assertions:
        out.extend(evaluate(assertion, trace, ctx, views=views))
    out.sort(key=lambda v: (v.t, v.assertion_id))
    return out


# --- streaming evaluation ---------------------------------------------------

@dataclass
class _OpenWindow:
    assertion_id: str
    t_ref: float
    deadline: float
    checked: int = 0


class StreamingEngine:
    """Incremental evaluator with bounded history.

    Feed one timestep at a time; verdicts come back as soon as they are
    decidable.  Derived dynamics need one future step, so step k is
    evaluated when step k+1 arrives; ``finish()`` flushes the final step
    and resolves still-open windows.  Retained history is bounded by the
    largest pre-window/offset among the assertions.
    """

    def __init__(self, assertions, ctx: EvaluationContext):
        self.assertions = list(assertions)
        self.ctx = ctx
        lookbacks = [a.decl.window for a in self.assertions
                     if a.decl.kind in ("pre_temporal", "pre_physical")
                     and a.decl.window]
        self._lookback = max(lookbacks, default=0.0)
        self._buffer: deque = deque()   # (t, step, derived|None)
        self._first_t: float | None = None
        self._last_fed: float | None = None
        self._odd_reported = False
        self._ref_seen: set = set()      # ids with mode=first already fired
        self._ref_ever: set = set()      # ids whose reference fired at all
        self._open_windows: list[_OpenWindow] = []
        self._post_targets: list = []    # (assertion_id ref, t_ref, target)
        self._finished = False

    # -- public API --

    def feed(self, t: float, records: dict) -> list[Verdict]:
        if self._finished:
            raise StreamError("stream already finished")
        if self._last_fed is not None and t <= self._last_fed + _T_EPS:
            raise StreamError(f"time regression: {t} after {self._last_fed}")
        self._last_fed = t
        if self._first_t is None:
            self._first_t = t
        out = []
        if not self._odd_reported:
            self._odd_reported = True
            for a in self.assertions:
                if not self.ctx.applicable(a):
                    out.append(Verdict(a.id, t, NOT_APPLICABLE,
                                       {"reason": "odd-excluded",
                                        "active_odd": sorted(self.ctx.active_odd)}))
        self._buffer.append([t, dict(records), None])
        if len(self._buffer) >= 2:
            out.extend(self._process(len(self._buffer) - 2))
        self._prune()
        return out

    def finish(self) -> list[Verdict]:
        if self._finished:
            return []
        self._finished = True
        out = []
        if self._buffer:
            out.extend(self._process(len(self._buffer) - 1, at_end=True))
        last_t = self._last_fed if self._last_fed is not None else 0.0
        for w in self._open_windows:
            out.append(self._window_timeout(w))
        self._open_windows.clear()
        for aid, t_ref, target, assertion in self._post_targets:
            out.append(_insufficient(assertion, t_ref, self.ctx))
        self._post_targets.clear()
        for a in self.assertions:
            if (a.decl.kind != "invariant" and self.ctx.applicable(a)
                    and a.id not in self._ref_ever and self._buffer):
                out.append(Verdict(a.id, last_t, NOT_APPLICABLE,
                                   {"reason": "reference-never-fired"}))
        return out

    @property
    def buffered_steps(self) -> int:
        return len(self._buffer)

    # -- internals --

    def _prune(self):
        """Drop history older than the largest lookback (keep 3 for dynamics)."""
        if not self._buffer:
            return
        horizon = self._buffer[-1][0] - self._lookback - 2.0 * self._dt_estimate()
        while len(self._buffer) > 3 and self._buffer[0][0] < horizon - _T_EPS:
            self._buffer.popleft()

    def _dt_estimate(self) -> float:
        if len(self._buffer) >= 2:
            return self._buffer[-1][0] - self._buffer[-2][0]
        return 1.0

    def _view(self, idx: int) -> _StepView:
        t, step, derived = self._buffer[idx]
        return _StepView(self.ctx, t, step, derived if derived is not None else {})

    def _process(self, idx: int, at_end: bool = False) -> list[Verdict]:
        t, step, _ = self._buffer[idx]
        prev_step = self._buffer[idx - 1][1] if idx > 0 else None
        nxt_step = self._buffer[idx + 1][1] if idx + 1 < len(self._buffer) else None
        derived, _notes = derive_row(prev_step, step, nxt_step, self.ctx.road)
        self._buffer[idx][2] = derived

        out = []
        times = [row[0] for row in self._buffer]
        # 1. open post-window conditions are checked before window closing
        for w in list(self._open_windows):
            if t > w.t_ref + _T_EPS and t <= w.deadline + _T_EPS:
                assertion = self._by_id(w.assertion_id)
                v = _condition_verdict(assertion, self._view(idx), w.t_ref)
                w.checked += 1
                if v.result == FAIL:
                    detail = dict(v.detail)
                    detail["violated_t"] = t
                    out.append(replace(v, detail=detail))
                    self._open_windows.remove(w)
                    continue
                if v.result == NOT_APPLICABLE:
                    out.append(v)
                    self._open_windows.remove(w)
                    continue
            if t >= w.deadline - _T_EPS:
                assertion = self._by_id(w.assertion_id)
                out.append(Verdict(assertion.id, w.t_ref, PASS,
                                   {"steps_checked": w.checked}))
                self._open_windows.remove(w)
        # 2. physical post targets
        for entry in list(self._post_targets):
            aid, t_ref, target, assertion = entry
            if t >= target - _T_EPS:
                k = nearest_index(times, target)
                v = _condition_verdict(assertion, self._view(k), t_ref)
                detail = dict(v.detail)
                detail["checked_t"] = times[k]
                out.append(replace(v, detail=detail))
                self._post_targets.remove(entry)
        # 3. per-assertion work at this step
        for assertion in self.assertions:
            if not self.ctx.applicable(assertion):
                continue
            kind = assertion.decl.kind
            if kind == "invariant":
                out.append(_condition_verdict(assertion, self._view(idx), t))
                continue
            if assertion.id in self._ref_seen:
                continue
            if not _reference_holds(assertion, self._view(idx)):
                continue
            self._ref_ever.add(assertion.id)
            if assertion.decl.mode == "first":
                self._ref_seen.add(assertion.id)
            out.extend(self._fire_reference(assertion, idx, t, times, at_end))
        return out

    def _fire_reference(self, assertion: CompiledAssertion, idx: int,
                        t_ref: float, times, at_end: bool) -> list[Verdict]:
        kind = assertion.decl.kind
        window = assertion.decl.window
        if kind == "execution":
            return [_condition_verdict(assertion, self._view(idx), t_ref)]
        if kind == "pre_temporal":
            lo = t_ref - window
            idxs = [i for i, ti in enumerate(times)
                    if ti >= lo - _T_EPS and ti < t_ref - _T_EPS]
            incomplete = lo < self._first_t - _T_EPS
            return [_window_verdict(assertion, idxs, self._view, t_ref,
                                    incomplete, self.ctx)]
        if kind == "pre_physical":
            target = t_ref - window
            if target < self._first_t - _T_EPS:
                return [_insufficient(assertion, t_ref, self.ctx)]
            k = nearest_index(times, target)
            v = _condition_verdict(assertion, self._view(k), t_ref)
            detail = dict(v.detail)
            detail["checked_t"] = times[k]
            return [replace(v, detail=detail)]
        if kind == "post_temporal":
            if at_end:
                return [_insufficient(assertion, t_ref, self.ctx)]
            self._open_windows.append(
                _OpenWindow(assertion.id, t_ref, t_ref + window))
            return []
        if kind == "post_physical":
            if at_end:
                return [_insufficient(assertion, t_ref, self.ctx)]
            self._post_targets.append(
                (assertion.id, t_ref, t_ref + window, assertion))
            return []
        raise EvalError(f"unknown assertion kind {kind!r}")

    def _window_timeout(self, w: _OpenWindow) -> Verdict:
        assertion = self._by_id(w.assertion_id)
        return _insufficient(assertion, w.t_ref, self.ctx)

    def _by_id(self, assertion_id: str) -> CompiledAssertion:
        for a in self.assertions:
            if a.id == assertion_id:
                return a
        raise KeyError(assertion_id)


# --- debounce ---------------------------------------------------------------

class DebounceFilter:
    """Suppresses result flicker shorter than ``n`` consecutive steps.

    The published state changes only once a new result has persisted for
    n observations; the change is then published retroactively from the
    first step of the qualifying run, so debouncing is idempotent and
    n=1 is the identity.  Used per assertion id.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError(f"debounce depth must be >= 1, got {n}")
        self.n = n
        self.published: str | None = None
        self.pending: list[Verdict] = []

    def _suppress(self, v: Verdict) -> Verdict:
        detail = dict(v.detail)
        detail["debounced_from"] = v.result
        return replace(v, result=self.published, detail=detail)

    def feed(self, v: Verdict) -> list[Verdict]:
        if self.published is None:
            self.published = v.result
            return [v]
        if v.result == self.published:
            flushed = [self._suppress(p) for p in self.pending]
            self.pending.clear()
            return flushed + [v]
        if self.pending and self.pending[0].result != v.result:
            flushed = [self._suppress(p) for p in self.pending]
            self.pending = [v]
            if len(self.pending) >= self.n:
                self.published = v.result
                out = flushed + self.pending
                self.pending = []
                return out
            return flushed
        self.pending.append(v)
        if len(self.pending) >= self.n:
            self.published = v.result
            out = list(self.pending)
            self.pending.clear()
            return out
        return []

    def finish(self) -> list[Verdict]:
        flushed = [self._suppress(p) for p in self.pending]
        self.pending.clear()
        return flushed


def debounce(verdicts, n: int) -> list[Verdict]:
    """Debounce a time-ordered verdict list, per assertion id."""
    filters: dict = {}
    out: list[Verdict] = []
    for v in verdicts:
        filt = filters.setdefault(v.assertion_id, DebounceFilter(n))
        out.extend(filt.feed(v))
    for filt in filters.values():
        out.extend(filt.finish())
    out.sort(key=lambda v: (v.t, v.assertion_id))
    return out


# --- output -----------------------------------------------------------------

def verdicts_to_jsonl(verdicts) -> str:
    return "\n".join(v.to_json() for v in verdicts) + ("\n" if verdicts else "")


def summary_rows(verdicts) -> list[dict]:
    """Per-assertion pass/fail counts and the first failing timestamp."""
    agg: dict = {}
    for v in verdicts:
        row = agg.setdefault(v.assertion_id, {"assertion_id": v.assertion_id,
                                              "pass_count": 0, "fail_count": 0,
                                              "first_fail_t": None})
        if v.result == PASS:
            row["pass_count"] += 1
        elif v.result == FAIL:
            row["fail_count"] += 1
            if row["first_fail_t"] is None or v.t < row["first_fail_t"]:
                row["first_fail_t"] = v.t
    return [agg[k] for k in sorted(agg)]


def summary_csv(verdicts) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["assertion_id", "pass_count", "fail_count", "first_fail_t"])
    for row in summary_rows(verdicts):
        writer.writerow([row["assertion_id"], row["pass_count"],
                         row["fail_count"],
                         "" if row["first_fail_t"] is None else row["first_fail_t"]])
    return buf.getvalue()
