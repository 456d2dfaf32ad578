"""1+1 dimensional Minkowski geometry for the two-wing experiment.

Points carry lab-frame coordinates (t, x) in units with c = 1. Light
cones are closed: the lightlike boundary counts as causally accessible.
Regions are represented by labeled events rather than extended point
sets, since only membership and causal relations are ever queried.

Canonical layout coordinates (a documented contract, relied on by the
chance analysis and its tests):

* source event ``o`` at (0, 0) on the source worldline;
* wing outcomes at (6, -4) for A and (6, +4) for B;
* setting events either deep in the shared past at (1, -0.5) / (1, +0.5)
  ("settings in overlap" layout) or just below the outcomes at
  (5.5, -4) / (5.5, +4) ("late settings" layout);
* probe points p = (5.75, -4), p' = (5.75, +4), q = (7, +4);
* probe r = (3, 0) in the overlap layout. In the late layout r moves to
  (9.75, 0), the earliest on-axis region where both setting events are
  inside the past cone while both outcomes are still outside it; note
  that this places r later in lab time than the outcomes themselves.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Union

import numpy as np

from .quantum import (
    AngleLike,
    AnalyzerAngle,
    OutcomeLabel,
    PhotonPairState,
    Wing,
    as_angle,
    bell_phi_plus,
)

#: Null-coordinate slack treated as "on the light cone".
CONE_ATOL = 1e-12

SCENARIO_FORMAT = "bellsim-scenario-v1"


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    x: float

    def __post_init__(self) -> None:
        for name in ("t", "x"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"coordinate {name}={value!r} must be finite")
            object.__setattr__(self, name, value)

    def boosted(self, rapidity: float) -> "SpacetimePoint":
        """Active Lorentz boost with the given rapidity."""
        ch, sh = math.cosh(rapidity), math.sinh(rapidity)
        return SpacetimePoint(t=self.t * ch - self.x * sh, x=self.x * ch - self.t * sh)


class CausalRelation(Enum):
    CAUSAL_PAST = "causal_past"
    CAUSAL_FUTURE = "causal_future"
    SPACELIKE = "spacelike"


def causal_relation(
    p: SpacetimePoint, q: SpacetimePoint, tol: float = CONE_ATOL
) -> CausalRelation:
    """Classify q relative to p's closed light cones.

    Works in null coordinates u = dt - dx, w = dt + dx of q - p, whose
    signs are invariant under boosts; |u| or |w| within ``tol`` of zero
    counts as lying on the cone. The degenerate case q == p is reported
    as CAUSAL_PAST (a point belongs to its own closed cone).
    """
    u = (q.t - p.t) - (q.x - p.x)
    w = (q.t - p.t) + (q.x - p.x)
    if abs(u) <= tol:
        u = 0.0
    if abs(w) <= tol:
        w = 0.0
    if u <= 0.0 and w <= 0.0:
        return CausalRelation.CAUSAL_PAST
    if u >= 0.0 and w >= 0.0:
        return CausalRelation.CAUSAL_FUTURE
    return CausalRelation.SPACELIKE


def in_causal_past(q: SpacetimePoint, p: SpacetimePoint, tol: float = CONE_ATOL) -> bool:
    """True when q lies in the closed causal past of p."""
    return causal_relation(p, q, tol) is CausalRelation.CAUSAL_PAST


def is_spacelike(p: SpacetimePoint, q: SpacetimePoint, tol: float = CONE_ATOL) -> bool:
    return causal_relation(p, q, tol) is CausalRelation.SPACELIKE


class RegionLabel(Enum):
    ONE = "one"
    TWO = "two"
    THREE_A = "three_a"
    THREE_B = "three_b"
    OVERLAP = "overlap"
    SOURCE_WORLDLINE = "source_worldline"


@dataclass(frozen=True)
class Preparation:
    """The pair-production event backing the scenario's state assignment."""


@dataclass(frozen=True)
class Setting:
    """Selection of an analyzer axis; ``angle`` None means no measurement."""

    wing: Wing
    angle: AnalyzerAngle | None


@dataclass(frozen=True)
class Outcome:
    """A registered detection outcome on one wing."""

    wing: Wing
    label: OutcomeLabel


EventKind = Union[Preparation, Setting, Outcome]


@dataclass(frozen=True)
class EventRecord:
    id: str
    point: SpacetimePoint
    region: RegionLabel
    kind: EventKind


_OUTCOME_REGION = {Wing.A: RegionLabel.ONE, Wing.B: RegionLabel.TWO}


def _events_by_kind(events: Iterable[EventRecord]):
    preparations: list[EventRecord] = []
    settings: dict[Wing, EventRecord] = {}
    outcomes: dict[Wing, EventRecord] = {}
    for ev in events:
        if isinstance(ev.kind, Preparation):
            preparations.append(ev)
        elif isinstance(ev.kind, Setting):
            if ev.kind.wing in settings:
                raise ValueError(f"duplicate setting event for wing {ev.kind.wing.value}")
            settings[ev.kind.wing] = ev
        elif isinstance(ev.kind, Outcome):
            if ev.kind.wing in outcomes:
                raise ValueError(f"duplicate outcome event for wing {ev.kind.wing.value}")
            outcomes[ev.kind.wing] = ev
        else:
            raise ValueError(f"unknown event kind {ev.kind!r}")
    if len(preparations) > 1:
        raise ValueError("a scenario may contain at most one preparation event")
    return preparations, settings, outcomes


@dataclass(frozen=True)
class Scenario:
    """A concrete run geometry: state, localized events and probe points."""

    state: PhotonPairState
    events: tuple[EventRecord, ...]
    p: SpacetimePoint
    p_prime: SpacetimePoint
    q: SpacetimePoint
    r: SpacetimePoint

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))
        ids = [ev.id for ev in self.events]
        if len(set(ids)) != len(ids):
            raise ValueError(f"event ids are not unique: {ids}")
        preparations, settings, outcomes = _events_by_kind(self.events)
        for wing, outcome in outcomes.items():
            if outcome.region is not _OUTCOME_REGION[wing]:
                raise ValueError(
                    f"outcome for wing {wing.value} must carry region "
                    f"{_OUTCOME_REGION[wing].value}"
                )
            setting = settings.get(wing)
            if setting is None or setting.kind.angle is None:
                raise ValueError(
                    f"outcome on wing {wing.value} requires a setting event "
                    "with a concrete angle"
                )
            if not in_causal_past(setting.point, outcome.point):
                raise ValueError(
                    f"setting for wing {wing.value} must causally precede its outcome"
                )
        if Wing.A in outcomes and Wing.B in outcomes:
            if not is_spacelike(outcomes[Wing.A].point, outcomes[Wing.B].point):
                raise ValueError("the two outcome events must be spacelike separated")
        # Probe geometry: p and p' are spacelike to the opposite outcome,
        # q sees wing B's outcome but not wing A's, r sits inside the
        # source's future but outside both outcome futures.
        if Wing.B in outcomes and not is_spacelike(self.p, outcomes[Wing.B].point):
            raise ValueError("probe p must be spacelike to the wing-B outcome")
        if Wing.A in outcomes and not is_spacelike(self.p_prime, outcomes[Wing.A].point):
            raise ValueError("probe p' must be spacelike to the wing-A outcome")
        if Wing.B in outcomes and not in_causal_past(outcomes[Wing.B].point, self.q):
            raise ValueError("probe q must have the wing-B outcome in its past")
        if Wing.A in outcomes and in_causal_past(outcomes[Wing.A].point, self.q):
            raise ValueError("probe q must not have the wing-A outcome in its past")
        if preparations and not in_causal_past(preparations[0].point, self.r):
            raise ValueError("probe r must lie in the preparation's causal future")
        for wing, outcome in outcomes.items():
            if in_causal_past(outcome.point, self.r):
                raise ValueError(f"probe r must not see the wing-{wing.value} outcome")

    # -- accessors ---------------------------------------------------------

    def preparation_event(self) -> EventRecord | None:
        preparations, _, _ = _events_by_kind(self.events)
        return preparations[0] if preparations else None

    def setting_event(self, wing: Wing) -> EventRecord | None:
        _, settings, _ = _events_by_kind(self.events)
        return settings.get(wing)

    def outcome_event(self, wing: Wing) -> EventRecord | None:
        _, _, outcomes = _events_by_kind(self.events)
        return outcomes.get(wing)

    def angle(self, wing: Wing) -> AnalyzerAngle | None:
        setting = self.setting_event(wing)
        return setting.kind.angle if setting is not None else None

    def probe(self, name: str) -> SpacetimePoint:
        points = {"p": self.p, "p'": self.p_prime, "p_prime": self.p_prime,
                  "q": self.q, "r": self.r}
        try:
            return points[name]
        except KeyError:
            raise KeyError(f"unknown probe point {name!r}; expected p, p', q or r") from None

    def with_state(self, state: PhotonPairState) -> "Scenario":
        return replace(self, state=state)

    def with_events(self, events: Iterable[EventRecord]) -> "Scenario":
        return replace(self, events=tuple(events))

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        def kind_dict(kind: EventKind) -> dict:
            if isinstance(kind, Preparation):
                return {"type": "preparation"}
            if isinstance(kind, Setting):
                angle = None if kind.angle is None else kind.angle.degrees
                return {"type": "setting", "wing": kind.wing.value, "angle_deg": angle}
            return {"type": "outcome", "wing": kind.wing.value, "label": kind.label.value}

        matrix = self.state.matrix
        return {
            "format": SCENARIO_FORMAT,
            "state": {
                "matrix_real": matrix.real.tolist(),
                "matrix_imag": matrix.imag.tolist(),
            },
            "events": [
                {
                    "id": ev.id,
                    "t": ev.point.t,
                    "x": ev.point.x,
                    "region": ev.region.value,
                    "kind": kind_dict(ev.kind),
                }
                for ev in self.events
            ],
            "probes": {
                "p": {"t": self.p.t, "x": self.p.x},
                "p_prime": {"t": self.p_prime.t, "x": self.p_prime.x},
                "q": {"t": self.q.t, "x": self.q.x},
                "r": {"t": self.r.t, "x": self.r.x},
            },
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Scenario":
        if data.get("format") != SCENARIO_FORMAT:
            raise ValueError(f"unsupported scenario format {data.get('format')!r}")
        matrix = np.array(data["state"]["matrix_real"], dtype=float) + 1j * np.array(
            data["state"]["matrix_imag"], dtype=float
        )
        events = []
        for ev in data["events"]:
            kind_data = ev["kind"]
            kind: EventKind
            if kind_data["type"] == "preparation":
                kind = Preparation()
            elif kind_data["type"] == "setting":
                angle = kind_data["angle_deg"]
                kind = Setting(
                    wing=Wing(kind_data["wing"]),
                    angle=None if angle is None else AnalyzerAngle(angle),
                )
            elif kind_data["type"] == "outcome":
                kind = Outcome(wing=Wing(kind_data["wing"]), label=OutcomeLabel(kind_data["label"]))
            else:
                raise ValueError(f"unknown event kind {kind_data['type']!r}")
            events.append(
                EventRecord(
                    id=ev["id"],
                    point=SpacetimePoint(ev["t"], ev["x"]),
                    region=RegionLabel(ev["region"]),
                    kind=kind,
                )
            )
        probes = data["probes"]

        def point(name: str) -> SpacetimePoint:
            return SpacetimePoint(probes[name]["t"], probes[name]["x"])

        return cls(
            state=PhotonPairState(matrix),
            events=tuple(events),
            p=point("p"),
            p_prime=point("p_prime"),
            q=point("q"),
            r=point("r"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_json_dict(json.loads(text))


def save_scenario(scenario: Scenario, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(scenario.to_json())
        handle.write("\n")


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as handle:
        return Scenario.from_json(handle.read())


def backward_cone_contents(
    point: SpacetimePoint, scenario: Scenario
) -> tuple[EventRecord, ...]:
    """Events whose points lie in the closed causal past of ``point``."""
    return tuple(ev for ev in scenario.events if in_causal_past(ev.point, point))


# -- canonical layout builder ----------------------------------------------

_SOURCE = SpacetimePoint(0.0, 0.0)
_OUTCOME_POINT = {Wing.A: SpacetimePoint(6.0, -4.0), Wing.B: SpacetimePoint(6.0, 4.0)}
_OVERLAP_SETTING = {Wing.A: SpacetimePoint(1.0, -0.5), Wing.B: SpacetimePoint(1.0, 0.5)}
_LATE_SETTING = {Wing.A: SpacetimePoint(5.5, -4.0), Wing.B: SpacetimePoint(5.5, 4.0)}
_PROBE_P = SpacetimePoint(5.75, -4.0)
_PROBE_P_PRIME = SpacetimePoint(5.75, 4.0)
_PROBE_Q = SpacetimePoint(7.0, 4.0)
_PROBE_R_OVERLAP = SpacetimePoint(3.0, 0.0)
_PROBE_R_LATE = SpacetimePoint(9.75, 0.0)


def standard_scenario(
    *,
    settings_in_overlap: bool = False,
    late_settings: bool | None = None,
    angle_a: AngleLike | None = 0.0,
    angle_b: AngleLike | None = 0.0,
    outcome_a: OutcomeLabel | None = OutcomeLabel.V,
    outcome_b: OutcomeLabel | None = OutcomeLabel.V,
    state: PhotonPairState | None = None,
) -> Scenario:
    """Build the canonical two-wing layout.

    By default the setting events sit just below their own outcome
    regions, spacelike separated from everything on the opposite side.
    With ``settings_in_overlap=True`` both settings move deep into the
    shared past, inside the backward cones of both outcome regions, and
    every probe point can see them. ``late_settings`` may be passed
    explicitly for clarity but must agree with ``settings_in_overlap``;
    asking for both placements at once is rejected.

    An angle of None means no measurement is performed on that wing, in
    which case the wing has a setting event with no axis and no outcome
    event; requesting an outcome there is rejected.
    """
    if late_settings is not None and late_settings == settings_in_overlap:
        raise ValueError(
            "layout conflict: settings cannot be both in the overlap and late "
            "(settings_in_overlap and late_settings must disagree)"
        )
    angles: dict[Wing, AnalyzerAngle | None] = {
        Wing.A: None if angle_a is None else as_angle(angle_a),
        Wing.B: None if angle_b is None else as_angle(angle_b),
    }
    outcomes: dict[Wing, OutcomeLabel | None] = {Wing.A: outcome_a, Wing.B: outcome_b}
    for wing in (Wing.A, Wing.B):
        if angles[wing] is None and outcomes[wing] is not None:
            raise ValueError(
                f"wing {wing.value} has no measurement; it cannot have an outcome"
            )

    setting_points = _OVERLAP_SETTING if settings_in_overlap else _LATE_SETTING
    setting_region = (
        {Wing.A: RegionLabel.OVERLAP, Wing.B: RegionLabel.OVERLAP}
        if settings_in_overlap
        else {Wing.A: RegionLabel.ONE, Wing.B: RegionLabel.TWO}
    )
    events = [
        EventRecord(
            id="o",
            point=_SOURCE,
            region=RegionLabel.SOURCE_WORLDLINE,
            kind=Preparation(),
        )
    ]
    for wing, suffix in ((Wing.A, "a"), (Wing.B, "b")):
        events.append(
            EventRecord(
                id=f"setting-{suffix}",
                point=setting_points[wing],
                region=setting_region[wing],
                kind=Setting(wing=wing, angle=angles[wing]),
            )
        )
        label = outcomes[wing]
        if label is not None:
            events.append(
                EventRecord(
                    id=f"outcome-{suffix}",
                    point=_OUTCOME_POINT[wing],
                    region=_OUTCOME_REGION[wing],
                    kind=Outcome(wing=wing, label=label),
                )
            )
    return Scenario(
        state=state if state is not None else bell_phi_plus(),
        events=tuple(events),
        p=_PROBE_P,
        p_prime=_PROBE_P_PRIME,
        q=_PROBE_Q,
        r=_PROBE_R_OVERLAP if settings_in_overlap else _PROBE_R_LATE,
    )
