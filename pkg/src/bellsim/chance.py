"""Spacetime-point-relativized chances and interventionist dependence tests.

The chance of an outcome event at a point is the Born probability of
that outcome conditional on every outcome already inside the point's
backward light cone, computed from the scenario's state and the setting
events the point can see. Chances are therefore perspectival: two
points at the same lab time can assign different, equally correct
values to the same event.

Three rules shape the implementation and are worth stating up front:

* If the preparation event is outside the past cone, no chance is
  defined at all (rather than defaulting to a uniform prior).
* A wing's chance can only be evaluated through its analyzer angle, so
  a target whose own setting is invisible or absent also has no defined
  chance.
* Single-wing targets with no conditioning information are evaluated
  via the reduced state of that wing alone, so their value never
  references anything on the remote side (and is reproducibly
  bit-identical under remote perturbations).

Interventions that force a measurement outcome are representable but
always refused; the refusal is a first-class verdict, not an error.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Union

from .quantum import (
    AngleLike,
    AnalyzerAngle,
    OutcomeLabel,
    PhotonPairState,
    Wing,
    ZERO_PROBABILITY,
    as_angle,
    born_conditional,
    born_joint,
    born_marginal,
    product_polarized,
)
from .spacetime import (
    EventRecord,
    Outcome,
    Preparation,
    Scenario,
    Setting,
    SpacetimePoint,
    backward_cone_contents,
    is_spacelike,
)

#: Tolerance used when deciding whether an intervention altered a chance.
DEPENDENCE_TOL = 1e-9


class NoChanceDefinedError(Exception):
    """No chance is defined at this point for this target."""


class SenselessInterventionError(Exception):
    """Raised when an inadmissible intervention is used as a premise."""


# -- targets -----------------------------------------------------------------


@dataclass(frozen=True)
class OutcomeTarget:
    """The event of one wing registering the given outcome."""

    wing: Wing
    label: OutcomeLabel = OutcomeLabel.V


@dataclass(frozen=True)
class JointTarget:
    """The event of both wings registering the given outcomes."""

    label_a: OutcomeLabel = OutcomeLabel.V
    label_b: OutcomeLabel = OutcomeLabel.V


Target = Union[OutcomeTarget, JointTarget]


def vertical_outcome(wing: Wing) -> OutcomeTarget:
    return OutcomeTarget(wing=wing, label=OutcomeLabel.V)


def joint_vertical() -> JointTarget:
    return JointTarget(label_a=OutcomeLabel.V, label_b=OutcomeLabel.V)


def _target_components(target: Target) -> dict[Wing, OutcomeLabel]:
    if isinstance(target, OutcomeTarget):
        return {target.wing: target.label}
    return {Wing.A: target.label_a, Wing.B: target.label_b}


# -- reference classes ---------------------------------------------------------


@dataclass(frozen=True)
class ReferenceClass:
    """What a point can condition on: backing, visible settings, outcomes.

    ``settings`` maps a wing to its analyzer angle only when the setting
    event is inside the past cone; a None value means the visible choice
    was "measure nothing". ``outcomes`` contains only registered
    outcomes inside the past cone.
    """

    state_backed: bool
    settings: Mapping[Wing, AnalyzerAngle | None]
    outcomes: Mapping[Wing, OutcomeLabel]

    def __post_init__(self) -> None:
        for wing in self.outcomes:
            if self.settings.get(wing) is None:
                raise ValueError(
                    f"outcome on wing {wing.value} is accessible but its setting is not"
                )


def reference_class_at(point: SpacetimePoint, scenario: Scenario) -> ReferenceClass:
    """Derive the reference class purely from the backward cone contents."""
    state_backed = False
    settings: dict[Wing, AnalyzerAngle | None] = {}
    outcomes: dict[Wing, OutcomeLabel] = {}
    for ev in backward_cone_contents(point, scenario):
        if isinstance(ev.kind, Preparation):
            state_backed = True
        elif isinstance(ev.kind, Setting):
            settings[ev.kind.wing] = ev.kind.angle
        elif isinstance(ev.kind, Outcome):
            outcomes[ev.kind.wing] = ev.kind.label
    return ReferenceClass(state_backed=state_backed, settings=settings, outcomes=outcomes)


# -- chances -------------------------------------------------------------------


@dataclass(frozen=True)
class ChanceValue:
    """A probability indexed by the point it is relativized to."""

    value: float
    at: SpacetimePoint
    target: Target

    def __post_init__(self) -> None:
        if not (0.0 <= self.value <= 1.0):
            raise ValueError(f"chance value {self.value!r} outside [0, 1]")


def _visible_angle(
    rc: ReferenceClass, wing: Wing, point: SpacetimePoint
) -> AnalyzerAngle:
    if wing not in rc.settings:
        raise NoChanceDefinedError(
            f"analyzer setting for wing {wing.value} is outside the past cone "
            f"of ({point.t}, {point.x})"
        )
    angle = rc.settings[wing]
    if angle is None:
        raise NoChanceDefinedError(
            f"no measurement is performed on wing {wing.value}; its outcome "
            "has no defined chance"
        )
    return angle


def _born_probability(
    state: PhotonPairState,
    rc: ReferenceClass,
    point: SpacetimePoint,
    wanted: dict[Wing, OutcomeLabel],
    given: dict[Wing, OutcomeLabel],
) -> float:
    """P(wanted | given) from the Born rule, using only visible angles.

    ``wanted`` and ``given`` are disjoint wing->label assignments. A
    single unconditioned wing goes through its reduced state so the
    remote side is never referenced.
    """
    if len(wanted) == 1 and not given:
        (wing, label), = wanted.items()
        return born_marginal(state, wing, _visible_angle(rc, wing, point)).for_label(label)
    angle_a = _visible_angle(rc, Wing.A, point)
    angle_b = _visible_angle(rc, Wing.B, point)
    if len(wanted) == 2:
        return born_joint(state, angle_a, angle_b).prob(wanted[Wing.A], wanted[Wing.B])
    (wing, label), = wanted.items()
    (cond_wing, cond_label), = given.items()
    pair = born_conditional(state, angle_a, angle_b, given=(cond_wing, cond_label))
    return pair.for_label(label)


def chance_at(point: SpacetimePoint, target: Target, scenario: Scenario) -> ChanceValue:
    """The chance of ``target`` relativized to ``point``.

    Settled targets (their outcome event already in the past cone) get
    exactly 0 or 1. Otherwise the value is the Born probability of the
    target conditional on every outcome visible at the point.
    """
    rc = reference_class_at(point, scenario)
    if not rc.state_backed:
        raise NoChanceDefinedError(
            f"the preparation event is outside the past cone of "
            f"({point.t}, {point.x}); no chance is defined there"
        )
    wanted = _target_components(target)
    open_wings: dict[Wing, OutcomeLabel] = {}
    indicator = 1.0
    for wing, label in wanted.items():
        if wing in rc.outcomes:
            if rc.outcomes[wing] is not label:
                indicator = 0.0
        else:
            open_wings[wing] = label
    if indicator == 0.0 or not open_wings:
        return ChanceValue(value=indicator, at=point, target=target)
    conditioning = {w: o for w, o in rc.outcomes.items() if w not in open_wings}
    value = _born_probability(scenario.state, rc, point, open_wings, conditioning)
    return ChanceValue(value=value, at=point, target=target)


# -- interventions -------------------------------------------------------------


@dataclass(frozen=True)
class ReplacePreparation:
    """Substitute a different prepared state at the backing event."""

    state: PhotonPairState


@dataclass(frozen=True)
class SetAngle:
    """Choose a different analyzer axis (or None: measure nothing)."""

    wing: Wing
    angle: AnalyzerAngle | None


@dataclass(frozen=True)
class ForceOutcome:
    """Force a measurement outcome. Constructible, never applicable."""

    wing: Wing
    label: OutcomeLabel


InterventionMode = Union[ReplacePreparation, SetAngle, ForceOutcome]


@dataclass(frozen=True)
class Intervention:
    target: EventRecord
    mode: InterventionMode


@dataclass(frozen=True)
class SenselessIntervention:
    """Refusal verdict: this intervention has no scenario at all."""

    intervention: Intervention | None
    reason: str


def set_angle_intervention(
    scenario: Scenario, wing: Wing, angle: AngleLike | None
) -> Intervention:
    setting = scenario.setting_event(wing)
    if setting is None:
        raise ValueError(f"scenario has no setting event on wing {wing.value}")
    return Intervention(
        target=setting,
        mode=SetAngle(wing=wing, angle=None if angle is None else as_angle(angle)),
    )


def replace_preparation_intervention(
    scenario: Scenario, state: PhotonPairState
) -> Intervention:
    prep = scenario.preparation_event()
    if prep is None:
        raise ValueError("scenario has no preparation event")
    return Intervention(target=prep, mode=ReplacePreparation(state=state))


def apply_intervention(
    scenario: Scenario, intervention: Intervention
) -> Scenario | SenselessIntervention:
    """Apply an intervention, or refuse it.

    Preparation replacement and setting changes yield a modified
    scenario. Forcing an outcome is refused with a
    :class:`SenselessIntervention` verdict; it never yields a scenario.
    Changing a setting to None removes that wing's outcome event, since
    an unperformed measurement registers nothing.
    """
    mode = intervention.mode
    if isinstance(mode, ForceOutcome):
        return SenselessIntervention(
            intervention=intervention,
            reason=(
                f"forcing outcome {mode.label.value} on wing {mode.wing.value} is not "
                "an admissible intervention: the outcome's own chance is fixed by the "
                "prepared state, and nothing one could do alters it"
            ),
        )
    if isinstance(mode, ReplacePreparation):
        if not isinstance(intervention.target.kind, Preparation):
            raise ValueError("ReplacePreparation must target the preparation event")
        return scenario.with_state(mode.state)
    if not isinstance(intervention.target.kind, Setting) or (
        intervention.target.kind.wing is not mode.wing
    ):
        raise ValueError(f"SetAngle must target the wing-{mode.wing.value} setting event")
    events = []
    for ev in scenario.events:
        if ev.id == intervention.target.id:
            events.append(replace(ev, kind=Setting(wing=mode.wing, angle=mode.angle)))
        elif mode.angle is None and isinstance(ev.kind, Outcome) and ev.kind.wing is mode.wing:
            continue
        else:
            events.append(ev)
    return scenario.with_events(events)


# -- estimated chances ---------------------------------------------------------


def estimated_chance(
    point: SpacetimePoint,
    target: Target,
    contemplated: Intervention | None,
    scenario: Scenario,
) -> ChanceValue:
    """Best estimate of the target's downstream chance, formed at ``point``.

    When conditioning outcomes are not yet visible at the point, the
    estimate is the mixture of the chances the target would have once
    they are, weighted by the Born distribution of those outcomes under
    the contemplated setting choice. The mixture runs over every
    measured wing outside the target whose outcome the point cannot yet
    see.
    """
    if contemplated is not None:
        if isinstance(contemplated.mode, ForceOutcome):
            raise SenselessInterventionError(
                "cannot estimate a chance under an outcome-forcing intervention; "
                "no such scenario exists"
            )
        applied = apply_intervention(scenario, contemplated)
        assert isinstance(applied, Scenario)
        scenario = applied
    rc = reference_class_at(point, scenario)
    if not rc.state_backed:
        raise NoChanceDefinedError(
            f"the preparation event is outside the past cone of "
            f"({point.t}, {point.x}); no estimate is defined there"
        )
    wanted = _target_components(target)
    open_wings: dict[Wing, OutcomeLabel] = {}
    indicator = 1.0
    for wing, label in wanted.items():
        if wing in rc.outcomes:
            if rc.outcomes[wing] is not label:
                indicator = 0.0
        else:
            open_wings[wing] = label
    if indicator == 0.0 or not open_wings:
        return ChanceValue(value=indicator, at=point, target=target)

    # Wings whose outcome will condition the downstream chance but is
    # not yet visible here. Their angles come from the (possibly
    # intervened) scenario; their outcomes get mixed over.
    mix_wings = [
        wing
        for wing in (Wing.A, Wing.B)
        if wing not in wanted
        and wing not in rc.outcomes
        and scenario.angle(wing) is not None
    ]
    known = dict(rc.outcomes)
    if not mix_wings:
        value = _born_probability(
            scenario.state, rc, point, open_wings,
            {w: o for w, o in known.items() if w not in open_wings},
        )
        return ChanceValue(value=value, at=point, target=target)

    # At most one wing remains to mix over in a bipartite scenario.
    (mix_wing,) = mix_wings
    mix_rc = ReferenceClass(
        state_backed=True,
        settings={**rc.settings, mix_wing: scenario.angle(mix_wing)},
        outcomes=rc.outcomes,
    )
    estimate = 0.0
    for hypothesized in (OutcomeLabel.V, OutcomeLabel.H):
        weight = _born_probability(
            scenario.state, mix_rc, point, {mix_wing: hypothesized},
            {w: o for w, o in known.items() if w is not mix_wing},
        )
        if weight <= ZERO_PROBABILITY:
            continue
        downstream = _born_probability(
            scenario.state, mix_rc, point, open_wings,
            {**{w: o for w, o in known.items() if w not in open_wings},
             mix_wing: hypothesized},
        )
        estimate += weight * downstream
    return ChanceValue(value=min(max(estimate, 0.0), 1.0), at=point, target=target)


# -- causal dependence ----------------------------------------------------------


class CausalVerdictKind(Enum):
    DEPENDENT = "dependent"
    INDEPENDENT = "independent"
    SENSELESS_INTERVENTION = "senseless_intervention"


@dataclass(frozen=True)
class CausalVerdict:
    kind: CausalVerdictKind
    witness: tuple[ChanceValue, ChanceValue] | None = None
    intervention: Intervention | None = None

    def __post_init__(self) -> None:
        if self.kind is CausalVerdictKind.DEPENDENT:
            if self.witness is None:
                raise ValueError("a dependent verdict requires a witness pair")
            baseline, altered = self.witness
            if abs(baseline.value - altered.value) <= DEPENDENCE_TOL:
                raise ValueError("witness chances do not differ beyond tolerance")


#: Replacement states offered as interventions on the preparation event.
#: Chosen so that for every analyzer angle at least one member shifts the
#: marginal away from any prior value (the 0- and 45-degree polarized
#: pairs cannot both give a 1/2 marginal at the same angle).
_PREPARATION_BATTERY = (
    (0.0, 0.0),
    (45.0, 45.0),
    (90.0, 0.0),
)

#: Angle offsets (degrees) tried when intervening on a setting event,
#: plus the "measure nothing" option handled separately.
_SETTING_OFFSETS = (30.0, 45.0, 60.0)


def _admissible_interventions(scenario: Scenario, cause: EventRecord) -> list[Intervention]:
    if isinstance(cause.kind, Preparation):
        return [
            Intervention(target=cause, mode=ReplacePreparation(product_polarized(ta, tb)))
            for ta, tb in _PREPARATION_BATTERY
        ]
    if isinstance(cause.kind, Setting):
        wing = cause.kind.wing
        current = cause.kind.angle
        modes: list[InterventionMode] = []
        if current is None:
            modes.extend(SetAngle(wing, AnalyzerAngle(deg)) for deg in (0.0, 45.0, 90.0))
        else:
            modes.extend(SetAngle(wing, current.rotated(off)) for off in _SETTING_OFFSETS)
            modes.append(SetAngle(wing, None))
        return [Intervention(target=cause, mode=mode) for mode in modes]
    return []


def causally_depends(
    effect: Target,
    cause: EventRecord,
    scenario: Scenario,
    *,
    tol: float = DEPENDENCE_TOL,
    probe: SpacetimePoint | None = None,
) -> CausalVerdict:
    """Interventionist dependence test for ``effect`` on ``cause``.

    Enumerates the admissible interventions on the cause event and
    compares the effect's chance at a fixed probe point (the scenario's
    r by default: inside the preparation's future, outside both outcome
    futures). Outcome events admit no intervention at all, which is
    reported as a verdict, not an error. Interventions that leave the
    effect's chance undefined are skipped: they withdraw the chance
    rather than altering it.
    """
    if isinstance(cause.kind, Outcome) and isinstance(effect, OutcomeTarget):
        if cause.kind.wing is effect.wing:
            raise ValueError("effect and cause must be distinct events")
    at = probe if probe is not None else scenario.r
    interventions = _admissible_interventions(scenario, cause)
    if not interventions:
        return CausalVerdict(
            kind=CausalVerdictKind.SENSELESS_INTERVENTION,
            intervention=Intervention(
                target=cause,
                mode=ForceOutcome(cause.kind.wing, cause.kind.label),
            )
            if isinstance(cause.kind, Outcome)
            else None,
        )
    baseline = chance_at(at, effect, scenario)
    for intervention in interventions:
        altered_scenario = apply_intervention(scenario, intervention)
        assert isinstance(altered_scenario, Scenario)
        try:
            altered = chance_at(at, effect, altered_scenario)
        except NoChanceDefinedError:
            continue
        if abs(altered.value - baseline.value) > tol:
            return CausalVerdict(
                kind=CausalVerdictKind.DEPENDENT,
                witness=(baseline, altered),
                intervention=intervention,
            )
    return CausalVerdict(kind=CausalVerdictKind.INDEPENDENT)


# -- the two readings of "unaltered by remote specification" -------------------


@dataclass(frozen=True)
class LocalCausalityReadings:
    """Both readings of the requirement that remote outcomes not alter
    the probability of a local one, evaluated on one scenario.

    The conditional-equality reading compares the unconditional outcome
    probability with the probability conditional on the remote outcome;
    for entangled states it generally fails. The fixed-point reading
    asks whether the chance relativized to a fixed point changes when
    the remote, spacelike outcome is respecified; it holds, since a
    point's chance only draws on its own backward cone.
    """

    conditional_equality_holds: bool
    unconditional: float
    conditional_on_remote: float
    fixed_point_holds: bool
    fixed_point_samples: tuple[tuple[str, float, float], ...]


def local_causality_readings(
    scenario: Scenario, *, tol: float = 1e-12
) -> LocalCausalityReadings:
    """Evaluate both readings for the wing-A vertical outcome."""
    angle_a = scenario.angle(Wing.A)
    angle_b = scenario.angle(Wing.B)
    outcome_b = scenario.outcome_event(Wing.B)
    if angle_a is None or angle_b is None or outcome_b is None:
        raise ValueError("both wings must be measured with a registered B outcome")
    unconditional = born_marginal(scenario.state, Wing.A, angle_a).v
    conditional = born_conditional(
        scenario.state, angle_a, angle_b, given=(Wing.B, outcome_b.kind.label)
    ).v

    target = vertical_outcome(Wing.A)
    samples = []
    fixed_point_holds = True
    flipped_label = (
        OutcomeLabel.H if outcome_b.kind.label is OutcomeLabel.V else OutcomeLabel.V
    )
    flipped = scenario.with_events(
        ev if ev.id != outcome_b.id else replace(ev, kind=Outcome(Wing.B, flipped_label))
        for ev in scenario.events
    )
    for name, point in (("p", scenario.p), ("p_prime", scenario.p_prime)):
        if not is_spacelike(point, outcome_b.point):
            continue
        base = chance_at(point, target, scenario).value
        respecified = chance_at(point, target, flipped).value
        samples.append((name, base, respecified))
        if base != respecified:
            fixed_point_holds = False
    return LocalCausalityReadings(
        conditional_equality_holds=abs(unconditional - conditional) <= tol,
        unconditional=unconditional,
        conditional_on_remote=conditional,
        fixed_point_holds=fixed_point_holds,
        fixed_point_samples=tuple(samples),
    )
