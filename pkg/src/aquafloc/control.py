"""Rule engine for actuator control, override arbitration, and the tick.

The decision procedure is deliberately simple: a Good condition turns
everything off; a Bad condition is handled by independent threshold
rules whose commands are OR-combined per actuator. Comparisons are
strict on both sides, so band boundaries trigger nothing.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .dtree import DecisionTree
from .model import (
    ActuatorId,
    ActuatorMode,
    ActuatorState,
    Condition,
    CONTROL_DEFAULTS,
    Thresholds,
    WaterSample,
)
from .store import TelemetryStore

RULE_ALL_OFF = "all_off"
RULE_TEMP_HIGH = "temp_high"
RULE_TEMP_LOW = "temp_low"
RULE_PH_HIGH = "ph_high"
RULE_PH_LOW = "ph_low"
RULE_TURBIDITY_OUT = "turbidity_out"


class MissingActuator(ValueError):
    """Arbitration input does not cover some actuator."""


class DuplicateActuator(ValueError):
    """Arbitration input lists an actuator more than once."""


@dataclass(frozen=True)
class ControlDecision:
    """Desired on/off per actuator plus the rules that produced it."""

    commands: Mapping[ActuatorId, bool]
    fired_rules: tuple[str, ...]


def decide(
    condition: Condition,
    sample: WaterSample,
    control_thresholds: Thresholds = CONTROL_DEFAULTS,
) -> ControlDecision:
    """Map a classified sample to actuator commands.

    Good gates everything: all actuators off no matter the readings.
    Bad evaluates every rule group; a Bad sample whose readings sit
    inside all trigger bands legitimately commands nothing, which shows
    up in the audit trail as an empty fired_rules list.
    """
    commands = {actuator: False for actuator in ActuatorId}
    if condition is Condition.GOOD:
        return ControlDecision(commands, (RULE_ALL_OFF,))

    t = control_thresholds
    fired: list[str] = []
    if sample.temp_c > t.temp_hi:
        commands[ActuatorId.OXYGEN_PUMP] = True
        commands[ActuatorId.COOLING_FAN] = True
        fired.append(RULE_TEMP_HIGH)
    if sample.temp_c < t.temp_lo:
        commands[ActuatorId.HEATER] = True
        fired.append(RULE_TEMP_LOW)
    if sample.ph > t.ph_hi:
        commands[ActuatorId.OXYGEN_PUMP] = True
        commands[ActuatorId.ACID_DOSER] = True
        fired.append(RULE_PH_HIGH)
    if sample.ph < t.ph_lo:
        commands[ActuatorId.WATER_FILTER] = True
        commands[ActuatorId.BASE_DOSER] = True
        fired.append(RULE_PH_LOW)
    if sample.tds_mg_l > t.turb_hi or sample.tds_mg_l < t.turb_lo:
        commands[ActuatorId.WATER_FILTER] = True
        fired.append(RULE_TURBIDITY_OUT)
    return ControlDecision(commands, tuple(fired))


def arbitrate(
    decision: ControlDecision,
    states: Sequence[ActuatorState],
    now_ms: int | None = None,
) -> list[ActuatorState]:
    """Fold operator overrides over the automatic decision.

    Auto follows the decision; ForcedOn/ForcedOff win regardless of it.
    last_changed moves only when the effective value actually flips.
    """
    seen: set[ActuatorId] = set()
    for state in states:
        if state.id in seen:
            raise DuplicateActuator(state.id.value)
        seen.add(state.id)
    for actuator in ActuatorId:
        if actuator not in seen:
            raise MissingActuator(actuator.value)
        if actuator not in decision.commands:
            raise MissingActuator(actuator.value)

    if now_ms is None:
        now_ms = int(time.time() * 1000)

    result: list[ActuatorState] = []
    for state in states:
        if state.mode is ActuatorMode.FORCED_ON:
            effective = True
        elif state.mode is ActuatorMode.FORCED_OFF:
            effective = False
        else:
            effective = bool(decision.commands[state.id])
        if effective != state.effective:
            result.append(ActuatorState(state.id, state.mode, effective, now_ms))
        else:
            result.append(state)
    return result


@dataclass(frozen=True)
class TickReport:
    """Everything one control iteration saw and did."""

    sample: WaterSample
    condition: Condition
    decision: ControlDecision
    applied_states: tuple[ActuatorState, ...]
    elapsed_ms: float

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "ts": self.sample.ts,
            "features": {
                "temp_c": self.sample.temp_c,
                "ph": self.sample.ph,
                "tds_mg_l": self.sample.tds_mg_l,
            },
            "condition": self.condition.value,
            "fired_rules": list(self.decision.fired_rules),
            "effective": {state.id.value: state.effective for state in self.applied_states},
            "elapsed_ms": self.elapsed_ms,
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_json_dict())


def tick_from_sample(
    sample: WaterSample,
    tree: DecisionTree,
    states: Sequence[ActuatorState],
    control_thresholds: Thresholds = CONTROL_DEFAULTS,
    now_ms: int | None = None,
) -> TickReport:
    """classify -> decide -> arbitrate for one already-fetched sample."""
    start = time.perf_counter()
    condition = tree.predict_condition(sample.features())
    decision = decide(condition, sample, control_thresholds)
    applied = arbitrate(decision, states, now_ms=sample.ts if now_ms is None else now_ms)
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    return TickReport(sample, condition, decision, tuple(applied), elapsed_ms)


def control_tick(
    store: TelemetryStore,
    tree: DecisionTree,
    states: Sequence[ActuatorState],
    control_thresholds: Thresholds = CONTROL_DEFAULTS,
    now_ms: int | None = None,
) -> TickReport:
    """One periodic iteration against the store's latest sample.

    Raises NoData (from the store) when nothing has been ingested yet;
    callers treat that as a skipped tick, not a failure.
    """
    start = time.perf_counter()
    record = store.latest()
    condition = tree.predict_condition(record.sample.features())
    decision = decide(condition, record.sample, control_thresholds)
    applied = arbitrate(decision, states, now_ms=record.sample.ts if now_ms is None else now_ms)
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    return TickReport(record.sample, condition, decision, tuple(applied), elapsed_ms)
