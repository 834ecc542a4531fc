"""First-order tank dynamics for closed-loop testing, plus a day-trace replay.

The dynamics are a test harness, not a calibrated model: each channel
relaxes toward a base value and actuators add constant-rate pushes,
integrated with explicit Euler. Rates default to values that keep a
24 h desk-scale run plausible against real tank magnitudes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .control import TickReport, tick_from_sample
from .dtree import DecisionTree
from .model import (
    ActuatorId,
    ActuatorState,
    CONTROL_DEFAULTS,
    Thresholds,
    WaterSample,
    initial_actuator_states,
)


class InvalidDt(ValueError):
    """dt is non-positive or too large for stable explicit integration."""


@dataclass(frozen=True)
class SimState:
    t: float  # simulated seconds
    temp_c: float
    ph: float
    tds_mg_l: float
    ec_us_cm: float
    nh3_ppm: float


@dataclass(frozen=True)
class SimParams:
    # Free-running temperature settles at ambient; the default sits inside
    # the Good band so an all-off tank is thermally stable once it gets there.
    ambient_temp_c: float = 25.0
    k_amb: float = 1e-4  # 1/s
    heater_rate: float = 5e-3  # deg C/s
    cooler_rate: float = 5e-3  # deg C/s
    ph_base: float = 7.8
    k_ph: float = 5e-5  # 1/s
    acid_rate: float = 1e-3  # pH/s
    base_rate: float = 1e-3  # pH/s
    tds_growth: float = 0.01  # mg/L/s
    filter_rate: float = 2e-4  # 1/s
    tds_clean: float = 1500.0
    nh3_growth: float = 1e-5  # ppm/s
    ec_per_tds: float = 0.026  # uS/cm per mg/L, matches observed tank ratios
    noise_sigma_temp: float = 0.0
    noise_sigma_ph: float = 0.0
    noise_sigma_tds: float = 0.0
    noise_sigma_nh3: float = 0.0

    def __post_init__(self):
        # ambient_temp_c and ph_base are levels and may sit anywhere
        # physical; everything else is a rate or scale and must be >= 0.
        for f in fields(self):
            if f.name in ("ambient_temp_c", "ph_base"):
                continue
            value = getattr(self, f.name)
            if value < 0:
                raise ValueError(f"{f.name} must be >= 0, got {value}")


def effective_map(states: Iterable[ActuatorState]) -> dict[ActuatorId, bool]:
    return {state.id: state.effective for state in states}


def step(
    state: SimState,
    params: SimParams,
    effective_actuators: Mapping[ActuatorId, bool],
    dt: float,
    rng: np.random.Generator | None = None,
) -> SimState:
    """One explicit-Euler update of every channel.

    Requires dt small enough that each relaxation factor k*dt stays
    below 1, the stability bound for this integrator.
    """
    if not dt > 0:
        raise InvalidDt(f"dt must be > 0, got {dt}")
    if dt * max(params.k_amb, params.k_ph, params.filter_rate) >= 1.0:
        raise InvalidDt(f"dt {dt} too large for the configured relaxation rates")

    on = {a: 1.0 if effective_actuators.get(a, False) else 0.0 for a in ActuatorId}

    temp = state.temp_c + dt * (
        params.k_amb * (params.ambient_temp_c - state.temp_c)
        + params.heater_rate * on[ActuatorId.HEATER]
        - params.cooler_rate * on[ActuatorId.COOLING_FAN]
    )
    ph = state.ph + dt * (
        params.k_ph * (params.ph_base - state.ph)
        - params.acid_rate * on[ActuatorId.ACID_DOSER]
        + params.base_rate * on[ActuatorId.BASE_DOSER]
    )
    tds = state.tds_mg_l + dt * (
        params.tds_growth
        - params.filter_rate * (state.tds_mg_l - params.tds_clean) * on[ActuatorId.WATER_FILTER]
    )
    # The pump aerates: with it on, oxidation outpaces production 2:1.
    nh3 = state.nh3_ppm + dt * params.nh3_growth * (1.0 - 2.0 * on[ActuatorId.OXYGEN_PUMP])

    if rng is not None:
        if params.noise_sigma_temp > 0:
            temp += rng.normal(0.0, params.noise_sigma_temp)
        if params.noise_sigma_ph > 0:
            ph += rng.normal(0.0, params.noise_sigma_ph)
        if params.noise_sigma_tds > 0:
            tds += rng.normal(0.0, params.noise_sigma_tds)
        if params.noise_sigma_nh3 > 0:
            nh3 += rng.normal(0.0, params.noise_sigma_nh3)

    ph = min(14.0, max(0.0, ph))
    tds = max(0.0, tds)
    nh3 = max(0.0, nh3)
    ec = params.ec_per_tds * tds

    return SimState(state.t + dt, temp, ph, tds, ec, nh3)


def make_sample(state: SimState, device_id: str = "sim-tank") -> WaterSample:
    return WaterSample(
        device_id=device_id,
        ts=int(round(state.t * 1000)),
        temp_c=state.temp_c,
        ph=state.ph,
        tds_mg_l=state.tds_mg_l,
        ec_us_cm=state.ec_us_cm,
        nh3_ppm=state.nh3_ppm,
    )


@dataclass(frozen=True)
class TraceRow:
    state: SimState
    sample: WaterSample
    report: TickReport | None


@dataclass(frozen=True)
class Trace:
    rows: tuple[TraceRow, ...]
    step_states: tuple[SimState, ...] = ()

    def samples(self) -> list[WaterSample]:
        return [row.sample for row in self.rows]


def run_closed_loop(
    initial: SimState,
    params: SimParams,
    tree: DecisionTree,
    duration_s: float,
    dt: float = 1.0,
    sample_period_s: float = 30.0,
    control_thresholds: Thresholds = CONTROL_DEFAULTS,
    states: Sequence[ActuatorState] | None = None,
    rng: np.random.Generator | None = None,
    device_id: str = "sim-tank",
    record_steps: bool = False,
) -> Trace:
    """Alternate physics steps with control ticks at the sample period.

    A tick samples the current state, classifies it, and re-arbitrates
    the actuators; those effective values then drive the plant until
    the next tick. Rows are recorded at tick instants; per-step states
    are kept only when asked, since a day at dt=1 is 86400 of them.
    """
    if not duration_s > 0:
        raise ValueError(f"duration_s must be > 0, got {duration_s}")
    if not dt > 0:
        raise InvalidDt(f"dt must be > 0, got {dt}")
    if sample_period_s < dt:
        raise ValueError(f"sample_period_s {sample_period_s} must be >= dt {dt}")

    steps_per_tick = max(1, round(sample_period_s / dt))
    n_steps = round(duration_s / dt)
    actuators = list(states) if states is not None else initial_actuator_states(int(round(initial.t * 1000)))

    state = initial
    rows: list[TraceRow] = []
    step_states: list[SimState] = [state] if record_steps else []

    for i in range(n_steps + 1):
        if i % steps_per_tick == 0:
            sample = make_sample(state, device_id)
            report = tick_from_sample(sample, tree, actuators, control_thresholds)
            actuators = list(report.applied_states)
            rows.append(TraceRow(state, sample, report))
        if i < n_steps:
            state = step(state, params, effective_map(actuators), dt, rng)
            if record_steps:
                step_states.append(state)

    return Trace(tuple(rows), tuple(step_states))


# Day trace observed on the reference tank: 17 rows at 30-minute
# spacing from 5:00 AM to 1:00 PM, (temp_c, ph, tds, ec, nh3).
TABLE2_ROWS: tuple[tuple[float, float, float, float, float], ...] = (
    (25.56, 8.10, 1752.0, 45.85, 5.95),
    (25.59, 7.98, 1760.0, 45.65, 5.96),
    (26.03, 7.98, 1750.0, 45.65, 5.98),
    (25.95, 7.95, 1740.0, 45.62, 5.98),
    (26.31, 7.66, 1740.0, 45.63, 5.65),
    (27.45, 7.54, 1740.0, 45.64, 5.89),
    (27.32, 7.36, 1741.0, 45.58, 5.91),
    (27.35, 7.20, 1739.0, 45.59, 5.91),
    (27.86, 7.19, 1734.0, 46.02, 5.97),
    (27.90, 7.16, 1734.0, 45.99, 6.07),
    (28.21, 7.18, 1732.0, 46.00, 6.09),
    (28.25, 7.17, 1730.0, 46.10, 6.08),
    (28.43, 7.16, 1728.0, 46.11, 6.11),
    (29.06, 7.16, 1735.0, 46.15, 6.13),
    (29.12, 7.16, 1729.0, 46.16, 6.11),
    (29.45, 7.17, 1728.0, 46.17, 6.13),
    (29.33, 7.14, 1726.0, 46.22, 6.26),
)

REPLAY_PERIOD_S = 1800
# 5:00 AM expressed as milliseconds into an epoch day.
REPLAY_BASE_TS_MS = 5 * 3600 * 1000
REPLAY_DEVICE_ID = "tank-1"


def replay_table2() -> Trace:
    """The recorded day trace as a Trace of WaterSamples (no control rows)."""
    rows = []
    for i, (temp, ph, tds, ec, nh3) in enumerate(TABLE2_ROWS):
        t = float(i * REPLAY_PERIOD_S)
        state = SimState(t, temp, ph, tds, ec, nh3)
        sample = WaterSample(
            device_id=REPLAY_DEVICE_ID,
            ts=REPLAY_BASE_TS_MS + i * REPLAY_PERIOD_S * 1000,
            temp_c=temp,
            ph=ph,
            tds_mg_l=tds,
            ec_us_cm=ec,
            nh3_ppm=nh3,
        )
        rows.append(TraceRow(state, sample, None))
    return Trace(tuple(rows))


TRACE_CSV_HEADER = (
    "ts_ms",
    "temp_c",
    "ph",
    "tds_mg_l",
    "ec_us_cm",
    "nh3_ppm",
    "condition",
    "fired_rules",
) + tuple(a.value for a in ActuatorId)


def export_trace_csv(trace: Trace, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(TRACE_CSV_HEADER)
        for row in trace.rows:
            s = row.sample
            if row.report is not None:
                condition = row.report.condition.value
                fired = "|".join(row.report.decision.fired_rules)
                flags = {st.id: int(st.effective) for st in row.report.applied_states}
            else:
                condition = ""
                fired = ""
                flags = {a: 0 for a in ActuatorId}
            writer.writerow(
                [s.ts, s.temp_c, s.ph, s.tds_mg_l, s.ec_us_cm, s.nh3_ppm, condition, fired]
                + [flags[a] for a in ActuatorId]
            )


def export_trace_jsonl(trace: Trace, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for row in trace.rows:
            doc: dict[str, Any] = row.sample.to_json_dict()
            doc["t_s"] = row.state.t
            if row.report is not None:
                doc["condition"] = row.report.condition.value
                doc["fired_rules"] = list(row.report.decision.fired_rules)
                doc["effective"] = {st.id.value: st.effective for st in row.report.applied_states}
            f.write(json.dumps(doc) + "\n")


DEFAULT_INITIAL_STATE = SimState(t=0.0, temp_c=26.0, ph=7.8, tds_mg_l=1500.0, ec_us_cm=39.0, nh3_ppm=5.0)


@dataclass(frozen=True)
class Scenario:
    initial: SimState
    params: SimParams
    duration_s: float
    dt: float = 1.0
    sample_period_s: float = 30.0
    seed: int | None = None


def load_scenario(path: str | Path) -> Scenario:
    """Scenario JSON: initial-state fields, params overrides, run shape.

    Unspecified initial fields fall back to a nominal healthy tank;
    ec is derived from tds unless given explicitly.
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValueError("scenario root must be a JSON object")
    unknown = set(doc) - {"initial", "params", "duration_s", "dt", "sample_period_s", "seed"}
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")

    params_doc = doc.get("params", {})
    if not isinstance(params_doc, dict):
        raise ValueError("scenario params must be an object")
    unknown = set(params_doc) - {f.name for f in fields(SimParams)}
    if unknown:
        raise ValueError(f"unknown params keys: {sorted(unknown)}")
    params = replace(SimParams(), **{k: float(v) for k, v in params_doc.items()})

    initial_doc = doc.get("initial", {})
    if not isinstance(initial_doc, dict):
        raise ValueError("scenario initial must be an object")
    unknown = set(initial_doc) - {"temp_c", "ph", "tds_mg_l", "ec_us_cm", "nh3_ppm"}
    if unknown:
        raise ValueError(f"unknown initial keys: {sorted(unknown)}")
    base = DEFAULT_INITIAL_STATE
    tds = float(initial_doc.get("tds_mg_l", base.tds_mg_l))
    initial = SimState(
        t=0.0,
        temp_c=float(initial_doc.get("temp_c", base.temp_c)),
        ph=float(initial_doc.get("ph", base.ph)),
        tds_mg_l=tds,
        ec_us_cm=float(initial_doc.get("ec_us_cm", params.ec_per_tds * tds)),
        nh3_ppm=float(initial_doc.get("nh3_ppm", base.nh3_ppm)),
    )

    duration_s = float(doc.get("duration_s", 86400.0))
    dt = float(doc.get("dt", 1.0))
    sample_period_s = float(doc.get("sample_period_s", 30.0))
    seed = doc.get("seed")
    if seed is not None:
        seed = int(seed)
    return Scenario(initial, params, duration_s, dt, sample_period_s, seed)


def run_scenario(scenario: Scenario, tree: DecisionTree, control_thresholds: Thresholds = CONTROL_DEFAULTS) -> Trace:
    rng = np.random.default_rng(scenario.seed) if scenario.seed is not None else None
    return run_closed_loop(
        scenario.initial,
        scenario.params,
        tree,
        duration_s=scenario.duration_s,
        dt=scenario.dt,
        sample_period_s=scenario.sample_period_s,
        control_thresholds=control_thresholds,
        rng=rng,
    )
