// Wire types for the gateway's /api/v1 surface. Field names are the wire
// contract; do not rename.

export type ConditionName = "Good" | "Bad";

export type ActuatorMode = "auto" | "on" | "off";

export const ACTUATOR_IDS = [
  "oxygen_pump",
  "cooling_fan",
  "heater",
  "water_filter",
  "acid_doser",
  "base_doser",
] as const;

export type ActuatorId = (typeof ACTUATOR_IDS)[number];

export type StoredRecord = {
  seq: number;
  device_id: string;
  ts: number;
  temp_c: number;
  ph: number;
  tds_mg_l: number;
  ec_us_cm: number;
  nh3_ppm: number;
};

export type ActuatorState = {
  id: ActuatorId;
  mode: ActuatorMode;
  effective: boolean;
  last_changed: number;
};

// `event: tick` payload, also embedded (summarized) in the snapshot.
export type TickReport = {
  ts: number;
  features: { temp_c: number; ph: number; tds_mg_l: number };
  condition: ConditionName;
  fired_rules: string[];
  effective: Record<string, boolean>;
  elapsed_ms: number;
};

export type TickSummary = {
  ts: number;
  condition: ConditionName;
  fired_rules: string[];
  elapsed_ms: number;
};

// GET /api/v1/latest
export type Snapshot = {
  sample: StoredRecord;
  condition: ConditionName;
  actuators: ActuatorState[];
  tick: TickSummary | null;
  stale: boolean;
};

// GET /api/v1/condition
export type ConditionNow = {
  condition: ConditionName;
  value: number;
  ts: number;
};
