import type {
  ActuatorId,
  ActuatorState,
  ConditionName,
  Snapshot,
  StoredRecord,
  TickReport,
  TickSummary,
} from "./types.js";

export type ConnectionState = "connecting" | "live" | "reconnecting";

export type ViewModelOptions = {
  /** Control period of the gateway; data older than 3 periods renders as stale. */
  tickMs?: number;
  /** Rolling history window, in records. */
  historyLimit?: number;
  /** Injectable clock (ms). */
  now?: () => number;
};

// All display state of the console, kept as a pure value the renderer reads.
// Every mutation comes from a server response or stream event; switches never
// show an unacknowledged mode.
export class DashboardViewModel {
  readonly tickMs: number;
  readonly historyLimit: number;
  private readonly now: () => number;

  connection: ConnectionState = "connecting";
  lastError: string | null = null;
  latest: StoredRecord | null = null;
  condition: ConditionName | null = null;
  firedRules: string[] = [];
  lastTick: TickSummary | null = null;
  history: StoredRecord[] = [];
  readonly actuators = new Map<ActuatorId, ActuatorState>();
  readonly pending = new Set<ActuatorId>();

  /** Wall-clock receipt time of the newest sample or tick, for staleness. */
  private lastDataAtMs: number | null = null;
  private listeners: Array<() => void> = [];
  revision = 0;

  constructor(opts: ViewModelOptions = {}) {
    this.tickMs = opts.tickMs ?? 500;
    this.historyLimit = opts.historyLimit ?? 240;
    this.now = opts.now ?? (() => Date.now());
  }

  onChange(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    this.revision += 1;
    for (const listener of this.listeners) {
      listener();
    }
  }

  /** True when nothing has been heard for more than 3 tick periods. */
  isStale(nowMs?: number): boolean {
    if (this.lastDataAtMs === null) {
      return true;
    }
    return (nowMs ?? this.now()) - this.lastDataAtMs > 3 * this.tickMs;
  }

  applySnapshot(snap: Snapshot): void {
    this.latest = snap.sample;
    this.condition = snap.condition;
    this.lastTick = snap.tick;
    if (snap.tick) {
      this.firedRules = snap.tick.fired_rules;
    }
    for (const state of snap.actuators) {
      this.actuators.set(state.id, state);
    }
    this.mergeHistory([snap.sample]);
    this.lastDataAtMs = this.now();
    this.notify();
  }

  applySample(record: StoredRecord): void {
    if (this.latest === null || record.seq >= this.latest.seq) {
      this.latest = record;
    }
    this.mergeHistory([record]);
    this.lastDataAtMs = this.now();
    this.notify();
  }

  applyTick(tick: TickReport): void {
    this.condition = tick.condition;
    this.firedRules = tick.fired_rules;
    this.lastTick = {
      ts: tick.ts,
      condition: tick.condition,
      fired_rules: tick.fired_rules,
      elapsed_ms: tick.elapsed_ms,
    };
    for (const [id, effective] of Object.entries(tick.effective)) {
      const state = this.actuators.get(id as ActuatorId);
      if (state) {
        this.actuators.set(id as ActuatorId, { ...state, effective });
      }
    }
    this.lastDataAtMs = this.now();
    this.notify();
  }

  applyActuators(states: ActuatorState[]): void {
    for (const state of states) {
      this.actuators.set(state.id, state);
    }
    this.notify();
  }

  applyHistory(records: StoredRecord[]): void {
    this.mergeHistory(records);
    this.notify();
  }

  noteConnecting(): void {
    this.connection = "connecting";
    this.notify();
  }

  noteLive(): void {
    this.connection = "live";
    this.lastError = null;
    this.notify();
  }

  noteDown(err: unknown): void {
    this.connection = "reconnecting";
    this.lastError = err instanceof Error ? err.message : String(err);
    this.notify();
  }

  /** Mark a switch in flight; its rendered mode stays the last acknowledged one. */
  beginOverride(id: ActuatorId): void {
    this.pending.add(id);
    this.notify();
  }

  confirmOverride(state: ActuatorState): void {
    this.pending.delete(state.id);
    this.actuators.set(state.id, state);
    this.notify();
  }

  failOverride(id: ActuatorId, reason: string): void {
    this.pending.delete(id);
    this.lastError = reason;
    this.notify();
  }

  clearError(): void {
    this.lastError = null;
    this.notify();
  }

  private mergeHistory(records: StoredRecord[]): void {
    if (records.length === 0) {
      return;
    }
    const bySeq = new Map<number, StoredRecord>();
    for (const r of this.history) {
      bySeq.set(r.seq, r);
    }
    for (const r of records) {
      bySeq.set(r.seq, r);
    }
    const merged = [...bySeq.values()].sort((a, b) => a.seq - b.seq);
    this.history = merged.slice(Math.max(0, merged.length - this.historyLimit));
  }
}
