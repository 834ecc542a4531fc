import { ApiClient, ApiError, describeApiError } from "./api.js";
import { SseClient, type SseHandlers, type SseOptions, type StreamEvent } from "./sse.js";
import type { ActuatorId, ActuatorMode, StoredRecord, TickReport } from "./types.js";
import type { DashboardViewModel } from "./viewmodel.js";

export type SseLike = { start(): void; stop(): void };

export type ControllerOptions = {
  api?: ApiClient;
  /** Swap the stream implementation in tests. */
  sseFactory?: (url: string, handlers: SseHandlers) => SseLike;
  sseOptions?: SseOptions;
  /** How far back to backfill the chart, in ms of sample time. */
  historyWindowMs?: number;
};

const MAX_TS = Number.MAX_SAFE_INTEGER;

// Wires ApiClient + SseClient to the view model: initial state via GET,
// then stream updates; on every (re)open the missed range is backfilled
// from /history. All mutations flow server -> view model.
export class DashboardController {
  readonly api: ApiClient;
  private readonly sse: SseLike;
  private readonly historyWindowMs: number;

  constructor(
    baseUrl: string,
    private readonly vm: DashboardViewModel,
    opts: ControllerOptions = {},
  ) {
    this.api = opts.api ?? new ApiClient(baseUrl);
    this.historyWindowMs = opts.historyWindowMs ?? 24 * 3600 * 1000;
    const handlers: SseHandlers = {
      onOpen: () => {
        this.vm.noteLive();
        void this.backfill();
      },
      onEvent: (ev) => this.handleEvent(ev),
      onDown: (err) => this.vm.noteDown(err),
    };
    const factory = opts.sseFactory ?? ((url, h) => new SseClient(url, h, opts.sseOptions));
    this.sse = factory(this.api.streamUrl(), handlers);
  }

  /** Fetch initial state, then hold the stream open (retrying forever). */
  async connect(): Promise<void> {
    this.vm.noteConnecting();
    try {
      this.vm.applySnapshot(await this.api.latest());
    } catch (err) {
      if (!(err instanceof ApiError && err.status === 503)) {
        this.vm.noteDown(err);
      }
      // 503 no_data: an empty gateway is healthy, the stream will fill us in.
    }
    try {
      this.vm.applyActuators(await this.api.actuators());
    } catch (err) {
      this.vm.noteDown(err);
    }
    this.sse.start();
  }

  stop(): void {
    this.sse.stop();
  }

  /**
   * POST an override and apply only the server-acknowledged state. On failure
   * the switch keeps its last acknowledged mode and the error is surfaced.
   */
  async setOverride(id: ActuatorId, mode: ActuatorMode): Promise<boolean> {
    this.vm.beginOverride(id);
    try {
      const state = await this.api.setOverride(id, mode);
      this.vm.confirmOverride(state);
      return true;
    } catch (err) {
      this.vm.failOverride(id, describeApiError(err));
      return false;
    }
  }

  private async backfill(): Promise<void> {
    const fromTs = Math.max(0, (this.vm.latest?.ts ?? 0) - this.historyWindowMs);
    try {
      this.vm.applyHistory(await this.api.history(fromTs, MAX_TS));
    } catch {
      // The next reconnect retries; live events keep flowing meanwhile.
    }
  }

  private handleEvent(ev: StreamEvent): void {
    let payload: unknown;
    try {
      payload = JSON.parse(ev.data);
    } catch {
      return; // tolerate malformed frames, the stream itself is healthy
    }
    if (ev.event === "sample") {
      this.vm.applySample(payload as StoredRecord);
    } else if (ev.event === "tick") {
      this.vm.applyTick(payload as TickReport);
    }
  }
}
