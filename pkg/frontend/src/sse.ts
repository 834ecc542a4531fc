import type { FetchLike } from "./api.js";

// Reconnecting text/event-stream reader over fetch. EventSource would do the
// parsing but hides reconnect policy and is awkward to drive in tests, so the
// few dozen lines of framing live here instead.

export type StreamEvent = { event: string; data: string };

export type SseHandlers = {
  onEvent: (ev: StreamEvent) => void;
  /** Called once per successfully opened connection, before any events. */
  onOpen?: () => void;
  /** Called on every drop or failed attempt, before the retry wait. */
  onDown?: (err: unknown) => void;
};

export type SseOptions = {
  fetchImpl?: FetchLike;
  minBackoffMs?: number;
  maxBackoffMs?: number;
  /** Injectable wait, so tests can observe delays instead of sleeping. */
  sleep?: (ms: number) => Promise<void>;
};

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class SseClient {
  private readonly fetchImpl: FetchLike;
  private readonly minBackoffMs: number;
  private readonly maxBackoffMs: number;
  private readonly sleep: (ms: number) => Promise<void>;
  private stopped = false;
  private started = false;
  private abort: AbortController | null = null;

  constructor(
    private readonly url: string,
    private readonly handlers: SseHandlers,
    opts: SseOptions = {},
  ) {
    this.fetchImpl = opts.fetchImpl ?? ((u, init) => fetch(u, init));
    this.minBackoffMs = opts.minBackoffMs ?? 500;
    this.maxBackoffMs = opts.maxBackoffMs ?? 10_000;
    this.sleep = opts.sleep ?? defaultSleep;
  }

  /** Spawn the connect/read/retry loop. Safe to call once. */
  start(): void {
    if (this.started) {
      return;
    }
    this.started = true;
    void this.run();
  }

  stop(): void {
    this.stopped = true;
    this.abort?.abort();
  }

  private async run(): Promise<void> {
    let failures = 0;
    while (!this.stopped) {
      this.abort = new AbortController();
      let opened = false;
      try {
        const res = await this.fetchImpl(this.url, {
          signal: this.abort.signal,
          headers: { accept: "text/event-stream" },
        });
        if (!res.ok || !res.body) {
          throw new Error(`stream returned status ${res.status}`);
        }
        opened = true;
        failures = 0;
        this.handlers.onOpen?.();
        await this.consume(res.body);
        throw new Error("stream ended");
      } catch (err) {
        if (this.stopped) {
          return;
        }
        // A connection that opened and then dropped restarts the backoff
        // ladder; repeated failures to open climb it.
        failures = opened ? 1 : failures + 1;
        this.handlers.onDown?.(err);
        const delay = Math.min(this.minBackoffMs * 2 ** (failures - 1), this.maxBackoffMs);
        await this.sleep(delay);
      }
    }
  }

  private async consume(body: ReadableStream<Uint8Array>): Promise<void> {
    const reader = body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    let eventName = "";
    let dataLines: string[] = [];

    const handleLine = (raw: string) => {
      const line = raw.endsWith("\r") ? raw.slice(0, -1) : raw;
      if (line === "") {
        if (dataLines.length > 0) {
          this.handlers.onEvent({
            event: eventName === "" ? "message" : eventName,
            data: dataLines.join("\n"),
          });
        }
        eventName = "";
        dataLines = [];
        return;
      }
      if (line.startsWith(":")) {
        return; // keepalive comment
      }
      const colon = line.indexOf(":");
      const field = colon < 0 ? line : line.slice(0, colon);
      let value = colon < 0 ? "" : line.slice(colon + 1);
      if (value.startsWith(" ")) {
        value = value.slice(1);
      }
      if (field === "event") {
        eventName = value;
      } else if (field === "data") {
        dataLines.push(value);
      }
      // id/retry fields are not used by this server
    };

    for (;;) {
      const { done, value } = await reader.read();
      if (done) {
        return;
      }
      buffer += decoder.decode(value, { stream: true });
      let newline = buffer.indexOf("\n");
      while (newline >= 0) {
        handleLine(buffer.slice(0, newline));
        buffer = buffer.slice(newline + 1);
        newline = buffer.indexOf("\n");
      }
    }
  }
}
