import { describe, expect, it } from "vitest";

import { SseClient, type StreamEvent } from "../src/sse.js";

const encoder = new TextEncoder();

/** A Response whose body emits the given chunks, then (optionally) ends. */
function streamResponse(chunks: string[], opts: { stayOpen?: boolean } = {}): Response {
  const body = new ReadableStream<Uint8Array>({
    start(ctrl) {
      for (const chunk of chunks) {
        ctrl.enqueue(encoder.encode(chunk));
      }
      if (!opts.stayOpen) {
        ctrl.close();
      }
    },
  });
  return new Response(body, { status: 200, headers: { "content-type": "text/event-stream" } });
}

type Attempt = { kind: "chunks"; chunks: string[] } | { kind: "reject" } | { kind: "status"; status: number };

/**
 * Scripted transport: each connection attempt consumes the next entry.
 * Resolves `done` once the script is exhausted and one more attempt arrives.
 */
function scriptedClient(script: Attempt[], opts: { minBackoffMs?: number } = {}) {
  const events: StreamEvent[] = [];
  const delays: number[] = [];
  let opens = 0;
  let downs = 0;
  let attempts = 0;
  let finish: () => void = () => undefined;
  const done = new Promise<void>((r) => {
    finish = r;
  });

  const client = new SseClient(
    "http://gw/api/v1/stream",
    {
      onEvent: (ev) => events.push(ev),
      onOpen: () => {
        opens += 1;
      },
      onDown: () => {
        downs += 1;
      },
    },
    {
      minBackoffMs: opts.minBackoffMs ?? 500,
      sleep: async (ms) => {
        delays.push(ms);
      },
      fetchImpl: async () => {
        const step = script[attempts];
        attempts += 1;
        if (step === undefined) {
          finish();
          client.stop();
          throw new Error("script exhausted");
        }
        if (step.kind === "reject") {
          throw new TypeError("connection refused");
        }
        if (step.kind === "status") {
          return new Response("busy", { status: step.status });
        }
        return streamResponse(step.chunks);
      },
    },
  );

  return {
    client,
    done,
    events,
    delays,
    opens: () => opens,
    downs: () => downs,
    attempts: () => attempts,
  };
}

describe("SseClient parsing", () => {
  it("dispatches named events with their data", async () => {
    const t = scriptedClient([
      { kind: "chunks", chunks: ['event: sample\ndata: {"seq": 1}\n\nevent: tick\ndata: {"ts": 5}\n\n'] },
    ]);
    t.client.start();
    await t.done;
    expect(t.events).toEqual([
      { event: "sample", data: '{"seq": 1}' },
      { event: "tick", data: '{"ts": 5}' },
    ]);
  });

  it("reassembles events split across arbitrary chunk boundaries", async () => {
    const wire = 'event: sample\ndata: {"seq": 42}\n\n';
    const chunks = [wire.slice(0, 3), wire.slice(3, 17), wire.slice(17, 18), wire.slice(18)];
    const t = scriptedClient([{ kind: "chunks", chunks }]);
    t.client.start();
    await t.done;
    expect(t.events).toEqual([{ event: "sample", data: '{"seq": 42}' }]);
  });

  it("ignores keepalive comments and tolerates CRLF line endings", async () => {
    const t = scriptedClient([
      { kind: "chunks", chunks: [": keepalive\r\n\r\nevent: tick\r\ndata: {}\r\n\r\n: keepalive\n\n"] },
    ]);
    t.client.start();
    await t.done;
    expect(t.events).toEqual([{ event: "tick", data: "{}" }]);
  });

  it("defaults the event name to message and joins multi-line data", async () => {
    const t = scriptedClient([{ kind: "chunks", chunks: ["data: a\ndata: b\n\n"] }]);
    t.client.start();
    await t.done;
    expect(t.events).toEqual([{ event: "message", data: "a\nb" }]);
  });

  it("drops a trailing event never terminated by a blank line", async () => {
    const t = scriptedClient([{ kind: "chunks", chunks: ["event: tick\ndata: {}\n"] }]);
    t.client.start();
    await t.done;
    expect(t.events).toEqual([]);
  });
});

describe("SseClient reconnecting", () => {
  it("climbs the backoff ladder on repeated connect failures", async () => {
    const t = scriptedClient([
      { kind: "reject" },
      { kind: "reject" },
      { kind: "status", status: 503 },
      { kind: "reject" },
    ]);
    t.client.start();
    await t.done;
    expect(t.delays).toEqual([500, 1000, 2000, 4000]);
    expect(t.opens()).toBe(0);
    expect(t.downs()).toBe(4);
  });

  it("caps the delay at maxBackoffMs", async () => {
    const t = scriptedClient(
      Array.from({ length: 8 }, () => ({ kind: "reject" }) as Attempt),
      { minBackoffMs: 4000 },
    );
    t.client.start();
    await t.done;
    expect(Math.max(...t.delays)).toBe(10_000);
  });

  it("resets the ladder after a connection that actually opened", async () => {
    const t = scriptedClient([
      { kind: "reject" },
      { kind: "reject" },
      { kind: "chunks", chunks: ["event: tick\ndata: {}\n\n"] },
      { kind: "reject" },
    ]);
    t.client.start();
    await t.done;
    // 500, 1000 while failing; stream opened (reset) then dropped -> 500; next failure doubles.
    expect(t.delays).toEqual([500, 1000, 500, 1000]);
    expect(t.opens()).toBe(1);
    expect(t.events).toHaveLength(1);
  });

  it("stop() ends the loop without another attempt", async () => {
    let firstAttempt: () => void = () => undefined;
    const gate = new Promise<void>((r) => {
      firstAttempt = r;
    });
    let attempts = 0;
    const client = new SseClient(
      "http://gw/api/v1/stream",
      { onEvent: () => undefined },
      {
        sleep: async () => undefined,
        fetchImpl: async () => {
          attempts += 1;
          firstAttempt();
          throw new TypeError("refused");
        },
      },
    );
    client.start();
    await gate;
    client.stop();
    // Give the loop a macrotask to notice the flag.
    await new Promise((r) => setTimeout(r, 10));
    const after = attempts;
    await new Promise((r) => setTimeout(r, 10));
    expect(attempts).toBe(after);
  });

  it("start() is idempotent", async () => {
    const t = scriptedClient([{ kind: "chunks", chunks: ["event: tick\ndata: {}\n\n"] }]);
    t.client.start();
    t.client.start();
    await t.done;
    expect(t.events).toHaveLength(1);
  });
});
