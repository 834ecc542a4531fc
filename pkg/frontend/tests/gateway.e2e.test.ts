import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { createConnection, type Socket } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { DashboardController } from "../src/controller.js";
import { DashboardViewModel } from "../src/viewmodel.js";
import type { ActuatorMode } from "../src/types.js";

// Full-loop check against the real gateway process: ingest over TCP, watch the
// console's view model follow the stream, flip a switch, and verify that a
// rejected POST leaves the acknowledged state alone.

const TICK_MS = 150;

const ROW1 = { device_id: "tank-1", ts: 18_000_000, temp_c: 25.56, ph: 8.1, tds_mg_l: 1752.0, ec_us_cm: 45.85, nh3_ppm: 5.95 };
const ROW2 = { device_id: "tank-1", ts: 19_800_000, temp_c: 25.44, ph: 8.06, tds_mg_l: 1755.0, ec_us_cm: 45.94, nh3_ppm: 5.9 };

const gatewayAvailable = spawnSync("python3", ["-c", "import aquafloc"], { timeout: 30_000 }).status === 0;

async function waitFor(check: () => boolean, what: string, timeoutMs = 8000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (check()) {
      return;
    }
    await new Promise((r) => setTimeout(r, 25));
  }
  throw new Error(`timed out waiting for ${what}`);
}

function readLine(socket: Socket): Promise<string> {
  return new Promise((resolve, reject) => {
    let buffer = "";
    const onData = (chunk: Buffer) => {
      buffer += chunk.toString("utf-8");
      const nl = buffer.indexOf("\n");
      if (nl >= 0) {
        socket.off("data", onData);
        socket.off("error", reject);
        resolve(buffer.slice(0, nl));
      }
    };
    socket.on("data", onData);
    socket.once("error", reject);
  });
}

describe.skipIf(!gatewayAvailable)("console against a live gateway", () => {
  let proc: ChildProcess;
  let baseUrl: string;
  let ingest: { host: string; port: number };
  let socket: Socket;
  let vm: DashboardViewModel;
  let controller: DashboardController;

  async function sendFrame(doc: unknown): Promise<{ status: string; seq?: number }> {
    const reply = readLine(socket);
    socket.write(`${JSON.stringify(doc)}\n`);
    return JSON.parse(await reply) as { status: string; seq?: number };
  }

  beforeAll(async () => {
    const dir = mkdtempSync(join(tmpdir(), "aquafloc-console-"));
    const configPath = join(dir, "config.json");
    writeFileSync(
      configPath,
      JSON.stringify({
        listen_addr: "127.0.0.1:0",
        store_path: join(dir, "telemetry.jsonl"),
        tick_ms: TICK_MS,
      }),
    );
    proc = spawn("python3", ["-m", "aquafloc", "serve", "--config", configPath], {
      stdio: ["ignore", "pipe", "pipe"],
    });
    const banner = await new Promise<string>((resolve, reject) => {
      let out = "";
      proc.stdout!.on("data", (chunk: Buffer) => {
        out += chunk.toString("utf-8");
        const nl = out.indexOf("\n");
        if (nl >= 0) {
          resolve(out.slice(0, nl));
        }
      });
      proc.once("exit", (code) => reject(new Error(`gateway exited early with code ${code}`)));
      setTimeout(() => reject(new Error("no banner from gateway")), 15_000);
    });
    const parsed = JSON.parse(banner) as { listening: string; ingest: string };
    baseUrl = `http://${parsed.listening}`;
    const [host, port] = parsed.ingest.split(":");
    ingest = { host: host!, port: Number(port) };

    socket = createConnection({ host: ingest.host, port: ingest.port });
    await new Promise<void>((resolve, reject) => {
      socket.once("connect", () => resolve());
      socket.once("error", reject);
    });
  }, 30_000);

  afterAll(async () => {
    controller?.stop();
    socket?.destroy();
    if (proc && proc.exitCode === null) {
      proc.kill("SIGINT");
      await new Promise((r) => {
        proc.once("exit", r);
        setTimeout(r, 5000);
      });
    }
  });

  it("shows the first ingested reading on connect", async () => {
    expect(await sendFrame(ROW1)).toEqual({ status: "ack", seq: 1 });

    vm = new DashboardViewModel({ tickMs: TICK_MS });
    controller = new DashboardController(baseUrl, vm, { sseOptions: { minBackoffMs: 100 } });
    await controller.connect();

    await waitFor(() => vm.latest !== null && vm.connection === "live", "initial snapshot + stream");
    expect(vm.latest).toMatchObject({
      seq: 1,
      temp_c: 25.56,
      ph: 8.1,
      tds_mg_l: 1752.0,
      ec_us_cm: 45.85,
      nh3_ppm: 5.95,
    });
    expect(vm.actuators.size).toBe(6);

    await waitFor(() => vm.condition === "Good", "first tick to classify");
    expect(vm.isStale()).toBe(false);
  }, 20_000);

  it("follows sample and tick events as new readings arrive", async () => {
    expect(await sendFrame(ROW2)).toEqual({ status: "ack", seq: 2 });
    await waitFor(() => vm.latest?.seq === 2, "sample event");
    expect(vm.latest?.temp_c).toBe(25.44);
    await waitFor(() => vm.lastTick?.ts === ROW2.ts, "tick event for the new sample");
    expect(vm.condition).toBe("Good");
    expect(vm.history.map((r) => r.seq)).toEqual([1, 2]);
  }, 20_000);

  it("reflects a forced-on heater as acknowledged by the server", async () => {
    const ok = await controller.setOverride("heater", "on");
    expect(ok).toBe(true);
    const heater = vm.actuators.get("heater");
    expect(heater?.mode).toBe("on");
    expect(heater?.effective).toBe(true);

    // Server truth agrees immediately, well within one tick period.
    const fromServer = await controller.api.actuators();
    expect(fromServer.find((s) => s.id === "heater")).toMatchObject({ mode: "on", effective: true });
  }, 20_000);

  it("a rejected POST reverts the switch to the acknowledged state", async () => {
    const ok = await controller.setOverride("heater", "sideways" as ActuatorMode);
    expect(ok).toBe(false);
    expect(vm.lastError).toContain("bad_mode");
    expect(vm.actuators.get("heater")?.mode).toBe("on"); // unchanged by the failure
  }, 20_000);

  it("releasing to auto hands the heater back to the rule engine", async () => {
    const ok = await controller.setOverride("heater", "auto");
    expect(ok).toBe(true);
    const heater = vm.actuators.get("heater");
    expect(heater?.mode).toBe("auto");
    expect(heater?.effective).toBe(false); // water is Good, rules say all off
  }, 20_000);
});
