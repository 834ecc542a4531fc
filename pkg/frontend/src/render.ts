import { ACTUATOR_IDS, type ActuatorId, type ActuatorMode, type StoredRecord } from "./types.js";
import type { DashboardController } from "./controller.js";
import type { DashboardViewModel } from "./viewmodel.js";

// DOM layer. Everything here is a readout of the view model; the only way
// back into the system is the three-position switches, which go through
// controller.setOverride and render whatever the server acknowledges.

const ACTUATOR_LABELS: Record<ActuatorId, string> = {
  oxygen_pump: "Oxygen pump",
  cooling_fan: "Cooling fan",
  heater: "Heater",
  water_filter: "Water filter",
  acid_doser: "Acid doser",
  base_doser: "Base doser",
};

const MODES: ActuatorMode[] = ["auto", "on", "off"];

function fmt(value: number | undefined, digits: number): string {
  return value === undefined ? "--" : value.toFixed(digits);
}

function fmtTime(ts: number | undefined): string {
  if (ts === undefined) {
    return "--:--:--";
  }
  return new Date(ts).toLocaleTimeString();
}

function sparkline(records: StoredRecord[], pick: (r: StoredRecord) => number): string {
  if (records.length < 2) {
    return "";
  }
  const values = records.map(pick);
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1;
  const step = 100 / (values.length - 1);
  const points = values
    .map((v, i) => `${(i * step).toFixed(1)},${(26 - ((v - lo) / span) * 24).toFixed(1)}`)
    .join(" ");
  return `<svg viewBox="0 0 100 28" preserveAspectRatio="none"><polyline points="${points}" /></svg>`;
}

export function buildUi(root: HTMLElement, vm: DashboardViewModel, controller: DashboardController): void {
  root.innerHTML = `
    <header>
      <h1>aquafloc console</h1>
      <span id="conn" class="badge"></span>
      <span id="stale" class="badge warn" hidden>stale</span>
    </header>
    <div id="banner" class="banner"></div>
    <div id="error" class="error" hidden></div>
    <section class="gauges" id="gauges"></section>
    <section class="charts" id="charts"></section>
    <section class="actuators" id="actuators"></section>
  `;

  root.querySelector<HTMLElement>("#actuators")!.addEventListener("click", (ev) => {
    const button = (ev.target as HTMLElement).closest<HTMLButtonElement>("button[data-id]");
    if (!button || button.disabled) {
      return;
    }
    void controller.setOverride(button.dataset.id as ActuatorId, button.dataset.mode as ActuatorMode);
  });
  root.querySelector<HTMLElement>("#error")!.addEventListener("click", () => vm.clearError());
}

export function render(root: HTMLElement, vm: DashboardViewModel): void {
  const conn = root.querySelector<HTMLElement>("#conn")!;
  conn.textContent = vm.connection;
  conn.className = `badge ${vm.connection === "live" ? "ok" : "warn"}`;

  root.querySelector<HTMLElement>("#stale")!.hidden = !vm.isStale();

  const banner = root.querySelector<HTMLElement>("#banner")!;
  if (vm.condition === null) {
    banner.className = "banner";
    banner.textContent = "waiting for data";
  } else {
    banner.className = `banner ${vm.condition === "Good" ? "good" : "bad"}`;
    const rules = vm.firedRules.length > 0 ? ` (${vm.firedRules.join(", ")})` : "";
    banner.textContent = `water condition: ${vm.condition}${rules}`;
  }

  const errorBox = root.querySelector<HTMLElement>("#error")!;
  errorBox.hidden = vm.lastError === null;
  errorBox.textContent = vm.lastError === null ? "" : `${vm.lastError} (click to dismiss)`;

  const s = vm.latest ?? undefined;
  root.querySelector<HTMLElement>("#gauges")!.innerHTML = `
    <div class="gauge"><span class="value">${fmt(s?.temp_c, 2)}</span><span class="unit">°C</span></div>
    <div class="gauge"><span class="value">${fmt(s?.ph, 2)}</span><span class="unit">pH</span></div>
    <div class="gauge"><span class="value">${fmt(s?.tds_mg_l, 0)}</span><span class="unit">TDS mg/L</span></div>
    <div class="gauge"><span class="value">${fmt(s?.ec_us_cm, 2)}</span><span class="unit">EC µS/cm</span></div>
    <div class="gauge"><span class="value">${fmt(s?.nh3_ppm, 2)}</span><span class="unit">NH3 ppm</span></div>
    <div class="gauge"><span class="value">${fmtTime(s?.ts)}</span><span class="unit">${s?.device_id ?? "no device"}</span></div>
  `;

  root.querySelector<HTMLElement>("#charts")!.innerHTML = `
    <div class="chart"><label>temp</label>${sparkline(vm.history, (r) => r.temp_c)}</div>
    <div class="chart"><label>pH</label>${sparkline(vm.history, (r) => r.ph)}</div>
    <div class="chart"><label>TDS</label>${sparkline(vm.history, (r) => r.tds_mg_l)}</div>
  `;

  const rows = ACTUATOR_IDS.map((id) => {
    const state = vm.actuators.get(id);
    const pending = vm.pending.has(id);
    const buttons = MODES.map((mode) => {
      const active = state?.mode === mode ? " active" : "";
      const disabled = pending || state === undefined ? " disabled" : "";
      return `<button data-id="${id}" data-mode="${mode}" class="mode${active}"${disabled}>${mode}</button>`;
    }).join("");
    const dot = state?.effective ? "on" : "off";
    return `
      <div class="actuator${pending ? " pending" : ""}">
        <span class="dot ${dot}"></span>
        <span class="name">${ACTUATOR_LABELS[id]}</span>
        <span class="switch">${buttons}</span>
      </div>
    `;
  });
  root.querySelector<HTMLElement>("#actuators")!.innerHTML = rows.join("");
}
