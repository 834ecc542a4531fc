import { DashboardController } from "./controller.js";
import { buildUi, render } from "./render.js";
import { DashboardViewModel } from "./viewmodel.js";

// Entry point. The gateway address comes from ?api=http://host:port, falling
// back to the page's own origin (the usual case when the console is served
// next to the API). ?tick=<ms> must match the gateway's tick_ms for the
// staleness flag to be meaningful.

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? window.location.origin;
const tickMs = Number(params.get("tick") ?? "500") || 500;

const root = document.querySelector<HTMLElement>("#app")!;
const vm = new DashboardViewModel({ tickMs });
const controller = new DashboardController(baseUrl, vm);

buildUi(root, vm, controller);
vm.onChange(() => render(root, vm));
render(root, vm);

// The stale flag depends on wall time, not just on incoming events.
window.setInterval(() => render(root, vm), 1000);

void controller.connect();
