// Console boot: one stream connection, polled snapshots, four scopes,
// the baseline-vs-optimized energy comparison, and the control panel.

import { ApiClient, StreamConsumer } from "./client.js";
import { ControlPanel, el } from "./controls.js";
import { EnergyComparePanel, ScopePanel } from "./panels.js";
import { ConsoleStore } from "./store.js";

const base = window.location.origin;
const api = new ApiClient(base);
const store = new ConsoleStore();

function toast(msg: string, error = false): void {
  const box = document.getElementById("toast")!;
  const note = el("div", error ? "toast-item error" : "toast-item", msg);
  box.append(note);
  setTimeout(() => note.remove(), 4000);
}

function canvas(id: string): HTMLCanvasElement {
  return document.getElementById(id) as HTMLCanvasElement;
}

const panels = [
  new ScopePanel(canvas("scope-energy"), store, "ENERGY", "W"),
  new ScopePanel(canvas("scope-temperature"), store, "TEMPERATURE", "degC", [
    { value: 78, label: "band", color: "#ffd54f" },
    { value: 90, label: "cooling", color: "#ff8a65" },
  ]),
  new ScopePanel(canvas("scope-pressure"), store, "PRESSURE", "kPa", [
    { value: 262, label: "max", color: "#ff8a65" },
  ]),
  new ScopePanel(canvas("scope-fire"), store, "FIRE", "", [
    { value: 60, label: "sprinkler", color: "#ff5252" },
  ]),
];
const compare = new EnergyComparePanel(canvas("scope-compare"), store);
const controls = new ControlPanel(document.getElementById("controls")!, store,
                                  api, toast);

function renderHeader(): void {
  const k = store.kpis;
  const hdr = document.getElementById("kpis")!;
  if (!k) {
    hdr.textContent = "waiting for data";
    return;
  }
  const fmt = (v: number | null) => (v === null ? "n/a" : `${v.toFixed(1)}%`);
  hdr.innerHTML = "";
  hdr.append(
    el("span", "kpi", `tick ${k.tick}`),
    el("span", "kpi delta", `energy -${fmt(k.reductions_pct.energy)}`),
    el("span", "kpi delta", `downtime -${fmt(k.reductions_pct.downtime)}`),
    el("span", "kpi delta", `waste -${fmt(k.reductions_pct.waste)}`),
    el("span", `conn ${store.connection}${store.gap ? " gap" : ""}`,
       store.connection + (store.gap ? " (gap)" : "")),
  );
}

const stream = new StreamConsumer(base, "plant/#", {
  onEvent: (e) => store.applyEvent(e),
  onStatus: (s) => store.setConnection(s),
});
stream.start();

async function poll(): Promise<void> {
  try {
    store.applySnapshot(await api.state());
    store.applyKpis(await api.kpis());
  } catch {
    // degraded state is visible via the stream indicator; keep polling
  }
}
void poll();
setInterval(poll, 1000);

let controlsDirty = true;
store.onChange(() => {
  controlsDirty = true;
});

setInterval(() => {
  for (const p of panels) p.draw();
  compare.draw();
  renderHeader();
  if (controlsDirty) {
    controlsDirty = false;
    controls.render();
  }
}, 120);
