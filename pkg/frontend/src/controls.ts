// Control surfaces: policy toggles, machine grid with fault/actuator
// buttons, sim controls. Every action issues exactly one command with a
// fresh idempotency key via the gate; UI state reflects server acks only.

import { ApiClient, ApiError, CommandGate, validateCommand } from "./client.js";
import { ConsoleStore } from "./store.js";

export class ControlPanel {
  readonly gate = new CommandGate();

  constructor(readonly root: HTMLElement, readonly store: ConsoleStore,
              readonly api: ApiClient,
              readonly toast: (msg: string, error?: boolean) => void) {}

  render(): void {
    const pol = this.store.policies;
    const machines = Object.keys(this.store.machines).sort();
    this.root.innerHTML = "";
    this.root.append(this.policySection(pol), this.simSection(),
                     this.machineGrid(machines));
  }

  private act(sig: string, kind: string, params: Record<string, any>,
              send: (key: string) => Promise<any>): void {
    const error = validateCommand(kind, params, Object.keys(this.store.machines));
    if (error) {
      this.toast(`invalid: ${error}`, true);
      return;
    }
    void this.gate.run(sig, send)
      .then((ack) => this.toast(`${ack.status}: ${sig}`))
      .catch((e: unknown) => {
        const msg = e instanceof ApiError ? `${e.code}: ${e.message}` : String(e);
        this.toast(msg, true);
      });
  }

  private policySection(pol: Record<string, Record<string, unknown>>): HTMLElement {
    const box = el("div", "panel-box");
    box.append(el("h3", "", "Policies"));
    for (const name of Object.keys(pol)) {
      const row = el("div", "policy-row");
      const cb = document.createElement("input");
      cb.type = "checkbox";
      cb.checked = !!pol[name].enabled;
      cb.id = `pol-${name}`;
      cb.addEventListener("change", () => {
        this.act(`policy/${name}/${cb.checked}`, "policy",
                 { policy: name, updates: { enabled: cb.checked } },
                 (key) => this.api.setPolicy(name, { enabled: cb.checked }, key));
      });
      const label = document.createElement("label");
      label.htmlFor = cb.id;
      label.textContent = name;
      row.append(cb, label);
      box.append(row);
    }
    return box;
  }

  private simSection(): HTMLElement {
    const box = el("div", "panel-box");
    box.append(el("h3", "", "Simulation"));
    const status = el("div", "sim-status",
                      `${this.store.status} @ ${this.store.speed} ticks/s`);
    box.append(status);
    for (const action of ["pause", "resume"] as const) {
      const btn = el("button", "", action) as HTMLButtonElement;
      btn.addEventListener("click", () => {
        this.act(`sim/${action}`, "sim", { action },
                 (key) => this.api.simControl(action, key));
      });
      box.append(btn);
    }
    const speed = document.createElement("input");
    speed.type = "number";
    speed.value = String(this.store.speed);
    speed.min = "0.1";
    speed.step = "10";
    const apply = el("button", "", "set speed") as HTMLButtonElement;
    apply.addEventListener("click", () => {
      const value = Number(speed.value);
      this.act(`sim/speed/${value}`, "sim", { action: "speed", speed: value },
               (key) => this.api.simControl("speed", key, value));
    });
    box.append(speed, apply);
    return box;
  }

  private machineGrid(machines: string[]): HTMLElement {
    const box = el("div", "panel-box");
    box.append(el("h3", "", "Machines"));
    const grid = el("div", "machine-grid");
    for (const mid of machines) {
      const m = this.store.machines[mid];
      const card = el("div", `machine-card mode-${m.mode.toLowerCase()}`);
      card.append(el("div", "machine-name",
                     `${mid}${m.essential ? " *" : ""}`));
      card.append(el("div", "machine-mode", m.mode));
      const badges = el("div", "badges");
      if (m.sprinkler_on) badges.append(el("span", "badge fire", "SPRINKLER"));
      if (m.cooling_on) badges.append(el("span", "badge cool", "COOLING"));
      card.append(badges);
      card.append(el("div", "machine-stats",
                     `${m.power_w.toFixed(0)} W  ${m.temperature_c.toFixed(1)} C  ` +
                     `${m.units_produced} u / ${m.units_defective} def`));
      const actions = el("div", "machine-actions");
      actions.append(
        this.machineButton(mid, "fault", () => this.act(
          `fault/${mid}`, "fault", { machine: mid, fault_kind: "BREAKDOWN" },
          (key) => this.api.injectFault(mid, "BREAKDOWN", key))),
        this.machineButton(mid, "fire", () => this.act(
          `fire/${mid}`, "fault", { machine: mid, fault_kind: "FIRE" },
          (key) => this.api.injectFault(mid, "FIRE", key))),
        this.machineButton(mid, m.cooling_on ? "cool off" : "cool on", () => this.act(
          `cool/${mid}/${!m.cooling_on}`, "actuator",
          { machine: mid, actuator: "cooling", on: !m.cooling_on },
          (key) => this.api.overrideActuator(mid, { actuator: "cooling", on: !m.cooling_on }, key))),
        this.machineButton(mid, "wake", () => this.act(
          `wake/${mid}`, "actuator", { machine: mid, actuator: "mode", action: "wake" },
          (key) => this.api.overrideActuator(mid, { actuator: "mode", action: "wake" }, key))),
        this.machineButton(mid, "shutdown", () => this.act(
          `shutdown/${mid}`, "actuator", { machine: mid, actuator: "mode", action: "shutdown" },
          (key) => this.api.overrideActuator(mid, { actuator: "mode", action: "shutdown" }, key))),
      );
      card.append(actions);
      grid.append(card);
    }
    box.append(grid);
    return box;
  }

  private machineButton(mid: string, label: string,
                        onClick: () => void): HTMLButtonElement {
    const btn = el("button", "mini", label) as HTMLButtonElement;
    btn.addEventListener("click", onClick);
    return btn;
  }
}

export function el(tag: string, cls = "", text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text) node.textContent = text;
  return node;
}
