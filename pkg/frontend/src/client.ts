// HTTP client for the control API plus the NDJSON stream consumer.
// Works in the browser and under Node (vitest, e2e) alike.

import { CommandAck, KpiSnapshot, StateSnapshot, StreamEvent } from "./types.js";
import { validFilter } from "./topics.js";

export class ApiError extends Error {
  constructor(readonly code: string, message: string) {
    super(message);
  }
}

let keyCounter = 0;

export function newIdempotencyKey(): string {
  keyCounter += 1;
  return `ui-${Date.now().toString(36)}-${keyCounter}-${Math.random().toString(36).slice(2, 8)}`;
}

const FAULT_KINDS = ["BREAKDOWN", "OVERHEAT", "FIRE"];
const POLICIES = ["idle_shutdown", "predictive_maintenance", "anomaly", "resource_opt"];

/** Client-side validation: a bad action never produces a request. */
export function validateCommand(kind: string, params: Record<string, any>,
                                machines: string[]): string | null {
  switch (kind) {
    case "fault":
      if (!machines.includes(params.machine)) return `unknown machine ${params.machine}`;
      if (!FAULT_KINDS.includes(params.fault_kind)) return `unknown fault kind ${params.fault_kind}`;
      if (params.repair_ticks !== undefined &&
          (!Number.isInteger(params.repair_ticks) || params.repair_ticks < 1)) {
        return "repair_ticks must be a positive integer";
      }
      return null;
    case "actuator":
      if (!machines.includes(params.machine)) return `unknown machine ${params.machine}`;
      if (!["sprinkler", "cooling", "mode", "rate_limit"].includes(params.actuator)) {
        return `unknown actuator ${params.actuator}`;
      }
      if (params.actuator === "mode" &&
          !["shutdown", "wake", "maintenance"].includes(params.action)) {
        return `unknown mode action ${params.action}`;
      }
      return null;
    case "policy":
      if (!POLICIES.includes(params.policy)) return `unknown policy ${params.policy}`;
      if (typeof params.updates !== "object" || params.updates === null) {
        return "updates must be an object";
      }
      return null;
    case "sim":
      if (!["pause", "resume", "speed"].includes(params.action)) {
        return `unknown action ${params.action}`;
      }
      if (params.action === "speed" &&
          (typeof params.speed !== "number" || !(params.speed > 0))) {
        return "speed must be a positive number";
      }
      return null;
    default:
      return `unknown command ${kind}`;
  }
}

/**
 * Collapses duplicate submissions (double clicks): while an action is in
 * flight, a repeat reuses the same idempotency key, so the server applies
 * once and acknowledges the repeat with "already-applied".
 */
export class CommandGate {
  private pending = new Map<string, string>();

  async run<R>(actionSig: string,
               send: (key: string) => Promise<R>): Promise<R> {
    let key = this.pending.get(actionSig);
    const owner = key === undefined;
    if (key === undefined) {
      key = newIdempotencyKey();
      this.pending.set(actionSig, key);
    }
    try {
      return await send(key);
    } finally {
      if (owner) this.pending.delete(actionSig);
    }
  }
}

export class ApiClient {
  constructor(readonly base: string) {}

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(`${this.base}${path}`);
    if (!res.ok) throw new ApiError(`http-${res.status}`, await res.text());
    return (await res.json()) as T;
  }

  state(): Promise<StateSnapshot> {
    return this.get("/api/v1/state");
  }

  kpis(): Promise<KpiSnapshot> {
    return this.get("/api/v1/kpis");
  }

  private async post(path: string, body: Record<string, any>): Promise<CommandAck> {
    const res = await fetch(`${this.base}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = await res.json();
    if (!res.ok) {
      // surface the server's rejection verbatim, never retried
      throw new ApiError(payload.code ?? `http-${res.status}`,
                         payload.message ?? "request rejected");
    }
    return payload as CommandAck;
  }

  injectFault(machine: string, faultKind: string, key: string,
              repairTicks?: number): Promise<CommandAck> {
    const body: Record<string, any> = {
      machine, fault_kind: faultKind, idempotency_key: key,
    };
    if (repairTicks !== undefined) body.repair_ticks = repairTicks;
    return this.post("/api/v1/faults", body);
  }

  overrideActuator(machine: string, params: Record<string, any>,
                   key: string): Promise<CommandAck> {
    return this.post(`/api/v1/actuators/${machine}`,
                     { ...params, idempotency_key: key });
  }

  setPolicy(policy: string, updates: Record<string, unknown>,
            key: string): Promise<CommandAck> {
    return this.post("/api/v1/policies",
                     { policy, updates, idempotency_key: key });
  }

  simControl(action: string, key: string, speed?: number): Promise<CommandAck> {
    const body: Record<string, any> = { action, idempotency_key: key };
    if (speed !== undefined) body.speed = speed;
    return this.post("/api/v1/sim", body);
  }
}

export interface StreamHandlers {
  onEvent: (e: StreamEvent) => void;
  onStatus: (s: "connecting" | "live" | "reconnecting") => void;
}

export class StreamConsumer {
  private abort: AbortController | null = null;
  private stopped = false;
  private backoffMs = 250;
  lastSeq = 0;

  constructor(readonly base: string, readonly filter: string,
              readonly handlers: StreamHandlers,
              readonly resumeWithSince = true) {
    if (!validFilter(filter)) throw new ApiError("bad-filter", `invalid filter ${filter}`);
  }

  start(): void {
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.abort?.abort();
  }

  /** Drop the connection without stopping: the loop reconnects. */
  interrupt(): void {
    this.abort?.abort();
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      this.handlers.onStatus(this.lastSeq ? "reconnecting" : "connecting");
      try {
        await this.consumeOnce();
      } catch {
        // fall through to backoff; aborts land here too
      }
      if (this.stopped) return;
      await new Promise((r) => setTimeout(r, this.backoffMs));
      this.backoffMs = Math.min(this.backoffMs * 2, 5000);
    }
  }

  private async consumeOnce(): Promise<void> {
    this.abort = new AbortController();
    const since = this.resumeWithSince && this.lastSeq > 0
      ? `&since=${this.lastSeq}` : "";
    const url = `${this.base}/api/v1/stream?filter=${encodeURIComponent(this.filter)}${since}`;
    const res = await fetch(url, { signal: this.abort.signal });
    if (!res.ok || !res.body) throw new ApiError(`http-${res.status}`, "stream failed");
    this.handlers.onStatus("live");
    this.backoffMs = 250;

    const reader = res.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let nl;
      while ((nl = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, nl).trim();
        buffer = buffer.slice(nl + 1);
        if (!line) continue;
        const event = JSON.parse(line) as StreamEvent;
        if (event.seq > this.lastSeq) this.lastSeq = event.seq;
        this.handlers.onEvent(event);
      }
    }
  }
}
