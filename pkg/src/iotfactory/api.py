"""Live control service: monitor and steer a running simulation over HTTP.

A background thread advances the live (optimized) simulation in wall time
scaled by a speed factor, with a shadow baseline (same seed, all policies
off) stepped in lockstep so reduction percentages are observable live.

All mutation funnels through the engines' serialized command queues;
reads serve immutable tick-boundary snapshots. Fault injections apply to
both twins at the same tick (they are world events, part of the paired
scenario); policy changes and actuator overrides touch only the live run.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import replace
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .analytics import PolicySet
from .config import ConfigError, ResolvedConfig, load_config
from .core import ExternalCommand, Simulation
from .scenario import TraceWriter
from .transport import TopicError, topic_matches, validate_filter

UJ_PER_WH = 3_600_000_000
MIRRORED_KINDS = {"fault-injection", "sim-control"}  # world events hit both twins


def _wh(uj: int) -> float:
    return round(uj / UJ_PER_WH, 3)


def _reduction(base: float, live: float) -> float | None:
    if base <= 0:
        return None
    return round(100.0 * (base - live) / base, 3)


class LiveSession:
    """Owns the paired live/shadow engines and the pacing loop."""

    def __init__(self, cfg: ResolvedConfig, speed: float | None = None,
                 trace_path: str | Path | None = None,
                 retention: int = 20000, heartbeat_s: float = 5.0):
        self.cfg = cfg
        self._trace_fh = None
        trace = None
        if trace_path is not None:
            self._trace_fh = open(trace_path, "w", encoding="utf-8", newline="\n")
            trace = TraceWriter(self._trace_fh, cfg.tick_ms)

        self.live = Simulation(cfg, cfg.policies, trace=trace,
                               event_tap=self._tap)
        self.shadow = Simulation(cfg, cfg.policies.all_disabled())

        self.speed = speed if speed and speed > 0 else 1.0 / cfg.tick_duration_s
        self.paused = False
        self.finished = False
        self._stop = threading.Event()
        self._lock = threading.Lock()

        self._seq = 0
        self._ring: list[tuple[int, dict]] = []
        self._retention = retention
        self._subscribers: list[queue.Queue] = []
        self.heartbeat_s = heartbeat_s

        self._idempotency: dict[str, dict] = {}
        self._pending: list[tuple[ExternalCommand, bool]] = []
        self.command_log: list[dict] = []

        self.latest_snapshot = self._build_snapshot()
        self.latest_kpis = self._build_kpis()
        self._thread: threading.Thread | None = None

    # -- events ---------------------------------------------------------------

    def _tap(self, event: dict) -> None:
        self._seq += 1
        entry = (self._seq, event)
        self._ring.append(entry)
        if len(self._ring) > self._retention:
            del self._ring[: len(self._ring) // 10]
        for q in list(self._subscribers):
            q.put(entry)

    def subscribe(self, filt: str, since: int | None):
        validate_filter(filt)
        q: queue.Queue = queue.Queue()
        backlog = []
        with self._lock:
            if since is not None:
                backlog = [e for e in self._ring if e[0] > since]
            self._subscribers.append(q)
        return q, backlog

    def unsubscribe(self, q) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    # -- commands ---------------------------------------------------------------

    def submit(self, kind: str, params: dict, idempotency_key: str | None):
        """Returns (http_status, body)."""
        if idempotency_key:
            prior = self._idempotency.get(idempotency_key)
            if prior is not None:
                return 200, {**prior, "status": "already-applied"}
        cmd = ExternalCommand(kind=kind, params=params, issued_at=time.time())
        ok, msg = self.live.submit(cmd)
        if not ok:
            return 400, {"code": "bad-command", "message": msg}
        with self._lock:
            self._pending.append((cmd, kind in MIRRORED_KINDS))
        if kind == "sim-control":
            self._apply_sim_control(params)
        body = {"status": "accepted", "kind": kind}
        if idempotency_key:
            self._idempotency[idempotency_key] = body
        return 200, body

    def _apply_sim_control(self, params: dict) -> None:
        action = params.get("action")
        if action == "pause":
            self.paused = True
        elif action == "resume":
            self.paused = False
        elif action == "speed":
            s = params.get("speed")
            if isinstance(s, (int, float)) and s > 0:
                self.speed = float(s)

    def _mirror_applied_commands(self) -> None:
        with self._lock:
            pending, self._pending = self._pending, []
        for cmd, mirrored in pending:
            if cmd.apply_at_tick is None:
                # not yet drained by the live engine; keep waiting
                with self._lock:
                    self._pending.append((cmd, mirrored))
                continue
            if mirrored:
                self.shadow.submit(replace(cmd))
            self.command_log.append({"kind": cmd.kind, "params": cmd.params,
                                     "apply_at_tick": cmd.apply_at_tick,
                                     "source": cmd.source})

    # -- pacing loop --------------------------------------------------------------

    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, daemon=True,
                                        name="sim-loop")
        self._thread.start()

    def _loop(self) -> None:
        while not self._stop.is_set():
            if self.paused or self.live.clock.tick >= self.cfg.ticks:
                if self.live.clock.tick >= self.cfg.ticks and not self.finished:
                    self.finished = True
                    self._close_trace()
                time.sleep(0.005)
                continue
            start = time.perf_counter()
            self.live.step()
            self._mirror_applied_commands()
            self.shadow.step()
            self.latest_snapshot = self._build_snapshot()
            self.latest_kpis = self._build_kpis()
            # speed is ticks per wall second; default is real time
            wait = (1.0 / self.speed) - (time.perf_counter() - start)
            if wait > 0:
                self._stop.wait(wait)

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5)
        self._close_trace()

    def _close_trace(self) -> None:
        if self._trace_fh is not None:
            self._trace_fh.close()
            self._trace_fh = None

    def save_session(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.command_log, indent=2) + "\n",
                              encoding="utf-8")

    # -- views ----------------------------------------------------------------------

    def _build_kpis(self) -> dict:
        lt = self.live.kpi_totals()
        st = self.shadow.kpi_totals()
        return {
            "tick": self.live.clock.tick,
            "live": {"energy_wh": _wh(lt["e"]), "downtime_ticks": lt["dt"],
                     "material_waste_units": lt["w"], "units_produced": lt["u"]},
            "shadow_baseline": {"energy_wh": _wh(st["e"]),
                                "downtime_ticks": st["dt"],
                                "material_waste_units": st["w"],
                                "units_produced": st["u"]},
            "reductions_pct": {
                "energy": _reduction(st["e"], lt["e"]),
                "downtime": _reduction(st["dt"], lt["dt"]),
                "waste": _reduction(st["w"], lt["w"]),
            },
        }

    def _build_snapshot(self) -> dict:
        snap = self.live.snapshot()
        snap["status"] = ("finished" if self.live.clock.tick >= self.cfg.ticks
                          else "paused" if self.paused else "running")
        snap["speed"] = self.speed
        return snap

    def state(self) -> dict:
        snap = dict(self.latest_snapshot)
        snap["status"] = ("finished" if self.finished
                          else "paused" if self.paused else "running")
        snap["kpis"] = self.latest_kpis
        return snap


def create_app(session: LiveSession, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="iotfactory control API", docs_url=None, redoc_url=None)

    @app.get("/api/v1/state")
    def get_state():
        return session.state()

    @app.get("/api/v1/kpis")
    def get_kpis():
        return session.latest_kpis

    @app.get("/api/v1/stream")
    def stream(filter: str = "plant/#", since: int | None = None):
        try:
            q, backlog = session.subscribe(filter, since)
        except TopicError as e:
            return JSONResponse(status_code=400,
                                content={"code": "bad-filter", "message": str(e)})

        def gen():
            try:
                for seq, event in backlog:
                    if topic_matches(filter, event["topic"]):
                        yield json.dumps({"seq": seq, **event},
                                         separators=(",", ":")) + "\n"
                while True:
                    try:
                        seq, event = q.get(timeout=session.heartbeat_s)
                    except queue.Empty:
                        yield json.dumps({"seq": session._seq,
                                          "event": "heartbeat",
                                          "tick": session.live.clock.tick},
                                         separators=(",", ":")) + "\n"
                        continue
                    if topic_matches(filter, event["topic"]):
                        yield json.dumps({"seq": seq, **event},
                                         separators=(",", ":")) + "\n"
            finally:
                session.unsubscribe(q)

        return StreamingResponse(gen(), media_type="application/x-ndjson")

    def _command(kind: str, params: dict, idempotency_key: str | None):
        status, body = session.submit(kind, params, idempotency_key)
        return JSONResponse(status_code=status, content=body)

    @app.post("/api/v1/policies")
    async def post_policies(request: Request):
        body = await request.json()
        return _command("policy-change",
                        {"policy": body.get("policy"),
                         "updates": body.get("updates")},
                        body.get("idempotency_key"))

    @app.post("/api/v1/faults")
    async def post_faults(request: Request):
        body = await request.json()
        params = {"machine": body.get("machine"),
                  "fault_kind": body.get("fault_kind", "BREAKDOWN")}
        if body.get("repair_ticks") is not None:
            params["repair_ticks"] = body["repair_ticks"]
        return _command("fault-injection", params, body.get("idempotency_key"))

    @app.post("/api/v1/actuators/{machine_id}")
    async def post_actuator(machine_id: str, request: Request):
        body = await request.json()
        params = {"machine": machine_id, "actuator": body.get("actuator")}
        for key in ("on", "action", "factor_milli"):
            if body.get(key) is not None:
                params[key] = body[key]
        return _command("actuator-override", params, body.get("idempotency_key"))

    @app.post("/api/v1/sim")
    async def post_sim(request: Request):
        body = await request.json()
        params = {"action": body.get("action")}
        if body.get("speed") is not None:
            params["speed"] = body["speed"]
        return _command("sim-control", params, body.get("idempotency_key"))

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(config_path: str | Path, port: int, seed: int | None = None,
          host: str = "127.0.0.1", speed: float | None = None,
          session_out: str | Path | None = None,
          ui_dir: str | Path | None = None) -> None:
    import uvicorn

    cfg = load_config(config_path, seed_override=seed)
    session = LiveSession(cfg, speed=speed)
    if ui_dir is None:
        candidate = Path(config_path).resolve().parent / "frontend" / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    app = create_app(session, ui_dir=ui_dir)
    session.start()
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        session.stop()
        if session_out:
            session.save_session(session_out)
