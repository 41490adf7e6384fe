"""Scenario execution: paired baseline/optimized runs and trace files.

A trace is JSON-Lines: a header record, then per-tick records in a fixed
within-tick order. Two runs of the same (config, seed, mode) produce
byte-identical files; nothing wall-clock-dependent is ever written.

`run_scenario` always cross-checks the engine's in-run KPI accumulators
against a streaming recomputation from the emitted records whenever
records are produced, so a corrupt trace pipeline fails loudly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .analytics import PolicySet
from .config import ConfigError, ResolvedConfig, load_config, resolve_config
from .core import ExternalCommand, Simulation

__all__ = ["RunResult", "TraceError", "run_scenario", "KpiRecomputer",
           "iter_trace", "write_trace_line"]


class TraceError(Exception):
    """Trace is inconsistent with itself or with the run that produced it."""


@dataclass
class RunResult:
    header: dict
    totals: dict                      # e (uJ), dt, w, u, d, x
    per_machine: dict[str, dict]      # per machine: e, dt, u, d, x, sched_ticks
    trace_path: Path | None
    sim: Simulation | None = None


class KpiRecomputer:
    """Recomputes KPI totals from trace records, independent of the engine.

    Energy is summed as power_mw * tick_ms per machine-state record, the
    same exact integer arithmetic the accumulators use, so agreement must
    be exact, not approximate.
    """

    def __init__(self):
        self.header: dict | None = None
        self.tick_ms = 1000
        self.energy_uj: dict[str, int] = {}
        self.downtime: dict[str, int] = {}
        self.produced: dict[str, int] = {}
        self.defective: dict[str, int] = {}
        self.scrapped: dict[str, int] = {}
        self.sched_ticks: dict[str, int] = {}
        self.final_kpi: dict | None = None

    def consume(self, rec: dict) -> None:
        kind = rec.get("k")
        if kind == "ms":
            mid = rec["id"]
            self.energy_uj[mid] = self.energy_uj.get(mid, 0) + rec["p"] * self.tick_ms
            self.produced[mid] = self.produced.get(mid, 0) + rec["u"]
            self.defective[mid] = self.defective.get(mid, 0) + rec["d"]
            self.scrapped[mid] = self.scrapped.get(mid, 0) + rec["x"]
            if rec["ds"] > 0:
                self.sched_ticks[mid] = self.sched_ticks.get(mid, 0) + 1
                if rec["mo"] in ("FAULTED", "MAINTENANCE"):
                    self.downtime[mid] = self.downtime.get(mid, 0) + 1
        elif kind == "kpi":
            self.final_kpi = rec
        elif kind == "hdr":
            self.header = rec
            self.tick_ms = rec["tick_ms"]

    def totals(self) -> dict:
        return {"e": sum(self.energy_uj.values()),
                "dt": sum(self.downtime.values()),
                "w": sum(self.defective.values()) + sum(self.scrapped.values()),
                "u": sum(self.produced.values()),
                "d": sum(self.defective.values()),
                "x": sum(self.scrapped.values())}

    def per_machine(self) -> dict[str, dict]:
        out = {}
        for mid in self.energy_uj:
            out[mid] = {"e": self.energy_uj.get(mid, 0),
                        "dt": self.downtime.get(mid, 0),
                        "u": self.produced.get(mid, 0),
                        "d": self.defective.get(mid, 0),
                        "x": self.scrapped.get(mid, 0),
                        "sched_ticks": self.sched_ticks.get(mid, 0)}
        return out

    def verify_final(self) -> None:
        """The embedded running accumulator must equal the recomputation."""
        if self.final_kpi is None:
            raise TraceError("trace carries no kpi record")
        mine = self.totals()
        for key in ("e", "dt", "w", "u"):
            if mine[key] != self.final_kpi[key]:
                raise TraceError(
                    f"trace kpi record disagrees with recomputation on {key!r}: "
                    f"{self.final_kpi[key]} vs {mine[key]}")


def write_trace_line(rec: dict) -> str:
    return json.dumps(rec, separators=(",", ":"), ensure_ascii=False)


class TraceWriter:
    """Streams trace records to a file while recomputing KPIs on the fly.

    Machine-state records are formatted directly (fixed schema, floats at
    three decimals) because they dominate the file; everything else goes
    through json.dumps. Output is byte-stable for a given run.
    """

    def __init__(self, fh, tick_ms: int):
        self.fh = fh
        self.recomputer = KpiRecomputer()
        self.recomputer.tick_ms = tick_ms

    def record(self, rec: dict) -> None:
        self.fh.write(write_trace_line(rec))
        self.fh.write("\n")
        self.recomputer.consume(rec)

    def machine_state(self, t: int, mid: str, mode: str, p_mw: int, u: int,
                      d: int, x: int, ds: int, temp: float, press: float,
                      wear: float, cool: int, spr: int, fire: float) -> None:
        self.fh.write(
            f'{{"k":"ms","t":{t},"id":"{mid}","mo":"{mode}","p":{p_mw},'
            f'"u":{u},"d":{d},"x":{x},"ds":{ds},"T":{temp:.3f},"P":{press:.3f},'
            f'"w":{wear:.3f},"c":{cool},"s":{spr},"f":{fire:.3f}}}\n')
        r = self.recomputer
        r.energy_uj[mid] = r.energy_uj.get(mid, 0) + p_mw * r.tick_ms
        r.produced[mid] = r.produced.get(mid, 0) + u
        r.defective[mid] = r.defective.get(mid, 0) + d
        r.scrapped[mid] = r.scrapped.get(mid, 0) + x
        if ds > 0:
            r.sched_ticks[mid] = r.sched_ticks.get(mid, 0) + 1
            if mode == "FAULTED" or mode == "MAINTENANCE":
                r.downtime[mid] = r.downtime.get(mid, 0) + 1

    def reading(self, t: int, sensor_id: str, machine_id: str, kind: str,
                value: float, seq: int) -> None:
        self.fh.write(
            f'{{"k":"rd","t":{t},"id":"{sensor_id}","m":"{machine_id}",'
            f'"kind":"{kind}","v":{value:.3f},"n":{seq}}}\n')


def iter_trace(path: str | Path) -> Iterable[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def run_scenario(cfg: ResolvedConfig | str | Path, mode: str,
                 seed: int | None = None,
                 trace_path: str | Path | None = None,
                 commands: list[dict] | None = None) -> RunResult:
    """Execute one full run. mode='baseline' forces every policy off."""
    if mode not in ("baseline", "optimized"):
        raise ValueError(f"mode must be 'baseline' or 'optimized', not {mode!r}")
    if not isinstance(cfg, ResolvedConfig):
        cfg = load_config(cfg, seed_override=seed)
    elif seed is not None and seed != cfg.seed:
        cfg = resolve_config(cfg.raw, seed_override=seed)

    policies = cfg.policies if mode == "optimized" else cfg.policies.all_disabled()

    writer = None
    fh = None
    if trace_path is not None:
        trace_path = Path(trace_path)
        trace_path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fh = open(trace_path, "w", encoding="utf-8", newline="\n")
        except OSError as e:
            raise TraceError(f"cannot write trace to {trace_path}: {e}") from e
        writer = TraceWriter(fh, cfg.tick_ms)

    sim = Simulation(cfg, policies, trace=writer)
    if commands:
        for c in commands:
            cmd = ExternalCommand(kind=c["kind"], params=c.get("params", {}),
                                  apply_at_tick=c.get("apply_at_tick"),
                                  source=c.get("source", "external"))
            ok, msg = sim.submit(cmd)
            if not ok:
                raise ValueError(f"bad replay command: {msg}")
    try:
        sim.run()
    finally:
        if fh is not None:
            fh.close()

    totals = sim.kpi_totals()
    per_machine = {mid: {"e": sim.energy_uj[mid], "dt": sim.downtime[mid],
                         "u": sim.produced[mid], "d": sim.defective[mid],
                         "x": sim.scrapped[mid],
                         "sched_ticks": sim.sched_ticks[mid]}
                   for mid in sim.machine_ids}
    header = {"k": "hdr", "v": 1, "hash": cfg.config_hash, "seed": cfg.seed,
              "ticks": cfg.ticks, "tick_ms": cfg.tick_ms}

    if writer is not None:
        writer.recomputer.verify_final()
        mine = writer.recomputer.totals()
        if mine != totals:
            raise TraceError(f"in-run accumulators {totals} disagree with "
                             f"trace recomputation {mine}")

    return RunResult(header=header, totals=totals, per_machine=per_machine,
                     trace_path=trace_path, sim=sim)
