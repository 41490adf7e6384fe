"""KPI computation over paired runs and report export.

Reductions follow 100 * (baseline - optimized) / baseline with the sign
preserved: a regression reports negative, never clamped. Traces from
different configs or seeds refuse to pair.

Exports are byte-stable: JSON with sorted keys and floats quantized to
three decimals, CSV with a fixed header and %.3f formatting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .scenario import KpiRecomputer, RunResult, iter_trace

__all__ = ["PairingError", "ScenarioTotals", "KpiReport", "compute_kpis",
           "render_report_json", "render_report_csv", "export_report"]

UJ_PER_WH = 3_600_000_000  # 1 Wh = 3.6e9 microjoule (mW*ms)


class PairingError(Exception):
    """The two traces do not come from the same config and seed."""


@dataclass
class ScenarioTotals:
    energy_uj: int
    downtime_ticks: int
    material_waste_units: int
    units_produced: int
    units_defective: int
    units_scrapped: int
    sched_ticks: int

    @property
    def energy_wh(self) -> float:
        return self.energy_uj / UJ_PER_WH

    @property
    def uptime_fraction(self) -> float:
        if self.sched_ticks == 0:
            return 1.0
        return 1.0 - self.downtime_ticks / self.sched_ticks

    @property
    def good_units_per_kwh(self) -> float:
        kwh = self.energy_uj / UJ_PER_WH / 1000.0
        if kwh == 0:
            return 0.0
        return (self.units_produced - self.units_defective) / kwh


@dataclass
class KpiReport:
    config_hash: str
    seed: int
    baseline: ScenarioTotals
    optimized: ScenarioTotals
    energy_reduction_pct: float | None
    downtime_reduction_pct: float | None
    waste_reduction_pct: float | None
    per_machine_energy_uj: dict[str, dict[str, int]]


def _reduction(baseline: float, optimized: float) -> float | None:
    if baseline <= 0:
        return None
    return 100.0 * (baseline - optimized) / baseline


def _totals_from(source) -> tuple[dict, dict, dict]:
    """(header, totals, per_machine) from a RunResult or a trace file."""
    if isinstance(source, RunResult):
        return source.header, source.totals, source.per_machine
    rec = KpiRecomputer()
    for record in iter_trace(source):
        rec.consume(record)
    if rec.header is None:
        raise PairingError(f"{source}: trace has no header record")
    rec.verify_final()
    totals = rec.totals()
    return rec.header, totals, rec.per_machine()


def compute_kpis(baseline, optimized) -> KpiReport:
    """Pair two completed runs (RunResult or trace path) into one report."""
    bh, bt, bm = _totals_from(baseline)
    oh, ot, om = _totals_from(optimized)
    if bh["hash"] != oh["hash"]:
        raise PairingError(f"config hash mismatch: {bh['hash']} vs {oh['hash']}")
    if bh["seed"] != oh["seed"]:
        raise PairingError(f"seed mismatch: {bh['seed']} vs {oh['seed']}")
    if bh["ticks"] != oh["ticks"]:
        raise PairingError(f"run length mismatch: {bh['ticks']} vs {oh['ticks']}")

    def totals(t, pm) -> ScenarioTotals:
        return ScenarioTotals(
            energy_uj=t["e"], downtime_ticks=t["dt"], material_waste_units=t["w"],
            units_produced=t["u"], units_defective=t["d"], units_scrapped=t["x"],
            sched_ticks=sum(m["sched_ticks"] for m in pm.values()))

    base = totals(bt, bm)
    opt = totals(ot, om)
    per_machine = {}
    for mid in sorted(set(bm) | set(om)):
        per_machine[mid] = {"baseline": bm.get(mid, {}).get("e", 0),
                            "optimized": om.get(mid, {}).get("e", 0)}
    return KpiReport(
        config_hash=bh["hash"], seed=bh["seed"], baseline=base, optimized=opt,
        energy_reduction_pct=_reduction(base.energy_uj, opt.energy_uj),
        downtime_reduction_pct=_reduction(base.downtime_ticks, opt.downtime_ticks),
        waste_reduction_pct=_reduction(base.material_waste_units,
                                       opt.material_waste_units),
        per_machine_energy_uj=per_machine)


def _r3(x: float | None):
    return None if x is None else round(x, 3)


def report_dict(report: KpiReport) -> dict:
    def side(t: ScenarioTotals) -> dict:
        return {"energy_wh": _r3(t.energy_wh),
                "downtime_ticks": t.downtime_ticks,
                "material_waste_units": t.material_waste_units,
                "units_produced": t.units_produced,
                "units_defective": t.units_defective,
                "units_scrapped": t.units_scrapped,
                "uptime_fraction": _r3(t.uptime_fraction),
                "good_units_per_kwh": _r3(t.good_units_per_kwh)}

    return {
        "config_hash": report.config_hash,
        "seed": report.seed,
        "baseline": side(report.baseline),
        "optimized": side(report.optimized),
        "reductions_pct": {
            "energy": _r3(report.energy_reduction_pct),
            "downtime": _r3(report.downtime_reduction_pct),
            "waste": _r3(report.waste_reduction_pct),
        },
        "per_machine_energy_wh": {
            mid: {"baseline": _r3(v["baseline"] / UJ_PER_WH),
                  "optimized": _r3(v["optimized"] / UJ_PER_WH)}
            for mid, v in report.per_machine_energy_uj.items()
        },
    }


def render_report_json(report: KpiReport) -> str:
    return json.dumps(report_dict(report), indent=2, sort_keys=True) + "\n"


def render_report_csv(report: KpiReport) -> str:
    b, o = report.baseline, report.optimized
    rows = [
        ("energy_wh", b.energy_wh, o.energy_wh),
        ("downtime_ticks", b.downtime_ticks, o.downtime_ticks),
        ("material_waste_units", b.material_waste_units, o.material_waste_units),
        ("units_produced", b.units_produced, o.units_produced),
        ("uptime_fraction", b.uptime_fraction, o.uptime_fraction),
        ("good_units_per_kwh", b.good_units_per_kwh, o.good_units_per_kwh),
    ]
    lines = ["metric,baseline,optimized,reduction_pct"]
    for name, bv, ov in rows:
        red = _reduction(float(bv), float(ov))
        red_s = f"{red:.3f}" if red is not None else ""
        lines.append(f"{name},{bv:.3f},{ov:.3f},{red_s}")
    return "\n".join(lines) + "\n"


def export_report(report: KpiReport, path: str | Path, fmt: str = "json") -> None:
    if fmt not in ("json", "csv"):
        raise ValueError(f"unknown report format {fmt!r}")
    text = render_report_json(report) if fmt == "json" else render_report_csv(report)
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8", newline="\n")
    except OSError as e:
        raise OSError(f"cannot write report to {p}: {e}") from e
