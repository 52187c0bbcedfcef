# emitters.py
# Output formats: timeline CSV, mission report (text + JSON), survival-matrix dump
# and canonical scenario text

import csv
import io
import json
from dataclasses import fields, is_dataclass
from enum import Enum
from typing import Iterable, Optional, Tuple

from parsers.scenario_parser import ScenarioDocument
from sim.mission import MissionReport, Timeline
from trust.core import COMPONENTS, TrustComponent, TrustState
from trust.portability import ladder_savings
from trust.transition import SurvivalMatrixSet

TIMELINE_COLUMNS = ("t_s", "event", "active_rats", "s_id", "s_dev", "s_ctx", "s_net", "s_pol",
                    "composite", "energy_cum_mJ", "below_threshold")


def _f6(value: float) -> str:
    return f"{value:.6f}"


def emit_timeline(timeline: Timeline) -> str:
    """Timeline as CSV; one row per sample, header always present."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TIMELINE_COLUMNS)
    for sample in timeline.samples:
        state = [_f6(v) for v in sample.state.values] if sample.state is not None else [""] * len(COMPONENTS)
        writer.writerow([
            _f6(sample.t),
            sample.event,
            ";".join(sample.active_rats),
            *state,
            _f6(sample.composite),
            _f6(sample.energy_mJ),
            1 if sample.below_threshold else 0,
        ])
    return buffer.getvalue()


# Report --------------------------------------------------------------------

def _jsonable(value):
    if isinstance(value, TrustState):
        return value.as_dict()
    if isinstance(value, Enum):
        return value.value
    if is_dataclass(value) and not isinstance(value, type):
        data = {f.name: _jsonable(getattr(value, f.name)) for f in fields(value)}
        for extra in ("label", "alpha", "saving_pct", "delta", "cost_sources"):
            attr = getattr(type(value), extra, None)
            if isinstance(attr, property):
                data[extra] = _jsonable(getattr(value, extra))
        return data
    if isinstance(value, dict):
        return {str(_jsonable(k)): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (frozenset, set)):
        items = [_jsonable(v) for v in value]
        return sorted(items, key=str)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def report_json(report: MissionReport) -> str:
    return json.dumps(_jsonable(report), ensure_ascii=False, indent=2)


def _cell(value: Optional[float], fmt: str = "{:.1f}") -> str:
    return "-" if value is None else fmt.format(value)


def report_text(report: MissionReport) -> str:
    lines = [
        f"Scenario: {report.scenario}  (seed {report.seed}, {report.duration_min:g} min, T_min {report.t_min:g})",
        "",
        "Authentication ledger",
        f"  {'#':>2}  {'t (min)':>7}  {'transition':<24} {'kind':<13} {'naive mJ':>9} "
        f"{'portable mJ':>11} {'saving':>7}  source",
    ]
    portable_initial = report.initial_auth_mJ if report.total_auth_portable_mJ is not None else None
    lines.append(f"  {'':>2}  {0.0:>7.1f}  {'initial authentication':<24} {'':<13} "
                 f"{report.initial_auth_mJ:>9.1f} {_cell(portable_initial):>11} {'':>7}")
    for k, record in enumerate(report.crossings, start=1):
        saving = None if record.portable_cost_mJ is None else \
            100.0 * ladder_savings(record.cost_mJ, record.portable_cost_mJ)
        lines.append(
            f"  {k:>2}  {record.time / 60.0:>7.1f}  {record.label:<24} {record.kind.value:<13} "
            f"{record.cost_mJ:>9.1f} {_cell(record.portable_cost_mJ):>11} "
            f"{_cell(saving, '{:.1f}%'):>7}  {record.cost_source}")
    lines.append(
        f"  {'':>2}  {'':>7}  {'total':<24} {'':<13} {report.total_auth_naive_mJ:>9.1f} "
        f"{_cell(report.total_auth_portable_mJ):>11} {_cell(report.saving_pct, '{:.1f}%'):>7}")
    lines += [
        "",
        f"Continuous verification: {report.verification_count} checks, {report.verification_mJ:.1f} mJ",
        f"Energy spent (ledger + verification): {report.total_energy_mJ:.1f} mJ",
        f"Below T_min: {report.sub_threshold_minutes:.2f} min ({100.0 * report.sub_threshold_fraction:.1f}%)",
    ]
    if report.budget is not None:
        lines.append(f"Power budget: {report.budget.label}  "
                     f"(budget {report.budget.budget_mJ:.1f} mJ, spent {report.budget.total_mJ:.1f} mJ)")
    if report.trust_per_mW is not None:
        lines.append(f"Trust per mW: {report.trust_per_mW:.4f}")
    if report.parallel_composite_min is not None:
        lines.append(f"Parallel composite: min {report.parallel_composite_min:.4f}, "
                     f"mean {report.parallel_composite_mean:.4f}")
    if report.exploitations:
        lines.append(f"Exploited trust gaps: {report.exploitations}")

    unreachable = {r: c for r, (c, ok) in report.ceilings.items() if not ok}
    if unreachable:
        lines += ["", "RATs that cannot reach T_min (RAT-dependent threshold applies)"]
        for rat, ceiling in sorted(unreachable.items()):
            lines.append(f"  {rat:<12} ceiling {ceiling:.4f} -> threshold {min(report.t_min, ceiling):.4f}")

    if report.ladder:
        full = report.ladder[0]
        lines += ["", "Portability ladder (first transition)"]
        for rung in report.ladder:
            lines.append(
                f"  {rung.label:<36} {rung.energy_mJ:>8.1f} mJ {rung.latency_ms:>8.0f} ms  "
                f"saving {100.0 * ladder_savings(full.energy_mJ, rung.energy_mJ):5.1f}% / "
                f"{100.0 * ladder_savings(full.latency_ms, rung.latency_ms):5.1f}%")

    if report.flows:
        lines += ["", "Flows"]
        for flow in report.flows:
            low = _cell(flow.min_network_trust, "{:.3f}")
            lines.append(f"  {flow.flow_id:<14} on {flow.carried_on:<10} {flow.sensitivity:<6} "
                         f"min s_net {low}  flagged {flow.flagged_minutes:.2f} min  "
                         f"inactive {flow.inactive_minutes:.2f} min")

    if report.artefact_decisions or report.replays:
        lines += ["", "Trust artefacts"]
        for decision, count in report.artefact_decisions.items():
            lines.append(f"  {decision:<18} {count}")
        for label, decision in report.replays:
            lines.append(f"  replay {label}: {decision}")

    if report.discrepancies:
        lines += ["", "Published figures that disagree with the computation"]
        lines += [f"  {line}" for line in discrepancy_lines(report)]
    return "\n".join(lines) + "\n"


def discrepancy_lines(report: MissionReport) -> list:
    return [
        f"{d.metric}: published {d.published:g}, computed {d.computed:.4f} (delta {d.delta:+.4f})"
        for d in report.discrepancies
    ]


def emit_report(report: MissionReport) -> Tuple[str, str]:
    """(human-readable text, JSON document) for one mission report."""
    return report_text(report), report_json(report)


# Matrices and scenarios ------------------------------------------------------

def emit_matrices(matrices: SurvivalMatrixSet, components: Optional[Iterable[TrustComponent]] = None) -> str:
    """Survival matrices in the scenario grammar, one [survival] section per component."""
    chosen = list(components) if components else list(COMPONENTS)
    blocks = []
    for component in chosen:
        lines = [f"[survival {component.value}]"]
        for src in matrices.rats:
            for dst in matrices.rats:
                lines.append(f"{src}.{dst} = {matrices.sigma(component, src, dst):g}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def emit_scenario(document: ScenarioDocument) -> str:
    """Canonical scenario text: comments dropped, sections ordered, events sorted by time."""
    blocks = []
    for section in document.canonical_sections():
        lines = [section.header]
        lines += [f"{entry.key} = {entry.normalized}" for entry in section.entries]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n" if blocks else ""
