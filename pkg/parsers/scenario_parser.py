# scenario_parser.py
# Scenario-file parsing for zt-ratsim: line grammar, diagnostics and scenario assembly

import logging
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import settings
from errors import RatsimError, ScenarioError
from sim.adversary import AdversaryAction, ForceTransition, JamRat, ReplayArtefact, RogueRat
from sim.mission import (
    AdversaryEvent,
    CoverageEvent,
    DecayEvent,
    FlowEvent,
    IssueEvent,
    MissionScenario,
    RemoteIdEvent,
    RevokeEvent,
    TransitionEvent,
    validate_scenario,
)
from trust.composition import FlowAssignment, Sensitivity
from trust.core import COMPONENTS, RatProfile, TrustComponent, TrustState, WeightVector
from trust.portability import PortabilityConfig
from trust.transition import SurvivalMatrixSet, TransitionKind

logger = logging.getLogger(__name__)

SECTION_HEADER_PATTERN = re.compile(r"^\[\s*([A-Za-z-]+)(?:\s+(\S+?))?\s*\]$")
KEY_VALUE_PATTERN = re.compile(r"^([^=\s]+)\s*=\s*(.*)$")
RAT_ID_PATTERN = re.compile(r"^[A-Za-z0-9_-]+$")

SECTION_NAMES = ("mission", "rat", "survival", "portability", "flows", "triggers",
                 "trajectory", "published", "event")
CANONICAL_ORDER = {name: i for i, name in enumerate(SECTION_NAMES)}
SECTIONS_WITH_ARG = ("rat", "survival")
REPEATABLE = ("rat", "survival", "event")

MISSION_KEYS = (
    "name", "duration", "weights", "t_min", "verify_interval", "p_max", "p_flight",
    "p_payload", "p_comms", "seed", "initial_rat", "initial_state", "initial_auth",
    "parallel", "available", "composite", "device", "remote_id_weight", "silo_context",
)
RAT_KEYS = ("family", "ceiling", "reauth", "cost", "verify_energy", "decay", "shape",
            "latency", "mutual_auth", "trust_silo", "connected")
RAT_REQUIRED = ("family", "ceiling", "reauth", "cost")
PORTABILITY_KEYS = ("carry", "window", "improved", "verify_cost", "verify_latency",
                    "issuer", "ladder")

# event type -> (required keys, optional keys); "at" and "type" are always present
EVENT_KEYS: Dict[str, Tuple[Tuple[str, ...], Tuple[str, ...]]] = {
    "transition": (("to",), ("from", "kind", "cost", "portable_cost")),
    "jam": (("rat", "duration"), ()),
    "rogue": (("fake", "mimics"), ("duration",)),
    "replay": (("label",), ()),
    "force": (("target",), ()),
    "revoke": (("label",), ()),
    "issue": (("label", "component"), ()),
    "decay-event": (("name",), ()),
    "coverage": (("available",), ()),
    "remote-id": (("consistent",), ()),
    "flow": (("flow", "carrier", "sensitivity"), ()),
}

TRUE_WORDS = ("yes", "true", "on", "1")
FALSE_WORDS = ("no", "false", "off", "0")


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str       # "error" | "warning"
    line: int
    column: int
    message: str
    token: str = ""

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def __str__(self) -> str:
        where = f"{self.line}:{self.column}"
        suffix = f" ('{self.token}')" if self.token else ""
        return f"{where}: {self.severity}: {self.message}{suffix}"


@dataclass
class Entry:
    key: str
    value: str
    line: int
    column: int     # 1-based column where the value starts

    @property
    def normalized(self) -> str:
        return " ".join(self.value.split())


@dataclass
class Section:
    name: str
    arg: Optional[str]
    line: int
    entries: List[Entry] = field(default_factory=list)

    def get(self, key: str) -> Optional[Entry]:
        found = None
        for entry in self.entries:
            if entry.key == key:
                found = entry
        return found

    @property
    def header(self) -> str:
        return f"[{self.name} {self.arg}]" if self.arg else f"[{self.name}]"


def _event_time(section: Section) -> float:
    entry = section.get("at")
    try:
        value = float(entry.value) if entry else math.inf
    except ValueError:
        return math.inf
    return value if math.isfinite(value) else math.inf


@dataclass
class ScenarioDocument:
    """
    Syntactic view of a scenario file: ordered sections of key/value entries.

    Two documents are equal when their canonical forms are: comments, blank
    lines, whitespace and event order (stable by time) do not matter.
    """

    text: str
    sections: List[Section] = field(default_factory=list)

    def named(self, name: str) -> List[Section]:
        return [s for s in self.sections if s.name == name]

    def first(self, name: str) -> Optional[Section]:
        found = self.named(name)
        return found[0] if found else None

    def canonical_sections(self) -> List[Section]:
        events = sorted(self.named("event"), key=_event_time)
        others = sorted((s for s in self.sections if s.name != "event"),
                        key=lambda s: CANONICAL_ORDER.get(s.name, len(CANONICAL_ORDER)))
        return others + events

    def canonical(self) -> Tuple:
        return tuple(
            (s.name, s.arg, tuple((e.key, e.normalized) for e in s.entries))
            for s in self.canonical_sections()
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScenarioDocument):
            return NotImplemented
        return self.canonical() == other.canonical()


@dataclass
class ParseResult:
    document: Optional[ScenarioDocument]
    scenario: Optional[MissionScenario]
    diagnostics: List[ParseDiagnostic] = field(default_factory=list)

    @property
    def errors(self) -> List[ParseDiagnostic]:
        return [d for d in self.diagnostics if d.is_error]

    @property
    def ok(self) -> bool:
        return self.scenario is not None and not self.errors


# Syntax --------------------------------------------------------------------

def parse_document(text: Union[str, bytes]) -> Tuple[Optional[ScenarioDocument], List[ParseDiagnostic]]:
    """Split text into sections and entries; purely syntactic."""
    diagnostics: List[ParseDiagnostic] = []
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            diagnostics.append(ParseDiagnostic("error", 1, exc.start + 1, "input is not valid UTF-8"))
            return None, diagnostics
    if text.startswith("\ufeff"):
        text = text[1:]

    document = ScenarioDocument(text)
    current: Optional[Section] = None
    seen_single = set()
    for line_no, raw in enumerate(text.split("\n"), start=1):
        raw = raw.rstrip("\r")
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        indent = len(raw) - len(raw.lstrip())

        if line.startswith("["):
            match = SECTION_HEADER_PATTERN.match(line)
            if not match:
                diagnostics.append(ParseDiagnostic("error", line_no, indent + 1, "malformed section header", line))
                current = None
                continue
            name, arg = match.group(1).lower(), match.group(2)
            if name not in SECTION_NAMES:
                diagnostics.append(ParseDiagnostic("error", line_no, indent + 2, f"unknown section [{name}]", name))
                current = None
                continue
            if name in SECTIONS_WITH_ARG and not arg:
                diagnostics.append(ParseDiagnostic("error", line_no, indent + 1, f"[{name}] needs an identifier", line))
                current = None
                continue
            if name not in SECTIONS_WITH_ARG and arg:
                diagnostics.append(ParseDiagnostic("error", line_no, indent + 1, f"[{name}] takes no identifier", arg))
                current = None
                continue
            if name not in REPEATABLE:
                if name in seen_single:
                    diagnostics.append(ParseDiagnostic("error", line_no, indent + 1, f"duplicate [{name}] section", name))
                seen_single.add(name)
            current = Section(name, arg, line_no)
            document.sections.append(current)
            continue

        match = KEY_VALUE_PATTERN.match(line)
        if not match:
            diagnostics.append(ParseDiagnostic("error", line_no, indent + 1, "expected 'key = value'", line))
            continue
        if current is None:
            diagnostics.append(ParseDiagnostic("error", line_no, indent + 1, "entry outside any section", match.group(1)))
            continue
        key, value = match.group(1), match.group(2).strip()
        column = raw.find(value, indent + len(key)) + 1 if value else len(raw) + 1
        current.entries.append(Entry(key, value, line_no, max(column, 1)))
    return document, diagnostics


# Semantics -----------------------------------------------------------------

class _Builder:
    """Turns a document (plus defaults) into a MissionScenario, collecting diagnostics."""

    def __init__(self, document: ScenarioDocument, defaults: Optional[ScenarioDocument]):
        self.doc = document
        self.defaults = defaults
        self.diagnostics: List[ParseDiagnostic] = []

    # diagnostics helpers

    def error(self, line: int, column: int, message: str, token: str = "") -> None:
        self.diagnostics.append(ParseDiagnostic("error", line, column, message, token))

    def warn(self, line: int, column: int, message: str, token: str = "") -> None:
        self.diagnostics.append(ParseDiagnostic("warning", line, column, message, token))

    def convert(self, entry: Entry, fn: Callable[[str], object], default=None):
        try:
            return fn(entry.value)
        except (RatsimError, ValueError, KeyError) as exc:
            self.error(entry.line, entry.column, f"{entry.key}: {_message(exc)}", entry.value)
            return default

    def check_keys(self, section: Section, allowed: Sequence[str]) -> None:
        for entry in section.entries:
            if entry.key not in allowed:
                self.error(entry.line, 1, f"unknown key '{entry.key}' in {section.header}", entry.key)

    # build

    def build(self) -> Optional[MissionScenario]:
        mission = self.doc.first("mission")
        if mission is None:
            self.error(1, 1, "missing [mission] section")
            return None
        self.check_keys(mission, MISSION_KEYS)

        profiles, rat_lines = self.build_profiles()
        matrices = self.build_matrices(profiles)
        declared = set(profiles)

        def rat_ref(entry: Entry, value: str) -> str:
            if value not in declared:
                self.error(entry.line, entry.column, f"undeclared RAT '{value}'", value)
            return value

        fields = self.build_mission(mission, rat_ref)
        portability, ladder = self.build_portability()
        triggers = self.build_triggers()
        flows = self.build_flows(rat_ref)
        trajectory = self.build_trajectory()
        published = self.build_published()
        events = self.build_events(rat_ref)

        if any(d.is_error for d in self.diagnostics) or matrices is None or fields is None:
            return None
        try:
            scenario = MissionScenario(
                profiles=profiles, matrices=matrices, events=events, triggers=triggers,
                portability=portability, ladder=ladder, flows=flows, trajectory=trajectory,
                published=published, **fields)
        except (RatsimError, ValueError) as exc:
            self.error(mission.line, 1, _message(exc))
            return None
        for problem in validate_scenario(scenario):
            self.error(problem.line or mission.line, 1, problem.message)
        return None if any(d.is_error for d in self.diagnostics) else scenario

    def build_profiles(self) -> Tuple[Dict[str, RatProfile], Dict[str, int]]:
        merged: Dict[str, Dict[str, Entry]] = {}
        lines: Dict[str, int] = {}
        for section in (self.defaults.named("rat") if self.defaults else []):
            merged[section.arg] = {e.key: e for e in section.entries}
            lines[section.arg] = section.line
        seen = set()
        for section in self.doc.named("rat"):
            rat = section.arg
            if not RAT_ID_PATTERN.match(rat):
                self.error(section.line, 1, f"invalid RAT identifier '{rat}'", rat)
                continue
            if rat in seen:
                self.error(section.line, 1, f"duplicate rat_id '{rat}'", rat)
                continue
            seen.add(rat)
            self.check_keys(section, RAT_KEYS)
            merged.setdefault(rat, {}).update({e.key: e for e in section.entries})
            lines[rat] = section.line

        profiles: Dict[str, RatProfile] = {}
        for rat, entries in merged.items():
            missing = [k for k in RAT_REQUIRED if k not in entries]
            if missing:
                self.error(lines[rat], 1, f"[rat {rat}] is missing {', '.join(missing)}", rat)
                continue
            kwargs = {"rat_id": rat}
            ok = True
            for key, entry in entries.items():
                if key not in RAT_KEYS:
                    continue
                if key == "family":
                    value = entry.value.strip()
                elif key in ("mutual_auth", "trust_silo", "connected"):
                    value = self.convert(entry, _bool)
                elif key == "verify_energy":
                    value = self.convert(entry, _float)
                else:
                    value = self.convert(entry, _vector5)
                if value is None:
                    ok = False
                kwargs[key] = value
            if not ok:
                continue
            try:
                profiles[rat] = RatProfile(**kwargs)
            except (RatsimError, ValueError) as exc:
                self.error(lines[rat], 1, _message(exc), rat)
        return profiles, lines

    def build_matrices(self, profiles: Dict[str, RatProfile]) -> Optional[SurvivalMatrixSet]:
        cells: Dict[TrustComponent, Dict[Tuple[str, str], float]] = {}
        default_sections = self.defaults.named("survival") if self.defaults else []
        sections = default_sections + self.doc.named("survival")
        for position, section in enumerate(sections):
            try:
                component = TrustComponent.parse(section.arg)
            except RatsimError as exc:
                self.error(section.line, 1, _message(exc), section.arg)
                continue
            target = cells.setdefault(component, {})
            from_defaults = position < len(default_sections)
            for entry in section.entries:
                pair = entry.key.split(".")
                if len(pair) != 2:
                    self.error(entry.line, 1, "survival key must be <from>.<to>", entry.key)
                    continue
                if not from_defaults:
                    for rat in pair:
                        if rat not in profiles:
                            self.error(entry.line, 1, f"undeclared RAT '{rat}'", rat)
                value = self.convert(entry, _unit)
                if value is not None:
                    target[(pair[0], pair[1])] = value

        rats = list(profiles)
        known = set(rats)
        filtered = {c: {k: v for k, v in m.items() if k[0] in known and k[1] in known}
                    for c, m in cells.items()}
        try:
            return SurvivalMatrixSet.from_entries(rats, filtered)
        except (RatsimError, ValueError) as exc:
            line = sections[-1].line if sections else 1
            self.error(line, 1, _message(exc))
            return None

    def build_mission(self, mission: Section, rat_ref) -> Optional[dict]:
        def value(key, fn, default=None):
            entry = mission.get(key)
            return default if entry is None else self.convert(entry, fn, default)

        def required(key, fn):
            entry = mission.get(key)
            if entry is None:
                self.error(mission.line, 1, f"[mission] is missing '{key}'", key)
                return None
            return self.convert(entry, fn)

        fields = {
            "name": value("name", str.strip, "scenario"),
            "duration": required("duration", _positive),
            "weights": value("weights", _weights, WeightVector.named("com")),
            "t_min": value("t_min", _unit, 0.6),
            "verify_interval": value("verify_interval", _positive, 30.0),
            "seed": value("seed", _int, settings.DEFAULT_SEED),
            "initial_state": value("initial_state", lambda v: TrustState(_vector5(v))),
            "initial_auth": value("initial_auth", _non_negative, 0.0),
            "p_max": value("p_max", _float),
            "p_flight": value("p_flight", _float, 0.0),
            "p_payload": value("p_payload", _float, 0.0),
            "p_comms": value("p_comms", _float, 0.0),
            "composite_mode": value("composite", _composite_mode, "primary"),
            "device_id": value("device", str.strip, "uav-1"),
            "remote_id_weight": value("remote_id_weight", _unit, 0.02),
            "silo_context": value("silo_context", _unit, 0.5),
        }
        initial = mission.get("initial_rat")
        if initial is None:
            self.error(mission.line, 1, "[mission] is missing 'initial_rat'", "initial_rat")
            fields["initial_rat"] = None
        else:
            fields["initial_rat"] = rat_ref(initial, initial.value.strip())
        parallel = mission.get("parallel")
        fields["parallel"] = tuple(rat_ref(parallel, r) for r in _words(parallel.value)) if parallel else ()
        available = mission.get("available")
        fields["available"] = frozenset(rat_ref(available, r) for r in _words(available.value)) \
            if available else None
        if fields["duration"] is None or fields["initial_rat"] is None:
            return None
        return fields

    def build_portability(self) -> Tuple[PortabilityConfig, Tuple[frozenset, ...]]:
        section = self.doc.first("portability")
        if section is None:
            return PortabilityConfig(), ()
        self.check_keys(section, PORTABILITY_KEYS)

        def get(key, fn, default):
            entry = section.get(key)
            return default if entry is None else self.convert(entry, fn, default)

        carry = get("carry", _components, frozenset())
        improved = get("improved", _component_map, {})
        verify_cost = get("verify_cost", _component_map, {})
        verify_latency = get("verify_latency", _component_map, {})
        ladder = get("ladder", _ladder, ())
        try:
            config = PortabilityConfig(
                carry=carry, window_s=get("window", _positive, 300.0), improved=improved,
                verify_cost=verify_cost, verify_latency=verify_latency,
                issuer=get("issuer", str.strip, "mission-pdp"))
        except (RatsimError, ValueError) as exc:
            self.error(section.line, 1, _message(exc))
            return PortabilityConfig(), ()
        for rung in ladder:
            missing = [c.value for c in rung if c not in verify_cost]
            if missing:
                entry = section.get("ladder")
                self.error(entry.line, entry.column, f"ladder rung needs verify_cost for {', '.join(missing)}")
        return config, ladder

    def build_triggers(self) -> Dict[str, Tuple[float, ...]]:
        section = self.doc.first("triggers")
        triggers = {}
        for entry in (section.entries if section else []):
            factors = self.convert(entry, _unit_vector5)
            if factors is not None:
                triggers[entry.key] = factors
        return triggers

    def build_flows(self, rat_ref) -> List[FlowAssignment]:
        section = self.doc.first("flows")
        flows = []
        for entry in (section.entries if section else []):
            flow = self.convert(entry, lambda v: _flow(entry.key, v))
            if flow is None:
                continue
            if flow.carried_on != "data":
                rat_ref(entry, flow.carried_on)
            flows.append(flow)
        return flows

    def build_trajectory(self) -> List[Tuple[float, float]]:
        section = self.doc.first("trajectory")
        points = []
        for entry in (section.entries if section else []):
            if entry.key != "point":
                self.error(entry.line, 1, f"unknown key '{entry.key}' in [trajectory]", entry.key)
                continue
            point = self.convert(entry, _point)
            if point is not None:
                points.append(point)
        return points

    def build_published(self) -> Dict[str, str]:
        section = self.doc.first("published")
        published = {}
        for entry in (section.entries if section else []):
            if self.convert(entry, _float) is not None:
                published[entry.key] = entry.value.strip()
        return published

    def build_events(self, rat_ref) -> list:
        events = []
        last_at = -math.inf
        warned = False
        for section in self.doc.named("event"):
            kind_entry = section.get("type")
            at_entry = section.get("at")
            if kind_entry is None or at_entry is None:
                self.error(section.line, 1, "[event] needs 'at' and 'type'")
                continue
            event_type = kind_entry.value.strip().lower()
            if event_type not in EVENT_KEYS:
                self.error(kind_entry.line, kind_entry.column, f"unknown event type '{event_type}'", event_type)
                continue
            required, optional = EVENT_KEYS[event_type]
            self.check_keys(section, ("at", "type") + required + optional)
            missing = [k for k in required if section.get(k) is None]
            if missing:
                self.error(section.line, 1, f"{event_type} event is missing {', '.join(missing)}")
                continue
            at = self.convert(at_entry, _non_negative)
            if at is None:
                continue
            if at < last_at and not warned:
                self.warn(section.line, 1, "events are not in time order; sorted stably")
                logger.warning("Scenario events out of time order at line %d; sorting", section.line)
                warned = True
            last_at = max(last_at, at)
            event = self.build_event(event_type, at, section, rat_ref)
            if event is not None:
                events.append(event)
        return events

    def build_event(self, event_type: str, at: float, section: Section, rat_ref):
        def text(key):
            return section.get(key).value.strip()

        def rat(key):
            return rat_ref(section.get(key), text(key))

        def num(key, fn=_positive):
            entry = section.get(key)
            return None if entry is None else self.convert(entry, fn)

        line = section.line
        try:
            if event_type == "transition":
                kind_entry = section.get("kind")
                kind = self.convert(kind_entry, TransitionKind.parse) if kind_entry else TransitionKind.PLANNED
                src = rat("from") if section.get("from") else None
                return TransitionEvent(at, rat("to"), kind or TransitionKind.PLANNED, src,
                                       num("cost", _non_negative), num("portable_cost", _non_negative), line)
            if event_type == "jam":
                duration = num("duration")
                if duration is None:
                    return None
                return AdversaryEvent(AdversaryAction(at, JamRat(rat("rat"), duration)), line)
            if event_type == "rogue":
                return AdversaryEvent(AdversaryAction(at, RogueRat(text("fake"), rat("mimics"), num("duration"))), line)
            if event_type == "replay":
                return AdversaryEvent(AdversaryAction(at, ReplayArtefact(text("label"))), line)
            if event_type == "force":
                return AdversaryEvent(AdversaryAction(at, ForceTransition(rat("target"))), line)
            if event_type == "revoke":
                return RevokeEvent(at, text("label"), line)
            if event_type == "issue":
                component = self.convert(section.get("component"), TrustComponent.parse)
                return None if component is None else IssueEvent(at, text("label"), component, line)
            if event_type == "decay-event":
                return DecayEvent(at, text("name"), line)
            if event_type == "coverage":
                entry = section.get("available")
                return CoverageEvent(at, frozenset(rat_ref(entry, r) for r in _words(entry.value)), line)
            if event_type == "remote-id":
                consistent = self.convert(section.get("consistent"), _bool)
                return None if consistent is None else RemoteIdEvent(at, consistent, line)
            if event_type == "flow":
                sensitivity = self.convert(section.get("sensitivity"), Sensitivity.parse)
                carrier = text("carrier")
                if carrier != "data":
                    rat_ref(section.get("carrier"), carrier)
                if sensitivity is None:
                    return None
                return FlowEvent(at, FlowAssignment(text("flow"), carrier, sensitivity), line)
        except (RatsimError, ValueError) as exc:
            self.error(line, 1, _message(exc))
        return None


# Value converters ------------------------------------------------------------

def _message(exc: Exception) -> str:
    return str(exc).strip("'\"") if isinstance(exc, KeyError) else str(exc)


def _words(value: str) -> List[str]:
    return value.replace(",", " ").split()


def _float(value: str) -> float:
    number = float(value)
    if not math.isfinite(number):
        raise ValueError(f"'{value.strip()}' is not a finite number")
    return number


def _int(value: str) -> int:
    return int(value.strip())


def _positive(value: str) -> float:
    number = _float(value)
    if not number > 0:
        raise ValueError("must be > 0")
    return number


def _non_negative(value: str) -> float:
    number = _float(value)
    if number < 0:
        raise ValueError("must be >= 0")
    return number


def _unit(value: str) -> float:
    number = _float(value)
    if not 0.0 <= number <= 1.0:
        raise ValueError(f"{number:g} is outside [0,1]")
    return number


def _bool(value: str) -> bool:
    word = value.strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise ValueError(f"expected yes/no, got '{value.strip()}'")


def _vector5(value: str) -> Tuple[float, ...]:
    parts = value.split()
    if len(parts) != len(COMPONENTS):
        raise ValueError(f"expected {len(COMPONENTS)} values (id dev ctx net pol), got {len(parts)}")
    return tuple(_float(p) for p in parts)


def _unit_vector5(value: str) -> Tuple[float, ...]:
    _vector5(value)
    return tuple(_unit(p) for p in value.split())


def _weights(value: str) -> WeightVector:
    word = value.strip().lower()
    if word in ("def", "com", "uniform"):
        return WeightVector.named(word)
    return WeightVector(_vector5(value))


def _composite_mode(value: str) -> str:
    mode = value.strip().lower()
    if mode not in ("primary", "parallel"):
        raise ValueError(f"composite must be primary or parallel, got '{mode}'")
    return mode


def _components(value: str) -> frozenset:
    words = _words(value)
    if words == ["none"]:
        return frozenset()
    return frozenset(TrustComponent.parse(w) for w in words)


def _component_map(value: str) -> Dict[TrustComponent, float]:
    """Either a 5-vector or 'id:0.6 dev:0.9' pairs."""
    if ":" not in value:
        return {c: v for c, v in zip(COMPONENTS, _vector5(value)) if v > 0}
    result = {}
    for pair in _words(value):
        name, _, number = pair.partition(":")
        result[TrustComponent.parse(name)] = _non_negative(number)
    return result


def _ladder(value: str) -> Tuple[frozenset, ...]:
    rungs = tuple(_components(part) for part in value.split("|"))
    if any(not rung for rung in rungs):
        raise ValueError("every ladder rung needs at least one component")
    return rungs


def _flow(flow_id: str, value: str) -> FlowAssignment:
    parts = value.split()
    if len(parts) != 2:
        raise ValueError("flow needs '<carrier> <low|medium|high>'")
    return FlowAssignment(flow_id, parts[0], Sensitivity.parse(parts[1]))


def _point(value: str) -> Tuple[float, float]:
    parts = value.split()
    if len(parts) != 2:
        raise ValueError("point needs '<minute> <composite>'")
    return _non_negative(parts[0]), _unit(parts[1])


# Public API ------------------------------------------------------------------

@lru_cache(maxsize=4)
def _defaults_for(path: str) -> Optional[ScenarioDocument]:
    source = Path(path)
    if not source.exists():
        logger.warning("Defaults file %s not found; scenarios must declare every RAT", source)
        return None
    document, diagnostics = parse_document(source.read_text(encoding="utf-8"))
    errors = [d for d in diagnostics if d.is_error]
    if errors:
        raise ScenarioError(f"defaults file {source} is malformed", errors)
    return document


def load_defaults(path: Optional[Path] = None) -> Optional[ScenarioDocument]:
    return _defaults_for(str(path or settings.defaults_path()))


def parse_scenario(text: Union[str, bytes], defaults: Optional[ScenarioDocument] = None,
                   use_defaults: bool = True) -> ParseResult:
    """
    Parse and validate scenario text.

    Problems with the input never raise: they come back as diagnostics, and
    the result carries a MissionScenario only when there are no errors. A
    malformed defaults file is an installation problem and raises ScenarioError.
    """
    try:
        document, diagnostics = parse_document(text)
        if document is None:
            return ParseResult(None, None, diagnostics)
        if defaults is None and use_defaults:
            defaults = load_defaults()
        builder = _Builder(document, defaults)
        builder.diagnostics.extend(diagnostics)
        scenario = None if any(d.is_error for d in diagnostics) else builder.build()
        if scenario is None and not any(d.is_error for d in diagnostics) and not builder.diagnostics:
            builder.error(1, 1, "scenario could not be assembled")
        result = ParseResult(document, scenario, sorted(builder.diagnostics, key=lambda d: (d.line, d.column)))
    except ScenarioError:
        raise
    except Exception as e:
        logger.exception("Unexpected parser failure")
        return ParseResult(None, None, [ParseDiagnostic("error", 1, 1, f"internal parser error: {e}")])
    return result


def load_scenario(path: Union[str, Path], defaults: Optional[ScenarioDocument] = None) -> MissionScenario:
    """Read and validate a scenario file; raises ScenarioError with its diagnostics."""
    source = Path(path)
    try:
        text = source.read_bytes()
    except OSError as exc:
        raise ScenarioError(f"cannot read {source}: {exc.strerror}") from exc
    result = parse_scenario(text, defaults)
    for diagnostic in result.diagnostics:
        if not diagnostic.is_error:
            logger.warning("%s:%s", source, diagnostic)
    if not result.ok:
        raise ScenarioError(f"{source}: {len(result.errors)} error(s)", result.errors)
    return result.scenario
