# mission.py
# Discrete-event mission loop: decay between events, boundary crossings,
# continuous verification, energy ledger and threshold exposure

import bisect
import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from errors import ConfigurationError, ScenarioError, ValidationError
from sim.adversary import (
    AdversaryAction,
    ForceTransition,
    ForcedTransition,
    JamRat,
    RadioEnvironment,
    ReplayArtefact,
    ReplayOutcome,
    RogueRat,
    TrustGap,
    apply_action,
    exploitation_effect,
    rogue_cap,
    sample_trust_gap,
)
from sim.rng import get_rng
from trust.composition import (
    FlowAssignment,
    ParallelLinkSet,
    flagged_flows,
    parallel_compose,
    per_flow_network_trust,
)
from trust.core import (
    COMPONENTS,
    DecayParams,
    RatProfile,
    TrustComponent,
    TrustState,
    WeightVector,
    apply_event_decay,
    clamp_to_ceiling,
    composite_score,
    decay,
    threshold_reachability,
    trust_ceiling,
)
from trust.portability import (
    ArtefactDecision,
    PortabilityConfig,
    ReplayCache,
    RevocationList,
    TrustArtefact,
    derive_key,
    issue_artefact,
    ladder_savings,
    portable_recovery_cost,
    portable_recovery_latency,
    recovery_latency,
    validate_artefact,
)
from trust.transition import (
    CrossingRecord,
    SurvivalMatrixSet,
    TransitionKind,
    apply_crossing,
    apply_survival,
    cost_multiplier,
    recover,
    recovery_cost,
)

logger = logging.getLogger(__name__)

MS_PER_MINUTE = 60_000
SAMPLE_CADENCE_MS = 1_000
DEFAULT_SILO_CONTEXT = 0.5
DEFAULT_REMOTE_ID_WEIGHT = 0.02
REMOTE_ID_MISMATCH_FACTOR = 0.5


def to_ms(seconds: float) -> int:
    return int(round(seconds * 1000))


# Scenario events ---------------------------------------------------------

@dataclass(frozen=True)
class TransitionEvent:
    at: float
    to: str
    kind: TransitionKind = TransitionKind.PLANNED
    src: Optional[str] = None
    cost: Optional[float] = None            # naive cost override (mJ)
    portable_cost: Optional[float] = None   # portable cost override (mJ)
    line: int = 0


@dataclass(frozen=True)
class RevokeEvent:
    at: float
    label: str
    line: int = 0


@dataclass(frozen=True)
class IssueEvent:
    at: float
    label: str
    component: TrustComponent
    line: int = 0


@dataclass(frozen=True)
class DecayEvent:
    at: float
    name: str
    line: int = 0


@dataclass(frozen=True)
class CoverageEvent:
    at: float
    available: FrozenSet[str]
    line: int = 0


@dataclass(frozen=True)
class RemoteIdEvent:
    at: float
    consistent: bool
    line: int = 0


@dataclass(frozen=True)
class FlowEvent:
    at: float
    flow: FlowAssignment
    line: int = 0


@dataclass(frozen=True)
class AdversaryEvent:
    action: AdversaryAction
    line: int = 0

    @property
    def at(self) -> float:
        return self.action.at


ScenarioEvent = Union[TransitionEvent, RevokeEvent, IssueEvent, DecayEvent, CoverageEvent,
                      RemoteIdEvent, FlowEvent, AdversaryEvent]


@dataclass
class MissionScenario:
    name: str
    duration: float                     # minutes
    weights: WeightVector
    t_min: float
    verify_interval: float              # seconds
    profiles: Dict[str, RatProfile]
    matrices: SurvivalMatrixSet
    initial_rat: str
    seed: int = 42
    events: List[ScenarioEvent] = field(default_factory=list)
    initial_state: Optional[TrustState] = None
    initial_auth: float = 0.0           # mJ
    p_max: Optional[float] = None       # mW
    p_flight: float = 0.0
    p_payload: float = 0.0
    p_comms: float = 0.0
    parallel: Tuple[str, ...] = ()
    available: Optional[FrozenSet[str]] = None
    composite_mode: str = "primary"
    device_id: str = "uav-1"
    triggers: Dict[str, Tuple[float, ...]] = field(default_factory=dict)
    portability: PortabilityConfig = field(default_factory=PortabilityConfig)
    ladder: Tuple[FrozenSet[TrustComponent], ...] = ()
    flows: List[FlowAssignment] = field(default_factory=list)
    trajectory: List[Tuple[float, float]] = field(default_factory=list)   # (minute, composite)
    published: Dict[str, str] = field(default_factory=dict)
    remote_id_weight: float = DEFAULT_REMOTE_ID_WEIGHT
    silo_context: float = DEFAULT_SILO_CONTEXT

    def __post_init__(self):
        if not self.duration > 0:
            raise ValidationError("mission duration must be > 0")
        if not self.verify_interval > 0:
            raise ValidationError("verify_interval must be > 0")
        if self.composite_mode not in ("primary", "parallel"):
            raise ValidationError(f"unknown composite mode '{self.composite_mode}'")
        # Stable sort keeps file order for simultaneous events
        self.events = sorted(self.events, key=lambda e: to_ms(e.at))

    @property
    def duration_ms(self) -> int:
        return int(round(self.duration * MS_PER_MINUTE))

    @property
    def transitions(self) -> List[TransitionEvent]:
        return [e for e in self.events if isinstance(e, TransitionEvent)]

    def decay_params(self) -> DecayParams:
        return DecayParams.from_profiles(self.profiles, self.triggers)


# Results -----------------------------------------------------------------

@dataclass(frozen=True)
class TimelineSample:
    t_ms: int
    event: str
    active_rats: Tuple[str, ...]
    state: Optional[TrustState]
    composite: float
    energy_mJ: float
    below_threshold: bool

    @property
    def t(self) -> float:
        return self.t_ms / 1000.0


@dataclass
class Timeline:
    t_min: float
    duration_ms: int
    samples: List[TimelineSample] = field(default_factory=list)
    # (t_ms, composite) including both sides of every instantaneous drop
    trace: List[Tuple[int, float]] = field(default_factory=list)

    def append(self, sample: TimelineSample) -> None:
        if self.samples:
            last = self.samples[-1]
            if sample.t_ms <= last.t_ms:
                raise ValidationError("timeline samples must be strictly increasing in time")
            if sample.energy_mJ < last.energy_mJ:
                raise ValidationError("cumulative energy cannot decrease")
        self.samples.append(sample)

    def points(self) -> List[Tuple[int, float]]:
        return self.trace or [(s.t_ms, s.composite) for s in self.samples]

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class BudgetVerdict:
    feasible: bool
    budget_mJ: float
    total_mJ: float
    deficit_mJ: float = 0.0

    @property
    def label(self) -> str:
        return "Feasible" if self.feasible else f"Infeasible({self.deficit_mJ:.1f} mJ)"


@dataclass(frozen=True)
class Discrepancy:
    metric: str
    published: float
    computed: float
    tolerance: float

    @property
    def delta(self) -> float:
        return self.computed - self.published


@dataclass(frozen=True)
class FlowSummary:
    flow_id: str
    carried_on: str
    sensitivity: str
    min_network_trust: Optional[float]
    flagged_minutes: float
    inactive_minutes: float


@dataclass(frozen=True)
class LadderRung:
    carried: FrozenSet[TrustComponent]
    energy_mJ: float
    latency_ms: float

    @property
    def label(self) -> str:
        if not self.carried:
            return "full re-authentication"
        return "portable " + " + ".join(c.value for c in COMPONENTS if c in self.carried)


@dataclass
class MissionReport:
    scenario: str
    seed: int
    duration_min: float
    t_min: float
    initial_auth_mJ: float
    crossings: List[CrossingRecord]
    total_auth_naive_mJ: float
    total_auth_portable_mJ: Optional[float]
    verification_count: int
    verification_mJ: float
    total_energy_mJ: float
    sub_threshold_minutes: float
    sub_threshold_fraction: float
    budget: Optional[BudgetVerdict]
    discrepancies: List[Discrepancy] = field(default_factory=list)
    artefact_decisions: Dict[str, int] = field(default_factory=dict)
    replays: List[Tuple[str, str]] = field(default_factory=list)
    exploitations: int = 0
    flows: List[FlowSummary] = field(default_factory=list)
    ceilings: Dict[str, Tuple[float, bool]] = field(default_factory=dict)
    ladder: List[LadderRung] = field(default_factory=list)
    parallel_composite_min: Optional[float] = None
    parallel_composite_mean: Optional[float] = None
    trust_per_mW: Optional[float] = None
    metrics: Dict[str, float] = field(default_factory=dict)

    @property
    def saving_pct(self) -> Optional[float]:
        if self.total_auth_portable_mJ is None:
            return None
        return 100.0 * ladder_savings(self.total_auth_naive_mJ, self.total_auth_portable_mJ)

    @property
    def cost_sources(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for record in self.crossings:
            counts[record.cost_source] = counts.get(record.cost_source, 0) + 1
        return counts


# Ledger helpers ------------------------------------------------------------

def mission_energy(records: Iterable[CrossingRecord], initial_auth: float,
                   verifications: Iterable[float] = (), portable: bool = False) -> float:
    """
    Initial authentication + every crossing's recovery cost + verification ticks.

    portable selects the portable column where a crossing has one.
    """
    total = float(initial_auth)
    for record in records:
        if portable and record.portable_cost_mJ is not None:
            total += record.portable_cost_mJ
        else:
            total += record.cost_mJ
    return total + float(math.fsum(verifications))


def verification_count(duration_min: float, verify_interval_s: float) -> int:
    return int(to_ms(duration_min * 60) // to_ms(verify_interval_s))


def budget_check(scenario: MissionScenario, total_auth_mJ: float) -> BudgetVerdict:
    """
    P_auth = P_max − P_flight − P_payload − P_comms; the mission is feasible when
    its authentication energy fits in P_auth · duration (bound inclusive).
    """
    if scenario.p_max is None:
        raise ConfigurationError("budget check needs p_max")
    p_auth = scenario.p_max - scenario.p_flight - scenario.p_payload - scenario.p_comms
    budget = p_auth * scenario.duration * 60.0  # mW · s = mJ
    if p_auth < 0:
        logger.warning("Negative authentication power budget (%.1f mW) in %s", p_auth, scenario.name)
        return BudgetVerdict(False, budget, total_auth_mJ, total_auth_mJ)
    if total_auth_mJ > budget:
        return BudgetVerdict(False, budget, total_auth_mJ, total_auth_mJ - budget)
    return BudgetVerdict(True, budget, total_auth_mJ)


def _below_ms(points: Sequence[Tuple[int, float]], t_min: float, end_ms: int) -> float:
    """Time (ms) the piecewise-linear curve spends strictly below t_min."""
    below = 0.0
    for (t0, v0), (t1, v1) in zip(points, points[1:]):
        if t1 <= t0:
            continue
        low0, low1 = v0 < t_min, v1 < t_min
        if low0 and low1:
            below += t1 - t0
        elif low0 or low1:
            crossing = t0 + (t_min - v0) / (v1 - v0) * (t1 - t0)
            below += (crossing - t0) if low0 else (t1 - crossing)
    t_last, v_last = points[-1]
    if end_ms > t_last and v_last < t_min:
        below += end_ms - t_last
    return below


def sub_threshold_exposure(timeline: Timeline, t_min: Optional[float] = None) -> Tuple[float, float]:
    """(minutes, fraction of mission) with the composite below t_min."""
    points = timeline.points()
    if not points:
        raise ValidationError("exposure needs a non-empty timeline")
    threshold = timeline.t_min if t_min is None else t_min
    end_ms = max(timeline.duration_ms, points[-1][0])
    below = _below_ms(points, threshold, end_ms)
    return below / MS_PER_MINUTE, (below / end_ms if end_ms else 0.0)


def _time_average(points: Sequence[Tuple[int, float]], end_ms: int) -> float:
    area = 0.0
    for (t0, v0), (t1, v1) in zip(points, points[1:]):
        area += 0.5 * (v0 + v1) * (t1 - t0)
    t_last, v_last = points[-1]
    if end_ms > t_last:
        area += v_last * (end_ms - t_last)
    return area / end_ms if end_ms else points[-1][1]


def _decimals(text: str) -> int:
    mantissa = text.strip().lower().split("e")[0]
    return len(mantissa.split(".")[1]) if "." in mantissa else 0


def compare_published(metrics: Mapping[str, float], published: Mapping[str, str]) -> List[Discrepancy]:
    """
    Published figures that disagree with the computed ones.

    A figure matches when it equals the computed value rounded to the number of
    decimals it was printed with.
    """
    found = []
    for metric, text in published.items():
        if metric not in metrics:
            logger.warning("Published metric '%s' is not computed by this scenario", metric)
            continue
        value = float(text)
        tolerance = 0.5 * 10 ** (-_decimals(text))
        computed = metrics[metric]
        if abs(computed - value) > tolerance + 1e-12:
            found.append(Discrepancy(metric, value, computed, tolerance))
    return found


# Simulation ----------------------------------------------------------------

@dataclass
class _Link:
    rat: str
    anchor: TrustState
    anchor_ms: int
    rogue: Optional[str] = None

    def at(self, t_ms: int, params: DecayParams) -> TrustState:
        return decay(self.anchor, (t_ms - self.anchor_ms) / MS_PER_MINUTE, params, self.rat)

    def rebase(self, t_ms: int, state: TrustState) -> None:
        self.anchor, self.anchor_ms = state, t_ms


@dataclass
class _PendingRecovery:
    token: int
    record_index: int
    gap: TrustGap
    rogue: Optional[str]


# agenda priorities within one instant
_P_EVENT, _P_RECOVERY, _P_VERIFY, _P_SAMPLE = 0, 1, 2, 3


class MissionRunner:
    """Runs one scenario; owns every piece of mutable simulation state."""

    def __init__(self, scenario: MissionScenario):
        self.sc = scenario
        self.params = scenario.decay_params()
        self.gap_rng = get_rng(scenario.seed, "trust-gap")
        self.nonce_rng = get_rng(scenario.seed, "artefact-nonce")
        self.cache = ReplayCache()
        self.revocations = RevocationList()
        self._keys: Dict[str, bytes] = {}
        self.timeline = Timeline(scenario.t_min, scenario.duration_ms)
        self.records: List[CrossingRecord] = []
        self.decisions: Dict[str, int] = {}
        self.replays: List[Tuple[str, str]] = []
        self.exploitations = 0
        self.energy = 0.0
        self.has_portable = scenario.portability.enabled
        self.verify_energies: List[float] = []
        self.flows = {f.flow_id: f for f in scenario.flows}
        self._flow_stats: Dict[str, List[float]] = {
            f: [math.inf, 0.0, 0.0] for f in self.flows}  # min s_net, flagged ms, inactive ms
        self._flow_warned = set()
        self._parallel_values: List[float] = []
        self._pending: Optional[_PendingRecovery] = None
        self._token = 0
        self._agenda: List[tuple] = []
        self._seq = 0

        registered = set(scenario.profiles)
        available = set(scenario.available) if scenario.available is not None else \
            registered - set(scenario.parallel)
        available.add(scenario.initial_rat)
        ceilings = {r: trust_ceiling(p, scenario.weights) for r, p in scenario.profiles.items()}
        self.env = RadioEnvironment(registered, available, ceilings, scenario.initial_rat,
                                    verifier=self._verify_replay)

        initial = scenario.initial_state or scenario.profiles[scenario.initial_rat].reauth_state()
        initial = clamp_to_ceiling(initial, scenario.profiles[scenario.initial_rat])
        self.primary = _Link(scenario.initial_rat, initial, 0)
        self.parallel = {rat: _Link(rat, scenario.profiles[rat].reauth_state(), 0)
                         for rat in scenario.parallel}

    # agenda ------------------------------------------------------------

    def _push(self, t_ms: int, priority: int, item) -> None:
        self._seq += 1
        heapq.heappush(self._agenda, (t_ms, priority, self._seq, item))

    def _key(self, domain: str) -> bytes:
        if domain not in self._keys:
            self._keys[domain] = derive_key(self.sc.seed, domain)
        return self._keys[domain]

    # state views ---------------------------------------------------------

    def _primary_profile(self) -> RatProfile:
        return self.sc.profiles[self.primary.rat]

    def _active_links(self, t_ms: int) -> ParallelLinkSet:
        links = ParallelLinkSet()
        links.activate(self.primary.rat, self.primary.at(t_ms, self.params))
        for rat, link in self.parallel.items():
            if rat in self.env.jammed or rat == self.primary.rat:
                continue
            links.activate(rat, link.at(t_ms, self.params))
        return links

    def _silo_overrides(self, links: ParallelLinkSet) -> Dict[str, float]:
        return {r: self.sc.silo_context for r in links.links if self.sc.profiles[r].trust_silo}

    def _composite(self, t_ms: int, primary_state: TrustState) -> Tuple[float, Optional[float]]:
        primary_value = composite_score(primary_state, self.sc.weights)
        if not self.parallel:
            return primary_value, None
        links = self._active_links(t_ms)
        links.update(self.primary.rat, primary_state)
        parallel_value = parallel_compose(links, self.sc.weights, self._silo_overrides(links))
        if self.sc.composite_mode == "parallel":
            return parallel_value, parallel_value
        return primary_value, parallel_value

    # run -----------------------------------------------------------------

    def run(self) -> Tuple[Timeline, "MissionReport"]:
        sc = self.sc
        end = sc.duration_ms
        for event in sc.events:
            t = to_ms(event.at)
            if t <= end:
                self._push(t, _P_EVENT, event)
        interval = to_ms(sc.verify_interval)
        for k in range(1, verification_count(sc.duration, sc.verify_interval) + 1):
            self._push(k * interval, _P_VERIFY, "verify")
        for t in range(0, end + 1, SAMPLE_CADENCE_MS):
            self._push(t, _P_SAMPLE, None)
        if end % SAMPLE_CADENCE_MS:
            self._push(end, _P_SAMPLE, None)

        self.energy = sc.initial_auth
        tags: List[str] = ["start"]
        pre_points: List[float] = []
        while self._agenda:
            t_ms, priority, _, item = heapq.heappop(self._agenda)
            self.env.advance(t_ms)
            if priority == _P_EVENT:
                pre = self._handle_event(t_ms, item, tags)
                if pre is not None:
                    pre_points.append(pre)
            elif priority == _P_RECOVERY:
                self._handle_recovery(t_ms, item, tags)
            elif priority == _P_VERIFY:
                self._handle_verify(t_ms)
                tags.append("verify")
            # Emit one row per instant, after everything scheduled at it
            if self._agenda and self._agenda[0][0] == t_ms:
                continue
            self._emit(t_ms, tags, pre_points)
            tags, pre_points = [], []

        return self.timeline, self._report()

    def _emit(self, t_ms: int, tags: List[str], pre_points: List[float]) -> None:
        state = self.primary.at(t_ms, self.params)
        composite, parallel_value = self._composite(t_ms, state)
        for value in pre_points:
            self.timeline.trace.append((t_ms, value))
        self.timeline.trace.append((t_ms, composite))
        if parallel_value is not None:
            self._parallel_values.append(parallel_value)
        self._track_flows(t_ms, state)
        active = (self.primary.rogue or self.primary.rat,) + tuple(
            r for r in self.parallel if r not in self.env.jammed and r != self.primary.rat)
        self.timeline.append(TimelineSample(
            t_ms=t_ms,
            event="|".join(tags),
            active_rats=active,
            state=state,
            composite=composite,
            energy_mJ=self.energy,
            below_threshold=composite < self.sc.t_min,
        ))

    # events ----------------------------------------------------------------

    def _handle_event(self, t_ms: int, event: ScenarioEvent, tags: List[str]) -> Optional[float]:
        """Apply one scripted event; returns the pre-drop composite for crossings."""
        if isinstance(event, TransitionEvent):
            return self._scripted_transition(t_ms, event, tags)
        if isinstance(event, AdversaryEvent):
            return self._adversary(t_ms, event.action, tags)
        if isinstance(event, RevokeEvent):
            artefact = self.env.captured.get(event.label)
            if artefact is None:
                logger.warning("Cannot revoke unknown artefact '%s'", event.label)
            else:
                self.revocations.revoke(artefact)
                tags.append(f"revoke:{event.label}")
        elif isinstance(event, IssueEvent):
            self._issue_labelled(t_ms, event.label, event.component, tags)
        elif isinstance(event, DecayEvent):
            for link in [self.primary, *self.parallel.values()]:
                link.rebase(t_ms, apply_event_decay(link.at(t_ms, self.params), event.name, self.params))
            tags.append(f"decay:{event.name}")
        elif isinstance(event, CoverageEvent):
            self.env.available = set(event.available) | {self.primary.rat}
            tags.append("coverage")
        elif isinstance(event, RemoteIdEvent):
            self._remote_id(t_ms, event.consistent)
            tags.append("remote-id" if event.consistent else "remote-id-mismatch")
        elif isinstance(event, FlowEvent):
            self.flows[event.flow.flow_id] = event.flow
            self._flow_stats.setdefault(event.flow.flow_id, [math.inf, 0.0, 0.0])
            tags.append(f"flow:{event.flow.flow_id}")
        return None

    def _remote_id(self, t_ms: int, consistent: bool) -> None:
        # Unauthenticated broadcast: weak corroboration of context, nothing more
        state = self.primary.at(t_ms, self.params)
        ctx = state[TrustComponent.CONTEXT]
        if consistent:
            ctx = min(self._primary_profile().ceiling[TrustComponent.CONTEXT.index],
                      ctx + self.sc.remote_id_weight)
        else:
            ctx *= REMOTE_ID_MISMATCH_FACTOR
        self.primary.rebase(t_ms, state.with_component(TrustComponent.CONTEXT, ctx))

    def _issue_labelled(self, t_ms: int, label: str, component: TrustComponent,
                        tags: List[str]) -> Optional[TrustArtefact]:
        profile = self._primary_profile()
        if profile.trust_silo or self.primary.rogue:
            logger.info("No artefact can leave %s; '%s' not issued", self.primary.rat, label)
            return None
        state = self.primary.at(t_ms, self.params)
        issuer = f"{self.sc.portability.issuer}@{self.primary.rat}"
        artefact = issue_artefact(issuer, self.sc.device_id, component, state[component],
                                  t_ms / 1000.0, self._key(issuer), self.nonce_rng)
        self.env.captured[label] = artefact
        tags.append(f"issue:{label}")
        return artefact

    def _validate(self, artefact: TrustArtefact, t_ms: int, rat: str, rogue: Optional[str]) -> ArtefactDecision:
        # A decoy verifies with its own key, so genuine tags never check out there
        key = self._key(rogue) if rogue else self._key(artefact.issuer_id)
        decision = validate_artefact(
            artefact, self.sc.device_id, t_ms / 1000.0, self.sc.portability.window_s,
            self.cache, self.revocations, key,
            check_revocation=self.sc.profiles[rat].connected)
        self.decisions[decision.value] = self.decisions.get(decision.value, 0) + 1
        return decision

    def _verify_replay(self, artefact: TrustArtefact, t_ms: int) -> ArtefactDecision:
        return self._validate(artefact, t_ms, self.primary.rat, self.primary.rogue)

    def _adversary(self, t_ms: int, action: AdversaryAction, tags: List[str]) -> Optional[float]:
        self.env.active = self.primary.rat
        act = action.action
        if isinstance(act, ReplayArtefact) and act.label not in self.env.captured:
            logger.warning("Nothing captured under '%s' to replay at %.1f s", act.label, action.at)
            tags.append("replay:missing")
            return None
        induced = apply_action(self.env, action)
        tags.append(f"adversary:{type(action.action).__name__}")
        pre_value = None
        for item in induced:
            if isinstance(item, ReplayOutcome):
                self.replays.append((item.label, item.decision.value))
                tags.append(f"replay:{item.decision.value}")
            elif isinstance(item, ForcedTransition):
                pre_value = self._cross(t_ms, item.to_rat, item.kind, None, None, tags)
        return pre_value

    def _scripted_transition(self, t_ms: int, event: TransitionEvent, tags: List[str]) -> Optional[float]:
        current = self.primary.rat
        if event.src is not None and event.src != current:
            logger.warning("Transition at %.1f s expected to leave %s but the device is on %s",
                           event.at, event.src, current)
        target, kind = event.to, event.kind
        forced = self.env.take_forced_target()
        if forced is not None:
            kind = TransitionKind.ADVERSARY_FORCED
            if forced not in self.env.jammed:
                target = forced
        if target in self.env.jammed:
            fallback = self.env.best_fallback(exclude=current)
            if fallback is None or fallback == current:
                logger.warning("Transition to jammed %s at %.1f s blocked; staying on %s",
                               target, event.at, current)
                tags.append(f"blocked:{target}")
                return None
            logger.info("Target %s jammed; adversary steers the device onto %s", target, fallback)
            target, kind = fallback, TransitionKind.ADVERSARY_FORCED
        cost, portable = (event.cost, event.portable_cost) if target == event.to else (None, None)
        if kind is not event.kind:
            # Overrides are quoted at the scripted kind's multiplier
            scale = cost_multiplier(kind) / cost_multiplier(event.kind)
            cost = cost * scale if cost is not None else None
            portable = portable * scale if portable is not None else None
        return self._cross(t_ms, target, kind, cost, portable, tags)

    def _cross(self, t_ms: int, target: str, kind: TransitionKind, cost_override: Optional[float],
               portable_override: Optional[float], tags: List[str]) -> float:
        sc = self.sc
        src = self.primary.rat
        to_profile = sc.profiles[target]
        pre = self.primary.at(t_ms, self.params)
        pre_value, _ = self._composite(t_ms, pre)
        index = len(self.records) + 1

        rogue = self.env.rogue_for(target)
        if rogue and to_profile.mutual_auth:
            logger.info("Rogue %s rejected by mutual authentication on %s", rogue, target)
            rogue = None

        gap = sample_trust_gap(kind, self.gap_rng, start=t_ms / 1000.0)
        accepted = self._present_artefacts(t_ms + gap.duration_ms, index, pre, src, target, rogue)

        if accepted:
            post = apply_survival(pre, sc.portability.improved_row(sc.matrices.row(src, target), accepted))
        else:
            post = apply_crossing(pre, src, target, sc.matrices)
        # Carried evidence never lifts a component past what the target RAT supports
        post = clamp_to_ceiling(post, to_profile)
        recovered = clamp_to_ceiling(recover(post, to_profile), to_profile)

        naive = cost_override if cost_override is not None else recovery_cost(src, to_profile, kind, sc.matrices)
        portable = portable_override
        if portable is None and self.has_portable:
            portable = portable_recovery_cost(src, to_profile, kind, sc.matrices, accepted,
                                              sc.portability.verify_cost)
        if portable is not None:
            self.has_portable = True
        record = CrossingRecord(
            time=t_ms / 1000.0, from_rat=src, to_rat=target, kind=kind,
            pre_state=pre, post_state=post, recovered_state=recovered,
            cost_mJ=naive, trust_gap_s=gap.duration, portable_cost_mJ=portable,
            cost_source="table" if cost_override is not None else "formula",
            accepted=frozenset(accepted), exploited=gap.exploited,
        )
        self.records.append(record)
        # The device pays the portable figure whenever one exists for this crossing
        spent = naive if portable is None else portable
        self.energy += spent
        logger.debug("Crossing %s at %.3f s (%s): %.1f mJ", record.label, record.time, kind.value, spent)

        self.primary = _Link(target, post, t_ms)
        self.env.active = target
        self._token += 1
        # A newer crossing supersedes any recovery still in flight
        self._pending = _PendingRecovery(self._token, len(self.records) - 1, gap, rogue)
        if t_ms + gap.duration_ms <= sc.duration_ms:
            self._push(t_ms + gap.duration_ms, _P_RECOVERY, self._token)
        tags.append(f"crossing:{record.label}")
        return pre_value

    def _present_artefacts(self, t_ms: int, index: int, pre: TrustState, src: str, dst: str,
                           rogue: Optional[str]) -> List[TrustComponent]:
        config = self.sc.portability
        if not config.enabled:
            return []
        if self.sc.profiles[src].trust_silo or self.primary.rogue:
            logger.debug("No artefacts can leave %s", src)
            return []
        if self.sc.profiles[dst].trust_silo:
            logger.debug("%s accepts no external artefacts", dst)
            return []
        issuer = f"{config.issuer}@{src}"
        accepted = []
        for component in COMPONENTS:
            if component not in config.carry:
                continue
            # Issued on the way out, presented once the target link is up
            artefact = issue_artefact(issuer, self.sc.device_id, component, pre[component],
                                      (t_ms - 1) / 1000.0, self._key(issuer), self.nonce_rng)
            self.env.captured[f"c{index}.{component.value}"] = artefact
            if self._validate(artefact, t_ms, dst, rogue).accepted:
                accepted.append(component)
        return accepted

    def _handle_recovery(self, t_ms: int, token: int, tags: List[str]) -> None:
        pending = self._pending
        if pending is None or pending.token != token:
            return
        self._pending = None
        record = self.records[pending.record_index]
        to_profile = self.sc.profiles[record.to_rat]
        state = clamp_to_ceiling(recover(self.primary.at(t_ms, self.params), to_profile), to_profile)
        if pending.rogue:
            state = rogue_cap(state)
            self.primary.rogue = pending.rogue
            tags.append(f"rogue:{pending.rogue}")
        if pending.gap.exploited:
            state = exploitation_effect(pending.gap, state)
            self.exploitations += 1
            tags.append("exploited")
        self.primary.rebase(t_ms, state)
        tags.append(f"recovered:{record.label}")

    def _handle_verify(self, t_ms: int) -> None:
        profile = self._primary_profile()
        current = self.primary.at(t_ms, self.params)
        # Refresh toward what re-authentication here achieves, never above the last verified level
        target = np.minimum(np.asarray(profile.reauth), self.primary.anchor.as_array())
        refreshed = clamp_to_ceiling(TrustState.from_array(np.maximum(current.as_array(), target)), profile)
        self.primary.rebase(t_ms, refreshed)
        self.energy += profile.verify_energy
        self.verify_energies.append(profile.verify_energy)

    # flows -----------------------------------------------------------------

    def _track_flows(self, t_ms: int, primary_state: TrustState) -> None:
        if not self.flows:
            return
        previous = self.timeline.samples[-1].t_ms if self.timeline.samples else t_ms
        dt = t_ms - previous
        links = self._active_links(t_ms)
        links.update(self.primary.rat, primary_state)
        carried = []
        for flow_id, flow in self.flows.items():
            # "data" follows whichever RAT is primary
            carrier = self.primary.rat if flow.carried_on == "data" else flow.carried_on
            if carrier in links:
                carried.append(FlowAssignment(flow_id, carrier, flow.sensitivity))
                continue
            self._flow_stats[flow_id][2] += dt
            if flow_id not in self._flow_warned:
                logger.warning("Flow %s is carried on inactive link %s", flow_id, carrier)
                self._flow_warned.add(flow_id)
        if not carried:
            return
        scores = per_flow_network_trust(carried, links)
        for flow_id, s_net in scores.items():
            stats = self._flow_stats[flow_id]
            stats[0] = min(stats[0], s_net)
        for flow_id in flagged_flows(carried, links):
            self._flow_stats[flow_id][1] += dt

    # report ----------------------------------------------------------------

    def _report(self) -> "MissionReport":
        sc = self.sc
        minutes, fraction = sub_threshold_exposure(self.timeline)
        naive_total = mission_energy(self.records, sc.initial_auth)
        portable_total = mission_energy(self.records, sc.initial_auth, portable=True) \
            if self.has_portable else None
        verification_mJ = math.fsum(self.verify_energies)
        report = MissionReport(
            scenario=sc.name, seed=sc.seed, duration_min=sc.duration, t_min=sc.t_min,
            initial_auth_mJ=sc.initial_auth, crossings=list(self.records),
            total_auth_naive_mJ=naive_total, total_auth_portable_mJ=portable_total,
            verification_count=len(self.verify_energies), verification_mJ=verification_mJ,
            total_energy_mJ=self.energy,
            sub_threshold_minutes=minutes, sub_threshold_fraction=fraction,
            budget=budget_check(sc, self.energy) if sc.p_max is not None else None,
            artefact_decisions=dict(sorted(self.decisions.items())),
            replays=list(self.replays), exploitations=self.exploitations,
            flows=self._flow_summaries(),
            ceilings=threshold_reachability(sc.profiles, sc.weights, sc.t_min),
            ladder=portability_ladder(sc),
        )
        if self._parallel_values:
            report.parallel_composite_min = min(self._parallel_values)
            report.parallel_composite_mean = float(np.mean(self._parallel_values))
        mean_power = self.energy / (sc.duration * 60.0)
        if mean_power > 0:
            report.trust_per_mW = _time_average(self.timeline.points(), sc.duration_ms) / mean_power
        report.metrics = report_metrics(report, sc.weights)
        report.discrepancies = compare_published(report.metrics, sc.published)
        return report

    def _flow_summaries(self) -> List[FlowSummary]:
        summaries = []
        for flow_id, flow in self.flows.items():
            low, flagged, inactive = self._flow_stats[flow_id]
            summaries.append(FlowSummary(
                flow_id, flow.carried_on, flow.sensitivity.value,
                None if math.isinf(low) else low,
                flagged / MS_PER_MINUTE, inactive / MS_PER_MINUTE))
        return summaries


def portability_ladder(scenario: MissionScenario) -> List[LadderRung]:
    """
    Energy and latency of the scenario's first transition under each configured
    set of carried components, starting from full re-authentication.
    """
    if not scenario.ladder or not scenario.transitions:
        return []
    first = scenario.transitions[0]
    src = first.src or scenario.initial_rat
    to = scenario.profiles[first.to]
    rungs = []
    for carried in (frozenset(), *scenario.ladder):
        energy = portable_recovery_cost(src, to, first.kind, scenario.matrices, carried,
                                        scenario.portability.verify_cost)
        if carried:
            latency = portable_recovery_latency(src, to, scenario.matrices, carried,
                                                scenario.portability.verify_latency)
        else:
            latency = recovery_latency(src, to, scenario.matrices)
        rungs.append(LadderRung(carried, energy, latency))
    return rungs


def report_metrics(report: MissionReport, weights: WeightVector) -> Dict[str, float]:
    """Flat metric names used for published-figure comparison and JSON output."""
    metrics: Dict[str, float] = {
        "ledger.naive_mJ": report.total_auth_naive_mJ,
        "exposure.minutes": report.sub_threshold_minutes,
        "exposure.fraction": report.sub_threshold_fraction,
        "exposure.pct": 100.0 * report.sub_threshold_fraction,
        "verification.count": float(report.verification_count),
        "verification.mJ": report.verification_mJ,
        "energy.total_mJ": report.total_energy_mJ,
    }
    for k, record in enumerate(report.crossings, start=1):
        metrics[f"crossing.{k}.pre_composite"] = composite_score(record.pre_state, weights)
        metrics[f"crossing.{k}.post_composite"] = composite_score(record.post_state, weights)
        metrics[f"crossing.{k}.recovered_composite"] = composite_score(record.recovered_state, weights)
        metrics[f"crossing.{k}.cost_mJ"] = record.cost_mJ
        if record.portable_cost_mJ is not None:
            metrics[f"crossing.{k}.portable_cost_mJ"] = record.portable_cost_mJ
    if report.total_auth_portable_mJ is not None:
        metrics["ledger.portable_mJ"] = report.total_auth_portable_mJ
        metrics["ledger.saving_pct"] = report.saving_pct
    if report.ladder:
        for i, rung in enumerate(report.ladder):
            metrics[f"ladder.{i}.energy_mJ"] = rung.energy_mJ
            metrics[f"ladder.{i}.latency_ms"] = rung.latency_ms
        full, best = report.ladder[0], report.ladder[-1]
        metrics["ladder.saving_pct"] = 100.0 * ladder_savings(full.energy_mJ, best.energy_mJ)
        metrics["ladder.latency_saving_pct"] = 100.0 * ladder_savings(full.latency_ms, best.latency_ms)
    if report.trust_per_mW is not None:
        metrics["efficiency.trust_per_mW"] = report.trust_per_mW
    return metrics


def _adversary_refs(action: AdversaryAction) -> List[str]:
    act = action.action
    if isinstance(act, JamRat):
        return [act.rat_id]
    if isinstance(act, RogueRat):
        return [act.mimics]
    if isinstance(act, ForceTransition):
        return [act.target]
    return []


@dataclass(frozen=True)
class ScenarioProblem:
    line: int       # 0 when not tied to an event
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}" if self.line else self.message


def validate_scenario(scenario: MissionScenario) -> List[ScenarioProblem]:
    """Cross-checks a scenario needs before it can run."""
    problems: List[ScenarioProblem] = []
    declared = set(scenario.profiles)
    line = 0

    def report(message: str) -> None:
        problems.append(ScenarioProblem(line, message))

    def need(rat: str, where: str) -> bool:
        if rat not in declared:
            report(f"{where}: unknown RAT '{rat}'")
            return False
        return True

    need(scenario.initial_rat, "initial_rat")
    if scenario.initial_rat in scenario.parallel:
        report(f"initial_rat '{scenario.initial_rat}' is also a parallel link")
    for rat in scenario.parallel:
        need(rat, "parallel")
    for rat in sorted(declared):
        if rat not in scenario.matrices:
            report(f"no survival entries for RAT '{rat}'")
    for rat in sorted(scenario.available or ()):
        need(rat, "available")
    for flow in scenario.flows:
        if flow.carried_on != "data":
            need(flow.carried_on, f"flow {flow.flow_id}")
    if scenario.composite_mode == "parallel" and not scenario.parallel:
        report("composite = parallel needs at least one parallel link")

    current = scenario.initial_rat
    config = scenario.portability
    for event in scenario.events:
        line = event.line
        where = f"event at {event.at:g} s"
        if isinstance(event, TransitionEvent):
            if event.src is not None:
                need(event.src, where)
            if not need(event.to, where):
                continue
            src = event.src or current
            to = scenario.profiles[event.to]
            if config.enabled and not to.trust_silo:
                try:
                    config.check_costs(to)
                except ConfigurationError as exc:
                    report(f"{where}: {exc}")
                if src in declared and scenario.profiles[src].family != to.family \
                        and src in scenario.matrices and event.to in scenario.matrices:
                    base = scenario.matrices.row(src, event.to)
                    for component in config.carry:
                        improved = config.improved.get(component)
                        if improved is not None and improved < base[component.index]:
                            report(
                                f"{where}: improved survival for {component.value} "
                                f"({improved}) is below base survival {base[component.index]}")
            current = event.to
        elif isinstance(event, AdversaryEvent):
            for rat in _adversary_refs(event.action):
                need(rat, where)
        elif isinstance(event, CoverageEvent):
            for rat in sorted(event.available):
                need(rat, where)
        elif isinstance(event, FlowEvent) and event.flow.carried_on != "data":
            need(event.flow.carried_on, where)
        elif isinstance(event, DecayEvent) and event.name not in scenario.triggers:
            report(f"{where}: unknown decay trigger '{event.name}'")

    line = 0
    previous = None
    for minute, value in scenario.trajectory:
        if not 0.0 <= value <= 1.0:
            report(f"trajectory point at {minute:g} min outside [0,1]")
        if previous is not None and minute < previous:
            report(f"trajectory minutes must not decrease ({minute:g} after {previous:g})")
        previous = minute
    return problems


def _interpolate(points: Sequence[Tuple[int, float]], t_ms: int) -> float:
    """Piecewise-linear value at t; at a vertical jump the later point wins."""
    times = [t for t, _ in points]
    i = bisect.bisect_right(times, t_ms) - 1
    if i < 0:
        return points[0][1]
    if i == len(points) - 1:
        return points[-1][1]
    (t0, v0), (t1, v1) = points[i], points[i + 1]
    return v0 + (v1 - v0) * (t_ms - t0) / (t1 - t0)


def replay_trajectory(scenario: MissionScenario) -> Tuple[Timeline, MissionReport]:
    """
    Re-sample a published composite-trust curve instead of simulating one.

    Breakpoints are (minute, composite); a repeated minute is an instantaneous
    drop or recovery. Exposure is integrated over the breakpoints directly.
    """
    end = scenario.duration_ms
    trace = [(int(round(m * MS_PER_MINUTE)), float(v)) for m, v in scenario.trajectory]
    timeline = Timeline(scenario.t_min, end, trace=trace)
    breakpoints = {t for t, _ in trace if t <= end}
    for t_ms in sorted(set(range(0, end + 1, SAMPLE_CADENCE_MS)) | breakpoints | {end}):
        value = _interpolate(trace, t_ms)
        timeline.append(TimelineSample(
            t_ms=t_ms,
            event="breakpoint" if t_ms in breakpoints else "",
            active_rats=(scenario.initial_rat,),
            state=None,
            composite=value,
            energy_mJ=scenario.initial_auth,
            below_threshold=value < scenario.t_min,
        ))
    minutes, fraction = sub_threshold_exposure(timeline)
    report = MissionReport(
        scenario=scenario.name, seed=scenario.seed, duration_min=scenario.duration,
        t_min=scenario.t_min, initial_auth_mJ=scenario.initial_auth, crossings=[],
        total_auth_naive_mJ=scenario.initial_auth, total_auth_portable_mJ=None,
        verification_count=0, verification_mJ=0.0, total_energy_mJ=scenario.initial_auth,
        sub_threshold_minutes=minutes, sub_threshold_fraction=fraction,
        budget=budget_check(scenario, scenario.initial_auth) if scenario.p_max is not None else None,
        ceilings=threshold_reachability(scenario.profiles, scenario.weights, scenario.t_min),
    )
    report.metrics = report_metrics(report, scenario.weights)
    report.discrepancies = compare_published(report.metrics, scenario.published)
    logger.info("Replayed %d trajectory points for %s", len(trace), scenario.name)
    return timeline, report


def run(scenario: MissionScenario) -> Tuple[Timeline, MissionReport]:
    """Simulate a validated scenario (or replay its published trajectory)."""
    problems = validate_scenario(scenario)
    if problems:
        raise ScenarioError(f"scenario '{scenario.name}' is not runnable", problems)
    if scenario.trajectory:
        return replay_trajectory(scenario)
    timeline, report = MissionRunner(scenario).run()
    logger.info("%s: %d crossings, %.1f mJ, %.2f min below %.2f", scenario.name,
                len(report.crossings), report.total_energy_mJ, report.sub_threshold_minutes,
                scenario.t_min)
    return timeline, report
