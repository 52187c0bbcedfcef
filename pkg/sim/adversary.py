# adversary.py
# Radio-environment adversary: jamming, rogue infrastructure, forced downgrades,
# artefact replay and trust-gap exploitation

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Set, Tuple, Union

import numpy as np

from errors import UnknownRatError, ValidationError
from trust.core import TrustComponent, TrustState
from trust.portability import ArtefactDecision, TrustArtefact
from trust.transition import TransitionKind

logger = logging.getLogger(__name__)

ROGUE_CAP = 0.1

# kind -> ((min duration s, max duration s), (min p_exploit, max p_exploit))
GAP_PROFILES: Dict[TransitionKind, Tuple[Tuple[float, float], Tuple[float, float]]] = {
    TransitionKind.PLANNED: ((0.05, 0.2), (0.02, 0.05)),
    TransitionKind.COVERAGE_DRIVEN: ((0.5, 3.0), (0.04, 0.08)),
    TransitionKind.OPPORTUNISTIC: ((0.05, 0.3), (0.02, 0.05)),
    TransitionKind.ADVERSARY_FORCED: ((2.0, 15.0), (0.10, 0.25)),
}


@dataclass(frozen=True)
class JamRat:
    rat_id: str
    duration_s: float


@dataclass(frozen=True)
class RogueRat:
    fake_id: str
    mimics: str
    duration_s: Optional[float] = None


@dataclass(frozen=True)
class ReplayArtefact:
    label: str


@dataclass(frozen=True)
class ForceTransition:
    target: str


Action = Union[JamRat, RogueRat, ReplayArtefact, ForceTransition]


@dataclass(frozen=True)
class AdversaryAction:
    at: float  # seconds since mission start
    action: Action

    def __post_init__(self):
        if self.at < 0:
            raise ValidationError("adversary actions cannot precede the mission")
        duration = getattr(self.action, "duration_s", None)
        if duration is not None and not duration > 0:
            raise ValidationError(f"adversary action duration must be > 0, got {duration}")

    @property
    def at_ms(self) -> int:
        return int(round(self.at * 1000))


@dataclass(frozen=True)
class TrustGap:
    start: float
    duration: float
    kind: TransitionKind
    exploit_probability: float
    exploited: bool

    @property
    def duration_ms(self) -> int:
        # At least one millisecond so recovery always lands after the crossing
        return max(1, int(round(self.duration * 1000)))


@dataclass(frozen=True)
class ForcedTransition:
    """Transition induced by the environment rather than the mission script."""
    to_rat: str
    kind: TransitionKind
    reason: str


@dataclass(frozen=True)
class ReplayOutcome:
    label: str
    decision: ArtefactDecision


InducedEvent = Union[ForcedTransition, ReplayOutcome]


@dataclass
class RadioEnvironment:
    """
    What the device can connect to right now, as shaped by the adversary.

    registered: every declared RAT; ceilings: composite ceiling per RAT, used to
    pick the fallback when the active RAT is jammed.
    """

    registered: Set[str]
    available: Set[str]
    ceilings: Mapping[str, float]
    active: str
    jammed: Dict[str, int] = field(default_factory=dict)          # rat -> jam end (ms)
    rogues: Dict[str, Tuple[str, Optional[int]]] = field(default_factory=dict)  # fake -> (mimics, end ms)
    forced_target: Optional[str] = None
    captured: Dict[str, TrustArtefact] = field(default_factory=dict)
    verifier: Optional[Callable[[TrustArtefact, int], ArtefactDecision]] = None
    now_ms: int = 0

    def usable(self) -> List[str]:
        return sorted(r for r in self.available if r not in self.jammed)

    def is_usable(self, rat: str) -> bool:
        return rat in self.available and rat not in self.jammed

    def best_fallback(self, exclude: str) -> Optional[str]:
        candidates = [r for r in self.usable() if r != exclude]
        if not candidates:
            return None
        # Highest ceiling wins; ties break on rat_id for determinism
        return max(candidates, key=lambda r: (self.ceilings[r], r))

    def advance(self, now_ms: int) -> None:
        """Release jams and rogue decoys whose time has passed."""
        self.now_ms = now_ms
        for rat in [r for r, end in self.jammed.items() if end <= now_ms]:
            logger.debug("Jamming of %s ended at %d ms", rat, now_ms)
            del self.jammed[rat]
        for fake in [f for f, (_, end) in self.rogues.items() if end is not None and end <= now_ms]:
            del self.rogues[fake]

    def rogue_for(self, rat: str) -> Optional[str]:
        for fake, (mimics, _) in sorted(self.rogues.items()):
            if mimics == rat:
                return fake
        return None

    def take_forced_target(self) -> Optional[str]:
        target, self.forced_target = self.forced_target, None
        return target


def _require_registered(env: RadioEnvironment, rat: str) -> None:
    if rat not in env.registered:
        raise UnknownRatError(rat)


def apply_action(env: RadioEnvironment, action: AdversaryAction) -> List[InducedEvent]:
    """
    Apply one adversary action to the environment.

    Returns the events it induces: a forced transition when the active RAT is
    jammed away, or the decision for a replayed artefact.
    """
    if action.at_ms < env.now_ms:
        raise ValidationError(f"adversary action at {action.at}s is in the past")
    env.advance(action.at_ms)
    act = action.action
    induced: List[InducedEvent] = []

    if isinstance(act, JamRat):
        _require_registered(env, act.rat_id)
        env.jammed[act.rat_id] = action.at_ms + int(round(act.duration_s * 1000))
        logger.info("Jamming %s for %.1f s", act.rat_id, act.duration_s)
        if act.rat_id == env.active:
            fallback = env.best_fallback(exclude=act.rat_id)
            if fallback is None:
                logger.warning("Active RAT %s jammed with no fallback available", act.rat_id)
            else:
                induced.append(ForcedTransition(fallback, TransitionKind.ADVERSARY_FORCED,
                                                f"jam:{act.rat_id}"))

    elif isinstance(act, RogueRat):
        _require_registered(env, act.mimics)
        end = None if act.duration_s is None else action.at_ms + int(round(act.duration_s * 1000))
        env.rogues[act.fake_id] = (act.mimics, end)
        logger.info("Rogue %s now mimics %s", act.fake_id, act.mimics)

    elif isinstance(act, ReplayArtefact):
        artefact = env.captured.get(act.label)
        if artefact is None:
            raise ValidationError(f"no captured artefact labelled '{act.label}'")
        if env.verifier is None:
            raise ValidationError("replay needs an artefact verifier")
        decision = env.verifier(artefact, action.at_ms)
        if decision.accepted:
            logger.warning("Replayed artefact '%s' was accepted", act.label)
        induced.append(ReplayOutcome(act.label, decision))

    elif isinstance(act, ForceTransition):
        _require_registered(env, act.target)
        env.forced_target = act.target

    else:
        raise ValidationError(f"unsupported adversary action {act!r}")
    return induced


def sample_trust_gap(kind: TransitionKind, rng: np.random.Generator, start: float = 0.0) -> TrustGap:
    """Draw gap duration, exploitation probability, then the exploitation outcome."""
    (d_lo, d_hi), (p_lo, p_hi) = GAP_PROFILES[kind]
    duration = float(rng.uniform(d_lo, d_hi))
    probability = float(rng.uniform(p_lo, p_hi))
    exploited = bool(rng.random() < probability)
    return TrustGap(start, duration, kind, probability, exploited)


def exploitation_effect(gap: TrustGap, state: TrustState) -> TrustState:
    """
    Consequence of an exploited trust gap: contextual and policy trust are lost.

    Identity and device trust are left alone; key compromise is not modelled.
    """
    if not gap.exploited:
        return state
    logger.warning("Trust gap at %.3f s (%s) exploited", gap.start, gap.kind.value)
    return state.with_component(TrustComponent.CONTEXT, 0.0).with_component(TrustComponent.POLICY, 0.0)


def rogue_cap(state: TrustState) -> TrustState:
    return TrustState.from_array(np.minimum(state.as_array(), ROGUE_CAP))
