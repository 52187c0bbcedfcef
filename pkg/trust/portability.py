# portability.py
# Portable trust artefacts: issuance, validation, and their effect on survival and cost

import logging
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Tuple

import numpy as np
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, hmac

from errors import ConfigurationError, ValidationError
from trust.core import COMPONENTS, RatProfile, TrustComponent
from trust.transition import SurvivalMatrixSet, TransitionKind, cost_multiplier

logger = logging.getLogger(__name__)

NONCE_BYTES = 16
DEFAULT_REPLAY_CAPACITY = 4096


class ArtefactDecision(Enum):
    ACCEPTED = "Accepted"
    REJECTED_STALE = "RejectedStale"
    REJECTED_REPLAY = "RejectedReplay"
    REJECTED_BINDING = "RejectedBinding"
    REJECTED_INTEGRITY = "RejectedIntegrity"
    REJECTED_REVOKED = "RejectedRevoked"

    @property
    def accepted(self) -> bool:
        return self is ArtefactDecision.ACCEPTED


def canonical_bytes(issuer_id: str, device_id: str, component: TrustComponent,
                    level: float, issued_at_ms: int, nonce: bytes) -> bytes:
    """
    Big-endian, unpadded encoding of every field the tag covers.

    issuer and device are length-prefixed UTF-8 (u16), then the component index
    (u8), the level as IEEE-754 binary64, issued_at in milliseconds (i64) and
    the 16-byte nonce.
    """
    issuer = issuer_id.encode("utf-8")
    device = device_id.encode("utf-8")
    return b"".join((
        struct.pack(">H", len(issuer)), issuer,
        struct.pack(">H", len(device)), device,
        struct.pack(">B", component.index),
        struct.pack(">d", level),
        struct.pack(">q", issued_at_ms),
        nonce,
    ))


def compute_tag(key: bytes, payload: bytes) -> bytes:
    mac = hmac.HMAC(key, hashes.SHA256())
    mac.update(payload)
    return mac.finalize()


def derive_key(seed: int, issuer_id: str) -> bytes:
    """Deterministic test-mode key for a trust domain."""
    digest = hashes.Hash(hashes.SHA256())
    digest.update(f"zt-ratsim:{seed}:{issuer_id}".encode("utf-8"))
    return digest.finalize()


@dataclass(frozen=True)
class TrustArtefact:
    issuer_id: str
    device_id: str
    component: TrustComponent
    asserted_level: float
    issued_at_ms: int
    nonce: bytes
    tag: bytes

    def __post_init__(self):
        if not 0.0 <= self.asserted_level <= 1.0:
            raise ValidationError(f"asserted level {self.asserted_level} outside [0,1]")
        if len(self.nonce) != NONCE_BYTES:
            raise ValidationError(f"nonce must be {NONCE_BYTES} bytes")

    @property
    def issued_at(self) -> float:
        return self.issued_at_ms / 1000.0

    @property
    def replay_key(self) -> Tuple[str, bytes]:
        return (self.issuer_id, self.nonce)

    def payload(self) -> bytes:
        return canonical_bytes(self.issuer_id, self.device_id, self.component,
                               self.asserted_level, self.issued_at_ms, self.nonce)

    def verifies(self, key: bytes) -> bool:
        mac = hmac.HMAC(key, hashes.SHA256())
        mac.update(self.payload())
        try:
            mac.verify(self.tag)
        except InvalidSignature:
            return False
        return True


class ReplayCache:
    """Seen (issuer, nonce) pairs, bounded; the oldest entry is evicted first."""

    def __init__(self, capacity: int = DEFAULT_REPLAY_CAPACITY):
        if capacity <= 0:
            raise ConfigurationError("replay cache capacity must be positive")
        self.capacity = capacity
        self._seen: "OrderedDict[Tuple[str, bytes], None]" = OrderedDict()

    def __contains__(self, key: Tuple[str, bytes]) -> bool:
        return key in self._seen

    def __len__(self) -> int:
        return len(self._seen)

    def add(self, key: Tuple[str, bytes]) -> None:
        self._seen[key] = None
        while len(self._seen) > self.capacity:
            self._seen.popitem(last=False)


class RevocationList:
    def __init__(self, revoked: Iterable[Tuple[str, bytes]] = ()):
        self._revoked = set(revoked)

    def revoke(self, artefact: TrustArtefact) -> None:
        self._revoked.add(artefact.replay_key)

    def __contains__(self, key: Tuple[str, bytes]) -> bool:
        return key in self._revoked

    def __len__(self) -> int:
        return len(self._revoked)


def issue_artefact(issuer_id: str, device_id: str, component: TrustComponent, level: float,
                   now: float, key: bytes, rng: np.random.Generator) -> TrustArtefact:
    """Sign a trust assertion for `device_id`; the nonce comes from the seeded stream."""
    if not 0.0 <= level <= 1.0:
        raise ValidationError(f"artefact level {level} outside [0,1]")
    issued_at_ms = int(round(now * 1000))
    nonce = rng.bytes(NONCE_BYTES)
    tag = compute_tag(key, canonical_bytes(issuer_id, device_id, component, level, issued_at_ms, nonce))
    return TrustArtefact(issuer_id, device_id, component, float(level), issued_at_ms, nonce, tag)


def validate_artefact(artefact: TrustArtefact, presenting_device_id: str, now: float,
                      freshness_window_s: float, cache: ReplayCache, revocations: RevocationList,
                      key: bytes, check_revocation: bool = True) -> ArtefactDecision:
    """
    Decide whether a presented artefact is accepted.

    Checks run in order: integrity, binding, revocation (only when the validating
    domain can reach its revocation source), freshness, replay. An accepted
    nonce is recorded in the cache.
    """
    if not artefact.verifies(key):
        decision = ArtefactDecision.REJECTED_INTEGRITY
    elif presenting_device_id != artefact.device_id:
        decision = ArtefactDecision.REJECTED_BINDING
    elif check_revocation and artefact.replay_key in revocations:
        decision = ArtefactDecision.REJECTED_REVOKED
    else:
        age_ms = int(round(now * 1000)) - artefact.issued_at_ms
        if age_ms < 0 or age_ms > int(round(freshness_window_s * 1000)):
            decision = ArtefactDecision.REJECTED_STALE
        elif artefact.replay_key in cache:
            decision = ArtefactDecision.REJECTED_REPLAY
        else:
            cache.add(artefact.replay_key)
            decision = ArtefactDecision.ACCEPTED
    if not decision.accepted:
        logger.info("Artefact %s/%s from %s rejected: %s", artefact.component.value,
                    artefact.nonce.hex()[:8], artefact.issuer_id, decision.value)
    return decision


def effective_survival(base_sigma: float, decision: ArtefactDecision, improved_sigma: float) -> float:
    if improved_sigma < base_sigma:
        raise ConfigurationError(
            f"improved survival {improved_sigma} is below base survival {base_sigma}")
    return improved_sigma if decision.accepted else base_sigma


@dataclass(frozen=True)
class PortabilityConfig:
    """
    Which components travel as artefacts and what an accepted artefact buys.

    improved:       component -> σ(·|ε) applied across family boundaries
    verify_cost:    component -> mJ to verify the artefact on the target RAT
    verify_latency: component -> ms to verify the artefact on the target RAT
    """

    carry: FrozenSet[TrustComponent] = frozenset()
    window_s: float = 300.0
    improved: Mapping[TrustComponent, float] = field(default_factory=dict)
    verify_cost: Mapping[TrustComponent, float] = field(default_factory=dict)
    verify_latency: Mapping[TrustComponent, float] = field(default_factory=dict)
    issuer: str = "mission-pdp"

    def __post_init__(self):
        if TrustComponent.NETWORK in self.carry:
            raise ConfigurationError("network trust cannot be carried by an artefact")
        if self.window_s <= 0:
            raise ConfigurationError("freshness window must be positive")
        for component in self.carry:
            if component not in self.verify_cost:
                raise ConfigurationError(f"no verify_cost for carried component {component.value}")
        for component, sigma in self.improved.items():
            if not 0.0 <= sigma <= 1.0:
                raise ConfigurationError(f"improved σ for {component.value} outside [0,1]")

    @property
    def enabled(self) -> bool:
        return bool(self.carry)

    def improved_row(self, base: Tuple[float, ...],
                     accepted: Iterable[TrustComponent]) -> Tuple[float, ...]:
        """
        Survival vector once the accepted artefacts are applied.

        Improved values only ever lift σ: within a family the base survival can
        already exceed the cross-family calibration.
        """
        accepted = set(accepted)
        row = []
        for component, sigma in zip(COMPONENTS, base):
            # Anything not accepted counts as rejected and keeps the base value
            decision = ArtefactDecision.ACCEPTED if component in accepted \
                else ArtefactDecision.REJECTED_STALE
            improved = max(sigma, self.improved.get(component, sigma))
            row.append(effective_survival(sigma, decision, improved))
        return tuple(row)

    def check_costs(self, profile: RatProfile) -> None:
        for component in self.carry:
            if self.verify_cost[component] >= profile.cost[component.index]:
                raise ConfigurationError(
                    f"verify cost for {component.value} on {profile.rat_id} "
                    f"({self.verify_cost[component]} mJ) is not below full cost "
                    f"({profile.cost[component.index]} mJ)")


def _portable_terms(full: np.ndarray, deficit: np.ndarray, accepted: Iterable[TrustComponent],
                    verify: Mapping[TrustComponent, float], what: str, rat_id: str) -> np.ndarray:
    terms = full * deficit
    for component in accepted:
        i = component.index
        if component not in verify:
            raise ConfigurationError(f"no verify {what} for {component.value}")
        if verify[component] >= full[i]:
            raise ConfigurationError(
                f"verify {what} for {component.value} on {rat_id} is not below the full {what}")
        # Falling back to full re-establishment is always allowed when it is cheaper
        terms[i] = min(terms[i], verify[component])
    return terms


def portable_recovery_cost(src: str, to: RatProfile, kind: TransitionKind, matrices: SurvivalMatrixSet,
                           accepted_components: Iterable[TrustComponent],
                           verify_costs: Mapping[TrustComponent, float]) -> float:
    """
    Recovery cost where each accepted component pays the smaller of its verify
    cost and its ordinary deficit term, so the result never exceeds recovery_cost.
    """
    deficit = 1.0 - np.asarray(matrices.row(src, to.rat_id))
    terms = _portable_terms(np.asarray(to.cost), deficit, accepted_components, verify_costs, "cost", to.rat_id)
    return cost_multiplier(kind) * float(terms.sum())


def recovery_latency(src: str, to: RatProfile, matrices: SurvivalMatrixSet) -> float:
    deficit = 1.0 - np.asarray(matrices.row(src, to.rat_id))
    return float(np.dot(np.asarray(to.latency), deficit))


def portable_recovery_latency(src: str, to: RatProfile, matrices: SurvivalMatrixSet,
                              accepted_components: Iterable[TrustComponent],
                              verify_latency: Mapping[TrustComponent, float]) -> float:
    deficit = 1.0 - np.asarray(matrices.row(src, to.rat_id))
    terms = _portable_terms(np.asarray(to.latency), deficit, accepted_components, verify_latency,
                            "latency", to.rat_id)
    return float(terms.sum())


def ladder_savings(full: float, portable: float) -> float:
    """Fractional saving of a portable figure against its full counterpart."""
    if full <= 0:
        return 0.0
    return 1.0 - portable / full
