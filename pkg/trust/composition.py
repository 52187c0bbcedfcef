# composition.py
# Composite trust over simultaneously active links, with per-flow network trust

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from errors import FlowAssignmentError, ValidationError
from trust.core import COMPONENTS, TrustComponent, TrustState, WeightVector, composite_score

logger = logging.getLogger(__name__)


class Sensitivity(Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @classmethod
    def parse(cls, label: str) -> "Sensitivity":
        try:
            return cls(label.strip().lower())
        except ValueError:
            raise ValidationError(f"unknown flow sensitivity '{label}'") from None


# Minimum carrier network trust per flow sensitivity
SENSITIVITY_THRESHOLDS: Dict[Sensitivity, float] = {
    Sensitivity.HIGH: 0.6,
    Sensitivity.MEDIUM: 0.4,
    Sensitivity.LOW: 0.0,
}

AGGREGATORS: Dict[TrustComponent, Callable[[np.ndarray], float]] = {
    # identity is as trustworthy as its strongest authentication
    TrustComponent.IDENTITY: np.max,
    # device integrity belongs to the device, not the channel
    TrustComponent.DEVICE: np.max,
    # contextual signals corroborate each other
    TrustComponent.CONTEXT: np.mean,
    # weakest channel / weakest enforcement point
    TrustComponent.NETWORK: np.min,
    TrustComponent.POLICY: np.min,
}


@dataclass
class ParallelLinkSet:
    """Concurrently active links: rat_id -> trust state, with activation times (s)."""

    links: Dict[str, TrustState] = field(default_factory=dict)
    activated_at: Dict[str, float] = field(default_factory=dict)

    def activate(self, rat_id: str, state: TrustState, at: float = 0.0) -> None:
        if rat_id in self.links:
            raise ValidationError(f"link {rat_id} is already active")
        self.links[rat_id] = state
        self.activated_at[rat_id] = at

    def update(self, rat_id: str, state: TrustState) -> None:
        if rat_id not in self.links:
            raise ValidationError(f"link {rat_id} is not active")
        self.links[rat_id] = state

    def deactivate(self, rat_id: str) -> None:
        self.links.pop(rat_id, None)
        self.activated_at.pop(rat_id, None)

    def __contains__(self, rat_id: str) -> bool:
        return rat_id in self.links

    def __len__(self) -> int:
        return len(self.links)


@dataclass(frozen=True)
class FlowAssignment:
    flow_id: str
    carried_on: str
    sensitivity: Sensitivity = Sensitivity.LOW

    @property
    def threshold(self) -> float:
        return SENSITIVITY_THRESHOLDS[self.sensitivity]


def aggregate_state(links: ParallelLinkSet,
                    context_override: Optional[Mapping[str, float]] = None) -> TrustState:
    """
    Component-wise aggregation over active links.

    context_override replaces the measured context value for opaque links
    (trust silos) with a fixed configured one.
    """
    if not links.links:
        raise ValidationError("parallel composition needs at least one active link")
    # Sorted so the float summation order is independent of insertion order
    rats = sorted(links.links)
    stacked = np.array([links.links[r].as_array() for r in rats])
    if context_override:
        ctx = TrustComponent.CONTEXT.index
        for row, rat in enumerate(rats):
            if rat in context_override:
                stacked[row, ctx] = context_override[rat]
    return TrustState.from_array(
        np.array([AGGREGATORS[c](stacked[:, c.index]) for c in COMPONENTS]))


def parallel_compose(links: ParallelLinkSet, weights: WeightVector,
                     context_override: Optional[Mapping[str, float]] = None) -> float:
    return composite_score(aggregate_state(links, context_override), weights)


def per_flow_network_trust(flows: Sequence[FlowAssignment], links: ParallelLinkSet) -> Dict[str, float]:
    """Each flow's network trust is the s_net of the link that carries it."""
    scores = {}
    for flow in flows:
        if flow.carried_on not in links:
            raise FlowAssignmentError(f"flow {flow.flow_id} is carried on inactive link {flow.carried_on}")
        scores[flow.flow_id] = links.links[flow.carried_on][TrustComponent.NETWORK]
    return scores


def flagged_flows(flows: Sequence[FlowAssignment], links: ParallelLinkSet) -> List[str]:
    """Flows whose carrier network trust is below the flow's sensitivity threshold."""
    scores = per_flow_network_trust(flows, links)
    return [f.flow_id for f in flows if scores[f.flow_id] < f.threshold]
