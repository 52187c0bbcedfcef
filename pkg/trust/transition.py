# transition.py
# Transition taxonomy, survival matrices, recovery cost and post-crossing recovery

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from errors import ConfigurationError, UnknownRatError, ValidationError
from trust.core import COMPONENTS, RatProfile, TrustComponent, TrustState

logger = logging.getLogger(__name__)


class TransitionKind(Enum):
    PLANNED = "planned"
    COVERAGE_DRIVEN = "coverage"
    OPPORTUNISTIC = "opportunistic"
    ADVERSARY_FORCED = "adversary"

    @classmethod
    def parse(cls, label: str) -> "TransitionKind":
        key = label.strip().lower().replace("_", "-")
        aliases = {"coverage-driven": "coverage", "adversary-forced": "adversary"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ValidationError(f"unknown transition kind '{label}'") from None


COST_MULTIPLIERS: Dict[TransitionKind, float] = {
    TransitionKind.PLANNED: 1.0,
    TransitionKind.COVERAGE_DRIVEN: 1.3,
    TransitionKind.OPPORTUNISTIC: 0.8,
    TransitionKind.ADVERSARY_FORCED: 2.0,
}


def cost_multiplier(kind: TransitionKind) -> float:
    return COST_MULTIPLIERS[kind]


class SurvivalMatrixSet:
    """
    One square survival matrix per trust component, indexed by (from_rat, to_rat).

    Matrices are read-only once built; overrides produce a new set.
    """

    def __init__(self, rats: Sequence[str], matrices: Mapping[TrustComponent, np.ndarray]):
        self.rats: Tuple[str, ...] = tuple(rats)
        if len(set(self.rats)) != len(self.rats):
            raise ConfigurationError("duplicate RAT in survival matrices")
        self._index = {rat: i for i, rat in enumerate(self.rats)}
        n = len(self.rats)
        self._matrices: Dict[TrustComponent, np.ndarray] = {}
        for component in COMPONENTS:
            if component not in matrices:
                raise ConfigurationError(f"missing survival matrix for {component.value}")
            m = np.array(matrices[component], dtype=np.float64)
            if m.shape != (n, n):
                raise ConfigurationError(
                    f"survival matrix {component.value} has shape {m.shape}, expected {(n, n)}")
            if np.isnan(m).any() or (m < 0.0).any() or (m > 1.0).any():
                raise ConfigurationError(f"survival matrix {component.value} has entries outside [0,1]")
            m.setflags(write=False)
            self._matrices[component] = m

    @classmethod
    def from_entries(cls, rats: Sequence[str],
                     entries: Mapping[TrustComponent, Mapping[Tuple[str, str], float]]) -> "SurvivalMatrixSet":
        """Build from sparse (from, to) -> σ entries; every cell must be given."""
        rats = tuple(rats)
        index = {rat: i for i, rat in enumerate(rats)}
        matrices = {}
        for component in COMPONENTS:
            m = np.full((len(rats), len(rats)), np.nan)
            for (src, dst), value in entries.get(component, {}).items():
                if src not in index:
                    raise UnknownRatError(src)
                if dst not in index:
                    raise UnknownRatError(dst)
                m[index[src], index[dst]] = value
            missing = [(rats[i], rats[j]) for i, j in zip(*np.where(np.isnan(m)))]
            if missing:
                src, dst = missing[0]
                raise ConfigurationError(
                    f"survival {component.value}: no entry for {src}.{dst} ({len(missing)} missing)")
            matrices[component] = m
        return cls(rats, matrices)

    def _pos(self, rat: str) -> int:
        try:
            return self._index[rat]
        except KeyError:
            raise UnknownRatError(rat) from None

    def __contains__(self, rat: str) -> bool:
        return rat in self._index

    def matrix(self, component: TrustComponent) -> np.ndarray:
        return self._matrices[component]

    def sigma(self, component: TrustComponent, src: str, dst: str) -> float:
        return float(self._matrices[component][self._pos(src), self._pos(dst)])

    def row(self, src: str, dst: str) -> Tuple[float, ...]:
        """σ vector for one transition, in canonical component order."""
        i, j = self._pos(src), self._pos(dst)
        return tuple(float(self._matrices[c][i, j]) for c in COMPONENTS)

    def with_entries(self, overrides: Mapping[TrustComponent, Mapping[Tuple[str, str], float]]) -> "SurvivalMatrixSet":
        matrices = {c: self._matrices[c].copy() for c in COMPONENTS}
        for component, cells in overrides.items():
            for (src, dst), value in cells.items():
                matrices[component][self._pos(src), self._pos(dst)] = value
        return SurvivalMatrixSet(self.rats, matrices)

    def restricted_to(self, rats: Sequence[str]) -> "SurvivalMatrixSet":
        idx = [self._pos(r) for r in rats]
        return SurvivalMatrixSet(rats, {c: self._matrices[c][np.ix_(idx, idx)] for c in COMPONENTS})

    def diagonal_violations(self, component: TrustComponent) -> List[Tuple[str, str]]:
        """(row, column) cells whose off-diagonal survival exceeds the row's diagonal."""
        m = self._matrices[component]
        found = []
        for i, src in enumerate(self.rats):
            for j, dst in enumerate(self.rats):
                if i != j and m[i, j] > m[i, i]:
                    found.append((src, dst))
        return found


@dataclass(frozen=True)
class CrossingRecord:
    time: float                  # seconds since mission start
    from_rat: str
    to_rat: str
    kind: TransitionKind
    pre_state: TrustState
    post_state: TrustState
    recovered_state: TrustState
    cost_mJ: float
    trust_gap_s: float
    portable_cost_mJ: Optional[float] = None
    cost_source: str = "formula"
    accepted: FrozenSet[TrustComponent] = field(default_factory=frozenset)
    exploited: bool = False

    def __post_init__(self):
        if math.isnan(self.cost_mJ) or self.cost_mJ < 0:
            raise ValidationError(f"crossing cost must be >= 0, got {self.cost_mJ}")

    @property
    def alpha(self) -> float:
        return cost_multiplier(self.kind)

    @property
    def label(self) -> str:
        return f"{self.from_rat}->{self.to_rat}"


def apply_survival(state: TrustState, sigma: Sequence[float]) -> TrustState:
    return TrustState.from_array(state.as_array() * np.asarray(sigma, dtype=np.float64))


def apply_crossing(state: TrustState, src: str, dst: str, matrices: SurvivalMatrixSet) -> TrustState:
    """s_j(t+) = σ_j(src, dst) · s_j(t-) for every component."""
    return apply_survival(state, matrices.row(src, dst))


def recovery_cost(src: str, to: RatProfile, kind: TransitionKind, matrices: SurvivalMatrixSet) -> float:
    """α(kind) · Σ_j c_j(to) · (1 − σ_j(src, to)), in millijoules."""
    sigma = np.asarray(matrices.row(src, to.rat_id))
    deficit = float(np.dot(np.asarray(to.cost), 1.0 - sigma))
    return cost_multiplier(kind) * deficit


def recover(post_state: TrustState, to: RatProfile) -> TrustState:
    """Full re-authentication on `to`: s_j <- min(ceiling_j, max(s_j, r_j))."""
    raised = np.maximum(post_state.as_array(), np.asarray(to.reauth))
    return TrustState.from_array(np.minimum(raised, np.asarray(to.ceiling)))
