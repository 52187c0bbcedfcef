# core.py
# Trust-state representation, composite scoring, temporal decay and ceilings

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, Mapping, Tuple

import numpy as np

from errors import ConfigurationError, UnknownRatError, ValidationError

logger = logging.getLogger(__name__)

WEIGHT_TOLERANCE = 1e-9


class TrustComponent(Enum):
    IDENTITY = "id"
    DEVICE = "dev"
    CONTEXT = "ctx"
    NETWORK = "net"
    POLICY = "pol"

    @property
    def index(self) -> int:
        return COMPONENTS.index(self)

    @classmethod
    def parse(cls, label: str) -> "TrustComponent":
        try:
            return cls(label.strip().lower())
        except ValueError:
            raise ValidationError(f"unknown trust component '{label}'") from None


# Canonical ordering used for every serialized vector
COMPONENTS: Tuple[TrustComponent, ...] = tuple(TrustComponent)

RAT_FAMILIES = (
    "cellular",
    "lpwan-star",
    "lora-mesh",
    "proprietary-c2",
    "telemetry-serial",
    "ble",
    "wifi",
    "satellite",
)


def _vector(values: Iterable[float], name: str) -> Tuple[float, ...]:
    vec = tuple(float(v) for v in values)
    if len(vec) != len(COMPONENTS):
        raise ValidationError(f"{name} needs {len(COMPONENTS)} values, got {len(vec)}")
    return vec


def _check_unit(vec: Tuple[float, ...], name: str) -> None:
    for component, value in zip(COMPONENTS, vec):
        if math.isnan(value) or value < 0.0 or value > 1.0:
            raise ValidationError(f"{name}[{component.value}] = {value} is outside [0,1]")


@dataclass(frozen=True)
class TrustState:
    """Five trust components (id, dev, ctx, net, pol), each in [0,1]."""

    values: Tuple[float, ...]

    def __post_init__(self):
        vec = _vector(self.values, "trust state")
        _check_unit(vec, "trust state")
        object.__setattr__(self, "values", vec)

    @classmethod
    def of(cls, *values: float) -> "TrustState":
        return cls(tuple(values))

    @classmethod
    def zeros(cls) -> "TrustState":
        return cls((0.0,) * len(COMPONENTS))

    @classmethod
    def from_array(cls, array: np.ndarray) -> "TrustState":
        # Products of unit-interval values can land a few ulps outside [0,1]
        return cls(tuple(float(v) for v in np.clip(array, 0.0, 1.0)))

    def __getitem__(self, component: TrustComponent) -> float:
        return self.values[component.index]

    def with_component(self, component: TrustComponent, value: float) -> "TrustState":
        vec = list(self.values)
        vec[component.index] = value
        return TrustState(tuple(vec))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def as_dict(self) -> Dict[str, float]:
        return {c.value: v for c, v in zip(COMPONENTS, self.values)}

    def __le__(self, other: "TrustState") -> bool:
        return all(a <= b for a, b in zip(self.values, other.values))


@dataclass(frozen=True)
class WeightVector:
    values: Tuple[float, ...]

    def __post_init__(self):
        vec = _vector(self.values, "weights")
        for component, w in zip(COMPONENTS, vec):
            if not w > 0.0 or w > 1.0:
                raise ValidationError(f"weight {component.value} = {w} must be in (0,1]")
        total = math.fsum(vec)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise ValidationError(f"weights sum {total:g} ≠ 1")
        object.__setattr__(self, "values", vec)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    @classmethod
    def named(cls, name: str) -> "WeightVector":
        try:
            return WEIGHT_PROFILES[name]
        except KeyError:
            raise ValidationError(f"unknown weight profile '{name}'") from None


WEIGHT_PROFILES: Dict[str, WeightVector] = {
    # Defence / contested environment: identity and device dominate
    "def": WeightVector((0.30, 0.25, 0.15, 0.15, 0.15)),
    # Commercial IoT: network and context weighted up
    "com": WeightVector((0.20, 0.15, 0.20, 0.25, 0.20)),
    "uniform": WeightVector((0.2, 0.2, 0.2, 0.2, 0.2)),
}


@dataclass(frozen=True)
class DecayParams:
    """
    Decay configuration for every registered RAT.

    rates:    rat_id -> per-component λ (1/minute)
    shapes:   rat_id -> per-component Weibull shape k (k = 1 is pure exponential)
    triggers: event name -> per-component multiplicative drop factor
    """

    rates: Mapping[str, Tuple[float, ...]]
    shapes: Mapping[str, Tuple[float, ...]] = field(default_factory=dict)
    triggers: Mapping[str, Tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        rates = {rat: _vector(v, f"decay[{rat}]") for rat, v in self.rates.items()}
        for rat, vec in rates.items():
            if any(math.isnan(l) or l < 0.0 for l in vec):
                raise ValidationError(f"decay rates for {rat} must be >= 0")
        shapes = {rat: _vector(v, f"shape[{rat}]") for rat, v in self.shapes.items()}
        for rat, vec in shapes.items():
            if any(not k > 0.0 for k in vec):
                raise ValidationError(f"decay shapes for {rat} must be > 0")
        triggers = {name: _vector(v, f"trigger[{name}]") for name, v in self.triggers.items()}
        for name, vec in triggers.items():
            _check_unit(vec, f"trigger {name}")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "shapes", shapes)
        object.__setattr__(self, "triggers", triggers)

    def rate(self, rat: str) -> np.ndarray:
        if rat not in self.rates:
            raise UnknownRatError(rat)
        return np.asarray(self.rates[rat], dtype=np.float64)

    def shape(self, rat: str) -> np.ndarray:
        return np.asarray(self.shapes.get(rat, (1.0,) * len(COMPONENTS)), dtype=np.float64)

    @classmethod
    def from_profiles(cls, profiles: Mapping[str, "RatProfile"],
                      triggers: Mapping[str, Tuple[float, ...]] = None) -> "DecayParams":
        return cls(
            rates={rat: p.decay for rat, p in profiles.items()},
            shapes={rat: p.shape for rat, p in profiles.items()},
            triggers=dict(triggers or {}),
        )


@dataclass(frozen=True)
class RatProfile:
    """Trust capabilities of one radio access technology."""

    rat_id: str
    family: str
    ceiling: Tuple[float, ...]
    reauth: Tuple[float, ...]
    cost: Tuple[float, ...]                 # mJ to fully re-establish each component
    verify_energy: float = 0.0              # mJ per continuous-verification tick
    decay: Tuple[float, ...] = (0.0,) * 5   # λ per component, 1/minute
    shape: Tuple[float, ...] = (1.0,) * 5
    latency: Tuple[float, ...] = (0.0,) * 5  # ms to fully re-establish each component
    mutual_auth: bool = False
    trust_silo: bool = False
    connected: bool = False

    def __post_init__(self):
        if self.family not in RAT_FAMILIES:
            raise ConfigurationError(f"{self.rat_id}: unknown family '{self.family}'")
        for name in ("ceiling", "reauth", "cost", "decay", "shape", "latency"):
            object.__setattr__(self, name, _vector(getattr(self, name), f"{self.rat_id}.{name}"))
        _check_unit(self.ceiling, f"{self.rat_id}.ceiling")
        _check_unit(self.reauth, f"{self.rat_id}.reauth")
        for component, r, cap in zip(COMPONENTS, self.reauth, self.ceiling):
            if r > cap:
                raise ConfigurationError(
                    f"{self.rat_id}: reauth[{component.value}] = {r} exceeds ceiling {cap}")
        if any(c < 0.0 for c in self.cost) or self.verify_energy < 0.0:
            raise ConfigurationError(f"{self.rat_id}: costs must be >= 0")
        if any(l < 0.0 for l in self.latency):
            raise ConfigurationError(f"{self.rat_id}: latencies must be >= 0")
        if any(l < 0.0 for l in self.decay) or any(not k > 0.0 for k in self.shape):
            raise ConfigurationError(f"{self.rat_id}: decay needs λ >= 0 and k > 0")

    def ceiling_state(self) -> TrustState:
        return TrustState(self.ceiling)

    def reauth_state(self) -> TrustState:
        return TrustState(self.reauth)

    def updated(self, **changes) -> "RatProfile":
        return replace(self, **changes)


def composite_score(state: TrustState, weights: WeightVector) -> float:
    """Weighted aggregation Σ w_j·s_j of the five trust components."""
    if not isinstance(weights, WeightVector):
        weights = WeightVector(tuple(weights))
    score = float(np.dot(weights.as_array(), state.as_array()))
    return min(1.0, max(0.0, score))


def decay(state: TrustState, dt: float, params: DecayParams, rat: str) -> TrustState:
    """
    Decay every component over dt minutes on a stable RAT.

    s_j <- s_j · exp(-(λ_j·dt)^k_j); with k_j = 1 this is plain exponential decay.
    """
    if math.isnan(dt) or dt < 0:
        raise ValidationError(f"decay interval must be >= 0, got {dt}")
    rate = params.rate(rat)
    shape = params.shape(rat)
    factor = np.exp(-np.power(rate * dt, shape))
    return TrustState.from_array(state.as_array() * factor)


def apply_event_decay(state: TrustState, event_name: str, params: DecayParams) -> TrustState:
    """Step drop triggered by a named event; unknown events leave the state untouched."""
    factors = params.triggers.get(event_name)
    if factors is None:
        logger.warning("No decay trigger registered for event '%s'; ignoring", event_name)
        return state
    return TrustState.from_array(state.as_array() * np.asarray(factors))


def clamp_to_ceiling(state: TrustState, profile: RatProfile) -> TrustState:
    return TrustState.from_array(np.minimum(state.as_array(), np.asarray(profile.ceiling)))


def trust_ceiling(profile: RatProfile, weights: WeightVector) -> float:
    """Highest composite score reachable on this RAT."""
    return composite_score(profile.ceiling_state(), weights)


def threshold_reachability(profiles: Mapping[str, RatProfile], weights: WeightVector,
                           t_min: float) -> Dict[str, Tuple[float, bool]]:
    """
    For every RAT: (composite ceiling, whether t_min is reachable at all).

    A RAT whose ceiling sits below t_min needs a RAT-dependent threshold
    min(t_min, ceiling) or compensating controls.
    """
    result = {}
    for rat_id, profile in profiles.items():
        ceiling = trust_ceiling(profile, weights)
        result[rat_id] = (ceiling, not ceiling < t_min)
    return result
