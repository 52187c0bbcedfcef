import pytest

from errors import FlowAssignmentError, ValidationError
from trust.composition import (
    FlowAssignment,
    ParallelLinkSet,
    Sensitivity,
    aggregate_state,
    flagged_flows,
    parallel_compose,
    per_flow_network_trust,
)
from trust.core import TrustComponent, TrustState, WeightVector, composite_score


def _links(**states) -> ParallelLinkSet:
    links = ParallelLinkSet()
    for rat, values in states.items():
        links.activate(rat, TrustState(values))
    return links


def test_component_aggregation_rules():
    links = _links(
        lte=(0.9, 0.6, 0.8, 0.7, 0.8),
        mesh=(0.3, 0.9, 0.2, 0.2, 0.4),
    )
    state = aggregate_state(links)
    # id, dev: strongest; ctx: mean; net, pol: weakest
    assert state.values == pytest.approx((0.9, 0.9, 0.5, 0.2, 0.4))


def test_single_link_is_its_own_composite():
    links = _links(lte=(0.9, 0.6, 0.8, 0.7, 0.8))
    weights = WeightVector.named("com")
    assert parallel_compose(links, weights) == pytest.approx(
        composite_score(links.links["lte"], weights))


def test_silo_context_override():
    links = _links(lte=(0.9, 0.9, 0.9, 0.9, 0.9), ocusync=(0.8, 0.8, 0.1, 0.8, 0.8))
    state = aggregate_state(links, {"ocusync": 0.5})
    assert state[TrustComponent.CONTEXT] == pytest.approx(0.7)


def test_empty_set_is_rejected():
    with pytest.raises(ValidationError):
        aggregate_state(ParallelLinkSet())


def test_link_lifecycle():
    links = _links(lte=(0.5,) * 5)
    with pytest.raises(ValidationError):
        links.activate("lte", TrustState((0.5,) * 5))
    with pytest.raises(ValidationError):
        links.update("mesh", TrustState((0.5,) * 5))
    links.update("lte", TrustState((0.6,) * 5))
    assert links.links["lte"].values[0] == 0.6
    links.deactivate("lte")
    links.deactivate("lte")
    assert "lte" not in links and len(links) == 0


def test_per_flow_network_trust():
    links = _links(lte=(0.9, 0.9, 0.9, 0.8, 0.9), mesh=(0.3, 0.3, 0.3, 0.2, 0.3))
    flows = [
        FlowAssignment("video", "lte", Sensitivity.HIGH),
        FlowAssignment("status", "mesh", Sensitivity.LOW),
        FlowAssignment("mission", "mesh", Sensitivity.HIGH),
    ]
    assert per_flow_network_trust(flows, links) == {"video": 0.8, "status": 0.2, "mission": 0.2}
    assert flagged_flows(flows, links) == ["mission"]


def test_flow_on_inactive_link():
    links = _links(lte=(0.5,) * 5)
    with pytest.raises(FlowAssignmentError):
        per_flow_network_trust([FlowAssignment("x", "satellite")], links)


def test_sensitivity_parse_and_thresholds():
    assert Sensitivity.parse("HIGH") is Sensitivity.HIGH
    assert FlowAssignment("f", "lte", Sensitivity.MEDIUM).threshold == 0.4
    assert FlowAssignment("f", "lte").threshold == 0.0
    with pytest.raises(ValidationError):
        Sensitivity.parse("secret")
