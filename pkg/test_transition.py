import pytest

from errors import ConfigurationError, UnknownRatError, ValidationError
from trust.core import RatProfile, TrustComponent, TrustState, WeightVector, composite_score
from trust.transition import (
    CrossingRecord,
    SurvivalMatrixSet,
    TransitionKind,
    apply_crossing,
    cost_multiplier,
    recover,
    recovery_cost,
)

PRE_4G = TrustState.of(0.88, 0.82, 0.75, 0.85, 0.78)


def test_cost_multipliers():
    assert cost_multiplier(TransitionKind.PLANNED) == 1.0
    assert cost_multiplier(TransitionKind.COVERAGE_DRIVEN) == 1.3
    assert cost_multiplier(TransitionKind.OPPORTUNISTIC) == 0.8
    assert cost_multiplier(TransitionKind.ADVERSARY_FORCED) == 2.0


def test_transition_kind_aliases():
    assert TransitionKind.parse("coverage-driven") is TransitionKind.COVERAGE_DRIVEN
    assert TransitionKind.parse("Adversary_Forced") is TransitionKind.ADVERSARY_FORCED
    assert TransitionKind.parse("planned") is TransitionKind.PLANNED
    with pytest.raises(ValidationError):
        TransitionKind.parse("teleport")


def test_default_row_for_4g_to_lorawan(matrices):
    assert matrices.row("4G", "lorawan") == pytest.approx((0.0, 0.7, 0.5, 0.0, 0.2))


def test_worked_example_crossing(matrices):
    post = apply_crossing(PRE_4G, "4G", "lorawan", matrices)
    assert post.values == pytest.approx((0.0, 0.574, 0.375, 0.0, 0.156))
    weights = WeightVector.named("com")
    assert composite_score(post, weights) == pytest.approx(0.1923, abs=1e-9)


def test_worked_example_cost(matrices, profiles):
    cost = recovery_cost("4G", profiles["lorawan"], TransitionKind.COVERAGE_DRIVEN, matrices)
    assert cost == pytest.approx(946.4, abs=0.05)


def test_worked_example_recovery(matrices, profiles):
    post = apply_crossing(PRE_4G, "4G", "lorawan", matrices)
    recovered = recover(post, profiles["lorawan"])
    assert recovered.values == pytest.approx((0.65, 0.574, 0.55, 0.45, 0.35))


def test_identity_survival_means_no_change():
    ones = {c: {(a, b): 1.0 for a in ("a", "b") for b in ("a", "b")} for c in TrustComponent}
    identity = SurvivalMatrixSet.from_entries(("a", "b"), ones)
    assert apply_crossing(PRE_4G, "a", "b", identity) == PRE_4G


def test_full_survival_costs_nothing():
    ones = {c: {(a, b): 1.0 for a in ("a", "b") for b in ("a", "b")} for c in TrustComponent}
    matrices = SurvivalMatrixSet.from_entries(("a", "b"), ones)
    target = RatProfile("b", "wifi", (1,) * 5, (1,) * 5, (100,) * 5)
    assert recovery_cost("a", target, TransitionKind.ADVERSARY_FORCED, matrices) == 0.0


def test_recovery_above_reauth_is_kept_and_clamped():
    target = RatProfile("b", "wifi", (0.8,) * 5, (0.5,) * 5, (0,) * 5)
    recovered = recover(TrustState.of(0.9, 0.6, 0.1, 0.0, 0.5), target)
    assert recovered.values == pytest.approx((0.8, 0.6, 0.5, 0.5, 0.5))


def test_missing_entry_is_reported():
    cells = {c: {("a", "a"): 1.0} for c in TrustComponent}
    with pytest.raises(ConfigurationError, match="no entry for"):
        SurvivalMatrixSet.from_entries(("a", "b"), cells)


def test_unknown_rat_in_entries():
    cells = {c: {("a", "zz"): 1.0} for c in TrustComponent}
    with pytest.raises(UnknownRatError):
        SurvivalMatrixSet.from_entries(("a",), cells)


def test_sigma_outside_unit_interval_rejected():
    cells = {c: {("a", "a"): 1.5} for c in TrustComponent}
    with pytest.raises(ConfigurationError, match="outside"):
        SurvivalMatrixSet.from_entries(("a",), cells)


def test_matrices_are_read_only_and_overrides_copy(matrices):
    with pytest.raises(ValueError):
        matrices.matrix(TrustComponent.IDENTITY)[0, 0] = 0.1
    changed = matrices.with_entries({TrustComponent.CONTEXT: {("4G", "lorawan"): 0.8}})
    assert changed.sigma(TrustComponent.CONTEXT, "4G", "lorawan") == 0.8
    assert matrices.sigma(TrustComponent.CONTEXT, "4G", "lorawan") == 0.5


def test_restricted_to(matrices):
    small = matrices.restricted_to(["4G", "lorawan"])
    assert small.rats == ("4G", "lorawan")
    assert small.row("4G", "lorawan") == matrices.row("4G", "lorawan")


def test_default_matrices_have_no_diagonal_violations(matrices):
    for component in TrustComponent:
        assert matrices.diagonal_violations(component) == []


def test_identity_islands(matrices):
    for island in ("meshtastic", "ocusync", "mavlink", "ble"):
        for other in matrices.rats:
            if other != island:
                assert matrices.sigma(TrustComponent.IDENTITY, island, other) == 0.0
                assert matrices.sigma(TrustComponent.IDENTITY, other, island) == 0.0


def test_crossing_record_rejects_negative_cost():
    with pytest.raises(ValidationError):
        CrossingRecord(0.0, "a", "b", TransitionKind.PLANNED, PRE_4G, PRE_4G, PRE_4G, -1.0, 0.1)


def test_crossing_record_label_and_alpha():
    record = CrossingRecord(60.0, "4G", "lorawan", TransitionKind.COVERAGE_DRIVEN,
                            PRE_4G, PRE_4G, PRE_4G, 946.4, 1.2)
    assert record.label == "4G->lorawan"
    assert record.alpha == 1.3
    assert record.cost_source == "formula"
