from dataclasses import replace

import pytest

from errors import ConfigurationError, ScenarioError, ValidationError
from parsers.scenario_parser import parse_scenario
from reports.emitters import emit_timeline
from sim.mission import (
    Timeline,
    TimelineSample,
    budget_check,
    compare_published,
    mission_energy,
    run,
    sub_threshold_exposure,
    verification_count,
)
from trust.core import TrustComponent
from trust.transition import TransitionKind

ID, DEV, CTX = TrustComponent.IDENTITY, TrustComponent.DEVICE, TrustComponent.CONTEXT


def _sample_at(timeline, t_s):
    return next(s for s in timeline.samples if s.t_ms == int(t_s * 1000))


# Shipped scenarios ---------------------------------------------------------

def test_worked_example(builtin):
    _, _, report = builtin("worked-example")
    (crossing,) = report.crossings
    assert crossing.label == "4G->lorawan"
    assert crossing.kind is TransitionKind.COVERAGE_DRIVEN
    assert crossing.cost_mJ == pytest.approx(946.4, abs=0.05)
    assert crossing.post_state.values == pytest.approx((0.0, 0.574, 0.375, 0.0, 0.156))
    assert crossing.recovered_state.values == pytest.approx((0.65, 0.574, 0.55, 0.45, 0.35))
    assert 0.5 <= crossing.trust_gap_s <= 3.0
    assert report.verification_count == 6


def test_worked_example_published_discrepancies(builtin):
    _, _, report = builtin("worked-example")
    found = {d.metric: d for d in report.discrepancies}
    assert set(found) == {"crossing.1.pre_composite", "crossing.1.post_composite",
                          "crossing.1.recovered_composite"}
    assert found["crossing.1.pre_composite"].computed == pytest.approx(0.8175)
    assert found["crossing.1.post_composite"].computed == pytest.approx(0.1923)
    assert found["crossing.1.recovered_composite"].computed == pytest.approx(0.5086)


def test_worked_example_timeline_shape(builtin):
    _, timeline, report = builtin("worked-example")
    events = [s.event for s in timeline.samples]
    assert sum("crossing:4G->lorawan" in e for e in events) == 1
    assert sum("recovered:4G->lorawan" in e for e in events) == 1
    assert _sample_at(timeline, 59).composite == pytest.approx(0.8175)
    assert _sample_at(timeline, 60).composite == pytest.approx(0.1923)
    crossing = report.crossings[0]
    last = timeline.samples[-1]
    if crossing.exploited:
        assert last.state.values == pytest.approx((0.65, 0.574, 0.0, 0.45, 0.0))
    else:
        assert last.composite == pytest.approx(0.5086, abs=1e-4)
    for sample in timeline.samples:
        assert sample.below_threshold == (sample.composite < 0.6)


def test_case_study_ledger(builtin):
    _, _, report = builtin("case-study")
    assert [r.label for r in report.crossings] == [
        "5G->4G", "4G->lorawan", "lorawan->meshtastic",
        "meshtastic->lorawan", "lorawan->4G", "4G->5G"]
    assert report.total_auth_naive_mJ == pytest.approx(2980.0)
    assert report.total_auth_portable_mJ == pytest.approx(1120.0)
    assert report.saving_pct == pytest.approx(62.4, abs=0.05)
    assert report.cost_sources == {"table": 6}
    assert report.verification_count == 180
    assert report.discrepancies == []


def test_case_study_energy_is_consistent(builtin):
    _, timeline, report = builtin("case-study")
    assert mission_energy(report.crossings, 420.0) == pytest.approx(2980.0)
    assert mission_energy(report.crossings, 420.0, portable=True) == pytest.approx(1120.0)
    assert report.total_energy_mJ == pytest.approx(1120.0 + report.verification_mJ)
    assert timeline.samples[-1].energy_mJ == pytest.approx(report.total_energy_mJ)
    energies = [s.energy_mJ for s in timeline.samples]
    assert energies == sorted(energies)
    assert report.budget is not None and report.budget.feasible


def test_case_study_trust_behaviour(builtin):
    scenario, timeline, report = builtin("case-study")
    assert timeline.samples[0].composite == pytest.approx(0.922, abs=1e-3)
    assert report.sub_threshold_minutes > 0
    assert report.ceilings["lorawan"][1] is False
    assert report.ceilings["5G"][1] is True
    assert report.parallel_composite_mean is not None
    for record in report.crossings:
        assert record.post_state <= record.pre_state
        assert record.recovered_state <= scenario.profiles[record.to_rat].ceiling_state()
    flows = {f.flow_id: f for f in report.flows}
    assert flows["telemetry"].flagged_minutes == pytest.approx(90.0)
    assert flows["survey-data"].min_network_trust is not None
    assert "ocusync" in timeline.samples[0].active_rats


def test_figure_2_exposure(builtin):
    _, timeline, report = builtin("figure-2")
    assert report.sub_threshold_minutes == pytest.approx(54.0)
    assert report.sub_threshold_fraction == pytest.approx(0.6)
    assert {d.metric for d in report.discrepancies} == {"exposure.minutes", "exposure.fraction"}
    assert all(s.state is None for s in timeline.samples)
    assert _sample_at(timeline, 18 * 60).composite == pytest.approx(0.35)


def test_portability_ladder(builtin):
    _, _, report = builtin("portability-ladder")
    assert [r.energy_mJ for r in report.ladder] == pytest.approx([850.0, 320.0, 180.0])
    assert [r.latency_ms for r in report.ladder] == pytest.approx([6200.0, 3800.0, 2100.0])
    assert report.metrics["ladder.saving_pct"] == pytest.approx(79.0, abs=1.0)
    assert report.metrics["ladder.latency_saving_pct"] == pytest.approx(66.0, abs=1.0)
    assert report.discrepancies == []
    (crossing,) = report.crossings
    assert crossing.accepted == {ID, DEV, CTX}
    assert crossing.cost_mJ == pytest.approx(850.0)
    assert crossing.portable_cost_mJ == pytest.approx(180.0)
    assert report.artefact_decisions == {"Accepted": 3}


def test_runs_are_deterministic(builtin):
    scenario, timeline, _ = builtin("case-study")
    again, _ = run(scenario)
    assert emit_timeline(again) == emit_timeline(timeline)


# Scripted behaviour ------------------------------------------------------------

JAM_SWEEP = """
[mission]
name = jam
duration = 5
initial_rat = 5G

[event]
at = 60
type = jam
rat = 5G
duration = 30
"""


def test_jamming_forces_a_downgrade_for_every_seed(build_scenario):
    base = build_scenario(JAM_SWEEP)
    for seed in range(100):
        _, report = run(replace(base, seed=seed))
        (crossing,) = report.crossings
        assert crossing.kind is TransitionKind.ADVERSARY_FORCED
        assert crossing.alpha == 2.0
        assert crossing.to_rat == "4G"
        assert crossing.cost_mJ == pytest.approx(82.0)
        assert 2.0 <= crossing.trust_gap_s <= 15.0


def test_removing_the_adversary_never_costs_more(build_scenario):
    attacked = build_scenario(JAM_SWEEP)
    calm = replace(attacked, events=[])
    assert run(calm)[1].total_energy_mJ <= run(attacked)[1].total_energy_mJ


def test_scripted_transition_into_jammed_rat_is_redirected(build_scenario):
    scenario = build_scenario("""
        [mission]
        name = redirect
        duration = 3
        initial_rat = 5G

        [event]
        at = 30
        type = jam
        rat = wifi
        duration = 120

        [event]
        at = 60
        type = transition
        to = wifi
        cost = 10
    """)
    _, report = run(scenario)
    (crossing,) = report.crossings
    assert crossing.to_rat == "4G"
    assert crossing.kind is TransitionKind.ADVERSARY_FORCED
    assert crossing.cost_source == "formula"


def test_force_reclassifies_next_transition(build_scenario):
    scenario = build_scenario("""
        [mission]
        name = force
        duration = 3
        initial_rat = 5G

        [event]
        at = 30
        type = force
        target = lorawan

        [event]
        at = 60
        type = transition
        to = 4G
    """)
    _, report = run(scenario)
    (crossing,) = report.crossings
    assert crossing.to_rat == "lorawan"
    assert crossing.kind is TransitionKind.ADVERSARY_FORCED


def test_forced_transition_reprices_table_cost(build_scenario):
    scenario = build_scenario("""
        [mission]
        name = force-table
        duration = 3
        initial_rat = 5G

        [event]
        at = 30
        type = force
        target = 4G

        [event]
        at = 60
        type = transition
        to = 4G
        kind = planned
        cost = 280
    """)
    _, report = run(scenario)
    (crossing,) = report.crossings
    assert crossing.kind is TransitionKind.ADVERSARY_FORCED
    assert crossing.alpha == 2.0
    assert crossing.cost_source == "table"
    assert crossing.cost_mJ == pytest.approx(560.0)


def test_jamming_with_two_rats_falls_back_to_the_other(build_scenario):
    base = build_scenario("""
        [mission]
        name = jam-pair
        duration = 5
        initial_rat = 5G
        available = 5G lorawan

        [event]
        at = 60
        type = jam
        rat = 5G
        duration = 30
    """)
    for seed in range(20):
        _, report = run(replace(base, seed=seed))
        (crossing,) = report.crossings
        assert (crossing.from_rat, crossing.to_rat) == ("5G", "lorawan")
        assert crossing.kind is TransitionKind.ADVERSARY_FORCED
        assert crossing.cost_mJ == pytest.approx(1456.0)


ROGUE = """
[mission]
name = rogue
duration = 3
initial_rat = 5G

[portability]
carry = id
improved = id:0.6
verify_cost = id:30

[event]
at = 30
type = rogue
fake = evil-mesh
mimics = {mimics}

[event]
at = 60
type = transition
to = {mimics}
"""


def test_rogue_infrastructure_caps_trust(build_scenario):
    timeline, report = run(build_scenario(ROGUE.format(mimics="meshtastic")))
    assert report.artefact_decisions == {"RejectedIntegrity": 1}
    last = timeline.samples[-1]
    assert last.active_rats[0] == "evil-mesh"
    assert max(last.state.values) <= 0.1 + 1e-12
    assert any("rogue:evil-mesh" in s.event for s in timeline.samples)


def test_mutual_authentication_rejects_rogue(build_scenario):
    timeline, report = run(build_scenario(ROGUE.format(mimics="lorawan")))
    assert report.artefact_decisions == {"Accepted": 1}
    assert timeline.samples[-1].active_rats[0] == "lorawan"
    assert not any("rogue:" in s.event for s in timeline.samples)


REPLAY = """
[mission]
name = replay
duration = 10
initial_rat = 5G

[portability]
carry = id
improved = id:0.6
verify_cost = id:30

[event]
at = 60
type = transition
to = wifi
{extra}
"""


@pytest.mark.parametrize("extra,expected", [
    ("[event]\nat = 120\ntype = replay\nlabel = c1.id", "RejectedReplay"),
    ("[event]\nat = 100\ntype = revoke\nlabel = c1.id\n[event]\nat = 120\ntype = replay\nlabel = c1.id",
     "RejectedRevoked"),
    ("[event]\nat = 500\ntype = replay\nlabel = c1.id", "RejectedStale"),
])
def test_replayed_artefacts_are_refused(build_scenario, extra, expected):
    _, report = run(build_scenario(REPLAY.format(extra=extra)))
    assert report.crossings[0].accepted == {ID}
    assert report.replays == [("c1.id", expected)]


def test_replay_of_unknown_label_is_skipped(build_scenario):
    timeline, report = run(build_scenario(REPLAY.format(extra="[event]\nat = 90\ntype = replay\nlabel = c9.id")))
    assert report.replays == []
    assert "replay:missing" in _sample_at(timeline, 90).event


def test_issued_artefact_is_accepted_at_most_once(build_scenario):
    scenario = build_scenario("""
        [mission]
        name = issue
        duration = 2
        initial_rat = 5G

        [event]
        at = 30
        type = issue
        label = mine
        component = dev

        [event]
        at = 40
        type = replay
        label = mine

        [event]
        at = 50
        type = replay
        label = mine
    """)
    _, report = run(scenario)
    assert report.replays == [("mine", "Accepted"), ("mine", "RejectedReplay")]


STILL = """
[mission]
name = still
duration = 2
verify_interval = 600
initial_rat = 5G

[rat 5G]
decay = 0 0 0 0 0

[triggers]
gps-spoof = 1 1 0.5 1 1

{events}
"""


def test_flat_timeline_without_events(build_scenario):
    timeline, report = run(build_scenario(STILL.format(events="")))
    composites = {round(s.composite, 12) for s in timeline.samples}
    assert len(composites) == 1
    assert report.crossings == [] and report.verification_count == 0
    assert report.total_auth_naive_mJ == 0.0


def test_step_decay_event(build_scenario):
    events = "[event]\nat = 30\ntype = decay-event\nname = gps-spoof"
    timeline, _ = run(build_scenario(STILL.format(events=events)))
    assert _sample_at(timeline, 29).state[CTX] == pytest.approx(0.828)
    assert _sample_at(timeline, 30).state[CTX] == pytest.approx(0.414)
    assert _sample_at(timeline, 30).event == "decay:gps-spoof"


def test_unknown_decay_trigger_is_a_scenario_error():
    text = STILL.format(events="[event]\nat = 30\ntype = decay-event\nname = solar-flare")
    result = parse_scenario(text)
    assert not result.ok
    (error,) = [d for d in result.errors if "unknown decay trigger" in d.message]
    assert error.line == text[:text.index("[event]")].count("\n") + 1


@pytest.mark.parametrize("consistent,expected", [("yes", 0.848), ("no", 0.414)])
def test_remote_id_is_a_weak_context_signal(build_scenario, consistent, expected):
    events = f"[event]\nat = 30\ntype = remote-id\nconsistent = {consistent}"
    timeline, _ = run(build_scenario(STILL.format(events=events)))
    assert _sample_at(timeline, 30).state[CTX] == pytest.approx(expected)


def test_verification_refreshes_toward_last_verified_level(build_scenario):
    scenario = build_scenario("""
        [mission]
        name = refresh
        duration = 2
        initial_rat = 4G
        initial_state = 0.8 0.8 0.8 0.8 0.8

        [rat 4G]
        decay = 0.05 0.05 0.05 0.05 0.05
    """)
    timeline, report = run(scenario)
    assert report.verification_count == 4
    assert max(_sample_at(timeline, 29).state.values) < 0.8
    assert _sample_at(timeline, 30).state.values == pytest.approx((0.8,) * 5)
    assert report.verification_mJ == pytest.approx(4 * 3.5)


def test_parallel_composite_mode(build_scenario):
    scenario = build_scenario("""
        [mission]
        name = parallel
        duration = 1
        initial_rat = 5G
        parallel = ocusync
        composite = parallel
    """)
    timeline, report = run(scenario)
    assert timeline.samples[0].composite == pytest.approx(0.7367)
    assert timeline.samples[0].active_rats == ("5G", "ocusync")
    assert report.parallel_composite_min is not None


def test_data_flows_follow_the_primary_link(build_scenario):
    scenario = build_scenario("""
        [mission]
        name = flows
        duration = 2
        initial_rat = 5G

        [flows]
        video = data high
        uplink = lorawan low

        [event]
        at = 60
        type = transition
        to = meshtastic
    """)
    _, report = run(scenario)
    flows = {f.flow_id: f for f in report.flows}
    assert flows["video"].flagged_minutes == pytest.approx(1.0)
    assert flows["video"].min_network_trust <= 0.3
    assert flows["video"].inactive_minutes == 0.0
    assert flows["uplink"].min_network_trust is None
    assert flows["uplink"].inactive_minutes == pytest.approx(2.0)


def test_unrunnable_scenario_raises(default_scenario):
    broken = replace(default_scenario, initial_rat="6G")
    with pytest.raises(ScenarioError):
        run(broken)


# Ledger and exposure helpers ---------------------------------------------------

def test_verification_count():
    assert verification_count(90, 30) == 180
    assert verification_count(1, 7) == 8


def test_budget_check(default_scenario):
    scenario = replace(default_scenario, p_max=10.0)
    assert budget_check(scenario, 600.0).feasible
    verdict = budget_check(scenario, 600.5)
    assert not verdict.feasible and verdict.deficit_mJ == pytest.approx(0.5)
    assert verdict.label == "Infeasible(0.5 mJ)"


def test_negative_auth_power_is_infeasible(default_scenario, caplog):
    scenario = replace(default_scenario, p_max=10.0, p_flight=20.0)
    with caplog.at_level("WARNING"):
        verdict = budget_check(scenario, 5.0)
    assert not verdict.feasible and verdict.deficit_mJ == 5.0
    assert "Negative authentication power" in caplog.text


def test_budget_check_needs_p_max(default_scenario):
    with pytest.raises(ConfigurationError):
        budget_check(default_scenario, 1.0)


def _flat(value: float, minutes: float = 90.0) -> Timeline:
    end = int(minutes * 60_000)
    return Timeline(0.6, end, trace=[(0, value), (end, value)])


def test_exposure_of_constant_curves():
    assert sub_threshold_exposure(_flat(0.7)) == (0.0, 0.0)
    minutes, fraction = sub_threshold_exposure(_flat(0.3))
    assert minutes == pytest.approx(90.0) and fraction == pytest.approx(1.0)


def test_exposure_interpolates_threshold_crossings():
    timeline = Timeline(0.6, 60_000, trace=[(0, 0.4), (60_000, 0.8)])
    minutes, fraction = sub_threshold_exposure(timeline)
    assert minutes == pytest.approx(0.5)
    assert fraction == pytest.approx(0.5)


def test_exposure_needs_points():
    with pytest.raises(ValidationError):
        sub_threshold_exposure(Timeline(0.6, 1000))


def test_timeline_rejects_out_of_order_samples():
    timeline = Timeline(0.6, 10_000)
    timeline.append(TimelineSample(1000, "", ("5G",), None, 0.9, 5.0, False))
    with pytest.raises(ValidationError):
        timeline.append(TimelineSample(1000, "", ("5G",), None, 0.9, 5.0, False))
    with pytest.raises(ValidationError):
        timeline.append(TimelineSample(2000, "", ("5G",), None, 0.9, 4.0, False))


def test_compare_published_uses_printed_precision(caplog):
    metrics = {"cost": 946.4, "pre": 0.8175}
    with caplog.at_level("WARNING"):
        found = compare_published(metrics, {"cost": "946", "pre": "0.821", "absent": "1"})
    assert [d.metric for d in found] == ["pre"]
    assert found[0].tolerance == pytest.approx(0.0005)
    assert found[0].delta == pytest.approx(-0.0035)
    assert "absent" in caplog.text
