import json

import pytest

import ratsim

FEASIBILITY = """
[mission]
name = budget
duration = 1
initial_rat = 5G
initial_auth = 420
p_max = {p_max}
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_reproduce_case_study_matches_published(capsys):
    assert ratsim.main(["reproduce", "case-study", "--paper-check"]) == ratsim.EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("Scenario: ")
    assert "crossing costs: 6 table" in out
    assert "every published figure matches" in out


def test_reproduce_worked_example_reports_mismatches(capsys):
    assert ratsim.main(["reproduce", "worked-example", "--paper-check"]) == ratsim.EXIT_OK
    mismatches = [line for line in capsys.readouterr().out.splitlines() if "MISMATCH" in line]
    assert len(mismatches) == 3
    assert any("crossing.1.post_composite" in line for line in mismatches)


def test_unknown_builtin_is_a_usage_error():
    with pytest.raises(SystemExit) as info:
        ratsim.main(["reproduce", "moon-landing"])
    assert info.value.code == 2


def test_simulate_writes_outputs(tmp_path, capsys):
    scenario = _write(tmp_path, "one.scn", FEASIBILITY.format(p_max=100000))
    timeline, report = tmp_path / "t.csv", tmp_path / "r.json"
    code = ratsim.main(["simulate", scenario, "--timeline", str(timeline), "--report", str(report)])
    assert code == ratsim.EXIT_OK
    assert timeline.read_text(encoding="utf-8").startswith("t_s,event,active_rats,")
    data = json.loads(report.read_text(encoding="utf-8"))
    assert data["total_auth_naive_mJ"] == 420.0
    assert "Power budget: Feasible" in capsys.readouterr().out


@pytest.mark.parametrize("strict,expected", [(True, ratsim.EXIT_INFEASIBLE), (False, ratsim.EXIT_OK)])
def test_strict_budget(tmp_path, capsys, strict, expected):
    scenario = _write(tmp_path, "tight.scn", FEASIBILITY.format(p_max=1))
    argv = ["simulate", scenario] + (["--strict-budget"] if strict else [])
    assert ratsim.main(argv) == expected
    assert "Infeasible(366.0 mJ)" in capsys.readouterr().out


def test_seed_override_changes_the_run(tmp_path):
    text = FEASIBILITY.format(p_max=100000) + "\n[event]\nat = 10\ntype = transition\nto = 4G\n"
    scenario = _write(tmp_path, "seeded.scn", text)
    first = ratsim.simulate_file(scenario, seed=1)
    again = ratsim.simulate_file(scenario, seed=1)
    other = ratsim.simulate_file(scenario, seed=2)
    assert first.timeline_csv == again.timeline_csv
    assert first.timeline_csv != other.timeline_csv


def test_simulate_reports_diagnostics(tmp_path, capsys):
    scenario = _write(tmp_path, "bad.scn", "[mission]\nname = bad\nduration = 1\ninitial_rat = 6G\n")
    assert ratsim.main(["simulate", scenario]) == ratsim.EXIT_DIAGNOSTICS
    err = capsys.readouterr().err
    assert "undeclared RAT '6G'" in err
    assert "4:15" in err


def test_batch_mode_writes_one_file_per_scenario(tmp_path, capsys):
    first = _write(tmp_path, "a.scn", FEASIBILITY.format(p_max=100000))
    second = _write(tmp_path, "b.scn", FEASIBILITY.format(p_max=100000))
    out_dir = tmp_path / "timelines"
    assert ratsim.main(["simulate", first, second, "--timeline", str(out_dir)]) == ratsim.EXIT_OK
    assert sorted(p.name for p in out_dir.iterdir()) == ["a.csv", "b.csv"]
    out = capsys.readouterr().out
    assert out.index(f"== {first}") < out.index(f"== {second}")


def test_validate(tmp_path, capsys):
    good = _write(tmp_path, "good.scn", FEASIBILITY.format(p_max=100000))
    assert ratsim.main(["validate", good]) == ratsim.EXIT_OK
    assert "ok (9 RATs, 0 events, 1 min)" in capsys.readouterr().out

    empty = _write(tmp_path, "empty.scn", "")
    assert ratsim.main(["validate", empty]) == ratsim.EXIT_DIAGNOSTICS
    assert "missing [mission] section" in capsys.readouterr().err

    assert ratsim.main(["validate", str(tmp_path / "absent.scn")]) == ratsim.EXIT_DIAGNOSTICS
    assert "cannot read" in capsys.readouterr().err


def test_matrices_command(tmp_path, capsys):
    assert ratsim.main(["matrices", "--component", "net"]) == ratsim.EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("[survival net]\n5G.5G = 0.9\n5G.4G = 0.8\n")
    assert out.count("[survival ") == 1

    override = _write(tmp_path, "o.scn", FEASIBILITY.format(p_max=1) + "\n[survival net]\n5G.4G = 0.1\n")
    assert ratsim.main(["matrices", "--component", "net", "--scenario", override]) == ratsim.EXIT_OK
    assert "5G.4G = 0.1\n" in capsys.readouterr().out
