import json
import subprocess
import sys

from cmdpkit.cli import run


def invoke(*argv):
    return run(list(argv))


def haviv_path(instances_dir):
    return str(instances_dir / "haviv.json")


def test_solve_haviv_document(instances_dir):
    out = invoke("solve", haviv_path(instances_dir))
    assert out.exit_code == 0
    assert json.loads(out.report) == {
        "status": "optimal",
        "policy": {"y": "a"},
        "value": "5/1",
        "W": ["0/1"],
    }


def test_solve_with_start_flag(instances_dir):
    out = invoke("solve", haviv_path(instances_dir), "--start", "y")
    assert out.exit_code == 0
    doc = json.loads(out.report)
    assert doc["policy"] == {"y": "b"}
    assert doc["value"] == "20/1"


def test_solve_infeasible_exit_code(tmp_path):
    from cmdpkit import instances
    from cmdpkit.model import instance_to_json
    from fractions import Fraction

    path = tmp_path / "tight.json"
    path.write_text(instance_to_json(instances.haviv(bound=Fraction(1, 25))))
    out = invoke("solve", str(path))
    assert out.exit_code == 1
    doc = json.loads(out.report)
    assert doc["status"] == "infeasible"
    assert doc["feasible_count"] == 0


def test_residual_haviv(instances_dir):
    out = invoke("residual", haviv_path(instances_dir), "--to", "y")
    assert out.exit_code == 0
    doc = json.loads(out.report)
    assert doc["slack"] == ["3/40"]
    assert doc["time"] == 1
    assert doc["prob"] == "1/2"
    assert doc["residual_constraint"] == {"a": ["1/20"], "b": ["1/20"]}
    assert doc["residual_solve"]["policy"] == {"y": "a"}
    assert doc["residual_solve"]["value"] == "10/1"


def test_residual_unreachable_target_is_input_error(instances_dir):
    out = invoke("residual", haviv_path(instances_dir), "--to", "c3_0")
    assert out.exit_code == 2
    assert out.report == ""
    assert "c3_0" in out.error


def test_evaluate_policy_b(instances_dir):
    out = invoke(
        "evaluate", haviv_path(instances_dir), "--policy", "y=b", "--start", "y"
    )
    assert out.exit_code == 0
    doc = json.loads(out.report)
    assert doc["V"] == "20/1"
    assert doc["W"] == ["1/40"]


def test_samplepath_haviv(instances_dir):
    out = invoke("samplepath", haviv_path(instances_dir), "--policy", "y=a")
    assert out.exit_code == 1
    doc = json.loads(out.report)
    assert doc["feasible"] is False
    assert doc["witness"]["states"] == [f"c1_{k}" for k in range(5)]
    assert doc["witness"]["gain"] == ["-3/40"]


def test_certify_search_twochain(instances_dir):
    out = invoke(
        "certify", str(instances_dir / "twochain.json"), "--policy", "", "--search"
    )
    assert out.exit_code == 0
    doc = json.loads(out.report)
    assert doc["status"] == "certificate"
    assert doc["mu"] == ["1/2"]
    assert doc["gain"] == "1/2"


def test_certify_search_haviv_unsat(instances_dir):
    out = invoke(
        "certify", haviv_path(instances_dir), "--policy", "y=a", "--search"
    )
    assert out.exit_code == 1
    doc = json.loads(out.report)
    assert doc["status"] == "unsat"
    assert doc["stage"] == "class-gains"
    assert doc["conflict"] == [0, 1]


def test_certify_check_mode(tmp_path, instances_dir):
    potential = tmp_path / "potential.json"
    potential.write_text(json.dumps({"x": "-1/2", "a0": "0", "b0": "0"}))
    out = invoke(
        "certify", str(instances_dir / "twochain.json"), "--policy", "",
        "--mu", "1/2", "--gain", "1/2", "--potential", str(potential),
    )
    assert out.exit_code == 0
    doc = json.loads(out.report)
    assert doc["verdict"] == "pass"
    assert all(doc[key] for key in ("a1", "a2", "a3", "a4", "a5"))


def test_certify_check_failure_exit_code(instances_dir):
    out = invoke(
        "certify", str(instances_dir / "twochain.json"), "--policy", "",
        "--mu", "0", "--gain", "1/2",
    )
    assert out.exit_code == 1
    assert json.loads(out.report)["first_failure"] == "A4"


def test_certify_check_requires_gain(instances_dir):
    out = invoke("certify", str(instances_dir / "twochain.json"), "--policy", "")
    assert out.exit_code == 2


def test_audit_haviv_flags_inconsistency(instances_dir):
    out = invoke("audit", haviv_path(instances_dir))
    assert out.exit_code == 1
    doc = json.loads(out.report)
    assert doc["consistent"] is False
    flagged = [e for e in doc["entries"] if not e["consistent"]]
    assert [e["state"] for e in flagged] == ["y"]
    assert flagged[0]["unmodified"]["value"] == "20/1"
    assert flagged[0]["residual"]["policy"] == {"y": "a"}


def test_audit_twochain_consistent(instances_dir):
    out = invoke("audit", str(instances_dir / "twochain.json"))
    assert out.exit_code == 0
    doc = json.loads(out.report)
    assert doc["consistent"] is True
    assert doc["certificate"] == {"status": "found", "mu": ["1/2"]}
    assert all(e["identity"] == "verified" for e in doc["entries"])


def test_audit_all_times_flag(instances_dir):
    short = invoke("audit", str(instances_dir / "twochain.json"))
    full = invoke("audit", str(instances_dir / "twochain.json"), "--all-times")
    assert full.exit_code == 0
    assert len(json.loads(full.report)["entries"]) > len(json.loads(short.report)["entries"])


def test_decompose_haviv(instances_dir):
    out = invoke("decompose", haviv_path(instances_dir))
    assert out.exit_code == 0
    doc = json.loads(out.report)
    assert doc["decomposable"] is True
    assert doc["constraint_dim"] == 3
    assert doc["transient"] == ["x", "y"]
    assert len(doc["classes"]) == 3


def test_decompose_selective_haviv(instances_dir):
    out = invoke("decompose", haviv_path(instances_dir), "--selective")
    assert out.exit_code == 0
    doc = json.loads(out.report)
    assert doc["constraint_dim"] == 2
    flags = [c["controllable"] for c in doc["controllability"]]
    assert flags == [False, True, True]
    assert doc["converted"]["constraint_dim"] == 2


def test_decompose_rejects_policy_dependent_classes(tmp_path):
    path = tmp_path / "swap.json"
    path.write_text(json.dumps({
        "constraint_dim": 1,
        "initial_state": "u",
        "states": [
            {"id": "u", "actions": [
                {"id": "stay", "reward": "0", "constraint": ["0"],
                 "transitions": {"u": "1"}},
                {"id": "swap", "reward": "0", "constraint": ["0"],
                 "transitions": {"v": "1"}},
            ]},
            {"id": "v", "actions": [
                {"id": "back", "reward": "0", "constraint": ["0"],
                 "transitions": {"u": "1"}},
            ]},
        ],
    }))
    out = invoke("decompose", str(path))
    assert out.exit_code == 1
    doc = json.loads(out.report)
    assert doc["decomposable"] is False


def test_audit_infeasible_instance(tmp_path):
    from cmdpkit import instances
    from cmdpkit.model import instance_to_json
    from fractions import Fraction

    path = tmp_path / "tight.json"
    path.write_text(instance_to_json(instances.haviv(bound=Fraction(1, 25))))
    out = invoke("audit", str(path))
    assert out.exit_code == 1
    assert json.loads(out.report)["status"] == "infeasible"


def test_simulate_report(instances_dir):
    out = invoke(
        "simulate", haviv_path(instances_dir),
        "--policy", "y=a", "--steps", "100", "--seed", "5",
    )
    assert out.exit_code == 0
    doc = json.loads(out.report)
    assert doc["steps"] == 100
    assert doc["seed"] == 5
    assert doc["absorbed_class"] is not None
    assert doc["analytic"]["absorption"] == ["1/2", "1/2", "0/1"]


def test_validate_good_and_bad(tmp_path, instances_dir):
    out = invoke("validate", haviv_path(instances_dir))
    assert out.exit_code == 0
    assert json.loads(out.report) == {"valid": True, "violations": []}

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "constraint_dim": 0,
        "initial_state": "s",
        "states": [{"id": "s", "actions": [
            {"id": "stay", "reward": "0", "constraint": [],
             "transitions": {"s": "0.999"}},
        ]}],
    }))
    out = invoke("validate", str(bad))
    assert out.exit_code == 1
    doc = json.loads(out.report)
    assert doc["valid"] is False
    assert doc["violations"][0]["kind"] == "row-sum"


def test_usage_errors_exit_two(instances_dir):
    assert invoke("nonsense").exit_code == 2
    assert invoke("solve").exit_code == 2
    assert invoke("solve", "no-such-file.json").exit_code == 2
    assert invoke(
        "evaluate", haviv_path(instances_dir), "--policy", "y=zzz"
    ).exit_code == 2
    assert invoke(
        "solve", haviv_path(instances_dir), "--format", "yaml"
    ).exit_code == 2


def test_reports_are_byte_deterministic(instances_dir):
    commands = [
        ("solve", haviv_path(instances_dir)),
        ("residual", haviv_path(instances_dir), "--to", "y"),
        ("audit", haviv_path(instances_dir)),
        ("samplepath", haviv_path(instances_dir), "--policy", "y=b"),
        ("decompose", haviv_path(instances_dir), "--selective"),
        ("simulate", haviv_path(instances_dir),
         "--policy", "y=a", "--steps", "500", "--seed", "9"),
        ("certify", haviv_path(instances_dir), "--policy", "y=a", "--search"),
    ]
    for argv in commands:
        first = invoke(*argv)
        second = invoke(*argv)
        assert first.report == second.report
        assert first.exit_code == second.exit_code


def test_console_entry_point_matches_in_process(instances_dir):
    argv = ["solve", haviv_path(instances_dir)]
    in_process = invoke(*argv)
    proc = subprocess.run(
        [sys.executable, "-m", "cmdpkit.cli", *argv],
        capture_output=True, text=True,
    )
    assert proc.returncode == in_process.exit_code
    assert proc.stdout == in_process.report
