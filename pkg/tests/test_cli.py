import json

from bxmech.cli import build_generator_spec, expand_generator_family, main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def gen_file(tmp_path, spec, name="inst.json"):
    path = tmp_path / name
    assert main(["gen", spec, "--out", str(path)]) == 0
    return path


class TestGen:
    def test_writes_instance_and_reports_counts(self, tmp_path, capsys):
        path = tmp_path / "comb.json"
        code, out, err = run(
            capsys, "gen", "comb:h=2,v=3,k=3,lambda=1,9/10", "--out", str(path)
        )
        assert code == 0
        assert "n=6 agents, 3 cycles" in err
        doc = json.loads(path.read_text())
        assert doc["format"] == "bx-v1"
        assert doc["n"] == 6

    def test_gbad_size(self, tmp_path, capsys):
        code, _, err = run(
            capsys, "gen", "gbad:q=1", "--out", str(tmp_path / "g.json")
        )
        assert code == 0
        assert "n=15 agents" in err

    def test_bad_spec_exits_one(self, capsys):
        code, _, err = run(capsys, "gen", "rand:n=0")
        assert code == 1
        assert "error" in err

    def test_unknown_family_exits_one(self, capsys):
        assert run(capsys, "gen", "mystery:q=1")[0] == 1


class TestSolve:
    def test_gbad_with_ls(self, tmp_path, capsys):
        path = gen_file(tmp_path, "gbad:q=1")
        code, out, _ = run(capsys, "solve", str(path), "ls:q=1")
        assert code == 0
        doc = json.loads(out)
        assert doc["welfare"] == "6/1"
        assert doc["ratio_report"]["ratio"] == "5/2"
        assert doc["ratio_report"]["within_bound"] is True
        assert doc["trace"]["iterations"] == 2

    def test_comb_with_greedy(self, tmp_path, capsys):
        path = gen_file(tmp_path, "comb:h=2,v=3,k=3,lambda=1,9/10")
        code, out, _ = run(capsys, "solve", str(path), "greedy")
        doc = json.loads(out)
        assert code == 0
        assert doc["exchange"] == [[1, 2]]
        assert doc["welfare"] == "2/1"

    def test_empty_instance(self, tmp_path, capsys):
        path = gen_file(tmp_path, "rand:n=4,p=0,seed=1")
        code, out, _ = run(capsys, "solve", str(path), "greedy")
        doc = json.loads(out)
        assert code == 0
        assert doc["exchange"] == []
        assert doc["welfare"] == "0/1"

    def test_oracle_cap_downgrades_with_warning(self, tmp_path, capsys):
        path = gen_file(tmp_path, "rand:n=18,p=0.6,seed=3")
        code, out, _ = run(capsys, "solve", str(path), "greedy", "--oracle-cap", "5")
        doc = json.loads(out)
        assert code == 0
        assert doc["ratio_report"] is None
        assert any("oracle" in w for w in doc["warnings"])

    def test_randomized_mechanism(self, tmp_path, capsys):
        path = gen_file(tmp_path, "rand:n=6,p=0.7,seed=2")
        code, out, _ = run(
            capsys, "solve", str(path), "rand:zeta=1/10:base=greedy", "--seed", "5"
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["mechanism"].startswith("rand:zeta=1/10")

    def test_missing_file_exits_one(self, capsys):
        assert run(capsys, "solve", "/nonexistent.json", "greedy")[0] == 1


class TestFuzz:
    def test_clean_mechanism_exits_zero(self, tmp_path, capsys):
        path = gen_file(tmp_path, "rand:n=7,p=0.5,seed=11")
        code, out, _ = run(capsys, "fuzz", str(path), "ls:q=2", "--budget", "16")
        assert code == 0
        assert out == ""

    def test_manipulable_configuration_exits_two(self, tmp_path, capsys):
        # the q-swap search is not truthful once the length function drops
        path = gen_file(tmp_path, "comb:h=2,v=3,k=3,lambda=1,9/10")
        code, out, _ = run(capsys, "fuzz", str(path), "ls:q=1")
        assert code == 2
        findings = [json.loads(line) for line in out.splitlines()]
        assert findings
        assert all(f["mechanism"] == "ls:q=1" for f in findings)
        kinds = {f["kind"] for f in findings}
        assert "hide-nodes" in kinds and "wishlist-subset" in kinds


class TestSweep:
    def test_tightness_family(self, tmp_path, capsys):
        code, out, _ = run(capsys, "sweep", "gbad:q=1..4", "ls:q=*")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith(
            "instance,mechanism,weight,oracle,ratio,bound,within_bound"
        )
        ratios = [line.split(",")[4] for line in lines[1:]]
        assert ratios == ["5/2", "7/3", "9/4", "11/5"]

    def test_impossible_bound_fails(self, capsys):
        code, out, _ = run(capsys, "sweep", "gbad:q=1..2", "ls:q=*", "--bound", "1.0")
        assert code == 2
        assert ",false," in out

    def test_multiple_mechanisms(self, capsys):
        code, out, _ = run(capsys, "sweep", "gbad:q=1", "greedy+ls:q=1")
        assert code == 0
        assert len(out.strip().splitlines()) == 3


class TestProfileLambda:
    def test_flat_tail(self, capsys):
        code, out, _ = run(capsys, "profile-lambda", "k=3,lambda=1,9/10")
        doc = json.loads(out)
        assert code == 0
        assert doc["rho"] == "27/10"
        assert doc["ell_star"] == 2
        assert doc["exceeds_k_minus_1"] is True

    def test_uniform(self, capsys):
        code, out, _ = run(capsys, "profile-lambda", "k=3")
        doc = json.loads(out)
        assert doc["rho"] is None
        assert doc["tumbles"] == [3]


class TestDeterminism:
    def test_solve_outputs_identical_bytes(self, tmp_path):
        path = gen_file(tmp_path, "rand:n=8,p=0.5,seed=4,lambda=1,9/10")
        out_a = tmp_path / "a.json"
        out_b = tmp_path / "b.json"
        for target in (out_a, out_b):
            assert (
                main(["solve", str(path), "nu:q=1", "--seed", "9", "--out", str(target)])
                == 0
            )
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_nu_rejects_uniform_instance(self, tmp_path, capsys):
        path = gen_file(tmp_path, "rand:n=8,p=0.5,seed=4")
        code, _, err = run(capsys, "solve", str(path), "nu:q=1")
        assert code == 1
        assert "constant length function" in err

    def test_sweep_outputs_identical_bytes(self, tmp_path):
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        for target in (out_a, out_b):
            assert (
                main(
                    [
                        "sweep",
                        "rand:n=7,p=0.4,seed=1..6",
                        "greedy+ls:q=2",
                        "--out",
                        str(target),
                    ]
                )
                == 0
            )
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_randomized_solve_deterministic_per_seed(self, tmp_path):
        path = gen_file(tmp_path, "rand:n=7,p=0.6,seed=12")
        outs = []
        for name in ("r1.json", "r2.json"):
            target = tmp_path / name
            assert (
                main(
                    [
                        "solve",
                        str(path),
                        "rand:zeta=1/3:base=greedy",
                        "--seed",
                        "21",
                        "--out",
                        str(target),
                    ]
                )
                == 0
            )
            outs.append(target.read_bytes())
        assert outs[0] == outs[1]


class TestSpecHelpers:
    def test_expand_ranges(self):
        specs = expand_generator_family("gbad:q=2..4")
        assert specs == ["gbad:q=2", "gbad:q=3", "gbad:q=4"]
        assert expand_generator_family("nonrealizable") == ["nonrealizable"]

    def test_lambda_passthrough(self):
        bundle = build_generator_spec("rand:n=5,p=0.5,seed=1,k=3,lambda=1,1/2")
        assert bundle.lam.values == (1, __import__("fractions").Fraction(1, 2))
