import json
import subprocess
import sys

import numpy as np
import pytest

from mockplectic import cli
from mockplectic.integrate import spread_point_system
from mockplectic.iwasawa import synthetic_bipartite


def run(argv, capsys):
    status = cli.main(argv)
    out = capsys.readouterr()
    return status, out.out, out.err


def machine_lines(text):
    return dict(line.split(" = ", 1) for line in text.splitlines() if line)


def test_examples_reproduce(capsys):
    status, out, _ = run(["--machine", "examples"], capsys)
    assert status == cli.EXIT_OK
    kv = machine_lines(out)
    assert kv["e1.p_splitting"] == "inert"
    assert kv["e1.reduction"] == "nonsplit-mult"
    assert kv["e1.a_p"] == "-1"
    assert kv["e1.eps_Q"] == "-1"
    assert kv["e2.p_splitting"] == "inert"
    assert kv["e3.factors"] == "19*43"
    assert (kv["e3.split_19"], kv["e3.split_43"]) == ("inert", "split")
    assert (kv["e3.N_plus"], kv["e3.N_minus"]) == ("43", "1")
    for e in ("e1", "e2", "e3"):
        assert kv[f"{e}.eps_K"] == "+1"
        assert kv[f"{e}.fixture_ok"] == "yes"
        assert kv[f"{e}.L_over_K_zero"] == "yes"
    assert kv["e2.L_E_nonzero"] == "yes"


def test_machine_output_is_stable(capsys):
    _, first, _ = run(["--machine", "examples"], capsys)
    _, second, _ = run(["--machine", "examples"], capsys)
    assert first == second
    keys = [line.split(" = ")[0] for line in first.splitlines()]
    assert len(keys) == len(set(keys))


def test_ap_command(capsys):
    status, out, _ = run(["ap", "--example", "1", "--ell", "2"], capsys)
    assert status == 0
    assert "a_2 = -2" in out.splitlines()


def test_check_command(tmp_path, capsys):
    status, out, _ = run(["--machine", "check", "--example", "1", "--D", "-8", "--p", "37"], capsys)
    assert status == cli.EXIT_OK
    kv = machine_lines(out)
    assert all(v.startswith(("PASS", "ASSERTED")) for k, v in kv.items()
               if k.startswith("hypotheses.") and k != "hypotheses.ok")
    status, _, _ = run(["check", "--example", "1", "--D", "-3", "--p", "37"], capsys)
    assert status == cli.EXIT_CHECK


def test_malformed_curve_file(tmp_path, capsys):
    bad = tmp_path / "bad.curve"
    bad.write_text("a1 = 0\na2 = zero\n")
    status, out, err = run(["ap", "--curve", str(bad), "--ell", "2"], capsys)
    assert status == cli.EXIT_CONFIG
    assert out == "" and "config error" in err
    singular = tmp_path / "singular.curve"
    singular.write_text("a1 = 0\na2 = 0\na3 = 0\na4 = 0\na6 = 0\nconductor = 1\n")
    assert run(["ap", "--curve", str(singular), "--ell", "2"], capsys)[0] == cli.EXIT_CONFIG


def test_config_errors(capsys):
    assert run(["check", "--example", "1", "--D", "-12", "--p", "37"], capsys)[0] == cli.EXIT_CONFIG
    assert run(["sieve", "--example", "1", "--D", "-8", "--p", "4"], capsys)[0] == cli.EXIT_CONFIG
    assert run(["nonsense"], capsys)[0] == cli.EXIT_CONFIG


def test_curve_file_round_trip(tmp_path, capsys):
    path = tmp_path / "e1.curve"
    path.write_text("# y^2 + y = x^3 - x\na1 = 0\na2 = 0\na3 = 1\na4 = -1\na6 = 0\nconductor = 37\n"
                    "asserted.surjective = yes\n")
    E = cli.load_curve(str(path))
    assert E.flag("surjective") == "yes"
    status, out, _ = run(["--machine", "lvalue", "--curve", str(path)], capsys)
    assert status == 0
    assert machine_lines(out)["lvalue.E.value"].startswith("0")


def test_point_system_file(tmp_path, capsys):
    ps = spread_point_system(5, 2, 3, 1, np.random.default_rng(3))
    path = tmp_path / "sys.txt"
    path.write_text(cli.format_point_system(ps))
    again = cli.load_point_system(str(path))
    assert all(np.array_equal(a, b) for a, b in zip(ps.levels, again.levels))
    status, out, _ = run(["--machine", "integrate-demo", "--points", str(path)], capsys)
    assert status == 0 and machine_lines(out)["integrate.routes_agree"] == "yes"
    status, out, _ = run(["--machine", "derive", "--points", str(path)], capsys)
    assert status == 0 and machine_lines(out)["derive.stable_level"] == "3"
    bad = tmp_path / "bad.txt"
    bad.write_text("5 2 2 1\n1 2 3\n")
    assert run(["derive", "--points", str(bad)], capsys)[0] == cli.EXIT_CONFIG


def test_invalid_point_system_is_a_config_error(tmp_path, capsys):
    path = tmp_path / "sys.txt"
    path.write_text("5 2 1 1\n1 0 0 0 0 0\n")
    assert run(["derive", "--points", str(path)], capsys)[0] == cli.EXIT_CONFIG


def test_iwasawa_with_bipartite_file(tmp_path, capsys):
    data = synthetic_bipartite(5, 2, (293, 317), rng=np.random.default_rng(0))
    obj = {
        "p": 5, "k": 2, "primes": [293, 317],
        "kappas": {",".join(map(str, sorted(m))): v.tolist() for m, v in data.kappas.items()},
        "lambdas": {",".join(map(str, sorted(m))): list(x.coeffs) for m, x in data.lambdas.items()},
        "locs": {f"{','.join(map(str, sorted(m)))}|{ell}": M.tolist() for (m, ell), M in data.locs.items()},
    }
    path = tmp_path / "bip.json"
    path.write_text(json.dumps(obj))
    status, out, _ = run(["--machine", "iwasawa", "--bipartite", str(path), "--eps", "-1", "--a-p", "1"], capsys)
    kv = machine_lines(out)
    assert status == 0 and kv["bipartite.ok"] == "yes"
    assert kv["iwasawa.augmentation_zero"] == "yes"
    assert "iwasawa.candidate_1_1" in kv
    obj["lambdas"]["293"][0] += 1
    path.write_text(json.dumps(obj))
    status, out, _ = run(["--machine", "iwasawa", "--bipartite", str(path)], capsys)
    assert status == cli.EXIT_CHECK
    assert "bipartite.failure_1_293" in machine_lines(out)


def test_tree_and_sieve_commands(capsys):
    status, out, _ = run(["--machine", "tree", "--p", "7", "--n", "2"], capsys)
    kv = machine_lines(out)
    assert status == 0 and kv["tree.sphere_2"] == "56" and kv["tree.orbit_2"] == "56"
    status, out, _ = run(["--machine", "sieve", "--example", "1", "--D", "-8", "--p", "37", "--bound", "900"], capsys)
    assert status == 0 and machine_lines(out)["sieve.ell_293"] == "+1"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mockplectic", "--machine", "ap", "--example", "2", "--ell", "3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "ap.a_3 = " in proc.stdout


@pytest.mark.parametrize("argv", [["--machine", "tree"], ["--machine", "derive"]])
def test_config_is_echoed(argv, capsys):
    _, out, _ = run(argv, capsys)
    assert any(line.startswith("config.command = ") for line in out.splitlines())
