import json
import subprocess
import sys

import pytest

from padic_control import cli
from padic_control import controlsets as cs


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    body = json.loads(out.out) if code != 1 and out.out else None
    return code, body, out.err


def test_padic_command(capsys):
    code, body, _ = run(["padic", "--p", "5", "--precision", "3", "--op", "mul", "--x", "5", "--y", "5"], capsys)
    assert code == 0 and body["result"]["valuation"] == 2
    assert body["format_version"] == cs.FORMAT_VERSION and body["command"] == "padic"


def test_weyl_command(capsys):
    code, body, _ = run(["weyl", "--n", "3", "--cosets", "1"], capsys)
    assert code == 0 and len(body["cosets"]) == 3


def test_tree_classify_elliptic(capsys):
    code, body, _ = run(["tree", "classify", "--p", "5", "--matrix", "[[0,1],[-1,0]]"], capsys)
    assert code == 0 and body["kind"] == "elliptic"


def test_decomp_and_flag(capsys):
    code, body, _ = run(["decomp", "--p", "5", "--matrix", "[[5,0],[0,1/5]]", "--kind", "cartan"], capsys)
    assert code == 0 and body["cartan"]["exponents"] == [-1, 1]
    code, body, _ = run(["flag", "census", "--p", "5", "--precision", "3"], capsys)
    assert code == 0 and body["counts"] == {"e": 1, "r1": 149}


def test_control_sets_reports(tmp_path, capsys):
    gens = tmp_path / "gens.json"
    gens.write_text(json.dumps([[["5", "0"], ["0", "1/5"]]]))
    dot = tmp_path / "g.dot"
    code, body, _ = run(["control-sets", "--p", "5", "--precision", "1", "--group", "SL2",
                         "--gens", str(gens), "--dot", str(dot)], capsys)
    assert code == 0 and len(body["control_sets"]) == 2
    assert body["weyl_subgroup"] == ["e"]
    assert dot.read_text().startswith("digraph orbit {")
    gens.write_text(json.dumps([[[0, 1], [-1, 0]]]))
    code, body, _ = run(["control-sets", "--p", "5", "--precision", "1", "--group", "SL2", "--gens", str(gens)],
                        capsys)
    assert code == 0
    assert body["classification"] == "no hyperbolic witness; semigroup classifies as open subgroup"


def test_spec_file_input(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"p": 5, "precision": 1, "group": "SL2",
                                "generators": [[["5", "0"], ["0", "1/5"]], [[0, 1], [-1, 0]]]}))
    code, body, _ = run(["control-sets", "--spec", str(spec)], capsys)
    assert code == 0 and len(body["control_sets"]) == 1


@pytest.mark.parametrize("argv,needle", [
    (["padic", "--p", "6", "--x", "1"], "p:"),
    (["control-sets", "--p", "4", "--precision", "1", "--group", "SL2", "--gens", "GENS"], "p:"),
    (["control-sets", "--p", "5", "--precision", "1", "--group", "SL2", "--gens", "BAD"], "gens: malformed JSON"),
    (["control-sets", "--p", "5", "--precision", "1", "--group", "SL2", "--gens", "DET"], "generators[0]: determinant"),
    (["control-sets", "--p", "5", "--group", "SL2", "--gens", "GENS"], "precision: missing"),
])
def test_input_errors_exit_one(argv, needle, tmp_path, capsys):
    files = {"GENS": "[[[5, 0], [0, \"1/5\"]]]", "BAD": "[[[5, 0], [0", "DET": "[[[5, 0], [0, 1]]]"}
    argv = list(argv)
    for i, a in enumerate(argv):
        if a in files:
            path = tmp_path / f"{a}.json"
            path.write_text(files[a])
            argv[i] = str(path)
    code, _, err = run(argv, capsys)
    assert code == 1 and needle in err


def test_theorem_violation_exit_two(monkeypatch, tmp_path, capsys):
    real = cs.analyze

    def surprising(spec):
        graph, rep = real(spec)
        rep.verdicts["sink"] = "MultipleSinks: 2 closed control sets"
        return graph, rep

    monkeypatch.setattr(cs, "analyze", surprising)
    gens = tmp_path / "gens.json"
    gens.write_text("[[[5, 0], [0, \"1/5\"]]]")
    code, body, _ = run(["control-sets", "--p", "5", "--precision", "1", "--group", "SL2", "--gens", str(gens)],
                        capsys)
    assert code == 2 and body["verdicts"]["sink"].startswith("MultipleSinks")


def test_output_is_byte_reproducible(tmp_path):
    gens = tmp_path / "gens.json"
    gens.write_text("[[[\"1/2\", 0, 0], [0, 1, 0], [0, 0, 2]]]")
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        dot = tmp_path / f"r{k}.dot"
        subprocess.run([sys.executable, "-m", "padic_control", "--seed", "3", "--output", str(out),
                        "control-sets", "--p", "2", "--precision", "2", "--group", "SL3",
                        "--gens", str(gens), "--dot", str(dot)], check=True)
        outs.append((out.read_bytes(), dot.read_bytes()))
    assert outs[0] == outs[1]
    assert json.loads(outs[0][0])["seed"] == 3
