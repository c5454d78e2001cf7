import json
import os
import subprocess
import sys

import pytest

from conftest import f_generators

from rewrite_groups.cli import main


def run(args, **kw):
    """Invoke the CLI in-process, capturing stdout."""
    import io
    from contextlib import redirect_stderr, redirect_stdout

    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(args)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def x0_file(tmp_path):
    F, x0, _ = f_generators()
    path = tmp_path / "x0.json"
    path.write_text(json.dumps(x0.to_json()))
    return str(path)


@pytest.fixture
def x1_file(tmp_path):
    F, _, x1 = f_generators()
    path = tmp_path / "x1.json"
    path.write_text(json.dumps(x1.to_json()))
    return str(path)


def test_catalog_list():
    code, out, _ = run(["catalog", "list"])
    assert code == 0 and "airplane" in out and "dendrite(n)" in out


def test_validate():
    code, out, _ = run(["validate", "--system", "airplane", "--json"])
    assert code == 0
    data = json.loads(out)
    assert data["expanding"] and data["undirected_colors"] == ["b"]


def test_expand():
    code, out, _ = run(["expand", "--system", "interval_F", "--depth", "2"])
    assert code == 0
    assert out.split("\n")[:4] == ["s 0 0", "s 0 1", "s 1 0", "s 1 1"]


def test_eq_of_f_relator(tmp_path, x0_file, x1_file):
    from rewrite_groups.rearrangement import compose, invert, product

    F, x0, x1 = f_generators()
    lhs = product([x0, x1])
    rhs = product([x1, x0])
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    a.write_text(json.dumps(lhs.to_json()))
    b.write_text(json.dumps(rhs.to_json()))
    code, out, _ = run(["eq", "--system", "interval_F", str(a), str(b)])
    assert code == 1 and "different" in out
    code, out, _ = run(["eq", "--system", "interval_F", str(a), str(a)])
    assert code == 0


def test_compose_invert_apply(tmp_path, x0_file):
    code, out, _ = run(["invert", "--system", "interval_F", x0_file])
    assert code == 0
    inv = tmp_path / "inv.json"
    inv.write_text(out)
    code, out, _ = run(["compose", "--system", "interval_F", x0_file, str(inv)])
    assert code == 0
    data = json.loads(out)
    assert all(a == b for a, b in zip(data["domain"], data["range"]))
    code, out, _ = run(["apply", "--system", "interval_F", x0_file, "s 0 0"])
    assert code == 0 and out.strip() == "s 0"
    code, out, _ = run(["apply", "--system", "interval_F", x0_file, "s 0 (1)"])
    assert code == 0 and out.strip() == "s 1 0 (1)"


def test_glued_examples():
    code, out, _ = run(["glued", "--system", "airplane", "s b2 (r2)", "s b3 (r1)"])
    assert code == 0 and out.strip() == "true"
    code, out, _ = run(["glued", "--system", "airplane", "s b2 (r1)", "s b3 (r1)"])
    assert code == 1 and out.strip() == "false"


def test_glue_automaton_dot(tmp_path):
    dot = tmp_path / "gl.dot"
    code, out, _ = run(["glue-automaton", "--system", "interval_F", "--dot", str(dot)])
    assert code == 0
    text = dot.read_text()
    assert text.startswith("digraph") and text.count("->") >= 7


def test_class():
    code, out, _ = run(["class", "--system", "interval_F", "s 0 (1)"])
    assert code == 0
    assert set(out.strip().split("\n")) == {"s 0 (1)", "s 1 (0)"}


def test_confluence_exit_codes():
    code, out, _ = run(["confluence", "--system", "interval_F"])
    assert code == 0 and out.strip() == "confluent"
    code, out, _ = run(["confluence", "--system", "airplane"])
    assert code == 1 and out.strip() == "not_confluent"
    code, out, _ = run(["confluence", "--system", "airplane", "--augment", "airplane"])
    assert code == 0


def test_conj_without_augment_fails_cleanly(tmp_path):
    from rewrite_groups.catalog import catalog
    from rewrite_groups.rearrangement import identity

    A = catalog("airplane")
    g = tmp_path / "id.json"
    g.write_text(json.dumps(identity(A).to_json()))
    code, out, err = run(["conj", "--system", "airplane", str(g), str(g)])
    assert code == 3 and "RulesNotConfluent" in err
    code, out, err = run(["conj", "--system", "airplane", str(g), str(g),
                          "--augment", "airplane"])
    assert code == 0


def test_conj_negative_exit(tmp_path, x0_file, x1_file):
    code, out, _ = run(["conj", "--system", "interval_F", x0_file, x1_file])
    assert code == 1 and "not conjugate" in out


def test_torsion_and_phi(tmp_path, x0_file):
    code, out, _ = run(["torsion", "--system", "interval_F", x0_file])
    assert code == 0 and "infinite order" in out
    from rewrite_groups.analysis import dendrite_generators

    g0 = dendrite_generators(3)["g0"]
    p = tmp_path / "g0.json"
    p.write_text(json.dumps(g0.to_json()))
    code, out, _ = run(["phi", "--system", "dendrite:3", str(p), "--json"])
    assert code == 0
    assert json.loads(out) == {"parity": 0, "derivative": 0}


def test_usage_errors():
    code, _, err = run(["glued", "--system", "airplane", "s b2", "s b3 (r1)"])
    assert code == 2
    code, _, err = run(["validate", "--system", "no_such_system"])
    assert code == 2


def test_embed_v(tmp_path, x0_file):
    code, out, _ = run(["embed-v", "--system", "interval_F", x0_file])
    assert code == 0
    data = json.loads(out)
    assert data["domain"]


def test_deterministic_output_with_seed(tmp_path, x0_file):
    a = run(["catalog", "dump", "--system", "airplane"])
    b = run(["catalog", "dump", "--system", "airplane"])
    assert a == b
    c1, o1, _ = run(["dot", "--system", "interval_F", "--g", x0_file])
    c2, o2, _ = run(["dot", "--system", "interval_F", "--g", x0_file])
    assert c1 == c2 == 0 and o1 == o2


def test_console_script_installed():
    proc = subprocess.run(
        [sys.executable, "-m", "rewrite_groups.cli", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0


def test_confluence_strict_flag():
    # bubble bath is confluent; strict changes nothing for definite verdicts
    code, out, _ = run(["confluence", "--system", "bubble_bath", "--strict"])
    assert code == 0


def test_system_from_json_file(tmp_path):
    from rewrite_groups.catalog import catalog
    from rewrite_groups.replacement import system_to_json

    path = tmp_path / "sys.json"
    path.write_text(json.dumps(system_to_json(catalog("airplane"))))
    code, out, _ = run(["validate", "--system", str(path), "--json"])
    assert code == 0
    assert json.loads(out)["undirected_colors"] == ["b"]
