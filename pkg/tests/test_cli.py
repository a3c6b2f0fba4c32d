import csv
import io
import json
import math

import pytest

from cluster_forge import cli

RODS = {"model": {"type": "hard_rod"}, "params": {"sigma": 1.0, "z": 0.1}}
DISCRETE = {
    "model": {"type": "discrete"},
    "params": {"weights": [0.1, {"re": 0.05, "im": 0.02}], "u": [["inf", 0.5], [0.5, "inf"]]},
    "criteria": {"a": 0.5, "b": "fit"},
}
POLYMER = {"model": {"type": "polymer"}, "params": {"d": 2, "gamma": 4.0, "eta": 0.1, "box": [3, 3], "max_size": 3}}
QUANTUM = {"model": {"type": "quantum"}, "params": {"d": 3, "beta": 1.0, "U_norm": 8 * math.pi, "z": 0.2}}


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def assert_numbers_carry_errors(node, covered=False):
    if isinstance(node, dict):
        here = covered or "tol" in node or "stderr" in node
        for k, v in node.items():
            if k in ("tol", "stderr"):
                continue
            assert_numbers_carry_errors(v, here if k in ("value", "re", "im") else False)
    elif isinstance(node, list):
        for v in node:
            assert_numbers_carry_errors(v, covered)
    elif isinstance(node, float):
        assert covered, node


def test_criteria_rods(tmp_path, capsys):
    code, out, _ = run(["criteria", "--config", write(tmp_path, RODS)], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["rue"]["z_max"]["value"] == pytest.approx(1 / (2 * math.e), abs=1e-12)
    assert rep["brf"]["margin"]["value"] > 0
    assert_numbers_carry_errors(rep)


def test_criteria_negative_answer(tmp_path, capsys):
    cfg = {"model": {"type": "hard_rod"}, "params": {"sigma": 1.0, "z": 0.5}}
    code, out, _ = run(["criteria", "--config", write(tmp_path, cfg)], capsys)
    assert code == 2 and json.loads(out)["rue"]["margin"]["value"] < 0


def test_mayer_csv(tmp_path, capsys):
    code, out, _ = run(["mayer", "--config", write(tmp_path, RODS), "--order", "4", "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["n", "b_n", "method", "err"]
    assert [float(r["b_n"]) for r in rows] == pytest.approx([1, -1, 1.5, -8 / 3], abs=1e-12)


def test_float_format_has_17_digits(tmp_path, capsys):
    _, out, _ = run(["mayer", "--config", write(tmp_path, RODS), "--order", "4"], capsys)
    assert "-2.6666666666666661" in out or "-2.666666666666667" in out
    assert cli.dumps(0.1) == "0.10000000000000001"
    assert cli.dumps(float("inf")) == '"inf"'
    assert cli.dumps(1 + 2j) == '{\n  "re": 1,\n  "im": 2\n}'


@pytest.mark.parametrize("cfg,cmd", [(DISCRETE, "criteria"), (DISCRETE, "expand"), (POLYMER, "polymer"), (QUANTUM, "quantum")])
def test_reports(tmp_path, capsys, cfg, cmd):
    code, out, _ = run([cmd, "--config", write(tmp_path, cfg)], capsys)
    assert code == 0
    assert_numbers_carry_errors(json.loads(out))


def test_expand_gap(tmp_path, capsys):
    _, out, _ = run(["expand", "--config", write(tmp_path, DISCRETE)], capsys)
    rep = json.loads(out)
    assert rep["oracle_gap"]["value"] <= 1e-8 and rep["converged"]


def test_out_file_and_csv(tmp_path, capsys):
    dest = tmp_path / "poly.csv"
    code, out, _ = run(["polymer", "--config", write(tmp_path, POLYMER), "--format", "csv", "--out", str(dest)], capsys)
    assert code == 0 and out == ""
    rows = list(csv.DictReader(dest.open()))
    keys = {r["key"] for r in rows}
    assert "box.gap" in keys and "criterion.ok" in keys


@pytest.mark.parametrize(
    "cfg,key",
    [
        ({"model": {"type": "hard_rod"}, "params": {"sigma": 1.0, "zz": 0.1}}, "zz"),
        ({"model": {"type": "hard_rod"}, "params": {"z": 0.1}}, "sigma"),
        ({"model": {"type": "hard_rod"}, "params": {"sigma": -1.0}}, "params.sigma"),
        ({"model": {"type": "gas"}, "params": {}}, "model.type"),
        ({"model": {"type": "hard_rod"}, "params": {"sigma": 1.0}, "extra": 1}, "extra"),
        ({"model": {"type": "discrete"}, "params": {"weights": [0.1], "u": [["inf"]]}, "criteria": {"b": "auto"}},
         "criteria.b"),
    ],
)
def test_malformed_config(tmp_path, capsys, cfg, key):
    code, out, err = run(["criteria", "--config", write(tmp_path, cfg)], capsys)
    assert code == 1 and out == ""
    assert key in err


def test_unreadable_config(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    code, _, err = run(["criteria", "--config", str(p)], capsys)
    assert code == 1 and "bad.json" in err
    code, _, err = run(["criteria"], capsys)
    assert code == 1 and "--config" in err


def test_verify_small(capsys):
    code, out, _ = run(["verify", "--suite", "ks", "--trials", "30", "--seed", "7"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["suites"]["ks"]["passed"] == 30


@pytest.mark.slow
def test_verify_prop1_thousand(capsys):
    code, out, _ = run(["verify", "--suite", "prop1", "--trials", "1000", "--seed", "7"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["suites"]["prop1"]["failed"] == 0


def test_selftest_thread_independent(tmp_path, capsys):
    outs = []
    for t in (1, 2):
        dest = tmp_path / f"st{t}.json"
        assert cli.main(["selftest", "--seed", "4", "--threads", str(t), "--out", str(dest)]) == 0
        outs.append(dest.read_bytes())
    assert outs[0] == outs[1]
    assert_numbers_carry_errors(json.loads(outs[0]))
