import json

import numpy as np

from hmlab import reporting


def test_canonical_json_stable_and_typed():
    payload = {"b": np.float64(0.25), "a": np.int64(3), "arr": np.array([1.5, 2.5])}
    text = reporting.canonical_json(payload)
    assert text == '{"a":3,"arr":[1.5,2.5],"b":0.25}\n'
    assert json.loads(text)["arr"] == [1.5, 2.5]


def test_write_csv_rfc4180_quoting(tmp_path):
    path = tmp_path / "t.csv"
    rows = [{"x": "0.999,0.0", "v": 1.5}, {"x": "plain", "v": 2}]
    reporting.write_csv(path, ["x", "v"], rows, config={"seed": 1})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# artifact: hmlab")
    assert lines[1] == '# config: {"seed":1}'
    assert lines[2] == "x,v"
    assert lines[3] == '"0.999,0.0",1.5'  # embedded comma quoted
    assert lines[4] == "plain,2"


def test_write_csv_deterministic_bytes(tmp_path):
    rows = [{"a": 0.1 + 0.2, "b": True}]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    reporting.write_csv(p1, ["a", "b"], rows)
    reporting.write_csv(p2, ["a", "b"], rows)
    assert p1.read_bytes() == p2.read_bytes()
    assert "0.30000000000000004,true" in p1.read_text()


def test_figures_written(tmp_path):
    reporting.render_exit_histogram(tmp_path / "h.png", np.full(16, 1 / 16), np.full(16, 1 / 16))
    rec = type("R", (), {"n": 2, "f_hat": 0.5, "ci": 0.05, "noise_floor": 0.1})
    reporting.render_probe(tmp_path / "p.png", [rec, rec], "Distinct")
    reporting.render_pushed(tmp_path / "m.png", np.linspace(0, 1, 9), np.ones(8))
    reporting.render_acceptance(tmp_path / "a.png", [{"name": "1", "passed": True}])
    for name in ("h.png", "p.png", "m.png", "a.png"):
        assert (tmp_path / name).stat().st_size > 1500
