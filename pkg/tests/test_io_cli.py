import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from adaptedot import io as aio
from adaptedot.cli import main
from adaptedot.corpus import random_process
from adaptedot.demo import geodesic_pair
from adaptedot.logic import rank_separating_pair


@pytest.fixture
def files(tmp_path):
    a, b = geodesic_pair()
    x, y, _ = rank_separating_pair(2)
    out = {}
    for name, proc in dict(a=a, b=b, x=x, y=y).items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(aio.process_to_json(proc)))
        out[name] = str(path)
    out["dir"] = tmp_path
    return out


def run(argv, capsys):
    code = main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_process_json_roundtrip_and_optional_filtration():
    proc = random_process(np.random.default_rng(0), 3, 8, d=2)
    obj = aio.process_to_json(proc)
    back = aio.process_from_json(json.loads(json.dumps(obj)))
    assert np.array_equal(back.paths, proc.paths) and np.array_equal(back.filtration, proc.filtration)
    del obj["filtration"]
    assert aio.process_from_json(obj).filtration.shape == (3, proc.n_atoms)


def test_schema_errors():
    base = {"horizon": 1, "dim": 1, "atoms": [{"prob": 1.0, "path": [[0.0]]}]}
    assert aio.process_from_json(base).n_atoms == 1
    near = dict(base, atoms=[{"prob": 1.0 + 5e-10, "path": [[0.0]]}])
    assert aio.process_from_json(near).probs[0] == 1.0
    for bad in (
        [],
        {"horizon": 1},
        dict(base, atoms=[]),
        dict(base, atoms=[{"prob": 0.9, "path": [[0.0]]}]),
        dict(base, horizon=2),
        dict(base, filtration=[[0], [0]]),
        dict(base, atoms=[{"prob": 1.0, "path": "x"}]),
    ):
        with pytest.raises(aio.SchemaError):
            aio.process_from_json(bad)


def test_samples_csv(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("x1,x2,weight\n0,1,3\n1,0,1\n")
    paths, w = aio.load_samples_csv(p)
    assert paths.shape == (2, 2, 1) and w.tolist() == [3.0, 1.0]
    p.write_text("0,1,2,3\n")
    assert aio.load_samples_csv(p, dim=2)[0].shape == (1, 2, 2)
    with pytest.raises(aio.SchemaError):
        aio.load_samples_csv(p, dim=3)


def test_fmt_full_precision():
    assert aio.fmt(math.sqrt(5)) == "2.2360679774997898"
    assert float(aio.fmt(0.1)) == 0.1


def test_dist_geodesic_pair(files, capsys, tmp_path):
    out = tmp_path / "c.csv"
    code, stdout, _ = run(["dist", files["a"], files["b"], "--p", "2", "--out", str(out)], capsys)
    assert code == 0
    assert abs(float(stdout) - math.sqrt(5)) <= 1e-10
    rows = out.read_text().splitlines()
    assert len(rows) == 3
    assert '"[[-1.0], [2.0]]","[[1.0], [1.0]]"' in rows[1] + rows[2]
    code, stdout, _ = run(["dist", files["a"], files["a"]], capsys)
    assert float(stdout) == 0.0


def test_stop_named_and_json_cost(files, capsys, tmp_path):
    assert run(["stop", files["x"], "--cost", "coin-gap", "--p", "1"], capsys)[1].strip() == "0.5"
    assert run(["stop", files["y"], "--cost", "coin-gap"], capsys)[1].strip() == "0.25"
    cost = tmp_path / "cost.json"
    cost.write_text(json.dumps({"costs": [0.5, {"op": "clamp", "arg": {"op": "proj", "t": 2}}]}))
    assert run(["stop", files["y"], "--cost", str(cost)], capsys)[1].strip() == "0.25"
    cost.write_text(json.dumps({"costs": [0.5]}))
    code, _, err = run(["stop", files["y"], "--cost", str(cost)], capsys)
    assert code == 2 and json.loads(err)["error"] == "dimension"


def test_canon_roundtrip(files, capsys, tmp_path):
    nd = tmp_path / "nd.json"
    assert run(["canon", files["x"], "--out", str(nd)], capsys)[0] == 0
    assert float(run(["dist", files["x"], str(nd), "--p", "2"], capsys)[1]) == 0.0


def test_error_json(files, capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"horizon": 2, "dim": 1, "atoms": [{"prob": 0.5, "path": [[0], [1]]}]}')
    code, _, err = run(["dist", files["a"], str(bad)], capsys)
    assert code == 2 and json.loads(err)["error"] == "schema"
    code, _, err = run(["geodesic", files["a"], files["b"], "--p", "1"], capsys)
    assert code == 2 and json.loads(err)["error"] == "p-range"
    code, _, err = run(["barycenter", "--p", "1"], capsys)
    assert code == 2 and json.loads(err)["error"] == "p-range"
    code, _, err = run(["dist", files["a"], files["a"], "--p", "0.5"], capsys)
    assert code == 2
    crr = tmp_path / "n3.json"
    crr.write_text(json.dumps({"horizon": 3, "dim": 1, "atoms": [{"prob": 1, "path": [[0], [0], [0]]}]}))
    code, _, err = run(["dist", files["a"], str(crr)], capsys)
    assert code == 2 and json.loads(err)["error"] == "dimension"
    notjson = tmp_path / "nj.json"
    notjson.write_text("{")
    assert run(["validate", str(notjson)], capsys)[0] == 2
    code, _, err = run(["dist", files["a"], str(tmp_path / "missing.json")], capsys)
    assert code == 2 and json.loads(err)["error"] == "io"


def test_validate_command(files, capsys, tmp_path):
    code, out, _ = run(["validate", files["x"]], capsys)
    assert code == 0 and json.loads(out)["ok"]
    bad = tmp_path / "na.json"
    bad.write_text(json.dumps({"horizon": 2, "dim": 1, "filtration": [[0, 0], [0, 1]],
                               "atoms": [{"prob": 0.5, "path": [[0], [1]]}, {"prob": 0.5, "path": [[1], [1]]}]}))
    code, out, _ = run(["validate", str(bad)], capsys)
    assert code == 1 and not json.loads(out)["ok"]


def test_geodesic_and_barycenter_csv(files, capsys):
    code, out, err = run(["geodesic", files["a"], files["b"], "--samples", "0,0.5,1"], capsys)
    assert code == 0 and json.loads(err)["constant_speed"]
    rows = out.splitlines()
    assert rows[0] == "u,distance_from_x,mean_1,mean_2"
    assert rows[2].startswith("0.5,1.1180339887498949")
    code, out, _ = run(["barycenter", "--max-iters", "5"], capsys)
    assert code == 0
    objs = [float(r.split(",")[1]) for r in out.splitlines()[1:]]
    assert all(b <= a + 1e-10 for a, b in zip(objs, objs[1:]))


def test_doob_quantize_rank(files, capsys, tmp_path):
    code, out, _ = run(["doob", files["x"]], capsys)
    assert json.loads(out)["martingale_deviation_of_input"] == 0.5
    code, out, _ = run(["quantize", files["a"], "--eps", "0.1", "--p", "2"], capsys)
    obj = json.loads(out)
    assert obj["distance"] <= obj["certified_bound"] + 1e-12 <= 0.1 + 1e-12
    grid = tmp_path / "g.json"
    grid.write_text(json.dumps({"levels": [[0.0], [0.0]]}))
    code, out, _ = run(["quantize", files["a"], "--grid", str(grid)], capsys)
    assert json.loads(out)["atoms"][0]["path"] == [[0.0], [0.0]]
    assert run(["quantize", files["a"]], capsys)[0] == 2
    code, out, _ = run(["rank", files["x"], files["y"]], capsys)
    assert json.loads(out) == {"0": True, "1": False}


def test_demo_and_determinism(capsys, tmp_path):
    code, out, _ = run(["demo", "--out", str(tmp_path / "d.csv")], capsys)
    assert code == 0
    assert "FAIL" not in out and out.count("PASS") >= 15
    again = run(["demo"], capsys)[1]
    assert again == out


def test_threads_flag_output_identical(files, capsys):
    one = run(["dist", files["x"], files["y"], "--threads", "1"], capsys)[1]
    many = run(["dist", files["x"], files["y"], "--threads", "8"], capsys)[1]
    assert one == many


def test_module_entry_and_pure_backend(files):
    env = dict(os.environ, ADAPTEDOT_PURE="1")
    res = subprocess.run([sys.executable, "-c", "import adaptedot.ot as o; print(o.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert res.stdout.strip() == "python"
    res = subprocess.run([sys.executable, "-m", "adaptedot", "dist", files["a"], files["b"], "--p", "2"],
                         env=env, capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "2.2360679774997898"
