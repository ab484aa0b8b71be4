import json
import math
import shutil
import subprocess

import pytest

from percolab.cli import main
from percolab.gadgets import choose_gadget_params, no_ray_config, skew_box_config
from percolab.lattice import Configuration, Edge, constant_config


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def ones(tmp_path):
    return write_json(tmp_path / "ones.json", constant_config(2, 1).to_json())


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_passage_scalar(ones, capsys):
    code, out, _ = run(["passage", "--config", ones, "--source", "0,0", "--target", "3,4"], capsys)
    assert code == 0
    data = json.loads(out)
    assert data["time"] == 7 and data["witness"][0] == [0, 0] and data["witness"][-1] == [3, 4]


def test_passage_vector_anchor(tmp_path, capsys):
    cfg = write_json(tmp_path / "fig.json", no_ray_config(10).to_json())
    code, out, _ = run(["passage", "--config", cfg, "--source", "10,0", "--target", "10,6", "--cap", "8"], capsys)
    assert code == 0
    assert abs(json.loads(out)["time"] - 4 * math.sqrt(2)) < 1e-12


def test_passage_unreachable(ones, capsys):
    code, _, err = run(["passage", "--config", ones, "--source", "0,0", "--target", "5,0",
                        "--box", "0,0:2,2"], capsys)
    assert code == 2 and "unreachable" in err


def test_malformed_input(tmp_path, ones, capsys):
    assert run(["passage", "--config", ones, "--source", "0,x", "--target", "1,0"], capsys)[0] == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["passage", "--config", str(bad), "--source", "0,0", "--target", "1,0"], capsys)[0] == 1
    assert run(["passage", "--config", str(tmp_path / "missing.json"), "--source", "0,0",
                "--target", "1,0"], capsys)[0] == 1
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--claim", "nonsense"])
    assert exc.value.code == 1


def test_ball_csv_and_svg(tmp_path, ones, capsys):
    svg = tmp_path / "ball.svg"
    code, out, _ = run(["ball", "--config", ones, "--t", "2", "--svg", str(svg)], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "x0,x1" and len(lines) == 14
    assert svg.read_text().count("<rect") == 13


def test_ball_svg_warns_off_the_plane(tmp_path, capsys):
    cfg = write_json(tmp_path / "c3.json", constant_config(3, 1).to_json())
    svg = tmp_path / "b3.svg"
    with pytest.warns(UserWarning):
        code, out, _ = run(["ball", "--config", cfg, "--t", "1", "--svg", str(svg)], capsys)
    assert code == 0 and not svg.exists()
    assert len(out.strip().splitlines()) == 1 + 7


def test_ball_rejects_vector_config(tmp_path, capsys):
    cfg = write_json(tmp_path / "v.json", no_ray_config(10).to_json())
    code, _, err = run(["ball", "--config", cfg, "--t", "4"], capsys)
    assert code == 1 and "vector configuration" in err


def test_ball_trace(ones, capsys):
    code, out, _ = run(["ball", "--config", ones, "--t", "4,8", "--trace", "--sample", "16"], capsys)
    assert code == 0
    rows = [line.split(",") for line in out.strip().splitlines()[1:]]
    assert [r[0] for r in rows] == ["4", "8"]
    assert float(rows[1][1]) <= float(rows[0][1])


def test_verify_claims_pass(capsys):
    for argv in (["verify", "--claim", "funnel", "--proof-params"],
                 ["verify", "--claim", "no-ray"],
                 ["verify", "--claim", "lemma52", "--vb=-0.6,0.8"],
                 ["verify", "--claim", "lemma53-eq"],
                 ["verify", "--claim", "lemma53-neq", "--va", "21/10,0", "--M", "10", "--exhaustive"],
                 ["verify", "--claim", "thm43", "--dest", "2,0"],
                 ["verify", "--claim", "dirichlet", "--r", "0.14159", "--Q", "10"],
                 ["verify", "--claim", "spd", "--A", "1,0;-1,0;0,1;0,-1"]):
        code, out, _ = run(argv, capsys)
        assert code == 0, argv
        assert json.loads(out)["verified"] is True


def test_verify_sabotaged_funnel_exits_3(tmp_path, capsys):
    params = choose_gadget_params(2, 1, 1, 7)
    cfg, _ = skew_box_config(params)
    seg = params.segment()
    # one expensive edge is absorbed by the margin, the whole segment is not
    bad = cfg.replace({Edge(a, b): 7 for a, b in zip(seg, seg[1:])})
    path = write_json(tmp_path / "bad.json", bad.to_json())
    code, out, _ = run(["verify", "--claim", "funnel", "--proof-params", "--config", path], capsys)
    rep = json.loads(out)
    assert code == 3 and rep["verified"] is False and rep["counterexample"]


def test_verify_lemma53_neq_default_fails_honestly(capsys):
    # the default M=40 gadget is reported, not forced green
    code, out, _ = run(["verify", "--claim", "lemma53-neq", "--va", "3/2,0"], capsys)
    rep = json.loads(out)
    assert code == (0 if rep["verified"] else 3)


def test_field_build_evaluate_unitball(tmp_path, capsys):
    out_path = tmp_path / "star.json"
    assert run(["field", "build", "--out", str(out_path)], capsys)[0] == 0
    code, out, _ = run(["field", "evaluate", "--field", str(out_path), "--point", "1/2,0"], capsys)
    assert code == 0 and json.loads(out)["value"] == 1
    code, out, _ = run(["field", "unitball", "--field", str(out_path), "--grid", "4"], capsys)
    assert code == 0 and out.startswith("x0,x1")


def test_cone_commands(capsys):
    code, out, _ = run(["cone", "in-cone", "--A", "1,0;0,1", "--vector", "1,1"], capsys)
    assert code == 0 and json.loads(out)["member"] is True
    code, out, _ = run(["cone", "spd", "--A", "1,0"], capsys)
    assert json.loads(out)["spd"] is False
    code, out, _ = run(["cone", "dirichlet", "--r", "1/3,1/3", "--Q", "9"], capsys)
    assert json.loads(out) == {"p": [1, 1], "q": 3}
    code, out, _ = run(["cone", "monoid", "--A", "1,0;-1,0", "--max-total", "2"], capsys)
    assert json.loads(out)["elements"] == [[-2, 0], [0, 0], [2, 0]]


def test_gadget_emits_loadable_config(tmp_path, capsys):
    for kind in ("skew", "lemma52", "lemma53-eq", "no-ray"):
        path = tmp_path / f"{kind}.json"
        assert run(["gadget", "--kind", kind, "--vb=-0.6,0.8" if kind == "lemma52" else "--vb=0,1",
                    "--out", str(path)], capsys)[0] == 0
        Configuration.from_json(json.loads(path.read_text()))


def test_manifest_and_determinism(tmp_path, ones, capsys, monkeypatch):
    monkeypatch.setenv("PERCOLAB_THREADS", "3")
    outs = []
    for i in range(2):
        out = tmp_path / f"ball{i}.csv"
        man = tmp_path / f"man{i}.json"
        assert main(["ball", "--config", ones, "--t", "3", "--out", str(out), "--manifest", str(man)]) == 0
        outs.append(out.read_bytes())
        m = json.loads(man.read_text())
        assert m["outputs"] == [str(out)] and m["inputs"] == [ones]
        assert m["parameters"]["threads"] == 3 and m["seed"] == 0
    assert outs[0] == outs[1]
    monkeypatch.setenv("PERCOLAB_THREADS", "0")
    assert main(["cone", "spd"]) == 1


@pytest.mark.skipif(shutil.which("percolab") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["percolab", "cone", "dirichlet", "--r", "0.5", "--Q", "10"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout) == {"p": [1], "q": 2}
