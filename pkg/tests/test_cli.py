import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

from outerspace.automorphisms import Automorphism
from outerspace.cli import main
from outerspace.graphs import MarkedGraph, act, rose

ROSE = rose([F(1, 2), F(1, 2)])
LOPSIDED = rose([F(1, 3), F(2, 3)])
PHI = "a -> a b\nb -> b\n"


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, G in (("rose", ROSE), ("lop", LOPSIDED),
                    ("image", act(Automorphism.from_text(PHI), ROSE))):
        p = tmp_path / f"{name}.json"
        p.write_text(G.to_json())
        paths[name] = str(p)
    for name, text in (("phi", PHI), ("psi", "a -> b a\nb -> b\n")):
        p = tmp_path / f"{name}.aut"
        p.write_text(text)
        paths[name] = str(p)
    g = tmp_path / "group.toml"
    g.write_text('[generators]\nf = "a -> a; b -> b a"\n')
    paths["group"] = str(g)
    return paths


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_distance_output(capsys, files):
    code, out, _ = run(capsys, "distance", files["rose"], files["lop"])
    assert code == 0
    assert out.strip() == '{"ratio":"4/3","log":0.28768,"witness":"b","reverse_ratio":"3/2"}'


def test_validate(capsys, files, tmp_path):
    code, out, _ = run(capsys, "validate", files["rose"])
    assert code == 0 and json.loads(out)["rank"] == 2
    d = ROSE.to_dict()
    d["vertices"].append("x")
    d["edges"].append({"id": "hair", "from": "v", "to": "x", "len": "1/4"})
    d["comarking"]["hair"] = ""
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(d))
    code, _, err = run(capsys, "validate", "--normalize", str(bad))
    assert code == 1 and "valence-1" in err
    assert "error" in json.loads(err.splitlines()[-1])


def test_usage_errors(capsys, files):
    assert run(capsys)[0] == 64
    assert run(capsys, "distance", files["rose"])[0] == 64
    assert run(capsys, "aut", "compose", files["phi"])[0] == 64
    assert run(capsys, "fold", files["rose"])[0] == 64
    assert run(capsys, "flare", "conjugacy")[0] == 64


def test_missing_file_is_a_domain_error(capsys, tmp_path):
    code, _, err = run(capsys, "validate", str(tmp_path / "nope.json"))
    assert code == 1 and json.loads(err)["error"] == "invalid-input"


def test_candidates_csv(capsys, files, tmp_path):
    out_csv = tmp_path / "c.csv"
    code, out, _ = run(capsys, "candidates", files["rose"], "--csv", str(out_csv))
    assert code == 0
    assert {r["class"] for r in json.loads(out)} == {"a", "b", "ab", "aB"}
    assert out_csv.read_text().splitlines()[0] == "class,length"


def test_fold_stream(capsys, files, tmp_path):
    code, out, _ = run(capsys, "fold", files["rose"], "--aut", files["phi"], "--track", "a,ab")
    assert code == 0
    lines = [json.loads(x) for x in out.splitlines()]
    assert lines[0]["kind"] == "rescale" and lines[0]["ratio"] == "4/3"
    assert lines[-1] == {"kind": "end", "total_ratio": "2", "events": lines[-1]["events"]}
    events = [x for x in lines if x["kind"] in ("event", "sample")]
    assert len(events) == lines[-1]["events"]
    assert set(events[0]["tracked"]) == {"a", "ab"}
    final = MarkedGraph.from_dict(events[-1]["graph"])
    assert final.loop_length("a") == 1
    # the same fold through an explicit target graph
    code, out2, _ = run(capsys, "fold", files["rose"], files["image"], "--track", "a,ab")
    assert code == 0 and out2.splitlines()[1:] == out.splitlines()[1:]


def test_fold_csv(capsys, files, tmp_path):
    out_csv = tmp_path / "f.csv"
    code, _, _ = run(capsys, "fold", files["rose"], "--aut", files["phi"], "--track", "a",
                     "--csv", str(out_csv))
    rows = out_csv.read_text().splitlines()
    assert code == 0 and rows[0].startswith("alpha,index,ratio,log") and len(rows) > 1


def test_event_cap_exhaustion_exits_two(capsys, files, tmp_path):
    far = tmp_path / "far.aut"
    far.write_text("a -> a b a\nb -> b a\n")
    code, _, err = run(capsys, "fold", files["lop"], "--aut", str(far), "--event-cap", "1")
    assert code == 2 and "error" in json.loads(err)


def test_project(capsys, files):
    code, out, _ = run(capsys, "project", files["rose"], "--along", files["image"])
    data = json.loads(out)
    assert code == 0 and sorted(f["generators"][0] for f in data["factors"]) == ["a", "b"]
    assert all(f["rank"] == 1 and len(f["hash"]) == 16 for f in data["factors"])
    assert "pr_index" in data and len(data["projections"]) == 2


def test_aut_commands(capsys, files):
    code, out, _ = run(capsys, "aut", "invert", files["phi"])
    assert code == 0 and out == "a -> a B\nb -> b\n"
    code, out, _ = run(capsys, "aut", "out-equal", files["phi"], files["psi"])
    assert json.loads(out) == {"equal": True, "witness": "b"}
    code, out, _ = run(capsys, "aut", "apply", files["phi"], "--word", "aB")
    assert json.loads(out)["image"] == "a"
    code, out, _ = run(capsys, "aut", "screen", files["phi"])
    assert json.loads(out)["banner"].startswith("NON-CERTIFYING")


def test_flare_report_round_trip(capsys, files, tmp_path):
    rep = tmp_path / "rep.json"
    code, _, _ = run(capsys, "flare", "conjugacy", "--group", files["group"], "--lambda", "2",
                     "--M", "2", "--out", str(rep))
    data = json.loads(rep.read_text())
    assert code == 0 and data["verdict"] == "counterexample" and data["witness"]["alpha"] == "a"
    code, out, _ = run(capsys, "report", "verify", str(rep))
    assert json.loads(out) == {"verified": True, "verdict": "counterexample"}
    code, out, _ = run(capsys, "report", "show", str(rep))
    assert code == 0 and "verdict" in out


def test_bundle_commands_are_deterministic(capsys, files):
    argv = ["bundle", "flare", "--group", files["group"], "--samples", "10", "--seed", "3",
            "--family", "aa,aaa"]
    code, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert code == 0 and a == b
    assert float(json.loads(a)["min_lambda_float"]) <= 1 + 1e-9
    code, out, _ = run(capsys, "bundle", "constants", "--group", files["group"], "--lambda", "3")
    data = json.loads(out)
    assert code == 0 and (data["lambda_k"], data["M_k"]) == ("2", 11)


def test_config_drives_the_flare_check(capsys, files, tmp_path):
    cfg = tmp_path / "exp.toml"
    cfg.write_text(f'seed = 5\n[inputs]\ngroup = "{files["group"]}"\n'
                   '[budgets]\nword_radius = 2\nalpha_len = 2\n[constants]\nlambda = "3/2"\nM = 1\n')
    code, out, _ = run(capsys, "--config", str(cfg), "flare", "conjugacy")
    data = json.loads(out)
    assert code == 0 and data["lambda"] == "3/2" and data["word_radius"] == 2 and data["seed"] == 5
    bad = tmp_path / "bad.toml"
    bad.write_text("[budgets]\nsamples = -1\n")
    code, _, err = run(capsys, "--config", str(bad), "flare", "conjugacy", "--group", files["group"])
    assert code == 1 and json.loads(err)["error"] == "invalid-config"


def test_console_script(files):
    res = subprocess.run([sys.executable, "-m", "outerspace.cli", "distance", files["rose"], files["lop"]],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["ratio"] == "4/3"
