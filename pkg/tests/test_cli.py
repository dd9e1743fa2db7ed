import hashlib
import json
import math
from fractions import Fraction

import pytest

from spikelab.artifacts import canonical, clean, csv_artifact, fmt_float, sha256
from spikelab.cli import DEFAULT_SEED, load_config, main, run
from spikelab.errors import ConfigError


def digest(d):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(d.iterdir())}


SMALL_SCAN = ["--set", "R=8", "--set", "K=2000"]


def test_float_format():
    assert fmt_float(1 / 3) == "0.333333333333"
    assert fmt_float(-0.0) == "0" and fmt_float(math.inf) == "inf"
    assert clean({"a": (1 / 3, Fraction(1, 3), math.nan)}) == {"a": [0.333333333333, "1/3", "nan"]}
    assert canonical({"b": 1, "a": 2}) == '{"a":2,"b":1}'


def test_csv_artifact_layout():
    text = csv_artifact({"kind": "x"}, ["a", "b"], [(1, 0.1 + 0.2), (2, True)])
    lines = text.splitlines()
    assert lines[0] == '# config: {"kind":"x"}'
    assert lines[2:] == ["a,b", "1,0.3", "2,true"]
    assert lines[1] == "# sha256: " + sha256("a,b\n1,0.3\n2,true\n")
    with pytest.raises(ValueError):
        csv_artifact({}, ["a"], [(1, 2)])


def test_scan_twice_identical_and_thread_independent(tmp_path):
    outs = []
    for n, th in enumerate(("1", "1", "4")):
        d = tmp_path / str(n)
        assert main(["scan-bad", *SMALL_SCAN, "--threads", th, "--out", str(d)]) == 0
        outs.append(digest(d))
    assert outs[0] == outs[1] == outs[2]
    assert set(outs[0]) == {"scan.csv", "scan.json"}


def test_artifact_embeds_config_and_hash(tmp_path):
    assert main(["scan-bad", *SMALL_SCAN, "--seed", "7", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "scan.json").read_text())
    assert doc["config"] == {"kind": "scan-bad", "seed": 7, "params": {
        "v": [(math.sqrt(5) - 1) / 2], "eps": 0.05, "K": 2000, "R": 8, "weights": None, "fit_min_r": 3}}
    assert doc["sha256"] == sha256(canonical(doc["data"]))
    assert doc["config_sha256"] == sha256(canonical(doc["config"], False))
    head = (tmp_path / "scan.csv").read_text().splitlines()
    assert json.loads(head[0].removeprefix("# config: ")) == doc["config"]
    assert head[2] == "r,delta,count"
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".")]


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "scan-bad", "seed": 5, "params": {"R": 6, "K": 100}}))
    got = load_config("scan-bad", str(cfg), ["K=300", "v=[0.25]"], None)
    assert got["seed"] == 5 and got["params"]["K"] == 300 and got["params"]["R"] == 6
    assert got["params"]["v"] == [0.25]
    assert load_config("scan-bad", None, [], None)["seed"] == DEFAULT_SEED
    with pytest.raises(ConfigError):
        load_config("orbit", str(cfg), [], None)


@pytest.mark.parametrize("doc", [
    '{"params": {"R": 6,}}',
    '[1, 2]',
    '{"params": {"bogus": 1}}',
    '{"colour": "red"}',
    '{"params": {"R": "six"}}',
    '{"params": {"K": true}}',
    '{"seed": -1}',
])
def test_config_errors_exit_1_without_artifacts(tmp_path, doc):
    cfg = tmp_path / "c.json"
    cfg.write_text(doc)
    out = tmp_path / "out"
    assert main(["scan-bad", "--config", str(cfg), "--out", str(out)]) == 1
    assert not out.exists()


def test_bad_values_and_set_syntax_exit_1(tmp_path):
    assert main(["scan-bad", "--set", "eps=-1", "--out", str(tmp_path / "a")]) == 1
    assert main(["scan-bad", "--set", "R", "--out", str(tmp_path / "b")]) == 1
    assert main(["minkowski", "--set", "basis=[[1, 2], [2, 4]]", "--out", str(tmp_path / "c")]) == 1
    assert main(["scan-bad", "--threads", "0", "--out", str(tmp_path / "d")]) == 1
    assert not any(tmp_path.iterdir())


def test_budget_exit_2(tmp_path):
    assert main(["scan-bad", "--set", "R=40", "--out", str(tmp_path / "x")]) == 2
    assert not (tmp_path / "x").exists()


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("SPIKELAB_THREADS", "3")
    assert main(["scan-bad", *SMALL_SCAN, "--out", str(tmp_path / "env")]) == 0
    monkeypatch.delenv("SPIKELAB_THREADS")
    assert main(["scan-bad", *SMALL_SCAN, "--out", str(tmp_path / "one")]) == 0
    assert digest(tmp_path / "env") == digest(tmp_path / "one")


@pytest.mark.parametrize("kind, files", [
    ("dim-estimate", {"dim.csv", "dim.json"}),
    ("orbit", {"orbit.csv", "excursions.json"}),
    ("heaviness", {"heaviness.csv", "heaviness.json"}),
    ("correspondence", {"correspondence.csv", "correspondence.json"}),
    ("minkowski", {"minkowski.csv", "minkowski.json"}),
    ("covering", {"covering.csv", "covering.json"}),
])
def test_kinds_write_their_artifacts(tmp_path, kind, files):
    assert run(kind, {}, out=tmp_path) == 0
    assert {p.name for p in tmp_path.iterdir()} == files


def test_fractal_artifacts(tmp_path):
    params = {"depth": 3, "gamma_samples": 20, "t_samples": 5}
    assert run("fractal", params, out=tmp_path) == 0
    assert {p.name for p in tmp_path.iterdir()} == {
        "excursions.json", "intervals.json", "cla_report.json", "dim.csv"}
    rep = json.loads((tmp_path / "cla_report.json").read_text())["data"]
    assert rep["all_pass"] and rep["mass_distribution"]["pass"] and rep["spike_witness"]["pass"]
    exc = json.loads((tmp_path / "excursions.json").read_text())["data"]
    assert [e["ell"] for e in exc["excursions"]] == [10.0] * 3


def test_correspondence_seed_changes_instances(tmp_path):
    run("correspondence", {"instances": 50}, seed=1, out=tmp_path / "a")
    run("correspondence", {"instances": 50}, seed=2, out=tmp_path / "b")
    run("correspondence", {"instances": 50}, seed=1, out=tmp_path / "c")
    a, b, c = (digest(tmp_path / k) for k in "abc")
    assert a == c and a != b


def test_accept_kind_writes_acceptance_json(tmp_path, capsys):
    assert main(["accept", "--set", "criteria=[4, 8]", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "acceptance.json").read_text())
    assert [c["id"] for c in doc["data"]["criteria"]] == [4, 8]
    assert doc["data"]["all_pass"]
    assert "[PASS]  4" in capsys.readouterr().out
