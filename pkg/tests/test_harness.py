import csv
import io
import json

import pytest

from hypoel import harness
from hypoel.harness import ConfigError, KINDS, config_from_dict, main, reference_config


def run(kind, out, *extra, config=None):
    return main([kind, "--config", str(config or reference_config(kind)), "--out", str(out), *extra])


def tree(root):
    files = {}
    for p in sorted(root.rglob("*")):
        if p.is_file():
            data = p.read_bytes()
            if p.name == "manifest.json":
                m = json.loads(data)
                m.pop("wall_time", None)
                data = json.dumps(m, sort_keys=True).encode()
            files[str(p.relative_to(root))] = data
    return files


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.mark.parametrize("kind", KINDS)
def test_reference_configs_run_and_are_deterministic(kind, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(kind, a) == 0
    assert run(kind, b) == 0
    ta, tb = tree(a), tree(b)
    assert ta == tb
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["status"] == "ok" and manifest["kind"] == kind
    assert sorted(manifest["artifacts"]) == manifest["artifacts"]
    assert set(manifest["artifacts"]) | {"manifest.json"} == set(ta)


def test_unknown_key_exits_2_and_names_it(tmp_path, capsys):
    cfg = write(tmp_path, 'kind = "solve"\n[problem]\nd = 1\nd1 = 1\nG = "sin(x1)"\n'
                          '[grid]\nn = 16\n[solver]\nsnapshot_time = [0.5]\n')
    assert run("solve", tmp_path / "o", config=cfg) == 2
    assert "solver.snapshot_time" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


@pytest.mark.parametrize("data, key", [
    ({"kind": "solve", "grid": {"n": 24}, "problem": {"d": 1, "d1": 1}}, "grid.n"),
    ({"kind": "solve", "grid": {"n": 16}}, "problem"),
    ({"kind": "solve", "grid": {"n": 16}, "problem": {"d": 1, "d1": 1, "G": "sin(x3)"}}, "problem.G"),
    ({"kind": "solve", "grid": {"n": "16"}, "problem": {"d": 1, "d1": 1}}, "grid.n"),
    ({"kind": "bogus"}, "kind"),
    ({"kind": "certify", "certify": {"fields": [["1", "zz"]]}}, "certify.fields"),
])
def test_config_errors_carry_key_path(data, key):
    with pytest.raises(ConfigError) as err:
        cfg = config_from_dict(data)
        harness.RUNNERS[cfg.kind](cfg)
    assert err.value.key.startswith(key)


def test_kind_mismatch(tmp_path):
    assert run("solve", tmp_path / "o", config=reference_config("certify")) == 2


def test_runtime_failure_writes_partial_manifest(tmp_path):
    cfg = write(tmp_path, 'kind = "solve"\n[problem]\nd = 1\nd1 = 1\nsigma = [["1"]]\n'
                          'G = "sin(x1)"\n[grid]\nn = 64\n[solver]\ndt = 0.5\n')
    out = tmp_path / "o"
    assert run("solve", out, config=cfg) == 1
    m = json.loads((out / "manifest.json").read_text())
    assert m["status"] == "failed" and m["artifacts"] == []
    assert "StabilityError" in m["error"]


def test_seed_override(tmp_path):
    assert run("simulate", tmp_path / "a", "--seed", "12") == 0
    assert run("simulate", tmp_path / "b") == 0
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert ma["seed"] == 12
    assert (tmp_path / "a" / "terminal.json").read_bytes() != (tmp_path / "b" / "terminal.json").read_bytes()


def test_certificate_schema(tmp_path):
    assert run("certify", tmp_path) == 0
    body = json.loads((tmp_path / "certificate.json").read_text())
    assert body["satisfied"] is True and body["n0"] == 1 and body["eta"] == 0.5
    assert {"generations", "min_relative_sv", "worst_point", "tolerance"} <= set(body)
    assert body["generations"][0] == [["1", "0"], ["0", "sin(x1)"]]


def test_certify_failure_is_reported_not_raised(tmp_path):
    cfg = write(tmp_path, 'kind = "certify"\n[certify]\nfields = [["1", "0"]]\nsample_n = 8\n')
    assert run("certify", tmp_path / "o", config=cfg) == 0
    body = json.loads((tmp_path / "o" / "certificate.json").read_text())
    assert "satisfied" not in body or body["satisfied"] is False


def test_smoothing_csv_header_and_crlf(tmp_path):
    assert run("smoothing-study", tmp_path) == 0
    raw = (tmp_path / "smoothing.csv").read_bytes()
    assert raw.startswith(b"t,order,value,tail_mass\r\n")
    rows = list(csv.reader(io.StringIO(raw.decode(), newline="")))
    assert all(len(r) == 4 for r in rows)
    contrast = json.loads((tmp_path / "contrast.json").read_text())
    assert contrast


def test_emit_outputs_empty(tmp_path):
    assert harness.emit_outputs({}, tmp_path) == []
    assert json.loads((tmp_path / "manifest.json").read_text()) == {"artifacts": []}


def test_atomic_write_replaces_and_leaves_no_temp(tmp_path):
    p = tmp_path / "sub" / "x.txt"
    harness.atomic_write(p, "one")
    harness.atomic_write(p, b"two")
    assert p.read_text() == "two"
    assert [q.name for q in p.parent.iterdir()] == ["x.txt"]


def test_csv_text_rfc4180():
    text = harness.csv_text(["a", "b"], [[1.5, "x,y"], [True, 2]])
    assert text == 'a,b\r\n1.5,"x,y"\r\ntrue,2\r\n'
