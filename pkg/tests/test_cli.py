import json
import os

import numpy as np
import pytest

from rcquad.cli import ConfigError, load_config, main
from rcquad.serialize import CSV_VERSION


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


BASE = """
[run]
seed = 11
out = "{out}"

[model]
p = 0.5
q = 2.0

[schedule]
burn_in = 100
sweeps = 1500
chains = 2
"""


def test_unknown_section_rejected(tmp_path):
    cfg = write(tmp_path, "bad.toml", "[mystery]\nx = 1\n")
    assert main(["estimate", "--config", cfg]) == 2


def test_unknown_key_rejected(tmp_path):
    cfg = write(tmp_path, "bad.toml", "[model]\np = 0.5\nq = 1.0\nzz = 3\n")
    assert main(["estimate", "--config", cfg]) == 2


def test_missing_config_file():
    assert main(["estimate", "--config", "/nonexistent/x.toml"]) == 2


def test_invalid_model_rejected(tmp_path):
    cfg = write(tmp_path, "bad.toml", "[model]\np = 1.5\nq = 1.0\n")
    assert main(["classify", "--config", cfg]) == 2


def test_estimate_roundtrip_and_determinism(tmp_path):
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    body = BASE.format(out=out1) + """
[estimate]
region = [0, 3, 0, 3]
bc = "free"
event = {kind = "H", rect = [0, 3, 0, 3]}
"""
    cfg = write(tmp_path, "est.toml", body)
    assert main(["estimate", "--config", cfg]) == 0
    assert main(["estimate", "--config", cfg, "--out", str(out2)]) == 0
    a = (out1 / "estimates.csv").read_bytes()
    b = (out2 / "estimates.csv").read_bytes()
    assert a == b
    text = a.decode()
    assert text.startswith(CSV_VERSION)
    assert "H:0x3x0x3" in text


def test_estimate_seed_changes_output(tmp_path):
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    body = BASE.format(out=out1) + """
[estimate]
region = [0, 3, 0, 3]
bc = "wired"
event = {kind = "V", rect = [0, 3, 0, 3]}
"""
    cfg = write(tmp_path, "est.toml", body)
    main(["estimate", "--config", cfg])
    main(["estimate", "--config", cfg, "--seed", "99", "--out", str(out2)])
    assert (out1 / "estimates.csv").read_text() != (out2 / "estimates.csv").read_text()


def test_estimate_strip_mode(tmp_path):
    out = tmp_path / "o"
    body = BASE.format(out=out) + """
[estimate]
strip = {n = 2, bc = "0/1", m = 6}
event = {kind = "H", rect = [0, 3, 0, 2]}
"""
    cfg = write(tmp_path, "strip.toml", body)
    assert main(["estimate", "--config", cfg]) == 0
    lines = (out / "estimates.csv").read_text().splitlines()
    assert len(lines) == 4  # version, header, m row, 2m row
    assert "strip-0/1" in lines[2]


def test_estimate_unreliable_exit_code(tmp_path):
    out = tmp_path / "o"
    # single cluster colored once per step at q=25: tau is far beyond a
    # tenth of this tiny window, so the estimate must be flagged
    body = """
[run]
seed = 3
out = "{out}"

[model]
p = 0.5
q = 25.0

[schedule]
burn_in = 10
sweeps = 120
chains = 2

[estimate]
region = [0, 1, 0, 1]
bc = "wired"
event = {{kind = "H", rect = [0, 1, 0, 1]}}
""".format(out=out)
    cfg = write(tmp_path, "u.toml", body)
    code = main(["estimate", "--config", cfg])
    assert code == 4
    assert "unreliable" in (out / "estimates.csv").read_text()


def test_exact_check_passes(tmp_path):
    out = tmp_path / "o"
    body = """
[run]
seed = 1
out = "{out}"

[exact_check]
max_edges = 10
p_grid = [0.5]
q_grid = [1.0, 2.0]
""".format(out=out)
    cfg = write(tmp_path, "ec.toml", body)
    assert main(["exact-check", "--config", cfg]) == 0
    report = json.loads((out / "exact_check.json").read_text())
    assert report["ok"] and report["n_checks"] > 0


def test_exact_check_fault_injection_exit_code(tmp_path):
    out = tmp_path / "o"
    body = """
[run]
seed = 1
out = "{out}"

[exact_check]
max_edges = 7
p_grid = [0.5]
q_grid = [2.0]
inject_fault = "fkg-sign"
""".format(out=out)
    cfg = write(tmp_path, "ec.toml", body)
    assert main(["exact-check", "--config", cfg]) == 3
    report = json.loads((out / "exact_check.json").read_text())
    assert not report["ok"] and report["failures"]


def test_exact_check_empty_corpus(tmp_path, capsys):
    out = tmp_path / "o"
    body = """
[run]
seed = 1
out = "{out}"

[exact_check]
max_edges = 3
""".format(out=out)
    cfg = write(tmp_path, "ec.toml", body)
    assert main(["exact-check", "--config", cfg]) == 0
    assert "0 checks" in capsys.readouterr().out


def test_snapshot_modes(tmp_path):
    out = tmp_path / "o"
    body = """
[run]
seed = 5
out = "{out}"

[model]
p = 0.6
q = 1.5

[snapshot]
region = [-3, 3, -3, 3]
mode = "open"
highlight = {{kind = "H", rect = [-3, 3, -3, 3]}}
""".format(out=out)
    cfg = write(tmp_path, "snap.toml", body)
    assert main(["snapshot", "--config", cfg]) == 0
    svg = (out / "snapshot.svg").read_text()
    assert svg.startswith("<svg")
    assert "polyline" in svg            # witness drawn
    assert "stroke-dasharray" not in svg  # no closed edges when all open

    body2 = body.replace('mode = "open"', 'mode = "closed"').replace(
        "highlight = {kind = \"H\", rect = [-3, 3, -3, 3]}", "")
    cfg2 = write(tmp_path, "snap2.toml", body2)
    assert main(["snapshot", "--config", cfg2, "--out", str(tmp_path / "o2")]) == 0
    svg2 = (tmp_path / "o2" / "snapshot.svg").read_text()
    assert "stroke-dasharray" in svg2

    cfg3 = write(tmp_path, "snap3.toml",
                 body.replace("mode = \"open\"", "mode = \"sample\""))
    assert main(["snapshot", "--config", cfg3, "--out", str(tmp_path / "o3")]) == 0


def test_snapshot_deterministic(tmp_path):
    body = """
[run]
seed = 5
out = "{out}"

[model]
p = 0.55
q = 2.0

[snapshot]
region = [-3, 3, -3, 3]
mode = "sample"
steps = 50
"""
    cfg = write(tmp_path, "s.toml", body.format(out=tmp_path / "a"))
    main(["snapshot", "--config", cfg])
    main(["snapshot", "--config", cfg, "--out", str(tmp_path / "b")])
    assert ((tmp_path / "a" / "snapshot.svg").read_bytes()
            == (tmp_path / "b" / "snapshot.svg").read_bytes())


def test_classify_cli(tmp_path):
    out = tmp_path / "o"
    body = """
[run]
seed = 2
out = "{out}"

[model]
p = 1.0
q = 2.0

[schedule]
sweeps = 100
chains = 1

[classify]
n_grid = [2, 3, 4, 5]
""".format(out=out)
    cfg = write(tmp_path, "c.toml", body)
    assert main(["classify", "--config", cfg]) == 0
    js = json.loads((out / "classify.json").read_text())
    assert js["verdict"] == "SupCrit"


def test_densities_cli(tmp_path):
    out = tmp_path / "o"
    body = BASE.format(out=out).replace("p = 0.5", "p = 1.0") + """
[densities]
which = "p"
n = 2
alpha_grid = [2, 3, 4]
"""
    cfg = write(tmp_path, "d.toml", body)
    assert main(["densities", "--config", cfg]) == 0
    js = json.loads((out / "densities.json").read_text())
    assert js["density"] == 1.0
    csv = (out / "densities.csv").read_text()
    assert csv.startswith(CSV_VERSION)


def test_threads_env_fallback(tmp_path, monkeypatch):
    out = tmp_path / "o"
    body = BASE.format(out=out) + """
[estimate]
region = [0, 2, 0, 2]
bc = "free"
event = {kind = "H", rect = [0, 2, 0, 2]}
"""
    cfg = write(tmp_path, "t.toml", body)
    monkeypatch.setenv("RCQUAD_THREADS", "2")
    assert main(["estimate", "--config", cfg]) == 0
    import rcquad.sampler as sampler
    assert sampler._THREADS == 2
    sampler.set_threads(1)
