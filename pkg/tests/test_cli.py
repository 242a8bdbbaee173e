import json

import pytest

from cqed import cli, presets
from cqed.errors import ConfigError


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_catalog_contents_and_stability(capsys):
    names = {s.name for s in presets.list_scenarios()}
    for n in ("fig5", "fig7", "fig8", "fig9", "fig11", "fig12", "fig13", "fig17", "fig18"):
        assert n in names
    assert cli.main(["list", "--json"]) == 0
    first = capsys.readouterr().out
    assert cli.main(["list", "--json"]) == 0
    assert capsys.readouterr().out == first
    cmds = {d["name"]: d["command"] for d in json.loads(first)}
    assert cmds["fig9"] == "spectrum" and cmds["fig7"] == "readout" and cmds["fig18"] == "phasespace"


def test_preset_parameters():
    p8 = presets.SCENARIOS["fig8"].default_config()["params"]
    assert set(("kappa", "gamma1", "g", "regime")) <= set(p8)
    p13 = presets.SCENARIOS["fig13"].default_config()["params"]
    assert (p13["f01"], p13["f12"], p13["g"]) == (6e9, 5.75e9, 0.1e9)


def test_list_show(capsys):
    assert cli.main(["list", "--show", "fig5"]) == 0
    assert json.loads(capsys.readouterr().out)["scenario"] == "fig5"
    assert cli.main(["list", "--show", "nope"]) == 2


def test_empty_sweep_is_config_error(tmp_path, capsys):
    cfg = write(tmp_path, {"scenario": "fig5", "sweep": {"parameter": "ng", "values": []}})
    out = tmp_path / "out"
    assert cli.main(["spectrum", "--config", cfg, "--out", str(out), "--no-plot"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["status"] == "error" and err["error_type"] == "ConfigError"
    assert json.loads((out / "error.json").read_text())["error_type"] == "ConfigError"


@pytest.mark.parametrize("raw", [
    {"scenario": "nope"},
    {"scenario": "fig7"},  # readout scenario under the spectrum command
    {"scenario": "fig5", "params": {"unknown": 1}},
    {"scenario": "fig5", "params": {"ratios": "many"}},
    {"scenario": "fig5", "bogus": 1},
    {"scenario": "fig5", "seed": -1},
    {"scenario": "fig5", "sweep": {"parameter": "ng", "start": 1, "stop": 1, "points": 5}},
    {"scenario": "fig5", "sweep": {"parameter": "flux", "start": 0, "stop": 1, "points": 5}},
])
def test_bad_configs(raw):
    with pytest.raises(ConfigError):
        presets.resolve_config(raw, "spectrum")


def test_missing_config_file(tmp_path):
    assert cli.main(["spectrum", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path / "o")]) == 2


def test_physics_error_exit_code(tmp_path, capsys):
    # two-leg cat at large alpha in a tiny space leaks out of the truncation
    cfg = write(tmp_path, {"scenario": "wigner", "params": {"state": "cat", "alpha": 4.0},
                           "dims": {"fock": 10}})
    code = cli.main(["phasespace", "--config", cfg, "--out", str(tmp_path / "o"), "--no-plot"])
    assert code == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error_type"] == "LeakageError" and err["module"] == "codes"


def test_manifest_lists_files(tmp_path):
    cfg = write(tmp_path, {"scenario": "fig5", "sweep": {"parameter": "ng", "start": -1, "stop": 1, "points": 11}})
    m = cli.run("spectrum", cfg, str(tmp_path / "o"))
    files = set(p.name for p in (tmp_path / "o").iterdir())
    assert set(m["files"]) | {"fig5_manifest.json"} == files
    assert any(f.endswith(".png") for f in m["files"])
    on_disk = json.loads((tmp_path / "o" / "fig5_manifest.json").read_text())
    assert on_disk["config_hash"] == m["config_hash"] and on_disk["version"]


def test_seed_determinism_and_sensitivity(tmp_path):
    def csvs(seed, tag):
        cfg = write(tmp_path, {"scenario": "records", "seed": seed}, f"{tag}.json")
        m = cli.run("readout", cfg, str(tmp_path / tag), plot=False)
        return {f: (tmp_path / tag / f).read_bytes() for f in m["files"] if f.endswith(".csv")}

    a, b, c = csvs(7, "a"), csvs(7, "b"), csvs(8, "c")
    assert a == b
    assert a != c


def test_cli_seed_overrides_config(tmp_path):
    cfg = write(tmp_path, {"scenario": "records", "seed": 1})
    m = cli.run("readout", cfg, str(tmp_path / "o"), seed=99, plot=False)
    assert m["seed"] == 99


def test_threads_env(monkeypatch):
    for v in cli.THREAD_VARS:
        monkeypatch.delenv(v, raising=False)
    monkeypatch.delenv("CQED_THREADS", raising=False)
    assert cli._set_threads(None) is None
    assert cli._set_threads(2) == 2
    import os
    assert all(os.environ[v] == "2" for v in cli.THREAD_VARS)
    with pytest.raises(ValueError):
        cli._set_threads(0)


def test_list_filter(capsys):
    assert cli.main(["list", "--command", "gate", "--json"]) == 0
    got = json.loads(capsys.readouterr().out)
    assert got and all(d["command"] == "gate" for d in got)
