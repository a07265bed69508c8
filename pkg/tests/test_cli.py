import json
from pathlib import Path

import numpy as np
import pytest

from oversetdg.cli import ConfigError, emit_plot_script, main, parse_config
from oversetdg.diagnostics import ErrorReport, read_energy_csv, read_error_csv, write_energy_csv, write_error_csv
from oversetdg.mesh import Subdomain
from oversetdg.spectrum import read_spectrum_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SINUSOID = {
    "equation": {"system2": {"matrix": [[0, 1], [1, 0]]}},
    "geometry": {"a": 0.0, "b": 3.0, "c": 5.0, "d": 8.0, "offset": 0.25},
    "mesh": {"k_u": 6, "k_v": 6, "n": 4},
    "flux": "upwind",
    "coupling": {"mode": "penalty", "gamma_u": 1.0, "gamma_v": 1.0},
    "bc": {"exact": {"k": 4}},
    "time": {"final_t": 0.5},
}


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg, indent=2))
    return str(p)


def with_(base, **changes):
    cfg = json.loads(json.dumps(base))
    for key, val in changes.items():
        cfg[key] = val
    return cfg


# config parsing


def test_parse_sinusoid():
    cfg = parse_config(json.dumps(SINUSOID))
    assert cfg.overset
    assert (cfg.mesh.a, cfg.mesh.b, cfg.mesh.c, cfg.mesh.d) == (0.25, 3.0, 5.25, 8.0)
    assert cfg.N == 4 and cfg.coupling.mode == "penalty"
    assert cfg.reference is cfg.initial
    assert cfg.run_config("exponential").scheme == "exponential"
    assert cfg.run_config().T == 0.5


def test_parse_single_domain_defaults():
    cfg = parse_config(json.dumps({"equation": {"scalar": {"alpha": 2.0}}, "geometry": {"a": 0, "d": 1}, "mesh": {"k_u": 3, "n": 2}}))
    assert isinstance(cfg.mesh, Subdomain) and not cfg.overset
    assert cfg.final_t == 25.0 and cfg.cfl == 0.5
    assert cfg.coupling.flux == "upwind"


@pytest.mark.parametrize(
    "changes,key",
    [
        ({"mesh": {"k_u": 6, "k_v": 6, "n": 4, "extra": 1}}, "extra"),
        ({"colour": "red"}, "colour"),
        ({"flux": "lax"}, "flux"),
        ({"coupling": {"mode": "magic"}}, "mode"),
        ({"coupling": {"eta": 1.0}}, "eta"),
        ({"coupling": {"epsilon": -1}}, "epsilon"),
        ({"mesh": {"k_u": 0, "k_v": 6, "n": 4}}, "k_u"),
        ({"mesh": {"k_u": 6, "k_v": 6, "n": 2.5}}, "n"),
        ({"time": {"final_t": 1.0, "cfl": 2.0}}, "cfl"),
        ({"geometry": {"a": 0.0, "b": 3.0, "c": 2.0, "d": 8.0}}, "c"),
        ({"equation": {"system2": {"matrix": [[0, 1], [2, 0]]}}}, "matrix"),
        ({"bc": {"exact": {"k": -1}}}, "k"),
    ],
)
def test_invalid_configs_rejected_with_line(changes, key):
    text = json.dumps(with_(SINUSOID, **changes), indent=2)
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    err = info.value
    assert key in err.path or key in str(err)
    assert err.line is not None
    assert f'"{key}"' in text.splitlines()[err.line - 1]


def test_invalid_json_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config('{\n  "mesh": {\n    "n": 4,\n  }\n}')
    assert info.value.line == 4


def test_exact_bc_requires_wave_system():
    cfg = with_(SINUSOID, equation={"scalar": {"alpha": 1.0}})
    with pytest.raises(ConfigError):
        parse_config(json.dumps(cfg))


def test_central_flux_enables_coupling_for_studies():
    cfg = parse_config(json.dumps(with_(SINUSOID, flux="central", coupling={"mode": "characteristic"})))
    assert cfg.coupling.allow_central_coupling


# commands


def test_run_writes_energy_and_errors(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", write_cfg(tmp_path, SINUSOID), "--out", str(out)]) == 0
    series = read_energy_csv(out / "energy.csv")
    assert series[0].t == 0.0 and series[-1].t == 0.5
    (rep,) = read_error_csv(out / "errors.csv")
    assert rep.N == 4 and rep.err_total < 0.1
    assert "final error:" in capsys.readouterr().out
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "run"
    assert manifest["files"] == sorted(manifest["files"])
    assert {"energy.csv", "energy.png", "energy.gp", "errors.csv", "manifest.json"} <= set(manifest["files"])
    assert all((out / f).exists() for f in manifest["files"])


def test_run_zero_final_time(tmp_path):
    out = tmp_path / "out"
    cfg = with_(SINUSOID, time={"final_t": 0.0})
    assert main(["run", "--config", write_cfg(tmp_path, cfg), "--out", str(out)]) == 0
    assert len(read_energy_csv(out / "energy.csv")) == 1


def test_run_output_from_config(tmp_path):
    cfg = with_(SINUSOID, output=str(tmp_path / "fromcfg"), time={"final_t": 0.0})
    assert main(["run", "--config", write_cfg(tmp_path, cfg)]) == 0
    assert (tmp_path / "fromcfg" / "energy.csv").exists()


def test_missing_output_dir_is_config_error(tmp_path):
    assert main(["run", "--config", write_cfg(tmp_path, SINUSOID)]) == 1


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = with_(SINUSOID, mesh={"k_u": 6, "k_v": 6, "n": 4, "bogus": 1})
    assert main(["run", "--config", write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "line" in err and "bogus" in err
    assert not (tmp_path / "o").exists()  # nothing computed or written


def test_missing_config_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 1


def test_blowup_exit_code(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(CONFIGS / "blowup_central.json"), "--out", str(out)]) == 2
    assert "blow-up" in capsys.readouterr().err
    assert (out / "manifest.json").exists()


def test_spectrum_single_element(tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["spectrum", "--config", str(CONFIGS / "single_element_central.json"), "--out", str(out)]) == 0
    assert "unstable=0" in capsys.readouterr().out
    lam, stable = read_spectrum_csv(out / "spectrum.csv")
    assert lam.size == 17 and np.all(stable == 1)


def test_spectrum_pair_central(tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["spectrum", "--config", str(CONFIGS / "pair_central.json"), "--out", str(out)]) == 0
    line = capsys.readouterr().out
    unstable = int(line.split("unstable=")[1])
    assert unstable >= 1
    lam, stable = read_spectrum_csv(out / "spectrum.csv")
    assert np.count_nonzero(stable == 0) == unstable


def test_spectrum_empty_overlap(tmp_path):
    cfg = json.loads((CONFIGS / "pair_central.json").read_text())
    cfg["geometry"] = {"a": 0.0, "b": 2.0, "c": 2.0, "d": 3.5}
    assert main(["spectrum", "--config", write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 1


def test_converge_single_n(tmp_path):
    out = tmp_path / "c"
    assert main(["converge", "--config", write_cfg(tmp_path, SINUSOID), "--out", str(out)]) == 0
    (rep,) = read_error_csv(out / "errors.csv")
    assert rep.N == 4 and rep.opt_u is not None and rep.opt_v is not None


def test_converge_list(tmp_path):
    out = tmp_path / "c"
    cfg = with_(SINUSOID, time={"final_t": 2.0})
    assert main(["converge", "--config", write_cfg(tmp_path, cfg), "--out", str(out), "--n-list", "4,6,8"]) == 0
    reps = read_error_csv(out / "errors.csv")
    assert [r.N for r in reps] == [4, 6, 8]
    errs = [r.err_total for r in reps]
    assert errs[0] > errs[1] > errs[2]


def test_converge_needs_exact_data(tmp_path):
    cfg = json.loads((CONFIGS / "pair_penalty.json").read_text())
    assert main(["converge", "--config", write_cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 1


def test_sweep(tmp_path, capsys):
    out = tmp_path / "sw"
    cfg = with_(SINUSOID, time={"final_t": 1.0})
    assert main(["sweep", "--config", write_cfg(tmp_path, cfg), "--out", str(out), "--param", "gamma_v", "--values", "0.8,1.0"]) == 0
    rows = (out / "sweep.csv").read_text().splitlines()
    assert rows[0] == "value,err_total" and len(rows) == 3
    assert "argmin=" in capsys.readouterr().out


@pytest.mark.parametrize("values", ["", " , ", "a,b", "-1"])
def test_sweep_bad_values(tmp_path, values):
    args = ["sweep", "--config", write_cfg(tmp_path, SINUSOID), "--out", str(tmp_path / "o"), "--param", "epsilon", "--values", values]
    assert main(args) == 1


def test_shipped_configs_parse():
    for p in sorted(CONFIGS.glob("*.json")):
        parse_config(p.read_text())


# plot scripts and CSV fidelity


def test_plot_scripts(tmp_path):
    out = tmp_path / "s"
    main(["spectrum", "--config", str(CONFIGS / "pair_central.json"), "--out", str(out)])
    err_csv = tmp_path / "errors.csv"
    write_error_csv(err_csv, [ErrorReport(4, 1e-2, 2e-2, 1e-2, 1.5e-2)])
    script = emit_plot_script([out / "spectrum.csv", err_csv])
    assert "'spectrum.csv'" in script and "'errors.csv'" in script
    assert "$3==1" in script and "$3==0" in script and "red" in script
    assert "set logscale y" in script
    gp = (out / "spectrum.gp").read_text()
    assert "'spectrum.csv'" in gp and "spectrum_gnuplot.png" in gp


def test_plot_script_unknown_csv(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("foo,bar\n1,2\n")
    with pytest.raises(ValueError):
        emit_plot_script([p])


def test_csv_round_trip_17_digits(tmp_path):
    out = tmp_path / "r"
    main(["run", "--config", write_cfg(tmp_path, with_(SINUSOID, time={"final_t": 0.2})), "--out", str(out)])
    series = read_energy_csv(out / "energy.csv")
    # re-writing what was read gives identical bytes
    write_energy_csv(tmp_path / "again.csv", series)
    assert (tmp_path / "again.csv").read_text() == (out / "energy.csv").read_text()
