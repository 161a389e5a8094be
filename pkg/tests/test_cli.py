import json
from pathlib import Path

import pytest

from frogmodel.cli import run


def write_cfg(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def read_csv(path):
    return Path(path).read_bytes()


def meta_without_wallclock(path):
    meta = json.loads(Path(path).read_text())
    meta.pop("wall_clock_s", None)
    return meta


def test_unknown_flag_exits_2(tmp_path, capsys):
    assert run(["sim-frog", "--config", "x.json", "--bogus"]) == 2


def test_missing_config_exits_2(tmp_path, capsys):
    code = run(["sim-frog", "--config", str(tmp_path / "none.json")])
    assert code == 2
    assert "no such config" in capsys.readouterr().err


def test_malformed_json_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dist": \n  nope}')
    assert run(["sim-frog", "--config", str(bad)]) == 2
    assert "bad.json:2" in capsys.readouterr().err


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "frog.json",
                    {"dist": {"family": "dirac", "k": 1}, "right_horizon": 4,
                     "frobnicate": True})
    assert run(["sim-frog", "--config", cfg,
                "--output", str(tmp_path / "out")]) == 2
    assert "frobnicate" in capsys.readouterr().err


def test_sim_frog_reproducible_bytes(tmp_path):
    cfg = write_cfg(tmp_path, "frog.json",
                    {"dist": {"family": "poisson", "lam": 1.0},
                     "right_horizon": 16, "replicas": 2, "seed": 7})
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert run(["sim-frog", "--config", cfg, "--output", str(out1)]) == 0
    assert run(["sim-frog", "--config", cfg, "--output", str(out2)]) == 0
    assert read_csv(out1 / "sim-frog.csv") == read_csv(out2 / "sim-frog.csv")
    assert meta_without_wallclock(out1 / "sim-frog_meta.json") == \
        meta_without_wallclock(out2 / "sim-frog_meta.json")


def test_sim_frog_seed_override_changes_output(tmp_path):
    cfg = write_cfg(tmp_path, "frog.json",
                    {"dist": {"family": "poisson", "lam": 1.0},
                     "right_horizon": 16, "replicas": 1, "seed": 7})
    out1, out2 = tmp_path / "a", tmp_path / "b"
    run(["sim-frog", "--config", cfg, "--output", str(out1)])
    run(["sim-frog", "--config", cfg, "--seed", "8", "--output", str(out2)])
    assert read_csv(out1 / "sim-frog.csv") != read_csv(out2 / "sim-frog.csv")


def test_sim_frog_cap_trip_exit_3(tmp_path):
    cfg = write_cfg(tmp_path, "frog.json",
                    {"dist": {"family": "logpareto", "a": 0.5},
                     "right_horizon": 64, "replicas": 1, "seed": 3,
                     "particle_cap": 2000})
    assert run(["sim-frog", "--config", cfg,
                "--output", str(tmp_path / "out")]) == 3


def test_sim_tadibp_emits_fields(tmp_path):
    cfg = write_cfg(tmp_path, "t.json",
                    {"dist": {"family": "poisson", "lam": 1.0},
                     "speed": {"family": "power", "alpha": 1.0},
                     "horizon": 10, "fields": 3, "seed": 1})
    out = tmp_path / "out"
    assert run(["sim-tadibp", "--config", cfg, "--output", str(out)]) == 0
    lines = (out / "sim-tadibp.csv").read_text().splitlines()
    assert lines[0] == "field,site,psi,overshoot,wet,value_saturated,count_truncated"
    assert len(lines) == 1 + 3 * 11


def test_ell_tail_grid(tmp_path):
    cfg = write_cfg(tmp_path, "e.json",
                    {"dist": {"family": "dirac", "k": 1},
                     "speed": {"family": "constant", "value": 2.0},
                     "x": [0, 1], "j": [1, 2], "replicas": 2000, "seed": 2})
    out = tmp_path / "out"
    assert run(["ell-tail", "--config", cfg, "--output", str(out)]) == 0
    lines = (out / "ell-tail.csv").read_text().splitlines()
    assert len(lines) == 5


def test_check_conditions_verdicts(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "c.json",
                    {"dist": {"family": "logpareto", "a": 0.5},
                     "speed": {"family": "power", "alpha": 2.0}, "rho": 2.0})
    out = tmp_path / "out"
    assert run(["check-conditions", "--config", cfg, "--output", str(out)]) == 0
    report = json.loads((out / "check-conditions.json").read_text())
    assert report["reports"]["explosion"]["verdict"] == "explosion-consistent"
    assert "explosion-consistent" in capsys.readouterr().out


def test_check_conditions_requires_rho(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "c.json",
                    {"dist": {"family": "dirac", "k": 1},
                     "speed": {"family": "power", "alpha": 2.0},
                     "checks": ["explosion"]})
    assert run(["check-conditions", "--config", cfg,
                "--output", str(tmp_path / "out")]) == 2


def test_bounds_csv(tmp_path):
    cfg = write_cfg(tmp_path, "b.json",
                    {"speed": {"family": "constant", "value": 2.0},
                     "i_values": [0], "j_values": [1], "walks_per_cell": 5000,
                     "seed": 4})
    out = tmp_path / "out"
    assert run(["bounds", "--config", cfg, "--output", str(out)]) == 0
    lines = (out / "bounds.csv").read_text().splitlines()
    assert len(lines) == 3  # header + lower + upper per cell
    assert all(line.endswith((",1,", ",1", ",0")) or "satisfied" in line
               for line in lines)


def test_sweep_grid_and_degenerate_cell(tmp_path):
    cfg = write_cfg(tmp_path, "s.json",
                    {"dists": [{"family": "dirac", "k": 1},
                               {"family": "poisson", "lam": 1.0}],
                     "right_horizons": [32, 64],
                     "replicas": 3, "levels": 3, "seed": 5})
    out = tmp_path / "out"
    assert run(["sweep", "--config", cfg, "--output", str(out)]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert len(lines) == 5  # header + 4 cells
    assert lines[1].startswith("0,")
    assert lines[4].startswith("3,")


def test_sweep_flags_capped_cell(tmp_path):
    cfg = write_cfg(tmp_path, "s.json",
                    {"dists": [{"family": "logpareto", "a": 0.5}],
                     "right_horizons": [64],
                     "replicas": 2, "levels": 3, "seed": 6,
                     "frog": {"particle_cap": 1000}})
    out = tmp_path / "out"
    assert run(["sweep", "--config", cfg, "--output", str(out)]) == 3
    import csv as _csv
    with open(out / "sweep.csv") as fh:
        rows = list(_csv.DictReader(fh))
    assert rows[0]["capped"] == "1"


def test_sweep_gnuplot_emission(tmp_path):
    cfg = write_cfg(tmp_path, "s.json",
                    {"dists": [{"family": "dirac", "k": 1}],
                     "right_horizons": [16], "replicas": 2, "levels": 2,
                     "seed": 7, "emit_gnuplot": True})
    out = tmp_path / "out"
    run(["sweep", "--config", cfg, "--output", str(out)])
    script = (out / "theta_curves.gp").read_text()
    assert "plot" in script and "theta_cell0.csv" in script
    assert (out / "theta_cell0.csv").exists()


def test_output_env_var_default(tmp_path, monkeypatch):
    monkeypatch.setenv("FROGMODEL_OUT", str(tmp_path / "envout"))
    monkeypatch.chdir(tmp_path)
    cfg = write_cfg(tmp_path, "frog.json",
                    {"dist": {"family": "dirac", "k": 1},
                     "right_horizon": 4, "seed": 1})
    assert run(["sim-frog", "--config", cfg]) == 0
    assert (tmp_path / "envout" / "sim-frog.csv").exists()
