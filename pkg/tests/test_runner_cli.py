"""Driver-level tests: the basis audit report, simulate/limit-study
rendering and determinism, and the command-line front end run in-process
with its exit codes and error lines."""

import os

import numpy as np
import pytest

from dke.cli import main
from dke.grid import GridSpec
from dke.kinetics import detailed_balance_table
from dke.runner import (_resample_initial, fmt17, limit_study, refined_grid,
                        render_run_meta, simulate, verify_basis_report,
                        write_outputs)
from dke.scenario import build_initial, parse_config

UNIFORM_CFG = """\
[grid]
d = 1.0
num_cells = 4
n_max = 2

[initial]
kind = uniform
n0 = 0.5

[integrator]
dt = 0.01
t_end = 0.05
"""

LIMIT_CFG = """\
[grid]
d = 1.0
num_cells = 8
n_max = 6

[potential]
kind = uniform_field
E0 = 1.0

[initial]
kind = gaussian_rk
center_m = 4
center_n = 0
sigma_r = 1.5
sigma_k = 18.0
amplitude = 0.5
"""


# ----------------------------------------------------------- verify report

def test_verify_report_passes_on_sound_basis():
    result = verify_basis_report(4, 4)
    assert result.passed
    assert len(result.checks) == 4
    for check in result.checks:
        assert check.defect < check.tol
    assert result.report.endswith("result: PASS\n")
    assert result.report.count("PASS") == 5


def test_verify_report_catches_wrong_prefactor():
    result = verify_basis_report(4, 4, prefactor_scale=1.01)
    assert not result.passed
    by_name = {c.name: c for c in result.checks}
    # quadrature orthonormality is untouched by the injected fault
    assert by_name["orthonormality analytic-vs-quadrature"].passed
    assert not by_name["plane-wave expansion prefactor"].passed
    assert not by_name["expansion column normalization"].passed
    assert result.report.endswith("result: FAIL\n")


def test_verify_report_rejects_oversized_grids():
    with pytest.raises(ValueError, match="limit is 512"):
        verify_basis_report(118, 2)


# --------------------------------------------------------------- simulate

def test_simulate_renders_schema_and_is_deterministic():
    config = parse_config(UNIFORM_CFG)
    first = simulate(config)
    second = simulate(config)
    assert first.snapshots_csv == second.snapshots_csv
    assert first.diagnostics_csv == second.diagnostics_csv
    assert first.run_meta == second.run_meta

    lines = first.snapshots_csv.splitlines()
    assert lines[0] == "t,m,n,value"
    # uniform state with no forcing: every snapshot identical
    samples = len(first.trajectory)
    assert len(lines) == 1 + samples * 4 * 5
    assert lines[1] == "0,0,-2,0.5"
    ns = {int(line.split(",")[2]) for line in lines[1:]}
    assert ns == {-2, -1, 0, 1, 2}  # physical momentum indices

    dlines = first.diagnostics_csv.splitlines()
    assert dlines[0] == "t,total_number,min_n,max_n,entropy"
    assert len(dlines) == 1 + samples
    cols = dlines[1].split(",")
    assert float(cols[1]) == 10.0  # 20 states at half filling
    assert float(cols[2]) == 0.5 and float(cols[3]) == 0.5


def test_run_meta_echoes_config_and_bounds():
    config = parse_config(UNIFORM_CFG)
    meta = simulate(config).run_meta
    head, derived = meta.split("# derived quantities", 1)
    assert parse_config(head) == config
    assert "num_steps = 5" in derived
    assert "transport_dt_bound = " in derived
    assert "stability_dt_bound = " in derived
    assert "collision_dt_bound" not in derived  # collisionless run

    model = detailed_balance_table(config.grid, 1.0, 0.3)
    meta2 = render_run_meta(config, model)
    assert "collision_dt_bound = " in meta2
    assert f"collision_dt_bound = {fmt17(model.dt_bound())}" in meta2


def test_simulate_output_dir_override():
    config = parse_config(UNIFORM_CFG + "\n[output]\ndir = from_config\n")
    assert simulate(config).output_dir == "from_config"
    assert simulate(config, output_dir="elsewhere").output_dir == "elsewhere"


def test_write_outputs_round_trip(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    result = simulate(parse_config(UNIFORM_CFG), output_dir="sub/dir")
    paths = write_outputs(result)
    assert sorted(paths) == ["diagnostics.csv", "run_meta", "snapshots.csv"]
    for name, path in paths.items():
        with open(path, "r", encoding="utf-8") as fh:
            assert fh.read() == getattr(
                result, {"snapshots.csv": "snapshots_csv",
                         "diagnostics.csv": "diagnostics_csv",
                         "run_meta": "run_meta"}[name])


# ------------------------------------------------------------- limit study

def test_refined_grid_levels():
    base = GridSpec(d=1.0, num_cells=4, n_max=3)
    assert refined_grid(base, 1) == base
    fine = refined_grid(base, 3)
    assert fine == GridSpec(d=0.25, num_cells=16, n_max=12)
    assert fine.length == base.length


def test_resample_matches_factory_on_base_grid():
    config = parse_config(LIMIT_CFG)
    resampled = _resample_initial(config, refined_grid(config.grid, 1))
    assert np.array_equal(resampled.values, build_initial(config).values)


def test_limit_study_rejections():
    config = parse_config(LIMIT_CFG)
    with pytest.raises(ValueError, match="levels"):
        limit_study(config, 1)
    with pytest.raises(ValueError, match="levels"):
        limit_study(config, 6)
    with pytest.raises(ValueError, match="gaussian_rk"):
        limit_study(parse_config(UNIFORM_CFG), 2)

    table = parse_config(LIMIT_CFG.replace(
        "kind = uniform_field\nE0 = 1.0", "kind = custom_table\nfile = v.txt"))
    with pytest.raises(ValueError, match="custom_table"):
        limit_study(table, 2)
    usertab = parse_config(
        LIMIT_CFG + "\n[collision]\nkind = user_table\nfile = w.csv\n")
    with pytest.raises(ValueError, match="user_table"):
        limit_study(usertab, 2)


def test_limit_study_defect_shrinks_under_refinement():
    config = parse_config(LIMIT_CFG)
    result = limit_study(config, 3)
    assert len(result.rows) == 3
    defects = [row[3] for row in result.rows]
    assert defects[0] > 0
    # second-order streaming gap: about 4x per halving of d
    assert defects[1] < defects[0] / 2.0
    assert defects[2] < defects[1] / 2.0
    lines = result.csv_text.splitlines()
    assert lines[0] == "level,d,n_max,defect"
    assert lines[1].startswith("1,1,6,")
    assert lines[3].startswith("3,0.25,24,")


# -------------------------------------------------------------------- CLI

def test_cli_verify_pass(capsys):
    assert main(["verify-basis", "--cells", "4", "--nmax", "3"]) == 0
    out = capsys.readouterr().out
    assert "result: PASS" in out


def test_cli_verify_fail(capsys):
    rc = main(["verify-basis", "--cells", "4", "--nmax", "3",
               "--corrupt-prefactor", "1.01"])
    assert rc == 1
    captured = capsys.readouterr()
    assert "result: FAIL" in captured.out
    assert captured.err.startswith("error=verify_failed ")


def test_cli_verify_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify-basis", "--nmax", "3"])
    assert exc.value.code == 2
    assert "error=usage" in capsys.readouterr().err

    with pytest.raises(SystemExit) as exc:
        main(["verify-basis", "--cells", "3", "--nmax", "3"])
    assert exc.value.code == 2
    assert "even" in capsys.readouterr().err

    # oversized grids are a usage error too, reported without traceback
    rc = main(["verify-basis", "--cells", "300", "--nmax", "2"])
    assert rc == 2
    assert "error=usage" in capsys.readouterr().err


def test_cli_missing_subcommand(capsys):
    assert main([]) == 2
    assert "error=usage missing subcommand" in capsys.readouterr().err


def test_cli_simulate_io_error(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    rc = main(["simulate", "--config", "nope.cfg"])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error=io ")


def test_cli_simulate_config_error(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    bad = tmp_path / "bad.cfg"
    bad.write_text(UNIFORM_CFG.replace("d = 1.0", "d = -1.0"))
    rc = main(["simulate", "--config", "bad.cfg"])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error=config_invalid 1 violation(s)")
    assert "grid.d = -1.0 violates d > 0" in err


def test_cli_simulate_run_failures(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    toobig = tmp_path / "toobig.cfg"
    toobig.write_text(UNIFORM_CFG.replace("dt = 0.01", "dt = 0.5"))
    rc = main(["simulate", "--config", "toobig.cfg"])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error=run_failed ")
    assert "stability bound" in err

    rough = tmp_path / "rough.cfg"
    rough.write_text("""\
[grid]
d = 1.0
num_cells = 16
n_max = 2

[initial]
kind = gaussian_rk
center_m = 8
center_n = 0
sigma_r = 0.7
sigma_k = 4.4
amplitude = 0.8

[integrator]
dt = 0.03
t_end = 1.0
""")
    rc = main(["simulate", "--config", "rough.cfg"])
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error=positivity_abort ")
    assert "at step" in err


def test_cli_simulate_preset(tmp_path, monkeypatch, capsys, presets_dir):
    monkeypatch.chdir(tmp_path)
    rc = main(["simulate", "--config",
               str(presets_dir / "relaxation.cfg")])
    assert rc == 0
    out = capsys.readouterr().out
    assert ("wrote diagnostics.csv, run_meta, snapshots.csv "
            "to out_relaxation") in out
    assert "t_end 20  total_number " in out
    for name in ("snapshots.csv", "diagnostics.csv", "run_meta"):
        assert (tmp_path / "out_relaxation" / name).is_file()


def test_cli_simulate_outputs_are_reproducible(tmp_path, monkeypatch,
                                               capsys, presets_dir):
    monkeypatch.chdir(tmp_path)
    cfg = str(presets_dir / "relaxation.cfg")
    names = ("snapshots.csv", "diagnostics.csv", "run_meta")
    assert main(["simulate", "--config", cfg, "--output-dir", "a"]) == 0
    first = {name: (tmp_path / "a" / name).read_bytes() for name in names}
    assert main(["simulate", "--config", cfg, "--output-dir", "a"]) == 0
    capsys.readouterr()
    for name in names:
        second = (tmp_path / "a" / name).read_bytes()
        assert first[name] == second, f"{name} differs between identical runs"


def test_cli_limit_study(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "limit.cfg"
    cfg.write_text(LIMIT_CFG)

    rc = main(["limit-study", "--config", "limit.cfg", "--levels", "1"])
    assert rc == 2
    assert "error=usage levels" in capsys.readouterr().err

    rc = main(["limit-study", "--config", "limit.cfg", "--levels", "2",
               "--output-dir", "ls_out"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "wrote limit_study.csv to ls_out" in out
    assert "level 1" in out and "level 2" in out
    text = (tmp_path / "ls_out" / "limit_study.csv").read_text()
    assert text.splitlines()[0] == "level,d,n_max,defect"
    assert len(text.splitlines()) == 3
