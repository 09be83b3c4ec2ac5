import numpy as np
import pytest

from hcmu_lab import cli
from hcmu_lab.errors import ConfigError
from hcmu_lab.profile import read_profile_csv
from hcmu_lab.realize import parse_mesh
from hcmu_lab.textio import read_kv_lines


def run_cli(*argv) -> int:
    return cli.main(list(argv))


def test_parse_config_basic(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# a comment\nk1 = 2\nk2 = 1\nseed = 7   # trailing\n")
    cfg = cli.parse_config(p)
    assert cfg.fraction("k1") == 2
    assert cfg.integer("seed") == 7


def test_parse_config_cusp_rational(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("k1 = 1\nk2 = -1/2\n")
    cfg = cli.parse_config(p)
    params = cli._params_from(cfg)
    assert params.kind == "cusp"


def test_parse_config_rejections(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("k1 = 2\nwhatever = 3\n")
    with pytest.raises(ConfigError) as err:
        cli.parse_config(p)
    assert "line 2" in str(err.value) and "whatever" in str(err.value)
    p.write_text("k1 = 2\nk1 = 3\n")
    with pytest.raises(ConfigError) as err:
        cli.parse_config(p)
    assert "duplicate" in str(err.value)
    p.write_text("k1 = \n")
    with pytest.raises(ConfigError):
        cli.parse_config(p)


def test_inadmissible_params_exit_2(tmp_path):
    # parsing succeeds, validation fails -> exit code 2
    p = tmp_path / "run.cfg"
    p.write_text("k1 = 1\nk2 = -2\n")
    out = tmp_path / "x.csv"
    code = run_cli("profile", "--config", str(p), "--out", str(out))
    assert code == 2
    assert not out.exists()


def test_usage_errors_exit_1(tmp_path):
    assert run_cli("no-such-command") == 1
    assert run_cli("profile", "--k1", "2", "--k2", "1") == 1  # missing --out
    assert run_cli() == 1


def test_numerical_failure_exit_3(tmp_path):
    out = tmp_path / "x.csv"
    code = run_cli("profile", "--k1", "2", "--k2", "1", "--k0", "1.5",
                   "--step", "2.0", "--out", str(out))
    assert code == 3


def test_obstruction_file_contents(tmp_path):
    out = tmp_path / "obs.txt"
    assert run_cli("obstruction", "--k1", "2", "--k2", "1", "--c", "0",
                   "--out", str(out)) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "-56/3 0 0 8"
    assert "verdict=no-root" in lines
    assert "interval=1 2" in lines


def test_profile_csv_is_monotone(tmp_path):
    out = tmp_path / "prof.csv"
    assert run_cli("profile", "--k1", "2", "--k2", "1", "--k0", "1.5",
                   "--x-min", "-1", "--x-max", "1", "--step", "0.01",
                   "--out", str(out)) == 0
    table = read_profile_csv(out)
    assert np.all(np.diff(table.Ks) > 0)


def test_optimize_reports_floor(tmp_path):
    out = tmp_path / "opt.txt"
    code = run_cli("optimize", "--k1", "2", "--k2", "1", "--k0", "1.5",
                   "--grid", "12,12,0.01,0.01", "--seed", "7",
                   "--constraint", "minimal", "--max-iter", "15",
                   "--out", str(out))
    assert code == 0
    rep = read_kv_lines(out)
    assert rep["converged"] == "false"
    assert float(rep["floor_l2"]) > 1e-4
    assert "floor_12x12" in rep and "floor_24x24" in rep


def test_realize_verify_chain(tmp_path):
    mesh_path = tmp_path / "mesh.txt"
    code = run_cli("realize", "--k1", "2", "--k2", "1", "--k0", "1.5",
                   "--k2-init", "1", "--grid", "21,11,0.002,0.002",
                   "--origin=-0.02,0", "--x-min", "-0.5", "--x-max", "0.5",
                   "--out", str(mesh_path))
    assert code == 0
    mesh = parse_mesh(mesh_path)
    assert mesh.vertices.shape == (231, 3)
    rep_path = tmp_path / "verify.txt"
    code = run_cli("verify", "--k1", "2", "--k2", "1", "--k0", "1.5",
                   "--k2-init", "1", "--mesh", str(mesh_path),
                   "--x-min", "-0.5", "--x-max", "0.5",
                   "--out", str(rep_path))
    assert code == 0
    rep = read_kv_lines(rep_path)
    assert float(rep["metric_rel_err"]) < 1e-6
    assert rep["cmc_flag"] == "false"


def test_check_gc_roundtrip(tmp_path):
    # build a field with the optimizer machinery, dump, re-check via CLI
    from hcmu_lab.fields import GridDomain, write_field_csv
    from hcmu_lab.profile import validate_params
    from hcmu_lab.realize import family_shape_field, solve_codazzi_family
    from hcmu_lab.profile import solve_curvature_ode

    params = validate_params(2, 1)
    prof = solve_curvature_ode(params, 1.5, (-1, 1), 1e-3)
    fam = solve_codazzi_family(prof, 0.0, 1.0)
    grid = GridDomain.create(params, 1.5, 11, 11, 1e-3, 1e-3,
                             origin=(-0.005, 0.0))
    fld = family_shape_field(fam, grid)
    paths = {}
    for name in ("h11", "h12", "h22"):
        paths[name] = tmp_path / f"{name}.csv"
        write_field_csv(getattr(fld, name), grid, paths[name])
    out = tmp_path / "gc.txt"
    code = run_cli("check-gc", "--k1", "2", "--k2", "1", "--k0", "1.5",
                   "--h11", str(paths["h11"]), "--h12", str(paths["h12"]),
                   "--h22", str(paths["h22"]), "--out", str(out))
    assert code == 0
    rep = read_kv_lines(out)
    assert float(rep["gauss_max"]) < 1e-8
    assert float(rep["codazzi_max"]) < 1e-4


def test_byte_reproducibility(tmp_path):
    outs = []
    for tag in ("a", "b"):
        obs = tmp_path / f"obs_{tag}.txt"
        prof = tmp_path / f"prof_{tag}.csv"
        opt = tmp_path / f"opt_{tag}.txt"
        assert run_cli("obstruction", "--k1", "3/2", "--k2", "0.25",
                       "--c", "1/3", "--out", str(obs)) == 0
        assert run_cli("profile", "--k1", "2", "--k2", "1", "--k0", "1.5",
                       "--x-min", "-0.5", "--x-max", "0.5", "--step", "0.01",
                       "--out", str(prof)) == 0
        assert run_cli("optimize", "--k1", "2", "--k2", "1", "--k0", "1.5",
                       "--grid", "10,10,0.01,0.01", "--seed", "11",
                       "--constraint", "cmc:0.5", "--max-iter", "10",
                       "--out", str(opt)) == 0
        outs.append((obs.read_bytes(), prof.read_bytes(), opt.read_bytes()))
    assert outs[0] == outs[1]


def test_config_flags_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("k1 = 2\nk2 = 1\nk0 = 1.2\nstep = 0.01\n"
                   "x_min = -0.5\nx_max = 0.5\n")
    out = tmp_path / "prof.csv"
    assert run_cli("profile", "--config", str(cfg), "--k0", "1.8",
                   "--out", str(out)) == 0
    table = read_profile_csv(out)
    mid = np.argmin(np.abs(table.xs))
    assert abs(table.Ks[mid] - 1.8) < 1e-12


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("HCMU_LAB_THREADS", "not-an-int")
    out = tmp_path / "obs.txt"
    assert run_cli("obstruction", "--k1", "2", "--k2", "1",
                   "--out", str(out)) == 1
    monkeypatch.setenv("HCMU_LAB_THREADS", "2")
    assert run_cli("obstruction", "--k1", "2", "--k2", "1",
                   "--out", str(out)) == 0
