import csv
import math

import pytest

from imexdg import config
from imexdg.bench import case_library
from imexdg.cli import main
from imexdg.solver import rates


@pytest.mark.parametrize("name", ["vortex", "cavity_adaptive", "cold_bubble_vdw_adaptive", "sod_pr", "warm_bubble_n2o"])
def test_dumps_round_trip(name):
    cfg = case_library()[name]
    assert config.from_mapping(config.parse_text(config.dumps(cfg))) == cfg


def test_parse_sections_and_comments():
    raw = config.parse_text("case = cavity  # lid driven\n\n[eos]\ngamma = 1.3\n[bc]\n0lo = lid\n")
    assert raw == {"case": "cavity", "eos.gamma": "1.3", "bc.0lo": "lid"}
    cfg = config.from_mapping(raw)
    assert cfg.eos_params["gamma"] == 1.3 and cfg.boundary_tags[(0, 0)] == "lid"
    assert cfg.reynolds == 100.0


def test_infinity_and_none_values():
    cfg = config.from_mapping({"case": "vortex", "froude": "inf", "limiter_threshold": "none", "dt": "0.1"})
    assert math.isinf(cfg.froude) and cfg.limiter_threshold is None and cfg.dt == 0.1


@pytest.mark.parametrize("raw", [
    {"case": "nope"},
    {"case": "vortex", "bogus": "1"},
    {"case": "vortex", "alpha": "0"},
    {"case": "vortex", "alpha": "2"},
    {"case": "vortex", "mach": "-1"},
    {"case": "vortex", "dt": "none", "courant": "none"},
    {"case": "vortex", "flux": "roe"},
    {"case": "vortex", "nel": "4"},
    {"case": "vortex", "periodic": "maybe,true"},
])
def test_invalid_configs(raw):
    with pytest.raises(ValueError):
        config.from_mapping(raw)


def test_missing_equals_sign():
    with pytest.raises(ValueError, match="line 2"):
        config.parse_text("case = vortex\nmach 0.1\n")


def test_rates_skip_repeated_resolution():
    assert rates([10, 10, 20], [1.0, 1.0, 0.25]) == [None, None, pytest.approx(2.0)]


def test_cli_riemann(capsys):
    assert main(["riemann", "--points", "5"]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["x", "rho", "u", "p"] and len(rows) == 6
    assert float(rows[1][1]) == 1.0 and float(rows[-1][3]) == pytest.approx(0.1)


def test_cli_analyze_tableau(capsys):
    assert main(["analyze-tableau", "--alpha-min", "0.5", "--alpha-max", "0.5", "--steps", "1"]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["alpha", "R", "imag_axis_extent"]
    assert float(rows[1][0]) == 0.5 and float(rows[1][1]) > 0


def test_cli_convergence_repeated_resolution(tmp_path, capsys):
    assert main(["convergence", "--nel", "10,10", "--courant", "0.2", "--alpha", "0.5", "--out", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "errors.csv")))
    assert rows[0] == ["N_el", "L2_rel_rho", "rate_rho", "L2_rel_u", "rate_u", "L2_rel_p", "rate_p"]
    assert len(rows) == 3
    assert all(r[2] == r[4] == r[6] == "" for r in rows[1:])
    assert 0 < float(rows[1][1]) < 1e-2


def test_cli_errors():
    with pytest.raises(SystemExit):
        main(["riemann", "--case", "other"])
    with pytest.raises(SystemExit):
        main(["convergence", "--case", "cavity"])
    with pytest.raises(SystemExit):
        main(["convergence", "--nel", "4", "--threads", "0"])
    with pytest.raises(SystemExit):
        main([])


def test_cli_run_writes_outputs(tmp_path, capsys):
    cfg = tmp_path / "case.cfg"
    cfg.write_text("case = vortex_adaptive\nnel = 6,6\nt_final = 0.2\ncourant = 0.2\nremesh_every = 2\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    out = tmp_path / "out"
    courant = list(csv.reader(open(out / "courant.csv")))
    assert courant[0] == ["step", "time", "C", "C_u", "fp_iterations", "gmres_iterations", "n_cells"]
    # dt is sized for the finest allowed cell, so the coarse initial mesh runs below the target
    assert 0 < float(courant[1][2]) <= 0.2 * (1 + 1e-9)
    mesh = list(csv.reader(open(out / "mesh.csv")))
    assert mesh[0] == ["step", "n_active_cells", "n_refine_marked", "n_coarsen_marked"] and len(mesh) > 1
    vtk = (out / "fields.vtk").read_text()
    assert vtk.startswith("# vtk DataFile") and "SCALARS density" in vtk and "VECTORS velocity" in vtk
