import json
import shutil
import subprocess

import pytest

from spectrobench.cli import main
from spectrobench.io import read_csv


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def provenance(path):
    return path.read_text().splitlines()[0]


def test_blur_outputs(tmp_path, capsys):
    code, out, _ = run(capsys, "blur", "--aperture", "gaussian:sigma=500um", "--f", "75mm", "--grooves", "300/mm",
                       "--lambda", "500nm", "--out", tmp_path)
    assert code == 0
    summary = json.loads(out)
    assert summary["product_nm_um"] == pytest.approx(132.63, rel=1e-3)
    for name in ("h_lambda.csv", "h_x.csv", "xlambda_map.csv", "xlambda_map.svg", "summary.json"):
        assert (tmp_path / name).exists()
    assert read_csv(tmp_path / "h_x.csv")[0] == ["x_m", "h_x"]
    assert read_csv(tmp_path / "xlambda_map.csv")[0] == ["x_m", "lambda_m", "intensity"]


def test_blur_two_apertures_get_suffixes(tmp_path, capsys):
    code, _, _ = run(capsys, "blur", "--aperture", "gaussian:sigma=500um", "--aperture", "slit:w=450um",
                     "--out", tmp_path, "--format", "csv")
    assert code == 0
    assert (tmp_path / "summary_0.json").exists() and (tmp_path / "summary_1.json").exists()
    assert not list(tmp_path.glob("*.svg"))


@pytest.mark.parametrize(
    "argv",
    [
        ["blur", "--aperture", "gaussian:sigma=500parsec"],
        ["blur", "--f", "75"],
        ["blur", "--grooves", "-300/mm"],
        ["sweep", "--family", "gaussian", "--widths", ""],
        ["sweep", "--family", "gaussian", "--widths", "2mm,1mm"],
        ["mtf", "--family", "slit", "--widths", "1mm", "--threshold", "1.5"],
        ["frobnicate"],
        [],
        ["blur", "--format", "png"],
        ["scene", "--cube", "does-not-exist.hsicube"],
    ],
)
def test_validation_errors_exit_2(tmp_path, capsys, argv):
    code, _, err = run(capsys, *argv, "--out", tmp_path) if argv else run(capsys)
    assert code == 2
    lines = err.strip().splitlines()
    assert len(lines) == 1 and lines[0].startswith("error: 2: ")


def test_truncated_mass_exits_3(tmp_path, capsys):
    # sigma_x = 844 um cannot fit in a 1 mm half-window
    code, _, err = run(capsys, "blur", "--aperture", "gaussian:sigma=5um", "--out", tmp_path)
    assert code == 3
    assert err.startswith("error: 3: ") and "captures" in err


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# bench\nf=50mm\ngrooves=600/mm\naperture=gaussian:sigma=1mm\n")
    code, out, _ = run(capsys, "blur", "--config", cfg, "--out", tmp_path / "a", "--format", "csv")
    assert code == 0
    # bound lambda / (4 pi nu0) at 600/mm
    assert json.loads(out)["bound_nm_um"] == pytest.approx(500e-9 / (4 * 3.141592653589793 * 6e5) * 1e15)
    code, out, _ = run(capsys, "blur", "--config", cfg, "--grooves", "300/mm", "--out", tmp_path / "b", "--format", "csv")
    assert json.loads(out)["bound_nm_um"] == pytest.approx(132.629, rel=1e-5)
    assert provenance(tmp_path / "a" / "h_x.csv") != provenance(tmp_path / "b" / "h_x.csv")


def test_bad_config_line(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("f 50mm\n")
    code, _, err = run(capsys, "blur", "--config", cfg, "--out", tmp_path)
    assert code == 2 and "expected key=value" in err


def test_hash_ignores_output_location(tmp_path, capsys):
    run(capsys, "sweep", "--family", "gaussian", "--widths", "250um,500um", "--out", tmp_path / "a")
    run(capsys, "sweep", "--family", "gaussian", "--widths", "250um,500um", "--out", tmp_path / "b", "--format", "csv")
    assert provenance(tmp_path / "a" / "sweep.csv") == provenance(tmp_path / "b" / "sweep.csv")
    assert provenance(tmp_path / "a" / "sweep.csv").startswith("# spectro-bench sweep ")


@pytest.mark.parametrize(
    "argv",
    [
        ["blur", "--aperture", "slit:w=450um"],
        ["sweep", "--family", "slit", "--widths", "225um,450um,900um"],
        ["mtf", "--family", "gaussian", "--widths", "250um,500um"],
        ["filter-psf", "--aperture", "slit:w=600um", "--mask-family", "slitmask", "--mask-width", "600um"],
    ],
)
def test_reruns_are_byte_identical(tmp_path, capsys, argv):
    for d in ("r1", "r2"):
        assert run(capsys, *argv, "--out", tmp_path / d)[0] == 0
    first = sorted(p.name for p in (tmp_path / "r1").iterdir())
    assert first == sorted(p.name for p in (tmp_path / "r2").iterdir())
    for name in first:
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes(), name
        if name.endswith(".csv"):
            assert provenance(tmp_path / "r1" / name).startswith(f"# spectro-bench {argv[0]} ")


def test_sweep_writes_fit(tmp_path, capsys):
    code, out, _ = run(capsys, "sweep", "--family", "gaussian", "--widths", "100um,500um,2mm", "--out", tmp_path)
    assert code == 0 and "r2=1.0000" in out
    header, rows = read_csv(tmp_path / "fit.csv")
    assert header == ["slope", "r_squared", "expected_slope", "slope_error"]
    assert float(rows[0][3]) < 1e-6


def test_propagate_agreement(tmp_path, capsys):
    code, out, _ = run(capsys, "propagate", "--aperture", "slit:w=450um", "--lambdas", "500nm,600nm",
                       "--out", tmp_path, "--format", "csv")
    assert code == 0
    header, rows = read_csv(tmp_path / "agreement.csv")
    assert header == ["kernel", "linf_rel_error"]
    assert len(rows) == 4 and all(float(e) <= 1e-3 for _, e in rows)
    assert read_csv(tmp_path / "field_P4_500nm.csv")[0] == ["x_m", "magnitude"]


def test_propagate_tolerance_breach_exits_3(tmp_path, capsys):
    code, _, err = run(capsys, "propagate", "--aperture", "slit:w=450um", "--tol", "1e-15", "--out", tmp_path, "--format", "csv")
    assert code == 3 and "oracle disagreement" in err


def test_filter_psf_header(tmp_path, capsys):
    code, _, _ = run(capsys, "filter-psf", "--aperture", "slit:w=600um", "--mask-family", "slitmask",
                     "--mask-width", "600um", "--offsets", "0nm,30nm", "--out", tmp_path)
    assert code == 0
    header, rows = read_csv(tmp_path / "filter_psf.csv")
    assert header == ["offset_m", "psf_std_m", "peak_intensity", "blocked"]
    assert rows[0][3] == "0" and rows[1][3] == "1"


def test_gen_cube_and_scene(tmp_path, capsys):
    code, out, _ = run(capsys, "gen-cube", "--kind", "two-laser", "--out", tmp_path)
    assert code == 0
    cube = out.strip()
    code, out, _ = run(capsys, "scene", "--cube", cube, "--aperture", "slit:w=150um",
                       "--mask", "blocker:center=532nm,w=300um", "--out", tmp_path)
    assert code == 0
    for name in ("image.pgm", "image.csv", "image.svg"):
        assert (tmp_path / name).exists()
    assert read_csv(tmp_path / "image.csv")[0] == ["row", "col", "intensity"]


def test_scene_with_filter_file(tmp_path, capsys):
    run(capsys, "gen-cube", "--kind", "bars", "--width", "40", "--height", "8", "--out", tmp_path)
    cube = tmp_path / "bars.hsicube"
    filt = tmp_path / "f.csv"
    lams = [450 + 10 * k for k in range(21)]
    filt.write_text("wavelength_m,transmission\n" + "".join(f"{l}e-9,0.5\n" for l in lams))
    code, out, _ = run(capsys, "scene", "--cube", cube, "--filter", filt, "--out", tmp_path, "--format", "csv")
    assert code == 0
    filt.write_text("wavelength_m,transmission\n500e-9,0.5\n")
    code, _, err = run(capsys, "scene", "--cube", cube, "--filter", filt, "--out", tmp_path)
    assert code == 2 and "filter wavelengths" in err


@pytest.mark.skipif(shutil.which("spectro-bench") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["spectro-bench", "blur", "--aperture", "gaussian:sigma=500parsec", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 2
    assert res.stderr.startswith("error: 2: ")
