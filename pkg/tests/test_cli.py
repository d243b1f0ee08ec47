import json
import subprocess
import sys

import numpy as np
import pytest

from chiralmeta.cli import main

PROBES_CSV = """x,y,z
3.5,0.5,0.5
0.5,3.5,0.5
0.5,0.5,-2.5
-2.0,1.5,2.0
"""


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    return lines[0], [line.split(",") for line in lines[1:]]


def test_cli_help_subprocess():
    out = subprocess.run([sys.executable, "-m", "chiralmeta.cli", "--help"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "eff-sweep" in out.stdout


def test_console_script_help():
    out = subprocess.run(["chiralmeta", "--help"], capture_output=True, text=True)
    assert out.returncode == 0


def test_preset_right_panel(tmp_path, capsys):
    rc = main(["eff-sweep", "--preset", "figure1-right", "--out", str(tmp_path)])
    assert rc == 0
    header, rows = read_csv(tmp_path / "eff_sweep.csv")
    assert header.startswith("eps_c,re_eps_eff")
    # achiral sweep: permeability stays at the background value everywhere
    mu_re = np.array([float(r[3]) for r in rows])
    mu_im = np.array([float(r[4]) for r in rows])
    assert np.abs(mu_re - 1.0).max() < 1e-10
    assert np.abs(mu_im).max() < 1e-10
    summary = json.loads((tmp_path / "eff_sweep_summary.json").read_text())
    assert abs(summary["resonance_abscissa"] - (-2.0)) < 1e-4
    assert summary["resonance_peak_magnitude"] > 1e2
    assert summary["double_negative_count"] == 0


def test_preset_left_panel(tmp_path, capsys):
    rc = main(["eff-sweep", "--preset", "figure1-left", "--out", str(tmp_path)])
    assert rc == 0
    summary = json.loads((tmp_path / "eff_sweep_summary.json").read_text())
    assert summary["double_negative_count"] > 0
    assert summary["double_negative_min"] < summary["double_negative_max"]
    assert summary["reference_abscissa"] == -2.94455
    assert "abscissa_deviation" in summary
    # the grid hits the permeability zero crossing at exactly one point
    assert len(summary["failed_points"]) <= 1
    header, rows = read_csv(tmp_path / "eff_sweep.csv")
    assert any(r[5] == "true" for r in rows)
    assert all(r[6] == "true" for r in rows)  # k*beta > 1 flagged on every row


def test_rerun_byte_identical_sweep(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["eff-sweep", "--preset", "figure1-right", "--out", str(a)]) == 0
    assert main(["eff-sweep", "--preset", "figure1-right", "--out", str(b)]) == 0
    assert (a / "eff_sweep.csv").read_bytes() == (b / "eff_sweep.csv").read_bytes()
    assert (a / "eff_sweep_summary.json").read_bytes() == \
        (b / "eff_sweep_summary.json").read_bytes()


def test_rerun_byte_identical_spectrum(tmp_path, capsys):
    cfg = write(tmp_path / "s.cfg", "subdivisions = 2\nmode_count = 8\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["np-spectrum", "--config", cfg, "--out", str(a)]) == 0
    assert main(["np-spectrum", "--config", cfg, "--out", str(b)]) == 0
    assert (a / "np_spectrum.json").read_bytes() == (b / "np_spectrum.json").read_bytes()


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = write(tmp_path / "bad.cfg", "bogus_key = 1\n")
    rc = main(["eff-sweep", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 2
    assert "unknown config key" in capsys.readouterr().err


def test_bad_float_rejected(tmp_path, capsys):
    cfg = write(tmp_path / "bad.cfg", "eps_m = abc\n")
    rc = main(["eff-sweep", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 2
    assert "not a number" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    rc = main(["eff-sweep", "--config", str(tmp_path / "nope.cfg"), "--out", str(tmp_path)])
    assert rc == 2
    assert "not found" in capsys.readouterr().err


def test_unknown_preset(tmp_path, capsys):
    rc = main(["eff-sweep", "--preset", "figure9", "--out", str(tmp_path)])
    assert rc == 2
    assert "unknown preset" in capsys.readouterr().err


def test_kbeta_refusal(tmp_path, capsys):
    cfg = write(tmp_path / "c.cfg", "beta_m = 1.2\n")
    rc = main(["eff-closed-form", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "config error" in err and "allow_kbeta_ge_1" in err
    # the override flag lets the same config through
    rc = main(["eff-closed-form", "--config", cfg, "--allow-kbeta-ge-1",
               "--out", str(tmp_path)])
    assert rc == 0


def test_missing_mesh_rejected(tmp_path, capsys):
    cfg = write(tmp_path / "c.cfg", f"mesh_source = {tmp_path / 'nope.off'}\n")
    rc = main(["np-spectrum", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 2
    assert "cannot read mesh" in capsys.readouterr().err


def test_config_comments_and_whitespace(tmp_path, capsys):
    cfg = write(tmp_path / "c.cfg",
                "# a comment line\n"
                "\n"
                "  beta_m   =  0.6   # trailing comment\n"
                "s_values = 0,0.9\n")
    rc = main(["eff-closed-form", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 0
    summary = json.loads((tmp_path / "eff_closed_form_summary.json").read_text())
    assert summary["k_beta"] == pytest.approx(0.6)


def test_resonances_achiral(tmp_path, capsys):
    cfg = write(tmp_path / "c.cfg",
                "beta_m = 0\nvolume_scale = 0.5\ndrude_omega_p = 1\n")
    rc = main(["resonances", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 0
    report = json.loads((tmp_path / "resonances.json").read_text())
    assert report["background"]["out_of_assumption"] is False
    lead = report["modes"][0]
    assert lead["lambda_n"] == pytest.approx(1 / 6)
    assert lead["eps_star"]["re"] == pytest.approx(-2.0)
    assert lead["direct_root"]["re"] == pytest.approx(-2.0, abs=1e-9)
    assert lead["drude_omega"]["re"] == pytest.approx(0.5773502691896257, rel=1e-12)


def test_eff_closed_form_values(tmp_path, capsys):
    cfg = write(tmp_path / "c.cfg", "beta_m = 0.6\ns_values = 0,0.5,0.9\n")
    rc = main(["eff-closed-form", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 0
    header, rows = read_csv(tmp_path / "eff_closed_form.csv")
    assert header == "s,re_eps_eff,im_eps_eff,re_mu_eff,im_mu_eff,re_beta_eff,im_beta_eff"
    s0_row = [float(v) for v in rows[0]]
    assert s0_row[0] == 0.0
    assert s0_row[1:] == pytest.approx([1.0, 0.0, 1.0, 0.0, 0.6, 0.0], rel=1e-12, abs=1e-15)
    summary = json.loads((tmp_path / "eff_closed_form_summary.json").read_text())
    assert summary["closed_form_vs_inversion_max_dev"] <= 1e-10
    assert 0.0 < summary["double_negative_onset_s0"] < 1.0
    assert summary["double_negative_onset_s0"] == pytest.approx(0.8001, abs=5e-3)


def test_dipole_field_matches_single_site_foldy(tmp_path, capsys):
    # one lattice site with the same scaling is the dipole model up to the
    # cube-root/cube round trip of the size parameter (~1 ulp), so the
    # CSVs agree numerically though not byte-for-byte
    probes = write(tmp_path / "probes.csv", PROBES_CSV)
    base = ("beta_m = 0.2\nvolume_scale = 0.5\nn_per_axis = 1\n"
            "eps_c_re = -3\nfar_field_factor = 2\n"
            f"probes_file = {probes}\n")
    cfg_d = write(tmp_path / "d.cfg", base)
    cfg_f = write(tmp_path / "f.cfg", base + "n_list = 1\neta = 0\ncompare = false\n")
    assert main(["dipole-field", "--config", cfg_d, "--out", str(tmp_path)]) == 0
    assert main(["foldy", "--config", cfg_f, "--out", str(tmp_path)]) == 0
    hd, rd = read_csv(tmp_path / "dipole_field.csv")
    hf, rf = read_csv(tmp_path / "foldy_field.csv")
    assert hd == hf
    assert len(rd) == len(rf) == 4
    a = np.array([[float(v) for v in row] for row in rd])
    b = np.array([[float(v) for v in row] for row in rf])
    assert np.abs(a - b).max() <= 1e-13 * np.abs(a).max()


def test_foldy_compare_errors_decrease(tmp_path, capsys):
    cfg = write(tmp_path / "c.cfg",
                "beta_m = 0.4\nvolume_scale = 0.5\neps_c_re = -3\n"
                "n_list = 2,3,4\ngrid_m = 6\neta = 0.1\n")
    rc = main(["foldy", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 0
    header, rows = read_csv(tmp_path / "foldy_errors.csv")
    assert header == "N,rel_l2_error,eta,eps_c_re,eps_c_im"
    errs = [float(r[1]) for r in rows]
    assert [int(r[0]) for r in rows] == [2, 3, 4]
    assert errs[0] > errs[1] > errs[2]


def test_check_assumptions_report(tmp_path, capsys):
    cfg = write(tmp_path / "c.cfg",
                "beta_m = 0.4\nvolume_scale = 0.5\nn_list = 2,3\neta = 1.0\n")
    rc = main(["check-assumptions", "--config", cfg, "--out", str(tmp_path)])
    assert rc == 0
    report = json.loads((tmp_path / "check_assumptions.json").read_text())
    assert isinstance(report["distribution"]["monotone_decreasing"], bool)
    rows = report["uniform_invertibility"]["rows"]
    assert [r["N"] for r in rows] == [2, 3]
    assert all(r["scaled_by_n6a"] > 0 for r in rows)
    assert report["uniform_invertibility"]["scaled_max_over_min"] >= 1.0
