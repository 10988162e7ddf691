import json
import math
import os
import shutil
import subprocess

import numpy as np
import pytest

import stringbreak as sb


def cli():
    path = os.environ.get("STRINGBREAK_CLI") or shutil.which("stringbreak")
    if not path:
        pytest.skip("stringbreak executable not found")
    return path


def test_kernel_and_fields():
    k = sb.CouplingKernel.exponential(1.0)
    assert k(1) == 1.0
    assert math.isclose(k(3), math.exp(-2.0))
    chain = sb.ChainSpec(5, k)
    h_eff = sb.effective_field(chain)
    assert h_eff.shape == (5,)
    assert np.allclose(h_eff, h_eff[::-1])
    assert np.all(sb.vacuum_field(chain) < 0)


def test_breaking_field_and_gap():
    chain = sb.ChainSpec(5, sb.CouplingKernel.exponential(1.0))
    hc = sb.g0_breaking_field(chain)
    assert abs(hc - 0.262738) < 1e-6
    assert abs(sb.g0_energy_gap(chain, hc)) < 1e-9
    fields = sb.bubble_crossing_fields(chain)
    assert abs(fields[-1] - hc) < 1e-9


def test_crossing_and_landau_zener():
    chain = sb.ChainSpec(5, sb.CouplingKernel.exponential(1.0))
    fit = sb.locate_avoided_crossing(chain, 1.2, 0.0, 0.5)
    assert abs(fit["control_c"] - 0.252) < 0.005
    assert 0.80 < sb.landau_zener_probability(fit["gap_c"], fit["slope"], 5.0) < 0.85


def test_spectrum_and_ramp():
    chain = sb.ChainSpec(4, sb.CouplingKernel.exponential(1.0))
    e, m = sb.lowest_spectrum(chain, 0.0, 1.0, 3)
    assert np.all(np.diff(e) >= 0)
    assert m.shape == (3,)
    r = sb.propagate_ramp(chain, 1.0, 3.0, 0.6, samples=11, levels=2)
    assert r["populations"].shape == (11, 2)
    assert np.allclose(r["bubbles"].sum(axis=1), 1.0)
    assert r["max_norm_error"] < 1e-10


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        sb.CouplingKernel.exponential(0.0)
    with pytest.raises(ValueError):
        sb.run_command("xi=0\n", command="g0")
    chain = sb.ChainSpec(5, sb.CouplingKernel.exponential(1.0))
    with pytest.raises(sb.NumericalError):
        sb.locate_avoided_crossing(chain, 1.2, 0.3, 0.5)


def test_run_command_and_round_trip(tmp_path):
    res = sb.run_command("alpha_list=2.2,2.6\n", {"output_dir": str(tmp_path)}, "lrphase")
    assert abs(res["alpha_min"] - 1.72865) < 1e-4
    assert (tmp_path / "lrphase.csv").read_text().splitlines()[0] == "alpha,ell_c,beyond_scan"
    text = sb.serialize_config("tau=0.1\n", {}, "ramp")
    assert sb.serialize_config(text) == text


def test_cli_help_lists_schema():
    out = subprocess.run([cli(), "ramp", "--help"], capture_output=True, text=True, check=True).stdout
    assert "ramp.csv" in out and "mz_site_1" in out and "bubbles.csv" in out


def test_cli_run_and_exit_codes(tmp_path):
    exe = cli()
    out_dir = tmp_path / "c"
    done = subprocess.run([exe, "crossing", "--ell", "5", "--g", "1.2", "--output_dir", str(out_dir)],
                          capture_output=True, text=True)
    assert done.returncode == 0, done.stderr
    meta = json.loads((out_dir / "metadata.json").read_text())
    assert abs(meta["results"]["h_c"] - 0.252) < 0.005
    assert subprocess.run([exe, "ramp", "--xi", "0"], capture_output=True).returncode == 1
    assert subprocess.run([exe, "ramp", "--nonsense", "1"], capture_output=True).returncode == 1
    edge = subprocess.run([exe, "crossing", "--h_min", "0.3", "--h_max", "0.5",
                           "--output_dir", str(tmp_path / "e")], capture_output=True)
    assert edge.returncode == 2


def test_cli_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("command=ramp\nell=3\ntau=100\nh_final=0.5\nsamples=5\nlevels=2\n")
    out_dir = tmp_path / "r"
    subprocess.run([cli(), "ramp", "--config", str(cfg), "--tau", "2", "--output_dir", str(out_dir)],
                   check=True, capture_output=True)
    meta = json.loads((out_dir / "metadata.json").read_text())
    assert meta["config"]["tau"] == 2.0
    header = (out_dir / "ramp.csv").read_text().splitlines()[0].split(",")
    assert header[:6] == ["t", "control", "m_z", "mz_site_1", "mz_site_2", "mz_site_3"]
