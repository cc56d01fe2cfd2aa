import json

import numpy as np
import pytest

from tmsvlab import io as tio
from tmsvlab.cli import EX_NONCONVERGED, EX_OK, EX_RUNTIME, EX_USAGE, main
from tmsvlab.fock import FockSpace, basis_state
from tmsvlab.homodyne import QuadratureSample, ShotRecord
from tmsvlab.states import tmsv


# ------------------------------------------------------------------ formats

def test_samples_roundtrip(tmp_path):
    samples = [QuadratureSample(0.1, -0.25, 1.5), QuadratureSample(2.0, 0.0, -3.25)]
    path = tmp_path / "s.csv"
    tio.write_samples(path, samples)
    assert path.read_text().splitlines()[0] == "theta_rad,x_a,x_b"
    back = tio.read_samples(path)
    assert back == samples


def test_samples_bad_header(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("theta,x_a,x_b\n0,0,0\n")
    with pytest.raises(ValueError, match="header"):
        tio.read_samples(path)


def test_samples_bad_row_names_line(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("theta_rad,x_a,x_b\n0.0,0.0,0.0\n0.1,oops,0.0\n")
    with pytest.raises(ValueError, match="line 3"):
        tio.read_samples(path)


def test_samples_empty_file(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("theta_rad,x_a,x_b\n")
    with pytest.raises(tio.EmptyDataError):
        tio.read_samples(path)


def test_shots_roundtrip(tmp_path):
    shots = [ShotRecord(10, 12, 100), ShotRecord(0, 0, 50)]
    path = tmp_path / "shots.csv"
    tio.write_shots(path, shots)
    assert path.read_text().splitlines()[0] == "n_a,n_b,n_tot"
    assert tio.read_shots(path) == shots


def test_density_matrix_roundtrip(tmp_path):
    rho = tmsv(0.5, FockSpace(5)).projector()
    path = tmp_path / "rho.json"
    tio.write_density_matrix(path, rho)
    back = tio.read_density_matrix(path)
    assert back.space == rho.space
    assert np.allclose(back.entries, rho.entries, atol=1e-15)


def test_density_matrix_rejects_wrong_ordering(tmp_path):
    rho = tmsv(0.5, FockSpace(4)).projector()
    d = tio.density_matrix_to_dict(rho)
    d["ordering"] = "column-major-(nB,nA)"
    with pytest.raises(ValueError, match="ordering"):
        tio.density_matrix_from_dict(d)


def test_density_matrix_rejects_bad_trace():
    rho = tmsv(0.5, FockSpace(4)).projector()
    d = tio.density_matrix_to_dict(rho)
    d["re"] = (0.9 * np.asarray(d["re"])).tolist()
    d["im"] = (0.9 * np.asarray(d["im"])).tolist()
    with pytest.raises(ValueError, match="unit-trace"):
        tio.density_matrix_from_dict(d)


def test_density_matrix_rejects_non_hermitian():
    rho = tmsv(0.5, FockSpace(4)).projector()
    d = tio.density_matrix_to_dict(rho)
    d["re"][0][1] += 0.5
    with pytest.raises(ValueError, match="Hermiticity"):
        tio.density_matrix_from_dict(d)


# ---------------------------------------------------------------------- CLI

def run_cli(*argv):
    return main(list(argv))


def test_cli_simulate_inline_vacuum(tmp_path):
    out = tmp_path / "run"
    code = run_cli("simulate", "--xi", "0", "--thetas", "0", "--p", "10",
                   "--seed", "3", "--out", str(out))
    assert code == EX_OK
    samples = tio.read_samples(out / "samples.csv")
    assert len(samples) == 10
    shots = tio.read_shots(out / "shots.csv")
    assert len(shots) == 10
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 3


def test_cli_simulate_preset_row_count(tmp_path):
    out = tmp_path / "run"
    code = run_cli("simulate", "--preset", "fig_s3", "--seed", "7", "--out", str(out))
    assert code == EX_OK
    samples = tio.read_samples(out / "samples.csv")
    assert len(samples) == 29 * 100


def test_cli_simulate_requires_state():
    assert run_cli("simulate") == EX_USAGE


def test_cli_simulate_rejects_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"bogus": 1}')
    assert run_cli("simulate", "--xi", "0", "--config", str(cfg)) == EX_USAGE


def test_cli_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"xi": 0.0, "thetas": "0", "p_per_theta": 5}))
    out = tmp_path / "o"
    code = run_cli("simulate", "--config", str(cfg), "--p", "8", "--out", str(out))
    assert code == EX_OK
    assert len(tio.read_samples(out / "samples.csv")) == 8


def test_cli_tomo_vacuum(tmp_path):
    out = tmp_path / "sim"
    run_cli("simulate", "--xi", "0", "--thetas", "0,0.52,1.04,1.57,2.09,2.62",
            "--p", "150", "--n-cut", "5", "--seed", "0", "--out", str(out))
    tomo_out = tmp_path / "tomo"
    code = run_cli("tomo", str(out / "samples.csv"), "--n-cut", "5",
                   "--max-iter", "3000", "--out", str(tomo_out))
    assert code == EX_OK
    rho = tio.read_density_matrix(tomo_out / "rho_ml.json")
    sp = FockSpace(5)
    assert rho.entries[sp.index(0, 0), sp.index(0, 0)].real >= 0.99
    diag = json.loads((tomo_out / "diagnostics.json").read_text())
    assert diag["converged"] is True


def test_cli_tomo_nonconverged_exit_code(tmp_path):
    out = tmp_path / "sim"
    run_cli("simulate", "--xi", "0", "--thetas", "0,1.0", "--p", "30",
            "--n-cut", "4", "--seed", "1", "--out", str(out))
    tomo_out = tmp_path / "tomo"
    code = run_cli("tomo", str(out / "samples.csv"), "--n-cut", "4",
                   "--max-iter", "1", "--tol", "1e-14", "--out", str(tomo_out))
    assert code == EX_NONCONVERGED
    # diagnostics are still written
    assert (tomo_out / "rho_ml.json").exists()
    assert (tomo_out / "diagnostics.json").exists()


def test_cli_tomo_empty_samples_is_usage_error(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("theta_rad,x_a,x_b\n")
    assert run_cli("tomo", str(empty)) == EX_USAGE


def test_cli_tomo_malformed_row_is_runtime_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("theta_rad,x_a,x_b\n0.0,1.0\n")
    assert run_cli("tomo", str(bad)) == EX_RUNTIME


def test_cli_criteria_on_tmsv_file(tmp_path):
    from tmsvlab.criteria import THETA_P_LIKE, THETA_X_LIKE
    from tmsvlab.homodyne import sample_quadratures
    from tmsvlab.states import NOISELESS, tmsv_rotated
    rho = tmsv_rotated(0.63, 0.0, FockSpace(10)).projector()
    samples = (sample_quadratures(rho, [THETA_X_LIKE], 40000, NOISELESS, seed=0)
               + sample_quadratures(rho, [THETA_P_LIKE], 40000, NOISELESS, seed=1))
    path = tmp_path / "samples.csv"
    tio.write_samples(path, samples)
    out = tmp_path / "crit"
    code = run_cli("criteria", str(path), "--bootstrap-b", "120", "--out", str(out))
    assert code == EX_OK
    report = json.loads((out / "epr_report.json").read_text())
    assert report["epr_product"] == pytest.approx(np.exp(-4 * 0.63), abs=0.006)
    assert report["epr_satisfied"] is True
    assert report["errors"]["se_epr_product"] > 0


def test_cli_criteria_missing_conjugate_pair(tmp_path):
    path = tmp_path / "samples.csv"
    tio.write_samples(path, [QuadratureSample(0.0, 0.1 * k, 0.0) for k in range(10)])
    assert run_cli("criteria", str(path)) == EX_RUNTIME


def test_cli_metrics_on_tmsv_file(tmp_path):
    rho = tmsv(0.63, FockSpace(10)).projector()
    path = tmp_path / "rho.json"
    tio.write_density_matrix(path, rho)
    out = tmp_path / "met"
    code = run_cli("metrics", str(path), "--target-xi", "0.63", "--out", str(out))
    assert code == EX_OK
    report = json.loads((out / "metrics.json").read_text())
    assert report["log_negativity"] == pytest.approx(1.818, abs=0.01)
    assert report["qfi"] == pytest.approx(2.627, abs=0.01)
    assert report["fidelity_to_target"] == pytest.approx(1.0, abs=1e-9)


def test_cli_metrics_vacuum_zero_metrics(tmp_path):
    rho = basis_state(FockSpace(5), 0, 0).projector()
    path = tmp_path / "rho.json"
    tio.write_density_matrix(path, rho)
    out = tmp_path / "met"
    assert run_cli("metrics", str(path), "--out", str(out)) == EX_OK
    report = json.loads((out / "metrics.json").read_text())
    assert report["log_negativity"] == pytest.approx(0.0, abs=1e-9)
    assert report["qfi"] == pytest.approx(0.0, abs=1e-9)
    assert report["xi_fit"] == pytest.approx(0.0, abs=1e-3)


def test_cli_metrics_rejects_bad_trace(tmp_path):
    rho = tmsv(0.4, FockSpace(4)).projector()
    d = tio.density_matrix_to_dict(rho)
    d["re"] = (0.9 * np.asarray(d["re"])).tolist()
    d["im"] = (0.9 * np.asarray(d["im"])).tolist()
    path = tmp_path / "rho.json"
    path.write_text(json.dumps(d))
    assert run_cli("metrics", str(path)) == EX_RUNTIME


def test_cli_reproduce_unknown_id(tmp_path):
    assert run_cli("reproduce", "fig_unknown", "--out", str(tmp_path)) == EX_USAGE


def test_cli_reproduce_smoke_fig3(tmp_path):
    code = run_cli("reproduce", "fig3", "--scale", "smoke", "--seed", "1",
                   "--out", str(tmp_path))
    assert code == EX_OK
    table = (tmp_path / "fig3-seed1" / "fig3_sweep.csv").read_text().splitlines()
    assert table[0].startswith("t_s,xi,")
    assert len(table) == 4


def test_cli_reproduce_smoke_fig_s2_has_fidelity_column(tmp_path):
    code = run_cli("reproduce", "fig_s2", "--scale", "smoke", "--seed", "1",
                   "--out", str(tmp_path))
    assert code == EX_OK
    lines = (tmp_path / "fig_s2-seed1" / "fig_s2_table.csv").read_text().splitlines()
    assert lines[0] == "p,dx,seed,fidelity,fidelity_se"
    assert len(lines) == 3


def test_cli_byte_identical_reruns(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = run_cli("simulate", "--preset", "fig3", "--seed", "11",
                       "--workers", "1", "--out", str(out))
        assert code == EX_OK
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outs[0] == outs[1]
