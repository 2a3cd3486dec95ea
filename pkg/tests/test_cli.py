import csv

import numpy as np
import pytest

from oslalm.cli import SIM_FILES, main
from oslalm.fileio import read_raw, read_sidecar

SMALL = [
    "--set", "grid.nx=16", "--set", "grid.ny=16", "--set", "grid.pixel_size=1.0",
    "--set", "geometry.n_views=48", "--set", "geometry.n_bins=24", "--set", "geometry.bin_spacing=1.0",
    "--set", "regularizer.beta=50", "--set", "regularizer.delta=0.01", "--set", "reference.iters=300",
]


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def run_dir(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", *SMALL, "--out", str(out)]) == 0
    return out


def recon(out, *args):
    return main(["reconstruct", *args, *SMALL, "--out", str(out), "--no-timing"])


def test_simulate_writes_documented_files(run_dir, tmp_path):
    assert sorted(p.name for p in run_dir.iterdir()) == sorted(SIM_FILES)
    meta = read_sidecar(run_dir / "scan.txt")
    assert (meta["nx"], meta["n_views"], meta["I0"]) == (16, 48, 1e5)
    again = tmp_path / "again"
    main(["simulate", *SMALL, "--out", str(again)])
    assert (again / "sinogram.f32").read_bytes() == (run_dir / "sinogram.f32").read_bytes()


def test_weight_dynamic_range_grows_with_I0(tmp_path):
    # dense enough that the one-count floor clips the weights at low dose
    ratio = []
    for I0 in ("1e3", "1e6"):
        out = tmp_path / I0
        main(["simulate", *SMALL, "--set", "phantom.water=0.6", "--set", f"noise.I0={I0}", "--out", str(out)])
        w = read_raw(out / "weights.f32")
        ratio.append(w.max() / w.min())
    assert ratio[1] > ratio[0]


def test_reconstruct_outputs_and_determinism(run_dir):
    assert recon(run_dir, "os-lalm", "--M", "24", "--continuation", "--epochs", "3", "--name", "a", "--pgm") == 0
    assert recon(run_dir, "os-lalm", "--M", "24", "--continuation", "--epochs", "3", "--name", "b") == 0
    assert (run_dir / "a.csv").read_text() == (run_dir / "b.csv").read_text()
    log = rows(run_dir / "a.csv")
    assert float(log[0]["rho"]) == 1.0 and len(log) == 1 + 3 * 24
    for suffix in (".f32", ".txt", ".pgm"):
        assert (run_dir / f"a{suffix}").exists()
    assert (run_dir / "reference.f32").exists()
    meta = read_sidecar(run_dir / "a.txt")
    assert meta["algorithm"] == "OS-LALM-24-c-1" and len(meta["reference_sha256"]) == 64


def test_ista_matches_one_subset_lalm(run_dir):
    recon(run_dir, "ista", "--epochs", "10")
    recon(run_dir, "os-lalm", "--M", "1", "--rho", "1", "--epochs", "10")
    a = [r["rmsd"] for r in rows(run_dir / "ISTA.csv")]
    b = [r["rmsd"] for r in rows(run_dir / "OS-LALM-1-1-1.csv")]
    assert a == b


def test_zero_epochs_has_only_initial_row(run_dir):
    recon(run_dir, "os-sqs", "--M", "4", "--epochs", "0")
    assert len(rows(run_dir / "OS-SQS-4.csv")) == 1


def test_compare(run_dir, capsys):
    recon(run_dir, "os-sqs", "--M", "4", "--epochs", "4")
    recon(run_dir, "os-sqs", "--M", "4", "--epochs", "4", "--name", "copy")
    assert main(["compare", "OS-SQS-4", "copy", *SMALL, "--out", str(run_dir)]) == 0
    merged = rows(run_dir / "compare.csv")
    assert len(merged) == 5 and all(r["OS-SQS-4"] == r["copy"] for r in merged)
    assert main(["compare", "nope", "--out", str(run_dir)]) == 4
    assert "nope.csv" in capsys.readouterr().err


def test_compare_rejects_mismatched_references(run_dir, capsys):
    recon(run_dir, "os-sqs", "--M", "4", "--epochs", "1")
    (run_dir / "reference.f32").unlink()
    # the later --set wins, so the override follows SMALL
    main(["reconstruct", "os-sqs", "--M", "4", "--epochs", "1", *SMALL, "--set", "reference.iters=5",
          "--name", "other", "--out", str(run_dir)])
    assert main(["compare", "OS-SQS-4", "other", "--out", str(run_dir)]) == 4
    assert "different references" in capsys.readouterr().err


def test_errors_have_categories(run_dir, tmp_path, capsys):
    assert recon(run_dir, "sart") == 3
    assert recon(tmp_path / "empty", "os-sqs") == 4
    assert main(["simulate", "--set", "noise.bogus=1", "--out", str(tmp_path / "x")]) == 3
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml")]) == 6
    (run_dir / "weights.f32").write_bytes(b"\0" * 8)
    assert recon(run_dir, "os-sqs") == 4
    err = capsys.readouterr().err.strip().splitlines()
    assert [e.split("]")[0] for e in err] == ["error[config", "error[input", "error[config", "error[io", "error[input"]


def test_analyze_damping(capsys):
    assert main(["analyze", "damping", "--lambda-ratio", "0.5", "--rho", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    row = dict(zip(out[0].split(","), out[1].split(",")))
    assert row["regime"] == "critical" and float(row["rate"]) == pytest.approx(0.5)


def test_analyze_gap(tmp_path):
    dest = tmp_path / "gap.csv"
    assert main(["analyze", "gap", "--size", "8", "--iters", "50", "--output", str(dest)]) == 0
    table = rows(dest)
    assert len(table) == 50 and all(r["within"] == "1" for r in table)


def test_analyze_restart(run_dir, tmp_path, capsys):
    assert main(["analyze", "restart"]) == 4
    recon(run_dir, "os-sqs", "--M", "4", "--epochs", "2")
    assert main(["analyze", "restart", "--log", str(run_dir / "OS-SQS-4.csv"), "--mu", "1", "--L", "2"]) == 4
    assert "not a continuation log" in capsys.readouterr().err
    dest = tmp_path / "r.csv"
    assert main(["analyze", "restart", "--mu-ratio", "0.05", "--n", "10", "--iters", "300", "--output", str(dest)]) == 0
    assert float(rows(dest)[0]["predicted"]) == pytest.approx(np.pi / 2 * np.sqrt(20))


def test_analyze_majorization(tmp_path):
    dest = tmp_path / "m.csv"
    assert main(["analyze", "majorization", *SMALL, "--samples", "100", "--output", str(dest)]) == 0
    assert [r["passed"] for r in rows(dest)] == ["1", "1"]


@pytest.mark.slow
def test_continuation_beats_os_sqs_on_test_problem(tmp_path):
    out = tmp_path / "std"
    main(["simulate", "--out", str(out)])
    for args in (["os-lalm", "--continuation"], ["os-sqs"]):
        main(["reconstruct", *args, "--M", "8", "--epochs", "30", "--out", str(out), "--no-timing"])
    main(["compare", "OS-LALM-8-c-1", "OS-SQS-8", "--out", str(out)])
    merged = rows(out / "compare.csv")
    assert all(float(r["OS-LALM-8-c-1"]) <= float(r["OS-SQS-8"]) for r in merged[10:])
