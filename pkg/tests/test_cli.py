"""End-to-end command-line workflows against temp files."""
from __future__ import annotations

import json

import numpy as np
import pytest

from hbp_spmv import TripletMatrix, load_hbp, save_mtx
from hbp_spmv.cli import main

SMALL = ["--col-width", "32", "--row-height", "16", "--warp-size", "4"]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def mtx(tmp_path, capsys):
    path = tmp_path / "m.mtx"
    code, _, _ = run(["generate", str(path), "--rows", "96", "--cols", "80",
                      "--pattern", "powerlaw", "--mean", "5", "--seed", "3"],
                     capsys)
    assert code == 0
    return path


class TestGenerate:
    def test_writes_matrix(self, tmp_path, capsys):
        path = tmp_path / "g.mtx"
        code, out, _ = run(["generate", str(path), "--rows", "10",
                            "--cols", "12", "--mean", "3"], capsys)
        assert code == 0
        assert "10x12" in out
        assert path.exists()

    def test_bad_spec_is_io_error(self, tmp_path, capsys):
        code, _, err = run(["generate", str(tmp_path / "g.mtx"), "--rows", "10",
                            "--cols", "12", "--mean", "99"], capsys)
        assert code == 2
        assert "error" in err


class TestConvert:
    def test_round_trip(self, mtx, tmp_path, capsys):
        out_path = tmp_path / "m.hbp"
        code, out, _ = run(["convert", str(mtx), str(out_path)] + SMALL, capsys)
        assert code == 0
        assert "nnz" in out and out_path.exists()
        hbp = load_hbp(out_path)
        assert (hbp.rows, hbp.cols) == (96, 80)
        assert hbp.config.col_width == 32

    def test_missing_input(self, tmp_path, capsys):
        code, _, err = run(["convert", str(tmp_path / "nope.mtx"),
                            str(tmp_path / "o.hbp")], capsys)
        assert code == 2

    def test_malformed_mtx(self, tmp_path, capsys):
        bad = tmp_path / "bad.mtx"
        bad.write_text("this is not a matrix\n")
        code, _, err = run(["convert", str(bad), str(tmp_path / "o.hbp")],
                           capsys)
        assert code == 2
        assert "error" in err


class TestVerify:
    def test_passes_on_clean_matrix(self, mtx, capsys):
        code, out, _ = run(["verify", str(mtx), "--workers", "2"] + SMALL,
                           capsys)
        assert code == 0
        for kernel in ("csr", "2d", "hbp"):
            assert f"{kernel}: max relative error" in out
        assert "FAIL" not in out

    def test_impossible_tolerance_fails(self, mtx, capsys):
        code, out, _ = run(["verify", str(mtx), "--tolerance", "1e-30"]
                           + SMALL, capsys)
        assert code == 3
        assert "FAIL" in out

    def test_symmetric_input_is_expanded(self, tmp_path, capsys):
        path = tmp_path / "s.mtx"
        path.write_text("%%MatrixMarket matrix coordinate real symmetric\n"
                        "3 3 3\n1 1 2.0\n2 1 -1.0\n3 3 4.0\n")
        code, out, _ = run(["verify", str(path)] + SMALL, capsys)
        assert code == 0

    def test_prebuilt_hbp_input(self, mtx, tmp_path, capsys):
        hbp_path = tmp_path / "m.hbp"
        assert run(["convert", str(mtx), str(hbp_path)] + SMALL, capsys)[0] == 0
        code, out, _ = run(["verify", str(hbp_path)], capsys)
        assert code == 0
        for kernel in ("csr", "2d", "hbp"):
            assert f"{kernel}: max relative error" in out

    def test_corrupted_hbp_is_a_structural_error(self, mtx, tmp_path, capsys):
        hbp_path = tmp_path / "m.hbp"
        assert run(["convert", str(mtx), str(hbp_path)] + SMALL, capsys)[0] == 0
        hbp_path.write_bytes(hbp_path.read_bytes()[:40])
        code, _, err = run(["verify", str(hbp_path)], capsys)
        assert code == 2
        assert "truncated" in err


class TestBench:
    def test_json_report(self, mtx, tmp_path, capsys):
        report_path = tmp_path / "r.json"
        code, out, _ = run(["bench", str(mtx), "--iters", "3", "--warmup", "1",
                            "--workers", "2", "--json", str(report_path)]
                           + SMALL, capsys)
        assert code == 0
        report = json.loads(report_path.read_text())
        assert set(report["kernels"]) == {"csr", "2d", "hbp"}
        for entry in report["kernels"].values():
            assert entry["gflops"] == pytest.approx(
                2.0 * report["nnz"] / entry["time_s"] / 1e9, rel=1e-12)
        assert "spmv_s" in report["kernels"]["hbp"]
        assert "combine_s" in report["kernels"]["hbp"]
        assert report["preprocessing"]["hash_reorder_s"] > 0

    def test_kernel_subset(self, mtx, capsys):
        code, out, _ = run(["bench", str(mtx), "--kernels", "csr",
                            "--iters", "2", "--warmup", "0"] + SMALL, capsys)
        assert code == 0
        assert "csr:" in out and "hbp:" not in out

    def test_unknown_kernel(self, mtx, capsys):
        code, _, err = run(["bench", str(mtx), "--kernels", "gpu"] + SMALL,
                           capsys)
        assert code == 2

    def test_prebuilt_hbp_input(self, mtx, tmp_path, capsys):
        hbp_path = tmp_path / "m.hbp"
        assert run(["convert", str(mtx), str(hbp_path)] + SMALL, capsys)[0] == 0
        code, out, _ = run(["bench", str(hbp_path), "--kernels", "hbp",
                            "--iters", "2", "--warmup", "0"], capsys)
        assert code == 0
        assert "hbp:" in out


class TestAnalyze:
    def test_prints_reductions(self, mtx, capsys):
        code, out, _ = run(["analyze", str(mtx)] + SMALL, capsys)
        assert code == 0
        for name in ("none", "hash", "sort"):
            assert f"{name}: mean group std_dev" in out
        assert "reduction hash vs none" in out

    def test_csv_export(self, mtx, tmp_path, capsys):
        csv_path = tmp_path / "stats.csv"
        code, _, _ = run(["analyze", str(mtx), "--csv", str(csv_path),
                          "--reorder", "sort"] + SMALL, capsys)
        assert code == 0
        lines = csv_path.read_text().strip().split("\n")
        assert lines[0].startswith("block_br,block_bc,group,ordering")
        assert all(",sort," in line for line in lines[1:])


class TestUsage:
    def test_no_command(self, capsys):
        assert run([], capsys)[0] == 1

    def test_unknown_command(self, capsys):
        assert run(["explode"], capsys)[0] == 1

    def test_missing_required_flag(self, tmp_path, capsys):
        code, _, _ = run(["generate", str(tmp_path / "g.mtx"), "--rows", "4"],
                         capsys)
        assert code == 1

    def test_bad_config_flags(self, mtx, capsys):
        # row height not a multiple of warp size
        code, _, err = run(["verify", str(mtx), "--row-height", "10",
                            "--warp-size", "4"], capsys)
        assert code == 2


def test_empty_matrix_flows(tmp_path, capsys):
    path = tmp_path / "z.mtx"
    save_mtx(TripletMatrix(16, 16, np.array([], dtype=np.int64),
                           np.array([], dtype=np.int64), np.array([])), path)
    code, out, _ = run(["verify", str(path)] + SMALL, capsys)
    assert code == 0
