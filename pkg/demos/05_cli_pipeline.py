"""The full command-line flow: generate, convert, verify, analyze, bench.

Everything runs in a temporary directory through the same entry point the
`hbp` console script uses.

Run: python demos/05_cli_pipeline.py
"""
import tempfile
from pathlib import Path

from hbp_spmv.cli import main

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    mtx = tmp / "demo.mtx"
    hbp = tmp / "demo.hbp"
    report = tmp / "bench.json"
    csv = tmp / "groups.csv"
    small = ["--col-width", "256", "--row-height", "64", "--warp-size", "8"]

    steps = [
        ["generate", str(mtx), "--rows", "4096", "--cols", "4096",
         "--pattern", "powerlaw", "--mean", "8", "--seed", "42"],
        ["convert", str(mtx), str(hbp)] + small,
        ["verify", str(mtx), "--workers", "4"] + small,
        ["analyze", str(mtx), "--csv", str(csv)] + small,
        ["bench", str(hbp), "--kernels", "csr,hbp", "--iters", "5",
         "--warmup", "2", "--json", str(report)],
    ]
    for argv in steps:
        print(f"$ hbp {' '.join(argv)}")
        code = main(argv)
        print(f"  -> exit {code}\n")
        assert code == 0

    print("bench report written to JSON:")
    print(report.read_text())
    print("first lines of the group statistics CSV:")
    print("\n".join(csv.read_text().splitlines()[:5]))
