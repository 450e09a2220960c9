#!/usr/bin/env python3
"""Phase-diagram dataset: q*, c*, chi1 over the (sigma_w, sigma_b) plane.

Writes the grid and the chi1 = 1 boundary curve as CSV, plus length-map
and c-map trajectories at three representative sigma_w (ordered, mildly
chaotic, strongly chaotic) for overlay plots.
"""

import argparse
import pathlib
import sys

from mfprop.cli import run


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="results/phase", type=pathlib.Path)
    parser.add_argument("--resolution", default=40, type=int, help="grid points per axis")
    args = parser.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    status = run([
        "phase-grid",
        "--sw", f"0.1:4:{args.resolution}",
        "--sb", f"0:1:{args.resolution}",
        "-o", str(args.outdir / "grid.csv"),
    ])
    for sigma_w in ("0.5", "2.5", "4.0"):
        status |= run([
            "length-map", "--sigma-w", sigma_w, "--sigma-b", "0.3",
            "--depth", "12", "--q0", "0.1",
            "-o", str(args.outdir / f"length_sw{sigma_w}.csv"),
        ])
        status |= run([
            "c-map", "--sigma-w", sigma_w, "--sigma-b", "0.3",
            "--depth", "25", "--c0", "0.9",
            "-o", str(args.outdir / f"cmap_sw{sigma_w}.csv"),
        ])
    return status


if __name__ == "__main__":
    sys.exit(main())
