"""Write the CSV data behind the purity, lock-in and calibration figures.

    python3 scripts/reproduce_figures.py --outdir results [--runs 10000]
"""

import argparse
from pathlib import Path

from ssb_measure.cli import main


def run(args, out):
    code = main(args + ["--out", str(out)])
    if code:
        raise SystemExit(f"{args[0]} failed with exit code {code}")
    print("wrote", out)


def cli():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--runs", type=int, default=10000, help="runs per calibration point")
    ap.add_argument("--trajectories", type=int, default=5)
    ap.add_argument("--seed", default="2024")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)

    # purity dip then recovery, cold reservoir
    run(["spin-relax", "--set", "t_end=3", "--set", "n_samples=601"], out / "purity_relaxation.csv")

    for preset in ("fig4-top", "fig4-middle", "fig4-bottom"):
        run(["measure", "--seed", args.seed, "--runs", str(args.trajectories), "--set", f"preset={preset}",
             "--set", f"potential_out={out / (preset + '_potential.csv')}"], out / f"{preset}.csv")

    run(["calibrate", "--seed", args.seed, "--runs", str(args.runs), "--set", "z_values=0.08,2,10"],
        out / "calibration.csv")
    run(["born"], out / "born.txt")


if __name__ == "__main__":
    cli()
