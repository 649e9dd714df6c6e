"""Analytic calibration curves under both noise-variance conventions.

Tunes epsilon separately for each convention so that both hit the same z, then
prints P+(t0) side by side together with the tuned noise strengths.
"""

import argparse

import numpy as np

from ssb_measure.ensemble import analytic_p_plus_at_t0
from ssb_measure.measurement_model import MeasurementParams
from ssb_measure.order_parameter import LangevinParams, tune_noise_for_z


def params(z, convention, gamma=1.0, g=1.0, mu=0.02, B=1.0):
    eps = tune_noise_for_z(z, gamma, g, mu, B, convention)
    return MeasurementParams(LangevinParams(gamma, g, eps), mu=mu, B=B, base_rate=1.0,
                             c_rate=1.0, theta=20.0, dt=0.01, t_end=30.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--z", type=float, nargs="+", default=[0.08, 2.0, 10.0])
    ap.add_argument("--points", type=int, default=11)
    args = ap.parse_args()
    grid = np.linspace(-0.5, 0.5, args.points)
    for z in args.z:
        pm, pp = params(z, "mc"), params(z, "paper")
        print(f"z = {z}: eps_mc = {pm.langevin.epsilon:.6g}, eps_paper = {pp.langevin.epsilon:.6g}")
        print(f"  {'s3':>6} {'P+ mc':>10} {'P+ paper':>10}")
        for s in grid:
            print(f"  {s:6.2f} {analytic_p_plus_at_t0(s, pm, 'mc'):10.6f} {analytic_p_plus_at_t0(s, pp, 'paper'):10.6f}")


if __name__ == "__main__":
    main()
