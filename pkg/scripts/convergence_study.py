"""Max-norm error of the constant-density solves against |z|^2 - 1.

    python scripts/convergence_study.py [--ball 9,13,17,21] [--disc 33,65,129,257]
"""
import argparse
import time

import numpy as np

from cmalab.calculus import DiscreteMeasure, normalization
from cmalab.grid import build_domain
from cmalab.solver import SolveOptions, solve_dirichlet


def run(preset, resolutions, tol):
    print(f"{preset}: N, h, max error, observed order, iterations, seconds")
    prev = None
    for N in resolutions:
        d = build_domain(preset, N)
        mu = DiscreteMeasure(d, np.full(d.num_interior, normalization(d.n)))
        t0 = time.perf_counter()
        u, rep = solve_dirichlet(mu, SolveOptions(tol_residual=tol))
        secs = time.perf_counter() - t0
        err = np.max(np.abs(u.vec - (np.sum(d.points ** 2, axis=1) - 1)))
        order = np.log(prev[1] / err) / np.log(prev[0] / d.h) if prev else float("nan")
        print(f"  {N:4d} {d.h:.4f} {err:.3e} {order:5.2f} {rep.iterations:4d} {secs:7.2f}")
        prev = (d.h, err)


def ints(s):
    return [int(x) for x in s.split(",")]


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--disc", type=ints, default=[33, 65, 129, 257])
    ap.add_argument("--ball", type=ints, default=[9, 13, 17, 21])
    args = ap.parse_args()
    run("disc", args.disc, 1e-6)
    run("ball", args.ball, 1e-4)
