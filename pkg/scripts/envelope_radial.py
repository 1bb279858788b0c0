"""Envelope of -(1 - |z|^2)^2 on the disc against the log-radial convex hull,
and the relative extremal function of the disc of radius 1/2.

    python scripts/envelope_radial.py [--resolutions 65,129,257]
"""
import argparse

import numpy as np

from cmalab.calculus import GridFunction
from cmalab.envelope import psh_projection, relative_extremal
from cmalab.grid import ClosedBall, build_domain, node_set


def log_radial_hull(f, r, grid=20001):
    """Lower convex hull of s -> f(e^s) evaluated at log r (r = 0 maps to the minimum)."""
    s = np.linspace(-12.0, 0.0, grid)
    y = f(np.exp(s))
    hull = []
    for p in zip(s, y):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    hx, hy = np.array(hull).T
    return np.interp(np.log(np.maximum(r, np.exp(-12.0))), hx, hy)


def extremal(r, a):
    return np.where(r <= a, -1.0, np.log(np.maximum(r, a)) / -np.log(a))


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--resolutions", default="65,129,257")
    args = ap.parse_args()
    quartic = lambda s: -(1 - s ** 2) ** 2  # noqa: E731
    print("N, envelope error, sweeps, contact nodes, extremal error")
    for N in (int(x) for x in args.resolutions.split(",")):
        d = build_domain("disc", N)
        r = np.sqrt(np.sum(d.points ** 2, axis=1))
        res = psh_projection(GridFunction.from_function(d, lambda p: quartic(np.sqrt(np.sum(p ** 2, axis=1)))))
        env_err = np.max(np.abs(res.w.vec - log_radial_hull(quartic, r)))
        hK = relative_extremal(node_set(d, ClosedBall(0.5)))
        ext_err = np.max(np.abs(hK.vec - extremal(r, 0.5)))
        print(f"  {N:4d} {env_err:.2e} {res.iterations:6d} {int(res.contact_mask.sum()):6d} {ext_err:.2e}")
