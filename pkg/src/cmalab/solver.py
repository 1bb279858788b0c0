"""Minimisation of J_mu over the discrete psh cone by projected descent.

Each step solves a Poisson problem for the direction (the residual mapped
through the inverse Laplacian), backtracks on ``t -> J(P(u + t v))`` with an
Armijo test, and projects the accepted iterate onto the psh cone.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import cg

from .calculus import (DiscreteMeasure, GridFunction, integrate, monge_ampere, stencil)
from .envelope import project
from .families import random_recipe


class LinearSolveError(RuntimeError):
    pass


@dataclass
class SolveOptions:
    max_iters: int = 200
    tol_residual: float = 1e-6      # L1 norm of MA(u) - mu, mass units
    tol_J: float = 1e-13            # relative J stagnation between iterations
    step0: float = 1.0
    seed_start: str = "zero"        # zero | scaled-radial | random-admissible
    seed: int = 0
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    cg_rtol: float = 1e-10
    polish: bool = True             # residual-merit steps once the J search stagnates

    def __post_init__(self):
        if self.tol_residual <= 0 or self.tol_J <= 0 or self.step0 <= 0:
            raise ValueError("tolerances and step0 must be positive")
        if self.seed_start not in ("zero", "scaled-radial", "random-admissible"):
            raise ValueError(f"unknown seed_start {self.seed_start!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class SolveReport:
    J_trace: list = field(default_factory=list)
    residual_trace: list = field(default_factory=list)
    clamp_mass_trace: list = field(default_factory=list)
    step_trace: list = field(default_factory=list)
    phase_trace: list = field(default_factory=list)  # "J" or "polish" per accepted step
    iterations: int = 0
    converged: bool = False
    reason: str = ""
    seconds: float = 0.0


def _J_and_ma(u: GridFunction, mu: DiscreteMeasure):
    ma = monge_ampere(u, check=False)
    J = integrate(-u.vec, ma) / (u.domain.n + 1) - integrate(-u.vec, mu)
    return J, ma


def residual_l1(ma: DiscreteMeasure, mu: DiscreteMeasure) -> float:
    return float(mu.domain.cell_volume * np.sum(np.abs(ma.density - mu.density)))


def _poisson(domain, rhs: np.ndarray, rtol: float) -> np.ndarray:
    """Solve Delta_h v = rhs with zero boundary values."""
    if not np.any(rhs):
        return np.zeros_like(rhs)
    A = -stencil(domain).laplacian
    x, info = cg(A, -rhs, rtol=rtol, atol=0.0, maxiter=20 * A.shape[0])
    if info != 0:
        raise LinearSolveError(f"conjugate gradient did not converge (info={info})")
    return x


def descent_direction(u: GridFunction, mu: DiscreteMeasure, rtol: float = 1e-10,
                      ma: DiscreteMeasure | None = None) -> GridFunction:
    """v with Delta_h v = mu - MA(u); J decreases to first order along +v."""
    if ma is None:
        ma = monge_ampere(u)
    return GridFunction(u.domain, _poisson(u.domain, mu.density - ma.density, rtol))


def slope(u: GridFunction, mu: DiscreteMeasure, v: GridFunction, ma: DiscreteMeasure | None = None) -> float:
    """First-order change of J along v: int(-v) MA(u) + int v dmu."""
    if ma is None:
        ma = monge_ampere(u)
    return integrate(-v.vec, ma) + integrate(v.vec, mu)


def line_search(u: GridFunction, mu: DiscreteMeasure, v: GridFunction, step0: float = 1.0,
                c: float = 1e-4, factor: float = 0.5, J0: float | None = None,
                ma: DiscreteMeasure | None = None) -> tuple:
    """Armijo backtracking on t -> J(P(u + t v)).  Returns (t, P(u + t v), J) with t = 0
    (and u itself) when no sufficient decrease exists down to 1e-12 * step0."""
    if J0 is None or ma is None:
        J0, ma = _J_and_ma(u, mu)
    s = slope(u, mu, v, ma)
    if not np.any(v.vec) or s >= 0.0:
        return 0.0, u, J0
    t = step0
    while t >= 1e-12 * step0:
        w = project(u + t * v)
        Jw, _ = _J_and_ma(w, mu)
        if Jw <= J0 + c * t * s:
            return t, w, Jw
        t *= factor
    return 0.0, u, J0


def residual_line_search(u: GridFunction, mu: DiscreteMeasure, v: GridFunction, res0: float,
                         step0: float = 1.0, c: float = 1e-4, factor: float = 0.5) -> tuple:
    """Backtracking on the L1 residual of P(u + t v): accept once it falls below
    (1 - c t) res0.  Returns (t, P(u + t v), J, MA) or (0, u, None, None)."""
    t = step0
    while t >= 1e-12 * step0:
        w = project(u + t * v)
        Jw, ma = _J_and_ma(w, mu)
        if residual_l1(ma, mu) <= (1.0 - c * t) * res0:
            return t, w, Jw, ma
        t *= factor
    return 0.0, u, None, None


def initial_guess(domain, mu: DiscreteMeasure, opts: SolveOptions) -> GridFunction:
    if opts.seed_start == "zero":
        return GridFunction.zeros(domain)
    if opts.seed_start == "scaled-radial":
        # (c rho) has Monge-Ampere density ~ c^n * 4^n n!; match the mean of mu
        vol = domain.num_interior * domain.cell_volume
        mean = mu.total_mass / vol if vol > 0 else 0.0
        from .calculus import normalization
        c = (mean / normalization(domain.n)) ** (1.0 / domain.n) if mean > 0 else 0.0
        return project(GridFunction.from_function(domain, lambda p: 0.5 * c * domain.defining_function(p)))
    rng = np.random.default_rng(opts.seed)
    return random_recipe(rng, domain.n, polydisc=domain.preset == "polydisc").evaluate(domain)


def solve_dirichlet(mu: DiscreteMeasure, opts: SolveOptions | None = None,
                    u0: GridFunction | None = None) -> tuple:
    """Projected descent for (dd^c u)^n = mu with zero boundary values."""
    opts = opts or SolveOptions()
    start = time.perf_counter()
    domain = mu.domain
    rep = SolveReport()
    if not np.any(mu.density):
        # J_0 >= 0 vanishes only at 0
        u = GridFunction.zeros(domain)
        rep.J_trace, rep.residual_trace, rep.clamp_mass_trace = [0.0], [0.0], [0.0]
        rep.converged, rep.reason = True, "zero measure"
        rep.seconds = time.perf_counter() - start
        return u, rep
    u = u0 if u0 is not None else initial_guess(domain, mu, opts)
    J, ma = _J_and_ma(u, mu)
    res = residual_l1(ma, mu)
    rep.J_trace.append(J)
    rep.residual_trace.append(res)
    rep.clamp_mass_trace.append(ma.clamped_mass)
    zero_steps = 0
    phase = "J"
    for it in range(1, opts.max_iters + 1):
        if res <= opts.tol_residual:
            rep.converged, rep.reason = True, "residual"
            break
        v = descent_direction(u, mu, opts.cg_rtol, ma)
        if phase == "J":
            t, w, Jw = line_search(u, mu, v, opts.step0, opts.armijo_c, opts.backtrack, J, ma)
            ma_w = None
        else:
            t, w, Jw, ma_w = residual_line_search(u, mu, v, res, opts.step0, opts.armijo_c, opts.backtrack)
        rep.iterations = it
        rep.step_trace.append(t)
        if t == 0.0:
            zero_steps += 1
            if zero_steps >= 2:
                if phase == "J" and opts.polish:
                    phase, zero_steps = "polish", 0
                    continue
                rep.converged, rep.reason = res <= 10 * opts.tol_residual, f"stagnation ({phase})"
                break
            continue
        zero_steps = 0
        J_prev = J
        u = w
        J, ma = (Jw, ma_w) if ma_w is not None else _J_and_ma(u, mu)
        res = residual_l1(ma, mu)
        rep.J_trace.append(J)
        rep.residual_trace.append(res)
        rep.clamp_mass_trace.append(ma.clamped_mass)
        rep.phase_trace.append(phase)
        if res <= opts.tol_residual:
            rep.converged, rep.reason = True, "residual"
            break
        if phase == "J" and abs(J_prev - J) <= opts.tol_J * max(abs(J), 1e-300):
            if opts.polish:
                phase = "polish"
                continue
            rep.converged, rep.reason = res <= 10 * opts.tol_residual, "J stagnation"
            break
    else:
        rep.reason = "max_iters"
    if not rep.reason:
        rep.converged, rep.reason = True, "residual"
    rep.seconds = time.perf_counter() - start
    return u, rep
