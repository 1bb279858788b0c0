"""Executable audits of the derivative formulas, comparison inequality,
optimality, uniqueness and the admissibility conditions.

Every check returns a VerifyReport whose ``worst_gap`` follows one sign
convention: the check passes iff ``worst_gap >= -tolerance``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .calculus import DiscreteMeasure, GridFunction, integrate, monge_ampere
from .energy import (TOL_DISC_FACTOR, ProbeFamily, RandomFamily, admissibility_estimate, energy_ep,
                     functional_J, holder_sides, tol_disc, triangle_sides)
from .envelope import default_eps_env, lipschitz_deviation, project
from .families import random_family, random_psh
from .solver import SolveOptions, solve_dirichlet


@dataclass
class VerifyReport:
    check_name: str
    samples: int
    worst_gap: float
    tolerance: float
    verdict: str                      # "pass" | "fail" | "info"
    details: list = field(default_factory=list)
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict != "fail"


def _report(name, gaps, tol, details, note="", informational=False) -> VerifyReport:
    worst = float(min(gaps)) if len(gaps) else 0.0
    if informational:
        verdict = "info"
    else:
        verdict = "pass" if worst >= -tol else "fail"
    return VerifyReport(name, len(details), worst, float(tol), verdict, details, note)


def richardson(ts, qs) -> float:
    """Extrapolate q(t) = S + a t + O(t^2) to t = 0 from the two smallest |t|."""
    ts = np.asarray(ts, dtype=float)
    qs = np.asarray(qs, dtype=float)
    order = np.argsort(np.abs(ts))
    if ts.size == 1:
        return float(qs[0])
    t1, t2 = ts[order[0]], ts[order[1]]
    q1, q2 = qs[order[0]], qs[order[1]]
    return float((t2 * q1 - t1 * q2) / (t2 - t1))


def derivative_quotients(u: GridFunction, v: GridFunction, ts) -> dict:
    """Difference quotients of f(t) = e_1(u + t v) (t > 0) and e_1(P(u + t v)) (t < 0)."""
    e0 = energy_ep(u)
    out = {"pos": ([], []), "neg": ([], [])}
    for t in ts:
        if t > 0:
            q = (energy_ep(u + t * v) - e0) / t
            out["pos"][0].append(float(t))
            out["pos"][1].append(q)
        elif t < 0:
            q = (energy_ep(project(u + t * v)) - e0) / t
            out["neg"][0].append(float(t))
            out["neg"][1].append(q)
    return out


def check_energy_derivative(u: GridFunction, v: GridFunction,
                            ts=(0.1, -0.1, 0.01, -0.01, 1e-3, -1e-3, 1e-4, -1e-4),
                            rel_tol: float | None = None) -> VerifyReport:
    """Both one-sided slopes of e_1 along v against S = (n+1) int(-v) MA(u)."""
    n = u.domain.n
    S = (n + 1) * integrate(-v.vec, monge_ampere(u))
    if rel_tol is None:
        rel_tol = 1e-3 + TOL_DISC_FACTOR
    tol = rel_tol * abs(S)
    quot = derivative_quotients(u, v, ts)
    gaps, details = [], []
    slopes = {}
    for side in ("pos", "neg"):
        tt, qq = quot[side]
        if not tt:
            continue
        R = richardson(tt, qq)
        slopes[side] = R
        gaps.append(-abs(R - S))
        details.append({"side": side, "ts": tt, "quotients": qq, "extrapolated": R, "S": S})
    if "pos" in slopes and "neg" in slopes:
        details.append({"two_sided_difference": abs(slopes["pos"] - slopes["neg"]),
                        "allowed": 2 * tol})
    return _report("energy_derivative", gaps, tol, details)


def check_J_envelope_derivative(u: GridFunction, v: GridFunction, mu: DiscreteMeasure,
                                ts=(-1e-2, -1e-3), tol: float | None = None) -> VerifyReport:
    """Left slope of t -> J(P(u + t v)) at 0 against int(-v) MA(u) + int v dmu."""
    a = integrate(-v.vec, monge_ampere(u))
    b = integrate(v.vec, mu)
    rhs = a + b
    if tol is None:
        tol = tol_disc(abs(a) + abs(b))
    J0 = functional_J(u, mu)
    ts = [float(t) for t in ts]
    if any(t >= 0 for t in ts):
        raise ValueError("ts must be negative")
    qs = [(functional_J(project(u + t * v), mu) - J0) / t for t in ts]
    slope = richardson(ts, qs)
    details = [{"ts": ts, "quotients": qs, "slope": slope, "rhs": rhs}]
    return _report("J_envelope_derivative", [slope - rhs], tol, details)


def comparison_sides(u: GridFunction, v: GridFunction, w: GridFunction) -> tuple:
    sub = w.vec < u.vec
    lhs = integrate(np.where(sub, -v.vec, 0.0), monge_ampere(u))
    rhs = integrate(np.where(sub, -v.vec, 0.0), monge_ampere(w))
    return lhs, rhs


def check_comparison(u: GridFunction, v: GridFunction, w: GridFunction,
                     tol: float | None = None) -> VerifyReport:
    """int_{w<u} (-v) MA(u) <= int_{w<u} (-v) MA(w); tolerance scaled by the
    full-domain integral int (-v) MA(w)."""
    lhs, rhs = comparison_sides(u, v, w)
    if tol is None:
        tol = tol_disc(integrate(-v.vec, monge_ampere(w)))
    return _report("comparison", [rhs - lhs], tol, [{"lhs": lhs, "rhs": rhs}])


def audit_samples(u: GridFunction, samples: int, seed: int) -> list:
    """Admissible competitors: random members, plus u + t v along a bank of
    random directions (projected when t < 0), plus scalings of u."""
    domain = u.domain
    rng = np.random.default_rng(seed)
    out = []
    n_random = samples // 4
    for _ in range(n_random):
        out.append(random_psh(domain, rng))
    bank = [random_psh(domain, rng) for _ in range(max(1, samples // 20))]
    ts = (0.3, 0.05, 0.01, -0.01, -0.05, -0.3)
    k = 0
    while len(out) < samples - 3:
        v = bank[k % len(bank)]
        t = ts[(k // len(bank)) % len(ts)] * (1.0 + 0.5 * rng.uniform())
        w = u + t * v
        out.append(w if t > 0 else project(w))
        k += 1
    for s in (0.5, 0.9, 1.1)[:max(0, samples - len(out))]:
        out.append(s * u)
    return out[:samples]


def check_theoremB_optimality(u: GridFunction, mu: DiscreteMeasure, samples: int = 200, seed: int = 0,
                              tol: float | None = None) -> VerifyReport:
    """J(w) >= J(u) - tol over seeded admissible competitors w."""
    Ju = functional_J(u, mu)
    if tol is None:
        tol = tol_disc(Ju)
    gaps, details = [], []
    for i, w in enumerate(audit_samples(u, samples, seed)):
        Jw = functional_J(w, mu)
        gaps.append(Jw - Ju)
        details.append({"sample": i, "J": Jw})
    return _report("theoremB_optimality", gaps, tol, details, note=f"J(u) = {Ju!r}")


def _start_options(start, base: SolveOptions) -> SolveOptions:
    from dataclasses import replace
    if isinstance(start, str):
        return replace(base, seed_start=start)
    return replace(base, seed_start="random-admissible", seed=int(start))


def check_uniqueness(mu: DiscreteMeasure, starts=("zero", "scaled-radial", 0),
                     opts: SolveOptions | None = None, tol: float | None = None) -> VerifyReport:
    """Solve from several starts; worst pairwise max-norm distance against tol.

    A start is "zero", "scaled-radial", or an integer seed for a random
    admissible start."""
    starts = list(starts)
    if len(starts) < 3:
        raise ValueError("uniqueness check needs at least three starts")
    opts = opts or SolveOptions()
    sols, details = [], []
    failed = []
    for s in starts:
        u, rep = solve_dirichlet(mu, _start_options(s, opts))
        sols.append(u)
        details.append({"start": s, "converged": rep.converged, "iterations": rep.iterations,
                        "residual": rep.residual_trace[-1], "reason": rep.reason})
        if not rep.converged:
            failed.append(s)
    scale = max(u.sup_norm for u in sols)
    if tol is None:
        tol = tol_disc(scale)
    dists = [float(np.max(np.abs(a.vec - b.vec), initial=0.0)) for a, b in combinations(sols, 2)]
    worst = max(dists)
    rep = _report("uniqueness", [-worst], tol, details)
    if failed:
        rep.verdict = "fail"
        rep.note = f"solver did not converge from starts {failed}"
    return rep


def check_condition3_membership(mu: DiscreteMeasure, family=None) -> VerifyReport:
    """Finite pairings over the family and no divergence along the probe family."""
    if family is None:
        family = [ProbeFamily(), RandomFamily(20, 0)]
    est = admissibility_estimate(mu, family)
    eps, r = np.asarray(est.probe_eps), np.asarray(est.probe_ratios)
    finite = bool(np.isfinite(est.B_hat) and np.isfinite(est.A_hat))
    if r.size >= 2 and r[np.argsort(-eps)][0] > 0:
        rs = r[np.argsort(-eps)]
        growth = rs[-1] / rs[0]
        monotone = bool(np.all(np.diff(rs) > 0))
        gap = 2.0 - growth if monotone else max(2.0 - growth, 0.0)
    else:
        gap = 0.0
    if not finite:
        gap = -np.inf
    details = [{"B_hat": est.B_hat, "A_hat": est.A_hat, "probe_eps": est.probe_eps,
                "probe_ratios": est.probe_ratios, "divergence_flag": est.divergence_flag}]
    return _report("condition3_membership", [gap], 0.0, details)


def epsilon_net_size(dist: np.ndarray, eps: float) -> int:
    """Greedy net: number of centres needed so every point is within eps of one."""
    m = dist.shape[0]
    covered = np.zeros(m, dtype=bool)
    size = 0
    for i in range(m):
        if not covered[i]:
            size += 1
            covered |= dist[i] <= eps
    return size


def check_condition4_compactness(mu: DiscreteMeasure, sequence=None, length: int = 20, seed: int = 0,
                                 eps: float = 0.1) -> VerifyReport:
    """Demonstrator only: pairwise L1(mu) distances of an e_1-normalized
    sequence and the size of a greedy eps-net.  Sampling cannot establish or
    refute subsequence compactness, so the verdict is informational."""
    domain = mu.domain
    n = domain.n
    if sequence is None:
        sequence = random_family(domain, length, seed)
    seq = []
    for phi in sequence:
        e = energy_ep(phi)
        seq.append(phi * (1.0 / e ** (1.0 / (n + 1))) if e > 0 else phi)
    m = len(seq)
    dist = np.zeros((m, m))
    for i, j in combinations(range(m), 2):
        dist[i, j] = dist[j, i] = integrate(np.abs(seq[i].vec - seq[j].vec), mu)
    net = epsilon_net_size(dist, eps)
    details = [{"length": m, "eps": eps, "net_size": net, "max_distance": float(dist.max(initial=0.0))}]
    return _report("condition4_compactness", [0.0], 0.0, details,
                   note="non-exhaustive demonstrator; verdict is informational", informational=True)


# -------------------------------------------------- sampled inequality suites

def check_holder(domain, samples: int = 100, seed: int = 0) -> VerifyReport:
    n = domain.n
    fam = random_family(domain, samples + n, seed)
    gaps, details, tol = [], [], 0.0
    for i in range(samples):
        lhs, rhs = holder_sides(fam[i:i + n + 1])
        t = tol_disc(rhs)
        gaps.append((rhs - lhs) / t if t > 0 else 0.0)
        details.append({"lhs": lhs, "rhs": rhs, "tolerance": t})
    # gaps are normalized by each sample's own tolerance
    return _report("holder", gaps, 1.0, details, note="gap in units of tol_disc")


def check_triangle(domain, samples: int = 100, seed: int = 0) -> VerifyReport:
    fam = random_family(domain, samples + 1, seed)
    gaps, details = [], []
    for i in range(samples):
        lhs, rhs = triangle_sides(fam[i], fam[i + 1])
        t = tol_disc(rhs)
        gaps.append((rhs - lhs) / t if t > 0 else 0.0)
        details.append({"lhs": lhs, "rhs": rhs, "tolerance": t})
    return _report("triangle", gaps, 1.0, details, note="gap in units of tol_disc")


def check_lipschitz(domain, samples: int = 25, seed: int = 0) -> VerifyReport:
    rng = np.random.default_rng(seed)
    gaps, details = [], []
    for _ in range(samples):
        u, v = random_psh(domain, rng), random_psh(domain, rng)
        t, s = -rng.uniform(0.05, 1.0), -rng.uniform(0.05, 1.0)
        eps = max(default_eps_env(project(u + t * v)), default_eps_env(project(u + s * v)))
        dev = lipschitz_deviation(u, v, t, s)
        gaps.append(-dev / eps)
        details.append({"t": t, "s": s, "deviation": dev, "eps_env": eps})
    return _report("lipschitz", gaps, 1.0, details, note="gap = -deviation / eps_env")
