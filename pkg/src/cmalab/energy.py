"""Pluricomplex energies, the functional J_mu and inequality gap checkers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import (ArityError, DiscreteMeasure, GridFunction, integrate, mixed_monge_ampere,
                       monge_ampere)
from .families import DEFAULT_PROBE_EPS, probe_energy, probe_function, random_family

TOL_DISC_FACTOR = 0.02


def tol_disc(scale: float, factor: float = TOL_DISC_FACTOR) -> float:
    """Discretisation slack for inequality checks: a fixed fraction of the RHS scale."""
    return factor * abs(scale)


@dataclass
class EnergyReport:
    e_p: float
    p: float
    J: float | None = None
    mu_pairing: float | None = None


def energy_ep(u: GridFunction, p: float = 1.0, eps_psh: float | None = None) -> float:
    """e_p(u) = integral of (-u)^p against the discrete Monge-Ampere measure of u."""
    if p <= 0:
        raise ValueError("energy exponent p must be positive")
    m = monge_ampere(u, eps_psh=eps_psh)
    return integrate(np.maximum(-u.vec, 0.0) ** p, m)


def functional_J(u: GridFunction, mu: DiscreteMeasure, eps_psh: float | None = None) -> float:
    """J_mu(u) = e_1(u) / (n+1) + integral of u against mu."""
    return energy_report(u, mu, eps_psh=eps_psh).J


def energy_report(u: GridFunction, mu: DiscreteMeasure | None = None, p: float = 1.0,
                  eps_psh: float | None = None) -> EnergyReport:
    e = energy_ep(u, p, eps_psh)
    if mu is None:
        return EnergyReport(e, p)
    pairing = integrate(-u.vec, mu)
    e1 = e if p == 1.0 else energy_ep(u, 1.0, eps_psh)
    return EnergyReport(e, p, J=e1 / (u.domain.n + 1) - pairing, mu_pairing=pairing)


def holder_sides(us, eps_psh: float | None = None) -> tuple:
    """(LHS, RHS) of the p = 1 Hoelder inequality with constant 1."""
    us = list(us)
    if not us:
        raise ArityError("holder_gap needs n+1 functions, got 0")
    n = us[0].domain.n
    if len(us) != n + 1:
        raise ArityError(f"holder_gap needs n+1={n + 1} functions, got {len(us)}")
    lhs = integrate(-us[0].vec, mixed_monge_ampere(us[1:], eps_psh=eps_psh))
    rhs = float(np.prod([energy_ep(u, 1.0, eps_psh) ** (1.0 / (n + 1)) for u in us]))
    return lhs, rhs


def holder_gap(us, eps_psh: float | None = None) -> float:
    lhs, rhs = holder_sides(us, eps_psh)
    return rhs - lhs


def triangle_sides(u: GridFunction, v: GridFunction, eps_psh: float | None = None) -> tuple:
    q = 1.0 / (u.domain.n + 1)
    lhs = energy_ep(u + v, 1.0, eps_psh) ** q
    rhs = energy_ep(u, 1.0, eps_psh) ** q + energy_ep(v, 1.0, eps_psh) ** q
    return lhs, rhs


def triangle_gap(u: GridFunction, v: GridFunction, eps_psh: float | None = None) -> float:
    lhs, rhs = triangle_sides(u, v, eps_psh)
    return rhs - lhs


# -------------------------------------------------------- admissibility

@dataclass(frozen=True)
class RandomFamily:
    """Seeded random admissible functions (see ``families.random_recipe``)."""
    size: int
    seed: int = 0


@dataclass(frozen=True)
class ProbeFamily:
    """Truncated logarithmic poles phi_eps at the origin, eps decreasing."""
    eps: tuple = DEFAULT_PROBE_EPS


@dataclass
class AdmissibilityReport:
    B_hat: float
    A_hat: float
    family_size: int
    divergence_flag: bool
    probe_eps: list = field(default_factory=list)
    probe_ratios: list = field(default_factory=list)


def _members(family):
    if isinstance(family, (RandomFamily, ProbeFamily)):
        return [family]
    if isinstance(family, GridFunction):
        return [family]
    return list(family)


def admissibility_estimate(mu: DiscreteMeasure, family=None) -> AdmissibilityReport:
    """Largest observed ratios int(-phi) dmu / e_1(phi)^(1/(n+1)) (B_hat) and
    int phi^2 dmu / e_1(phi)^(2/(n+1)) (A_hat) over a test family.

    ``family`` is a RandomFamily, a ProbeFamily, a list of GridFunctions, or a
    list mixing these.  The default is both the probe family and 20 random
    functions with seed 0.  The divergence flag is raised when the probe
    ratios increase monotonically and the last exceeds twice the first.
    """
    domain = mu.domain
    n = domain.n
    if family is None:
        family = [ProbeFamily(), RandomFamily(20, 0)]
    parts = _members(family)
    b_ratios, a_ratios = [], []
    probe_eps, probe_ratios = [], []
    count = 0
    for part in parts:
        if isinstance(part, ProbeFamily):
            for eps in part.eps:
                phi = probe_function(domain, eps)
                e1 = probe_energy(n, eps)
                r = integrate(-phi.vec, mu) / e1 ** (1.0 / (n + 1))
                probe_eps.append(float(eps))
                probe_ratios.append(r)
                b_ratios.append(r)
                a_ratios.append(integrate(phi.vec ** 2, mu) / e1 ** (2.0 / (n + 1)))
                count += 1
            continue
        funcs = random_family(domain, part.size, part.seed) if isinstance(part, RandomFamily) else [part]
        for phi in funcs:
            e1 = energy_ep(phi)
            count += 1
            if e1 <= 0.0:
                continue
            b_ratios.append(integrate(-phi.vec, mu) / e1 ** (1.0 / (n + 1)))
            a_ratios.append(integrate(phi.vec ** 2, mu) / e1 ** (2.0 / (n + 1)))
    if count == 0:
        raise ValueError("admissibility_estimate needs a non-empty test family")
    flag = divergence_flag(probe_eps, probe_ratios)
    return AdmissibilityReport(float(max(b_ratios, default=0.0)), float(max(a_ratios, default=0.0)),
                               count, flag, probe_eps, probe_ratios)


def divergence_flag(eps, ratios, factor: float = 2.0) -> bool:
    if len(ratios) < 2:
        return False
    order = np.argsort(-np.asarray(eps))
    r = np.asarray(ratios)[order]
    if r[0] <= 0.0:
        return False
    return bool(np.all(np.diff(r) > 0.0) and r[-1] > factor * r[0])
