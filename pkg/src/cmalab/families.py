"""Seeded families of admissible test functions.

Random members are built from ball automorphisms: for |a| < 1,

    m_a(z) = -(1 - |a|^2)(1 - |z|^2) / |1 - <z, a>|^2 = |phi_a(z)|^2 - 1,

is smooth, strictly psh, negative in the ball and zero on the sphere.  Convex
increasing transforms and smoothed logarithmic poles of these keep all three
properties, so members are admissible by construction on the disc and ball.
On the polydisc the coordinate-wise maximum is used and the result is
projected onto the discrete psh cone.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import GridFunction
from .envelope import project, psh_violation


def mobius_minus_one(z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """|phi_a(z)|^2 - 1 for the ball automorphism exchanging a and 0."""
    za = z @ np.conj(a)
    z2 = np.sum(np.abs(z) ** 2, axis=-1)
    a2 = float(np.sum(np.abs(a) ** 2))
    return -(1.0 - a2) * (1.0 - z2) / np.abs(1.0 - za) ** 2


@dataclass(frozen=True)
class Term:
    kind: str            # "mobius" | "log"
    coef: float
    center: tuple        # complex coordinates of the pole / automorphism point
    shape: float         # beta for "mobius" (0 = linear), eps for "log"

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        m = mobius_minus_one(z, np.asarray(self.center, dtype=complex))
        if self.kind == "mobius":
            if self.shape == 0.0:
                return self.coef * m
            return self.coef * np.expm1(self.shape * m) / self.shape
        if self.kind == "log":
            eps2 = self.shape ** 2
            return self.coef * 0.5 * np.log((1.0 + m + eps2) / (1.0 + eps2)) / abs(np.log(self.shape))
        raise ValueError(f"unknown term kind {self.kind!r}")


@dataclass(frozen=True)
class PshRecipe:
    """Resolution-independent description of a random admissible function."""

    terms: tuple
    polydisc: bool = False

    def continuous(self, points: np.ndarray) -> np.ndarray:
        z = points[:, 0::2] + 1j * points[:, 1::2]
        if not self.polydisc:
            return sum(t.evaluate(z) for t in self.terms)
        # coordinate-wise: each term acts on one complex coordinate, combined by max
        n = z.shape[1]
        parts = []
        for j in range(n):
            zj = z[:, j:j + 1]
            parts.append(sum(t.evaluate(zj) for t in self.terms))
        return np.max(parts, axis=0)

    def evaluate(self, domain, **envelope_kw) -> GridFunction:
        u = GridFunction.from_function(domain, self.continuous)
        tol = 0.5e-8 * max(u.sup_norm, 1e-300) / domain.h ** 2
        if psh_violation(domain, u.vec) > tol:
            u = project(u, **envelope_kw)
        return u


def random_recipe(rng: np.random.Generator, n: int, polydisc: bool = False,
                  max_terms: int = 5, max_center: float = 0.5) -> PshRecipe:
    k = int(rng.integers(1, max_terms + 1))
    dim = 1 if polydisc else n
    terms = []
    for _ in range(k):
        direction = rng.normal(size=2 * dim)
        direction /= np.linalg.norm(direction)
        radius = max_center * rng.uniform() ** (1.0 / (2 * dim))
        c = radius * direction
        center = tuple(complex(c[2 * j], c[2 * j + 1]) for j in range(dim))
        coef = float(rng.uniform(0.2, 1.5))
        if rng.uniform() < 0.7:
            beta = float(rng.choice([0.0, rng.uniform(0.2, 2.0)]))
            terms.append(Term("mobius", coef, center, beta))
        else:
            terms.append(Term("log", coef, center, float(rng.uniform(0.3, 0.6))))
    return PshRecipe(tuple(terms), polydisc)


def random_psh(domain, rng: np.random.Generator, **kw) -> GridFunction:
    return random_recipe(rng, domain.n, polydisc=domain.preset == "polydisc", **kw).evaluate(domain)


def random_family(domain, size: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    return [random_psh(domain, rng) for _ in range(size)]


# ----------------------------------------------------------- singular probes

def probe_function(domain, eps: float) -> GridFunction:
    """phi_eps = max(log|z|, log eps) / |log eps| (coordinate max-norm on the polydisc)."""
    z = domain.z
    if domain.preset == "polydisc":
        r = np.max(np.abs(z), axis=1)
    else:
        r = np.sqrt(np.sum(np.abs(z) ** 2, axis=1))
    L = abs(np.log(eps))
    vals = np.maximum(np.log(np.maximum(r, 1e-300)), -L) / L
    return GridFunction(domain, vals)


def probe_energy(n: int, eps: float) -> float:
    """Exact e_1 of phi_eps: its Monge-Ampere measure has mass (2 pi / |log eps|)^n
    on the sphere |z| = eps, where -phi_eps = 1."""
    return (2.0 * np.pi / abs(np.log(eps))) ** n


DEFAULT_PROBE_EPS = tuple(10.0 ** -k for k in range(1, 7))
