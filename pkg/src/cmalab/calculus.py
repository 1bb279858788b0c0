"""Discrete complex Hessian, Monge-Ampere measures and midpoint quadrature.

Second derivatives are taken along lattice directions with a 3-point central
stencil.  When a stencil arm leaves the domain, the missing value is replaced
by linear extrapolation through the node and the boundary crossing, where the
function is 0 (ghost-point treatment).  This keeps the axis operator symmetric
and the scheme second-order accurate up to the curved boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import factorial

import numpy as np
import scipy.sparse as sp

from .grid import GridDomain


class DomainMismatchError(ValueError):
    pass


class ArityError(ValueError):
    pass


class PshError(ValueError):
    """Raised when a grid function fails the plurisubharmonicity check."""

    def __init__(self, node, eigenvalue, tolerance):
        self.node = tuple(int(i) for i in node)
        self.eigenvalue = float(eigenvalue)
        self.tolerance = float(tolerance)
        super().__init__(
            f"not plurisubharmonic: min eigenvalue {self.eigenvalue:.3e} < -{self.tolerance:.3e} "
            f"at node {self.node}; project with the psh envelope first")


# ------------------------------------------------------------------ stencil

@dataclass(eq=False)
class Stencil:
    """Sparse second-difference operators on the interior nodes of a domain."""

    domain: GridDomain
    directions: dict = field(repr=False)       # direction tuple -> sparse L_d
    hess_diag: list = field(repr=False)        # n real operators for H_jj
    hess_off: dict = field(repr=False)         # (j, k) -> (re op, im op) for H_jk, j < k
    self_coef: np.ndarray = field(repr=False)  # (M, n, n) complex, H = H0 - u_p * C
    colors: np.ndarray = field(repr=False)
    num_colors: int = 1

    @property
    def laplacian(self) -> sp.csr_matrix:
        dim = self.domain.dim
        ops = [self.directions[tuple(np.eye(dim, dtype=int)[a])] for a in range(dim)]
        return sum(ops[1:], ops[0]).tocsr()


def _unit(dim, *pairs):
    d = np.zeros(dim, dtype=int)
    for a, s in pairs:
        d[a] += s
    return tuple(d)


def _direction_operator(domain: GridDomain, d: tuple) -> sp.csr_matrix:
    idx = domain.index
    M = domain.num_interior
    h2 = domain.h ** 2
    multi = np.argwhere(domain.interior_mask)
    rows = [np.arange(M)]
    cols = [np.arange(M)]
    vals = [np.zeros(M)]
    diag = vals[0]
    for sign in (1, -1):
        nb = multi + sign * np.asarray(d)
        nb_idx = idx[tuple(nb.T)]
        inside = nb_idx >= 0
        ri = np.flatnonzero(inside)
        rows.append(ri)
        cols.append(nb_idx[inside])
        vals.append(np.full(ri.size, 1.0 / h2))
        diag[inside] -= 1.0 / h2
        out = np.flatnonzero(~inside)
        if out.size:
            theta = domain.crossing(domain.points[out], sign * np.asarray(d))
            diag[out] -= 1.0 / (theta * h2)
    L = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(M, M))
    L.sum_duplicates()
    return L


def stencil(domain: GridDomain) -> Stencil:
    cached = domain.__dict__.get("_stencil")
    if cached is None:
        cached = _build_stencil(domain)
        domain.__dict__["_stencil"] = cached
    return cached


def _build_stencil(domain: GridDomain) -> Stencil:
    n, dim = domain.n, domain.dim
    dirs = {}
    for a in range(dim):
        dirs[_unit(dim, (a, 1))] = _direction_operator(domain, _unit(dim, (a, 1)))
    for j, k in combinations(range(n), 2):
        for a in (2 * j, 2 * j + 1):
            for b in (2 * k, 2 * k + 1):
                for s in (1, -1):
                    d = _unit(dim, (a, 1), (b, s))
                    dirs[d] = _direction_operator(domain, d)

    def L(*pairs):
        return dirs[_unit(dim, *pairs)]

    hess_diag = [(0.25 * (L((2 * j, 1)) + L((2 * j + 1, 1)))).tocsr() for j in range(n)]
    hess_off = {}
    for j, k in combinations(range(n), 2):
        xj, yj, xk, yk = 2 * j, 2 * j + 1, 2 * k, 2 * k + 1

        def mixed(a, b):
            return 0.25 * (L((a, 1), (b, 1)) - L((a, 1), (b, -1)))

        re = 0.25 * (mixed(xj, xk) + mixed(yj, yk))
        im = 0.25 * (mixed(xj, yk) - mixed(yj, xk))
        hess_off[(j, k)] = (re.tocsr(), im.tocsr())

    M = domain.num_interior
    C = np.zeros((M, n, n), dtype=complex)
    for j in range(n):
        C[:, j, j] = -hess_diag[j].diagonal()
    for (j, k), (re, im) in hess_off.items():
        C[:, j, k] = -(re.diagonal() + 1j * im.diagonal())
        C[:, k, j] = np.conj(C[:, j, k])

    # colouring such that no node shares a stencil with another of its colour
    multi = np.argwhere(domain.interior_mask)
    if n == 1:
        colors, num_colors = multi.sum(axis=1) % 2, 2
    else:
        weights = np.repeat(np.arange(1, n + 1), 2)
        num_colors = 2 * n
        colors = (multi @ weights) % num_colors
    return Stencil(domain, dirs, hess_diag, hess_off, C, colors, num_colors)


def full_stencil_mask(domain: GridDomain) -> np.ndarray:
    """Per interior node: True when every stencil neighbour is an interior node."""
    cached = domain.__dict__.get("_full_stencil")
    if cached is None:
        idx = domain.index
        multi = np.argwhere(domain.interior_mask)
        cached = np.ones(domain.num_interior, dtype=bool)
        for d in stencil(domain).directions:
            for sign in (1, -1):
                nb = multi + sign * np.asarray(d)
                cached &= idx[tuple(nb.T)] >= 0
        domain.__dict__["_full_stencil"] = cached
    return cached


# ------------------------------------------------------------- field types

def _as_vector(domain: GridDomain, values) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape == domain.shape:
        outside = values[~domain.interior_mask]
        if np.any(outside != 0.0):
            raise ValueError("grid function must vanish off the interior nodes")
        return values[domain.interior_mask].copy()
    if values.shape == (domain.num_interior,):
        return values.copy()
    raise ValueError(f"values of shape {values.shape} do not fit domain shape {domain.shape}")


class GridFunction:
    """Real field on a grid, zero on boundary and exterior nodes.

    Values are stored compressed over the interior nodes (``vec``); ``values``
    expands to the full grid.
    """

    __slots__ = ("domain", "vec")

    def __init__(self, domain: GridDomain, values):
        vec = _as_vector(domain, values)
        if not np.all(np.isfinite(vec)):
            raise ValueError("grid function values must be finite")
        self.domain = domain
        self.vec = vec

    @classmethod
    def from_function(cls, domain: GridDomain, fn) -> "GridFunction":
        """Sample ``fn(points)`` at interior nodes; ``points`` has shape (M, 2n)."""
        return cls(domain, np.asarray(fn(domain.points), dtype=float))

    @classmethod
    def zeros(cls, domain: GridDomain) -> "GridFunction":
        return cls(domain, np.zeros(domain.num_interior))

    @property
    def values(self) -> np.ndarray:
        out = np.zeros(self.domain.shape)
        out[self.domain.interior_mask] = self.vec
        return out

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.vec), initial=0.0))

    def is_candidate(self) -> bool:
        """True when the values are <= 0 (the sign condition of the energy class)."""
        return bool(np.all(self.vec <= 0.0))

    def _check(self, other):
        if not self.domain.compatible(other.domain):
            raise DomainMismatchError("grid functions live on different domains")

    def __add__(self, other):
        self._check(other)
        return GridFunction(self.domain, self.vec + other.vec)

    def __sub__(self, other):
        self._check(other)
        return GridFunction(self.domain, self.vec - other.vec)

    def __mul__(self, t):
        return GridFunction(self.domain, float(t) * self.vec)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.domain, -self.vec)

    def __repr__(self):
        return f"GridFunction({self.domain.preset}, N={self.domain.resolution}, sup={self.sup_norm:.4g})"


@dataclass(eq=False)
class HessianField:
    domain: GridDomain
    matrices: np.ndarray  # (M, n, n) complex, Hermitian per node

    def min_eigenvalue(self) -> np.ndarray:
        return min_eigenvalue(self.matrices)

    def at(self, node) -> np.ndarray:
        i = self.domain.index[tuple(node)]
        if i < 0:
            raise IndexError(f"node {tuple(node)} is not interior")
        return self.matrices[i]


@dataclass(eq=False)
class DiscreteMeasure:
    domain: GridDomain
    density: np.ndarray  # per interior node, >= 0
    clamped_mass: float = 0.0  # mass of negative determinant values removed by clamping

    def __post_init__(self):
        self.density = _as_vector(self.domain, self.density)
        if np.any(self.density < 0) or not np.all(np.isfinite(self.density)):
            raise ValueError("measure density must be finite and non-negative")

    @classmethod
    def zero(cls, domain: GridDomain) -> "DiscreteMeasure":
        return cls(domain, np.zeros(domain.num_interior))

    @property
    def total_mass(self) -> float:
        return float(self.domain.cell_volume * self.density.sum())

    @property
    def values(self) -> np.ndarray:
        out = np.zeros(self.domain.shape)
        out[self.domain.interior_mask] = self.density
        return out

    def scaled(self, t: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.domain, t * self.density)


# --------------------------------------------------------------- operators

def hessian_matrices(domain: GridDomain, vec: np.ndarray) -> np.ndarray:
    st = stencil(domain)
    n = domain.n
    H = np.zeros((vec.shape[0], n, n), dtype=complex)
    for j, op in enumerate(st.hess_diag):
        H[:, j, j] = op @ vec
    for (j, k), (re, im) in st.hess_off.items():
        H[:, j, k] = (re @ vec) + 1j * (im @ vec)
        H[:, k, j] = np.conj(H[:, j, k])
    return H


def complex_hessian(u: GridFunction) -> HessianField:
    """Per-node matrices approximating d^2 u / dz_j dzbar_k."""
    return HessianField(u.domain, hessian_matrices(u.domain, u.vec))


def det_hermitian(H: np.ndarray) -> np.ndarray:
    n = H.shape[-1]
    if n == 1:
        return H[:, 0, 0].real.copy()
    if n == 2:
        return (H[:, 0, 0].real * H[:, 1, 1].real - np.abs(H[:, 0, 1]) ** 2)
    return np.linalg.det(H).real


def min_eigenvalue(H: np.ndarray) -> np.ndarray:
    n = H.shape[-1]
    if n == 1:
        return H[:, 0, 0].real.copy()
    if n == 2:
        a, d = H[:, 0, 0].real, H[:, 1, 1].real
        return 0.5 * (a + d) - np.sqrt(0.25 * (a - d) ** 2 + np.abs(H[:, 0, 1]) ** 2)
    return np.linalg.eigvalsh(H)[:, 0]


def mixed_discriminant(mats) -> np.ndarray:
    """Mixed discriminant of n stacks of n x n Hermitian matrices, by polarization:
    D(A_1..A_n) = (1/n!) sum_S (-1)^{n-|S|} det(sum_{i in S} A_i)."""
    n = len(mats)
    total = np.zeros(mats[0].shape[0])
    for size in range(1, n + 1):
        for S in combinations(range(n), size):
            total += (-1) ** (n - size) * det_hermitian(sum(mats[i] for i in S))
    return total / factorial(n)


def normalization(n: int) -> float:
    """Density of (dd^c |z|^2)^n relative to Lebesgue measure."""
    return 4.0 ** n * factorial(n)


def default_eps_psh(u: GridFunction) -> float:
    return 1e-8 * u.sup_norm / u.domain.h ** 2


def _psh_check(u: GridFunction, H: np.ndarray, eps):
    if eps is None:
        eps = default_eps_psh(u)
    lam = min_eigenvalue(H)
    if lam.size and lam.min() < -eps:
        i = int(np.argmin(lam))
        node = np.argwhere(u.domain.interior_mask)[i]
        raise PshError(node, lam[i], eps)


def _clamped_measure(domain, raw) -> DiscreteMeasure:
    neg = np.minimum(raw, 0.0)
    return DiscreteMeasure(domain, np.maximum(raw, 0.0),
                           clamped_mass=float(-domain.cell_volume * neg.sum()))


def monge_ampere_density(u: GridFunction) -> np.ndarray:
    """Unclamped 4^n n! det(H) per interior node, no psh check."""
    return normalization(u.domain.n) * det_hermitian(hessian_matrices(u.domain, u.vec))


def monge_ampere(u: GridFunction, eps_psh: float | None = None, check: bool = True) -> DiscreteMeasure:
    """Discrete (dd^c u)^n = 4^n n! det(H) dlambda, clamped below at 0."""
    H = hessian_matrices(u.domain, u.vec)
    if check:
        _psh_check(u, H, eps_psh)
    raw = normalization(u.domain.n) * det_hermitian(H)
    return _clamped_measure(u.domain, raw)


def mixed_monge_ampere_density(us) -> np.ndarray:
    domain = us[0].domain
    mats = [hessian_matrices(domain, u.vec) for u in us]
    return normalization(domain.n) * mixed_discriminant(mats)


def mixed_monge_ampere(us, eps_psh: float | None = None, check: bool = True) -> DiscreteMeasure:
    """Discrete dd^c u_1 ^ ... ^ dd^c u_n via the mixed discriminant of the Hessians."""
    us = list(us)
    if not us:
        raise ArityError("mixed Monge-Ampere needs n arguments, got 0")
    domain = us[0].domain
    if len(us) != domain.n:
        raise ArityError(f"mixed Monge-Ampere needs n={domain.n} arguments, got {len(us)}")
    for u in us[1:]:
        us[0]._check(u)
    mats = [hessian_matrices(domain, u.vec) for u in us]
    if check:
        for u, H in zip(us, mats):
            _psh_check(u, H, eps_psh)
    raw = normalization(domain.n) * mixed_discriminant(mats)
    return _clamped_measure(domain, raw)


def integrate(f, m: DiscreteMeasure) -> float:
    """Midpoint rule h^{2n} * sum_interior f * density."""
    if isinstance(f, GridFunction):
        if not f.domain.compatible(m.domain):
            raise DomainMismatchError("integrand and measure live on different domains")
        w = f.vec
    else:
        w = np.asarray(f, dtype=float)
        if w.shape == m.domain.shape:
            w = w[m.domain.interior_mask]
        elif w.ndim == 0:
            w = np.full(m.domain.num_interior, float(w))
        elif w.shape != (m.domain.num_interior,):
            raise DomainMismatchError(f"weight of shape {w.shape} does not fit the measure's domain")
    return float(m.domain.cell_volume * np.dot(w, m.density))
