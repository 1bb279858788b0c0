"""Plurisubharmonic envelopes P(phi) = sup{w psh, w <= phi} on the grid.

The node value enters every second difference affinely, ``H(w) = H0 - w_p C``
with ``C`` positive definite, so the largest value keeping the node's Hessian
positive semidefinite is the smallest generalized eigenvalue of ``(H0, C)``.
Sweeps set each node to ``min(phi_p, that value)`` colour by colour
(projected Gauss-Seidel / SOR).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import GridFunction, hessian_matrices, min_eigenvalue, stencil
from .grid import NodeSet


class EnvelopeError(RuntimeError):
    def __init__(self, message, residual_trace):
        super().__init__(message)
        self.residual_trace = list(residual_trace)


@dataclass(eq=False)
class EnvelopeResult:
    w: GridFunction
    contact_mask: np.ndarray = field(repr=False)  # full-grid boolean
    iterations: int
    residual: float
    eps_env: float


def default_eps_env(phi: GridFunction) -> float:
    scale = max(phi.sup_norm, 1e-300)
    return 1e-8 * scale / phi.domain.h ** 2


class _ColorBlocks:
    """Row slices of the Hessian operators per colour class."""

    def __init__(self, st):
        self.blocks = []
        for c in range(st.num_colors):
            rows = np.flatnonzero(st.colors == c)
            diag = [op[rows] for op in st.hess_diag]
            off = {jk: (re[rows], im[rows]) for jk, (re, im) in st.hess_off.items()}
            self.blocks.append((rows, diag, off, st.self_coef[rows]))


def _blocks(st) -> _ColorBlocks:
    cb = st.__dict__.get("_color_blocks")
    if cb is None:
        cb = _ColorBlocks(st)
        st.__dict__["_color_blocks"] = cb
    return cb


def _block_hessian(vec, diag, off, m, n):
    H = np.zeros((m, n, n), dtype=complex)
    for j, op in enumerate(diag):
        H[:, j, j] = op @ vec
    for (j, k), (re, im) in off.items():
        H[:, j, k] = (re @ vec) + 1j * (im @ vec)
        H[:, k, j] = np.conj(H[:, j, k])
    return H


def max_feasible_value(H0: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Largest s with H0 - s C positive semidefinite (C positive definite)."""
    n = H0.shape[-1]
    if n == 1:
        return H0[:, 0, 0].real / C[:, 0, 0].real
    if n == 2:
        a11, a22, a12 = H0[:, 0, 0].real, H0[:, 1, 1].real, H0[:, 0, 1]
        c11, c22, c12 = C[:, 0, 0].real, C[:, 1, 1].real, C[:, 0, 1]
        qa = c11 * c22 - np.abs(c12) ** 2
        qb = a11 * c22 + a22 * c11 - 2.0 * np.real(a12 * np.conj(c12))
        qc = a11 * a22 - np.abs(a12) ** 2
        disc = np.sqrt(np.maximum(qb * qb - 4.0 * qa * qc, 0.0))
        return (qb - disc) / (2.0 * qa)
    # general n: smallest eigenvalue of C^{-1/2} H0 C^{-1/2}
    Lc = np.linalg.cholesky(C)
    Li = np.linalg.inv(Lc)
    S = Li @ H0 @ np.conj(np.swapaxes(Li, -1, -2))
    return np.linalg.eigvalsh(S)[:, 0]


def psh_violation(domain, vec) -> float:
    lam = min_eigenvalue(hessian_matrices(domain, vec))
    return float(max(-lam.min(initial=0.0), 0.0))


def default_omega(domain) -> float:
    if domain.n == 1:
        return 2.0 / (1.0 + np.sin(np.pi * domain.h / 2.0))
    return 1.0


def psh_projection(phi: GridFunction, eps_env: float | None = None, max_sweeps: int = 100_000,
                   omega: float | None = None, start: str = "minorant") -> EnvelopeResult:
    """Largest discrete psh function below ``min(phi, 0)``.

    ``start='minorant'`` begins from ``M * rho`` (rho the domain's defining
    function) and sweeps upward; ``start='obstacle'`` begins from the capped
    obstacle itself.  Stops when the largest update is below ``eps_env * h^2``
    and the psh violation is below ``eps_env / 2``.
    """
    domain = phi.domain
    st = stencil(domain)
    n, h2 = domain.n, domain.h ** 2
    obstacle = np.minimum(phi.vec, 0.0)
    capped = GridFunction(domain, obstacle)
    if eps_env is None:
        eps_env = default_eps_env(capped) if capped.sup_norm > 0 else 1e-8 / h2
    if omega is None:
        omega = default_omega(domain)
    target = 0.5 * eps_env
    full = np.ones(domain.shape, dtype=bool) & domain.interior_mask

    if capped.sup_norm == 0.0 or psh_violation(domain, obstacle) <= target:
        return EnvelopeResult(capped, full.copy(), 0, psh_violation(domain, obstacle), eps_env)

    if start == "minorant":
        rho = domain.defining_function(domain.points)
        M = float(np.max(obstacle / rho))
        w = M * rho
    elif start == "obstacle":
        w = obstacle.copy()
    else:
        raise ValueError(f"unknown start {start!r}")

    blocks = _blocks(st).blocks
    trace = []
    for sweep in range(1, max_sweeps + 1):
        delta = 0.0
        for rows, diag, off, C in blocks:
            H = _block_hessian(w, diag, off, rows.size, n)
            wr = w[rows]
            H0 = H + wr[:, None, None] * C
            s_hi = max_feasible_value(H0, C)
            new = np.minimum(obstacle[rows], wr + omega * (s_hi - wr))
            delta = max(delta, float(np.max(np.abs(new - wr), initial=0.0)))
            w[rows] = new
        if delta < eps_env * h2 or sweep % 50 == 0:
            viol = psh_violation(domain, w)
            trace.append(viol + delta)
            if delta < eps_env * h2 and viol <= target:
                break
    else:
        raise EnvelopeError(f"envelope did not converge in {max_sweeps} sweeps "
                            f"(last update {delta:.3e})", trace)

    residual = psh_violation(domain, w) + float(np.max(w - obstacle, initial=0.0))
    contact = np.zeros(domain.shape, dtype=bool)
    contact[domain.interior_mask] = np.abs(w - obstacle) <= 10 * eps_env * h2
    return EnvelopeResult(GridFunction(domain, w), contact, sweep, residual, eps_env)


def project(phi: GridFunction, **kw) -> GridFunction:
    return psh_projection(phi, **kw).w


def relative_extremal(K: NodeSet, **kw) -> GridFunction:
    """Discrete relative extremal function h_K: envelope of -1 on K, 0 elsewhere."""
    if K.count == 0:
        raise ValueError("relative extremal function needs a non-empty compact set")
    obstacle = np.where(K.mask, -1.0, 0.0)
    return psh_projection(GridFunction(K.domain, obstacle), **kw).w


def lipschitz_deviation(u: GridFunction, v: GridFunction, t: float, s: float, **kw) -> float:
    """max over nodes of |P(u+tv) - P(u+sv)| - |t-s| (-v); the bound says <= 0."""
    if t >= 0 or s >= 0:
        raise ValueError("lipschitz_deviation needs t < 0 and s < 0")
    if t == s:
        return 0.0
    pt = project(u + t * v, **kw)
    ps = project(u + s * v, **kw)
    return float(np.max(np.abs(pt.vec - ps.vec) - abs(t - s) * (-v.vec)))
