"""Target measures mu: analytic presets, CSV densities and Monge-Ampere images."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import DiscreteMeasure, GridFunction, monge_ampere
from .families import PshRecipe

KINDS = ("constant", "radial-profile", "gaussian-bump", "csv-path", "ma-of")


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class MeasureSpec:
    """Recipe for a density on a grid.

    kind            params
    constant        (c,)
    radial-profile  (a0, a1, ...): density sum_k a_k |z|^(2k)
    gaussian-bump   (peak, sigma[, center coordinates...]): peak exp(-|x-c|^2 / (2 sigma^2))
    csv-path        uses ``path``
    ma-of           uses ``source``: a GridFunction, a PshRecipe, or a callable on points
    """

    kind: str
    params: tuple = ()
    normalization: float | None = None
    path: str | None = None
    source: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MeasureError(f"unknown measure kind {self.kind!r}; expected one of {KINDS}")


def realize(spec: MeasureSpec, domain) -> DiscreteMeasure:
    p = domain.points
    r2 = np.sum(p ** 2, axis=1)
    if spec.kind == "constant":
        c = float(spec.params[0]) if spec.params else 1.0
        if c < 0:
            raise MeasureError("constant density must be non-negative")
        mu = DiscreteMeasure(domain, np.full(domain.num_interior, c))
    elif spec.kind == "radial-profile":
        dens = np.polynomial.polynomial.polyval(r2, np.asarray(spec.params, dtype=float))
        if np.any(dens < 0):
            raise MeasureError("radial profile is negative somewhere in the domain")
        mu = DiscreteMeasure(domain, dens)
    elif spec.kind == "gaussian-bump":
        peak, sigma = float(spec.params[0]), float(spec.params[1])
        center = np.zeros(domain.dim)
        center[:len(spec.params) - 2] = spec.params[2:]
        if peak < 0 or sigma <= 0:
            raise MeasureError("gaussian bump needs peak >= 0 and sigma > 0")
        d2 = np.sum((p - center) ** 2, axis=1)
        mu = DiscreteMeasure(domain, peak * np.exp(-0.5 * d2 / sigma ** 2))
    elif spec.kind == "csv-path":
        from .io import read_field
        try:
            vals, _ = read_field(spec.path, domain)
        except ValueError as exc:
            raise MeasureError(str(exc)) from exc
        if np.any(vals < 0):
            raise MeasureError(f"negative density in {spec.path}")
        mu = DiscreteMeasure(domain, vals)
    else:  # ma-of
        src = spec.source
        if isinstance(src, PshRecipe):
            u = src.evaluate(domain)
        elif isinstance(src, GridFunction):
            u = src
        elif callable(src):
            u = GridFunction.from_function(domain, src)
        else:
            raise MeasureError("ma-of needs a GridFunction, PshRecipe or callable source")
        mu = monge_ampere(u)
    if spec.normalization is not None:
        mass = mu.total_mass
        if mass <= 0:
            raise MeasureError("cannot normalize a zero measure")
        mu = mu.scaled(spec.normalization / mass)
    return mu


def truncate(mu: DiscreteMeasure, level: float) -> DiscreteMeasure:
    """min(density, level)."""
    if level < 0:
        raise MeasureError("truncation level must be non-negative")
    return DiscreteMeasure(mu.domain, np.minimum(mu.density, level))


def gaussian_bump(domain, sigma: float, mass: float = 1.0) -> DiscreteMeasure:
    """Centred bump of width sigma normalized to the given discrete mass."""
    return realize(MeasureSpec("gaussian-bump", (1.0, sigma), normalization=mass), domain)
