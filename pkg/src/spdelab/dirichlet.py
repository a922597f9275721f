"""Dirichlet Laplacian on an interval: the concrete boundary-value frontend.

The negative second derivative with zero boundary values on (0, L) has
eigenpairs lambda_k = (k pi / L)^2, e_k = sqrt(2/L) sin(k pi x / L), so the
diagonal machinery applies verbatim once boundary data h is expanded in the
sine basis.  Flat data h = 1 has coefficients ~ 1/k (odd k only), which
places it in the fractional domain exactly for orders below 1/4: sweeping
the truncation across that threshold exhibits the boundary-condition
obstruction at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oracle import RegularityQuery
from .spectral import SpectralOperator, SpectralVector, make_operator, make_vector
from .sweeps import SweepVerdict, stability_verdict, truncation_sweep

__all__ = [
    "IntervalDomain",
    "GridFunction",
    "PROFILES",
    "dirichlet_operator",
    "sine_coefficients",
    "profile_coefficients",
    "threshold_scan",
]


@dataclass(frozen=True)
class IntervalDomain:
    """The interval (0, L)."""

    length: float

    def __post_init__(self):
        if self.length <= 0.0:
            raise ValueError(f"length must be > 0, got {self.length}")


@dataclass(frozen=True)
class GridFunction:
    """Samples of h at m+1 uniform points on [0, L], m >= 8 and even."""

    values: np.ndarray
    length: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 9:
            raise ValueError("need at least 9 samples (m >= 8)")
        if (values.size - 1) % 2 != 0:
            raise ValueError("need an even number of panels for Simpson quadrature")
        if not np.all(np.isfinite(values)):
            raise ValueError("samples must all be finite")
        if self.length <= 0.0:
            raise ValueError(f"length must be > 0, got {self.length}")
        object.__setattr__(self, "values", values)

    @property
    def panels(self) -> int:
        return self.values.size - 1


def dirichlet_operator(domain: IntervalDomain, n_modes: int) -> SpectralOperator:
    """First ``n_modes`` Dirichlet eigenvalues (k pi / L)^2 on (0, L)."""
    if n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes}")
    k = np.arange(1, n_modes + 1, dtype=np.float64)
    return make_operator((k * math.pi / domain.length) ** 2)


def _simpson_weights(n_panels: int, dx: float) -> np.ndarray:
    w = np.ones(n_panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (dx / 3.0)


def sine_coefficients(h: GridFunction, n_modes: int) -> SpectralVector:
    """Expand sampled data in the orthonormal sine basis by Simpson quadrature.

    Guards the resolution: at most panels/2 modes are representable on the
    sample grid.
    """
    if n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes}")
    if n_modes > h.panels // 2:
        raise ValueError(
            f"resolution guard: n_modes={n_modes} needs at least {2 * n_modes} panels, "
            f"grid has {h.panels}"
        )
    length = h.length
    s = np.linspace(0.0, length, h.panels + 1)
    w = _simpson_weights(h.panels, length / h.panels)
    k = np.arange(1, n_modes + 1, dtype=np.float64)
    basis = math.sqrt(2.0 / length) * np.sin(np.outer(k, s) * (math.pi / length))
    return make_vector(basis @ (w * h.values))


# Closed-form sine coefficients of the named analytic profiles on (0, L).
def _coeff_one(k: np.ndarray, length: float) -> np.ndarray:
    return math.sqrt(2.0 * length) * (1.0 - (-1.0) ** k) / (k * math.pi)


def _coeff_sine(k: np.ndarray, length: float) -> np.ndarray:
    out = np.zeros_like(k, dtype=np.float64)
    out[k == 1] = math.sqrt(length / 2.0)
    return out


def _coeff_hat(k: np.ndarray, length: float) -> np.ndarray:
    return 2.0 * math.sqrt(2.0) * length**1.5 * np.sin(k * math.pi / 2.0) / (k * math.pi) ** 2


PROFILES = {
    "one": (lambda s, length: np.ones_like(s), _coeff_one),
    "sine": (lambda s, length: np.sin(math.pi * s / length), _coeff_sine),
    "hat": (lambda s, length: np.minimum(s, length - s), _coeff_hat),
}


def profile_coefficients(name: str, domain: IntervalDomain, n_modes: int) -> SpectralVector:
    """Exact sine coefficients of a named profile ("one", "sine", "hat")."""
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
    k = np.arange(1, n_modes + 1, dtype=np.float64)
    return make_vector(PROFILES[name][1](k, domain.length))


def profile_samples(name: str, domain: IntervalDomain, n_panels: int) -> GridFunction:
    """Sample a named profile on a uniform grid (for quadrature cross-checks)."""
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
    s = np.linspace(0.0, domain.length, n_panels + 1)
    return GridFunction(values=PROFILES[name][0](s, domain.length), length=domain.length)


def threshold_scan(
    h,
    domain: IntervalDomain,
    alpha_list,
    horizon: float,
    n_list,
    tol: float,
    quad_tol: float = 1e-8,
) -> dict[float, SweepVerdict]:
    """Per-alpha stability verdicts of the seminorm moment across truncations.

    ``h`` is a named profile or a :class:`GridFunction`.  For each alpha the
    moment E[u]^2 in the square-root scale is swept over the truncations in
    ``n_list``; "finite-stable" requires the top two values to agree within
    ``tol`` relative, anything else is "diverging" with the fitted growth
    exponent of the sweep.
    """
    n_list = [int(n) for n in n_list]
    n_top = max(n_list)
    operator = dirichlet_operator(domain, n_top)
    if isinstance(h, str):
        vector = profile_coefficients(h, domain, n_top)
    elif isinstance(h, GridFunction):
        vector = sine_coefficients(h, n_top)
    else:
        raise TypeError("h must be a profile name or a GridFunction")

    verdicts = {}
    for alpha in alpha_list:
        query = RegularityQuery(alpha=float(alpha), horizon=horizon, theta=0.5)
        rows = truncation_sweep(operator, vector, query, n_list, tol=quad_tol)
        values = [row.seminorm_moment for row in rows]
        verdicts[float(alpha)] = stability_verdict(n_list, values, tol)
    return verdicts
