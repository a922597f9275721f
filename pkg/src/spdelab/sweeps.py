"""Truncation sweeps and divergence diagnostics.

All infinite-dimensional membership statements are probed at finite
truncation: the moments are evaluated on the first N modes for an ascending
list of N, and the verdict is read off the sweep.  "finite-stable" means the
top two values agree to the requested relative tolerance; otherwise the
sweep is reported as "diverging" together with a fitted growth exponent.

A nonmember power family has partial sums A N^p + B with an O(1) offset B,
so the exponent is fitted on the log of successive sweep increments (which
kills the offset) rather than on the raw values; for convergent sweeps the
same fit returns a negative slope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oracle import RegularityQuery, l2_second_moment
from .quadrature import seminorm_mode_factors
from .spectral import SpectralOperator, SpectralVector, check_paired, fractional_norm

__all__ = ["SweepRow", "SweepVerdict", "truncation_sweep", "growth_slope", "stability_verdict"]

FINITE_STABLE = "finite-stable"
DIVERGING = "diverging"


@dataclass(frozen=True)
class SweepRow:
    """Moments of the first ``n_modes`` modes for one (alpha, theta) query."""

    n_modes: int
    seminorm_moment: float
    l2_moment: float
    frac_norm: float

    @property
    def total_moment(self) -> float:
        return self.seminorm_moment + self.l2_moment

    @property
    def ratio(self) -> float:
        if self.frac_norm == 0.0:
            return math.nan
        return math.sqrt(self.total_moment) / self.frac_norm


@dataclass(frozen=True)
class SweepVerdict:
    status: str  # FINITE_STABLE or DIVERGING
    top_rel_diff: float
    slope: float | None
    tol: float


def truncation_sweep(
    operator: SpectralOperator,
    vector: SpectralVector,
    query: RegularityQuery,
    n_list,
    tol: float = 1e-8,
) -> list[SweepRow]:
    """Evaluate the seminorm/L^2 moments at each truncation in ``n_list``.

    The per-mode singular factors are computed once for the largest
    truncation; partial sums are re-reduced per truncation with exact
    summation so each row equals a from-scratch evaluation.
    """
    check_paired(operator, vector)
    n_list = [int(n) for n in n_list]
    if not n_list or sorted(n_list) != n_list:
        raise ValueError("n_list must be a nonempty ascending list")
    if n_list[-1] > operator.n_modes:
        raise ValueError(
            f"n_list top {n_list[-1]} exceeds available modes {operator.n_modes}"
        )
    lam = operator.eigenvalues
    x = vector.coefficients
    factors = seminorm_mode_factors(lam, query.alpha, query.horizon, tol)
    sem_terms = lam ** (2.0 * query.theta - 1.0) * x * x * factors

    rows = []
    for n in n_list:
        head_op = operator.truncated(n)
        head_vec = vector.truncated(n)
        rows.append(
            SweepRow(
                n_modes=n,
                seminorm_moment=math.fsum(sem_terms[:n].tolist()),
                l2_moment=l2_second_moment(head_op, head_vec, query.horizon, query.theta),
                frac_norm=fractional_norm(head_op, head_vec, query.alpha),
            )
        )
    return rows


def growth_slope(n_list, values) -> float | None:
    """Log-log slope of the sweep's growth, fitted on successive increments.

    For values A N^p + B the increments between consecutive truncations
    scale like N^p exactly, so regressing log(increment) on log(N) recovers
    the partial-sum growth exponent p without the offset bias that a fit of
    the raw values carries.  Convergent sweeps yield a negative slope.
    Returns None when fewer than two positive increments exist.
    """
    n = np.asarray(n_list, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    inc = np.diff(v)
    base = n[:-1]
    keep = inc > 0.0
    if keep.sum() < 2:
        return None
    slope = np.polyfit(np.log(base[keep]), np.log(inc[keep]), 1)[0]
    return float(slope)


def stability_verdict(n_list, values, tol: float) -> SweepVerdict:
    """Read the sweep verdict off its top two truncations."""
    if len(values) < 2:
        raise ValueError("need at least two truncations for a verdict")
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    top, prev = values[-1], values[-2]
    rel = abs(top - prev) / abs(top) if top != 0.0 else 0.0
    status = FINITE_STABLE if rel < tol else DIVERGING
    return SweepVerdict(
        status=status,
        top_rel_diff=rel,
        slope=growth_slope(n_list, values),
        tol=tol,
    )
