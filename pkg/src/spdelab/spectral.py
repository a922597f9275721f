"""Diagonal model of a positive, invertible, self-adjoint operator.

The operator is represented by its (finite, ascending) eigenvalue sequence
``lambda_1 <= ... <= lambda_N`` with spectral gap ``delta = lambda_1 > 0``.
Data vectors are coefficient sequences in the same eigenbasis.  Fractional
powers, the semigroup ``exp(-t A)`` and membership classification for
power-law coefficient families are all elementary in this representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpectralOperator",
    "SpectralVector",
    "PowerFamily",
    "Classification",
    "make_operator",
    "make_vector",
    "fractional_norm",
    "semigroup_apply",
    "classify_power_family",
]


@dataclass(frozen=True)
class SpectralOperator:
    """Eigenvalues of the operator, sorted ascending, all strictly positive."""

    eigenvalues: np.ndarray

    @property
    def gap(self) -> float:
        """Spectral gap delta: the minimum eigenvalue."""
        return float(self.eigenvalues[0])

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    def truncated(self, n_modes: int) -> "SpectralOperator":
        """Operator restricted to the first ``n_modes`` eigenvalues."""
        if not 1 <= n_modes <= self.n_modes:
            raise ValueError(f"n_modes must be in [1, {self.n_modes}], got {n_modes}")
        return SpectralOperator(self.eigenvalues[:n_modes])


@dataclass(frozen=True)
class SpectralVector:
    """Coefficients of a data vector in the operator's eigenbasis."""

    coefficients: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.coefficients.size

    def truncated(self, n_modes: int) -> "SpectralVector":
        if not 1 <= n_modes <= self.n_modes:
            raise ValueError(f"n_modes must be in [1, {self.n_modes}], got {n_modes}")
        return SpectralVector(self.coefficients[:n_modes])

    def scaled(self, factor: float) -> "SpectralVector":
        return SpectralVector(self.coefficients * float(factor))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


def make_operator(eigenvalues) -> SpectralOperator:
    """Build a :class:`SpectralOperator` from a sequence of positive reals.

    The sequence is sorted ascending; the gap is derived, never supplied.
    Rejects empty, non-finite, or non-positive input.
    """
    arr = np.atleast_1d(np.asarray(eigenvalues, dtype=np.float64))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("eigenvalues must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("eigenvalues must all be finite")
    if np.any(arr <= 0.0):
        raise ValueError("eigenvalues must all be strictly positive")
    return SpectralOperator(_freeze(np.sort(arr)))


def make_vector(coefficients) -> SpectralVector:
    """Build a :class:`SpectralVector`, rejecting non-finite entries."""
    arr = np.atleast_1d(np.asarray(coefficients, dtype=np.float64))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("coefficients must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coefficients must all be finite")
    return SpectralVector(_freeze(arr))


def check_paired(operator: SpectralOperator, vector: SpectralVector) -> None:
    """Operations pairing an operator with a vector require equal lengths."""
    if operator.n_modes != vector.n_modes:
        raise ValueError(
            f"length mismatch: operator has {operator.n_modes} modes, "
            f"vector has {vector.n_modes}"
        )


def fractional_norm(operator: SpectralOperator, vector: SpectralVector, alpha: float) -> float:
    """Homogeneous fractional-power norm ``(sum_k lambda_k^{2 alpha} x_k^2)^{1/2}``.

    ``alpha = 0`` gives the plain Euclidean norm of the coefficients.  The
    homogeneous norm is equivalent to the graph norm because the operator is
    invertible (gap > 0).
    """
    check_paired(operator, vector)
    if alpha < 0.0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    lam = operator.eigenvalues
    x = vector.coefficients
    terms = lam ** (2.0 * alpha) * x * x
    return math.sqrt(math.fsum(terms.tolist()))


def semigroup_apply(operator: SpectralOperator, t: float, vector: SpectralVector) -> SpectralVector:
    """Apply ``exp(-t A)`` to the coefficient vector; identity at ``t = 0``."""
    check_paired(operator, vector)
    if t < 0.0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0.0:
        return SpectralVector(vector.coefficients.copy())
    return SpectralVector(vector.coefficients * np.exp(-operator.eigenvalues * t))


@dataclass(frozen=True)
class PowerFamily:
    """Power-law test family ``x_k = c k^{-beta}`` against ``lambda_k = a k^{gamma}``."""

    amplitude: float  # c > 0
    coef_exponent: float  # beta >= 0
    eig_exponent: float = 2.0  # gamma > 0
    eig_scale: float = 1.0  # a > 0

    def __post_init__(self):
        if self.amplitude <= 0.0:
            raise ValueError("amplitude must be > 0")
        if self.coef_exponent < 0.0:
            raise ValueError("coef_exponent must be >= 0")
        if self.eig_exponent <= 0.0:
            raise ValueError("eig_exponent must be > 0")
        if self.eig_scale <= 0.0:
            raise ValueError("eig_scale must be > 0")

    def realize(self, n_modes: int) -> tuple[SpectralOperator, SpectralVector]:
        """Materialize the family at finite truncation ``n_modes``."""
        k = np.arange(1, n_modes + 1, dtype=np.float64)
        operator = make_operator(self.eig_scale * k**self.eig_exponent)
        vector = make_vector(self.amplitude * k**-self.coef_exponent)
        return operator, vector


@dataclass(frozen=True)
class Classification:
    """Membership verdict for a power family in the fractional domain.

    ``growth_exponent`` is the partial-sum growth exponent
    ``2 alpha gamma - 2 beta + 1`` (only set for nonmembers); it is the
    target slope for log-log regression of truncation sweeps.
    ``logarithmic`` marks the borderline exponent-zero case where partial
    sums grow like ``log N``.
    """

    member: bool
    growth_exponent: float | None = None
    logarithmic: bool = False


def classify_power_family(family: PowerFamily, alpha: float) -> Classification:
    """Classify ``x_k = c k^{-beta}`` as member/nonmember of the alpha domain.

    Membership is the summability of ``sum_k lambda_k^{2 alpha} x_k^2``,
    a p-series with exponent ``2 alpha gamma - 2 beta``.
    """
    if not 0.0 <= alpha < 0.5:
        raise ValueError(f"alpha must be in [0, 1/2), got {alpha}")
    exponent = 2.0 * alpha * family.eig_exponent - 2.0 * family.coef_exponent
    if exponent < -1.0:
        return Classification(member=True)
    growth = exponent + 1.0
    return Classification(member=False, growth_exponent=growth, logarithmic=(growth == 0.0))
