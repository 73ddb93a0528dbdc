"""Dimensional constants of the logarithmic and fractional Laplacians."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

SUPPORTED_DIMENSIONS = (1, 2)
EULER_GAMMA = float(np.euler_gamma)


@dataclass(frozen=True)
class DimensionalConstants:
    """Constants entering the integral representation of log(-Laplacian).

    ``c_n`` multiplies the |x-z|^{-n} kernel, ``rho_n`` is the zero-order
    coefficient and ``sphere_measure`` is |S^{n-1}|.
    """

    n: int
    c_n: float
    rho_n: float
    gamma: float
    sphere_measure: float


def _check_dimension(n: int) -> None:
    if n not in SUPPORTED_DIMENSIONS:
        raise ValueError(
            f"unsupported dimension n={n!r}; only n in {SUPPORTED_DIMENSIONS} is implemented"
        )


def sphere_measure(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def log_constants(n: int) -> DimensionalConstants:
    _check_dimension(n)
    c_n = math.pi ** (-n / 2) * float(special.gamma(n / 2))
    rho_n = 2.0 * math.log(2.0) + float(special.digamma(n / 2)) - EULER_GAMMA
    return DimensionalConstants(
        n=n, c_n=c_n, rho_n=rho_n, gamma=EULER_GAMMA, sphere_measure=sphere_measure(n)
    )


def frac_constant(n: int, s: float) -> float:
    """C_{n,s} = 4^s Gamma(n/2+s) / (pi^{n/2} |Gamma(-s)|)."""
    _check_dimension(n)
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order s={s!r} must lie in (0, 1)")
    # |Gamma(-s)| = Gamma(1-s)/s on (0,1); avoids the pole-adjacent evaluation
    abs_gamma_neg = float(special.gamma(1.0 - s)) / s
    return 4.0**s * float(special.gamma(n / 2 + s)) / (math.pi ** (n / 2) * abs_gamma_neg)


def log_symbol(xi) -> float:
    """Fourier symbol 2 log|xi| of the logarithmic Laplacian."""
    norm = float(np.linalg.norm(np.atleast_1d(np.asarray(xi, dtype=float))))
    if norm == 0.0:
        raise ValueError("log symbol is singular at xi = 0")
    return 2.0 * math.log(norm)
