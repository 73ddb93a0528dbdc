"""Dirichlet spectrum of the discrete log-Laplacian and operator-level checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .forms import QuadratureSpec, assemble_fractional_form, assemble_log_form, mass_matrix
from .grid import Grid, build_grid
from .solver import as_matrix


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray  # ascending
    lambda0_margin: float  # lambda_1 + min_Omega q
    condition_satisfied: bool
    min_q: float = 0.0
    block_min_eigenvalue: float | None = None  # of the Omega block of K + Q
    block_spd: bool | None = None

    @property
    def lambda1(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def spectral_gap(self) -> float | None:
        return float(self.eigenvalues[1] - self.eigenvalues[0]) if self.eigenvalues.size > 1 else None

    @property
    def consistent(self) -> bool | None:
        """SPD status of the Omega block agrees with the eigenvalue condition."""
        if self.block_spd is None:
            return None
        return self.block_spd == self.condition_satisfied

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "lambda1": self.lambda1,
            "spectral_gap": self.spectral_gap,
            "lambda0_margin": self.lambda0_margin,
            "condition_satisfied": self.condition_satisfied,
            "min_q": self.min_q,
            "block_min_eigenvalue": self.block_min_eigenvalue,
            "block_spd": self.block_spd,
        }


def _generalized(K: np.ndarray, mass_diag: np.ndarray, vectors: bool = False):
    # diagonal mass: the Cholesky reduction is a symmetric diagonal scaling
    s = 1.0 / np.sqrt(mass_diag)
    C = K * s[:, None] * s[None, :]
    if vectors:
        w, V = linalg.eigh(C)
        return w, V * s[:, None]
    return linalg.eigvalsh(C), None


def dirichlet_spectrum(K, mass, omega, k: int | None = None, min_q: float = 0.0) -> SpectrumReport:
    """Smallest k generalized eigenvalues of K_OmegaOmega against the Omega mass."""
    omega = np.asarray(omega, dtype=int)
    if k is not None and not 1 <= k <= omega.size:
        raise ValueError(f"k={k} must lie in [1, {omega.size}]")
    K = as_matrix(K)
    m = np.diag(as_matrix(mass))[omega]
    if np.any(m <= 0.0):
        raise ValueError("mass matrix must be positive on Omega")
    w, _ = _generalized(K[np.ix_(omega, omega)], m)
    w = w[: k or omega.size]
    margin = float(w[0]) + float(min_q)
    return SpectrumReport(eigenvalues=w, lambda0_margin=margin, condition_satisfied=margin > 0.0, min_q=float(min_q))


def first_eigenpair(K, mass, omega) -> tuple[float, np.ndarray]:
    omega = np.asarray(omega, dtype=int)
    K = as_matrix(K)
    w, V = _generalized(K[np.ix_(omega, omega)], np.diag(as_matrix(mass))[omega], vectors=True)
    return float(w[0]), V[:, 0]


def coercivity_check(K, Q, omega, mass=None, grid: Grid | None = None) -> SpectrumReport:
    """Eigenvalue condition lambda_1 + min q > 0 next to the SPD status of (K + Q)_OmegaOmega."""
    omega = np.asarray(omega, dtype=int)
    K, Q = as_matrix(K), as_matrix(Q)
    if mass is None:
        if grid is None:
            raise ValueError("need the mass matrix or the grid")
        mass = mass_matrix(grid)
    m = np.diag(as_matrix(mass))
    q = np.diag(Q)[omega] / m[omega]
    report = dirichlet_spectrum(K, mass, omega, min_q=float(q.min()))
    block = (K + Q)[np.ix_(omega, omega)]
    try:
        linalg.cholesky(block, lower=True)
        spd = True
    except linalg.LinAlgError:
        spd = False
    lam_block = float(linalg.eigvalsh(block)[0])
    return SpectrumReport(
        eigenvalues=report.eigenvalues,
        lambda0_margin=report.lambda0_margin,
        condition_satisfied=report.condition_satisfied,
        min_q=report.min_q,
        block_min_eigenvalue=lam_block,
        block_spd=spd,
    )


def rayleigh_audit(K, mass, omega, samples: int = 1000, seed: int = 0) -> dict:
    """lambda_1 against Rayleigh quotients of random Omega-supported vectors."""
    omega = np.asarray(omega, dtype=int)
    K = as_matrix(K)[np.ix_(omega, omega)]
    m = np.diag(as_matrix(mass))[omega]
    w, V = _generalized(K, m, vectors=True)
    lam, v = float(w[0]), V[:, 0]
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((samples, omega.size))
    rq = np.einsum("ij,jk,ik->i", X, K, X) / np.einsum("ij,j,ij->i", X, m, X)
    rq_eig = float(v @ K @ v / (v @ (m * v)))
    return {
        "lambda1": lam,
        "min_random_quotient": float(rq.min()),
        "eigenvector_quotient": rq_eig,
        "violations": int(np.sum(rq < lam - 1e-8 * max(1.0, abs(lam)))),
    }


def fractional_expansion_check(grid: Grid, s_list, quad: QuadratureSpec | None = None) -> list[dict]:
    """max-entry error of (K_s - M)/s against K_log for each s."""
    K = assemble_log_form(grid, quad).matrix
    M = mass_matrix(grid).matrix
    rows = []
    for s in s_list:
        Ks = assemble_fractional_form(grid, s, quad).matrix
        D = (Ks - M) / s
        rows.append(
            {
                "s": float(s),
                "error": float(np.max(np.abs(D - K))),
                "asymmetry": float(np.max(np.abs(D - D.T))),
            }
        )
    for prev, cur in zip(rows[:-1], rows[1:]):
        cur["ratio"] = cur["error"] / prev["error"]
    return rows


def single_cell_fractional_limit(h: float, s: float) -> float:
    """(C_{1,s} h^{1-2s} / (s(1-2s)) - h) / s from the closed form."""
    from .constants import frac_constant

    Ks = frac_constant(1, s) * h ** (1.0 - 2.0 * s) / (s * (1.0 - 2.0 * s))
    return (Ks - h) / s


def scaling_law_check(
    half_length: float = 0.5,
    cells: int = 16,
    factor: int = 2,
    n: int = 1,
    mode: str = "dilated",
    quad: QuadratureSpec | None = None,
) -> dict:
    """lambda_1(R Omega) against lambda_1(Omega) - 2 log R for a cube Omega.

    ``mode="dilated"`` gives R Omega the same number of cells, so its grid
    is the dilation of the grid of Omega and any gap is quadrature error.
    ``mode="same_h"`` keeps h and multiplies the cell count by R, so the
    gap also contains the discretization bias of the coarser domain.
    """
    if mode not in ("dilated", "same_h"):
        raise ValueError(f"unknown mode {mode!r}")
    scaled_cells = cells if mode == "dilated" else int(factor) * cells
    out = {}
    for tag, L, N in (("omega", half_length, cells), ("scaled", factor * half_length, scaled_cells)):
        box = [-L, L] if n == 1 else [[-L] * n, [L] * n]
        g = build_grid(box, N if n == 1 else [N] * n)
        K = assemble_log_form(g, quad)
        rep = dirichlet_spectrum(K, mass_matrix(g), np.arange(g.num_cells), k=1)
        out[tag] = rep.lambda1
    predicted = out["omega"] - 2.0 * math.log(factor)
    gap = abs(out["scaled"] - predicted)
    return {
        "mode": mode,
        "lambda1_omega": out["omega"],
        "lambda1_scaled": out["scaled"],
        "predicted": predicted,
        "abs_error": gap,
        "relative_error": gap / max(1.0, abs(out["omega"])),
    }


def norm_equivalence_witness(G, H, omega) -> dict:
    """Generalized eigenvalues of G against H on Omega-supported vectors."""
    omega = np.asarray(omega, dtype=int)
    Go = as_matrix(G)[np.ix_(omega, omega)]
    Ho = as_matrix(H)[np.ix_(omega, omega)]
    w = linalg.eigh(Go, Ho, eigvals_only=True)
    C = float(max(w[-1], 1.0 / w[0]))
    return {"min": float(w[0]), "max": float(w[-1]), "C": C}
