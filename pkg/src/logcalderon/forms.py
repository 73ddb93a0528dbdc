"""Galerkin matrices of the bilinear forms over the cell-indicator basis.

Singular-integral route.  For indicators chi_i, chi_j of cells whose
centers differ by d = m h, every form depends on the cell pair only through
the overlap function g_m(y) = ∫ chi_i(x) chi_j(x + y) dx, a tensor product
of tent functions supported on d + [-h, h]^n.  Writing |y|^{-n} for the
log kernel,

    B0(chi_i, chi_j) = -c_n ∫ g_m(y) |y|^{-n} dy                (i != j)
    B0(chi_i, chi_i) =  c_n ∫_{|y|<=1} (h^n - g_0(y)) |y|^{-n} dy + rho_n h^n

because the cutoff difference term and the far-field term of the integral
representation combine into one integral for disjoint cells, and a single
cell (diameter < 1 since h < 1/2) has no far-field part.  The squared
difference form H and the fractional form use the same overlap integrals
with the cutoff kept (H) or the kernel |y|^{-n-2s} (fractional).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .constants import frac_constant, log_constants
from .grid import CellField, Grid
from .quadrature import (
    QuadratureError,
    integrate_box,
    integrate_corner,
    outer_square_log,
    outer_square_power,
)

FORM_KINDS = ("log_B0", "mass", "potential", "fractional_Bs", "abslog_gram", "h0_seminorm")


@dataclass(frozen=True)
class QuadratureSpec:
    gauss_order: int = 4
    subdivision_depth: int | None = None  # None -> 8 in 1D, 6 in 2D
    fourier_truncation_radius: float | None = None  # None -> 4000 in 1D, 400 in 2D
    fourier_points: int = 8  # Gauss nodes per half-period panel in xi
    origin_exclusion: float = 1e-4
    rel_tol: float = 1e-12

    def __post_init__(self):
        if self.gauss_order < 2:
            raise ValueError("gauss_order must be >= 2")
        if self.subdivision_depth is not None and self.subdivision_depth < 0:
            raise ValueError("subdivision_depth must be >= 0")
        if self.fourier_truncation_radius is not None and self.fourier_truncation_radius <= 1.0:
            raise ValueError("fourier_truncation_radius must exceed 1")
        if not 0.0 < self.origin_exclusion < 1.0:
            raise ValueError("origin_exclusion must lie in (0, 1)")
        if self.fourier_points < 2:
            raise ValueError("fourier_points must be >= 2")

    def depth(self, n: int) -> int:
        if self.subdivision_depth is not None:
            return self.subdivision_depth
        return 8 if n == 1 else 6

    def radius(self, n: int) -> float:
        if self.fourier_truncation_radius is not None:
            return float(self.fourier_truncation_radius)
        return 4000.0 if n == 1 else 400.0

    def resolved(self, n: int) -> "QuadratureSpec":
        return replace(self, subdivision_depth=self.depth(n), fourier_truncation_radius=self.radius(n))

    def to_dict(self) -> dict:
        return {
            "gauss_order": self.gauss_order,
            "subdivision_depth": self.subdivision_depth,
            "fourier_truncation_radius": self.fourier_truncation_radius,
            "fourier_points": self.fourier_points,
            "origin_exclusion": self.origin_exclusion,
            "rel_tol": self.rel_tol,
        }


@dataclass(frozen=True)
class SymmetricForm:
    kind: str
    matrix: np.ndarray
    quad: QuadratureSpec | None
    grid_hash: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FORM_KINDS:
            raise ValueError(f"unknown form kind {self.kind!r}")
        self.matrix.setflags(write=False)

    def block(self, rows, cols=None) -> np.ndarray:
        cols = rows if cols is None else cols
        return self.matrix[np.ix_(rows, cols)]

    def __add__(self, other: "SymmetricForm") -> np.ndarray:
        return self.matrix + other.matrix


# ---------------------------------------------------------------------------
# per-offset integrals


def _axis_intervals(m: int, h: float):
    return ((m - 1) * h, m * h), (m * h, (m + 1) * h)


def _pieces(m: tuple, h: float):
    """The 2^n sub-boxes of the overlap support; (lo, hi, cornered_at_origin)."""
    per_axis = [_axis_intervals(mk, h) for mk in m]
    out = []
    for choice in np.ndindex(*(2,) * len(m)):
        lo = np.array([per_axis[k][c][0] for k, c in enumerate(choice)])
        hi = np.array([per_axis[k][c][1] for k, c in enumerate(choice)])
        corner = all(lo[k] == 0.0 or hi[k] == 0.0 for k in range(len(m)))
        out.append((lo, hi, corner))
    return out


def _tent(m: tuple, h: float):
    shift = np.asarray(m, dtype=float) * h

    def P(y):
        return np.prod(np.clip(h - np.abs(y - shift), 0.0, None), axis=-1)

    return P


def _diag_poly(h: float, n: int):
    def P(y):
        return h**n - np.prod(h - np.abs(y), axis=-1)

    return P


def _over_u(P):
    return lambda y, u: P(y) / u


@lru_cache(maxsize=None)
def offset_integrals(m: tuple, h: float, alpha: float, quad: QuadratureSpec, want_inside: bool = True):
    """(total, inside) of ∫ g_m(y)|y|^{-alpha} dy over R^n and over |y| <= 1."""
    n = len(m)
    P = _tent(m, h)
    total = inside = 0.0
    atol = 1e-16 * h ** (2 * n)
    for lo, hi, corner in _pieces(m, h):
        if corner:
            val = integrate_corner(_over_u(P), lo, hi, alpha, order=quad.gauss_order)
            total += val
            inside += val
            continue
        res = integrate_box(
            P, lo, hi, alpha, "all", quad.gauss_order, quad.depth(n), quad.rel_tol, atol
        )
        if not res.converged and res.error > 1e-8 * abs(res.value):
            raise QuadratureError(
                f"no convergence for cell offset {m} (piece {lo.tolist()}..{hi.tolist()}): "
                f"error estimate {res.error:.3e} at depth {quad.depth(n)}"
            )
        total += res.value
        if not want_inside:
            continue
        near = np.linalg.norm(np.clip(0.0, lo, hi))
        far = np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi)))
        if near >= 1.0:
            continue
        if far <= 1.0:
            inside += res.value
            continue
        res_in = integrate_box(
            P, lo, hi, alpha, "inside", quad.gauss_order, quad.depth(n), quad.rel_tol, atol
        )
        inside += res_in.value
    return total, inside


@lru_cache(maxsize=None)
def diagonal_integral(h: float, n: int, alpha: float, quad: QuadratureSpec) -> float:
    """∫_{[-h,h]^n} (h^n - g_0(y)) |y|^{-alpha} dy (the in-square part of a self term)."""
    P = _diag_poly(h, n)
    return sum(
        integrate_corner(_over_u(P), lo, hi, alpha, order=quad.gauss_order)
        for lo, hi, _ in _pieces((0,) * n, h)
    )


# ---------------------------------------------------------------------------
# matrix assembly from offset tables


def _canonical_offsets(grid: Grid):
    """Canonical |offset| for every cell pair and the list of distinct ones."""
    idx = grid.cell_index
    diff = np.abs(idx[:, None, :] - idx[None, :, :])
    diff = -np.sort(-diff, axis=-1)  # descending: kernel is permutation symmetric
    flat = diff.reshape(-1, grid.n)
    uniq, inverse = np.unique(flat, axis=0, return_inverse=True)
    return uniq, inverse.reshape(grid.num_cells, grid.num_cells)


def _from_table(grid: Grid, entry) -> np.ndarray:
    uniq, inverse = _canonical_offsets(grid)
    table = np.array([entry(tuple(int(v) for v in m)) for m in uniq])
    return table[inverse]


def mass_matrix(grid: Grid) -> SymmetricForm:
    return SymmetricForm(
        "mass", np.eye(grid.num_cells) * grid.cell_volume, None, grid.grid_hash
    )


def assemble_log_form(grid: Grid, quad: QuadratureSpec | None = None) -> SymmetricForm:
    """B0 over the cell basis via singular-integral quadrature."""
    quad = (quad or QuadratureSpec()).resolved(grid.n)
    n, h = grid.n, grid.h
    const = log_constants(n)
    diag = const.c_n * (diagonal_integral(h, n, float(n), quad) + h**n * outer_square_log(h, n))
    diag += const.rho_n * h**n

    def entry(m):
        if not any(m):
            return diag
        total, _ = offset_integrals(m, h, float(n), quad, False)
        return -const.c_n * total

    K = _from_table(grid, entry)
    return SymmetricForm("log_B0", K, quad, grid.grid_hash, {"route": "singular"})


def assemble_h0_form(grid: Grid, quad: QuadratureSpec | None = None) -> SymmetricForm:
    """Squared-difference form restricted to |x - z| <= 1."""
    quad = (quad or QuadratureSpec()).resolved(grid.n)
    n, h = grid.n, grid.h
    diag = 2.0 * (diagonal_integral(h, n, float(n), quad) + h**n * outer_square_log(h, n))

    def entry(m):
        if not any(m):
            return diag
        _, inside = offset_integrals(m, h, float(n), quad, True)
        return -2.0 * inside

    H = _from_table(grid, entry)
    return SymmetricForm("h0_seminorm", H, quad, grid.grid_hash)


def assemble_fractional_form(grid: Grid, s: float, quad: QuadratureSpec | None = None) -> SymmetricForm:
    """Energy form of the fractional Laplacian of order s in (0, 1/2)."""
    if not 0.0 < s < 0.5:
        raise ValueError(
            f"s={s!r}: indicator basis has finite s-energy only for 0 < s < 1/2"
        )
    quad = (quad or QuadratureSpec()).resolved(grid.n)
    n, h = grid.n, grid.h
    C = frac_constant(n, s)
    alpha = n + 2.0 * s
    diag = C * (diagonal_integral(h, n, alpha, quad) + h**n * outer_square_power(h, n, s))

    def entry(m):
        if not any(m):
            return diag
        total, _ = offset_integrals(m, h, alpha, quad, False)
        return -C * total

    Ks = _from_table(grid, entry)
    return SymmetricForm("fractional_Bs", Ks, quad, grid.grid_hash, {"s": s})


def assemble_potential(grid: Grid, q: CellField, omega=None) -> SymmetricForm:
    """Diagonal matrix of (q chi_i, chi_j)_{L^2(Omega)}."""
    values = np.asarray(q.values, dtype=float)
    if values.shape != (grid.num_cells,):
        raise ValueError("potential must carry one value per grid cell")
    if omega is not None:
        outside = np.ones(grid.num_cells, dtype=bool)
        outside[np.asarray(omega)] = False
        if np.any(values[outside] != 0.0):
            raise ValueError("potential carries nonzero values outside Omega")
    elif q.support != "omega":
        raise ValueError(f"potential must be supported on Omega, got support '{q.support}'")
    return SymmetricForm("potential", np.diag(values * grid.cell_volume), None, grid.grid_hash)


def symmetry_defect(A: np.ndarray) -> float:
    """max |A_ij - A_ji| / max(1, |A_ij|)."""
    return float(np.max(np.abs(A - A.T) / np.maximum(1.0, np.abs(A))))
