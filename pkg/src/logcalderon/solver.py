"""Exterior-value Dirichlet problem and minimal-norm extensions.

With interior cells I (Omega) and exterior cells E (everything else), the
discrete weak problem B_q(u, chi_i) = (F, chi_i) for i in I with u = f on E
reads

    A_II u_I = M_II F_I - A_IE f_E,     A = K + Q.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg

from .forms import SymmetricForm
from .grid import CellField, Grid

EIGENVALUE_CONDITION = "lambda_1(Omega) + q(x) >= lambda_0 > 0"


class CoercivityError(np.linalg.LinAlgError):
    """The Omega block of K + Q is not positive definite."""

    def __init__(self, message: str, inertia: tuple[int, int, int]):
        super().__init__(message)
        self.inertia = inertia


def as_matrix(A) -> np.ndarray:
    return A.matrix if isinstance(A, SymmetricForm) else np.asarray(A, dtype=float)


def inertia(A: np.ndarray, tol: float | None = None) -> tuple[int, int, int]:
    """(positive, zero, negative) eigenvalue counts from a symmetric LDL^T."""
    _, D, _ = linalg.ldl(A, lower=True)
    # D is block diagonal with 1x1 and 2x2 blocks; their eigenvalues carry the inertia
    ev = linalg.eigvalsh(D)
    if tol is None:
        tol = 1e-13 * max(1.0, float(np.max(np.abs(ev))))
    return int(np.sum(ev > tol)), int(np.sum(np.abs(ev) <= tol)), int(np.sum(ev < -tol))


class InteriorFactor:
    """Cholesky factor of A_II, shared read-only across solves."""

    def __init__(self, A_II: np.ndarray):
        self.size = A_II.shape[0]
        try:
            self._cho = linalg.cho_factor(A_II, lower=True, check_finite=True)
        except linalg.LinAlgError:
            pos, zero, neg = inertia(A_II)
            raise CoercivityError(
                f"Omega block of K + Q is not positive definite (inertia +{pos}/0:{zero}/-{neg}); "
                f"the eigenvalue condition {EIGENVALUE_CONDITION} is violated",
                (pos, zero, neg),
            ) from None

    def solve(self, b: np.ndarray) -> np.ndarray:
        return linalg.cho_solve(self._cho, b)

    def half_solve(self, b: np.ndarray) -> np.ndarray:
        """L^{-1} b for the lower Cholesky factor L."""
        return linalg.solve_triangular(self._cho[0], b, lower=True)


@dataclass(frozen=True)
class SolveReport:
    u: CellField
    linear_residual: float
    energy_norm: float | None
    data_norms: tuple[float, float | None]
    stability_ratio: float | None

    def to_dict(self) -> dict:
        return {
            "u": self.u.values.tolist(),
            "linear_residual": self.linear_residual,
            "energy_norm": self.energy_norm,
            "data_norms": list(self.data_norms),
            "stability_ratio": self.stability_ratio,
        }


class DirichletProblem:
    """Operator A = K + Q split along Omega and its complement."""

    def __init__(self, grid: Grid, K, Q, omega):
        self.grid = grid
        self.A = as_matrix(K) + as_matrix(Q)
        self.omega = np.asarray(omega, dtype=int)
        mask = np.ones(grid.num_cells, dtype=bool)
        mask[self.omega] = False
        self.exterior = np.flatnonzero(mask)

    @cached_property
    def factor(self) -> InteriorFactor:
        return InteriorFactor(self.A[np.ix_(self.omega, self.omega)])

    def rhs(self, f: np.ndarray, F: np.ndarray) -> np.ndarray:
        I, E = self.omega, self.exterior
        b = self.grid.cell_volume * F[I]
        return b - self.A[np.ix_(I, E)] @ f[E]

    def solve_values(self, f: np.ndarray, F: np.ndarray | None = None) -> tuple[np.ndarray, float]:
        """Full coefficient vector u and the relative linear residual."""
        f = np.asarray(f, dtype=float)
        F = np.zeros_like(f) if F is None else np.asarray(F, dtype=float)
        b = self.rhs(f, F)
        u_I = self.factor.solve(b)
        u = f.copy()
        u[self.omega] = u_I
        A_II = self.A[np.ix_(self.omega, self.omega)]
        res = float(np.linalg.norm(A_II @ u_I - b))
        scale = float(np.linalg.norm(b))
        return u, (res / scale if scale > 0 else res)


def _check_supports(problem: DirichletProblem, f: CellField, F: CellField) -> None:
    if np.any(f.values[problem.omega] != 0.0):
        raise ValueError("exterior data f carries values on Omega cells")
    if np.any(F.values[problem.exterior] != 0.0):
        raise ValueError("source F carries values outside Omega")


def minimal_extension(G, f: CellField, omega) -> CellField:
    """Extension of f across Omega with the least discrete H(R^n) norm.

    Solves G_II f~_I = -G_IE f_E, so the Omega rows of G f~ vanish.
    """
    G = as_matrix(G)
    omega = np.asarray(omega, dtype=int)
    values = f.values.copy()
    values[omega] = 0.0
    rest = np.setdiff1d(np.arange(values.size), omega)
    rhs = -G[np.ix_(omega, rest)] @ values[rest]
    values[omega] = linalg.solve(G[np.ix_(omega, omega)], rhs, assume_a="pos")
    mask = f.mask.copy()
    mask[omega] = True
    return CellField(values, "extension", mask)


def g_norm(G, v: np.ndarray) -> float:
    G = as_matrix(G)
    return float(np.sqrt(max(v @ G @ v, 0.0)))


def solve_dirichlet(
    grid: Grid,
    K,
    Q,
    f: CellField,
    F: CellField,
    omega,
    G=None,
    tol: float = 1e-10,
    problem: DirichletProblem | None = None,
) -> SolveReport:
    """Weak solution of (L + q) u = F in Omega with u = f outside Omega.

    When the Gram matrix ``G`` is supplied the report carries the energy
    norm of u, the trace norm of f (via its minimal extension) and their
    stability ratio.
    """
    problem = problem or DirichletProblem(grid, K, Q, omega)
    _check_supports(problem, f, F)
    u, res = problem.solve_values(f.values, F.values)
    if res > tol:
        raise np.linalg.LinAlgError(f"linear residual {res:.2e} exceeds tolerance {tol:.1e}")
    F_norm = float(np.sqrt(grid.cell_volume * np.sum(F.values[problem.omega] ** 2)))
    energy = f_norm = ratio = None
    if G is not None:
        energy = g_norm(G, u)
        f_norm = g_norm(G, minimal_extension(G, f, problem.omega).values)
        denom = F_norm + f_norm
        ratio = energy / denom if denom > 0 else 0.0
    return SolveReport(
        u=CellField(u, "all", np.ones(grid.num_cells, dtype=bool)),
        linear_residual=res,
        energy_norm=energy,
        data_norms=(F_norm, f_norm),
        stability_ratio=ratio,
    )


def stability_audit(
    grid: Grid, K, Q, G, omega, data_cells, draws: int = 100, seed: int = 0
) -> dict:
    """Largest observed ‖u‖_H / (‖F‖ + ‖f‖_T) over random data."""
    rng = np.random.default_rng(seed)
    problem = DirichletProblem(grid, K, Q, omega)
    data_cells = np.asarray(data_cells, dtype=int)
    ratios = []
    for _ in range(draws):
        f = CellField.on(grid, data_cells, rng.standard_normal(data_cells.size), "exterior")
        F = CellField.on(grid, problem.omega, rng.standard_normal(problem.omega.size), "omega")
        rep = solve_dirichlet(grid, K, Q, f, F, omega, G=G, problem=problem)
        ratios.append(rep.stability_ratio)
    ratios = np.asarray(ratios)
    return {"draws": draws, "max_ratio": float(ratios.max()), "mean_ratio": float(ratios.mean())}
