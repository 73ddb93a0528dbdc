"""Dirichlet-to-Neumann maps as Schur complements over the window cells.

Data f lives on the windows E = W1 ∪ W2, every other exterior cell is held
at zero, and the test function for g is its zero extension.  Eliminating
the Omega unknowns gives the full exterior form

    S = A_EE - A_EI A_II^{-1} A_IE,   <Lambda_q f, g> = g^T S f,

from which rows W2 and columns W1 are kept.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field

import numpy as np

from . import multiprec
from .grid import CellField, Grid, RegionSet
from .solver import DirichletProblem, InteriorFactor, as_matrix


def q_tag(q) -> str:
    """Short content hash of a potential's cell values."""
    values = q.values if isinstance(q, CellField) else np.asarray(q, dtype=float)
    return hashlib.sha256(np.ascontiguousarray(values, dtype=np.float64).tobytes()).hexdigest()[:12]


@dataclass(frozen=True)
class DNMatrix:
    matrix: np.ndarray
    rows: np.ndarray  # W2 cells
    cols: np.ndarray  # W1 cells
    q_tag: str
    grid_hash: str
    precision_bits: int = multiprec.DOUBLE_BITS
    hp: object = field(repr=False, default=None)  # extended-precision copy of ``matrix``

    def __post_init__(self):
        self.matrix.setflags(write=False)

    @property
    def windows_equal(self) -> bool:
        return np.array_equal(self.rows, self.cols)

    def pair(self, f_cols: np.ndarray, g_rows: np.ndarray) -> float:
        """<Lambda f, g> for coefficient vectors on W1 and W2."""
        return float(g_rows @ self.matrix @ f_cols)

    def symmetry_defect(self) -> float:
        if self.matrix.shape[0] != self.matrix.shape[1] or not np.array_equal(self.rows, self.cols):
            raise ValueError("symmetry is defined only when W1 = W2")
        scale = float(np.max(np.abs(self.matrix)))
        return float(np.max(np.abs(self.matrix - self.matrix.T))) / scale

    def to_dict(self) -> dict:
        return {
            "q_tag": self.q_tag,
            "grid_hash": self.grid_hash,
            "rows": self.rows.tolist(),
            "cols": self.cols.tolist(),
            "precision_bits": self.precision_bits,
        }


def assemble_dn_map(
    K,
    Q,
    regions: RegionSet,
    grid_hash: str = "",
    tag: str | None = None,
    precision_bits: int = multiprec.DOUBLE_BITS,
) -> DNMatrix:
    """Galerkin matrix of Lambda_q on indicator data (rows W2, columns W1).

    With ``precision_bits`` above 53 the Schur complement is formed in
    extended precision and kept on the result for later PSD tests.
    """
    A = as_matrix(K) + as_matrix(Q)
    I, E = regions.omega, regions.windows
    rows = np.searchsorted(E, regions.w2)
    cols = np.searchsorted(E, regions.w1)
    if tag is None:
        tag = q_tag(np.diag(as_matrix(Q)))
    # the factorization doubles as the coercivity check in either precision
    factor = InteriorFactor(A[np.ix_(I, I)])
    if precision_bits > multiprec.DOUBLE_BITS:
        S_hp = multiprec.schur_complement(A, I, E, precision_bits)
        hp = multiprec.submatrix(S_hp, rows, cols)
        return DNMatrix(multiprec.to_numpy(hp), regions.w2, regions.w1, tag, grid_hash, precision_bits, hp)
    # A_EI A_II^{-1} A_IE = Y^T Y with Y = L^{-1} A_IE; no explicit symmetrization
    Y = factor.half_solve(A[np.ix_(I, E)])
    S = A[np.ix_(E, E)] - Y.T @ Y
    return DNMatrix(S[np.ix_(rows, cols)].copy(), regions.w2, regions.w1, tag, grid_hash)


class DNCache:
    """Schur complements keyed by (grid hash, q tag).

    Reads are lock-free dictionary lookups; insertion is serialized and a
    value is computed at most once per key.
    """

    def __init__(self):
        self._store: dict = {}
        self._lock = threading.Lock()
        self.misses = 0

    def get(self, key, build):
        hit = self._store.get(key)
        if hit is not None:
            return hit
        with self._lock:
            hit = self._store.get(key)
            if hit is None:
                hit = build()
                self._store[key] = hit
                self.misses += 1
        return hit

    def __len__(self) -> int:
        return len(self._store)


class DNOracle:
    """Maps potentials supported on Omega to their DN matrices, with caching."""

    def __init__(
        self,
        grid: Grid,
        K,
        regions: RegionSet,
        cache: DNCache | None = None,
        precision_bits: int = multiprec.DOUBLE_BITS,
    ):
        self.grid = grid
        self.K = as_matrix(K)
        self.regions = regions
        self.cache = cache if cache is not None else DNCache()
        self.precision_bits = precision_bits
        # distinguishes log forms assembled with different quadrature on one grid
        self.form_tag = q_tag(self.K.ravel())

    def potential_matrix(self, q) -> np.ndarray:
        values = q.values if isinstance(q, CellField) else np.asarray(q, dtype=float)
        outside = np.ones(self.grid.num_cells, dtype=bool)
        outside[self.regions.omega] = False
        if np.any(values[outside] != 0.0):
            raise ValueError("potential carries nonzero values outside Omega")
        return np.diag(values * self.grid.cell_volume)

    def __call__(self, q) -> DNMatrix:
        tag = q_tag(q)
        key = (self.grid.grid_hash, tag, self.form_tag, self.precision_bits)
        return self.cache.get(
            key,
            lambda: assemble_dn_map(
                self.K, self.potential_matrix(q), self.regions, self.grid.grid_hash, tag, self.precision_bits
            ),
        )


def _solution(grid: Grid, K, q_values, omega, data: np.ndarray) -> np.ndarray:
    Q = np.diag(np.asarray(q_values, dtype=float) * grid.cell_volume)
    problem = DirichletProblem(grid, K, Q, omega)
    u, _ = problem.solve_values(data)
    return u


def integral_identity_residual(
    grid: Grid, K, regions: RegionSet, q1, q2, f1: np.ndarray, f2: np.ndarray
) -> tuple[float, float, float]:
    """Both sides of <(Lambda_1 - Lambda_2) f1, f2> = sum (q1 - q2) u1 u2 h^n.

    ``f1`` holds coefficients on W1 and ``f2`` on W2.
    """
    q1 = q1.values if isinstance(q1, CellField) else np.asarray(q1, dtype=float)
    q2 = q2.values if isinstance(q2, CellField) else np.asarray(q2, dtype=float)
    Q1 = np.diag(q1 * grid.cell_volume)
    Q2 = np.diag(q2 * grid.cell_volume)
    L1 = assemble_dn_map(K, Q1, regions, grid.grid_hash)
    L2 = assemble_dn_map(K, Q2, regions, grid.grid_hash)
    lhs = float(f2 @ (L1.matrix - L2.matrix) @ f1)
    d1 = np.zeros(grid.num_cells)
    d1[regions.w1] = f1
    d2 = np.zeros(grid.num_cells)
    d2[regions.w2] = f2
    omega = regions.omega
    u1 = _solution(grid, K, q1, omega, d1)
    u2 = _solution(grid, K, q2, omega, d2)
    rhs = float(np.sum((q1 - q2)[omega] * u1[omega] * u2[omega]) * grid.cell_volume)
    return lhs, rhs, abs(lhs - rhs)


def monotonicity_bounds(
    grid: Grid, K, regions: RegionSet, q1, q2, f: np.ndarray
) -> tuple[float, float, float]:
    """(lower, middle, upper) of the two-sided monotonicity estimate.

    middle = <(Lambda_2 - Lambda_1) f, f>, upper = sum (q2 - q1) u1^2 h^n and
    lower = sum (q2 - q1) u2^2 h^n, with u_j the q_j-solution for data f on
    W1 (requires W1 = W2).
    """
    if not np.array_equal(regions.w1, regions.w2):
        raise ValueError("monotonicity bounds need W1 = W2")
    q1 = q1.values if isinstance(q1, CellField) else np.asarray(q1, dtype=float)
    q2 = q2.values if isinstance(q2, CellField) else np.asarray(q2, dtype=float)
    L1 = assemble_dn_map(K, np.diag(q1 * grid.cell_volume), regions, grid.grid_hash)
    L2 = assemble_dn_map(K, np.diag(q2 * grid.cell_volume), regions, grid.grid_hash)
    middle = float(f @ (L2.matrix - L1.matrix) @ f)
    data = np.zeros(grid.num_cells)
    data[regions.w1] = f
    omega = regions.omega
    u1 = _solution(grid, K, q1, omega, data)[omega]
    u2 = _solution(grid, K, q2, omega, data)[omega]
    dq = (q2 - q1)[omega]
    h_n = grid.cell_volume
    return float(np.sum(dq * u2**2) * h_n), middle, float(np.sum(dq * u1**2) * h_n)
