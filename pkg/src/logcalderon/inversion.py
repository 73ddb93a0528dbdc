"""Monotonicity tests, blockwise reconstruction, Runge fits and localized potentials."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from . import multiprec
from .dnmap import DNMatrix
from .grid import CellField, Grid
from .solver import DirichletProblem, as_matrix


class RungeSingularError(np.linalg.LinAlgError):
    """Unregularized least squares with a rank-deficient solution operator."""

    def __init__(self, message: str, smallest_singular_value: float):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value


# ---------------------------------------------------------------------------
# monotonicity


@dataclass(frozen=True)
class MonotonicityVerdict:
    min_eigenvalue: float
    psd: bool
    tolerance: float

    def to_dict(self) -> dict:
        return {"min_eigenvalue": self.min_eigenvalue, "psd": self.psd, "tolerance": self.tolerance}


def default_psd_tol(target: DNMatrix) -> float:
    """1e-8 x max diagonal in double precision, shrinking with extra bits."""
    scale = float(np.max(np.abs(np.diag(target.matrix))))
    extra = target.precision_bits - multiprec.DOUBLE_BITS
    return 1e-8 * 2.0 ** (-extra / 2.0) * scale


def _check_compatible(L1: DNMatrix, L2: DNMatrix) -> None:
    if L1.grid_hash != L2.grid_hash:
        raise ValueError(f"DN matrices come from different grids ({L1.grid_hash} vs {L2.grid_hash})")
    if not (np.array_equal(L1.rows, L2.rows) and np.array_equal(L1.cols, L2.cols)):
        raise ValueError("DN matrices are indexed by different windows")
    if not L1.windows_equal:
        raise ValueError("monotonicity comparison needs W1 = W2")


def monotonicity_compare(L1: DNMatrix, L2: DNMatrix, tol: float | None = None) -> MonotonicityVerdict:
    """Is L1 <= L2 as quadratic forms, i.e. is L2 - L1 PSD up to ``tol``?"""
    _check_compatible(L1, L2)
    tol = default_psd_tol(L2) if tol is None else float(tol)
    bits = min(L1.precision_bits, L2.precision_bits)
    if bits > multiprec.DOUBLE_BITS and L1.hp is not None and L2.hp is not None:
        lam = multiprec.min_sym_eigenvalue(multiprec.difference(L2.hp, L1.hp, bits), bits)
    else:
        D = L2.matrix - L1.matrix
        lam = float(linalg.eigvalsh(0.5 * (D + D.T))[0])
    return MonotonicityVerdict(lam, lam >= -tol, tol)


# ---------------------------------------------------------------------------
# reconstruction


@dataclass(frozen=True)
class ReconstructionResult:
    block_values: np.ndarray
    bisection_trace: list
    config: dict
    flags: list = field(default_factory=list)

    def potential(self, partition, num_cells: int) -> np.ndarray:
        """The simple function sum_E a_E chi_E as cell values."""
        q = np.zeros(num_cells)
        for block, a in zip(partition, self.block_values):
            q[block] = a
        return q

    def to_dict(self) -> dict:
        return {
            "block_values": [float(v) for v in self.block_values],
            "bisection_trace": [
                [{"a": float(a), "psd": bool(ok), "min_eigenvalue": float(lam)} for a, ok, lam in trace]
                for trace in self.bisection_trace
            ],
            "config": self.config,
            "flags": self.flags,
        }


def _bisect_block(dn_oracle, target, block, num_cells, a_max, bis_tol, psd_tol):
    def verdict(a):
        q = np.zeros(num_cells)
        q[block] = a
        v = monotonicity_compare(dn_oracle(q), target, psd_tol)
        trace.append((a, v.psd, v.min_eigenvalue))
        return v.psd

    trace: list = []
    flags = []
    if verdict(a_max):
        flags.append(f"admissible at a_max={a_max:g}; increase a_max")
        return a_max, trace, flags
    lo, hi = 0.0, a_max
    if not verdict(lo):
        flags.append("inadmissible at a=0; target potential is negative on this block")
        return 0.0, trace, flags
    while hi - lo > bis_tol:
        mid = 0.5 * (lo + hi)
        if verdict(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), trace, flags


def reconstruct_potential(
    dn_oracle,
    target: DNMatrix,
    partition,
    a_max: float,
    bis_tol: float = 1e-3,
    psd_tol: float | None = None,
    num_cells: int | None = None,
    threads: int = 1,
) -> ReconstructionResult:
    """Largest a in [0, a_max] per block with Lambda_{a chi_E} <= target.

    The returned value is the midpoint of the final bisection bracket, so
    it lies within bis_tol / 2 of the supremum the PSD test can certify.
    """
    if a_max <= 0.0 or bis_tol <= 0.0:
        raise ValueError("a_max and bis_tol must be positive")
    if num_cells is None:
        num_cells = dn_oracle.grid.num_cells
    psd_tol = default_psd_tol(target) if psd_tol is None else float(psd_tol)
    jobs = [(dn_oracle, target, np.asarray(b), num_cells, a_max, bis_tol, psd_tol) for b in partition]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda job: _bisect_block(*job), jobs))
    else:
        results = [_bisect_block(*job) for job in jobs]
    flags = [f"block {k}: {msg}" for k, (_, _, fl) in enumerate(results) for msg in fl]
    config = {
        "a_max": a_max,
        "bis_tol": bis_tol,
        "psd_tol": psd_tol,
        "precision_bits": target.precision_bits,
    }
    return ReconstructionResult(
        block_values=np.array([r[0] for r in results]),
        bisection_trace=[r[1] for r in results],
        config=config,
        flags=flags,
    )


def valid_bisection(trace, a_max: float) -> bool:
    """Bracket is maintained and halves at every interior step."""
    if len(trace) < 2:
        return True
    lo, hi = 0.0, a_max
    for a, ok, _ in trace[2:]:
        if not math.isclose(a, 0.5 * (lo + hi), rel_tol=0.0, abs_tol=1e-15):
            return False
        lo, hi = (a, hi) if ok else (lo, a)
    return True


# ---------------------------------------------------------------------------
# Runge approximation


@dataclass(frozen=True)
class RungeFit:
    f: CellField
    residual: float  # ||P_q f - target||_{L^2(Omega)}
    relative_residual: float
    smallest_singular_value: float


def solution_operator(problem: DirichletProblem, window) -> np.ndarray:
    """Omega values of P_q f per unit window datum (columns over W cells)."""
    I = problem.omega
    return -problem.factor.solve(problem.A[np.ix_(I, np.asarray(window))])


def runge_fit(
    grid: Grid,
    K,
    Q,
    target: CellField,
    omega,
    window,
    alpha: float,
    problem: DirichletProblem | None = None,
    basis: np.ndarray | None = None,
) -> RungeFit:
    """min ||P_q f - target||^2_{L^2(Omega)} + alpha ||f||^2_{L^2(W)} over f on W.

    ``basis`` (|W| x m, default the identity) restricts f to the span of
    its columns, e.g. indicators of groups of window cells for a coarser
    data basis on the same grid.  Solved as the stacked least-squares
    system [U B; sqrt(alpha) R] c = [t; 0] with R^T R = B^T B (the common
    h^n weights cancel), which avoids squaring the condition number of U.
    """
    if alpha < 0.0:
        raise ValueError("alpha must be nonnegative")
    problem = problem or DirichletProblem(grid, K, Q, omega)
    window = np.asarray(window, dtype=int)
    B = np.eye(window.size) if basis is None else np.asarray(basis, dtype=float)
    if B.ndim != 2 or B.shape[0] != window.size:
        raise ValueError(f"basis must have {window.size} rows, one per window cell")
    U = solution_operator(problem, window) @ B
    t = target.values[problem.omega]
    m = B.shape[1]
    sv = linalg.svdvals(U)
    smallest = float(sv[-1]) if sv.size == m else 0.0
    if alpha == 0.0:
        cutoff = np.finfo(float).eps * max(U.shape) * sv[0]
        if sv.size < m or sv[-1] <= cutoff:
            raise RungeSingularError(
                f"least-squares operator is rank deficient at alpha=0 "
                f"(smallest singular value {smallest:.3e}); use alpha > 0",
                smallest,
            )
        coef = linalg.lstsq(U, t)[0]
    else:
        R = linalg.cholesky(B.T @ B, lower=False)
        stacked = np.vstack([U, math.sqrt(alpha) * R])
        rhs = np.concatenate([t, np.zeros(m)])
        coef = linalg.lstsq(stacked, rhs)[0]
    vol = grid.cell_volume
    residual = math.sqrt(vol) * float(np.linalg.norm(U @ coef - t))
    t_norm = math.sqrt(vol) * float(np.linalg.norm(t))
    return RungeFit(
        f=CellField.on(grid, window, B @ coef, "exterior"),
        residual=residual,
        relative_residual=residual / t_norm if t_norm > 0 else residual,
        smallest_singular_value=smallest,
    )


def grouped_basis(size: int, group: int) -> np.ndarray:
    """Indicators of consecutive runs of ``group`` window cells (|W| x ceil(|W|/group))."""
    if group < 1:
        raise ValueError("group must be >= 1")
    labels = np.arange(size) // group
    B = np.zeros((size, int(labels[-1]) + 1))
    B[np.arange(size), labels] = 1.0
    return B


# ---------------------------------------------------------------------------
# localized potentials


@dataclass(frozen=True)
class LocalizedStep:
    f: CellField
    ratio: float  # ||u||^2_{L^2(M)} / ||u||^2_{L^2(Omega \ M)}
    alpha: float
    norm_M: float
    norm_rest: float
    linear_residual: float


def localized_potential(
    grid: Grid,
    K,
    Q,
    omega,
    M,
    window,
    steps: int = 4,
    alphas=None,
) -> list[LocalizedStep]:
    """Data whose solutions concentrate on M while fading on Omega \\ M.

    Step k fits chi_M / sqrt(|M|) with regularization alphas[k] and then
    rescales the data by ||u~_k||_{L^2(Omega \\ M)}^{-1/2}.
    """
    omega = np.asarray(omega, dtype=int)
    M = np.asarray(M, dtype=int)
    if not np.all(np.isin(M, omega)):
        raise ValueError("M must be a subset of Omega")
    rest = np.setdiff1d(omega, M)
    if rest.size == 0:
        raise ValueError("Omega \\ M is empty; the normalization is undefined")
    if alphas is None:
        alphas = [10.0 ** (-2 * (k + 1)) for k in range(steps)]
    problem = DirichletProblem(grid, K, Q, omega)
    vol = grid.cell_volume
    target = CellField.on(grid, M, 1.0 / math.sqrt(M.size * vol), "omega")
    out: list[LocalizedStep] = []
    tiny = np.finfo(float).tiny ** 0.5
    for alpha in alphas[:steps]:
        fit = runge_fit(grid, K, Q, target, omega, window, alpha, problem=problem)
        u_tilde, _ = problem.solve_values(fit.f.values)
        rest_norm = math.sqrt(vol * float(np.sum(u_tilde[rest] ** 2)))
        if rest_norm < tiny:
            break
        f_k = fit.f * (1.0 / math.sqrt(rest_norm))
        u, res = problem.solve_values(f_k.values)
        nM = vol * float(np.sum(u[M] ** 2))
        nR = vol * float(np.sum(u[rest] ** 2))
        out.append(LocalizedStep(f_k, nM / nR, float(alpha), nM, nR, res))
    return out
