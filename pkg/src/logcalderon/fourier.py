"""Fourier-symbol route for the log form and the H(R^n) Gram matrix.

With the transform convention û(ξ) = ∫ e^{-ix·ξ} u(x) dx, Plancherel reads
∫ u v = (2π)^{-n} ∫ û conj(v̂), so the form with symbol 2 log|ξ| is

    B0(v, w) = 2 (2π)^{-n} ∫ log|ξ| v̂(ξ) conj(ŵ(ξ)) dξ.

For two cells with center offset d, Re(χ̂_i conj χ̂_j) = Π_k A_{d_k}(ξ_k)
with A_d(t) = cos(d t) (2 sin(h t / 2) / t)^2, an even function, so all
integrals are taken over the positive orthant.  The normalization is pinned
by reproducing the mass matrix (symbol 1) before any log integral is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .forms import QuadratureSpec, SymmetricForm, mass_matrix
from .grid import Grid
from .quadrature import gauss_rule


class FourierTailError(RuntimeError):
    """Truncation or normalization error above the requested tolerance."""


def tent_transform(t: np.ndarray, d: float, h: float) -> np.ndarray:
    """A_d(t) = cos(d t) (2 sin(h t/2)/t)^2, with the t -> 0 limit h^2."""
    t = np.asarray(t, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(t == 0.0, h, 2.0 * np.sin(0.5 * h * t) / np.where(t == 0.0, 1.0, t))
    return np.cos(d * t) * sinc**2


@dataclass(frozen=True)
class XiRule:
    nodes: np.ndarray
    weights: np.ndarray
    radius: float
    eps: float


@lru_cache(maxsize=None)
def xi_rule(radius: float, max_freq: float, points: int, eps: float) -> XiRule:
    """Composite Gauss rule on [0, radius].

    Geometric panels from eps to 1 (the log singularity) followed by
    panels of half an oscillation period of the fastest cosine.
    The first panel [0, eps] is kept so the mass check sees the full line;
    log integrals drop its nodes.
    """
    u, w = gauss_rule(points)
    edges = [0.0, eps]
    edges += list(np.geomspace(eps, 1.0, max(2, int(math.ceil(math.log2(1.0 / eps)))) + 1)[1:])
    width = math.pi / max(max_freq, 1.0)
    count = int(math.ceil((radius - 1.0) / width))
    edges += list(np.linspace(1.0, radius, count + 1)[1:])
    edges = np.asarray(edges)
    a, b = edges[:-1], edges[1:]
    nodes = (a[:, None] + (b - a)[:, None] * u[None, :]).ravel()
    weights = ((b - a)[:, None] * w[None, :]).ravel()
    return XiRule(nodes, weights, float(radius), float(eps))


@lru_cache(maxsize=None)
def _cos_tail(a: float, R: float, with_log: bool) -> tuple[float, float]:
    """∫_R^∞ [log t] cos(a t) / t^2 dt and its absolute error estimate."""
    if a == 0.0:
        return ((math.log(R) + 1.0) / R if with_log else 1.0 / R), 0.0
    f = (lambda t: math.log(t) / t**2) if with_log else (lambda t: 1.0 / t**2)
    val, err = integrate.quad(f, R, np.inf, weight="cos", wvar=abs(a))
    return val, err


def tent_tail(d: float, h: float, R: float, with_log: bool) -> tuple[float, float]:
    """∫_R^∞ [log t] A_d(t) dt via 4 sin^2(ht/2) = 2 - 2 cos(ht), with error estimate."""
    parts = [_cos_tail(abs(a), R, with_log) for a in (d, d + h, d - h)]
    val = 2.0 * parts[0][0] - parts[1][0] - parts[2][0]
    err = 2.0 * parts[0][1] + parts[1][1] + parts[2][1]
    return val, err


def _tail_bound_2d(h: float, R: float) -> float:
    """Bound on what the 2D strip/corner model leaves out.

    In a strip log|ξ| is replaced by the log of the large coordinate,
    costing at most 8/(3R^2) per strip, and the oscillating part of the
    truncated inner integral is O(log R / (h R^3)).
    """
    per_strip = 8.0 / (3.0 * R**2) + 32.0 * (math.log(R) + 1.0) / (h * R**3)
    return 4.0 / (2.0 * math.pi) ** 2 * 2.0 * per_strip


# ∫∫_{[1,∞)^2} ½ log(a^2 + b^2) / (a^2 b^2) da db
_CORNER_LOG_CONST = 1.6319717536774196


def _mean_coeff(ms: np.ndarray) -> np.ndarray:
    """Non-oscillating coefficient of t^2 A_d(t): 2 at d = 0, -1 at |d| = h."""
    return np.where(ms == 0, 2.0, np.where(ms == 1, -1.0, 0.0))


def _offset_values(grid: Grid):
    """Distinct |offset| multiples per axis."""
    return [np.arange(c) for c in grid.cells_per_axis]


def _axis_tables(grid: Grid, rule: XiRule, with_log: bool):
    """A_d at the nodes and the 1D tails, one column per |offset|."""
    h = grid.h
    tabs, tails, zero_int, errs = [], [], [], []
    for ms in _offset_values(grid):
        d = ms * h
        tabs.append(tent_transform(rule.nodes[:, None], d[None, :], h))
        vals = [tent_tail(float(di), h, rule.radius, with_log) for di in d]
        tails.append(np.array([v for v, _ in vals]))
        errs.append(max(e for _, e in vals))
        zero_int.append(np.where(ms == 0, math.pi * h, 0.0))  # ∫_0^∞ A_d = π g(d)
    return tabs, tails, zero_int, max(errs)


def _expand(grid: Grid, table: np.ndarray) -> np.ndarray:
    idx = grid.cell_index
    diff = np.abs(idx[:, None, :] - idx[None, :, :])
    if grid.n == 1:
        return table[diff[..., 0]]
    return table[diff[..., 0], diff[..., 1]]


def _max_freq(grid: Grid) -> float:
    return float(max(grid.cells_per_axis)) * grid.h + grid.h


def _symbol_table(grid: Grid, quad: QuadratureSpec, symbol: str):
    """Table over |offset| of (2π)^{-n} 2^n ∫_{orthant} sym(ξ) Π A dξ and a tail bound.

    ``symbol`` is "one" or "log"; "log" drops nodes with |ξ| < eps.
    """
    n = grid.n
    R = quad.radius(n)
    rule = xi_rule(R, _max_freq(grid), quad.fourier_points, quad.origin_exclusion)
    with_log = symbol == "log"
    tabs, tails, zero_int, tail_err = _axis_tables(grid, rule, with_log)
    x, w = rule.nodes, rule.weights
    if n == 1:
        sym = np.log(x) if with_log else np.ones_like(x)
        if with_log:
            sym = np.where(x < rule.eps, 0.0, sym)
        core = (w * sym) @ tabs[0]
        if with_log:
            core += _origin_value(rule.eps, 1) * grid.h**2
        table = (core + tails[0]) / math.pi
        bound = tail_err / math.pi
    else:
        # tensor product; only the ξ1 nodes are chunked to bound memory
        A0, A1 = tabs
        out = np.zeros((A0.shape[1], A1.shape[1]))
        step = 512
        for start in range(0, x.size, step):
            xs = x[start : start + step]
            if with_log:
                S = 0.5 * np.log(xs[:, None] ** 2 + x[None, :] ** 2)
                S[np.ix_(xs < rule.eps, x < rule.eps)] = 0.0
            else:
                S = np.ones((xs.size, x.size))
            S *= w[start : start + step, None] * w[None, :]
            out += A0[start : start + step].T @ (S @ A1)
        # strips beyond R; for log, log|ξ| ≈ log of the large coordinate there
        strip = np.outer(tails[0], zero_int[1]) + np.outer(zero_int[0], tails[1])
        # both strips cover the far corner (R, ∞)^2; replace the doubled
        # approximation by the corner integral of the non-oscillating parts
        m0, m1 = (_mean_coeff(ms) for ms in _offset_values(grid))
        if with_log:
            corner = (_CORNER_LOG_CONST - math.log(R) - 2.0) / R**2
        else:
            corner = -1.0 / R**2
        strip += np.outer(m0, m1) * corner
        if with_log:
            out += _origin_value(rule.eps, 2) * grid.h**4
        table = (out + strip) * (4.0 / (2.0 * math.pi) ** 2)
        bound = _tail_bound_2d(grid.h, R) + 2.0 * math.pi * grid.h * tail_err * (4.0 / (2.0 * math.pi) ** 2)
    return table, bound


def fourier_mass_check(grid: Grid, quad: QuadratureSpec | None = None, tol: float = 1e-6) -> float:
    """Max |M_fourier - M| / h^n; raises if the normalization is off."""
    quad = quad or QuadratureSpec()
    table, _ = _symbol_table(grid, quad, "one")
    M = _expand(grid, table)
    err = float(np.max(np.abs(M - mass_matrix(grid).matrix))) / grid.cell_volume
    if err > tol:
        raise FourierTailError(
            f"Parseval mass check failed (relative error {err:.2e} > {tol:.1e}); "
            "increase fourier_truncation_radius"
        )
    return err


def _origin_value(eps: float, n: int) -> float:
    """∫ log|ξ| over the dropped origin cell [0, eps]^n (where Π A ≈ h^{2n})."""
    if n == 1:
        return eps * (math.log(eps) - 1.0)
    return eps**2 * (math.log(eps) + 0.5 * math.log(2.0) - 1.5 + math.pi / 4.0)


def origin_bound(grid: Grid, eps: float) -> float:
    """Bound on the dropped |ξ| < eps part: 2 (2π)^{-n} |log eps| eps^n |χ̂|∞^2 times the ball volume factor."""
    n = grid.n
    ball = 2.0 * eps if n == 1 else math.pi * eps**2
    return 2.0 * (2.0 * math.pi) ** (-n) * (abs(math.log(eps)) + 1.0) * ball * grid.cell_volume**2


def assemble_log_form_fourier(
    grid: Grid, quad: QuadratureSpec | None = None, tail_tol: float = 1e-3
) -> SymmetricForm:
    """B0 over the cell basis by quadrature of the symbol 2 log|ξ|."""
    quad = (quad or QuadratureSpec()).resolved(grid.n)
    mass_err = fourier_mass_check(grid, quad)
    table, tail = _symbol_table(grid, quad, "log")
    K = 2.0 * _expand(grid, table)
    tail_bound = 2.0 * tail
    if tail_bound > tail_tol * grid.cell_volume:
        raise FourierTailError(
            f"tail bound {tail_bound:.2e} exceeds {tail_tol:.1e} h^n; increase fourier_truncation_radius"
        )
    meta = {
        "route": "fourier",
        "tail_bound": tail_bound,
        "origin_bound": origin_bound(grid, quad.origin_exclusion),
        "parseval_error": mass_err,
    }
    return SymmetricForm("log_B0", K, quad, grid.grid_hash, meta)


@lru_cache(maxsize=None)
def _low_freq_rule(order: int = 12, levels: int = 40):
    """Gauss panels on (0, 1] graded geometrically toward 0."""
    u, w = gauss_rule(order)
    edges = np.concatenate([[0.0], np.geomspace(2.0**-levels, 1.0, levels + 1)])
    a, b = edges[:-1], edges[1:]
    return (a[:, None] + (b - a)[:, None] * u).ravel(), ((b - a)[:, None] * w).ravel()


def _neglog_ball_table(grid: Grid) -> np.ndarray:
    """(2π)^{-n} ∫_{|ξ|<1} (-log|ξ|) Π A dξ over |offset|."""
    h = grid.h
    r, wr = _low_freq_rule()
    ms = _offset_values(grid)
    if grid.n == 1:
        A = tent_transform(r[:, None], (ms[0] * h)[None, :], h)
        return (wr * -np.log(r)) @ A / math.pi
    th, wth = gauss_rule(48)
    th, wth = th * (math.pi / 2), wth * (math.pi / 2)
    R_, T_ = np.meshgrid(r, th, indexing="ij")
    W = np.outer(wr * r * -np.log(r), wth).ravel()
    A0 = tent_transform((R_ * np.cos(T_)).ravel()[:, None], (ms[0] * h)[None, :], h)
    A1 = tent_transform((R_ * np.sin(T_)).ravel()[:, None], (ms[1] * h)[None, :], h)
    table = A0.T @ (W[:, None] * A1)
    return table * 4.0 / (2.0 * math.pi) ** 2


def assemble_abslog_gram(grid: Grid, quad: QuadratureSpec | None = None) -> SymmetricForm:
    """Gram matrix of the H(R^n) inner product (u,v)_{L^2} + (2π)^{-n}∫|log|ξ|| û conj(v̂).

    Uses |log| = log + 2 (-log)_+: the log part comes from the Fourier
    route of B0 and the (-log)_+ part is a smooth integral over |ξ| < 1.
    """
    quad = (quad or QuadratureSpec()).resolved(grid.n)
    K = assemble_log_form_fourier(grid, quad)
    J = _expand(grid, _neglog_ball_table(grid))
    G = mass_matrix(grid).matrix + 0.5 * K.matrix + 2.0 * J
    G = 0.5 * (G + G.T)
    return SymmetricForm("abslog_gram", G, quad, grid.grid_hash, dict(K.meta, route="fourier"))
