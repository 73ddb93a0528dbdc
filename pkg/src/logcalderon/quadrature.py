"""Quadrature primitives for kernels |y|^{-alpha} against piecewise polynomials.

All cell-pair integrals of the indicator basis reduce to integrals over the
offset variable y = z - x of the overlap function of two cells (a tensor
product of tent functions) against a radial power kernel.  The overlap
function is a polynomial on each of the 2^n sub-boxes of its support, so
everything here integrates ``P(y) |y|^{-alpha}`` over an axis-aligned box,
optionally restricted to the closed unit ball.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to meet its tolerance at maximum depth."""


@lru_cache(maxsize=None)
def gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=None)
def jacobi_rule(order: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for integral_0^1 u^beta f(u) du."""
    if beta == 0.0:
        return gauss_rule(order)
    x, w = special.roots_jacobi(order, 0.0, beta)
    return (x + 1.0) / 2.0, w / 2.0 ** (beta + 1.0)


def _tensor_rule(lo: np.ndarray, hi: np.ndarray, order: int):
    """Tensor Gauss nodes for a batch of boxes; lo/hi have shape (B, n)."""
    u, w = gauss_rule(order)
    B, n = lo.shape
    width = hi - lo
    if n == 1:
        pts = lo[:, None, :] + width[:, None, :] * u[None, :, None]
        wts = width[:, 0:1] * w[None, :]
        return pts, wts
    U1, U2 = np.meshgrid(u, u, indexing="ij")
    W = np.outer(w, w).ravel()
    local = np.stack([U1.ravel(), U2.ravel()], axis=-1)
    pts = lo[:, None, :] + width[:, None, :] * local[None, :, :]
    wts = np.prod(width, axis=1)[:, None] * W[None, :]
    return pts, wts


def _children(lo: np.ndarray, hi: np.ndarray):
    mid = 0.5 * (lo + hi)
    n = lo.shape[1]
    los, his = [], []
    for corner in np.ndindex(*(2,) * n):
        c = np.asarray(corner)
        los.append(np.where(c == 0, lo, mid))
        his.append(np.where(c == 0, mid, hi))
    # children of box b are rows b, b+B, b+2B, ...
    return np.concatenate(los), np.concatenate(his)


def _box_distance_range(lo: np.ndarray, hi: np.ndarray):
    nearest = np.clip(0.0, lo, hi)
    far = np.maximum(np.abs(lo), np.abs(hi))
    return np.linalg.norm(nearest, axis=1), np.linalg.norm(far, axis=1)


def _clipped_rule_2d(lo: np.ndarray, hi: np.ndarray, order: int):
    """Iterated Gauss nodes for box ∩ closed unit disk, batch over boxes.

    The outer y0 interval is split where the circle crosses the box's
    horizontal edges so the clipped inner limits are smooth on each piece.
    """
    u, w = gauss_rule(order)
    pts_all, wts_all = [], []
    for (a0, a1), (b0, b1) in zip(lo, hi):
        x_lo, x_hi = max(a0, -1.0), min(b0, 1.0)
        cuts = {x_lo, x_hi}
        for e in (a1, b1):
            if abs(e) < 1.0:
                r = np.sqrt(1.0 - e * e)
                for c in (-r, r):
                    if x_lo < c < x_hi:
                        cuts.add(c)
        cuts = sorted(cuts)
        P, Wt = [], []
        for s0, s1 in zip(cuts[:-1], cuts[1:]):
            if s1 <= s0:
                continue
            x = s0 + (s1 - s0) * u
            wx = (s1 - s0) * w
            half = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
            y_lo = np.maximum(a1, -half)
            y_hi = np.minimum(b1, half)
            span = np.clip(y_hi - y_lo, 0.0, None)
            Y = y_lo[:, None] + span[:, None] * u[None, :]
            X = np.broadcast_to(x[:, None], Y.shape)
            P.append(np.stack([X.ravel(), Y.ravel()], axis=-1))
            Wt.append((wx[:, None] * span[:, None] * w[None, :]).ravel())
        if P:
            pts_all.append(np.concatenate(P))
            wts_all.append(np.concatenate(Wt))
        else:
            pts_all.append(np.zeros((0, 2)))
            wts_all.append(np.zeros(0))
    return pts_all, wts_all


@dataclass
class AdaptiveResult:
    value: float
    error: float
    converged: bool
    boxes: int


def integrate_box(
    poly,
    lo,
    hi,
    alpha: float,
    region: str = "all",
    order: int = 4,
    max_depth: int = 8,
    rtol: float = 1e-12,
    atol: float = 0.0,
) -> AdaptiveResult:
    """Adaptive Gauss for ``∫_box P(y) |y|^{-alpha} [region] dy``.

    ``region`` is "all" or "inside" (|y| <= 1).  The box must not contain
    the origin; use :func:`integrate_corner` for boxes cornered at 0.
    Convergence is judged per panel by comparing one panel against its
    2^n children.
    """
    lo = np.atleast_2d(np.asarray(lo, dtype=float))
    hi = np.atleast_2d(np.asarray(hi, dtype=float))
    n = lo.shape[1]
    if region not in ("all", "inside"):
        raise ValueError(f"unknown region {region!r}")

    def rule(blo, bhi):
        """Per-box estimates for a batch of boxes."""
        out = np.zeros(blo.shape[0])
        if region == "all":
            pts, wts = _tensor_rule(blo, bhi, order)
            r = np.linalg.norm(pts, axis=-1)
            return np.sum(wts * poly(pts) * r ** (-alpha), axis=1)
        dmin, dmax = _box_distance_range(blo, bhi)
        inside = dmax <= 1.0
        straddle = (dmin < 1.0) & ~inside
        if inside.any():
            pts, wts = _tensor_rule(blo[inside], bhi[inside], order)
            r = np.linalg.norm(pts, axis=-1)
            out[inside] = np.sum(wts * poly(pts) * r ** (-alpha), axis=1)
        if straddle.any():
            if n == 1:
                clo = np.clip(blo[straddle], -1.0, 1.0)
                chi = np.clip(bhi[straddle], -1.0, 1.0)
                pts, wts = _tensor_rule(clo, chi, order)
                r = np.linalg.norm(pts, axis=-1)
                out[straddle] = np.sum(wts * poly(pts) * r ** (-alpha), axis=1)
            else:
                P, W = _clipped_rule_2d(blo[straddle], bhi[straddle], 2 * order)
                vals = [
                    float(np.sum(wt * poly(p) * np.linalg.norm(p, axis=-1) ** (-alpha)))
                    if wt.size
                    else 0.0
                    for p, wt in zip(P, W)
                ]
                out[straddle] = vals
        return out

    total, err, nboxes = 0.0, 0.0, 0
    converged = True
    act_lo, act_hi = lo, hi
    coarse = rule(act_lo, act_hi)
    for depth in range(max_depth + 1):
        if act_lo.shape[0] == 0:
            break
        B = act_lo.shape[0]
        nboxes += B
        c_lo, c_hi = _children(act_lo, act_hi)
        child = rule(c_lo, c_hi)
        fine = child.reshape(2**n, B).sum(axis=0)
        diff = np.abs(fine - coarse)
        tol = np.maximum(rtol * np.abs(fine), atol)
        done = diff <= tol
        if depth == max_depth:
            done[:] = True
            if np.any(diff > tol):
                converged = False
        total += float(fine[done].sum())
        err += float(diff[done].sum())
        keep = np.tile(~done, 2**n)
        act_lo, act_hi = c_lo[keep], c_hi[keep]
        coarse = child[keep]
    return AdaptiveResult(total, err, converged, nboxes)


def integrate_corner(poly_over_u, lo, hi, alpha: float, order: int = 4, v_order: int = 24) -> float:
    """``∫_box P(y) |y|^{-alpha} dy`` for a box of side h with a corner at 0.

    ``poly_over_u(y, u)`` must return P(y)/u where u = max_k |y_k| is the
    Duffy radial variable; P vanishes at the origin so this is a polynomial
    in u and the u-integral is done exactly by Gauss-Jacobi with weight
    u^{n-alpha}.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.size
    sign = np.where(lo == 0.0, 1.0, -1.0)
    side = float(np.max(hi - lo))
    beta = n - alpha
    if beta <= -1.0:
        raise QuadratureError(f"kernel exponent alpha={alpha} not integrable at the corner")
    ju, jw = jacobi_rule(max(order, 2), beta)
    u = side * ju
    wu = jw * side ** (beta + 1.0)
    if n == 1:
        y = (sign[0] * u)[:, None]
        return float(np.sum(wu * poly_over_u(y, u)))
    v, wv = gauss_rule(v_order)
    total = 0.0
    U, V = np.meshgrid(u, v, indexing="ij")
    Wt = np.outer(wu, wv)
    for first in (0, 1):
        y = np.empty(U.shape + (2,))
        y[..., first] = sign[first] * U
        y[..., 1 - first] = sign[1 - first] * U * V
        ang = (1.0 + V * V) ** (-alpha / 2.0)
        total += float(np.sum(Wt * ang * poly_over_u(y, U)))
    return total


@lru_cache(maxsize=None)
def _theta_rule(order: int = 48):
    t, w = gauss_rule(order)
    return t * (np.pi / 4.0), w * (np.pi / 4.0)


def outer_square_log(h: float, n: int) -> float:
    """∫ |y|^{-n} over {|y| <= 1} minus the square [-h, h]^n."""
    if n == 1:
        t, w = gauss_rule(16)
        # dyadic panels on [h, 1] resolve the 1/y decay
        edges = np.geomspace(h, 1.0, 9)
        val = sum(float(np.sum((b - a) * w / (a + (b - a) * t))) for a, b in zip(edges[:-1], edges[1:]))
        return 2.0 * val
    th, wt = _theta_rule()
    return 8.0 * float(np.sum(wt * np.log(np.cos(th) / h)))


def outer_square_power(h: float, n: int, s: float) -> float:
    """∫ |y|^{-n-2s} over R^n minus the square [-h, h]^n."""
    if n == 1:
        return 2.0 * h ** (-2.0 * s) / (2.0 * s)
    th, wt = _theta_rule()
    return 8.0 * float(np.sum(wt * (np.cos(th) / h) ** (2.0 * s))) / (2.0 * s)
