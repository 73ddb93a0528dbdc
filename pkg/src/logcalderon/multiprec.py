"""Extended-precision Schur complements and symmetric eigenvalues.

The window-to-Omega solution operator of the log-Laplacian is severely
ill-conditioned (its singular values reach double-precision roundoff on a
16-cell Omega), so PSD tests of DN-map differences that probe cells far
from the windows are invisible in float64.  The discrete identities are
exact for the assembled matrices, which are taken as exact binary inputs;
this module redoes the Schur algebra in arbitrary precision via arb
matrices (only ball midpoints are used, radii are ignored).

flint's working precision is process-global, so every computation here
runs under one lock.
"""

from __future__ import annotations

import threading

import flint
import numpy as np

DOUBLE_BITS = 53
_LOCK = threading.Lock()


def _arb(A: np.ndarray) -> flint.arb_mat:
    return flint.arb_mat(np.asarray(A, dtype=float).tolist())


def to_numpy(M: flint.arb_mat) -> np.ndarray:
    return np.array([[float(x.mid()) for x in row] for row in M.tolist()])


def submatrix(M: flint.arb_mat, rows, cols) -> flint.arb_mat:
    entries = M.tolist()
    return flint.arb_mat([[entries[i][j] for j in cols] for i in rows])


def schur_complement(A: np.ndarray, interior, exterior, bits: int) -> flint.arb_mat:
    """A_EE - A_EI A_II^{-1} A_IE at ``bits`` of working precision."""
    with _LOCK, flint.ctx.workprec(bits):
        A_II = _arb(A[np.ix_(interior, interior)])
        A_IE = _arb(A[np.ix_(interior, exterior)])
        A_EE = _arb(A[np.ix_(exterior, exterior)])
        U = A_II.solve(A_IE, algorithm="approx")
        S = A_EE - A_IE.transpose() * U
        return S.mid()


def min_sym_eigenvalue(D: flint.arb_mat, bits: int) -> float:
    """Smallest eigenvalue of the symmetric part of D, rounded to float."""
    with _LOCK, flint.ctx.workprec(bits):
        Dt = D.transpose()
        sym = (D + Dt) * flint.arb(0.5)
        ev = sym.eig(algorithm="approx")
        return min(float(e.real.mid()) for e in ev)


def difference(A: flint.arb_mat, B: flint.arb_mat, bits: int) -> flint.arb_mat:
    with _LOCK, flint.ctx.workprec(bits):
        return A - B
