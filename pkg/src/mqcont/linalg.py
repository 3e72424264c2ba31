"""Dense LU with determinant sign, full eigendecomposition, SVD condition numbers.

These wrap LAPACK (getrf/getrs, gehrd+hseqr through geev, gesdd) and add
the bookkeeping the continuation code needs: determinant sign from the
pivot parity, log-magnitude of the determinant, eigenvalue ordering and
per-pair residual certificates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

EPS = np.finfo(float).eps


class LinAlgFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class LUFactorization:
    lu: np.ndarray
    piv: np.ndarray
    det_sign: int
    log_abs_det: float

    @property
    def singular(self) -> bool:
        return self.det_sign == 0

    @property
    def order(self) -> int:
        return self.lu.shape[0]


def _as_square(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def lu_factor(A) -> LUFactorization:
    """Partial-pivoting LU. An exactly zero pivot gives ``det_sign == 0``."""
    A = _as_square(A)
    if A.shape[0] == 0:
        return LUFactorization(A.copy(), np.zeros(0, dtype=np.int32), 1, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)  # singularity is reported via det_sign
        lu, piv = sla.lu_factor(A, check_finite=False)
    diag = np.diag(lu)
    swaps = np.count_nonzero(piv != np.arange(len(piv)))
    if np.any(diag == 0.0):
        return LUFactorization(lu, piv, 0, -np.inf)
    sign = (-1) ** swaps * int(np.prod(np.sign(diag)))
    return LUFactorization(lu, piv, int(sign), float(np.log(np.abs(diag)).sum()))


def lu_solve(fac: LUFactorization, b, trans: int = 0) -> np.ndarray:
    if fac.singular:
        raise LinAlgFailure("cannot solve with a singular factorization")
    return sla.lu_solve((fac.lu, fac.piv), np.asarray(b, dtype=float), trans=trans, check_finite=False)


def solve(A, b) -> np.ndarray:
    return lu_solve(lu_factor(A), b)


def determinant(A) -> tuple[int, float]:
    """(sign, log|det|) of a square matrix."""
    fac = lu_factor(A)
    return fac.det_sign, fac.log_abs_det


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by real part descending, ties by imaginary part descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    residuals: np.ndarray | None = None

    def __len__(self):
        return len(self.eigenvalues)

    def n_unstable(self, tol: float = 0.0) -> int:
        return int(np.count_nonzero(self.eigenvalues.real > tol))

    def complex_mask(self, im_tol: float = 1e-6) -> np.ndarray:
        return np.abs(self.eigenvalues.imag) > im_tol

    def nearest_axis_pair(self, im_tol: float = 1e-6):
        """Eigenvalue with Im > 0 and the smallest |Re|, or None without complex pairs."""
        ev = self.eigenvalues
        upper = ev[ev.imag > im_tol]
        if upper.size == 0:
            return None
        return complex(upper[np.argmin(np.abs(upper.real))])


def _sort_order(ev):
    return np.lexsort((-ev.imag, -ev.real))


def eigen_full(A, vectors: bool = False) -> Spectrum:
    """All eigenvalues of a real square matrix (Hessenberg reduction + shifted QR)."""
    A = _as_square(A)
    n = A.shape[0]
    if n == 0:
        return Spectrum(np.zeros(0, dtype=complex))
    try:
        if vectors:
            w, V = sla.eig(A, check_finite=False)
        else:
            w = sla.eigvals(A, check_finite=False)
            V = None
    except np.linalg.LinAlgError as exc:  # hseqr non-convergence
        raise LinAlgFailure(f"eigenvalue iteration did not converge: {exc}") from exc
    w = np.asarray(w, dtype=complex)
    # LAPACK returns exact conjugates for real input; clean roundoff-level imaginary parts
    scale = max(np.abs(A).max(), 1.0)
    w.imag[np.abs(w.imag) <= 1e-14 * scale] = 0.0
    order = _sort_order(w)
    w = w[order]
    if V is None:
        return Spectrum(w)
    V = V[:, order]
    V = V / np.linalg.norm(V, axis=0)
    res = np.linalg.norm(A @ V - V * w[None, :], axis=0)
    return Spectrum(w, V, res)


@dataclass(frozen=True)
class ConditionEstimate:
    sigma_max: float
    sigma_min: float

    @property
    def ratio(self) -> float:
        if self.sigma_min == 0.0:
            return np.inf
        return self.sigma_max / self.sigma_min


def cond_svd(A) -> ConditionEstimate:
    A = _as_square(A)
    if A.shape[0] == 0:
        return ConditionEstimate(0.0, 0.0)
    sv = sla.svdvals(A, check_finite=False)
    return ConditionEstimate(float(sv[0]), float(sv[-1]))


def null_vector(A) -> np.ndarray:
    """Unit right null vector of an m x (m+1) matrix (last right singular vector)."""
    A = np.asarray(A, dtype=float)
    _, _, vt = np.linalg.svd(A)
    return vt[-1]
