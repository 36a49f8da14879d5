"""Dense linear algebra for the small matrices used by the solvers.

Matrices are plain ``numpy`` arrays. Symmetric routines symmetrize their
input first, so callers may pass matrices that are symmetric only up to
round-off.
"""

import cmath
import math

import numpy as np

from .errors import NoConvergence, NotPSD

__all__ = [
    "symmetrize",
    "sym_eigen",
    "range_basis",
    "projector",
    "derived_Q",
    "sym_sqrt",
    "spectral_radius",
    "is_psd",
]

_JACOBI_MAX_SWEEPS = 100


def symmetrize(A):
    """Return ``(A + A.T) / 2`` as a float array; entries are symmetric exactly."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"expected a nonempty square matrix, got shape {A.shape}")
    S = 0.5 * (A + A.T)
    # the upper triangle is mirrored so that S[i, j] == S[j, i] bitwise
    iu = np.triu_indices_from(S, 1)
    S[(iu[1], iu[0])] = S[iu]
    return S


def sym_eigen(A):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Sorted ascending.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal columns, ``A @ V[:, i] == eigenvalues[i] * V[:, i]``.
    """
    S = symmetrize(A)
    n = S.shape[0]
    V = np.eye(n)
    scale = np.linalg.norm(S)
    if n == 1 or scale == 0.0:
        return np.diag(S).copy(), V
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = math.sqrt(np.sum(np.triu(S, 1) ** 2))
        if off <= 1e-14 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = S[p, q]
                if abs(apq) <= 1e-300 or abs(apq) <= 1e-18 * scale:
                    S[p, q] = S[q, p] = 0.0
                    continue
                theta = (S[q, q] - S[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                G = np.eye(n)
                G[p, p] = G[q, q] = c
                G[p, q] = s
                G[q, p] = -s
                S = G.T @ S @ G
                S[p, q] = S[q, p] = 0.0
                V = V @ G
    else:
        raise NoConvergence("Jacobi sweeps did not converge")
    w = np.diag(S).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def is_psd(A, tol=1e-10):
    """True iff the smallest eigenvalue is at least ``-tol * max(1, lambda_max)``."""
    w, _ = sym_eigen(A)
    return w[0] >= -tol * max(1.0, w[-1])


def range_basis(M, rank_tol=1e-10):
    """Orthonormal basis of range(M) for a PSD matrix ``M``.

    Columns are eigenvectors whose eigenvalue exceeds ``rank_tol * lambda_max``.
    Raises :class:`NotPSD` if ``M`` has an eigenvalue below
    ``-rank_tol * max(1, lambda_max)``.
    """
    w, U = sym_eigen(M)
    lam_max = w[-1]
    if w[0] < -rank_tol * max(1.0, lam_max):
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} is negative")
    keep = w > rank_tol * lam_max if lam_max > 0 else np.zeros_like(w, dtype=bool)
    return U[:, keep]


def projector(Z):
    """Orthogonal projector ``Z Z^T`` onto the span of the orthonormal columns of ``Z``."""
    return symmetrize(Z @ Z.T)


def derived_Q(M, Z):
    """``M + (I - Z Z^T)``: positive definite whenever ``Z`` spans range(M)."""
    n = np.asarray(M).shape[0]
    return symmetrize(np.asarray(M, dtype=float) + np.eye(n) - Z @ Z.T)


def sym_sqrt(A, tol=1e-10):
    """Principal square root of a PSD matrix."""
    w, U = sym_eigen(A)
    if w[0] < -tol * max(1.0, w[-1]):
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} is negative")
    root = np.sqrt(np.clip(w, 0.0, None))
    return symmetrize((U * root) @ U.T)


def spectral_radius(H):
    """Largest eigenvalue modulus of a real square matrix.

    Dimensions one and two use the characteristic polynomial in closed form;
    larger matrices go through LAPACK's Hessenberg QR.
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    n = H.shape[0]
    if H.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise NoConvergence("matrix has non-finite entries")
    if n == 1:
        return abs(H[0, 0])
    if n == 2:
        # rho is homogeneous, so work with entries of unit size to avoid under/overflow
        scale = float(np.max(np.abs(H)))
        if scale == 0.0:
            return 0.0
        H = H / scale
        tr = H[0, 0] + H[1, 1]
        det = H[0, 0] * H[1, 1] - H[0, 1] * H[1, 0]
        disc = cmath.sqrt(tr * tr - 4.0 * det)
        # pick the root that avoids cancellation, recover the other via det
        big = 0.5 * (tr + disc) if tr.real >= 0 else 0.5 * (tr - disc)
        small = det / big if big != 0 else 0.5 * (tr - disc)
        return scale * max(abs(big), abs(small))
    try:
        return float(np.max(np.abs(np.linalg.eigvals(H))))
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
