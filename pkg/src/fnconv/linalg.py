"""Dense complex linear-algebra kernels.

Everything here is a pure function of its inputs. Tolerances are absolute on
the max-entry scale, ``tol * (1 + max|A|)``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10


class NotHermitianError(ValueError):
    """Raised when a matrix expected to be Hermitian is not, beyond tolerance."""


class NotPSDError(ValueError):
    """Raised when a matrix has an eigenvalue below the PSD tolerance."""


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return A


def max_abs(A) -> float:
    A = np.asarray(A)
    return float(np.max(np.abs(A))) if A.size else 0.0


def hermitian_defect(A) -> float:
    """Return ``max|A - A*|``."""
    A = np.asarray(A)
    return max_abs(A - A.conj().T)


def check_hermitian(A, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate Hermiticity and return the symmetrized matrix ``(A + A*)/2``."""
    A = _as_square(A)
    defect = hermitian_defect(A)
    if defect > tol * (1.0 + max_abs(A)):
        raise NotHermitianError(f"max|A - A*| = {defect:.3e} exceeds tolerance {tol:g}")
    return 0.5 * (A + A.conj().T)


def eig_hermitian(A, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray
        Real, ascending.
    eigenvectors : ndarray
        Unitary matrix ``V`` with ``A = V diag(eigenvalues) V*``.
    """
    H = check_hermitian(A, tol)
    w, V = np.linalg.eigh(H)
    return w, V


def kron(A, B) -> np.ndarray:
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != 2 or B.ndim != 2:
        raise ValueError("kron expects two matrices")
    return np.kron(A, B)


def partial_trace_second(C, n1: int, n2: int) -> np.ndarray:
    """Trace out the second tensor factor of an ``(n1*n2) x (n1*n2)`` matrix.

    Row index ``(i, k)`` is flattened as ``i*n2 + k``, matching :func:`kron`.
    """
    C = np.asarray(C)
    if C.shape != (n1 * n2, n1 * n2):
        raise ValueError(f"expected shape {(n1 * n2, n1 * n2)}, got {C.shape}")
    return np.einsum("ikjk->ij", C.reshape(n1, n2, n1, n2))


def clamp_spectrum(w: np.ndarray, scale: float, tol: float = PSD_TOL) -> np.ndarray:
    """Zero out eigenvalues in ``[-tol*(1+scale), 0)``; reject anything lower."""
    floor = -tol * (1.0 + scale)
    if w.size and w.min() < floor:
        raise NotPSDError(f"eigenvalue {w.min():.3e} below PSD tolerance {floor:.3e}")
    return np.where(w < 0.0, 0.0, w)


def psd_eigh(A, tol: float = PSD_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a PSD matrix with noise-level negatives clamped to 0."""
    w, V = eig_hermitian(A)
    return clamp_spectrum(w, max_abs(A), tol), V


def matrix_function(A, f: Callable[[np.ndarray], np.ndarray], tol: float = PSD_TOL) -> np.ndarray:
    """Apply a scalar function to a PSD Hermitian matrix through its spectrum.

    ``f`` receives the clamped eigenvalue array and must return finite values.
    Use :func:`xlogx` for ``t log t`` with the ``0 log 0 = 0`` convention.
    """
    w, V = psd_eigh(A, tol)
    with np.errstate(divide="ignore", invalid="ignore"):
        fw = np.asarray(f(w))
    if not np.all(np.isfinite(fw)):
        bad = w[~np.isfinite(fw)]
        raise ValueError(f"function undefined at eigenvalue(s) {bad}")
    return (V * fw) @ V.conj().T


def xlogx(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = t[pos] * np.log(t[pos])
    return out


def spectral_norm(A) -> float:
    """Largest singular value."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def _irreducible(pattern: np.ndarray) -> bool:
    # connectivity of the symmetric support graph
    n = pattern.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for j in np.nonzero(pattern[i])[0]:
            if not seen[j]:
                seen[j] = True
                frontier.append(j)
    return bool(seen.all())


def perron_eigen(M) -> tuple[float, np.ndarray]:
    """Perron–Frobenius eigenpair of an entrywise-nonnegative matrix.

    The value is the spectral radius, read off the full spectrum. The vector
    is an entrywise-nonnegative unit eigenvector for that value; when ``M + M^T``
    is reducible and the eigenvector of the dense solver has mixed signs, a
    power iteration on ``I + M`` supplies a nonnegative one instead.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("perron_eigen expects a square matrix")
    if np.iscomplexobj(M):
        if max_abs(M.imag) > 0:
            raise ValueError("perron_eigen expects a real matrix")
        M = M.real
    M = M.astype(float)
    if (M < 0).any():
        raise ValueError("perron_eigen expects an entrywise-nonnegative matrix")
    n = M.shape[0]
    w, V = np.linalg.eig(M)
    value = float(np.max(np.abs(w)))
    idx = int(np.argmin(np.abs(w - value)))
    v = V[:, idx]
    # remove the arbitrary complex phase
    pivot = v[np.argmax(np.abs(v))]
    v = (v * (abs(pivot) / pivot)).real
    if v.sum() < 0:
        v = -v
    scale = max(1.0, np.abs(v).max())
    if v.min() < -1e-12 * scale and not _irreducible((M + M.T) > 0):
        v = np.ones(n) / np.sqrt(n)
        A = np.eye(n) + M
        for _ in range(10_000):
            u = A @ v
            u /= np.linalg.norm(u)
            if np.abs(u - v).max() < 1e-15:
                v = u
                break
            v = u
    v = np.clip(v, 0.0, None)
    return value, v / np.linalg.norm(v)
