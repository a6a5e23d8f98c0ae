"""Dense complex matrix primitives.

Everything here operates on square Hermitian matrices stored as numpy
arrays. The eigensolver is LAPACK's Hermitian driver (``numpy.linalg.eigh``),
never the general nonsymmetric one.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "HERMITIAN_TOL",
    "ZERO_EIG_TOL",
    "SpectralDecomposition",
    "as_square",
    "check_hermitian",
    "hermitian_eig",
    "psd_repair",
    "sqrt_psd",
    "log2det_eye_plus",
]

HERMITIAN_TOL = 1e-10
ZERO_EIG_TOL = 1e-10


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigen-pair of a Hermitian matrix, eigenvalues in descending order.

    Attributes
    ----------
    basis : np.ndarray
        Unitary ``(N, N)`` matrix whose columns are eigenvectors.
    eigenvalues : np.ndarray
        Real eigenvalues, sorted descending.
    """

    basis: np.ndarray
    eigenvalues: np.ndarray

    @property
    def size(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        """Return ``U diag(lambda) U^H``."""
        U = self.basis
        return (U * self.eigenvalues) @ U.conj().T


def as_square(M) -> np.ndarray:
    A = np.asarray(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    return A.astype(np.complex128, copy=False)


def check_hermitian(M, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``M`` as a complex array, raising if it is not Hermitian."""
    A = as_square(M)
    scale = np.max(np.abs(A)) if A.size else 0.0
    asym = np.max(np.abs(A - A.conj().T)) if A.size else 0.0
    if asym > tol * max(scale, 1e-300):
        raise DomainError(f"matrix is not Hermitian (asymmetry {asym:.3e}, scale {scale:.3e})")
    return A


def _clamp_tol(eigenvalues: np.ndarray) -> float:
    scale = np.max(np.abs(eigenvalues)) if eigenvalues.size else 0.0
    return ZERO_EIG_TOL * max(1.0, scale)


def hermitian_eig(M) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Eigenvalues come back sorted descending; ties keep the solver's order,
    so seeded runs are reproducible. Eigenvalues within ``1e-10`` (relative to
    the spectral scale when that exceeds one) of zero are set to exactly zero.
    """
    A = check_hermitian(M)
    # eigh reads one triangle only; symmetrise so both triangles count.
    w, U = np.linalg.eigh(0.5 * (A + A.conj().T))
    order = np.argsort(-w, kind="stable")
    w = w[order]
    U = U[:, order]
    w = np.where(np.abs(w) <= _clamp_tol(w), 0.0, w)
    return SpectralDecomposition(basis=U, eigenvalues=w)


def psd_repair(M, target_trace: float) -> np.ndarray:
    """Project a Hermitian matrix to the PSD cone and rescale its trace.

    Negative eigenvalues are clamped to zero and the spectrum is scaled so the
    trace equals ``target_trace``. A matrix that is already PSD with the right
    trace is returned unchanged.
    """
    if not target_trace > 0:
        raise DomainError(f"target_trace must be positive, got {target_trace}")
    A = check_hermitian(M)
    dec = hermitian_eig(A)
    trace = float(np.real(np.trace(A)))
    if dec.eigenvalues[-1] >= 0 and abs(trace - target_trace) <= 1e-9 * target_trace:
        return A.copy()
    w = np.clip(dec.eigenvalues, 0.0, None)
    total = w.sum()
    if total <= 0:
        raise DomainError("matrix has no positive eigenvalue; cannot rescale its trace")
    w = w * (target_trace / total)
    out = (dec.basis * w) @ dec.basis.conj().T
    return 0.5 * (out + out.conj().T)


def sqrt_psd(M) -> np.ndarray:
    """Hermitian square root ``S`` of a PSD matrix, so that ``S S^H = M``."""
    dec = hermitian_eig(M)
    if dec.eigenvalues.size and dec.eigenvalues[-1] < 0:
        raise DomainError(f"matrix is not PSD (min eigenvalue {dec.eigenvalues[-1]:.3e})")
    root = np.sqrt(dec.eigenvalues)
    S = (dec.basis * root) @ dec.basis.conj().T
    return 0.5 * (S + S.conj().T)


def log2det_eye_plus(A) -> float:
    """``log2 det(I + A)`` for a Hermitian PSD ``A``.

    Computed from the eigenvalues with ``log1p`` so tiny signal terms keep
    their precision.
    """
    H = check_hermitian(A, tol=1e-8)
    w = np.linalg.eigvalsh(0.5 * (H + H.conj().T))
    if w.size and w[0] < -1e-9 * max(1.0, np.max(np.abs(w))):
        raise DomainError(f"argument is not PSD (min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    return float(np.sum(np.log1p(w)) / np.log(2.0))
