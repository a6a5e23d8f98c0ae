"""Sensing and communication mutual information, in bits.

Energy convention: data allocations and Gram matrices are *total* packet
energies, ``trace = P_d``. The per-symbol covariance of the data block is the
Gram divided by ``L_d``.
"""

from dataclasses import dataclass, fields

import numpy as np

from .errors import DimensionError, DomainError
from .linalg import check_hermitian, log2det_eye_plus, sqrt_psd

__all__ = [
    "Allocation",
    "MIReport",
    "sensing_mi",
    "sensing_mi_matrix",
    "comm_mi_upper",
    "comm_mi_realized",
    "comm_snr_gain",
]

_NEG_TOL = 1e-9
_LN2 = np.log(2.0)


@dataclass(frozen=True)
class Allocation:
    """Per-eigenmode data energies and the eigenbasis they are expressed in."""

    energies: np.ndarray
    basis: np.ndarray
    budget: float

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        if e.ndim != 1:
            raise DimensionError("energies must be a vector")
        if np.any(e < -_NEG_TOL * max(1.0, self.budget)):
            raise DomainError(f"allocation has negative energy {e.min():.3e}")
        if e.sum() > self.budget + 1e-9 * max(1.0, self.budget):
            raise DomainError(f"allocation uses {e.sum()} > budget {self.budget}")
        U = np.asarray(self.basis)
        if U.shape != (e.size, e.size):
            raise DimensionError(f"basis shape {U.shape} does not match {e.size} modes")
        object.__setattr__(self, "energies", np.clip(e, 0.0, None))
        object.__setattr__(self, "basis", U.astype(np.complex128, copy=False))

    @property
    def n(self) -> int:
        return self.energies.size

    def gram(self) -> np.ndarray:
        """Data Gram matrix ``U diag(energies) U^H``."""
        U = self.basis
        G = (U * self.energies) @ U.conj().T
        return 0.5 * (G + G.conj().T)


@dataclass(frozen=True)
class MIReport:
    """Sensing/communication MI of one trial and scheme.

    The headline ``mi_sensing`` and ``mi_comm`` use the shared-eigenbasis
    form in which the optimisers are posed. The ``*_xbasis`` fields evaluate
    the same waveform exactly with its real eigenbasis against the other
    channel's correlation, and ``mi_comm_sample`` is the communication MI on
    the trial's drawn channel estimate.
    """

    mi_sensing: float
    mi_comm: float
    rate_sensing: float
    rate_comm: float
    rel_sensing: float
    rel_comm: float
    weighted: float
    mi_sensing_xbasis: float = float("nan")
    mi_comm_xbasis: float = float("nan")
    mi_comm_sample: float = float("nan")

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.field_names()}


def _energies(energies) -> np.ndarray:
    if isinstance(energies, Allocation):
        return energies.energies
    return np.asarray(energies, dtype=float)


def _check_noise(noise_power):
    if not noise_power > 0:
        raise DomainError(f"noise power must be positive, got {noise_power}")


def sensing_mi(eigs_g, energies, train_per_mode: float, noise_power: float, n: int, noise_exponent: float = 1.0) -> float:
    """Sensing MI of a diagonal allocation in the sensing eigenbasis.

    ``n * sum_i log2(lambda_i (P_t/N + q_i) / s2**e + 1)``.
    """
    _check_noise(noise_power)
    lam = np.asarray(eigs_g, dtype=float)
    q = _energies(energies)
    if lam.shape != q.shape:
        raise DimensionError(f"{lam.size} eigenvalues but {q.size} energies")
    if np.any(lam < -_NEG_TOL) or np.any(q < -_NEG_TOL) or train_per_mode < 0:
        raise DomainError("eigenvalues and energies must be nonnegative")
    lam = np.clip(lam, 0.0, None)
    q = np.clip(q, 0.0, None)
    snr = lam * (train_per_mode + q) / noise_power**noise_exponent
    return float(n * np.sum(np.log1p(snr)) / _LN2)


def sensing_mi_matrix(gram_total, sigma_g, noise_power: float, noise_exponent: float = 1.0) -> float:
    """Sensing MI for an arbitrary total-energy Gram (training plus data).

    ``N log2 det(gram Sigma_G / s2**e + I)``, evaluated in the symmetric form
    ``Sigma_G^{1/2} gram Sigma_G^{1/2}``.
    """
    _check_noise(noise_power)
    S = getattr(sigma_g, "matrix", sigma_g)
    G = check_hermitian(gram_total, tol=1e-8)
    S = check_hermitian(S)
    if G.shape != S.shape:
        raise DimensionError(f"gram {G.shape} and correlation {S.shape} differ in size")
    root = sqrt_psd(S)
    try:
        inner = root @ G @ root / noise_power**noise_exponent
        return G.shape[0] * log2det_eye_plus(inner)
    except DomainError as exc:
        raise DomainError(f"gram matrix is not PSD: {exc}") from exc


def comm_snr_gain(cee: float, p_data: float, l_data: int, noise_power: float, comm_gain: float) -> float:
    """Per-unit-energy SNR ``(g - C_e) / ((P_d / L_d) C_e + s2)`` of the estimated channel."""
    _check_noise(noise_power)
    if not cee < comm_gain:
        raise DomainError(f"estimation error {cee} must be below the channel gain {comm_gain}")
    return (comm_gain - cee) / (p_data / l_data * cee + noise_power)


def comm_mi_upper(eigs_h, energies, cee: float, p_data: float, l_data: int, noise_power: float, comm_gain: float) -> float:
    """Hadamard/Jensen upper bound on the communication MI.

    ``L_d sum_i log2(c mu_i xi_i + 1)`` with ``c`` from :func:`comm_snr_gain`.
    """
    mu = np.asarray(eigs_h, dtype=float)
    xi = _energies(energies)
    if mu.shape != xi.shape:
        raise DimensionError(f"{mu.size} eigenvalues but {xi.size} energies")
    if np.any(mu < -_NEG_TOL) or np.any(xi < -_NEG_TOL):
        raise DomainError("eigenvalues and energies must be nonnegative")
    c = comm_snr_gain(cee, p_data, l_data, noise_power, comm_gain)
    snr = c * np.clip(mu, 0.0, None) * np.clip(xi, 0.0, None)
    return float(l_data * np.sum(np.log1p(snr)) / _LN2)


def comm_mi_realized(h_hat, sigma_xd_total, noise_var_eq: float, l_data: int) -> float:
    """Communication MI on a given channel estimate.

    ``L_d log2 det(H Sigma H^H / s'^2 + I)`` with ``Sigma`` the total-energy
    data Gram. Channel estimates from
    :func:`jcas.channel.draw_estimated_channel` use the matching
    normalisation.
    """
    _check_noise(noise_var_eq)
    H = np.asarray(h_hat, dtype=np.complex128)
    X = check_hermitian(sigma_xd_total, tol=1e-8)
    if H.ndim != 2 or H.shape[1] != X.shape[0]:
        raise DimensionError(f"channel {H.shape} incompatible with covariance {X.shape}")
    try:
        root = sqrt_psd(X)
    except DomainError as exc:
        raise DomainError(f"data covariance is not PSD: {exc}") from exc
    # det(I + H X H^H / s) = det(I + X^{1/2} H^H H X^{1/2} / s)
    inner = root @ (H.conj().T @ H) @ root / noise_var_eq
    return l_data * log2det_eye_plus(inner)
