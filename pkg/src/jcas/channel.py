"""Scenario configuration and correlated Rayleigh channel generation.

Channels follow the one-sided Kronecker model ``H = H0 R^{1/2}`` where the
entries of ``H0`` are iid CN(0, 1). The spatial correlation ``R`` acts on the
transmit side, so ``E[H^H H] = N R``.
"""

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .linalg import SpectralDecomposition, check_hermitian, hermitian_eig, psd_repair, sqrt_psd

__all__ = [
    "SystemConfig",
    "CorrelationMatrix",
    "gen_correlation",
    "draw_channel",
    "draw_estimated_channel",
    "training_gram",
    "energy_from_snr",
    "snr_from_energy",
]

NOISE_EXPONENTS = ("1", "L/N")


def energy_from_snr(snr_db: float, total_length: int, noise_power: float = 1.0) -> float:
    """Total packet energy for an SNR defined as ``(P / L) / noise_power``."""
    return total_length * noise_power * 10.0 ** (snr_db / 10.0)


def snr_from_energy(total_energy: float, total_length: int, noise_power: float = 1.0) -> float:
    return 10.0 * math.log10(total_energy / (total_length * noise_power))


@dataclass(frozen=True)
class SystemConfig:
    """Scalar parameters of one JCAS scenario.

    Defaults reproduce the baseline simulation setting: eight antennas,
    eight training symbols, 128 symbols per packet, unit noise power and
    unit mean channel gains, SNR of 1 dB.
    """

    n_antennas: int = 8
    l_train: int = 8
    l_data: int = 120
    total_energy: float = field(default_factory=lambda: energy_from_snr(1.0, 128))
    noise_power: float = 1.0
    comm_gain: float = 1.0
    sens_gain: float = 1.0
    eps_comm: float = 0.1
    eps_sens: float = 0.8
    weight: float = 0.5
    seed: int = 0
    noise_exponent: str = "1"
    no_cee_full_data: bool = False

    def __post_init__(self):
        N, Lt, Ld = self.n_antennas, self.l_train, self.l_data
        if N < 1:
            raise ConfigError(f"n_antennas must be >= 1, got {N}")
        if Lt < N:
            raise ConfigError(f"orthogonal training needs l_train >= n_antennas ({Lt} < {N})")
        if Ld < 1:
            raise ConfigError(f"l_data must be >= 1, got {Ld}")
        for name in ("total_energy", "noise_power", "comm_gain", "sens_gain"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be positive and finite, got {value}")
        for name in ("eps_comm", "eps_sens", "weight"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if self.noise_exponent not in NOISE_EXPONENTS:
            raise ConfigError(f"noise_exponent must be one of {NOISE_EXPONENTS}, got {self.noise_exponent!r}")

    @property
    def total_length(self) -> int:
        return self.l_train + self.l_data

    @property
    def snr_db(self) -> float:
        return snr_from_energy(self.total_energy, self.total_length, self.noise_power)

    @property
    def noise_exp(self) -> float:
        """Exponent applied to the noise power in the sensing MI."""
        if self.noise_exponent == "1":
            return 1.0
        return self.total_length / self.n_antennas

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_snr(cls, snr_db: float, **kwargs) -> "SystemConfig":
        """Build a config whose ``total_energy`` realises ``snr_db``."""
        probe = cls(**kwargs)
        return probe.replace(
            total_energy=energy_from_snr(snr_db, probe.total_length, probe.noise_power)
        )


@dataclass(frozen=True)
class CorrelationMatrix:
    """Hermitian PSD spatial correlation with equal diagonal entries."""

    matrix: np.ndarray
    decomposition: SpectralDecomposition
    mean_gain: float

    @classmethod
    def from_matrix(cls, M) -> "CorrelationMatrix":
        A = check_hermitian(M)
        dec = hermitian_eig(A)
        if dec.eigenvalues[-1] < 0:
            raise DomainError("correlation matrix must be PSD")
        mean_gain = float(np.real(np.trace(A))) / A.shape[0]
        return cls(matrix=A, decomposition=dec, mean_gain=mean_gain)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.decomposition.eigenvalues

    @property
    def basis(self) -> np.ndarray:
        return self.decomposition.basis


def gen_correlation(n: int, eps_c: float, mean_gain: float, rng: np.random.Generator) -> CorrelationMatrix:
    """Random spatial correlation matrix with identical diagonal entries.

    Off-diagonal entries have magnitude ``U[0, eps_c]`` and uniform phase.
    The Hermitian draw is projected to the PSD cone and renormalised back to
    a unit diagonal before scaling by ``mean_gain``.
    """
    if not 0.0 <= eps_c <= 1.0:
        raise DomainError(f"eps_c must lie in [0, 1], got {eps_c}")
    if not mean_gain > 0:
        raise DomainError(f"mean_gain must be positive, got {mean_gain}")
    mag = rng.uniform(0.0, 1.0, size=(n, n)) * eps_c
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(n, n))
    upper = np.triu(mag * np.exp(1j * phase), k=1)
    R = np.eye(n, dtype=np.complex128) + upper + upper.conj().T
    R = psd_repair(R, float(n))
    # Clamping moves the diagonal; rescale rows/columns back to unit diagonal.
    d = np.real(np.diag(R))
    if np.min(d) <= 1e-12:
        raise DomainError("degenerate correlation draw (zero diagonal after PSD repair)")
    scale = 1.0 / np.sqrt(d)
    R = R * np.outer(scale, scale)
    R = 0.5 * (R + R.conj().T)
    np.fill_diagonal(R, 1.0)
    return CorrelationMatrix.from_matrix(mean_gain * R)


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def draw_channel(corr: CorrelationMatrix, rng: np.random.Generator) -> np.ndarray:
    """One realisation ``H = H0 R^{1/2}`` with iid CN(0, 1) ``H0``."""
    n = corr.n
    return _cn(rng, (n, n)) @ sqrt_psd(corr.matrix)


def draw_estimated_channel(
    corr_tilde: CorrelationMatrix,
    comm_gain: float,
    cee: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sample of the estimated channel in row-normalised units.

    The returned matrix satisfies ``E[H^H H] = (comm_gain - cee) * R`` where
    ``R`` is the normalised correlation ``corr_tilde``. This is the
    normalisation under which the diagonal communication-MI expression is a
    Jensen upper bound of the realised MI.
    """
    if not cee < comm_gain:
        raise DomainError(f"estimation error {cee} must be below the channel gain {comm_gain}")
    H = draw_channel(corr_tilde, rng)
    return np.sqrt((comm_gain - cee) / corr_tilde.n) * H


def training_gram(config: SystemConfig, p_train: float) -> float:
    """Per-mode training energy ``P_t / N`` of orthogonal training.

    Orthogonal training has Gram ``(P_t / N) I_N``; only its scale is ever
    needed, so the training matrix itself is not built.
    """
    if p_train < 0:
        raise DomainError(f"training energy must be nonnegative, got {p_train}")
    return p_train / config.n_antennas
