"""Training/data energy split and channel-estimation-error bounds.

``kappa`` is the fraction of the packet energy given to data symbols, so
``P_d = kappa P`` and ``P_t = (1 - kappa) P``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError

__all__ = [
    "PowerSplit",
    "gamma_factor",
    "optimal_kappa",
    "split_power",
    "kappa_asymptotic",
    "cee_lower_bound",
    "snr_rho",
    "equivalent_noise_var",
]


@dataclass(frozen=True)
class PowerSplit:
    """Energy split between training and data plus the resulting CEE bounds.

    ``cee_total`` is the bound on the summed estimation-error variance and
    ``cee_per_coeff = cee_total / N`` is the per-coefficient value that the
    waveform optimisers consume.
    """

    kappa: float
    p_train: float
    p_data: float
    cee_total: float
    cee_per_coeff: float
    gamma: float

    @property
    def total_energy(self) -> float:
        return self.p_train + self.p_data


def _check_positive(**values):
    for name, value in values.items():
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value}")


def gamma_factor(n: int, l_data: int, total_energy: float, noise_power: float, comm_gain: float) -> float:
    """Auxiliary scalar ``(L_d / (L_d - N)) (1 + N s2 / (P g))``; infinite when ``L_d == N``."""
    if l_data == n:
        return math.inf
    return l_data / (l_data - n) * (1.0 + n * noise_power / (total_energy * comm_gain))


def _cee_total_at(kappa, n, total_energy, noise_power, comm_gain):
    return n * noise_power * comm_gain / (n * noise_power + (1.0 - kappa) * total_energy * comm_gain)


def split_power(
    kappa: float,
    n: int,
    l_data: int,
    total_energy: float,
    noise_power: float,
    comm_gain: float,
    allow_full_data: bool = False,
) -> PowerSplit:
    """PowerSplit for a given data fraction ``kappa``.

    ``allow_full_data`` admits ``kappa == 1`` (no training at all), used only
    by the perfect-CSI comparison scheme.
    """
    upper_ok = kappa <= 1.0 if allow_full_data else kappa < 1.0
    if not (kappa > 0.0 and upper_ok):
        raise DomainError(f"kappa must lie in (0, 1), got {kappa}")
    p_data = kappa * total_energy
    p_train = total_energy - p_data
    cee_total = _cee_total_at(kappa, n, total_energy, noise_power, comm_gain)
    return PowerSplit(
        kappa=kappa,
        p_train=p_train,
        p_data=p_data,
        cee_total=cee_total,
        cee_per_coeff=cee_total / n,
        gamma=gamma_factor(n, l_data, total_energy, noise_power, comm_gain),
    )


def optimal_kappa(n: int, l_data: int, total_energy: float, noise_power: float, comm_gain: float) -> PowerSplit:
    """Capacity-maximising training/data split.

    The data fraction is the maximiser of :func:`snr_rho`, available in
    closed form on each side of ``L_d = N``.
    """
    _check_positive(n=n, l_data=l_data, total_energy=total_energy, noise_power=noise_power, comm_gain=comm_gain)
    gamma = gamma_factor(n, l_data, total_energy, noise_power, comm_gain)
    if l_data == n:
        kappa = 0.5
    elif l_data > n:
        # gamma > 1; this form avoids cancellation in gamma - sqrt(gamma (gamma - 1))
        kappa = gamma / (gamma + math.sqrt(gamma * (gamma - 1.0))) if gamma > 0 else math.nan
    else:
        kappa = gamma + math.sqrt(gamma * (gamma - 1.0))
    if not 0.0 < kappa < 1.0:
        raise NumericalError(f"optimal kappa {kappa} outside (0, 1) for N={n}, L_d={l_data}, P={total_energy}")
    return split_power(kappa, n, l_data, total_energy, noise_power, comm_gain)


def kappa_asymptotic(n: int, l_data: int, total_energy: float, noise_power: float, comm_gain: float, regime: str) -> float:
    """High- or low-SNR approximation of the optimal data fraction."""
    if regime == "low":
        return 0.5
    if regime == "high":
        if l_data == n:
            raise DomainError("high-SNR approximation is undefined when L_d == N")
        return math.sqrt(l_data) / (math.sqrt(l_data) + math.sqrt(n))
    raise DomainError(f"regime must be 'high' or 'low', got {regime!r}")


def cee_lower_bound(n: int, train_energy: float, noise_power: float, comm_gain: float):
    """Lower bound on the MMSE channel-estimation error.

    Parameters
    ----------
    n : int
        Number of antennas.
    train_energy : float
        Training energy per stream, ``L_t sigma_t^2``.
    noise_power, comm_gain : float
        Noise variance and mean channel gain.

    Returns
    -------
    (total, per_coeff) : tuple of float
        Bound on the summed error variance and on each diagonal entry.
    """
    if train_energy < 0:
        raise DomainError(f"train_energy must be nonnegative, got {train_energy}")
    _check_positive(noise_power=noise_power, comm_gain=comm_gain)
    per_coeff = noise_power * comm_gain / (noise_power + train_energy * comm_gain)
    return n * per_coeff, per_coeff


def snr_rho(kappa, n: int, l_data: int, total_energy: float, noise_power: float, comm_gain: float):
    """Effective SNR of the averaged communication MI as a function of ``kappa``.

    Accepts scalar or array ``kappa``. The expression is rearranged so the
    ``L_d == N`` case is finite.
    """
    k = np.asarray(kappa, dtype=float)
    if np.any(k <= 0.0) or np.any(k >= 1.0):
        raise DomainError("kappa must lie strictly inside (0, 1)")
    P, s2 = total_energy, noise_power
    # (L_d - N)(Gamma - kappa) without the division by (L_d - N)
    denom = l_data * (1.0 + n * s2 / (P * comm_gain)) - k * (l_data - n)
    rho = l_data * P * k * (1.0 - k) / (n * s2 * denom)
    return float(rho) if rho.ndim == 0 else rho


def equivalent_noise_var(p_data: float, l_data: int, cee: float, noise_power: float) -> float:
    """Noise variance seen by data detection once estimation error is folded in."""
    if p_data < 0 or cee < 0 or noise_power < 0:
        raise DomainError("equivalent_noise_var inputs must be nonnegative")
    if l_data < 1:
        raise DomainError(f"l_data must be >= 1, got {l_data}")
    return p_data / l_data * cee + noise_power
