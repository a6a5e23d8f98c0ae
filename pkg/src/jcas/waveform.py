"""Waveform optimisers: sensing-only, communication-only and weighted joint.

All three allocate the data-energy budget ``P_d`` over eigenmodes. The two
single-objective problems are classical water-filling and are solved exactly
by sorting the floors; the weighted problem has a per-mode quadratic
stationarity condition and its multiplier is found by bisection.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, DomainError, NumericalError
from .mutual_info import Allocation, comm_mi_upper, comm_snr_gain, sensing_mi

__all__ = [
    "WaveformSolution",
    "water_fill",
    "sensing_gradient",
    "comm_gradient",
    "weighted_gradient",
    "kkt_certificate",
    "optimize_sensing",
    "optimize_comm",
    "optimize_weighted",
    "weighted_coefficients",
    "reconstruct_waveform",
    "weighted_objective",
    "total_relative_mi",
]

_LN2 = np.log(2.0)
BISECTION_MAX_ITER = 200
BISECTION_RTOL = 1e-10


@dataclass(frozen=True)
class WaveformSolution:
    """Optimiser output.

    ``multiplier`` is the Lagrange multiplier of the budget constraint in
    objective units (bits, or normalised units for the weighted problem) per
    unit energy, so every active mode has gradient equal to it.
    """

    allocation: Allocation
    objective: float
    multiplier: float
    active_set: tuple
    x_data: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def energies(self) -> np.ndarray:
        return self.allocation.energies


def _as_vector(x, name) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be a vector")
    if np.any(v < -1e-12):
        raise DomainError(f"{name} must be nonnegative")
    return np.clip(v, 0.0, None)


def _basis(basis, n) -> np.ndarray:
    if basis is None:
        return np.eye(n, dtype=np.complex128)
    return np.asarray(basis)


def water_fill(floors, budget: float):
    """Exact water-filling ``q_i = (level - floor_i)^+`` with ``sum q = budget``.

    Modes with an infinite floor never receive energy.

    Returns
    -------
    (energies, level) : (np.ndarray, float)
    """
    f = np.asarray(floors, dtype=float)
    if budget < 0:
        raise DomainError(f"budget must be nonnegative, got {budget}")
    finite = np.isfinite(f)
    if not finite.any():
        raise DomainError("no usable mode: every floor is infinite")
    idx = np.flatnonzero(finite)
    order = idx[np.argsort(f[idx], kind="stable")]
    fs = f[order]
    csum = np.cumsum(fs)
    k = 1
    level = budget + fs[0]
    for m in range(1, fs.size + 1):
        cand = (budget + csum[m - 1]) / m
        if cand > fs[m - 1] or m == 1:
            k, level = m, cand
        else:
            break
    q = np.zeros_like(f)
    active = order[:k]
    q[active] = level - f[active]
    q = np.clip(q, 0.0, None)
    return q, float(level)


def sensing_gradient(eigs_g, energies, train_per_mode, noise_power, n, noise_exponent=1.0):
    """Partial derivatives of the sensing MI with respect to each mode energy."""
    lam = np.asarray(eigs_g, dtype=float)
    q = np.asarray(energies, dtype=float)
    s = noise_power**noise_exponent
    return n * lam / (_LN2 * (s + lam * (train_per_mode + q)))


def comm_gradient(eigs_h, energies, cee, p_data, l_data, noise_power, comm_gain):
    """Partial derivatives of the communication MI bound with respect to each mode energy."""
    mu = np.asarray(eigs_h, dtype=float)
    xi = np.asarray(energies, dtype=float)
    c = comm_snr_gain(cee, p_data, l_data, noise_power, comm_gain)
    return l_data * c * mu / (_LN2 * (1.0 + c * mu * xi))


def weighted_gradient(energies, nu, phi, train_per_mode, eps, eta):
    """Gradient of the weighted objective: ``eps nu/(1+nu(a+x)) + eta phi/(1+phi x)``."""
    x = np.asarray(energies, dtype=float)
    return eps * nu / (1.0 + nu * (train_per_mode + x)) + eta * phi / (1.0 + phi * x)


def kkt_certificate(gradient, energies, multiplier, budget, active_tol=0.0) -> dict:
    """Residuals of the KKT conditions of ``max f(x) s.t. sum x = budget, x >= 0``.

    Returns relative budget error, maximum relative stationarity residual on
    the active set, and the largest relative excess of an inactive mode's
    gradient over the multiplier (positive means slackness is violated).
    """
    g = np.asarray(gradient, dtype=float)
    x = np.asarray(energies, dtype=float)
    active = x > active_tol
    budget_err = abs(x.sum() - budget) / max(budget, 1e-300)
    stat = float(np.max(np.abs(g[active] / multiplier - 1.0))) if active.any() else 0.0
    slack = float(np.max(g[~active] / multiplier - 1.0)) if (~active).any() else -np.inf
    return {"budget": float(budget_err), "stationarity": stat, "slackness": slack}


def optimize_sensing(eigs_g, p_train, p_data, noise_power, n, noise_exponent=1.0, basis=None) -> WaveformSolution:
    """Maximise sensing MI over data-energy allocations in the sensing eigenbasis.

    Floors are ``P_t/N + s2**e / lambda_i``; modes with zero eigenvalue stay
    empty.
    """
    lam = _as_vector(eigs_g, "eigs_g")
    if not p_data > 0:
        raise DomainError(f"p_data must be positive, got {p_data}")
    if not np.any(lam > 0):
        raise DomainError("sensing channel has no signal: every eigenvalue is zero")
    a = p_train / n
    s = noise_power**noise_exponent
    with np.errstate(divide="ignore"):
        floors = np.where(lam > 0, a + s / lam, np.inf)
    q, level = water_fill(floors, p_data)
    objective = sensing_mi(lam, q, a, noise_power, n, noise_exponent)
    return WaveformSolution(
        allocation=Allocation(q, _basis(basis, lam.size), p_data),
        objective=objective,
        multiplier=n / (_LN2 * level),
        active_set=tuple(int(i) for i in np.flatnonzero(q > 0)),
    )


def optimize_comm(eigs_h, p_data, cee, noise_power, comm_gain, l_data, basis=None) -> WaveformSolution:
    """Maximise the communication MI bound over allocations in the channel eigenbasis."""
    mu = _as_vector(eigs_h, "eigs_h")
    if not p_data > 0:
        raise DomainError(f"p_data must be positive, got {p_data}")
    if not np.any(mu > 0):
        raise DomainError("communication channel has no signal: every eigenvalue is zero")
    c = comm_snr_gain(cee, p_data, l_data, noise_power, comm_gain)
    with np.errstate(divide="ignore"):
        floors = np.where(mu > 0, 1.0 / (c * mu), np.inf)
    xi, level = water_fill(floors, p_data)
    objective = comm_mi_upper(mu, xi, cee, p_data, l_data, noise_power, comm_gain)
    return WaveformSolution(
        allocation=Allocation(xi, _basis(basis, mu.size), p_data),
        objective=objective,
        multiplier=l_data / (_LN2 * level),
        active_set=tuple(int(i) for i in np.flatnonzero(xi > 0)),
    )


def weighted_coefficients(w_r, f_r, f_c, eigs_g, eigs_h, p_data, noise_power, comm_gain, cee, l_data, n, noise_exponent=1.0):
    """Per-mode SNR slopes and objective weights of the weighted problem.

    Returns ``(nu, phi, eps, eta)`` where ``nu_i = lambda_i / s2**e``,
    ``phi_i = c mu_i``, ``eps = w N / (ln2 F_r)`` and
    ``eta = (1 - w) L_d / (ln2 F_c)``.
    """
    if not (f_r > 0 and f_c > 0):
        raise DomainError(f"normalisers must be positive, got F_r={f_r}, F_c={f_c}")
    if not 0.0 <= w_r <= 1.0:
        raise DomainError(f"w_r must lie in [0, 1], got {w_r}")
    nu = np.asarray(eigs_g, dtype=float) / noise_power**noise_exponent
    phi = comm_snr_gain(cee, p_data, l_data, noise_power, comm_gain) * np.asarray(eigs_h, dtype=float)
    eps = w_r * n / (_LN2 * f_r)
    eta = (1.0 - w_r) * l_data / (_LN2 * f_c)
    return nu, phi, eps, eta


def _weighted_energies(t, nu, phi, a, eps, eta):
    """Mode energies at water parameter ``t = 1/zeta``.

    Each is the nonnegative root of ``eps/(A+x) + eta/(B+x) = 1/t`` with
    ``A = a + 1/nu`` and ``B = 1/phi``.
    """
    has_s = (nu > 0) & (eps > 0)
    has_c = (phi > 0) & (eta > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        A = np.where(nu > 0, a + 1.0 / nu, np.inf)
        B = np.where(phi > 0, 1.0 / phi, np.inf)
        both = has_s & has_c
        x = np.zeros_like(nu)
        if both.any():
            Ab, Bb = A[both], B[both]
            disc = (Ab - Bb + t * (eta - eps)) ** 2 + 4.0 * eps * eta * t * t
            x[both] = 0.5 * ((eps + eta) * t - (Ab + Bb) + np.sqrt(disc))
        only_s = has_s & ~has_c
        x[only_s] = eps * t - A[only_s]
        only_c = has_c & ~has_s
        x[only_c] = eta * t - B[only_c]
    return np.clip(x, 0.0, None)


def optimize_weighted(
    w_r, f_r, f_c, eigs_g, eigs_h, p_train, p_data, noise_power, comm_gain, cee, l_data, n,
    noise_exponent=1.0, basis=None,
) -> WaveformSolution:
    """Maximise ``w F_sens / F_r + (1 - w) F_comm / F_c`` over a shared diagonal allocation.

    The KKT conditions give each mode energy in closed form as a function of
    the budget multiplier ``zeta``; ``1/zeta`` is found by bisection on
    ``(0, 1 / max_i g_i(P_d)]``, where ``g_i`` is mode ``i``'s marginal
    utility, until the budget holds to ``1e-10`` relative.
    """
    lam = _as_vector(eigs_g, "eigs_g")
    mu = _as_vector(eigs_h, "eigs_h")
    if lam.shape != mu.shape:
        raise DimensionError("sensing and communication spectra differ in size")
    if not p_data > 0:
        raise DomainError(f"p_data must be positive, got {p_data}")
    nu, phi, eps, eta = weighted_coefficients(
        w_r, f_r, f_c, lam, mu, p_data, noise_power, comm_gain, cee, l_data, n, noise_exponent
    )
    a = p_train / n
    # The maximiser is unchanged by a common rescaling of the two weights;
    # normalising keeps the bracket finite for extreme weights.
    scale = max(eps, eta)
    eps, eta = eps / scale, eta / scale
    g_full = weighted_gradient(np.full_like(nu, p_data), nu, phi, a, eps, eta)
    useful = weighted_gradient(np.zeros_like(nu), nu, phi, a, eps, eta) > 0
    if not useful.any():
        raise DomainError("no mode carries any weighted utility")
    # At t = 1/max_i g_i(P_d) the best mode alone absorbs the whole budget.
    t_hi = 1.0 / np.max(g_full[useful])
    s_hi = _weighted_energies(t_hi, nu, phi, a, eps, eta).sum()
    if s_hi < p_data * (1.0 - 1e-12):
        raise NumericalError(
            f"bisection bracket failure: budget at upper end {s_hi} < {p_data} (t_hi={t_hi})"
        )
    t_lo = 0.0
    t = t_hi
    x = None
    for _ in range(BISECTION_MAX_ITER):
        t = 0.5 * (t_lo + t_hi)
        x = _weighted_energies(t, nu, phi, a, eps, eta)
        total = x.sum()
        if abs(total - p_data) <= BISECTION_RTOL * p_data:
            break
        if total > p_data:
            t_hi = t
        else:
            t_lo = t
    else:
        raise NumericalError(f"weighted bisection did not converge (budget error {abs(total - p_data)})")
    # Newton polish of each active root against zeta = 1/t keeps stationarity tight.
    zeta = 1.0 / t
    act = x > 0
    for _ in range(2):
        if not act.any():
            break
        g = weighted_gradient(x, nu, phi, a, eps, eta)
        dg = -(eps * nu**2 / (1.0 + nu * (a + x)) ** 2 + eta * phi**2 / (1.0 + phi * x) ** 2)
        step = np.where(act & (dg < 0), (g - zeta) / np.where(dg < 0, dg, -1.0), 0.0)
        x = np.where(act, np.clip(x - step, 0.0, None), x)
    act = x > 0
    if act.any():
        x[act] += (p_data - x.sum()) / act.sum()
        x = np.clip(x, 0.0, None)
    sens = sensing_mi(lam, x, a, noise_power, n, noise_exponent)
    comm = comm_mi_upper(mu, x, cee, p_data, l_data, noise_power, comm_gain)
    return WaveformSolution(
        allocation=Allocation(x, _basis(basis, lam.size), p_data),
        objective=weighted_objective(sens, comm, f_r, f_c, w_r),
        multiplier=zeta * scale,
        active_set=tuple(int(i) for i in np.flatnonzero(x > 0)),
    )


def reconstruct_waveform(allocation: Allocation, basis=None, l_data: Optional[int] = None,
                         basis_kind: str = "canonical", rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Data block ``X_d = U Q^{1/2} Psi^H`` of shape ``(N, L_d)``.

    ``Psi`` is ``L_d x N`` with orthonormal columns: the first ``N`` columns of
    the identity (``"canonical"``) or an orthonormalised complex Gaussian
    draw (``"random"``). Either way ``X_d X_d^H = U diag(q) U^H``.
    """
    U = allocation.basis if basis is None else np.asarray(basis, dtype=np.complex128)
    n = allocation.n
    if l_data is None:
        raise DimensionError("l_data is required")
    if l_data < n:
        raise DimensionError(f"need l_data >= N for orthonormal columns ({l_data} < {n})")
    if U.shape != (n, n):
        raise DimensionError(f"basis shape {U.shape} does not match {n} modes")
    if basis_kind == "canonical":
        psi = np.eye(l_data, n, dtype=np.complex128)
    elif basis_kind == "random":
        if rng is None:
            raise DomainError("basis_kind='random' needs an rng")
        z = (rng.standard_normal((l_data, n)) + 1j * rng.standard_normal((l_data, n))) / np.sqrt(2.0)
        psi, r = np.linalg.qr(z)
        psi = psi * (np.diag(r) / np.abs(np.diag(r)))
    else:
        raise DomainError(f"basis_kind must be 'canonical' or 'random', got {basis_kind!r}")
    return (U * np.sqrt(allocation.energies)) @ psi.conj().T


def weighted_objective(mi_sens, mi_comm, f_r, f_c, w_r) -> float:
    """``w mi_sens / F_r + (1 - w) mi_comm / F_c``."""
    if not (f_r > 0 and f_c > 0):
        raise DomainError(f"normalisers must be positive, got F_r={f_r}, F_c={f_c}")
    return w_r * mi_sens / f_r + (1.0 - w_r) * mi_comm / f_c


def total_relative_mi(energies, eigs_g, eigs_h, f_r, f_c, p_train, p_data, cee, noise_power, comm_gain,
                      l_data, n, noise_exponent=1.0) -> float:
    """Relative sensing MI plus relative communication MI of one allocation."""
    if not (f_r > 0 and f_c > 0):
        raise DomainError(f"normalisers must be positive, got F_r={f_r}, F_c={f_c}")
    sens = sensing_mi(eigs_g, energies, p_train / n, noise_power, n, noise_exponent)
    comm = comm_mi_upper(eigs_h, energies, cee, p_data, l_data, noise_power, comm_gain)
    return sens / f_r + comm / f_c
