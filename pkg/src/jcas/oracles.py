"""Independent numerical oracles for the closed-form solvers.

Each check recomputes a quantity by a different route (grid search, direct
formula, Monte-Carlo) and reports its largest residual. The ``oracle-check``
command runs them all; the test-suite uses the same building blocks.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import SystemConfig, draw_channel, energy_from_snr, gen_correlation
from .mutual_info import Allocation, comm_mi_realized, comm_mi_upper
from .power import equivalent_noise_var, optimal_kappa, snr_rho
from .waveform import (
    comm_gradient,
    kkt_certificate,
    optimize_comm,
    optimize_sensing,
    optimize_weighted,
    reconstruct_waveform,
    sensing_gradient,
)

__all__ = [
    "OracleResult",
    "kappa_grid_argmax",
    "weighted_objective_direct",
    "simplex_grid_max",
    "random_spectrum",
    "check_kappa",
    "check_water_filling",
    "check_weighted_grid",
    "check_reconstruction",
    "check_jensen",
    "run_all",
]


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    max_residual: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"[{status}] {self.name}: max residual {self.max_residual:.3e} (tol {self.tolerance:.1e})"
        return text + (f" {self.detail}" if self.detail else "")


def kappa_grid_argmax(n, l_data, total_energy, noise_power, comm_gain, step=1e-5) -> float:
    """Grid maximiser of the effective SNR over ``kappa in (0, 1)``."""
    grid = np.arange(step, 1.0, step)
    rho = snr_rho(grid, n, l_data, total_energy, noise_power, comm_gain)
    return float(grid[int(np.argmax(rho))])


def random_spectrum(rng, n, zero_prob=0.0) -> np.ndarray:
    """Descending nonnegative spectrum with a wide dynamic range."""
    lam = np.sort(10.0 ** rng.uniform(-2.0, 1.0, size=n))[::-1]
    if zero_prob > 0:
        lam[1:][rng.uniform(size=n - 1) < zero_prob] = 0.0
        lam = np.sort(lam)[::-1]
    return lam


def weighted_objective_direct(x, lam, mu, a, p_data, cee, s2, g, l_data, n, w, f_r, f_c, e=1.0):
    """Weighted objective written out from scratch; ``x`` has shape ``(..., N)``."""
    c = (g - cee) / (p_data / l_data * cee + s2)
    sens = n * np.sum(np.log2(lam * (a + x) / s2**e + 1.0), axis=-1)
    comm = l_data * np.sum(np.log2(c * mu * x + 1.0), axis=-1)
    return w * sens / f_r + (1.0 - w) * comm / f_c


def _simplex_points(center, half_width, step, budget):
    """Grid points of ``{x >= 0, sum x = budget}`` near ``center`` (all but the last coordinate)."""
    k = center.size - 1
    axes = []
    for j in range(k):
        lo = max(0.0, center[j] - half_width)
        hi = min(budget, center[j] + half_width)
        i0, i1 = math.ceil(lo / step - 1e-9), math.floor(hi / step + 1e-9)
        axes.append(np.arange(i0, i1 + 1) * step)
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
    last = budget - mesh.sum(axis=1)
    keep = last >= -1e-12 * budget
    return np.column_stack([mesh[keep], np.clip(last[keep], 0.0, None)])


def simplex_grid_max(fun, n, budget, final_step_rel=1e-4, window=5):
    """Maximum of a concave ``fun`` on the energy simplex by coarse-to-fine grids.

    Starts at step ``1e-2 * budget`` over the whole simplex and refines by ten
    in a window of ``window`` cells around the incumbent until the step is
    ``final_step_rel * budget``.
    """
    if n == 1:
        x = np.array([budget])
        return float(fun(x)), x
    step = 1e-2 * budget
    pts = _simplex_points(np.full(n, budget / 2), budget, step, budget)
    vals = fun(pts)
    best = pts[int(np.argmax(vals))]
    while step > final_step_rel * budget * (1 + 1e-9):
        step /= 10.0
        pts = _simplex_points(best, window * 10 * step, step, budget)
        vals = fun(pts)
        best = pts[int(np.argmax(vals))]
    return float(fun(best[None, :])[0]), best


def check_kappa(rng, cases=200) -> OracleResult:
    worst = 0.0
    bad = ""
    for _ in range(cases):
        n = int(rng.integers(1, 9))
        ld = int(rng.integers(n, 257))
        lt = n
        snr = rng.uniform(-10.0, 20.0)
        P = energy_from_snr(snr, lt + ld)
        k = optimal_kappa(n, ld, P, 1.0, 1.0).kappa
        ref = 0.5 if ld == n else kappa_grid_argmax(n, ld, P, 1.0, 1.0)
        r = abs(k - ref)
        if ld == n and k != 0.5:
            r = max(r, 1.0)
        if r > worst:
            worst, bad = r, f"(N={n}, L_d={ld}, SNR={snr:.2f} dB)"
    tol = 1e-4
    return OracleResult("kappa closed form vs grid", worst <= tol, worst, tol, bad if worst > tol else "")


def check_water_filling(rng, cases=500, optimizer_noise_exponent=None) -> OracleResult:
    """KKT certificates of both water-filling solvers on random instances.

    ``optimizer_noise_exponent`` lets a caller run the sensing optimiser with
    a different noise exponent from the certificate (negative control).
    """
    worst = 0.0
    for i in range(cases):
        n = int(rng.integers(1, 9))
        s2 = 2.0
        lam = random_spectrum(rng, n, zero_prob=0.2)
        mu = random_spectrum(rng, n, zero_prob=0.2)
        p_data = 10.0 ** rng.uniform(-1.0, 3.0)
        p_train = 10.0 ** rng.uniform(-1.0, 2.0)
        ld = int(rng.integers(n, 200))
        e_eval = 1.0
        e_opt = e_eval if optimizer_noise_exponent is None else optimizer_noise_exponent
        sol = optimize_sensing(lam, p_train, p_data, s2, n, e_opt)
        g = sensing_gradient(lam, sol.energies, p_train / n, s2, n, e_eval)
        m = sol.multiplier if optimizer_noise_exponent is None else float(np.max(g[sol.energies > 0]))
        cert = kkt_certificate(g, sol.energies, m, p_data)
        worst = max(worst, cert["budget"], cert["stationarity"], cert["slackness"])
        cee = rng.uniform(0.0, 0.5)
        sol = optimize_comm(mu, p_data, cee, s2, 1.0, ld)
        g = comm_gradient(mu, sol.energies, cee, p_data, ld, s2, 1.0)
        cert = kkt_certificate(g, sol.energies, sol.multiplier, p_data)
        worst = max(worst, cert["budget"], cert["stationarity"], cert["slackness"])
    tol = 1e-9
    return OracleResult("water-filling KKT certificates", worst <= tol, worst, tol)


def check_weighted_grid(rng, cases=100, weights=(0.0, 0.25, 0.5, 0.75, 1.0)) -> OracleResult:
    """Weighted solver against a simplex grid search, ``N <= 3``."""
    worst = -np.inf
    for i in range(cases):
        n = int(rng.integers(1, 4))
        w = float(weights[i % len(weights)])
        lam = random_spectrum(rng, n)
        mu = random_spectrum(rng, n)
        p_data = 10.0 ** rng.uniform(0.0, 2.5)
        p_train = 10.0 ** rng.uniform(-0.5, 1.5)
        ld = int(rng.integers(max(n, 2), 150))
        cee = rng.uniform(0.0, 0.4)
        a = p_train / n
        f_r = optimize_sensing(lam, p_train, p_data, 1.0, n).objective
        f_c = optimize_comm(mu, p_data, cee, 1.0, 1.0, ld).objective
        sol = optimize_weighted(w, f_r, f_c, lam, mu, p_train, p_data, 1.0, 1.0, cee, ld, n)

        def fun(x):
            return weighted_objective_direct(x, lam, mu, a, p_data, cee, 1.0, 1.0, ld, n, w, f_r, f_c)

        grid_best, _ = simplex_grid_max(fun, n, p_data)
        mine = float(fun(sol.energies[None, :])[0])
        worst = max(worst, grid_best - mine)
    tol = 1e-6
    return OracleResult("weighted solver vs simplex grid", worst <= tol, max(worst, 0.0), tol)


def check_reconstruction(rng, cases=100) -> OracleResult:
    worst = 0.0
    for _ in range(cases):
        n = int(rng.integers(1, 9))
        ld = int(rng.integers(n, 64))
        z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        U, _ = np.linalg.qr(z)
        e = rng.exponential(size=n) * 10.0
        alloc = Allocation(e, U, float(e.sum()))
        for kind in ("canonical", "random"):
            X = reconstruct_waveform(alloc, l_data=ld, basis_kind=kind, rng=rng)
            G = alloc.gram()
            err = np.linalg.norm(X @ X.conj().T - G) / max(np.linalg.norm(G), 1e-300)
            worst = max(worst, err)
    tol = 1e-8
    return OracleResult("waveform Gram reconstruction", worst <= tol, worst, tol)


def check_jensen(rng, snrs=(-5.0, 1.0, 10.0), draws=2000, config=None) -> OracleResult:
    """Monte-Carlo mean of the realised MI stays below the diagonal bound."""
    base = config or SystemConfig()
    worst = -np.inf
    for snr in snrs:
        cfg = SystemConfig.from_snr(snr, n_antennas=base.n_antennas, l_train=base.l_train, l_data=base.l_data)
        N = cfg.n_antennas
        split = optimal_kappa(N, cfg.l_data, cfg.total_energy, cfg.noise_power, cfg.comm_gain)
        corr = gen_correlation(N, cfg.eps_comm, 1.0, rng)
        cee = split.cee_per_coeff
        sol = optimize_comm(corr.eigenvalues, split.p_data, cee, cfg.noise_power, cfg.comm_gain, cfg.l_data,
                            basis=corr.basis)
        upper = comm_mi_upper(corr.eigenvalues, sol.energies, cee, split.p_data, cfg.l_data,
                              cfg.noise_power, cfg.comm_gain)
        s_eq = equivalent_noise_var(split.p_data, cfg.l_data, cee, cfg.noise_power)
        gram = sol.allocation.gram()
        amp = np.sqrt((cfg.comm_gain - cee) / N)
        vals = np.array([
            comm_mi_realized(amp * draw_channel(corr, rng), gram, s_eq, cfg.l_data) for _ in range(draws)
        ])
        mean = vals.mean()
        se = vals.std(ddof=1) / np.sqrt(draws)
        worst = max(worst, (mean - upper) / se)
    return OracleResult("Jensen bound (standard errors above bound)", worst <= 3.0, worst, 3.0)


def run_all(seed=0, inject_fault=False, jensen_draws=2000) -> list:
    """Every oracle with its own child stream of ``seed``."""
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(5)]
    wf_exp = 2.0 if inject_fault else None
    return [
        check_kappa(streams[0]),
        check_water_filling(streams[1], optimizer_noise_exponent=wf_exp),
        check_weighted_grid(streams[2]),
        check_reconstruction(streams[3]),
        check_jensen(streams[4], draws=jensen_draws),
    ]
