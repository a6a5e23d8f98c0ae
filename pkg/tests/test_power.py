import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jcas.errors import DomainError
from jcas.oracles import kappa_grid_argmax
from jcas.power import (
    cee_lower_bound,
    equivalent_noise_var,
    gamma_factor,
    kappa_asymptotic,
    optimal_kappa,
    snr_rho,
    split_power,
)

# Reference values computed with 30-digit arithmetic from the closed forms.
KAPPA_BASELINE = 0.741472915528656549
KAPPA_HIGH_SNR = 0.794786903842327365
KAPPA_SHORT_DATA = 0.339714227381436057  # N=8, L_d=2, P=100


def test_equal_lengths_give_half():
    for P in (0.1, 1.0, 1e3):
        assert optimal_kappa(4, 4, P, 1.0, 1.0).kappa == 0.5


def test_baseline_kappa():
    split = optimal_kappa(8, 120, 128.0, 1.0, 1.0)
    assert split.gamma == pytest.approx(120 / 112 * (1 + 8 / 128), rel=1e-15)
    assert split.kappa == pytest.approx(KAPPA_BASELINE, abs=1e-14)
    assert abs(split.kappa - kappa_grid_argmax(8, 120, 128.0, 1.0, 1.0)) <= 1e-4


def test_short_data_branch():
    split = optimal_kappa(8, 2, 100.0, 1.0, 1.0)
    assert split.kappa == pytest.approx(KAPPA_SHORT_DATA, abs=1e-14)
    assert abs(split.kappa - kappa_grid_argmax(8, 2, 100.0, 1.0, 1.0)) <= 1e-4


def test_high_snr_limit():
    assert optimal_kappa(8, 120, 1e8, 1.0, 1.0).kappa == pytest.approx(KAPPA_HIGH_SNR, abs=1e-3)
    assert kappa_asymptotic(8, 120, 1.0, 1.0, 1.0, "high") == pytest.approx(KAPPA_HIGH_SNR, abs=1e-15)


def test_asymptotic_regimes():
    assert kappa_asymptotic(8, 120, 1.0, 1.0, 1.0, "low") == 0.5
    assert kappa_asymptotic(3, 3, 1.0, 1.0, 1.0, "low") == 0.5
    with pytest.raises(DomainError):
        kappa_asymptotic(8, 8, 1.0, 1.0, 1.0, "high")
    with pytest.raises(DomainError):
        kappa_asymptotic(8, 9, 1.0, 1.0, 1.0, "medium")


def test_kappa_increases_with_energy_towards_limit():
    P = np.logspace(-1, 7, 40)
    k = np.array([optimal_kappa(8, 120, p, 1.0, 1.0).kappa for p in P])
    assert np.all(np.diff(k) > 0)
    assert np.all(k < KAPPA_HIGH_SNR)


def test_split_bookkeeping():
    split = optimal_kappa(8, 120, 161.14, 1.0, 1.0)
    assert split.p_train + split.p_data == pytest.approx(161.14, rel=1e-12)
    assert split.p_data == split.kappa * 161.14
    assert split.cee_total == pytest.approx(8 * split.cee_per_coeff, rel=1e-15)
    assert 0 < split.kappa < 1


def test_split_power_domain():
    with pytest.raises(DomainError):
        split_power(1.0, 8, 120, 100.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        split_power(0.0, 8, 120, 100.0, 1.0, 1.0)
    full = split_power(1.0, 8, 120, 100.0, 1.0, 1.0, allow_full_data=True)
    assert full.p_train == 0.0 and full.cee_per_coeff == pytest.approx(1.0 / 8)


def test_cee_bound_examples():
    assert cee_lower_bound(4, 0.0, 1.0, 1.0)[1] == 1.0
    total, per = cee_lower_bound(4, 9.0, 1.0, 1.0)
    assert per == pytest.approx(0.1, rel=1e-15)
    assert total == pytest.approx(0.4, rel=1e-15)
    assert cee_lower_bound(4, 1e15, 1.0, 1.0)[1] < 1e-14
    with pytest.raises(DomainError):
        cee_lower_bound(4, -1.0, 1.0, 1.0)


def test_split_cee_matches_per_stream_bound():
    """The summed bound at a given split equals the per-stream bound at training energy P_t / N."""
    for P, n, ld in [(128.0, 8, 120), (10.0, 2, 30), (3.0, 4, 4)]:
        split = optimal_kappa(n, ld, P, 1.3, 0.7)
        _, per = cee_lower_bound(n, split.p_train / n, 1.3, 0.7)
        assert split.cee_total == pytest.approx(per, rel=1e-14)


def test_rho_vanishes_at_ends_and_rejects_outside():
    rho = snr_rho(np.array([1e-9, 1 - 1e-9]), 8, 120, 128.0, 1.0, 1.0)
    assert np.all(rho < 1e-6)
    for k in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            snr_rho(k, 8, 120, 128.0, 1.0, 1.0)


def test_rho_equal_lengths_maximum():
    P, n = 50.0, 4
    expected = P**2 / (4 * n * (n + P))
    assert snr_rho(0.5, n, n, P, 1.0, 1.0) == pytest.approx(expected, rel=1e-14)


def test_rho_matches_gamma_form():
    n, ld, P, s2, g = 8, 120, 128.0, 1.0, 1.0
    G = gamma_factor(n, ld, P, s2, g)
    for k in (0.1, 0.5, 0.9):
        direct = ld * P / ((ld - n) * n * s2) * k * (1 - k) / (G - k)
        assert snr_rho(k, n, ld, P, s2, g) == pytest.approx(direct, rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(1, 8),
    st.integers(0, 248),
    st.floats(-10.0, 20.0),
    st.floats(0.2, 3.0),
)
def test_closed_form_is_argmax(n, extra, snr_db, gain):
    ld = n + extra
    P = (n + ld) * 10.0 ** (snr_db / 10.0)
    k = optimal_kappa(n, ld, P, 1.0, gain).kappa
    grid = np.linspace(1e-5, 1 - 1e-5, 100_000)
    rho = snr_rho(grid, n, ld, P, 1.0, gain)
    assert snr_rho(k, n, ld, P, 1.0, gain) >= rho.max() * (1 - 1e-12)


def test_equivalent_noise():
    assert equivalent_noise_var(120.0, 120, 0.0, 1.0) == 1.0
    assert equivalent_noise_var(120.0, 120, 0.1, 1.0) == pytest.approx(1.1)
    a = equivalent_noise_var(120.0, 120, 0.1, 1.0) - 1.0
    b = equivalent_noise_var(240.0, 120, 0.1, 1.0) - 1.0
    assert b == pytest.approx(2 * a)
    with pytest.raises(DomainError):
        equivalent_noise_var(1.0, 0, 0.1, 1.0)


def test_gamma_infinite_at_equal_lengths():
    assert math.isinf(gamma_factor(4, 4, 1.0, 1.0, 1.0))
