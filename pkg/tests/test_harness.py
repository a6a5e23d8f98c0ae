import csv
import json

import numpy as np
import pytest

from jcas.channel import SystemConfig, energy_from_snr
from jcas.errors import ConfigError
from jcas.figures import figure_jobs, tradeoff_parts
from jcas.harness import (
    ALL_SCHEMES,
    Scheme,
    SchemeKind,
    SweepSpec,
    build_scheme_allocation,
    config_for_value,
    evaluate_scheme,
    make_trial_context,
    run_sweep,
    run_trial,
    run_trial_schemes,
    scheme_split,
    trial_seed,
)

K = SchemeKind


def ctx_for(seed=0, **changes):
    return make_trial_context(SystemConfig(**changes), np.random.default_rng(seed))


def test_scheme_parsing_and_labels():
    assert Scheme.parse("optc") == Scheme(K.OPTC)
    assert Scheme.parse("JCAS(0.3)") == Scheme(K.JCAS, 0.3)
    assert Scheme.parse("JCAS").w_r is None
    assert Scheme(K.JCAS, 0.25).label == "JCAS(0.25)"
    with pytest.raises(ConfigError):
        Scheme.parse("BEST")
    with pytest.raises(ConfigError):
        Scheme(K.JCAS, 1.5)
    with pytest.raises(ConfigError):
        Scheme(K.EQUAL, 0.5)


def test_opts_is_self_normalised():
    r = run_trial(SystemConfig(), Scheme(K.OPTS), np.random.default_rng(1))
    assert r.rel_sensing == pytest.approx(1.0, abs=1e-9)


def test_equal_matches_opts_on_flat_sensing_channel():
    cfg = SystemConfig(eps_sens=0.0)
    opts, equal = run_trial_schemes(cfg, [Scheme(K.OPTS), Scheme(K.EQUAL)], np.random.default_rng(2))
    assert equal.mi_sensing == pytest.approx(opts.mi_sensing, abs=1e-9)


def test_jcas_zero_weight_matches_optc():
    ctx = ctx_for(3)
    a = build_scheme_allocation(Scheme(K.JCAS, 0.0), ctx)
    np.testing.assert_allclose(a.energies, ctx.optc.energies, atol=1e-6)


def test_allocation_examples():
    cfg = SystemConfig(total_energy=energy_from_snr(1.0, 128))
    ctx = make_trial_context(cfg, np.random.default_rng(4))
    eq = build_scheme_allocation(Scheme(K.EQUAL), ctx)
    np.testing.assert_allclose(eq.energies, ctx.split.p_data / 8)
    rnd = build_scheme_allocation(Scheme(K.RANDOM), ctx)
    assert np.all(rnd.energies >= 0)
    assert rnd.energies.sum() == pytest.approx(ctx.split.p_data, rel=1e-14)
    ctx80 = make_trial_context(SystemConfig(l_train=32, l_data=128), np.random.default_rng(4))
    assert scheme_split(Scheme(K.NO_POWER_ALLOC), ctx80).kappa == pytest.approx(0.8, abs=1e-15)


def test_no_cee_variants():
    ctx = ctx_for(5)
    assert scheme_split(Scheme(K.OPTC_NO_CEE), ctx) is ctx.split
    ctx_full = ctx_for(5, no_cee_full_data=True)
    split = scheme_split(Scheme(K.OPTC_NO_CEE), ctx_full)
    assert split.kappa == 1.0 and split.p_train == 0.0
    r = evaluate_scheme(Scheme(K.OPTC_NO_CEE), ctx_full)
    assert np.isfinite(r.mi_comm)


def test_rates_are_mi_over_length():
    cfg = SystemConfig()
    for r in run_trial_schemes(cfg, ALL_SCHEMES, np.random.default_rng(6)):
        assert r.rate_sensing == r.mi_sensing / cfg.total_length
        assert r.rate_comm == r.mi_comm / cfg.total_length
        assert r.mi_sensing >= 0 and r.mi_comm >= 0


def test_cross_basis_fields_consistent():
    ctx = ctx_for(7)
    opts = evaluate_scheme(Scheme(K.OPTS), ctx)
    optc = evaluate_scheme(Scheme(K.OPTC), ctx)
    # same-basis evaluations agree with the diagonal form
    assert opts.mi_sensing_xbasis == pytest.approx(opts.mi_sensing, abs=1e-9)
    assert optc.mi_comm_xbasis == pytest.approx(optc.mi_comm, abs=1e-8)
    # the sensing optimum also bounds every exact cross-basis evaluation
    for s in ALL_SCHEMES:
        if s.kind is not K.NO_POWER_ALLOC:
            assert evaluate_scheme(s, ctx).mi_sensing_xbasis <= opts.mi_sensing + 1e-9


def test_trial_determinism():
    a = run_trial_schemes(SystemConfig(), ALL_SCHEMES, np.random.default_rng(trial_seed(9, "snr_db", 3)))
    b = run_trial_schemes(SystemConfig(), ALL_SCHEMES, np.random.default_rng(trial_seed(9, "snr_db", 3)))
    assert [r.as_dict() for r in a] == [r.as_dict() for r in b]


def test_random_stream_independent_of_other_schemes():
    rng = lambda: np.random.default_rng(trial_seed(1, "snr_db", 0))  # noqa: E731
    alone = run_trial_schemes(SystemConfig(), [Scheme(K.RANDOM)], rng())[0]
    mixed = run_trial_schemes(SystemConfig(), [Scheme(K.OPTC), Scheme(K.RANDOM)], rng())[1]
    assert alone == mixed


def test_axis_configs():
    base = SystemConfig()
    assert config_for_value(base, "snr_db", 10.0).total_energy == pytest.approx(1280.0)
    c = config_for_value(base.replace(l_data=152), "train_ratio", 0.25)
    assert (c.l_train, c.l_data, c.total_energy) == (40, 120, base.total_energy)
    c = config_for_value(base, "total_length", 64)
    assert (c.l_train, c.total_length) == (8, 64)
    assert c.snr_db == pytest.approx(base.snr_db)
    assert config_for_value(base, "weight_w_r", 0.3).weight == 0.3
    assert config_for_value(base, "eps_corr", 0.6).eps_comm == 0.6
    with pytest.raises(ConfigError):
        config_for_value(base, "total_length", 8)
    with pytest.raises(ConfigError):
        config_for_value(base, "bandwidth", 1.0)


def test_sweep_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec("snr_db", (1.0, 0.0, 2.0), 1, ALL_SCHEMES)
    with pytest.raises(ConfigError):
        SweepSpec("snr_db", (1.0,), 0, ALL_SCHEMES)
    with pytest.raises(ConfigError):
        SweepSpec("nope", (1.0,), 1, ALL_SCHEMES)
    spec = SweepSpec("snr_db", [3, 1], 1, ["OPTC", "JCAS(0.2)"])
    assert spec.values == (3.0, 1.0)
    assert spec.schemes[1] == Scheme(K.JCAS, 0.2)


def test_sweep_rows_and_reproducibility(tmp_path):
    spec = SweepSpec("snr_db", (-4.0, 0.0, 4.0), 3, ALL_SCHEMES)
    a = run_sweep(spec, seed=11, threads=1)
    b = run_sweep(spec, seed=11, threads=3)
    assert len(a.rows) == 3 * len(ALL_SCHEMES)
    assert a.config_hash == b.config_hash and a.seed == 11
    for ra, rb in zip(a.rows, b.rows):
        assert ra == rb
        assert all(np.isfinite(v) for v in ra.stderr.values())
    a.write_csv(tmp_path / "a.csv")
    b.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == f"# config_hash={a.config_hash} seed=11"
    header = lines[1].split(",")
    assert header[:10] == ["axis", "value", "scheme", "mi_sensing", "mi_comm", "rate_sensing", "rate_comm",
                           "rel_sensing", "rel_comm", "weighted"]
    assert all(h.startswith("stderr_") for h in header[10:])
    rows = list(csv.reader(lines[2:]))
    assert float(rows[0][3]) == a.rows[0].mean["mi_sensing"]
    a.write_json(tmp_path / "a.json")
    meta = json.loads((tmp_path / "a.json").read_text())
    assert meta["seed"] == 11 and meta["spec"]["base"]["n_antennas"] == 8


def test_single_trial_has_zero_stderr():
    res = run_sweep(SweepSpec("snr_db", (1.0,), 1, (Scheme(K.OPTC),)), seed=0, threads=1)
    assert all(v == 0.0 for v in res.rows[0].stderr.values())


def test_different_seeds_differ():
    spec = SweepSpec("snr_db", (1.0,), 2, (Scheme(K.OPTC),))
    assert run_sweep(spec, seed=1).rows[0].mean != run_sweep(spec, seed=2).rows[0].mean


def test_comm_rate_nondecreasing_in_snr():
    spec = SweepSpec("snr_db", tuple(float(v) for v in range(-10, 21, 5)), 500, (Scheme(K.OPTC),))
    res = run_sweep(spec, seed=3)
    mean = res.series(Scheme(K.OPTC), "rate_comm")
    err = res.series(Scheme(K.OPTC), "rate_comm", stderr=True)
    assert np.all(np.diff(mean) >= -2 * np.hypot(err[1:], err[:-1]))


def test_canned_figures_layout():
    jobs = figure_jobs(SystemConfig(), 5)
    names = [n for job in jobs for n in job.files]
    assert names == [
        "fig3_comm_rate_vs_snr.csv", "fig4_sens_rate_vs_snr.csv", "fig5_comm_rate_vs_ratio.csv",
        "fig6_sens_rate_vs_ratio.csv", "fig7_mi_rate_vs_length.csv", "fig8_relative_mi_vs_weight.csv",
        "fig9_relative_mi_vs_corr.csv",
    ]
    snr = jobs[0].spec
    assert snr.values == tuple(float(v) for v in range(-10, 21, 2))
    ratio = jobs[1].spec
    assert ratio.base.total_length == 160
    assert ratio.values[0] == 0.05 and ratio.values[-1] == 0.5
    assert jobs[2].spec.base.l_train == 8
    parts = tradeoff_parts(SystemConfig(), 5)
    assert {(s.base.comm_gain, s.base.sens_gain) for _, s in parts} == {(1.0, 1.0), (0.7, 1.3), (0.4, 1.6)}
    assert all(s.values == tuple(sorted(s.values)) and s.values[0] == 0.0 for _, s in parts)
