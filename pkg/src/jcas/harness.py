"""Monte-Carlo experiment engine: comparison schemes, trials and parameter sweeps.

Every trial draws one sensing and one communication correlation matrix plus
one channel estimate, and all schemes are evaluated on that same draw
(common random numbers). Trial streams are derived from the master seed, the
sweep axis and the trial index only, so the same channels also recur across
the values of an axis and across thread counts.
"""

import csv
import enum
import hashlib
import json
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channel import SystemConfig, draw_channel, energy_from_snr, gen_correlation
from .errors import ConfigError, DomainError, JcasError
from .linalg import sqrt_psd
from .mutual_info import (
    Allocation,
    MIReport,
    comm_mi_realized,
    comm_mi_upper,
    sensing_mi,
    sensing_mi_matrix,
)
from .power import PowerSplit, equivalent_noise_var, optimal_kappa, split_power
from .waveform import WaveformSolution, optimize_comm, optimize_sensing, optimize_weighted, weighted_objective

__all__ = [
    "SchemeKind",
    "Scheme",
    "ALL_SCHEMES",
    "TrialContext",
    "make_trial_context",
    "build_scheme_allocation",
    "scheme_split",
    "evaluate_scheme",
    "run_trial",
    "run_trial_schemes",
    "trial_seed",
    "AXES",
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "config_for_value",
    "run_sweep",
    "merge_results",
    "REPORT_COLUMNS",
    "config_hash_of",
]


class SchemeKind(enum.Enum):
    OPTC = "OPTC"
    OPTC_NO_CEE = "OPTC_NO_CEE"
    OPTS = "OPTS"
    JCAS = "JCAS"
    EQUAL = "EQUAL"
    RANDOM = "RANDOM"
    NO_POWER_ALLOC = "NO_POWER_ALLOC"


_JCAS_RE = re.compile(r"^JCAS(?:\(\s*([0-9.eE+-]+)\s*\))?$")


@dataclass(frozen=True)
class Scheme:
    """A waveform design scheme; only ``JCAS`` carries a weight.

    ``JCAS`` with ``w_r=None`` uses the scenario's ``weight`` field, which is
    what the weight sweep varies.
    """

    kind: SchemeKind
    w_r: Optional[float] = None

    def __post_init__(self):
        if self.kind is SchemeKind.JCAS:
            if self.w_r is not None and not 0.0 <= self.w_r <= 1.0:
                raise ConfigError(f"JCAS weight must lie in [0, 1], got {self.w_r}")
        elif self.w_r is not None:
            raise ConfigError(f"{self.kind.value} takes no weight")

    @property
    def label(self) -> str:
        if self.kind is SchemeKind.JCAS and self.w_r is not None:
            return f"JCAS({self.w_r:g})"
        return self.kind.value

    def weight(self, config: SystemConfig) -> float:
        """Weight used for this scheme's weighted objective."""
        return self.w_r if self.w_r is not None else config.weight

    @classmethod
    def parse(cls, text: str) -> "Scheme":
        """Parse ``"OPTC"``, ``"JCAS"`` or ``"JCAS(0.3)"`` (case-insensitive)."""
        t = text.strip().upper()
        m = _JCAS_RE.match(t)
        if m:
            return cls(SchemeKind.JCAS, float(m.group(1)) if m.group(1) else None)
        try:
            return cls(SchemeKind(t))
        except ValueError:
            names = ", ".join(k.value for k in SchemeKind)
            raise ConfigError(f"unknown scheme {text!r}; expected one of {names}") from None

    def __str__(self) -> str:
        return self.label


ALL_SCHEMES = tuple(Scheme(k) for k in SchemeKind)


@dataclass(frozen=True)
class TrialContext:
    """Everything one trial shares across schemes."""

    config: SystemConfig
    corr_g: object
    corr_h: object
    split: PowerSplit
    opts: WaveformSolution
    optc: WaveformSolution
    h_unit: np.ndarray = field(repr=False)
    alloc_rng: np.random.Generator = field(repr=False)

    @property
    def f_r(self) -> float:
        return self.opts.objective

    @property
    def f_c(self) -> float:
        return self.optc.objective

    @property
    def train_per_mode(self) -> float:
        return self.split.p_train / self.config.n_antennas


def make_trial_context(config: SystemConfig, rng: np.random.Generator) -> TrialContext:
    """Draw the trial's correlations and channel, then solve both single objectives.

    The communication correlation is drawn with unit diagonal; the mean
    channel gain enters through the estimation-error terms instead.
    """
    N = config.n_antennas
    corr_g = gen_correlation(N, config.eps_sens, config.sens_gain, rng)
    corr_h = gen_correlation(N, config.eps_comm, 1.0, rng)
    h_unit = draw_channel(corr_h, rng) / np.sqrt(N)
    alloc_rng = rng.spawn(1)[0]
    split = optimal_kappa(N, config.l_data, config.total_energy, config.noise_power, config.comm_gain)
    opts = optimize_sensing(
        corr_g.eigenvalues, split.p_train, split.p_data, config.noise_power, N,
        config.noise_exp, basis=corr_g.basis,
    )
    optc = optimize_comm(
        corr_h.eigenvalues, split.p_data, split.cee_per_coeff, config.noise_power,
        config.comm_gain, config.l_data, basis=corr_h.basis,
    )
    return TrialContext(config, corr_g, corr_h, split, opts, optc, h_unit, alloc_rng)


def scheme_split(scheme: Scheme, ctx: TrialContext) -> PowerSplit:
    """Training/data split a scheme runs with."""
    cfg = ctx.config
    args = (cfg.n_antennas, cfg.l_data, cfg.total_energy, cfg.noise_power, cfg.comm_gain)
    if scheme.kind is SchemeKind.NO_POWER_ALLOC:
        return split_power(cfg.l_data / cfg.total_length, *args)
    if scheme.kind is SchemeKind.OPTC_NO_CEE and cfg.no_cee_full_data:
        return split_power(1.0, *args, allow_full_data=True)
    return ctx.split


def build_scheme_allocation(scheme: Scheme, ctx: TrialContext) -> Allocation:
    """Data-energy allocation of ``scheme`` for this trial."""
    cfg = ctx.config
    N = cfg.n_antennas
    split = scheme_split(scheme, ctx)
    kind = scheme.kind
    if kind is SchemeKind.OPTS:
        return ctx.opts.allocation
    if kind is SchemeKind.OPTC:
        return ctx.optc.allocation
    if kind is SchemeKind.JCAS:
        sol = optimize_weighted(
            scheme.weight(cfg), ctx.f_r, ctx.f_c, ctx.corr_g.eigenvalues, ctx.corr_h.eigenvalues,
            split.p_train, split.p_data, cfg.noise_power, cfg.comm_gain, split.cee_per_coeff,
            cfg.l_data, N, cfg.noise_exp, basis=ctx.corr_g.basis,
        )
        return sol.allocation
    if kind is SchemeKind.EQUAL:
        return Allocation(np.full(N, split.p_data / N), ctx.corr_g.basis, split.p_data)
    if kind is SchemeKind.RANDOM:
        # normalised exponential spacings are uniform on the simplex
        e = ctx.alloc_rng.exponential(size=N)
        return Allocation(split.p_data * e / e.sum(), ctx.corr_g.basis, split.p_data)
    if kind is SchemeKind.OPTC_NO_CEE:
        cee = 0.0
    else:
        cee = split.cee_per_coeff
    sol = optimize_comm(
        ctx.corr_h.eigenvalues, split.p_data, cee, cfg.noise_power, cfg.comm_gain,
        cfg.l_data, basis=ctx.corr_h.basis,
    )
    return sol.allocation


def evaluate_scheme(scheme: Scheme, ctx: TrialContext, allocation: Optional[Allocation] = None) -> MIReport:
    """MIReport of one scheme on one trial.

    The headline MI values pair sensing mode ``i`` with communication mode
    ``i`` (both spectra sorted descending), the common diagonal form all
    optimisers work in. Exact evaluations against the full correlation
    matrices are reported alongside.
    """
    cfg = ctx.config
    N, Ld, L = cfg.n_antennas, cfg.l_data, cfg.total_length
    split = scheme_split(scheme, ctx)
    if allocation is None:
        allocation = build_scheme_allocation(scheme, ctx)
    e = allocation.energies
    a = split.p_train / N
    cee = split.cee_per_coeff
    mi_s = sensing_mi(ctx.corr_g.eigenvalues, e, a, cfg.noise_power, N, cfg.noise_exp)
    mi_c = comm_mi_upper(ctx.corr_h.eigenvalues, e, cee, split.p_data, Ld, cfg.noise_power, cfg.comm_gain)

    gram = allocation.gram()
    mi_s_x = sensing_mi_matrix(gram + a * np.eye(N), ctx.corr_g, cfg.noise_power, cfg.noise_exp)
    s_eq = equivalent_noise_var(split.p_data, Ld, cee, cfg.noise_power)
    amp = np.sqrt(cfg.comm_gain - cee)
    mi_c_x = comm_mi_realized(amp * sqrt_psd(ctx.corr_h.matrix), gram, s_eq, Ld)
    mi_c_sample = comm_mi_realized(amp * ctx.h_unit, gram, s_eq, Ld)

    return MIReport(
        mi_sensing=mi_s,
        mi_comm=mi_c,
        rate_sensing=mi_s / L,
        rate_comm=mi_c / L,
        rel_sensing=mi_s / ctx.f_r,
        rel_comm=mi_c / ctx.f_c,
        weighted=weighted_objective(mi_s, mi_c, ctx.f_r, ctx.f_c, scheme.weight(cfg)),
        mi_sensing_xbasis=mi_s_x,
        mi_comm_xbasis=mi_c_x,
        mi_comm_sample=mi_c_sample,
    )


def run_trial_schemes(config: SystemConfig, schemes: Sequence[Scheme], rng: np.random.Generator) -> list:
    """Evaluate several schemes on one shared trial draw."""
    ctx = make_trial_context(config, rng)
    return [evaluate_scheme(s, ctx) for s in schemes]


def run_trial(config: SystemConfig, scheme: Scheme, rng: np.random.Generator) -> MIReport:
    """One Monte-Carlo trial of a single scheme."""
    return run_trial_schemes(config, [scheme], rng)[0]


AXES = ("snr_db", "train_ratio", "total_length", "weight_w_r", "eps_corr")


def trial_seed(master: int, axis: str, trial: int) -> np.random.SeedSequence:
    """Stream for one trial; independent of axis value and scheme."""
    return np.random.SeedSequence(int(master), spawn_key=(AXES.index(axis), int(trial)))


def config_for_value(base: SystemConfig, axis: str, value: float) -> SystemConfig:
    """Concrete scenario at one point of a sweep axis.

    ``snr_db`` keeps the packet layout and sets the energy; ``train_ratio``
    keeps the packet length and energy and moves symbols between training
    and data; ``total_length`` keeps the training length and the base SNR
    and grows the data part; ``weight_w_r`` sets the scenario weight;
    ``eps_corr`` sets the communication correlation level.
    """
    if axis == "snr_db":
        return base.replace(total_energy=energy_from_snr(value, base.total_length, base.noise_power))
    if axis == "train_ratio":
        L = base.total_length
        lt = int(round(value * L))
        return base.replace(l_train=lt, l_data=L - lt)
    if axis == "total_length":
        L = int(round(value))
        if L <= base.l_train:
            raise ConfigError(f"total length {L} leaves no data symbols after {base.l_train} training symbols")
        return base.replace(l_data=L - base.l_train, total_energy=energy_from_snr(base.snr_db, L, base.noise_power))
    if axis == "weight_w_r":
        return base.replace(weight=float(value))
    if axis == "eps_corr":
        return base.replace(eps_comm=float(value))
    raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {AXES}")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    trials: int
    schemes: tuple
    base: SystemConfig = field(default_factory=SystemConfig)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}; expected one of {AXES}")
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ConfigError("sweep needs at least one value")
        d = np.diff(vals)
        if vals and not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigError("sweep values must be strictly monotone")
        if int(self.trials) < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        schemes = tuple(Scheme.parse(s) if isinstance(s, str) else s for s in self.schemes)
        if not schemes:
            raise ConfigError("sweep needs at least one scheme")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "schemes", schemes)
        for v in vals:
            config_for_value(self.base, self.axis, v)

    def to_dict(self) -> dict:
        return {
            "axis": self.axis,
            "values": list(self.values),
            "trials": self.trials,
            "schemes": [s.label for s in self.schemes],
            "base": self.base.to_dict(),
        }


REPORT_COLUMNS = ("mi_sensing", "mi_comm", "rate_sensing", "rate_comm", "rel_sensing", "rel_comm", "weighted")


@dataclass(frozen=True)
class SweepRow:
    axis: str
    value: float
    scheme: str
    mean: dict
    stderr: dict


def config_hash_of(payload: dict) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class SweepResult:
    """Trial-averaged reports per (axis value, scheme) with standard errors."""

    rows: tuple
    seed: int
    config_hash: str
    spec: dict

    def row(self, value: float, scheme) -> SweepRow:
        label = scheme.label if isinstance(scheme, Scheme) else str(scheme)
        for r in self.rows:
            if r.value == value and r.scheme == label:
                return r
        raise KeyError((value, label))

    def series(self, scheme, key: str, stderr: bool = False) -> np.ndarray:
        """Values of ``key`` for one scheme, in axis order."""
        label = scheme.label if isinstance(scheme, Scheme) else str(scheme)
        src = [r for r in self.rows if r.scheme == label]
        if not src:
            raise KeyError(label)
        return np.array([(r.stderr if stderr else r.mean)[key] for r in src])

    def header_comment(self) -> str:
        return f"# config_hash={self.config_hash} seed={self.seed}"

    def write_csv(self, path) -> None:
        cols = ["axis", "value", "scheme", *REPORT_COLUMNS, *(f"stderr_{c}" for c in REPORT_COLUMNS)]
        with open(path, "w", newline="") as fh:
            fh.write(self.header_comment() + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in self.rows:
                w.writerow(
                    [r.axis, repr(r.value), r.scheme]
                    + [repr(float(r.mean[c])) for c in REPORT_COLUMNS]
                    + [repr(float(r.stderr[c])) for c in REPORT_COLUMNS]
                )

    def to_json(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "spec": self.spec,
            "rows": [
                {"axis": r.axis, "value": r.value, "scheme": r.scheme, "mean": r.mean, "stderr": r.stderr}
                for r in self.rows
            ],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _aggregate(reports: Sequence[MIReport]):
    keys = MIReport.field_names()
    n = len(reports)
    mean, err = {}, {}
    for k in keys:
        x = [float(getattr(r, k)) for r in reports]
        m = math.fsum(x) / n
        mean[k] = m
        if n > 1 and math.isfinite(m):
            var = math.fsum((v - m) ** 2 for v in x) / (n - 1)
            err[k] = math.sqrt(var / n)
        else:
            err[k] = 0.0 if math.isfinite(m) else m
    return mean, err


def run_sweep(spec: SweepSpec, seed: Optional[int] = None, threads: Optional[int] = None) -> SweepResult:
    """Run every (axis value, trial) and average per scheme.

    Results do not depend on ``threads``: each trial has its own stream and
    averages are taken in trial order with exactly rounded sums.
    """
    master = spec.base.seed if seed is None else int(seed)
    workers = max(1, threads if threads else (os.cpu_count() or 1))
    rows = []
    for value in spec.values:
        cfg = config_for_value(spec.base, spec.axis, value)

        def one(t, cfg=cfg, value=value):
            ss = trial_seed(master, spec.axis, t)
            try:
                return run_trial_schemes(cfg, spec.schemes, np.random.default_rng(ss))
            except JcasError as exc:
                raise type(exc)(
                    f"trial failed at {spec.axis}={value!r}, trial {t}, seed {master}: {exc}"
                ) from exc

        if workers == 1:
            per_trial = [one(t) for t in range(spec.trials)]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                per_trial = list(pool.map(one, range(spec.trials)))
        for j, scheme in enumerate(spec.schemes):
            mean, err = _aggregate([reports[j] for reports in per_trial])
            rows.append(SweepRow(spec.axis, value, scheme.label, mean, err))
    meta = spec.to_dict()
    meta["seed"] = master
    return SweepResult(rows=tuple(rows), seed=master, config_hash=config_hash_of(meta), spec=meta)


def merge_results(parts: Sequence[tuple], seed: int) -> SweepResult:
    """Interleave several sweeps over the same axis values, value-major.

    ``parts`` is a sequence of ``(tag, SweepResult)``; each row's scheme label
    becomes ``f"{scheme}[{tag}]"``.
    """
    if not parts:
        raise DomainError("nothing to merge")
    values = [r.value for r in parts[0][1].rows]
    values = list(dict.fromkeys(values))
    rows = []
    for v in values:
        for tag, res in parts:
            for r in res.rows:
                if r.value == v:
                    rows.append(SweepRow(r.axis, r.value, f"{r.scheme}[{tag}]", r.mean, r.stderr))
    meta = {"parts": [{"tag": tag, "spec": res.spec} for tag, res in parts], "seed": seed}
    return SweepResult(rows=tuple(rows), seed=seed, config_hash=config_hash_of(meta), spec=meta)
