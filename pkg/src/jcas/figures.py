"""Canned sweeps that regenerate the data behind every result figure."""

import os
from dataclasses import dataclass
from typing import Optional

from .channel import SystemConfig, energy_from_snr
from .harness import Scheme, SchemeKind, SweepSpec, merge_results, run_sweep

__all__ = ["FigureJob", "figure_jobs", "tradeoff_parts", "run_figures", "TRADEOFF_GAINS", "TRADEOFF_SNRS"]

_K = SchemeKind
_ALL = (
    Scheme(_K.OPTC), Scheme(_K.OPTC_NO_CEE), Scheme(_K.OPTS), Scheme(_K.JCAS),
    Scheme(_K.EQUAL), Scheme(_K.RANDOM), Scheme(_K.NO_POWER_ALLOC),
)
_SNR_SCHEMES = _ALL[:3] + (Scheme(_K.JCAS, 0.2), Scheme(_K.JCAS, 0.5), Scheme(_K.JCAS, 0.8)) + _ALL[4:]
_RELATIVE = (Scheme(_K.JCAS), Scheme(_K.OPTC), Scheme(_K.OPTS), Scheme(_K.EQUAL), Scheme(_K.RANDOM))

TRADEOFF_GAINS = ((1.0, 1.0), (0.7, 1.3), (0.4, 1.6))
TRADEOFF_SNRS = (-5.0, 1.0, 10.0)


def _grid(start, stop, step):
    n = int(round((stop - start) / step)) + 1
    return tuple(float(round(start + i * step, 10)) for i in range(n))


@dataclass(frozen=True)
class FigureJob:
    """One sweep and the file names its result is written under."""

    files: tuple
    spec: SweepSpec


def figure_jobs(base: SystemConfig, trials: int) -> list:
    """Sweeps for the rate, relative-MI and length figures.

    ``base`` supplies everything a figure does not pin down itself.
    """
    snr_base = base.snr_db
    long_packet = base.replace(l_train=8, l_data=152)
    long_packet = long_packet.replace(total_energy=energy_from_snr(snr_base, 160, base.noise_power))
    return [
        FigureJob(
            ("fig3_comm_rate_vs_snr.csv", "fig4_sens_rate_vs_snr.csv"),
            SweepSpec("snr_db", _grid(-10.0, 20.0, 2.0), trials, _SNR_SCHEMES, base),
        ),
        FigureJob(
            ("fig5_comm_rate_vs_ratio.csv", "fig6_sens_rate_vs_ratio.csv"),
            SweepSpec("train_ratio", _grid(0.05, 0.5, 0.05), trials, _ALL, long_packet),
        ),
        FigureJob(
            ("fig7_mi_rate_vs_length.csv",),
            SweepSpec("total_length", (10, 12, 16, 24, 32, 48, 64, 96, 128, 160, 192, 256), trials,
                      (Scheme(_K.OPTC), Scheme(_K.OPTS), Scheme(_K.JCAS), Scheme(_K.EQUAL)), base),
        ),
        FigureJob(
            ("fig8_relative_mi_vs_weight.csv",),
            SweepSpec("weight_w_r", _grid(0.0, 1.0, 0.1), trials, _RELATIVE, base),
        ),
        FigureJob(
            ("fig9_relative_mi_vs_corr.csv",),
            SweepSpec("eps_corr", _grid(0.0, 1.0, 0.1), trials, _RELATIVE, base.replace(eps_sens=0.3)),
        ),
    ]


def tradeoff_parts(base: SystemConfig, trials: int) -> list:
    """(tag, spec) pairs of the sensing/communication trade-off front."""
    parts = []
    front_base = base.replace(eps_comm=0.8, eps_sens=0.3)
    for comm_gain, sens_gain in TRADEOFF_GAINS:
        for snr in TRADEOFF_SNRS:
            cfg = front_base.replace(
                comm_gain=comm_gain, sens_gain=sens_gain,
                total_energy=energy_from_snr(snr, base.total_length, base.noise_power),
            )
            tag = f"sh2={comm_gain:g},sg2={sens_gain:g},snr={snr:g}"
            spec = SweepSpec("weight_w_r", _grid(0.0, 1.0, 0.1), trials, (Scheme(_K.JCAS), Scheme(_K.EQUAL)), cfg)
            parts.append((tag, spec))
    return parts


def run_figures(out_dir, base: Optional[SystemConfig] = None, trials: int = 500,
                seed: Optional[int] = None, threads: Optional[int] = None, log=None) -> list:
    """Run every canned sweep and write CSV plus JSON sidecar files.

    Returns the written CSV paths.
    """
    base = base or SystemConfig()
    seed = base.seed if seed is None else int(seed)
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def emit(result, name):
        path = os.path.join(out_dir, name)
        result.write_csv(path)
        result.write_json(os.path.splitext(path)[0] + ".json")
        written.append(path)
        if log:
            log(f"wrote {path}")

    for job in figure_jobs(base, trials):
        result = run_sweep(job.spec, seed=seed, threads=threads)
        for name in job.files:
            emit(result, name)
    parts = [(tag, run_sweep(spec, seed=seed, threads=threads)) for tag, spec in tradeoff_parts(base, trials)]
    emit(merge_results(parts, seed), "fig9_tradeoff.csv")
    return written
