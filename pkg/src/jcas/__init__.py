"""Joint communication and sensing waveform design with imperfect channel knowledge."""

from .channel import CorrelationMatrix, SystemConfig, draw_channel, draw_estimated_channel, gen_correlation
from .errors import ConfigError, DimensionError, DomainError, JcasError, NumericalError
from .harness import Scheme, SchemeKind, SweepResult, SweepSpec, run_sweep, run_trial
from .mutual_info import Allocation, MIReport, comm_mi_realized, comm_mi_upper, sensing_mi, sensing_mi_matrix
from .power import PowerSplit, cee_lower_bound, optimal_kappa, snr_rho, split_power
from .waveform import (
    WaveformSolution,
    optimize_comm,
    optimize_sensing,
    optimize_weighted,
    reconstruct_waveform,
    total_relative_mi,
    weighted_objective,
)

__version__ = "0.1.0"
