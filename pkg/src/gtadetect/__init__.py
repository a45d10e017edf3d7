"""Gaussian tree approximation detection for finite-alphabet linear systems."""

from .bp import BeliefTable, FactorTables, build_factor_tables, run_loopy_bp, run_max_product, run_sum_product
from .channel import (
    LinearSystem,
    expand_to_real,
    real_channel_matrix,
    sample_channel,
    sample_real_channel,
    snr_to_noise_variance,
    transmit,
)
from .constellation import Constellation, make_pam, make_qam
from .detectors import (
    DetectionResult,
    detect_gta,
    detect_loopy_bp,
    detect_ml,
    detect_mmse,
    detect_mmse_sic,
    detect_zf,
)
from .errors import (
    BudgetExceededError,
    DegenerateCovarianceError,
    InvalidArgumentError,
    NumericFailureError,
    SingularSystemError,
)
from .harness import SimConfig, SimReport, emit_report, run_sweep
from .posterior import (
    GaussianPosterior,
    correlation,
    correlation_matrix,
    mmse_posterior,
    mutual_information,
    squared_correlations,
    zf_posterior,
)
from .tree import EdgeCPD, RootedTree, edge_cpds, line_tree, max_spanning_tree

__version__ = "0.1.0"
