"""Lattice interfaces with delta-pinning and quenched random fields.

Exact Gaussian solver via the pinned-subset expansion, a mixed-measure
Gibbs sampler for general even potentials, and an audit harness that
evaluates both sides of the delocalization and pinning bounds at desk
scale.
"""

__version__ = "0.1.0"

from .audit import (BoundConstants, BoundReport, audit_overlap_bound,
                    audit_pinning_bound, check_gaussian_ibp, check_monotonicity,
                    estimate_constants)
from .disorder import DisorderModel, FieldConfig, sample_disorder
from .exact import (ENUMERATION_LIMIT, ExactSolution, ScalingIdentityReport,
                    exact_mixed_solution, scaling_identity_check)
from .greens import (BoxGreenStats, GreenScanResult, box_green_stats, box_log_partition,
                     extrapolate_green_diagonal, green_diagonal_scan,
                     infinite_volume_green_diagonal)
from .lattice import Volume, make_box, make_grid, volume_from_sites
from .model import ModelParams, hamiltonian
from .potentials import Potential, anharmonic_potential, gaussian_potential
from .precision import (GaussianSummary, GreenMatrix, PrecisionMatrix,
                        gaussian_log_partition, green_matrix, precision_matrix)
from .sampler import (ChainState, DisorderAverageResult, EstimatorResult, MixedLaw,
                      SamplerConfig, chain_height_samples, chain_pin_pattern_counts,
                      disorder_average, estimate_observables, gibbs_sweep,
                      site_conditional)
from .scans import (ScalingScanResult, ScanRow, scan_constant_field, scan_overlap_dgeq3,
                    scan_overlap_scaling_d2)
