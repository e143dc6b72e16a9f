"""Exact quenched observables of the Gaussian mixed measure.

The partition function factors over which sites sit on the atom at height
zero: summing the Gaussian partition function of every pinned-subset
complement, weighted by epsilon^(subset size), gives the total mass and all
one-site marginals in closed form. That sum has 2^n terms, so it is limited
to small volumes; at zero pinning the measure is a plain Gaussian and every
volume the dense solver can factor is allowed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .disorder import FieldConfig
from .errors import FactorizationError, VolumeTooLargeError
from .lattice import Volume
from .precision import gaussian_log_partition, precision_matrix

ENUMERATION_LIMIT = 22


@dataclass(frozen=True)
class ExactSolution:
    """Quenched observables at fixed fields, pinning strength and curvature.

    pin_prob, mean and second_moment are per-site in canonical order;
    overlap is the field-magnetization coupling sum(eta * mean) and
    pinned_fraction the site average of pin_prob.
    """

    epsilon: float
    curvature: float
    log_z: float
    pin_prob: np.ndarray
    mean: np.ndarray
    second_moment: np.ndarray
    overlap: float
    pinned_fraction: float

    @property
    def variance(self) -> np.ndarray:
        return self.second_moment - self.mean ** 2

    @property
    def variance_sum(self) -> float:
        return float(np.sum(self.variance))


def _field_values(vol: Volume, eta) -> np.ndarray:
    values = eta.values if isinstance(eta, FieldConfig) else np.asarray(eta, dtype=np.float64)
    if values.shape != (vol.n_sites,):
        raise ValueError(f"eta has shape {values.shape}, volume has {vol.n_sites} sites")
    return values


def exact_mixed_solution(vol: Volume, eta, epsilon: float, curvature: float = 1.0) -> ExactSolution:
    """All exact observables of the mixed measure on a small volume.

    epsilon = 0 short-circuits to the Gaussian solver (any dense-solvable
    volume); epsilon > 0 enumerates all 2^n pinned subsets and requires
    n <= ENUMERATION_LIMIT.
    """
    if epsilon < 0:
        raise ValueError(f"pinning strength must be >= 0, got {epsilon}")
    values = _field_values(vol, eta)
    n = vol.n_sites
    if epsilon == 0.0:
        summary = gaussian_log_partition(vol, (), values, curvature)
        mean = summary.mean
        second = summary.green.diagonal() + mean ** 2
        return ExactSolution(
            epsilon=0.0, curvature=curvature, log_z=summary.log_z,
            pin_prob=np.zeros(n), mean=mean, second_moment=second,
            overlap=float(np.dot(values, mean)), pinned_fraction=0.0)
    if n > ENUMERATION_LIMIT:
        raise VolumeTooLargeError(
            f"{n} sites exceed the {ENUMERATION_LIMIT}-site enumeration cutoff; "
            "use the Gibbs sampler for volumes of this size")
    A = precision_matrix(vol, (), curvature).dense
    log_z, pin, mean, second, status = _kernels.mixed_expansion(A, values, float(np.log(epsilon)))
    if status != _kernels.STATUS_OK:
        raise FactorizationError("subset expansion hit a non-positive-definite block")
    return ExactSolution(
        epsilon=float(epsilon), curvature=float(curvature), log_z=float(log_z),
        pin_prob=pin, mean=mean, second_moment=second,
        overlap=float(np.dot(values, mean)), pinned_fraction=float(np.mean(pin)))


@dataclass(frozen=True)
class ScalingIdentityReport:
    """Two routes to the same mixed-Gaussian log partition function.

    direct evaluates at curvature c; substituted rescales heights by
    1/sqrt(c), which multiplies the continuous reference measure per site by
    1/sqrt(c), the atom mass by sqrt(c), and divides the fields by sqrt(c).
    """

    log_z_direct: float
    log_z_substituted: float

    @property
    def discrepancy(self) -> float:
        scale = max(1.0, abs(self.log_z_direct), abs(self.log_z_substituted))
        return abs(self.log_z_direct - self.log_z_substituted) / scale


def scaling_identity_check(vol: Volume, eta, epsilon0: float, c_minus: float) -> ScalingIdentityReport:
    """Checks log Z[curvature c, pinning e0] against the unit-curvature form.

    The substitution gives log Z = -(n/2) log c + log Z[curvature 1,
    pinning e0*sqrt(c), fields/sqrt(c)]; the exponent is 1/2 per site since
    each height is a scalar.
    """
    if c_minus <= 0:
        raise ValueError(f"curvature must be positive, got {c_minus}")
    values = _field_values(vol, eta)
    direct = exact_mixed_solution(vol, values, epsilon0, curvature=c_minus).log_z
    root = float(np.sqrt(c_minus))
    sub = exact_mixed_solution(vol, values / root, epsilon0 * root, curvature=1.0).log_z
    substituted = -0.5 * vol.n_sites * float(np.log(c_minus)) + sub
    return ScalingIdentityReport(log_z_direct=direct, log_z_substituted=substituted)
