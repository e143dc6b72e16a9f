"""The energy of a height configuration and the bundled model parameters.

The energy is a sum of 1/(4d)-weighted pair terms over internal bonds,
the same weight applied to V(height) once per boundary bond (the exterior
is held at height zero), minus the field-height coupling. The Gibbs weight
of a configuration is exp(-energy) against the per-site reference measure
(Lebesgue plus an atom of mass epsilon at zero).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .disorder import FieldConfig
from .lattice import Volume
from .potentials import Potential


@dataclass(frozen=True)
class ModelParams:
    """Volume, potential, pinning strength, and one frozen field realization."""

    volume: Volume
    potential: Potential
    epsilon: float
    eta: FieldConfig

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"pinning strength must be >= 0, got {self.epsilon}")
        if self.eta.n != self.volume.n_sites:
            raise ValueError("field configuration does not match the volume")


def hamiltonian(vol: Volume, pot: Potential, eta: FieldConfig, phi: np.ndarray) -> float:
    """Energy of the height vector phi (canonical order, zero outside)."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != (vol.n_sites,):
        raise ValueError(f"phi has shape {phi.shape}, volume has {vol.n_sites} sites")
    if eta.n != vol.n_sites:
        raise ValueError("eta does not match the volume")
    w = 1.0 / (4.0 * vol.d)
    energy = 0.0
    if len(vol.internal_edges):
        i = vol.internal_edges[:, 0]
        j = vol.internal_edges[:, 1]
        energy += w * float(np.sum(pot.v(phi[i] - phi[j])))
    bdeg = vol.boundary_degree()
    energy += w * float(np.sum(bdeg * pot.v(phi)))
    energy -= float(np.dot(eta.values, phi))
    return energy
