"""Quenched field configurations and the i.i.d. laws that generate them."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .lattice import Volume
from .rng import counter_normals, counter_uniforms

_STREAM_TAG = 0xF1E1D


@dataclass(frozen=True)
class FieldConfig:
    """One realization of the local fields, in canonical site order."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def to_json(self) -> str:
        return json.dumps({"eta": self.values.tolist()})

    @staticmethod
    def from_json(text: str) -> "FieldConfig":
        return FieldConfig(np.asarray(json.loads(text)["eta"], dtype=np.float64))


@dataclass(frozen=True)
class DisorderModel:
    """i.i.d. law of the local fields: zero, constant h, gaussian sigma, or rademacher h."""

    law: str
    h: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.law not in ("zero", "constant", "gaussian", "rademacher"):
            raise ValueError(f"unknown disorder law {self.law!r}")
        if self.law == "gaussian" and self.sigma < 0:
            raise ValueError("gaussian disorder needs sigma >= 0")

    @property
    def second_moment(self) -> float:
        if self.law == "zero":
            return 0.0
        if self.law == "constant":
            return self.h ** 2
        if self.law == "gaussian":
            return self.sigma ** 2
        return self.h ** 2

    @property
    def is_symmetric(self) -> bool:
        return self.law != "constant" or self.h == 0.0


def sample_disorder(model: DisorderModel, vol: Volume, seed: int) -> FieldConfig:
    """Draws one field per site; site i reads the counter-based stream at index i.

    The draw for a site depends only on (seed, site position in canonical
    order, law), never on how the volume is traversed.
    """
    n = vol.n_sites
    idx = np.arange(n, dtype=np.uint64)
    if model.law == "zero":
        values = np.zeros(n)
    elif model.law == "constant":
        values = np.full(n, float(model.h))
    elif model.law == "gaussian":
        values = model.sigma * counter_normals(seed, idx, tags=(_STREAM_TAG,))
    else:
        u = counter_uniforms(seed, idx, tags=(_STREAM_TAG,))
        values = np.where(u < 0.5, -float(model.h), float(model.h))
    return FieldConfig(values)
