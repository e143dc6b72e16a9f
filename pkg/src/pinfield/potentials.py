"""Pair potentials with curvature metadata.

Two built-in families: the pure quadratic, and a quadratic plus log-cosh
blend whose second derivative interpolates between kappa (at infinity) and 1
(at the origin). Both are even with value 0 at the origin; construction
validates those properties on a grid since downstream sign-flip symmetries
rely on them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

_LOG2 = float(np.log(2.0))


def _log_cosh(t):
    t = np.abs(t)
    return t + np.log1p(np.exp(-2.0 * t)) - _LOG2


def _sech2(t):
    c = np.cosh(np.minimum(np.abs(t), 350.0))
    return 1.0 / (c * c)


@dataclass(frozen=True)
class Potential:
    """Even pair interaction with evaluators for the value and two derivatives.

    c_minus = inf V'', c_plus = sup V''; growth_exponent is the power-law
    exponent of V at infinity. kind is 'gaussian' or 'anharmonic'; param is
    the curvature for the former and kappa for the latter.
    """

    kind: str
    param: float
    v: Callable = field(repr=False, compare=False, default=None)
    vp: Callable = field(repr=False, compare=False, default=None)
    vpp: Callable = field(repr=False, compare=False, default=None)
    c_minus: float = 0.0
    c_plus: float = 0.0
    growth_exponent: float = 2.0

    def __post_init__(self):
        grid = np.linspace(-20.0, 20.0, 401)
        vals = self.v(grid)
        if abs(float(self.v(np.float64(0.0)))) > 1e-12:
            raise ValueError("potential must vanish at the origin")
        if not np.allclose(vals, self.v(-grid), rtol=0, atol=1e-10):
            raise ValueError("potential must be even")
        curv = self.vpp(grid)
        if (curv < self.c_minus - 1e-9).any() or (curv > self.c_plus + 1e-9).any():
            raise ValueError("V'' leaves the declared [c_minus, c_plus] range")

    @property
    def is_gaussian(self) -> bool:
        return self.kind == "gaussian"


def gaussian_potential(curvature: float = 1.0) -> Potential:
    """V(t) = curvature * t^2 / 2."""
    c = float(curvature)
    if c <= 0:
        raise ValueError(f"curvature must be positive, got {c}")
    return Potential(
        kind="gaussian", param=c,
        v=lambda t: 0.5 * c * np.square(t),
        vp=lambda t: c * np.asarray(t, dtype=np.float64),
        vpp=lambda t: c * np.ones_like(np.asarray(t, dtype=np.float64)),
        c_minus=c, c_plus=c, growth_exponent=2.0,
    )


def anharmonic_potential(kappa: float) -> Potential:
    """V(t) = kappa t^2/2 + (1-kappa) log cosh t, kappa in (0, 1].

    V'' = kappa + (1-kappa) sech^2(t), so inf V'' = kappa and sup V'' = 1;
    the same potential then satisfies both an upper curvature bound of 1 and
    a positive lower curvature bound.
    """
    k = float(kappa)
    if not 0.0 < k <= 1.0:
        raise ValueError(f"kappa must lie in (0, 1], got {k}")
    return Potential(
        kind="anharmonic", param=k,
        v=lambda t: 0.5 * k * np.square(t) + (1.0 - k) * _log_cosh(t),
        vp=lambda t: k * np.asarray(t, dtype=np.float64) + (1.0 - k) * np.tanh(t),
        vpp=lambda t: k + (1.0 - k) * _sech2(t),
        c_minus=k, c_plus=1.0, growth_exponent=2.0,
    )
