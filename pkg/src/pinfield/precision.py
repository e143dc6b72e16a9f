"""Precision and Green matrices of the Gaussian interface on a volume.

For the quadratic potential with curvature c the energy Hessian has c/2 on
the diagonal (every site touches exactly 2d bonds weighted c/(4d)) and
-c/(4d) on internal nearest-neighbor pairs. Pinned sites are removed from
the matrix exactly like exterior sites: their height is frozen at zero.
All eigenvalues lie in (0, c]; positivity is certified by the Cholesky
factorization and the upper bound by the Gershgorin row check performed at
assembly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .disorder import FieldConfig
from .errors import FactorizationError, VolumeTooLargeError
from .lattice import Volume

DENSE_LIMIT = 4096
CG_TOL = 1e-10


@dataclass(frozen=True)
class PrecisionMatrix:
    """Hessian on the unpinned sub-volume, in the sub-volume's canonical order."""

    vol: Volume
    unpinned: np.ndarray
    curvature: float
    dense: np.ndarray | None = field(repr=False, default=None)
    sparse: sp.csr_matrix | None = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.unpinned.shape[0]

    def matrix(self):
        return self.dense if self.dense is not None else self.sparse


def precision_matrix(vol: Volume, pinned=(), curvature: float = 1.0) -> PrecisionMatrix:
    """Assembles the Hessian over the unpinned sites of the volume.

    pinned is a collection of canonical site indices or coordinate tuples.
    """
    if curvature <= 0:
        raise ValueError(f"curvature must be positive, got {curvature}")
    pin_idx = set()
    for p in pinned:
        if isinstance(p, (int, np.integer)):
            if not 0 <= int(p) < vol.n_sites:
                raise ValueError(f"pinned index {p} outside the volume")
            pin_idx.add(int(p))
        else:
            pin_idx.add(vol.site_index(tuple(p)))
    unpinned = np.asarray([i for i in range(vol.n_sites) if i not in pin_idx], dtype=np.int64)
    n = unpinned.shape[0]
    sub_of = -np.ones(vol.n_sites, dtype=np.int64)
    sub_of[unpinned] = np.arange(n)
    diag = 0.5 * curvature
    off = -curvature / (4.0 * vol.d)
    rows, cols = [], []
    for i, j in vol.internal_edges:
        si, sj = sub_of[i], sub_of[j]
        if si >= 0 and sj >= 0:
            rows.append(si)
            cols.append(sj)
    if n <= DENSE_LIMIT:
        A = np.zeros((n, n))
        np.fill_diagonal(A, diag)
        if rows:
            A[rows, cols] = off
            A[cols, rows] = off
        _gershgorin_check(A, curvature)
        return PrecisionMatrix(vol=vol, unpinned=unpinned, curvature=curvature, dense=A)
    r = np.asarray(rows + cols + list(range(n)))
    c = np.asarray(cols + rows + list(range(n)))
    v = np.concatenate([np.full(2 * len(rows), off), np.full(n, diag)])
    A = sp.csr_matrix((v, (r, c)), shape=(n, n))
    return PrecisionMatrix(vol=vol, unpinned=unpinned, curvature=curvature, sparse=A)


def _gershgorin_check(A: np.ndarray, curvature: float) -> None:
    # center c/2, radius <= c/2: spectrum confined to (0, c]
    radius = np.abs(A).sum(axis=1) - np.abs(np.diag(A))
    if (radius > 0.5 * curvature + 1e-12).any():
        raise FactorizationError("Gershgorin radius exceeds c/2: bad assembly")


class GreenMatrix:
    """Inverse of a PrecisionMatrix.

    Dense volumes (n <= DENSE_LIMIT) carry the full inverse and log-det from
    a Cholesky factorization; larger volumes answer column queries through
    conjugate-gradient solves at relative residual CG_TOL.
    """

    def __init__(self, precision: PrecisionMatrix):
        self.precision = precision
        self.full: np.ndarray | None = None
        self.logdet: float | None = None
        self._chol = None
        self._columns: dict[int, np.ndarray] = {}
        A = precision.matrix()
        if precision.dense is not None:
            try:
                chol, low = sla.cho_factor(precision.dense, lower=True)
            except np.linalg.LinAlgError as exc:
                raise FactorizationError(f"precision matrix is not positive definite: {exc}") from exc
            self._chol = (chol, low)
            self.logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
            self.full = sla.cho_solve(self._chol, np.eye(precision.n))
            self.full = 0.5 * (self.full + self.full.T)
        else:
            self._sparse = A

    @property
    def n(self) -> int:
        return self.precision.n

    def column(self, j: int) -> np.ndarray:
        if self.full is not None:
            return self.full[:, j]
        col = self._columns.get(j)
        if col is None:
            rhs = np.zeros(self.n)
            rhs[j] = 1.0
            col, info = spla.cg(self._sparse, rhs, rtol=CG_TOL, atol=0.0, maxiter=20 * self.n)
            if info != 0:
                raise FactorizationError(f"conjugate gradient failed on column {j} (info={info})")
            self._columns[j] = col
        return col

    def entry(self, i: int, j: int) -> float:
        return float(self.column(j)[i])

    def diagonal(self) -> np.ndarray:
        if self.full is not None:
            return np.diag(self.full).copy()
        raise VolumeTooLargeError("full diagonal requires the dense path")

    def total_sum(self) -> float:
        if self.full is not None:
            return float(self.full.sum())
        ones = np.ones(self.n)
        x, info = spla.cg(self._sparse, ones, rtol=CG_TOL, atol=0.0, maxiter=20 * self.n)
        if info != 0:
            raise FactorizationError(f"conjugate gradient failed on the all-ones solve (info={info})")
        return float(x.sum())

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self._chol is not None:
            return sla.cho_solve(self._chol, np.asarray(b, dtype=np.float64))
        x, info = spla.cg(self._sparse, b, rtol=CG_TOL, atol=0.0, maxiter=20 * self.n)
        if info != 0:
            raise FactorizationError(f"conjugate gradient failed (info={info})")
        return x

    def quad_form(self, eta: np.ndarray) -> float:
        return float(np.dot(eta, self.solve(eta)))


def green_matrix(A: PrecisionMatrix) -> GreenMatrix:
    return GreenMatrix(A)


@dataclass(frozen=True)
class GaussianSummary:
    """Exact Gaussian observables at zero pinning on the unpinned sub-volume."""

    log_z: float
    mean: np.ndarray
    green: GreenMatrix

    @property
    def covariance(self) -> np.ndarray:
        return self.green.full


def gaussian_log_partition(vol: Volume, pinned, eta, curvature: float = 1.0) -> GaussianSummary:
    """log of the zero-pinning Gaussian partition function, with the tilted mean.

    log Z = (|D|/2) log 2 pi - (1/2) log det A + (1/2) eta' G eta, where D is
    the unpinned sub-volume. eta may be given on the full volume (it is
    restricted to D) or on D directly.
    """
    A = precision_matrix(vol, pinned, curvature)
    if A.dense is None:
        raise VolumeTooLargeError(
            f"log-partition needs the dense factorization; {A.n} sites exceed {DENSE_LIMIT}")
    G = green_matrix(A)
    values = eta.values if isinstance(eta, FieldConfig) else np.asarray(eta, dtype=np.float64)
    if values.shape[0] == vol.n_sites:
        values = values[A.unpinned]
    elif values.shape[0] != A.n:
        raise ValueError("eta matches neither the volume nor its unpinned part")
    mean = G.solve(values)
    quad = float(np.dot(values, mean))
    log_z = 0.5 * A.n * np.log(2.0 * np.pi) - 0.5 * G.logdet + 0.5 * quad
    return GaussianSummary(log_z=log_z, mean=mean, green=G)
