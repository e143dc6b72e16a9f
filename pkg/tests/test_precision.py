import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pinfield import (gaussian_log_partition, green_matrix, make_box, precision_matrix,
                      volume_from_sites)
from pinfield.errors import VolumeTooLargeError


def test_single_site_matrix(single_site):
    A = precision_matrix(single_site, (), 1.0)
    assert A.dense.tolist() == [[0.5]]
    G = green_matrix(A)
    assert G.full.tolist() == [[2.0]]


def test_domino_matrix(domino):
    A = precision_matrix(domino, (), 1.0)
    assert np.allclose(A.dense, [[0.5, -0.125], [-0.125, 0.5]])
    G = green_matrix(A)
    assert np.allclose(G.full, [[32 / 15, 8 / 15], [8 / 15, 32 / 15]], rtol=1e-12)
    assert G.logdet == pytest.approx(np.log(15 / 64), rel=1e-12)


def test_domino_pinned_reduces_to_single(domino):
    A = precision_matrix(domino, [(1, 0)], 1.0)
    assert A.dense.tolist() == [[0.5]]
    A2 = precision_matrix(domino, [1], 1.0)  # index form
    assert A2.dense.tolist() == [[0.5]]


def test_pinned_must_lie_inside(domino):
    with pytest.raises(KeyError):
        precision_matrix(domino, [(5, 5)], 1.0)
    with pytest.raises(ValueError):
        precision_matrix(domino, [17], 1.0)


def test_green_inverse_identity(box_3x3):
    A = precision_matrix(box_3x3, (), 1.0)
    G = green_matrix(A)
    assert np.abs(G.full @ A.dense - np.eye(9)).max() < 1e-9


def test_curvature_scales_linearly(box_3x3):
    A1 = precision_matrix(box_3x3, (), 1.0).dense
    A2 = precision_matrix(box_3x3, (), 2.5).dense
    assert np.allclose(A2, 2.5 * A1)


def test_row_sums_nonnegative_interior_zero():
    vol = make_box(2, 2)
    A = precision_matrix(vol, (), 1.0).dense
    sums = A.sum(axis=1)
    assert (sums >= -1e-15).all()
    center = vol.site_index((0, 0))
    assert sums[center] == pytest.approx(0.0, abs=1e-15)
    corner = vol.site_index((-2, -2))
    assert sums[corner] > 0


def test_eigenvalues_in_unit_interval(box_3x3):
    A = precision_matrix(box_3x3, (), 1.0).dense
    eig = np.linalg.eigvalsh(A)
    assert eig.min() > 0 and eig.max() <= 1.0 + 1e-12


def test_green_entries_positive_on_connected_volume():
    vol = make_box(2, 2)
    G = green_matrix(precision_matrix(vol, (), 1.0))
    assert (G.full > 0).all()
    assert np.allclose(G.full, G.full.T)


def test_cg_columns_match_dense():
    vol = make_box(2, 3)
    A = precision_matrix(vol, (), 1.0)
    G = green_matrix(A)
    import scipy.sparse as sp

    from pinfield.precision import GreenMatrix, PrecisionMatrix
    sparse = sp.csr_matrix(A.dense)
    big = PrecisionMatrix(vol=vol, unpinned=A.unpinned, curvature=1.0, sparse=sparse)
    G_iter = GreenMatrix(big)
    j = vol.site_index((0, 0))
    assert np.abs(G_iter.column(j) - G.full[:, j]).max() < 1e-8
    assert G_iter.total_sum() == pytest.approx(G.full.sum(), rel=1e-8)
    assert G_iter.entry(j, j) == pytest.approx(G.full[j, j], rel=1e-9)


def test_non_positive_definite_rejected(box_3x3):
    from pinfield.errors import FactorizationError
    from pinfield.precision import GreenMatrix, PrecisionMatrix
    bad = PrecisionMatrix(vol=box_3x3, unpinned=np.arange(9), curvature=1.0,
                          dense=-np.eye(9))
    with pytest.raises(FactorizationError):
        GreenMatrix(bad)


def test_log_partition_single_site(single_site):
    s = gaussian_log_partition(single_site, (), np.zeros(1), 1.0)
    assert s.log_z == pytest.approx(np.log(2 * np.sqrt(np.pi)), rel=1e-12)
    s2 = gaussian_log_partition(single_site, (), np.array([0.5]), 1.0)
    assert s2.log_z == pytest.approx(np.log(2 * np.sqrt(np.pi)) + 0.25, rel=1e-12)
    assert s2.mean[0] == pytest.approx(1.0, rel=1e-12)


def test_log_partition_domino(domino):
    s = gaussian_log_partition(domino, (), np.zeros(2), 1.0)
    assert np.exp(s.log_z) == pytest.approx(2 * np.pi / np.sqrt(15 / 64), rel=1e-12)


def test_log_partition_internal_consistency(box_3x3, rng):
    eta = rng.normal(size=9)
    s = gaussian_log_partition(box_3x3, (), eta, 1.0)
    G = s.green
    expected = 4.5 * np.log(2 * np.pi) - 0.5 * G.logdet + 0.5 * eta @ G.full @ eta
    assert s.log_z == pytest.approx(expected, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(eta=arrays(np.float64, 9, elements=st.floats(-5, 5)))
def test_shift_identity(eta):
    vol = make_box(2, 1)
    base = gaussian_log_partition(vol, (), np.zeros(9), 1.0)
    tilted = gaussian_log_partition(vol, (), eta, 1.0)
    quad = 0.5 * eta @ tilted.green.full @ eta
    assert tilted.log_z - base.log_z == pytest.approx(quad, abs=1e-10)


def test_log_partition_eta_restriction(box_3x3, rng):
    eta = rng.normal(size=9)
    pinned = [(0, 0)]
    full = gaussian_log_partition(box_3x3, pinned, eta, 1.0)
    idx = [i for i in range(9) if i != box_3x3.site_index((0, 0))]
    restricted = gaussian_log_partition(box_3x3, pinned, eta[idx], 1.0)
    assert full.log_z == pytest.approx(restricted.log_z, rel=1e-14)


def test_dense_limit_guard():
    vol = make_box(2, 40)  # 6561 sites > dense limit
    with pytest.raises(VolumeTooLargeError):
        gaussian_log_partition(vol, (), np.zeros(vol.n_sites), 1.0)
