import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oslalm.linalg import Diagonal, as_sparse, spectral_bound
from oslalm.majorizer import (
    Majorizer,
    bb_scale,
    compute_Ldiag,
    diagonal_majorizer,
    majorization_check,
    scalar_majorizer,
)


def test_ldiag_example():
    A = as_sparse([[1.0, 1.0], [0.0, 1.0]])
    np.testing.assert_allclose(compute_Ldiag(A).diag, [2.0, 3.0])
    np.testing.assert_allclose(compute_Ldiag(A, Diagonal([2.0, 1.0])).diag, [4.0, 5.0])


def test_ldiag_floors_untouched_pixels():
    A = as_sparse([[1.0, 0.0], [2.0, 0.0]])
    np.testing.assert_allclose(compute_Ldiag(A).diag, [5.0, 5.0])
    with pytest.raises(ValueError):
        compute_Ldiag(as_sparse(np.zeros((2, 2))))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 15), st.integers(2, 15), st.integers(0, 2**31 - 1))
def test_ldiag_dominates_hessian_for_nonnegative_A(m, n, seed):
    rng = np.random.default_rng(seed)
    A = as_sparse(sp.random(m, n, density=0.6, random_state=seed) + sp.eye(m, n))
    w = rng.uniform(0.1, 3.0, m)
    H = (A.T @ sp.diags(w) @ A).toarray()
    D = np.diag(compute_Ldiag(A, Diagonal(w)).diag)
    assert np.linalg.eigvalsh(D - H).min() >= -1e-10 * np.abs(H).max()


def test_check_passes_and_catches_undersized(rng):
    A = as_sparse(np.abs(rng.standard_normal((40, 20))))
    W = Diagonal(rng.uniform(0.5, 2, 40))
    assert majorization_check(A, W, scalar_majorizer(A, W), samples=200).passed
    assert majorization_check(A, W, diagonal_majorizer(A, W), samples=200).passed
    L = spectral_bound(A, W)
    bad = majorization_check(A, W, Majorizer("scalar", L_scalar=0.9 * L / 1.01), samples=200)
    assert not bad.passed and bad.worst_margin < -1e-3


def test_bb_examples(rng):
    d = rng.uniform(1, 4, 30)
    s = rng.standard_normal(30)
    assert bb_scale(Diagonal(d), s, d * s) == 1.0
    assert bb_scale(np.full(30, 2.0), s, s) == pytest.approx(0.5)
    assert bb_scale(d, s, 0.3 * d * s) == pytest.approx(0.3)
    # clipped to [alpha_min, 1]
    assert bb_scale(d, s, 5 * d * s) == 1.0
    assert bb_scale(d, s, -d * s) == 1e-6
    with pytest.raises(ValueError):
        bb_scale(d, np.zeros(30), s)


def test_majorizer_validation():
    with pytest.raises(ValueError):
        Majorizer("spectral")
    with pytest.raises(ValueError):
        Majorizer("scalar", L_scalar=0.0)
    with pytest.raises(ValueError):
        Majorizer("diagonal")
    m = Majorizer("diagonal", L_diag=Diagonal([1.0, 2.0])).with_alpha(0.5)
    np.testing.assert_allclose(m.diag(), [0.5, 1.0])
    with pytest.raises(ValueError):
        m.with_alpha(1.5)
    with pytest.raises(ValueError):
        Majorizer("scalar", L_scalar=1.0).with_alpha(0.5)


def test_scalar_and_diagonal_on_ct_rows():
    from oslalm.ct import Geometry, ImageGrid, build_system_matrix

    A = build_system_matrix(ImageGrid(12, 12), Geometry(18, 16))
    W = Diagonal(np.random.default_rng(0).uniform(10, 1e4, A.shape[0]))
    assert majorization_check(A, W, scalar_majorizer(A, W), samples=1000).passed
    assert majorization_check(A, W, diagonal_majorizer(A, W), samples=1000).passed
