import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nfdilation import catalog
from nfdilation.contraction import defect_operators, make_contraction
from nfdilation.errors import NotCdot1, NotCNU
from nfdilation.modelspace import (
    boundary_data,
    boundary_from_symbol,
    build_model,
    cayley_point,
    char_fn,
    half_plane_transform,
    outer_test,
    taylor_coefficients,
    toeplitz_matrix,
    write_boundary_csv,
)
from nfdilation.opcore import opnorm, unitarity_defect

from conftest import random_contraction, random_unitary


def test_char_fn_at_zero_is_minus_w():
    W = make_contraction(random_contraction(np.random.default_rng(0), 3))
    dd = defect_operators(W)
    F, Fs = dd.frame_DW.frame, dd.frame_DWstar.frame
    assert opnorm(char_fn(W, 0.0, dd) + Fs.conj().T @ W.matrix @ F) <= 1e-14


def test_char_fn_of_scalar_is_blaschke():
    W = make_contraction(np.array([[0.5]]))
    assert char_fn(W, 0.3)[0, 0].real == pytest.approx(-0.23529411764705885, abs=1e-15)
    for lam in (0.0, 0.2 + 0.4j, -0.7j):
        assert abs(char_fn(W, lam)[0, 0] - (lam - 0.5) / (1 - 0.5 * lam)) <= 1e-14


def test_char_fn_of_unitary_is_empty():
    W = make_contraction(random_unitary(np.random.default_rng(1), 3))
    assert char_fn(W, 0.5).shape == (0, 0)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 6), r=st.floats(0.0, 0.999), th=st.floats(0, 2 * np.pi), seed=st.integers(0, 2**31))
def test_char_fn_is_contractive(n, r, th, seed):
    W = make_contraction(random_contraction(np.random.default_rng(seed), n))
    assert opnorm(char_fn(W, r * np.exp(1j * th))) <= 1 + 1e-9


def test_taylor_series_sums_to_char_fn():
    W = make_contraction(random_contraction(np.random.default_rng(2), 3, slack=(1.5, 2.0)))
    C = taylor_coefficients(W, 80)
    lam = 0.4 - 0.3j
    S = sum(c * lam ** k for k, c in enumerate(C))
    assert opnorm(S - char_fn(W, lam)) <= 1e-12


def test_toeplitz_layout():
    T = toeplitz_matrix([np.array([[1.0]]), np.array([[2.0]]), np.array([[3.0]])])
    assert np.array_equal(T.real, [[1, 0, 0], [2, 1, 0], [3, 2, 1]])


def test_boundary_of_scalar_is_inner():
    bd = boundary_data(make_contraction(np.array([[0.5]])), 64)
    assert np.allclose(np.abs(bd.theta[:, 0, 0]), 1.0, atol=1e-9)
    assert np.max(np.abs(bd.delta)) <= 1e-4
    assert not bd.eps_mask.any()


def test_boundary_of_weighted_shift(c11):
    W = c11[0]
    bd = boundary_data(W, 64)
    assert bd.eps_mask.all()
    assert np.all(bd.smin_theta() < 1 - 1e-6)
    assert bd.identity_residual() <= 1e-9


def test_boundary_of_unitary_is_empty():
    bd = boundary_data(make_contraction(random_unitary(np.random.default_rng(3), 3)))
    assert bd.empty and not bd.eps_mask.any()
    assert bd.identity_residual() == 0


@pytest.mark.parametrize("seed", range(10))
def test_boundary_identity(seed):
    W = make_contraction(random_contraction(np.random.default_rng(seed), 4))
    assert boundary_data(W, 32).identity_residual() <= 1e-9


def test_boundary_csv(tmp_path):
    bd = boundary_data(make_contraction(np.array([[0.5]])), 16)
    path = tmp_path / "b.csv"
    write_boundary_csv(bd, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 17


def test_symbol_cosine():
    bd = boundary_from_symbol(lambda w: (1 + w) / 2, 64)
    th = np.angle(bd.grid)
    assert np.allclose(np.abs(bd.theta[:, 0, 0]), np.abs(np.cos(th / 2)), atol=1e-15)
    assert not bd.eps_mask[0] and bd.eps_mask[1:].all()


def test_outer_scalar_is_not_outer():
    v = outer_test(make_contraction(np.array([[0.5]])))
    assert not v.outer and v.agrees_with_class


def test_outer_unitary_is_vacuous():
    v = outer_test(make_contraction(random_unitary(np.random.default_rng(4), 2)))
    assert v.outer and v.agrees_with_class


def test_outer_weighted_shift(c11):
    v = outer_test(c11[0])
    assert v.outer and v.class_name == "C11"
    assert v.range_margin == pytest.approx(0.5, abs=1e-9)


def test_outer_agrees_with_class_on_catalog():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for e in catalog.CATALOG.values():
            assert outer_test(e.build()).agrees_with_class, e.name


def test_model_guards(scalar_half):
    with pytest.raises(NotCNU):
        build_model(make_contraction(random_unitary(np.random.default_rng(5), 2)))
    with pytest.raises(NotCdot1):
        build_model(scalar_half)


def test_model_weighted_shift(c11):
    W, _, res = c11
    ms = build_model(W, 64, residual=res)
    assert ms.rhat_unitarity <= 1e-12
    assert ms.graph_orthogonality <= 1e-8
    assert ms.residual_hausdorff <= 2 * math.pi / 64
    assert unitarity_defect(ms.Rhat) <= 1e-12
    # grid points with nonzero Delta fill the whole circle
    assert ms.rhat_ranks.min() >= 1


def test_half_plane_examples():
    x = np.array([0.0])
    assert cayley_point(x)[0] == pytest.approx(-1.0)
    bd = boundary_data(make_contraction(np.array([[0.5]])), 16)
    hp = half_plane_transform(bd)
    assert hp.norm_check <= 1e-9
    assert hp.symbol_check <= 1e-12
    assert hp.boundary_agreement <= 1e-9
    hp0 = half_plane_transform(bd, x_grid=[0.0])
    assert abs(hp0.Xi[0, 0, 0] - bd.theta[8, 0, 0]) <= 1e-9


def test_half_plane_norm_of_constant():
    from scipy.integrate import quad
    val, _ = quad(lambda x: 1 / (x * x + 1) / math.pi, -np.inf, np.inf)
    assert val == pytest.approx(1.0, abs=1e-12)
