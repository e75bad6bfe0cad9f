import math

import numpy as np
import pytest

from nfdilation import catalog
from nfdilation.contraction import make_contraction
from nfdilation.dilation import minimal_isometric_dilation, residual_part
from nfdilation.errors import (
    DegenerateQ,
    NotBetweenUnitaries,
    ResidualTrivial,
    SingularPolar,
    SourceNotUnitary,
)
from nfdilation.intertwine import (
    IntertwiningMap,
    Verdict,
    extract_unitary_equivalence,
    lambda_zero,
    lift_to_dilation,
    unitary_star_asymptote,
    verify_quasi_affinity,
)
from nfdilation.opcore import TruncatedOperator, hausdorff, opnorm, pseudo_inverse, unitarity_defect

from conftest import random_unitary


def test_residual_is_recomputable():
    rng = np.random.default_rng(0)
    A, B = random_unitary(rng, 3), random_unitary(rng, 3)
    lam = IntertwiningMap(np.eye(3), A, B)
    assert abs(lam.residual - opnorm(B - A)) <= 1e-12
    assert abs(lam.residual - lam.recompute_residual()) <= 1e-12


def test_map_shape_is_checked():
    with pytest.raises(ValueError):
        IntertwiningMap(np.eye(2), np.eye(3), np.eye(3))


def test_quasi_affinity_identity():
    c = verify_quasi_affinity(np.eye(4))
    assert c.verdict is Verdict.QUASI_AFFINITY
    assert c.sigma_min == 1 and c.range_gap == 0


def test_quasi_affinity_geometric_diagonal():
    c = verify_quasi_affinity(np.diag(2.0 ** -np.arange(64)))
    assert c.verdict is Verdict.QUASI_AFFINITY
    assert c.sigma_min == 2.0 ** -63


def test_quasi_affinity_projection():
    c = verify_quasi_affinity(np.diag([1.0, 1.0, 0.0]))
    assert c.verdict is Verdict.NEITHER


def test_lambda_zero_unitary():
    U = random_unitary(np.random.default_rng(1), 4)
    W = make_contraction(U)
    dil = minimal_isometric_dilation(W, 4)
    lam = lambda_zero(residual_part(dil), dil.embed_H, W)
    assert lam.residual <= 1e-12
    assert unitarity_defect(lam.map) <= 1e-12
    assert lam.certificate.verdict is Verdict.QUASI_AFFINITY


def test_lambda_zero_weighted_shift(c11):
    W, dil, res = c11
    lam = lambda_zero(res, dil.embed_H, W)
    assert lam.residual <= 1e-8
    assert lam.certificate.verdict is Verdict.QUASI_AFFINITY
    assert lam.certificate.sigma_min == pytest.approx(0.5, abs=1e-9)


def test_lambda_zero_scalar(scalar_half):
    dil = minimal_isometric_dilation(scalar_half, 32)
    with pytest.raises(ResidualTrivial):
        lambda_zero(residual_part(dil), dil.embed_H, scalar_half)


def test_lift_of_identity_on_unitary():
    U = random_unitary(np.random.default_rng(2), 3)
    W = make_contraction(U)
    dil = minimal_isometric_dilation(W, 4)
    lr = lift_to_dilation(IntertwiningMap(np.eye(3), U, W.op), dil, 4)
    assert opnorm(lr.series - np.eye(3)) <= 1e-12
    assert lr.agreement <= 1e-12


def test_lift_of_lambda_zero_embeds_residual():
    W = catalog.get("diag-mixed").build()
    dil = minimal_isometric_dilation(W, 32)
    res = residual_part(dil)
    lam = lambda_zero(res, dil.embed_H, W)
    src = IntertwiningMap(lam.map, TruncatedOperator.finite(res.op), W.op)
    lr = lift_to_dilation(src, dil, 32, residual=res)
    # the lift is the inclusion of the residual space
    assert opnorm(lr.series - res.space.frame) <= 1e-8
    assert lr.projection_gap <= 1e-12
    assert lr.range_gap <= 1e-8


@pytest.mark.parametrize("n_terms", [32, 48])
def test_lift_weighted_shift(c11, n_terms):
    W, dil, res = c11
    Up, L = catalog.get("weighted-bilateral-64").intertwiner()
    lam = IntertwiningMap(L, Up, W.op)
    assert lam.residual <= 1e-12
    lr = lift_to_dilation(lam, dil, n_terms, residual=res)
    assert lr.agreement <= 1e-8
    assert lr.norm_gap <= 1e-8
    assert lr.projection_gap <= 1e-8
    assert lr.intertwining <= 1e-8
    assert lr.range_gap <= 1e-8


def test_lift_series_is_stable_in_term_count(c11):
    W, dil, res = c11
    Up, L = catalog.get("weighted-bilateral-64").intertwiner()
    lam = IntertwiningMap(L, Up, W.op)
    a = lift_to_dilation(lam, dil, 32)
    b = lift_to_dilation(lam, dil, 48)
    D = b.domain.frame
    assert opnorm((a.series - b.series) @ D) <= 1e-8


def test_lift_requires_unitary_source(scalar_half):
    dil = minimal_isometric_dilation(scalar_half, 4)
    with pytest.raises(SourceNotUnitary):
        lift_to_dilation(IntertwiningMap(np.eye(1), np.array([[0.5]]), scalar_half.op), dil, 2)


def test_asymptote_unitary():
    U = random_unitary(np.random.default_rng(3), 4)
    asy = unitary_star_asymptote(make_contraction(U))
    assert opnorm(asy.Q - np.eye(4)) <= 1e-12
    L = asy.Lambda_star.map
    assert unitarity_defect(L) <= 1e-12
    assert opnorm(L @ asy.U_star @ L.conj().T - U) <= 1e-12


def test_asymptote_scalar(scalar_half):
    with pytest.raises(DegenerateQ):
        unitary_star_asymptote(scalar_half)


def test_asymptote_discards_decaying_directions():
    W = catalog.get("diag-mixed").build()
    asy = unitary_star_asymptote(W)
    assert asy.U_star.shape == (1, 1)
    assert asy.U_star[0, 0] == pytest.approx(np.exp(1j * np.pi / 3))


def test_asymptote_matches_residual(c11):
    W, dil, res = c11
    asy = unitary_star_asymptote(W, n_max=64, residual=res)
    assert asy.Lambda_star.residual <= 1e-8
    assert asy.fixed_point_residual <= 1e-8
    assert asy.unitarity_defect <= 1e-8
    assert asy.residual_hausdorff <= 2 * math.pi / 256
    assert hausdorff(np.linalg.eigvals(asy.closure), np.linalg.eigvals(res.closure)) \
        == asy.residual_hausdorff


def test_universal_property_instance(c11):
    W, dil, res = c11
    lam0 = lambda_zero(res, dil.embed_H, W)
    asy = unitary_star_asymptote(W, n_max=64, residual=res)
    Ls = asy.Lambda_star
    V = pseudo_inverse(lam0.map) @ Ls.map
    assert opnorm(lam0.map @ V - Ls.map) <= 1e-6
    assert unitarity_defect(V) <= 1e-8
    assert opnorm((res.op @ V - V @ asy.U_star) @ Ls.domain.frame) <= 1e-8


def test_extract_equivalence_unitary():
    U = random_unitary(np.random.default_rng(4), 3)
    lam = IntertwiningMap(U, U, U)
    assert opnorm(extract_unitary_equivalence(lam) - U) <= 1e-12


def test_extract_equivalence_positive_diagonal():
    D = np.diag([1.0, 2.0, 3.0])
    lam = IntertwiningMap(D, np.eye(3), np.eye(3))
    assert opnorm(extract_unitary_equivalence(lam) - np.eye(3)) <= 1e-12


def test_extract_equivalence_intertwines():
    rng = np.random.default_rng(5)
    Q = random_unitary(rng, 4)
    Up = np.diag(np.exp(1j * np.array([0.3, 1.2, 2.5, 4.0])))
    target = Q @ Up @ Q.conj().T
    L = Q @ np.diag([1.0, 0.5, 2.0, 3.0])
    V = extract_unitary_equivalence(IntertwiningMap(L, Up, target))
    assert unitarity_defect(V) <= 1e-12
    assert opnorm(target @ V - V @ Up) <= 1e-12


def test_extract_equivalence_singular():
    with pytest.raises(SingularPolar):
        extract_unitary_equivalence(IntertwiningMap(np.diag([1.0, 0.0]), np.eye(2), np.eye(2)))


def test_extract_equivalence_needs_unitaries():
    with pytest.raises(NotBetweenUnitaries):
        extract_unitary_equivalence(IntertwiningMap(np.eye(1), np.array([[0.5]]), np.array([[0.5]])))
