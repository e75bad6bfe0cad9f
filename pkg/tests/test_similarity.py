import math

import numpy as np
import pytest

from nfdilation import catalog
from nfdilation.contraction import make_contraction
from nfdilation.errors import NotContraction, NotSimilar
from nfdilation.similarity import characteristic_bound, similarity_battery

from conftest import random_contraction, random_unitary


def test_unitary_passes_everything():
    rep = similarity_battery(random_unitary(np.random.default_rng(0), 3))
    assert rep.similar and rep.unanimous
    assert rep.c_delta == pytest.approx(1.0, abs=1e-12)
    assert rep.b_sup_inverse_powers == pytest.approx(1.0, abs=1e-9)
    assert math.isfinite(rep.e_resolvent_const) and rep.g_theta_inverse_sup == 0


def test_scalar_fails_everything():
    rep = similarity_battery(np.array([[0.5]]))
    assert rep.unanimous and not rep.similar
    assert not rep.b_pass and not rep.c_pass and not rep.oracle_verdict
    assert rep.c_delta == 0.0
    assert rep.b_sup_inverse_powers > 1e6


def test_scaled_similarity_is_not_similar_to_unitary():
    # a contraction similar to a unitary in finite dimensions is unitary, so
    # scaling S D S^-1 down to norm one leaves the spectrum inside the disc
    D = np.diag([np.exp(1j * np.pi / 4), np.exp(-1j * np.pi / 3)])
    c, s = math.cos(math.pi / 5), math.sin(math.pi / 5)
    R = np.array([[c, -s], [s, c]])
    S = R @ np.diag([3.0, 1.0]) @ R.T
    assert np.linalg.cond(S) == pytest.approx(3.0)
    A = S @ D @ np.linalg.inv(S)
    with pytest.raises(NotContraction):
        make_contraction(A)
    rep = similarity_battery(A / np.linalg.norm(A, 2))
    assert rep.unanimous and not rep.similar


@pytest.mark.parametrize("seed", range(6))
def test_criteria_agree_on_random_cases(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    M = random_unitary(rng, n) if seed % 2 == 0 else random_contraction(rng, n)
    rep = similarity_battery(M, n_max=500)
    assert rep.unanimous
    assert rep.similar == (seed % 2 == 0)


@pytest.mark.parametrize("name", ["unitary-diag-8", "scalar-0.5", "diag-mixed"])
def test_delta_bounds_inverse_powers(name):
    rep = similarity_battery(catalog.get(name).build(), raise_on_disagreement=False)
    if rep.c_delta > 0:
        assert rep.b_sup_inverse_powers <= (1 + 1e-8) / math.sqrt(rep.c_delta)


def test_characteristic_bound_unitary():
    cb = characteristic_bound(make_contraction(random_unitary(np.random.default_rng(1), 2)))
    assert cb.degenerate
    assert cb.sup_theta_inverse == 0


def test_characteristic_bound_scalar():
    with pytest.raises(NotSimilar):
        characteristic_bound(make_contraction(np.array([[0.5]])))


def test_characteristic_bound_weighted_shift(c11):
    cb = characteristic_bound(c11[0], n_max=64)
    assert cb.sup_theta_inverse == pytest.approx(2.0, rel=1e-9)
    assert cb.condition == pytest.approx(2.0, rel=1e-9)
    assert cb.ratio_condition == pytest.approx(1.0, rel=1e-9)
