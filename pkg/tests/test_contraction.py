import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nfdilation import catalog
from nfdilation.catalog import unilateral_shift
from nfdilation.contraction import (
    Behavior,
    canonical_decomposition,
    classify,
    defect_operators,
    make_contraction,
    spectral_radius,
)
from nfdilation.dilation import wold_decomposition
from nfdilation.errors import NotContraction, TruncationUnsafe
from nfdilation.opcore import TruncatedOperator, opnorm

from conftest import random_contraction, random_unitary


def test_rejects_norm_above_one():
    with pytest.raises(NotContraction):
        make_contraction(np.array([[1.0 + 1e-6]]))
    make_contraction(np.array([[1.0 + 1e-12]]))


def test_kernel_flag():
    assert make_contraction(np.diag([1.0, 0.5])).kernel_trivial
    C = make_contraction(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert not C.kernel_trivial and C.kernel_dim == 1


def test_defects_of_unitary_vanish():
    dd = defect_operators(make_contraction(random_unitary(np.random.default_rng(0), 4)))
    assert opnorm(dd.D_W) == 0 and opnorm(dd.D_Wstar) == 0
    assert dd.frame_DW.dim == 0 and dd.frame_DWstar.dim == 0


def test_defects_of_scalar():
    dd = defect_operators(make_contraction(np.array([[0.5]])))
    assert dd.D_W[0, 0].real == pytest.approx(0.8660254037844386, abs=1e-15)
    assert dd.D_Wstar[0, 0].real == pytest.approx(0.8660254037844386, abs=1e-15)


def test_defects_of_nilpotent_partial_isometry():
    dd = defect_operators(make_contraction(np.array([[0.0, 1.0], [0.0, 0.0]])))
    assert np.allclose(dd.D_W, np.diag([1.0, 0.0]), atol=1e-15)
    assert np.allclose(dd.D_Wstar, np.diag([0.0, 1.0]), atol=1e-15)


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 16), seed=st.integers(0, 2**31))
def test_defect_identities(n, seed):
    W = random_contraction(np.random.default_rng(seed), n)
    dd = defect_operators(make_contraction(W))
    I = np.eye(n)
    assert opnorm(dd.D_W @ dd.D_W - (I - W.conj().T @ W)) <= 1e-9
    assert opnorm(dd.D_Wstar @ dd.D_Wstar - (I - W @ W.conj().T)) <= 1e-9
    assert opnorm(W @ dd.D_W - dd.D_Wstar @ W) <= 1e-9
    for D in (dd.D_W, dd.D_Wstar):
        w = np.linalg.eigvalsh(D)
        assert w.min() >= -1e-12 and w.max() <= 1 + 1e-12


def test_classify_unitary():
    lab = classify(make_contraction(random_unitary(np.random.default_rng(3), 5)))
    assert lab.name == "C11"
    assert lab.evidence_forward == pytest.approx(1.0) and lab.evidence_backward == pytest.approx(1.0)


def test_classify_scalar():
    lab = classify(make_contraction(np.array([[0.5]])), 64)
    assert lab.name == "C00"
    assert lab.max_forward == pytest.approx(0.5 ** 64)


def test_classify_weighted_bilateral_shift():
    lab = classify(catalog.get("weighted-bilateral-64").build(), 32)
    assert lab.name == "C11"
    assert lab.evidence_forward >= 0.5 - 1e-12 and lab.evidence_backward >= 0.5 - 1e-12


def test_classify_guards_truncation():
    W = make_contraction(unilateral_shift(16))
    with pytest.raises(TruncationUnsafe):
        classify(W, 17)


@pytest.mark.parametrize("name", sorted(catalog.CATALOG))
def test_adjoint_swaps_labels(name):
    W = catalog.get(name).build()
    n = int(min(64, W.op.faithful_power_bound))
    assert classify(W.adjoint(), n).forward == classify(W, n).backward
    assert classify(W.adjoint(), n).backward == classify(W, n).forward


def test_catalog_labels():
    for e in catalog.CATALOG.values():
        W = e.build()
        lab = classify(W, int(min(64, W.op.faithful_power_bound)))
        if "?" in e.expected_class:
            assert Behavior.MIXED in (lab.forward, lab.backward)
        else:
            assert lab.name == e.expected_class


def test_canonical_decomposition_of_unitary():
    cd = canonical_decomposition(make_contraction(random_unitary(np.random.default_rng(4), 4)))
    assert cd.unitary_space.dim == 4 and cd.cnu_space.dim == 0


def test_canonical_decomposition_diagonal():
    cd = canonical_decomposition(make_contraction(np.diag([np.exp(1j * np.pi / 3), 0.5])))
    assert cd.unitary_space.dim == 1
    assert abs(abs(cd.unitary_space.frame[0, 0]) - 1) < 1e-12
    assert cd.cnu_part.matrix[0, 0] == pytest.approx(0.5)


def test_canonical_decomposition_matches_wold_for_isometry():
    n = 16
    M = np.zeros((n + 3, n + 3), dtype=complex)
    M[:3, :3] = np.diag(np.exp(2j * np.pi * np.array([0.1, 0.4, 0.7])))
    M[3:, 3:] = unilateral_shift(n).matrix
    op = TruncatedOperator.truncation(M, n, edge=(n + 2,))
    wd = wold_decomposition(op)
    cd = canonical_decomposition(make_contraction(op))
    assert wd.unitary_space.dim == cd.unitary_space.dim == 3
    assert opnorm(wd.unitary_space.projector - cd.unitary_space.projector) < 1e-9


@settings(max_examples=60, deadline=None)
@given(k=st.integers(0, 3), n=st.integers(1, 5), seed=st.integers(0, 2**31))
def test_canonical_decomposition_reduces(k, n, seed):
    rng = np.random.default_rng(seed)
    Q = random_unitary(rng, k + n)
    B = np.zeros((k + n, k + n), dtype=complex)
    B[:k, :k] = random_unitary(rng, k) if k else B[:k, :k]
    B[k:, k:] = random_contraction(rng, n, slack=(1.05, 2.0))
    W = make_contraction(Q @ B @ Q.conj().T)
    cd = canonical_decomposition(W)
    P = cd.unitary_space.projector
    M = W.matrix
    assert cd.unitary_space.dim == k
    assert cd.cnu_space.dim == n
    assert opnorm(P @ M - M @ P) <= 1e-9
    assert opnorm(P @ M.conj().T - M.conj().T @ P) <= 1e-9
    # finite c.n.u. parts have spectral radius < 1 and decay forward
    assert spectral_radius(cd.cnu_part.matrix) < 1
    assert classify(cd.cnu_part, 4000).forward is Behavior.TO_ZERO
