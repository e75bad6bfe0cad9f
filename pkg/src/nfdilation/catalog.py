"""Built-in operators used by the CLI and the test-suite.

Every entry records its expected class and a short provenance note.  The
truncated sequence-space entries declare their truncation edge so that
certificates are restricted to faithful coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .contraction import Contraction, make_contraction
from .errors import ArgumentError
from .opcore import Ambient, TruncatedOperator


def weighted_bilateral_shift(m: int, weights: Optional[dict] = None) -> TruncatedOperator:
    """Forward shift e_k -> w_k e_{k+1} on coordinates -m..m.

    `weights` maps k to w_k (default: 1/2 at k = 0, 1 elsewhere).  Index
    i of the matrix corresponds to coordinate k = i - m.  The edge is the
    pair of extreme coordinates: e_m loses its image and e_{-m} loses its
    preimage under truncation.
    """
    if m < 1:
        raise ArgumentError("window half-width must be positive")
    weights = {0: 0.5} if weights is None else weights
    n = 2 * m + 1
    M = np.zeros((n, n), dtype=complex)
    for i in range(n - 1):
        M[i + 1, i] = weights.get(i - m, 1.0)
    return TruncatedOperator(M, Ambient.TRUNCATION, float(m), (0, n - 1))


def bilateral_shift(m: int) -> TruncatedOperator:
    return weighted_bilateral_shift(m, weights={})


def bilateral_weight_diagonal(m: int, weights: Optional[dict] = None) -> np.ndarray:
    """Diagonal Lambda with W Lambda = Lambda S for the weighted shift W and
    the unweighted shift S: lambda_k is the product of the weights crossed
    on the way from a far-left reference coordinate to k."""
    weights = {0: 0.5} if weights is None else weights
    n = 2 * m + 1
    lam = np.ones(n)
    for i in range(1, n):
        lam[i] = lam[i - 1] * weights.get(i - 1 - m, 1.0)
    return np.diag(lam).astype(complex)


def unilateral_shift(n: int) -> TruncatedOperator:
    """Truncated unilateral shift e_k -> e_{k+1}, k = 0..n-1."""
    M = np.zeros((n, n), dtype=complex)
    for i in range(n - 1):
        M[i + 1, i] = 1.0
    return TruncatedOperator(M, Ambient.TRUNCATION, float(3 * n // 4), (n - 1,))


def diag_phases(n: int) -> np.ndarray:
    """Unitary diagonal with phases exp(2 pi i (j + 1/2) / n); 1 is avoided."""
    return np.diag(np.exp(2j * np.pi * (np.arange(n) + 0.5) / n))


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    expected_class: str
    note: str
    build: Callable[[], Contraction]
    dilation_slots: int = 32
    # optional (U', L) with U' unitary on its band and W L = L U'
    intertwiner: Optional[Callable[[], tuple]] = None


def _entries():
    return [
        CatalogEntry(
            "unitary-diag-8", "C11",
            "diagonal unitary with phases exp(2 pi i (j+1/2)/8); no defect",
            lambda: make_contraction(diag_phases(8)), 8),
        CatalogEntry(
            "scalar-0.5", "C00",
            "1x1 contraction 0.5; powers decay as 2^-n in both directions",
            lambda: make_contraction(np.array([[0.5]])), 32),
        CatalogEntry(
            "diag-mixed", "C??",
            "diag(exp(i pi/3), 0.5): unitary part plus a C00 part",
            lambda: make_contraction(np.diag([np.exp(1j * np.pi / 3), 0.5])), 32),
        CatalogEntry(
            "unilateral-shift-64", "C10",
            "truncated unilateral shift on 64 coordinates",
            lambda: make_contraction(unilateral_shift(64)), 32),
        CatalogEntry(
            "weighted-bilateral-64", "C11",
            "bilateral shift on coordinates -64..64 with weight 1/2 at index 0;"
            " similar to the unweighted shift through a diagonal",
            lambda: make_contraction(weighted_bilateral_shift(64)), 64,
            lambda: (bilateral_shift(64), bilateral_weight_diagonal(64))),
    ]


CATALOG = {e.name: e for e in _entries()}


def get(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise ArgumentError(f"unknown catalog operator {name!r}") from None


def listing() -> list:
    return [
        {"name": e.name, "class": e.expected_class, "note": e.note}
        for e in sorted(CATALOG.values(), key=lambda e: e.name)
    ]
