"""Numerical building blocks: matrices, frames, truncations and limits.

Every other module works with dense complex matrices.  Truncated
sequence-space operators carry the set of coordinates where the finite
matrix differs from the infinite operator (the *edge*); identities that
involve n-th powers are only certified on coordinates at graph distance
at least n from that edge (the *band*).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import ArgumentError

TAU_ORTH = 1e-10
TAU_RANK = 1e-10
TAU_CONV = 1e-8


def as_matrix(M) -> np.ndarray:
    """Return `M` as a 2-D complex128 array (scalars become 1x1)."""
    A = np.asarray(M, dtype=complex)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    elif A.ndim == 1:
        A = A.reshape(-1, 1)
    elif A.ndim != 2:
        raise ArgumentError(f"expected a matrix, got array of shape {A.shape}")
    return A


def adjoint(M) -> np.ndarray:
    return as_matrix(M).conj().T


def opnorm(M) -> float:
    """Operator 2-norm; zero for empty matrices."""
    A = np.asarray(M)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def smin(M) -> float:
    """Smallest singular value over the column space (0 for rank-deficient)."""
    A = np.asarray(M)
    if A.size == 0:
        return math.inf
    s = np.linalg.svd(A, compute_uv=False)
    if A.shape[0] < A.shape[1]:
        return 0.0
    return float(s[-1])


def psd_sqrt(M) -> np.ndarray:
    """Positive square root of a hermitian positive semidefinite matrix."""
    A = as_matrix(M)
    if A.size == 0:
        return A.copy()
    A = (A + A.conj().T) / 2
    w, V = np.linalg.eigh(A)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (V * w) @ V.conj().T


@dataclass(frozen=True)
class Subspace:
    """Subspace of C^ambient_dim given by an orthonormal frame."""

    frame: np.ndarray
    ambient_dim: int
    flagged_zero: bool = False

    def __post_init__(self):
        F = as_matrix(self.frame) if np.asarray(self.frame).size else \
            np.zeros((self.ambient_dim, 0), dtype=complex)
        object.__setattr__(self, "frame", F)
        if F.shape[0] != self.ambient_dim:
            raise ArgumentError("frame rows must equal the ambient dimension")
        if F.shape[1] > self.ambient_dim:
            raise ArgumentError("more frame columns than ambient dimensions")
        if F.shape[1]:
            err = opnorm(F.conj().T @ F - np.eye(F.shape[1]))
            if err > 1e-8:
                raise ArgumentError(f"frame not orthonormal (error {err:.2e})")

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.frame @ self.frame.conj().T

    def distance(self, x) -> float:
        """Norm of the component of `x` orthogonal to the subspace."""
        x = np.asarray(x, dtype=complex)
        return float(np.linalg.norm(x - self.frame @ (self.frame.conj().T @ x)))

    @classmethod
    def zero(cls, n: int, flagged: bool = True) -> "Subspace":
        return cls(np.zeros((n, 0), dtype=complex), n, flagged)

    @classmethod
    def coordinates(cls, n: int, idx: Sequence[int]) -> "Subspace":
        return cls(coordinate_frame(n, idx), n)


def coordinate_frame(n: int, idx) -> np.ndarray:
    """Columns of the n x n identity selected by `idx`."""
    idx = np.asarray(idx, dtype=int)
    E = np.zeros((n, idx.size), dtype=complex)
    E[idx, np.arange(idx.size)] = 1.0
    return E


class Ambient(str, enum.Enum):
    FINITE = "finite"
    TRUNCATION = "sequence-space truncation"


@dataclass(frozen=True)
class TruncatedOperator:
    """Square matrix plus a description of how faithful it is.

    `edge` lists the coordinates at which the matrix (or its adjoint)
    differs from the untruncated operator.  `band(n)` returns the
    coordinates whose graph distance to the edge is at least `n`; for
    such a coordinate every word of length < n in the operator and its
    adjoint is computed exactly.
    """

    matrix: np.ndarray
    ambient: Ambient = Ambient.FINITE
    faithful_power_bound: float = math.inf
    edge: tuple = ()

    def __post_init__(self):
        M = as_matrix(self.matrix)
        if M.shape[0] != M.shape[1]:
            raise ArgumentError(f"operator matrix must be square, got {M.shape}")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "ambient", Ambient(self.ambient))
        edge = tuple(sorted(int(i) for i in self.edge))
        if any(i < 0 or i >= M.shape[0] for i in edge):
            raise ArgumentError("edge index out of range")
        object.__setattr__(self, "edge", edge)
        if self.ambient is Ambient.FINITE and self.faithful_power_bound != math.inf:
            raise ArgumentError("finite operators have an infinite faithful power bound")
        if self.faithful_power_bound < 0:
            raise ArgumentError("faithful_power_bound must be nonnegative")

    @classmethod
    def finite(cls, M) -> "TruncatedOperator":
        return cls(M)

    @classmethod
    def truncation(cls, M, bound, edge=()) -> "TruncatedOperator":
        return cls(M, Ambient.TRUNCATION, bound, tuple(edge))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_finite(self) -> bool:
        return self.ambient is Ambient.FINITE

    def adjoint(self) -> "TruncatedOperator":
        return TruncatedOperator(self.matrix.conj().T, self.ambient,
                                 self.faithful_power_bound, self.edge)

    def with_matrix(self, M) -> "TruncatedOperator":
        return TruncatedOperator(M, self.ambient, self.faithful_power_bound, self.edge)

    @cached_property
    def edge_distance(self) -> np.ndarray:
        """Graph distance of every coordinate to the edge (inf if unreachable)."""
        n = self.dim
        if not self.edge:
            return np.full(n, np.inf)
        A = np.abs(self.matrix)
        scale = A.max() if A.size else 0.0
        pattern = (A + A.T) > 1e-14 * max(scale, 1e-300)
        graph = csr_matrix(pattern.astype(float))
        d = shortest_path(graph, unweighted=True, directed=False, indices=list(self.edge))
        return np.min(np.atleast_2d(d), axis=0)

    def band(self, n: int) -> np.ndarray:
        """Coordinates at distance >= n from the truncation edge."""
        return np.flatnonzero(self.edge_distance >= n)

    def band_frame(self, n: int) -> np.ndarray:
        return coordinate_frame(self.dim, self.band(n))


def orthonormal_range(M, tau_rank: float = TAU_RANK) -> Subspace:
    """Orthonormal frame for the column space of `M` (relative rank cut)."""
    if tau_rank <= 0:
        raise ArgumentError("tau_rank must be positive")
    A = as_matrix(M)
    n = A.shape[0]
    if A.size == 0:
        return Subspace.zero(n)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0:
        return Subspace.zero(n)
    r = int(np.sum(s > tau_rank * s[0]))
    if r == 0:
        return Subspace.zero(n)
    return Subspace(U[:, :r], n)


def null_space(M, tau_rank: float = TAU_RANK, ncols: Optional[int] = None) -> np.ndarray:
    """Orthonormal basis of the numerical kernel of `M`."""
    A = as_matrix(M)
    ncols = A.shape[1] if ncols is None else ncols
    if A.size == 0:
        return np.eye(ncols, dtype=complex)
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    scale = s[0] if s.size else 0.0
    r = int(np.sum(s > tau_rank * max(scale, 1.0)))
    return Vh[r:].conj().T


def pseudo_inverse(M, tau_rank: float = TAU_RANK) -> np.ndarray:
    """Moore-Penrose inverse with singular values below tau_rank*smax dropped."""
    if tau_rank <= 0:
        raise ArgumentError("tau_rank must be positive")
    A = as_matrix(M)
    if A.size == 0:
        return np.zeros((A.shape[1], A.shape[0]), dtype=complex)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    keep = s > tau_rank * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vh.conj().T * inv) @ U.conj().T


@dataclass(frozen=True)
class ConvergenceReport:
    converged: bool
    n: int
    gap: float
    gaps: tuple = field(default_factory=tuple)


def strong_limit(
    generator: Callable[[int], np.ndarray],
    tau_conv: float = TAU_CONV,
    n_max: int = 1000,
    seminorm: Optional[Callable[[np.ndarray, int], float]] = None,
):
    """Limit of A_n by successive-difference stagnation.

    Iterates n = 1..n_max and stops at the first n with
    gap_n = |A_n - A_{n-1}| < tau_conv.  `seminorm(diff, n)` replaces the
    operator norm, e.g. to measure the difference on a set of probe
    vectors only.  Non-convergence is reported, not raised.
    """
    if tau_conv <= 0:
        raise ArgumentError("tau_conv must be positive")
    if n_max < 1:
        raise ArgumentError("n_max must be at least 1")
    measure = seminorm or (lambda D, n: opnorm(D))
    prev = as_matrix(generator(0))
    gaps = []
    for n in range(1, n_max + 1):
        cur = as_matrix(generator(n))
        gap = float(measure(cur - prev, n))
        gaps.append(gap)
        if gap < tau_conv:
            return cur, ConvergenceReport(True, n, gap, tuple(gaps))
        prev = cur
    return prev, ConvergenceReport(False, n_max, gaps[-1], tuple(gaps))


def unitarity_defect(M) -> float:
    A = as_matrix(M)
    if A.size == 0:
        return 0.0
    n = A.shape[0]
    return max(opnorm(A.conj().T @ A - np.eye(n)), opnorm(A @ A.conj().T - np.eye(n)))


def unitary_closure(M, tau_rank: float = 1e-8) -> np.ndarray:
    """Nearest unitary to `M` with a canonical completion on its kernel.

    The polar factor U V^H of the SVD is unique when `M` is invertible.
    When `M` has k numerically zero singular values the completion on the
    kernel is fixed up to a phase, and we choose the phase so that
    det = (-1)^(d-1) times the phase of the product of the nonzero part.
    For a truncated shift chain this closes the chain into a cyclic shift
    with trivial holonomy, whose eigenvalues are the d-th roots of unity.
    """
    A = as_matrix(M)
    d = A.shape[0]
    if d == 0:
        return A.copy()
    U, s, Vh = np.linalg.svd(A)
    Z = U @ Vh
    k = int(np.sum(s <= tau_rank * max(s[0], 1e-300)))
    if k:
        target = (-1.0) ** (d - 1)
        phase = np.linalg.det(Z)
        corr = target / phase
        u = U[:, -1:]
        Z = Z + (corr - 1.0) * (u @ (u.conj().T @ Z))
    return Z


def hausdorff(a, b) -> float:
    """Hausdorff distance between two finite point sets in the plane."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return math.inf
    D = np.abs(a[:, None] - b[None, :])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def match_multisets(a, b):
    """Optimal bipartite matching of two equal-size point multisets.

    Returns the largest matched distance (inf when sizes differ).
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        return math.inf
    if a.size == 0:
        return 0.0
    D = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(D)
    return float(D[r, c].max())


def eig_sorted(M):
    """Eigen-decomposition with eigenvalues ordered by angle then modulus."""
    A = as_matrix(M)
    if A.size == 0:
        return np.zeros(0, dtype=complex), np.zeros((0, 0), dtype=complex)
    w, V = scipy.linalg.eig(A)
    order = np.lexsort((np.abs(w), np.angle(w)))
    return w[order], V[:, order]
