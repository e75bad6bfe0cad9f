"""Verified contractions, defect data, class labels, canonical decomposition."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ArgumentError, NotContraction, TruncationUnsafe
from .opcore import (
    TAU_RANK,
    Subspace,
    TruncatedOperator,
    as_matrix,
    null_space,
    opnorm,
    orthonormal_range,
)

TAU_NORM = 1e-10


@dataclass(frozen=True)
class Contraction:
    """A truncated operator whose norm is certified to be at most 1.

    `sigma_min` and `kernel_dim` are measured on the band of coordinates
    away from the truncation edge, where the matrix is faithful.
    """

    op: TruncatedOperator
    norm_cert: float
    sigma_min: float
    kernel_dim: int
    tau_rank: float = TAU_RANK

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def kernel_trivial(self) -> bool:
        return self.kernel_dim == 0

    def adjoint(self) -> "Contraction":
        return make_contraction(self.op.adjoint(), tau_rank=self.tau_rank)


def make_contraction(W, tau_norm: float = TAU_NORM, tau_rank: float = TAU_RANK) -> Contraction:
    """Wrap a matrix or TruncatedOperator, rejecting norms above 1 + tau_norm."""
    op = W if isinstance(W, TruncatedOperator) else TruncatedOperator.finite(W)
    M = op.matrix
    norm = opnorm(M)
    if norm > 1.0 + tau_norm:
        raise NotContraction(f"operator norm {norm:.12g} exceeds 1 + {tau_norm:g}")
    inner = op.band(1)
    if inner.size == 0:
        return Contraction(op, norm, 0.0, 0, tau_rank)
    s = np.linalg.svd(M[:, inner], compute_uv=False)
    smax = s[0] if s.size else 0.0
    kdim = int(np.sum(s <= tau_rank * max(smax, 1e-300)))
    return Contraction(op, norm, float(s[-1]), kdim, tau_rank)


@dataclass(frozen=True)
class DefectData:
    D_W: np.ndarray
    D_Wstar: np.ndarray
    frame_DW: Subspace
    frame_DWstar: Subspace
    spurious_dims: tuple = (0, 0)


def defect_operators(W: Contraction, tau_rank: float = TAU_RANK) -> DefectData:
    """Defect operators and defect-space frames.

    Both roots come from one SVD W = U S V^H, so that D_W = V f(S) V^H and
    D_W* = U f(S) U^H with f(s) = sqrt((1-s)(1+s)).  This keeps the
    intertwining W D_W = D_W* W exact up to rounding.  For truncated
    operators the defect frames are spanned by the columns of the defect
    operators on the band away from the edge; directions created only by
    the truncation edge are counted in `spurious_dims`.
    """
    M = W.matrix
    n = M.shape[0]
    U, s, Vh = np.linalg.svd(M)
    s = np.clip(s, 0.0, 1.0)
    g = (1.0 - s) * (1.0 + s)
    # 1 - s^2 carries an absolute rounding error of a few eps; without this
    # cut a unitary W would acquire defect directions of size ~1e-8.
    g[g <= 16 * n * np.finfo(float).eps] = 0.0
    f = np.sqrt(g)
    V = Vh.conj().T
    D = (V * f) @ Vh
    Ds = (U * f) @ U.conj().T
    D = (D + D.conj().T) / 2
    Ds = (Ds + Ds.conj().T) / 2
    if W.op.edge:
        inner = W.op.band(1)
        F = orthonormal_range(D[:, inner], tau_rank)
        Fs = orthonormal_range(Ds[:, inner], tau_rank)
        full = orthonormal_range(D, tau_rank).dim, orthonormal_range(Ds, tau_rank).dim
        spurious = (full[0] - F.dim, full[1] - Fs.dim)
    else:
        keep = f > 0
        F = Subspace(V[:, keep], n) if keep.any() else Subspace.zero(n)
        Fs = Subspace(U[:, keep], n) if keep.any() else Subspace.zero(n)
        spurious = (0, 0)
    if F.flagged_zero:
        F = Subspace.zero(n, flagged=False)
    if Fs.flagged_zero:
        Fs = Subspace.zero(n, flagged=False)
    return DefectData(D, Ds, F, Fs, spurious)


class Behavior(str, enum.Enum):
    TO_ZERO = "to_zero"
    BOUNDED_BELOW = "bounded_below"
    MIXED = "mixed"

    @property
    def digit(self) -> str:
        return {"to_zero": "0", "bounded_below": "1", "mixed": "?"}[self.value]


@dataclass(frozen=True)
class ClassLabel:
    """Asymptotic class of a contraction.

    `forward` describes W^n h, `backward` describes W^{*n} h.  Evidence
    values are the smallest and largest surviving norm fractions over the
    certified probe span at n_max; boundary values cover the coordinates
    near a truncation edge and do not enter the label.
    """

    forward: Behavior
    backward: Behavior
    evidence_forward: float
    evidence_backward: float
    max_forward: float
    max_backward: float
    n_max: int
    tau_zero: float
    n_probes: int
    boundary_forward: Optional[tuple] = None
    boundary_backward: Optional[tuple] = None

    @property
    def name(self) -> str:
        return f"C{self.forward.digit}{self.backward.digit}"

    @property
    def is_cdot1(self) -> bool:
        return self.backward is Behavior.BOUNDED_BELOW

    @property
    def is_cdot0(self) -> bool:
        return self.backward is Behavior.TO_ZERO


def _behavior(lo: float, hi: float, tau: float) -> Behavior:
    if hi < tau:
        return Behavior.TO_ZERO
    if lo >= tau:
        return Behavior.BOUNDED_BELOW
    return Behavior.MIXED


def _fractions(P: np.ndarray, E: np.ndarray, n_random: int, rng) -> tuple:
    """Min and max of |P h|/|h| over coordinate probes, random probes and
    the whole probe span (the latter via singular values)."""
    if E.shape[1] == 0:
        return (math.nan, math.nan)
    B = P @ E
    s = np.linalg.svd(B, compute_uv=False)
    lo = float(s[-1]) if B.shape[0] >= B.shape[1] else 0.0
    hi = float(s[0])
    cols = np.linalg.norm(B, axis=0)
    X = rng.standard_normal((E.shape[1], n_random)) + 1j * rng.standard_normal((E.shape[1], n_random))
    X /= np.linalg.norm(X, axis=0)
    rnd = np.linalg.norm(B @ X, axis=0)
    lo = min(lo, cols.min(), rnd.min())
    hi = max(hi, cols.max(), rnd.max())
    return (float(min(max(lo, 0.0), 1.0)), float(min(hi, 1.0)))


def classify(W: Contraction, n_max: int = 64, tau_zero: float = 1e-6,
             seed: int = 0, n_random: int = 16) -> ClassLabel:
    """Asymptotic class from the norms of W^n_max h and W^{*n_max} h.

    The forward label is to_zero when every probe decays below tau_zero,
    bounded_below when every probe keeps at least tau_zero, and mixed
    otherwise.  Probes are the coordinates at distance >= n_max from the
    truncation edge, random combinations of them, and (through singular
    values) every vector in their span.
    """
    if n_max < 1:
        raise ArgumentError("n_max must be at least 1")
    if n_max > W.op.faithful_power_bound:
        raise TruncationUnsafe(
            f"n_max={n_max} exceeds faithful power bound {W.op.faithful_power_bound}")
    M = W.matrix
    n = M.shape[0]
    inner = W.op.band(n_max)
    if inner.size == 0:
        raise TruncationUnsafe("no coordinates remain at the requested distance from the edge")
    rng = np.random.default_rng(seed)
    P = np.linalg.matrix_power(M, n_max)
    Q = np.linalg.matrix_power(M.conj().T, n_max)
    E = np.eye(n, dtype=complex)[:, inner]
    flo, fhi = _fractions(P, E, n_random, rng)
    blo, bhi = _fractions(Q, E, n_random, rng)
    outer = np.setdiff1d(np.arange(n), inner)
    bf = bb = None
    if outer.size:
        cf = np.linalg.norm(P[:, outer], axis=0)
        cb = np.linalg.norm(Q[:, outer], axis=0)
        bf = (float(cf.min()), float(cf.max()))
        bb = (float(cb.min()), float(cb.max()))
    return ClassLabel(
        forward=_behavior(flo, fhi, tau_zero),
        backward=_behavior(blo, bhi, tau_zero),
        evidence_forward=flo,
        evidence_backward=blo,
        max_forward=fhi,
        max_backward=bhi,
        n_max=n_max,
        tau_zero=tau_zero,
        n_probes=int(inner.size),
        boundary_forward=bf,
        boundary_backward=bb,
    )


@dataclass(frozen=True)
class CanonicalDecomposition:
    unitary_space: Subspace
    cnu_space: Subspace
    unitary_part: Optional[Contraction]
    cnu_part: Optional[Contraction]
    iterations: int


def canonical_decomposition(W: Contraction, tau: float = 1e-9) -> CanonicalDecomposition:
    """Split W into a unitary part and a completely non-unitary part.

    Starts from the joint kernel of I - W^H W and I - W W^H (vectors on
    which W and W^H are both isometric) and shrinks it to the largest
    subspace invariant under W and W^H.  That subspace reduces W and W
    acts unitarily on it.
    """
    M = W.matrix
    n = M.shape[0]
    I = np.eye(n)
    G = np.vstack([I - M.conj().T @ M, I - M @ M.conj().T])
    F = _kernel(G, tau, n)
    it = 0
    while F.shape[1]:
        it += 1
        Pc = I - F @ F.conj().T
        C = np.vstack([Pc @ M @ F, Pc @ M.conj().T @ F])
        K = _kernel(C, tau, F.shape[1])
        if K.shape[1] == F.shape[1]:
            break
        F = F @ K
        if F.shape[1]:
            F, _ = np.linalg.qr(F)
    if F.shape[1]:
        Fu = Subspace(F, n)
        Gc = null_space(F.conj().T, 1e-12, n)
        Fc = Subspace(Gc, n) if Gc.shape[1] else Subspace.zero(n, flagged=False)
        up = make_contraction(F.conj().T @ M @ F)
        cp = make_contraction(Gc.conj().T @ M @ Gc) if Gc.shape[1] else None
    else:
        Fu = Subspace.zero(n, flagged=False)
        Fc = Subspace(np.eye(n, dtype=complex), n)
        up = None
        cp = W
    return CanonicalDecomposition(Fu, Fc, up, cp, it)


def _kernel(A: np.ndarray, tau: float, ncols: int) -> np.ndarray:
    if A.size == 0 or ncols == 0:
        return np.zeros((ncols, 0), dtype=complex) if ncols == 0 else np.eye(ncols, dtype=complex)
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    r = int(np.sum(s > tau))
    return Vh[r:].conj().T


def spectral_radius(M) -> float:
    A = as_matrix(M)
    if A.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(A))))
