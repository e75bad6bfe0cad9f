"""Isometric and unitary dilations, Wold decompositions, residual parts."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .contraction import Contraction, DefectData, defect_operators
from .errors import ArgumentError, NotIsometry
from .opcore import (
    TAU_CONV,
    TAU_RANK,
    Ambient,
    ConvergenceReport,
    Subspace,
    TruncatedOperator,
    coordinate_frame,
    null_space,
    opnorm,
    orthonormal_range,
    strong_limit,
    unitarity_defect,
    unitary_closure,
)


@dataclass(frozen=True)
class WanderingTriple:
    """Wandering subspaces of the isometric dilation.

    `L` is the closed range of (U+ - W) on H, i.e. the first defect slot.
    `Lstar` is the wandering space K+ minus U+ K+ that generates the shift
    part of the Wold decomposition of U+; in the isometric realization it
    also plays the role of U applied to the adjoint wandering space, so
    `Lsub` is the same subspace.
    """

    L: Subspace
    Lstar: Subspace
    Lsub: Subspace


@dataclass(frozen=True)
class IsometricDilation:
    W: Contraction
    U_plus: TruncatedOperator
    embed_H: Subspace
    N: int
    defects: DefectData
    wandering: WanderingTriple

    @property
    def defect_dim(self) -> int:
        return self.defects.frame_DW.dim

    @property
    def faithful_power_bound(self) -> float:
        return self.U_plus.faithful_power_bound


def minimal_isometric_dilation(W: Contraction, N: int) -> IsometricDilation:
    """Minimal isometric dilation with N copies of the defect space.

    U+(h; d_0, ..., d_{N-1}) = (W h; F^H D_W h, d_0, ..., d_{N-2}) where the
    columns of F are an orthonormal frame of the defect space.  The last
    slot is dropped, so U+ is isometric except on that slot and on the
    edge of a truncated W.
    """
    if N < 1:
        raise ArgumentError("N must be at least 1")
    dd = defect_operators(W)
    F = dd.frame_DW.frame
    n = W.dim
    d = F.shape[1]
    K = n + N * d
    M = np.zeros((K, K), dtype=complex)
    M[:n, :n] = W.matrix
    if d:
        M[n:n + d, :n] = F.conj().T @ dd.D_W
        for j in range(N - 1):
            r = n + (j + 1) * d
            c = n + j * d
            M[r:r + d, c:c + d] = np.eye(d)
        last = range(n + (N - 1) * d, K)
        edge = tuple(W.op.edge) + tuple(last)
        bound = min(float(N), W.op.faithful_power_bound)
        U = TruncatedOperator(M, Ambient.TRUNCATION, bound, edge)
    else:
        U = W.op
    E = coordinate_frame(K, range(n))
    H = Subspace(E, K)
    L = orthonormal_range(M @ E - E @ W.matrix) if d else Subspace.zero(K, flagged=False)
    inner = U.band(1)
    C = (np.eye(K) - M @ M.conj().T)[:, inner]
    Ls = orthonormal_range(C, 1e-8) if C.size and opnorm(C) > 1e-12 else Subspace.zero(K, flagged=False)
    if Ls.flagged_zero:
        Ls = Subspace.zero(K, flagged=False)
    if L.flagged_zero:
        L = Subspace.zero(K, flagged=False)
    return IsometricDilation(W, U, H, N, dd, WanderingTriple(L, Ls, Ls))


def dilation_defect(dil: IsometricDilation, n_max: Optional[int] = None) -> float:
    """max over 1 <= n <= n_max of |P_H U+^n |_H - W^n| (on the band of W)."""
    n_max = dil.N if n_max is None else n_max
    E = dil.embed_H.frame
    U = dil.U_plus.matrix
    W = dil.W.matrix
    inner = dil.W.op.band(n_max)
    worst = 0.0
    P = E.copy()
    Wn = np.eye(W.shape[0], dtype=complex)
    for _ in range(n_max):
        P = U @ P
        Wn = W @ Wn
        worst = max(worst, opnorm((E.conj().T @ P - Wn)[:, inner]))
    return worst


def unitary_n_dilation(W: Contraction, N: int, tau: float = 1e-12) -> TruncatedOperator:
    """Exactly unitary matrix whose compressed powers reproduce W^n, n <= N.

    Block layout on H^(N+1): first block column (W, D_W, 0, ...), last
    block column (D_W*, -W^H, 0, ...), identity blocks shifting the middle
    slots.  A unitary W is returned unchanged.
    """
    if N < 1:
        raise ArgumentError("N must be at least 1")
    A = W.matrix
    n = A.shape[0]
    dd = defect_operators(W)
    if opnorm(dd.D_W) <= tau and opnorm(dd.D_Wstar) <= tau:
        return W.op
    K = (N + 1) * n
    U = np.zeros((K, K), dtype=complex)
    U[:n, :n] = A
    U[n:2 * n, :n] = dd.D_W
    U[:n, N * n:] = dd.D_Wstar
    U[n:2 * n, N * n:] = -A.conj().T
    for j in range(1, N):
        U[(j + 1) * n:(j + 2) * n, j * n:(j + 1) * n] = np.eye(n)
    return TruncatedOperator(U, Ambient.TRUNCATION, float(N), ())


def _limit_projection(op: TruncatedOperator, tau: float, n_max: int):
    """Strong limit of op^n op^{*n}, compared on the band of width n."""
    M = op.matrix
    K = M.shape[0]
    state = {"n": 0, "P": np.eye(K, dtype=complex)}

    def gen(n):
        while state["n"] < n:
            state["P"] = M @ state["P"]
            state["n"] += 1
        P = state["P"]
        return P @ P.conj().T

    def seminorm(D, n):
        b = op.band(n)
        if b.size == 0:
            return math.inf
        return opnorm(D[np.ix_(b, b)])

    P, rep = strong_limit(gen, tau, n_max, seminorm)
    n_used = rep.n if rep.converged else n_max
    return P, rep, op.band(n_used)


def _stable_range(P: np.ndarray, band: np.ndarray):
    """Eigenvectors of the band compression of P with eigenvalue > 1/2."""
    K = P.shape[0]
    if band.size == 0:
        return np.zeros((K, 0), dtype=complex), 0.0
    B = P[np.ix_(band, band)]
    w, V = np.linalg.eigh((B + B.conj().T) / 2)
    keep = w > 0.5
    dist = float(np.max(np.minimum(np.abs(w), np.abs(1 - w)))) if w.size else 0.0
    F = np.zeros((K, int(keep.sum())), dtype=complex)
    F[band, :] = V[:, keep]
    return F, dist


@dataclass(frozen=True)
class WoldData:
    unitary_space: Subspace
    shift_wandering: Subspace
    unitary_op: np.ndarray
    translates_orthogonality: float
    reconstruction_gap: float
    report: ConvergenceReport


def wold_decomposition(V: TruncatedOperator, tau: float = 1e-8,
                       n_max: Optional[int] = None, tau_iso: float = 1e-8) -> WoldData:
    """Wold decomposition of an isometry into unitary part plus shift.

    The unitary space is the range of the strong limit of V^n V^{*n},
    evaluated on coordinates away from the truncation edge.
    """
    M = V.matrix
    K = M.shape[0]
    inner = V.band(1)
    iso = opnorm((M.conj().T @ M - np.eye(K))[:, inner]) if inner.size else 0.0
    if iso > tau_iso:
        raise NotIsometry(f"isometry residual {iso:.3e} exceeds {tau_iso:g}")
    if n_max is None:
        n_max = int(min(V.faithful_power_bound, K + 1))
    P, rep, band = _limit_projection(V, tau, n_max)
    F, dist = _stable_range(P, band)
    U_space = Subspace(F, K) if F.shape[1] else Subspace.zero(K, flagged=False)
    C = (np.eye(K) - M @ M.conj().T)[:, inner]
    # I - V V^H is rounding noise for a unitary V; a relative cut would keep it
    L = orthonormal_range(C, 1e-8) if inner.size and opnorm(C) > tau_iso else Subspace.zero(K)
    if L.flagged_zero:
        L = Subspace.zero(K, flagged=False)
    Uop = F.conj().T @ M @ F
    worst = 0.0
    if L.dim:
        steps = min(rep.n, 16)
        T = [L.frame]
        for _ in range(steps):
            T.append(M @ T[-1])
        for i in range(len(T)):
            for j in range(i + 1, len(T)):
                worst = max(worst, opnorm((T[i].conj().T @ T[j])))
        for t in T:
            worst = max(worst, opnorm(F.conj().T @ t[:, :]) if F.shape[1] else 0.0)
    recon = opnorm((P - F @ F.conj().T)[np.ix_(band, band)]) if band.size else 0.0
    return WoldData(U_space, L, Uop, worst, max(recon, dist), rep)


@dataclass(frozen=True)
class ResidualPart:
    """Residual part of an isometric dilation on certified coordinates.

    `space` is spanned by vectors of the band (coordinates far enough from
    every truncation edge) that survive in the limit projection.  `op` is
    the compression of U+ to it; `domain` is the subspace of residual
    coordinates that U+ maps back into the residual space, where `op` is
    isometric.  `closure` is the unitary closure of `op` used for spectra.
    """

    space: Subspace
    op: np.ndarray
    projector_gap: float
    report: ConvergenceReport
    n_used: int
    band: np.ndarray
    domain: Subspace
    closure: np.ndarray
    isometry_defect: float

    @property
    def trivial(self) -> bool:
        return self.space.dim == 0

    @property
    def dim(self) -> int:
        return self.space.dim


def residual_part(dil: IsometricDilation, tau_conv: float = TAU_CONV,
                  n_max: Optional[int] = None) -> ResidualPart:
    """Residual part as the range of s-lim U+^n U+^{*n}.

    The projections decrease with n; the gap is measured on the band of
    width n, so coordinates still affected by a truncation edge never
    enter the certificate.  Non-convergence is recorded in `report`.
    """
    U = dil.U_plus
    M = U.matrix
    K = M.shape[0]
    if n_max is None:
        n_max = int(min(U.faithful_power_bound, K + 1)) if math.isfinite(U.faithful_power_bound) \
            else K + 1
    n_max = max(n_max, 1)
    P, rep, band = _limit_projection(U, tau_conv, n_max)
    F, dist = _stable_range(P, band)
    gap = max(rep.gap, dist)
    if F.shape[1] == 0:
        z = Subspace.zero(K)
        e = np.zeros((0, 0), dtype=complex)
        return ResidualPart(z, e, gap, rep, rep.n, band, Subspace.zero(0), e, 0.0)
    space = Subspace(F, K)
    R = F.conj().T @ M @ F
    out = M @ F - F @ R
    D = null_space(out, 1e-8)
    domain = Subspace(D, F.shape[1]) if D.shape[1] else Subspace.zero(F.shape[1])
    iso = opnorm((R.conj().T @ R - np.eye(R.shape[0])) @ D) if D.shape[1] else 0.0
    return ResidualPart(space, R, gap, rep, rep.n, band, domain, unitary_closure(R), iso)
