"""Intertwining maps: Lambda_0, lifts, quasi-affinity certificates, asymptotes.

An intertwining map L in I(A, B) satisfies B L = L A.  Residuals are
measured on an optional `domain` of the source: for truncated operators
this is the set of source vectors whose images stay within the faithful
coordinates.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .contraction import Contraction, classify
from .dilation import IsometricDilation, ResidualPart, _limit_projection
from .errors import (
    DegenerateQ,
    KernelNotTrivial,
    NotBetweenUnitaries,
    ResidualTrivial,
    SingularPolar,
    SourceNotUnitary,
    TruncationUnsafe,
)
from .opcore import (
    TAU_CONV,
    TAU_RANK,
    Ambient,
    ConvergenceReport,
    Subspace,
    TruncatedOperator,
    as_matrix,
    hausdorff,
    null_space,
    opnorm,
    orthonormal_range,
    pseudo_inverse,
    psd_sqrt,
    unitary_closure,
)


class Verdict(str, enum.Enum):
    QUASI_AFFINITY = "quasi_affinity"
    INJECTIVE_ONLY = "injective_only"
    DENSE_ONLY = "dense_only"
    NEITHER = "neither"


@dataclass(frozen=True)
class QuasiAffinityCert:
    sigma_min: float
    range_gap: float
    verdict: Verdict
    tau_inj: float
    tau_dense: float


def _as_op(A) -> TruncatedOperator:
    return A if isinstance(A, TruncatedOperator) else TruncatedOperator.finite(A)


@dataclass(frozen=True)
class IntertwiningMap:
    """L with target_op L = L source_op, checked on `domain` (source coords)."""

    map: np.ndarray
    source_op: TruncatedOperator
    target_op: TruncatedOperator
    domain: Optional[Subspace] = None
    residual: float = math.nan
    certificate: Optional[QuasiAffinityCert] = None

    def __post_init__(self):
        L = as_matrix(self.map)
        object.__setattr__(self, "map", L)
        object.__setattr__(self, "source_op", _as_op(self.source_op))
        object.__setattr__(self, "target_op", _as_op(self.target_op))
        if L.shape != (self.target_op.dim, self.source_op.dim):
            raise ValueError(f"map shape {L.shape} does not fit operators "
                             f"{self.target_op.dim}x{self.source_op.dim}")
        if math.isnan(self.residual):
            object.__setattr__(self, "residual", self.recompute_residual())

    def recompute_residual(self) -> float:
        D = self.map @ self.source_op.matrix
        R = self.target_op.matrix @ self.map - D
        if self.domain is not None:
            R = R @ self.domain.frame
        return opnorm(R)

    def with_certificate(self, cert: QuasiAffinityCert) -> "IntertwiningMap":
        return IntertwiningMap(self.map, self.source_op, self.target_op,
                               self.domain, self.residual, cert)


def verify_quasi_affinity(Lam, tau_inj: float = 0.0, tau_dense: float = 1e-8,
                          target_frame: Optional[np.ndarray] = None) -> QuasiAffinityCert:
    """Injectivity and dense-range margins of a map.

    Injective when sigma_min > tau_inj * sigma_max.  The default tau_inj = 0
    accepts any strictly positive smallest singular value, so maps with
    geometrically decaying singular values count as quasi-affinities with
    their margin reported.  The range gap is the largest distance from a
    target frame vector to the range.
    """
    L = Lam.map if isinstance(Lam, IntertwiningMap) else as_matrix(Lam)
    m, n = L.shape
    if L.size == 0:
        return QuasiAffinityCert(math.inf, 0.0 if m == 0 else 1.0,
                                 Verdict.QUASI_AFFINITY if m == 0 else Verdict.INJECTIVE_ONLY,
                                 tau_inj, tau_dense)
    U, _, _ = np.linalg.svd(L, full_matrices=False)
    # values-only SVD keeps relative accuracy for graded singular values
    s = np.linalg.svd(L, compute_uv=False)
    smax = s[0]
    sig = float(s[-1]) if m >= n else 0.0
    keep = s > tau_inj * smax if smax > 0 else np.zeros_like(s, dtype=bool)
    Ur = U[:, keep]
    T = np.eye(m, dtype=complex) if target_frame is None else as_matrix(target_frame)
    resid = T - Ur @ (Ur.conj().T @ T)
    gap = float(np.max(np.linalg.norm(resid, axis=0))) if T.shape[1] else 0.0
    inj = sig > tau_inj * smax and sig > 0
    dense = gap <= tau_dense
    verdict = {(True, True): Verdict.QUASI_AFFINITY, (True, False): Verdict.INJECTIVE_ONLY,
               (False, True): Verdict.DENSE_ONLY, (False, False): Verdict.NEITHER}[(inj, dense)]
    return QuasiAffinityCert(sig, gap, verdict, tau_inj, tau_dense)


def _class_horizon(W: Contraction, n: int = 32) -> int:
    return int(min(n, W.op.faithful_power_bound))


def lambda_zero(res: ResidualPart, H: Subspace, W: Contraction,
                tau: float = 1e-8) -> IntertwiningMap:
    """Lambda_0 = P_H restricted to the residual space, as a map R -> H.

    Membership in I(R, W) is checked on the residual domain where R is
    isometric.  A quasi-affinity certificate is attached when W is of
    class C.1; density of the range is tested against the coordinates of
    H on which the residual part was certified.
    """
    if res.trivial:
        raise ResidualTrivial("residual part is trivial")
    if not W.kernel_trivial:
        raise KernelNotTrivial(f"W has a kernel (sigma_min = {W.sigma_min:.3e})")
    L = H.frame.conj().T @ res.space.frame
    finite = W.op.is_finite
    src = TruncatedOperator(res.op) if finite else \
        TruncatedOperator(res.op, Ambient.TRUNCATION, float(res.n_used), ())
    lam = IntertwiningMap(L, src, W.op, res.domain)
    lab = classify(W, _class_horizon(W))
    if lab.is_cdot1:
        band = W.op.band(res.n_used)
        T = np.eye(W.dim, dtype=complex)[:, band]
        lam = lam.with_certificate(verify_quasi_affinity(lam, target_frame=T))
    return lam


def _unitary_on_band(op: TruncatedOperator) -> float:
    M = op.matrix
    n = M.shape[0]
    inner = op.band(1)
    if inner.size == 0:
        return 0.0
    I = np.eye(n)
    return max(opnorm((M.conj().T @ M - I)[:, inner]), opnorm((M @ M.conj().T - I)[:, inner]))


@dataclass(frozen=True)
class LiftResult:
    """Lift of L in I(U', W) to the dilation, with its certificates.

    All gaps are measured on `domain` (source coordinates where U'^{-n}
    is faithful for n = n_terms).
    """

    lift: IntertwiningMap
    closed_form: np.ndarray
    series: np.ndarray
    agreement: float
    norm_gap: float
    projection_gap: float
    intertwining: float
    range_gap: Optional[float]
    tail: float
    domain: Subspace


def lift_to_dilation(Lam: IntertwiningMap, dil: IsometricDilation, n_terms: int,
                     residual: Optional[ResidualPart] = None,
                     tol_unitary: float = 1e-8) -> LiftResult:
    """Lift L in I(U', W) with unitary U' to L+ in I(U', U+).

    Two constructions are computed: the closed form U+^n E L U'^{-n} and
    the series E L + sum_j U+^j (U+ E - E W) L U'^{-(j+1)}, where E embeds
    H into K+.
    """
    Up = Lam.source_op
    if _unitary_on_band(Up) > tol_unitary:
        raise SourceNotUnitary(f"source unitarity defect {_unitary_on_band(Up):.3e}")
    if dil.defect_dim and n_terms > dil.N:
        raise TruncationUnsafe(f"n_terms={n_terms} exceeds slot count {dil.N}")
    U = dil.U_plus.matrix
    E = dil.embed_H.frame
    W = dil.W.matrix
    L = Lam.map
    Ui = Up.matrix.conj().T
    K, m = U.shape[0], Up.dim

    if Up.edge:
        D = Up.band_frame(n_terms + 1)
    elif Lam.domain is not None:
        D = Lam.domain.frame
    else:
        D = np.eye(m, dtype=complex)

    C = U @ E - E @ W
    series = E @ L
    term = None
    Uj = np.eye(K, dtype=complex)
    Vj = Ui.copy()
    for _ in range(n_terms):
        term = Uj @ C @ L @ Vj
        series = series + term
        Uj = U @ Uj
        Vj = Ui @ Vj
    closed = np.linalg.matrix_power(U, n_terms) @ E @ L @ np.linalg.matrix_power(Ui, n_terms)
    tail = opnorm(term @ D) if term is not None else 0.0
    agreement = opnorm((closed - series) @ D)
    norm_gap = abs(opnorm(series @ D) - opnorm(L @ D))
    proj = opnorm((E.conj().T @ series - L) @ D)
    inter = opnorm((U @ series - series @ Up.matrix) @ (Up.band_frame(n_terms + 1) if Up.edge else D))
    rgap = None
    if residual is not None:
        F = residual.space.frame
        rgap = opnorm((series - F @ (F.conj().T @ series)) @ D)
    dom = Subspace(orthonormal_range(D).frame, m) if D.shape[1] else Subspace.zero(m)
    lift = IntertwiningMap(series, Up, dil.U_plus, dom)
    return LiftResult(lift, closed, series, agreement, norm_gap, proj, inter, rgap, tail, dom)


@dataclass(frozen=True)
class AsymptoteRealization:
    Q: np.ndarray
    Qhalf: np.ndarray
    U_star: np.ndarray
    Lambda_star: IntertwiningMap
    band: np.ndarray
    report: ConvergenceReport
    fixed_point_residual: float
    unitarity_defect: float
    closure: np.ndarray
    residual_hausdorff: Optional[float] = None


def unitary_star_asymptote(W: Contraction, n_max: Optional[int] = None, tau: float = TAU_CONV,
                           residual: Optional[ResidualPart] = None) -> AsymptoteRealization:
    """Unitary *-asymptote from Q = lim W^n W^{*n}.

    For a contraction the sequence <W^{*n} h, W^{*n} g> converges, so every
    Banach limit equals the ordinary limit and Q is computed as a strong
    limit.  On the range of Q^{1/2} the map Q^{1/2} h -> Q^{1/2} W^* h is
    isometric; its adjoint is U_star and Lambda_star = Q^{1/2} satisfies
    W Lambda_star = Lambda_star U_star.
    """
    if not W.kernel_trivial:
        raise KernelNotTrivial(f"W has a kernel (sigma_min = {W.sigma_min:.3e})")
    n = W.dim
    if n_max is None:
        n_max = int(min(W.op.faithful_power_bound, 4 * n + 64)) if math.isfinite(
            W.op.faithful_power_bound) else 4 * n + 64
    Q, rep, band = _limit_projection(W.op, tau, n_max)
    QB = Q[np.ix_(band, band)]
    if band.size == 0 or opnorm(QB) < tau:
        raise DegenerateQ(f"limit |Q| = {opnorm(QB):.3e} below {tau:g}")
    Qh = psd_sqrt(QB)
    # eigenvalues of Q below sqrt(tau) belong to vectors still decaying at
    # the convergence horizon; they are not part of the asymptote range
    w, V = np.linalg.eigh((QB + QB.conj().T) / 2)
    keep = w > math.sqrt(tau) * w.max()
    G = V[:, keep]
    Qh_inv = (V[:, keep] / np.sqrt(w[keep])) @ V[:, keep].conj().T
    WB = W.matrix[np.ix_(band, band)]
    X = G.conj().T @ Qh @ WB.conj().T @ Qh_inv @ G
    Ustar = X.conj().T
    Eb = np.eye(n, dtype=complex)[:, band]
    Ls = Eb @ Qh @ G
    r = G.shape[1]
    dom = null_space(Ustar.conj().T @ Ustar - np.eye(r), 1e-8)
    dom_sub = Subspace(dom, r) if dom.shape[1] else Subspace.zero(r)
    src = TruncatedOperator(Ustar) if W.op.is_finite else \
        TruncatedOperator(Ustar, Ambient.TRUNCATION, float(rep.n), ())
    lam = IntertwiningMap(Ls, src, W.op, dom_sub)
    inner = W.op.band(rep.n + 1)
    fp = opnorm((W.matrix @ Q @ W.matrix.conj().T - Q)[np.ix_(inner, inner)]) if inner.size else 0.0
    udef = opnorm((Ustar.conj().T @ Ustar - np.eye(r)) @ dom) if dom.shape[1] else 0.0
    clo = unitary_closure(Ustar)
    hd = None
    if residual is not None and not residual.trivial:
        hd = hausdorff(np.linalg.eigvals(clo), np.linalg.eigvals(residual.closure))
    return AsymptoteRealization(Q, Qh, Ustar, lam, band, rep, fp, udef, clo, hd)


def extract_unitary_equivalence(Lam_plus: IntertwiningMap, tol: float = 1e-8,
                                tau_rank: float = TAU_RANK) -> np.ndarray:
    """Polar unitary factor V = L |L|^{-1} of a map between unitaries."""
    if _unitary_on_band(Lam_plus.source_op) > tol or _unitary_on_band(Lam_plus.target_op) > tol:
        raise NotBetweenUnitaries("source or target is not unitary to tolerance")
    L = Lam_plus.map
    s = np.linalg.svd(L, compute_uv=False)
    if L.shape[0] < L.shape[1] or s.size == 0 or s[-1] <= tau_rank * s[0]:
        raise SingularPolar("|L| is singular beyond the rank threshold")
    absL = psd_sqrt(L.conj().T @ L)
    return L @ pseudo_inverse(absL, tau_rank)
