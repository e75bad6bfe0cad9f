"""Spectral comparisons between a contraction and its unitary transforms."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage

from .contraction import Contraction
from .errors import AssumptionError, NotEigenpair, NotInvariant, OneInSpectrum, SampleInsideSpectrum
from .intertwine import IntertwiningMap
from .modelspace import BoundaryData
from .opcore import Subspace, TruncatedOperator, as_matrix, match_multisets, opnorm, orthonormal_range, smin
from .semigroup import eval_semigroup, make_cogenerator

TAU_EIG = 1e-8


def _matrix(A) -> np.ndarray:
    if isinstance(A, (Contraction, TruncatedOperator)):
        return A.matrix
    return as_matrix(A)


def resolvent_norm(A, z: complex) -> float:
    """|(A - z)^{-1}|, infinite when A - z is singular."""
    M = _matrix(A)
    s = smin(M - z * np.eye(M.shape[0]))
    return math.inf if s == 0 else 1.0 / s


def certified_eigenpairs(A, tau: float = TAU_EIG):
    """Eigenpairs of A with residual |A v - lam v| <= tau |A| |v|."""
    M = _matrix(A)
    if M.size == 0:
        return np.zeros(0, dtype=complex), np.zeros((0, 0), dtype=complex), np.zeros(0, dtype=bool)
    w, V = np.linalg.eig(M)
    V = V / np.linalg.norm(V, axis=0)
    res = np.linalg.norm(M @ V - V * w, axis=0)
    ok = res <= tau * max(1.0, opnorm(M))
    return w, V, ok


def _components(points: np.ndarray, resolution: float) -> np.ndarray:
    if points.size <= 1:
        return np.zeros(points.size, dtype=int)
    X = np.column_stack([points.real, points.imag])
    return fcluster(linkage(X, "single"), resolution, criterion="distance")


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    eigen_residual: float
    point_spectrum_on_circle: np.ndarray
    resolvent_samples: list
    containment_gap: float
    components_met: int
    components_total: int
    dominance_ratio: float
    resolution: float
    tau: float

    @property
    def contained(self) -> bool:
        return self.containment_gap <= self.resolution

    @property
    def dominated(self) -> bool:
        return self.dominance_ratio <= 1 + self.tau


def spectrum_containment(W, Up, z_samples: Sequence[complex], tau: float = 1e-8,
                         resolution: float = 2 * np.pi / 64) -> SpectrumReport:
    """Eigenvalue-cloud containment of Up in W and resolvent dominance.

    Containment is checked as the directed Hausdorff distance from the
    cloud of Up to that of W; single-linkage components of the cloud of W
    at the given resolution are counted to show which parts are met.
    Dominance is |(Up - z)^{-1}| <= (1 + tau) |(W - z)^{-1}| per sample.
    """
    A, B = _matrix(W), _matrix(Up)
    lw, Vw, ok = certified_eigenpairs(A)
    ew_res = float(np.max(np.linalg.norm(A @ Vw - Vw * lw, axis=0))) if lw.size else 0.0
    lu = np.linalg.eigvals(B) if B.size else np.zeros(0, dtype=complex)
    samples, worst = [], 0.0
    for z in z_samples:
        z = complex(z)
        if lw.size and (np.min(np.abs(lw - z)) < 1e-12 or smin(A - z * np.eye(A.shape[0])) < 1e-14):
            raise SampleInsideSpectrum(f"z = {z} lies in the spectrum of W")
        rw, ru = resolvent_norm(A, z), resolvent_norm(B, z)
        samples.append((z, rw, ru))
        worst = max(worst, ru / rw)
    if lu.size and lw.size:
        gap = float(max(np.min(np.abs(lw - u)) for u in lu))
    else:
        gap = 0.0 if lu.size == 0 else math.inf
    comp = _components(lw, resolution)
    met = set()
    for u in lu:
        if lw.size:
            met.add(int(comp[int(np.argmin(np.abs(lw - u)))]))
    on_circle = lw[ok & (np.abs(np.abs(lw) - 1) <= 1e-6)]
    return SpectrumReport(lw, ew_res, on_circle, samples, gap, len(met),
                          int(len(set(comp.tolist()))) if lw.size else 0, worst, resolution, tau)


def exterior_samples(n: int, seed: int = 0, rmin: float = 1.1, rmax: float = 3.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    r = rng.uniform(rmin, rmax, n)
    th = rng.uniform(0, 2 * np.pi, n)
    return r * np.exp(1j * th)


class Branch(str, enum.Enum):
    KILLED = "killed"
    TRANSPORTED = "transported"


@dataclass(frozen=True)
class TransportVerdict:
    branch: Branch
    omega: complex
    image: np.ndarray
    image_norm: float
    eigen_residual: float


def eigen_transport(Lam: IntertwiningMap, omega: complex, u, tau: float = TAU_EIG) -> TransportVerdict:
    """Push an eigenpair (omega, u) of the source through L in I(U', W)."""
    u = as_matrix(u)[:, 0]
    B = Lam.source_op.matrix
    nu = float(np.linalg.norm(u))
    if nu == 0 or np.linalg.norm(B @ u - omega * u) > tau * nu:
        raise NotEigenpair(f"({omega}, u) is not an eigenpair of the source operator")
    v = Lam.map @ u
    nv = float(np.linalg.norm(v))
    if nv <= tau * nu:
        return TransportVerdict(Branch.KILLED, omega, v, nv, 0.0)
    r = float(np.linalg.norm(Lam.target_op.matrix @ v - omega * v)) / nv
    if r > tau:
        raise AssumptionError(f"image is neither zero nor an eigenvector (residual {r:.3e})")
    return TransportVerdict(Branch.TRANSPORTED, omega, v, nv, r)


@dataclass(frozen=True)
class PointSpectrumMatch:
    contraction_circle: np.ndarray
    unitary_points: np.ndarray
    cost: float
    tau: float

    @property
    def equal(self) -> bool:
        return self.cost <= self.tau


def point_spectrum_match(W, Up, closure=None, tau: float = 1e-6) -> PointSpectrumMatch:
    """Compare certified circle eigenvalues of W with the point spectrum of Up.

    `Up` is the operator on its faithful domain (for a truncated residual
    part, the compression of the dilation); `closure` is its unitary
    closure.  An eigenvalue of the closure counts only when its
    eigenvector is also certified for `Up`, so artefacts of closing a
    truncated chain do not enter.
    """
    lw, _, ok = certified_eigenpairs(W, tau * 1e-2)
    circ = lw[ok & (np.abs(np.abs(lw) - 1) <= tau)]
    B = _matrix(Up)
    C = B if closure is None else as_matrix(closure)
    if C.size:
        lc, Vc, _ = certified_eigenpairs(C)
        res = np.linalg.norm(B @ Vc - Vc * lc, axis=0) if lc.size else np.zeros(0)
        pts = lc[(res <= tau) & (np.abs(np.abs(lc) - 1) <= tau)]
    else:
        pts = np.zeros(0, dtype=complex)
    cost = match_multisets(circ, pts)
    return PointSpectrumMatch(circ, pts, float(cost), tau)


def ess_supp_spectrum(bd: BoundaryData, min_arc: Optional[float] = None) -> list:
    """Arcs (a, b), a < b, covering the grid intervals where eps_mask holds.

    Each masked grid point contributes the interval of half a grid step on
    either side; arcs separated by gaps of at most `min_arc` (default one
    grid step) are merged.  The full circle is returned as (0, 2 pi).
    """
    M = bd.M
    h = 2 * np.pi / M
    if min_arc is None:
        min_arc = h
    mask = np.asarray(bd.eps_mask, dtype=bool)
    if not mask.any():
        return []
    if mask.all():
        return [(0.0, 2 * np.pi)]
    # rotate so that index 0 is unmasked; runs are then non-wrapping
    start = int(np.argmin(mask))
    arcs = []
    j = 0
    while j < M:
        k = (start + j) % M
        if mask[k]:
            a = j
            while j < M and mask[(start + j) % M]:
                j += 1
            arcs.append([(start + a) * h - h / 2, (start + j - 1) * h + h / 2])
        else:
            j += 1
    merged = [arcs[0]]
    for a, b in arcs[1:]:
        if a - merged[-1][1] <= min_arc + 1e-12:
            merged[-1][1] = b
        else:
            merged.append([a, b])
    if len(merged) > 1 and merged[0][0] + 2 * np.pi - merged[-1][1] <= min_arc + 1e-12:
        merged[-1][1] = merged[0][1] + 2 * np.pi
        merged.pop(0)
    if len(merged) == 1 and merged[0][1] - merged[0][0] >= 2 * np.pi - min_arc - 1e-12:
        return [(0.0, 2 * np.pi)]
    return [(float(a), float(b)) for a, b in merged]


def arc_distance(theta: float, arcs) -> float:
    """Angular distance from a point to a union of arcs."""
    best = math.inf
    for a, b in arcs:
        for shift in (-2 * np.pi, 0.0, 2 * np.pi):
            t = theta + shift
            if a <= t <= b:
                return 0.0
            best = min(best, abs(t - a), abs(t - b))
    return best


def arcs_vs_cloud(arcs, eigenvalues, step: float) -> tuple:
    """(max distance from the cloud to the arcs, max distance from arc
    sample points to the cloud), both in angle."""
    ang = np.mod(np.angle(np.asarray(eigenvalues)), 2 * np.pi)
    if not arcs:
        return (0.0 if ang.size == 0 else math.inf, 0.0)
    if ang.size == 0:
        return (0.0, math.inf)
    d1 = max(arc_distance(float(t), arcs) for t in ang)
    pts = []
    for a, b in arcs:
        pts.extend(np.arange(a, b + 1e-12, step / 2).tolist())
    diff = np.abs(np.mod(np.array(pts)[:, None] - ang[None, :] + np.pi, 2 * np.pi) - np.pi)
    d2 = float(diff.min(axis=1).max())
    return (float(d1), d2)


@dataclass(frozen=True)
class MappingVerdict:
    holds: bool
    cost: float
    mapped: np.ndarray
    computed: np.ndarray


def spectral_mapping(W, t: float, tau: float = 1e-8) -> MappingVerdict:
    """sigma[e_t(W)] against e_t applied to sigma(W), matched as multisets."""
    C = make_cogenerator(W)
    if not C.one_not_eigenvalue:
        raise OneInSpectrum(f"1 is in the spectrum (margin {C.margin:.3e})")
    lw = np.linalg.eigvals(C.matrix)
    mapped = np.exp(t * (lw + 1) / (lw - 1)) if t else np.ones_like(lw)
    comp = np.linalg.eigvals(eval_semigroup(C, t).W_t)
    cost = match_multisets(mapped, comp)
    return MappingVerdict(bool(cost <= tau), float(cost), mapped, comp)


@dataclass(frozen=True)
class TransportedSubspace:
    space: Subspace
    block_residual: float
    steps: int


def invariant_subspace_transport(W, Msub: Subspace, Up, Lam, tau: float = 1e-8,
                                 n_max: Optional[int] = None) -> TransportedSubspace:
    """M' = span of U'^{-n} L M for n = 0..n_max, with L W = U' L.

    U' is unitary, so U'^{-1} = U'^H.  Returns the off-diagonal block norm
    of U' with respect to M' + its complement.
    """
    A = _matrix(W)
    B = _matrix(Up)
    L = Lam.map if isinstance(Lam, IntertwiningMap) else as_matrix(Lam)
    P = Msub.projector
    n = A.shape[0]
    if Msub.dim and opnorm((np.eye(n) - P) @ A @ Msub.frame) > tau:
        raise NotInvariant("M is not invariant under W")
    K = B.shape[0]
    if Msub.dim == 0:
        return TransportedSubspace(Subspace.zero(K, flagged=False), 0.0, 0)
    n_max = K if n_max is None else n_max
    X = L @ Msub.frame
    blocks = [X]
    cur = orthonormal_range(X, 1e-10)
    steps = 0
    for steps in range(1, n_max + 1):
        X = B.conj().T @ X
        blocks.append(X)
        nxt = orthonormal_range(np.hstack(blocks), 1e-10)
        if nxt.dim == cur.dim:
            cur = nxt
            break
        cur = nxt
    if cur.flagged_zero:
        return TransportedSubspace(Subspace.zero(K, flagged=False), 0.0, steps)
    F = cur.frame
    Q = np.eye(K) - F @ F.conj().T
    off = max(opnorm(Q @ B @ F), opnorm(F.conj().T @ B @ Q))
    return TransportedSubspace(cur, off, steps)
