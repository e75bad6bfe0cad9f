"""Cogenerator calculus for contraction semigroups.

A semigroup W_t = exp(tA) and its cogenerator W are related by the Cayley
transform W = (A + I)(A - I)^{-1}.  For matrices with 1 outside the
spectrum, the functional-calculus value e_t(W) with
e_t(z) = exp(t (z + 1)/(z - 1)) is exactly expm(tA), which is how it is
evaluated here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np
import scipy.linalg

from .contraction import Behavior, Contraction, make_contraction
from .errors import ArgumentError, NoConvergence, OneIsEigenvalue
from .opcore import ConvergenceReport, as_matrix, opnorm, smin

TAU_ONE = 1e-10
DEFAULT_T_GRID = (0.0,) + tuple(2.0 ** k for k in range(-10, 4))


@dataclass(frozen=True)
class GeneratorData:
    A: np.ndarray
    numerical_abscissa: float

    @property
    def dim(self) -> int:
        return self.A.shape[0]


def make_generator(A, tau: float = 1e-10) -> GeneratorData:
    """Accept A when the numerical range lies in Re z <= tau * max(1, |A|)."""
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ArgumentError("generator must be square")
    w = float(np.linalg.eigvalsh((A + A.conj().T) / 2).max()) if A.size else 0.0
    if w > tau * max(1.0, opnorm(A)):
        raise ArgumentError(f"numerical abscissa {w:.3e} is positive")
    return GeneratorData(A, w)


@dataclass(frozen=True)
class Cogenerator:
    W: Contraction
    one_not_eigenvalue: bool
    margin: float

    @property
    def matrix(self) -> np.ndarray:
        return self.W.matrix

    @property
    def dim(self) -> int:
        return self.W.dim


def make_cogenerator(W, tau: float = TAU_ONE) -> Cogenerator:
    """Wrap a contraction and certify that 1 is not an eigenvalue."""
    C = W if isinstance(W, Contraction) else make_contraction(W)
    n = C.dim
    margin = smin(C.matrix - np.eye(n)) if n else math.inf
    return Cogenerator(C, bool(margin > tau), float(margin))


def _require(C: Cogenerator) -> None:
    if not C.one_not_eigenvalue:
        raise OneIsEigenvalue(f"sigma_min(W - I) = {C.margin:.3e}")


def cayley(A: GeneratorData) -> Cogenerator:
    """W = (A + I)(A - I)^{-1}."""
    M = A.A
    I = np.eye(A.dim)
    if smin(M - I) <= TAU_ONE:
        raise OneIsEigenvalue("A - I is singular")
    W = np.linalg.solve((M - I).T, (M + I).T).T
    # W is a contraction exactly; round-off can push the norm above 1
    return make_cogenerator(make_contraction(W, tau_norm=1e-8))


def inverse_cayley(C: Cogenerator) -> GeneratorData:
    """A = (W + I)(W - I)^{-1}."""
    _require(C)
    W = C.matrix
    I = np.eye(C.dim)
    A = np.linalg.solve((W - I).T, (W + I).T).T
    return make_generator(A, tau=1e-8)


@dataclass(frozen=True)
class SemigroupSample:
    t: float
    W_t: np.ndarray
    norm: float


def eval_semigroup(C: Cogenerator, t: float, tau: float = 1e-9) -> SemigroupSample:
    """W_t = e_t(W), evaluated as expm(t A) with A the inverse Cayley transform."""
    if t < 0:
        raise ArgumentError("t must be nonnegative")
    n = C.dim
    if t == 0:
        return SemigroupSample(0.0, np.eye(n, dtype=complex), 1.0 if n else 0.0)
    A = inverse_cayley(C).A
    Wt = scipy.linalg.expm(t * A)
    nrm = opnorm(Wt)
    if nrm > 1 + tau * max(1.0, t * opnorm(A)):
        raise ArgumentError(f"|W_t| = {nrm:.12g} exceeds 1 at t = {t}")
    return SemigroupSample(float(t), Wt, nrm)


def _richardson(hs: Sequence[float], values: Sequence[np.ndarray]):
    """Neville extrapolation to h = 0; returns the estimate and the diagonal gaps."""
    h = list(hs)
    m = len(values)
    tab = [[None] * m for _ in range(m)]
    for i in range(m):
        tab[i][0] = np.array(values[i], dtype=complex)
    for j in range(1, m):
        for i in range(j, m):
            tab[i][j] = tab[i][j - 1] + (tab[i][j - 1] - tab[i - 1][j - 1]) * (
                h[i] / (h[i - j] - h[i]))
    best = [tab[i][i] for i in range(m)]
    gaps = [opnorm(best[i] - best[i - 1]) for i in range(1, m)]
    return best[-1], gaps


def radial_semigroup(C: Cogenerator, t: float, r0: float = 1 - 1e-4,
                     levels: int = 4) -> np.ndarray:
    """Cross-check path: e_t(r W) for r -> 1-, extrapolated in 1 - r.

    At a single r = 1 - h the value differs from e_t(W) by O(h |A|^2 t),
    which can exceed 1e-6 for cogenerators close to 1; the extrapolation
    over h, h/2, ... removes the leading terms.
    """
    _require(C)
    W = C.matrix
    I = np.eye(C.dim)
    hs = [(1 - r0) / 2 ** k for k in range(levels)]
    vals = []
    for h in hs:
        rW = (1 - h) * W
        A = np.linalg.solve((rW - I).T, (rW + I).T).T
        vals.append(scipy.linalg.expm(t * A))
    est, _ = _richardson(hs, vals)
    return est


def phi_t(Wt: np.ndarray, t: float) -> np.ndarray:
    """phi_t(W_t) = (W_t - 1 + t)(W_t - 1 - t)^{-1}."""
    I = np.eye(Wt.shape[0])
    return np.linalg.solve((Wt - (1 + t) * I).T, (Wt - (1 - t) * I).T).T


@dataclass(frozen=True)
class Recovery:
    cogenerator: Cogenerator
    estimate: np.ndarray
    plain: np.ndarray
    report: ConvergenceReport


SampleSource = Union[Callable[[float], SemigroupSample], Mapping[float, SemigroupSample]]


def recover_cogenerator(samples: SampleSource, t_sequence: Optional[Sequence[float]] = None,
                        tol: float = 1e-7) -> Recovery:
    """Recover W as the limit of phi_t(W_t) for t -> 0.

    phi_t(W_t) = W + O(t), so at t = 1e-3 the plain value is only accurate
    to a few 1e-4.  The values along the decreasing t-sequence are
    extrapolated to t = 0 (Neville); `plain` keeps phi_t at the first t.
    """
    if t_sequence is None:
        t_sequence = [1e-3 / 2 ** k for k in range(5)]
    ts = [float(t) for t in t_sequence]
    if any(t <= 0 for t in ts) or any(b >= a for a, b in zip(ts, ts[1:])):
        raise ArgumentError("t_sequence must be positive and strictly decreasing")
    get = samples if callable(samples) else samples.__getitem__
    vals = [phi_t(as_matrix(get(t).W_t), t) for t in ts]
    est, gaps = _richardson(ts, vals)
    gap = gaps[-1] if gaps else math.inf
    rep = ConvergenceReport(bool(gap <= tol), len(ts), float(gap), tuple(gaps))
    if not rep.converged:
        raise NoConvergence(f"phi_t(W_t) did not stabilize (gap {gap:.3e})", rep)
    C = make_cogenerator(make_contraction(est, tau_norm=1e-6))
    return Recovery(C, est, vals[0], rep)


@dataclass(frozen=True)
class TransferReport:
    r0: float
    rt: tuple
    t_grid: tuple
    tau: float
    tau_t: float
    cogenerator_holds: bool
    semigroup_holds: bool

    @property
    def consistent(self) -> bool:
        return self.cogenerator_holds == self.semigroup_holds


def transfer_intertwining(Lam, C: Cogenerator, Cp: Cogenerator,
                          t_grid: Sequence[float] = DEFAULT_T_GRID,
                          tau: float = 1e-9, tau_t: float = 1e-8) -> TransferReport:
    """Compare W L = L W' with W_t L = L W'_t on a t-grid."""
    L = as_matrix(Lam)
    r0 = opnorm(C.matrix @ L - L @ Cp.matrix)
    rt = []
    for t in t_grid:
        a = eval_semigroup(C, t).W_t
        b = eval_semigroup(Cp, t).W_t
        rt.append(opnorm(a @ L - L @ b))
    big = max(rt) if rt else 0.0
    return TransferReport(r0, tuple(rt), tuple(float(t) for t in t_grid), tau, tau_t,
                          r0 <= tau, big <= tau_t)


def semigroup_backward_behavior(C: Cogenerator, t: float = 64.0,
                                tau_zero: float = 1e-6) -> Behavior:
    """Label of W_t^H h at large t, mirroring the cogenerator class test."""
    Wt = eval_semigroup(C, t).W_t
    B = Wt.conj().T
    s = np.linalg.svd(B, compute_uv=False)
    lo, hi = float(s[-1]), float(s[0])
    if hi < tau_zero:
        return Behavior.TO_ZERO
    if lo >= tau_zero:
        return Behavior.BOUNDED_BELOW
    return Behavior.MIXED


def residual_group(res, t: float) -> SemigroupSample:
    """Residual group R_t: the semigroup of the residual part of a dilation."""
    return eval_semigroup(make_cogenerator(res.closure), t)
