"""Criteria for similarity of a contraction to a unitary operator.

Each criterion is evaluated independently and with its own threshold:

* (b) W invertible with sup_n |W^{-n}| bounded,
* (c) lim W^{*n} W^n uniformly positive,
* (e) (1 - |lam|) |(lam - W)^{-1}| bounded on the disc,
* (g) Theta_W(lam) boundedly invertible on the disc,

together with a finite-dimensional oracle (diagonalizable with unimodular
spectrum).  Suprema over the disc are sampled on rings and refined with
Nelder-Mead started from the worst ring samples.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .contraction import Contraction, defect_operators, make_contraction
from .errors import InconsistentCriteria, NotSimilar
from .intertwine import unitary_star_asymptote
from .modelspace import char_fn
from .opcore import opnorm, smin, strong_limit

RINGS = (0.5, 0.9, 0.99, 0.999)
B_MAX = 1e6
C_MIN = 1e-8
E_MAX = 1e6
G_MAX = 1e6
COND_MAX = 1e8


@dataclass(frozen=True)
class SimilarityReport:
    b_sup_inverse_powers: float
    c_delta: float
    d_limit_exists: bool
    e_resolvent_const: float
    g_theta_inverse_sup: float
    oracle_verdict: bool
    b_pass: bool
    c_pass: bool
    e_pass: bool
    g_pass: bool
    ring_max_e: tuple
    ring_max_g: tuple
    eigvec_cond: float
    thresholds: dict = field(default_factory=dict)

    @property
    def verdicts(self) -> dict:
        return {"b": self.b_pass, "c": self.c_pass, "e": self.e_pass,
                "g": self.g_pass, "oracle": self.oracle_verdict}

    @property
    def unanimous(self) -> bool:
        return len(set(self.verdicts.values())) == 1

    @property
    def similar(self) -> bool:
        return self.unanimous and self.oracle_verdict

    def as_dict(self) -> dict:
        return asdict(self)


def _sup_inverse_powers(M: np.ndarray, n_max: int, cap: float) -> float:
    if smin(M) <= 1e-14:
        return math.inf
    Inv = np.linalg.inv(M)
    P = np.eye(M.shape[0], dtype=complex)
    best = 1.0
    for _ in range(n_max):
        P = Inv @ P
        best = max(best, opnorm(P))
        if best > cap:
            break
    return float(best)


def _delta_limit(M: np.ndarray, n_max: int):
    n = M.shape[0]
    state = {"k": 0, "P": np.eye(n, dtype=complex)}

    def gen(k):
        while state["k"] < k:
            state["P"] = M @ state["P"]
            state["k"] += 1
        P = state["P"]
        return P.conj().T @ P

    tau = 1e-12
    V, rep = strong_limit(gen, tau, n_max)
    w = np.linalg.eigvalsh((V + V.conj().T) / 2)
    # below the convergence tolerance the limit is indistinguishable from 0
    lo = float(w.min())
    return (lo if lo > tau else 0.0), rep.converged


def _ring_points(rings: Sequence[float], n_angles: int) -> list:
    th = 2 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
    return [r * np.exp(1j * th) for r in rings]


def _refine(objective, starts, rmax: float = 1 - 1e-9) -> float:
    """Minimize objective(lam) over the disc from several starting points."""
    best = math.inf
    for z0 in starts:
        def f(x):
            lam = complex(x[0], x[1])
            if abs(lam) >= rmax:
                return 1e300
            return objective(lam)
        res = minimize(f, [z0.real, z0.imag], method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-12, "maxiter": 300})
        best = min(best, float(res.fun), f([z0.real, z0.imag]))
    return best


def similarity_battery(W, n_max: int = 2000, rings: Sequence[float] = RINGS,
                       n_angles: int = 64, n_starts: int = 4,
                       raise_on_disagreement: bool = True) -> SimilarityReport:
    """Evaluate criteria (b), (c), (e), (g) and the oracle; they must agree."""
    C = W if isinstance(W, Contraction) else make_contraction(W)
    M = C.matrix
    n = M.shape[0]
    I = np.eye(n)
    b = _sup_inverse_powers(M, n_max, B_MAX * 10)
    c, conv = _delta_limit(M, n_max)

    pts = _ring_points(rings, n_angles)
    ring_e, ring_g = [], []
    allpts, sm_res = [], []
    for ring, zs in zip(rings, pts):
        vals = np.array([smin(z * I - M) for z in zs])
        ring_e.append(float(np.max((1 - ring) / np.maximum(vals, 1e-300))))
        allpts.extend(zs.tolist())
        sm_res.extend(vals.tolist())
    order = np.argsort(sm_res)[:n_starts]
    lo = _refine(lambda lam: math.log(max(smin(lam * I - M), 1e-300)) - math.log(1 - abs(lam)),
                 [allpts[i] for i in order])
    e = max(max(ring_e), math.exp(-lo))

    dd = defect_operators(C)
    if dd.frame_DW.dim == 0:
        g = 0.0
        ring_g = [0.0] * len(rings)
    else:
        gs = []
        for zs in pts:
            v = np.array([smin(char_fn(C, z, dd)) for z in zs])
            ring_g.append(float(np.max(1.0 / np.maximum(v, 1e-300))))
            gs.extend(v.tolist())
        order = np.argsort(gs)[:n_starts]
        lo = _refine(lambda lam: math.log(max(smin(char_fn(C, lam, dd)), 1e-300)),
                     [allpts[i] for i in order])
        g = max(max(ring_g), math.exp(-lo))

    w, V = np.linalg.eig(M)
    cond = float(np.linalg.cond(V))
    oracle = bool(cond < COND_MAX and np.all(np.abs(np.abs(w) - 1) <= 1e-8))
    rep = SimilarityReport(
        b, c, conv, e, g, oracle,
        b_pass=b <= B_MAX, c_pass=c > C_MIN, e_pass=e <= E_MAX, g_pass=g <= G_MAX,
        ring_max_e=tuple(ring_e), ring_max_g=tuple(ring_g), eigvec_cond=cond,
        thresholds={"b": B_MAX, "c": C_MIN, "e": E_MAX, "g": G_MAX, "cond": COND_MAX, "n_max": n_max})
    if raise_on_disagreement and not rep.unanimous:
        raise InconsistentCriteria(f"criteria disagree: {rep.verdicts}", rep)
    return rep


@dataclass(frozen=True)
class CharacteristicBound:
    sup_theta_inverse: float
    lambda_norm: float
    lambda_inverse_norm: float
    degenerate: bool

    @property
    def condition(self) -> float:
        return self.lambda_norm * self.lambda_inverse_norm

    @property
    def ratio_condition(self) -> float:
        """|L| |L^{-1}| divided by the sampled sup of |Theta^{-1}|."""
        return self.condition / self.sup_theta_inverse if self.sup_theta_inverse else math.nan

    @property
    def ratio_min(self) -> float:
        """min(|L|, |L^{-1}|) divided by the sampled sup of |Theta^{-1}|."""
        m = min(self.lambda_norm, self.lambda_inverse_norm)
        return m / self.sup_theta_inverse if self.sup_theta_inverse else math.nan


def characteristic_bound(W: Contraction, lam_samples: Optional[Sequence[complex]] = None,
                         n_max: Optional[int] = None) -> CharacteristicBound:
    """Sampled sup |Theta_W(lam)^{-1}| against the affinity from the asymptote.

    Finite contractions must pass the battery first.  For truncated
    sequence-space operators the battery is not meaningful (the truncation
    is nilpotent), so only the asymptote map is required to be invertible
    on its range.
    """
    if W.op.is_finite:
        rep = similarity_battery(W, raise_on_disagreement=False)
        if not rep.similar:
            raise NotSimilar(f"similarity criteria fail: {rep.verdicts}")
    dd = defect_operators(W)
    if lam_samples is None:
        lam_samples = np.concatenate(_ring_points(RINGS, 250))
    if dd.frame_DW.dim == 0:
        sup = 0.0
    else:
        sup = max(1.0 / max(smin(char_fn(W, z, dd)), 1e-300) for z in lam_samples)
        if sup > G_MAX:
            raise NotSimilar(f"Theta has a near-zero inside the disc (sup {sup:.3e})")
    asy = unitary_star_asymptote(W, n_max=n_max)
    L = asy.Lambda_star.map
    s = np.linalg.svd(L, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise NotSimilar("asymptote map is not invertible on its range")
    return CharacteristicBound(float(sup), float(s[0]), float(1.0 / s[-1]), dd.frame_DW.dim == 0)
