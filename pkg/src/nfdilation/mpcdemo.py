"""Misra-Prigogine-Courbage construction on the dyadic Bernoulli shift.

Functions on {0,1}^Z depending on the coordinates -m..m are expanded in
Walsh functions w_S, S a subset of the window, encoded as a bitmask with
bit i standing for coordinate i - m.  The Frobenius-Perron operator U
shifts every index one step into the future (S -> S + 1); an index that
would leave the window is sent to 0, i.e. composed with the conditional
expectation onto the window algebra.  The Koopman operator is V = U^T.

The age of w_S is max(S).  A nonincreasing weight lambda(age) gives the
diagonal map Lambda and the Markov semigroup W = Lambda U Lambda^{-1}.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .catalog import weighted_bilateral_shift
from .contraction import ClassLabel, classify, make_contraction
from .errors import NonpositiveWeight, WindowTooLarge
from .intertwine import QuasiAffinityCert, Verdict, unitary_star_asymptote
from .opcore import hausdorff, unitary_closure

MAX_WINDOW = 6


@dataclass(frozen=True)
class DyadicSystem:
    m: int

    @property
    def nbits(self) -> int:
        return 2 * self.m + 1

    @property
    def dim(self) -> int:
        return 1 << self.nbits

    def index(self, S: Sequence[int]) -> int:
        idx = 0
        for k in S:
            if not -self.m <= k <= self.m:
                raise ValueError(f"coordinate {k} outside the window")
            idx |= 1 << (k + self.m)
        return idx

    def subset(self, idx: int) -> tuple:
        return tuple(i - self.m for i in range(self.nbits) if idx >> i & 1)

    def ages(self) -> np.ndarray:
        """max(S) per index; the constant (S empty) gets -(m + 1)."""
        idx = np.arange(self.dim)
        top = np.zeros(self.dim, dtype=int)
        for i in range(self.nbits):
            top[(idx >> i) & 1 == 1] = i
        age = top - self.m
        age[0] = -(self.m + 1)
        return age


@dataclass(frozen=True)
class PartitionOperators:
    V: sp.csr_matrix
    U: sp.csr_matrix
    duality_residual: float


def build_system(m: int, seed: int = 0):
    """Window -m..m with Koopman V and Frobenius-Perron U on Walsh indices."""
    if not 1 <= m <= MAX_WINDOW:
        raise WindowTooLarge(f"window m={m} outside 1..{MAX_WINDOW}")
    sys_ = DyadicSystem(m)
    n = sys_.dim
    top = 1 << (sys_.nbits - 1)
    src = np.arange(n)
    keep = (src & top) == 0
    dst = src[keep] << 1
    U = sp.csr_matrix((np.ones(dst.size), (dst, src[keep])), shape=(n, n))
    V = U.T.tocsr()
    rng = np.random.default_rng(seed)
    rho, f = rng.standard_normal(n), rng.standard_normal(n)
    dual = abs(float((U @ rho) @ f - rho @ (V @ f)))
    return sys_, PartitionOperators(V, U, dual)


@dataclass(frozen=True)
class TimeOperator:
    T: np.ndarray
    relation_residual: float


def build_time_operator(sys_: DyadicSystem, ops: PartitionOperators, n_max: Optional[int] = None) -> TimeOperator:
    """T w_S = max(S) w_S; the constant is excluded (value 0 on index 0).

    The relation U^{-n} T U^n = T + n is checked with U^{-1} = V on the
    indices whose shift by n stays in the window.
    """
    age = sys_.ages().astype(float)
    T = age.copy()
    T[0] = 0.0
    n_max = sys_.m if n_max is None else n_max
    worst = 0.0
    Tm = sp.diags(T)
    for n in range(n_max + 1):
        Un = ops.U ** n if n else sp.identity(sys_.dim, format="csr")
        Vn = ops.V ** n if n else sp.identity(sys_.dim, format="csr")
        L = (Vn @ Tm @ Un).diagonal()
        inside = (np.arange(sys_.dim) > 0) & (age + n <= sys_.m)
        worst = max(worst, float(np.max(np.abs(L[inside] - (T[inside] + n)), initial=0.0)))
    return TimeOperator(T, worst)


def dyadic_weight(n: int) -> float:
    return 2.0 ** -max(n, 0)


@dataclass(frozen=True)
class LambdaWeights:
    fn: Callable[[int], float] = dyadic_weight

    def table(self, lo: int, hi: int) -> dict:
        vals = {n: float(self.fn(n)) for n in range(lo, hi + 1)}
        bad = [n for n, v in vals.items() if not v > 0]
        if bad:
            raise NonpositiveWeight(f"lambda_n <= 0 for n in {bad}")
        for n in range(lo, hi):
            if vals[n + 1] > vals[n] or vals[n] > 1 or (n <= 0 and vals[n] != 1.0):
                raise ValueError("weights must be 1 for n <= 0 and nonincreasing")
        return vals


@dataclass(frozen=True)
class LambdaOperator:
    diag: np.ndarray
    certificate: QuasiAffinityCert
    preserves_one: bool

    @property
    def matrix(self) -> sp.dia_matrix:
        return sp.diags(self.diag)


def build_lambda(sys_: DyadicSystem, T: TimeOperator, weights: LambdaWeights = LambdaWeights()) -> LambdaOperator:
    """Lambda = P_const + sum_n lambda_n P_n with P_n the age-n Walsh span."""
    tab = weights.table(-sys_.m - 1, sys_.m + 1)
    age = sys_.ages()
    d = np.array([tab[int(a)] for a in age])
    d[0] = 1.0
    smin = float(d.min())
    cert = QuasiAffinityCert(smin, 0.0, Verdict.QUASI_AFFINITY, 0.0, 1e-8)
    return LambdaOperator(d, cert, bool(d[0] == 1.0))


def markov_operator(lam: LambdaOperator, ops: PartitionOperators) -> sp.csr_matrix:
    return (sp.diags(lam.diag) @ ops.U @ sp.diags(1.0 / lam.diag)).tocsr()


def _partial_perm_norm(A) -> float:
    # at most one nonzero per row and column, so the norm is the largest entry
    A = sp.csr_matrix(A)
    A.eliminate_zeros()
    return float(np.max(np.abs(A.data), initial=0.0))


def walsh_coefficients(values: np.ndarray) -> np.ndarray:
    """Walsh coefficients of point values on {0,1}^(2m+1) (uniform measure)."""
    n = values.shape[0]
    return scipy.linalg.hadamard(n) @ values / n


def walsh_values(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.shape[0]
    return scipy.linalg.hadamard(n) @ coeffs


def sample_densities(sys_: DyadicSystem, count: int, seed: int = 0) -> np.ndarray:
    """Nonnegative densities with mean 1, as Walsh coefficient columns.

    Half are smooth (exponential point values), half are normalized
    indicators of random sets, which stress positivity the most.
    """
    rng = np.random.default_rng(seed)
    n = sys_.dim
    cols = []
    for k in range(count):
        if k % 2 == 0:
            v = rng.exponential(size=n)
        else:
            v = (rng.uniform(size=n) < rng.uniform(0.05, 0.5)).astype(float)
            if not v.any():
                v[rng.integers(n)] = 1.0
        v = v / v.mean()
        cols.append(walsh_coefficients(v))
    return np.array(cols).T


@dataclass(frozen=True)
class MarkovReport:
    m: int
    n_steps: int
    intertwining_residual: float
    preserves_one: bool
    mean_preserved: float
    positivity_violations: int
    n_densities: int
    monotonicity: list
    mixing_curve: list
    mixing_closed_form_error: float
    class_label: str
    class_evidence: dict
    spectral_hausdorff: float
    grid_step: float
    point_spectrum_on_circle: list
    constants_eigenspace: bool
    notes: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


def age_chain(window: int = 64, weights: LambdaWeights = LambdaWeights()):
    """Reduction of W to one translation class: a weighted shift in age with
    weight lambda_{a+1}/lambda_a from age a to a + 1."""
    tab = weights.table(-window - 1, window + 1)
    w = {a: tab[a + 1] / tab[a] for a in range(-window, window + 1)}
    return make_contraction(weighted_bilateral_shift(window, w))


def markov_semigroup(lam: LambdaOperator, sys_: DyadicSystem, ops: PartitionOperators,
                     n_steps: Optional[int] = None, n_densities: int = 1000, seed: int = 0,
                     weights: LambdaWeights = LambdaWeights(), chain_window: int = 64,
                     chain_n_max: int = 48, tol_pos: float = 1e-12) -> MarkovReport:
    """Markov semigroup W = Lambda U Lambda^{-1} and its certificates."""
    m = sys_.m
    n_steps = m if n_steps is None else n_steps
    W = markov_operator(lam, ops)
    L = sp.diags(lam.diag)
    Wn = sp.identity(sys_.dim, format="csr")
    Un = sp.identity(sys_.dim, format="csr")
    inter = 0.0
    for _ in range(n_steps):
        Wn = W @ Wn
        Un = ops.U @ Un
        inter = max(inter, _partial_perm_norm(Wn @ L - L @ Un))
    e0 = np.zeros(sys_.dim)
    e0[0] = 1.0
    one = bool(np.array_equal(W @ e0, e0))
    # mean of a density is its constant coefficient
    mean = float(np.max(np.abs((W.T @ e0) - e0)))

    wz = np.zeros(sys_.dim)
    wz[sys_.index([0])] = 1.0
    rho = e0 + wz
    curve, x = [], rho.copy()
    for n in range(m + 1):
        curve.append(float(np.linalg.norm(x - e0)))
        x = W @ x
    closed = max(abs(curve[n] - 2.0 ** -n) for n in range(m + 1))

    viol, mono = 0, []
    if n_densities:
        D = sample_densities(sys_, n_densities, seed)
        H = scipy.linalg.hadamard(sys_.dim)
        X = D.copy()
        prev = np.linalg.norm(X - e0[:, None], axis=0)
        ok = np.ones(n_densities, dtype=bool)
        bad = np.zeros(n_densities, dtype=bool)
        for _ in range(n_steps + 1):
            X = W @ X
            vals = H @ X
            bad |= vals.min(axis=0) < -tol_pos
            cur = np.linalg.norm(X - e0[:, None], axis=0)
            ok &= cur <= prev + 1e-12
            prev = cur
        viol = int(bad.sum())
        mono = ok.tolist()

    chain = age_chain(chain_window, weights)
    lab = classify(chain, chain_n_max)
    # the chain has a defect at every age >= 0, so its isometric dilation
    # is large; the asymptote route gives the same unitary more cheaply
    asy = unitary_star_asymptote(chain, n_max=chain_window)
    koop = np.zeros((asy.U_star.shape[0],) * 2, dtype=complex)
    for i in range(koop.shape[0] - 1):
        koop[i + 1, i] = 1.0
    step = 2 * math.pi / 64
    hd = hausdorff(np.linalg.eigvals(asy.closure), np.linalg.eigvals(unitary_closure(koop)))

    pts, const = [], False
    if sys_.dim <= 512:
        Wd = W.toarray()
        w, Vv = np.linalg.eig(Wd)
        on = np.abs(np.abs(w) - 1) <= 1e-9
        pts = [[float(z.real), float(z.imag)] for z in w[on]]
        if on.sum() == 1:
            v = Vv[:, on][:, 0]
            const = bool(np.linalg.norm(v - v[0] * e0) <= 1e-9 * np.linalg.norm(v))
    return MarkovReport(
        m=m, n_steps=n_steps, intertwining_residual=inter, preserves_one=one,
        mean_preserved=mean, positivity_violations=viol, n_densities=n_densities,
        monotonicity=mono, mixing_curve=curve, mixing_closed_form_error=float(closed),
        class_label=lab.name,
        class_evidence={"forward_max": lab.max_forward, "backward_min": lab.evidence_backward,
                        "n_max": lab.n_max, "window": chain_window},
        spectral_hausdorff=float(hd), grid_step=step, point_spectrum_on_circle=pts,
        constants_eigenspace=const,
        notes={"class": "computed on the age-chain reduction of W",
               "positivity": "empirical over sampled densities"})
