"""Randomized checkers for the elementary inequalities behind the solver.

Each checker draws seeded random inputs, evaluates both sides of an
inequality, and fits the sharpest constant the sample supports (the
inequalities assert existence of constants, not values, so the testable
content is that the observed ratios stay bounded and positive).  Reports
are bit-reproducible for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import quad

from .exceptions import FssError
from .grid import Kernel
from .operators import Field, pairing, phi_p, seminorm_p
from .sampling import trial_field


@dataclass(frozen=True)
class LemmaReport:
    """Outcome of one randomized lemma check."""

    lemma: str
    trials: int
    worst_slack: float
    witness: dict = dc_field(default_factory=dict)
    constants: dict = dc_field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.worst_slack >= -1e-12

    def to_json_record(self) -> dict:
        return {
            "lemma": self.lemma,
            "trials": self.trials,
            "worst_slack": self.worst_slack,
            "witness": self.witness,
            "constants": self.constants,
            "passed": self.passed,
        }


def _vector_phi(x: np.ndarray, p: float) -> np.ndarray:
    norm = np.linalg.norm(x)
    if norm == 0.0:
        return np.zeros_like(x)
    return norm ** (p - 2.0) * x


def check_vector_inequalities(p: float, trials: int = 1000,
                              seed: int = 0) -> LemmaReport:
    """Two-sided comparison of |X|^(p-2)X - |Y|^(p-2)Y with |X - Y|.

    The difference of the vector powers is bounded above by a multiple of
    |X-Y|^(p-1) (p < 2) or (|X|+|Y|)^(p-2)|X-Y| (p >= 2), and its inner
    product with X - Y is bounded below by a multiple of
    |X-Y|^2/(|X|+|Y|)^(2-p) (p < 2) or |X-Y|^p (p >= 2).  The upper
    constant is fitted as the max ratio (required not to outgrow ten
    times the sample median), the lower one as the min ratio (required
    strictly positive).  Both equal 1 at p = 2.
    """
    if p <= 1.0:
        raise ValueError(f"p must exceed 1, got {p}")
    rng = np.random.default_rng(seed)
    up_ratios = []
    low_ratios = []
    up_witness = low_witness = None
    for t in range(trials):
        dim = 1 + t % 3
        x = rng.standard_normal(dim)
        y = rng.standard_normal(dim)
        if np.linalg.norm(x) == 0.0 or np.linalg.norm(y) == 0.0:
            continue
        d = x - y
        nd = np.linalg.norm(d)
        if nd == 0.0:
            continue
        diff = _vector_phi(x, p) - _vector_phi(y, p)
        nsum = np.linalg.norm(x) + np.linalg.norm(y)
        if p < 2.0:
            up_core = nd ** (p - 1.0)
            low_core = nd**2 / nsum ** (2.0 - p)
        else:
            up_core = nsum ** (p - 2.0) * nd
            low_core = nd**p
        r_up = np.linalg.norm(diff) / up_core
        r_low = float(diff @ d) / low_core
        if not up_ratios or r_up > max(up_ratios):
            up_witness = {"X": x.tolist(), "Y": y.tolist(), "ratio": float(r_up)}
        if not low_ratios or r_low < min(low_ratios):
            low_witness = {"X": x.tolist(), "Y": y.tolist(), "ratio": float(r_low)}
        up_ratios.append(float(r_up))
        low_ratios.append(float(r_low))
    c_upper = max(up_ratios)
    c_lower = min(low_ratios)
    boundedness_slack = 10.0 * float(np.median(up_ratios)) - c_upper
    worst = min(boundedness_slack, c_lower)
    return LemmaReport(
        lemma="vector-power-inequalities",
        trials=trials,
        worst_slack=float(worst),
        witness={"upper": up_witness, "lower": low_witness},
        constants={"c_p": float(c_upper), "C_p": float(c_lower)},
    )


def check_strong_monotonicity(kernel: Kernel, trials: int = 1000,
                              seed: int = 0) -> LemmaReport:
    """Coercivity of the operator difference pairing on random field pairs.

    <A v1 - A v2, v1 - v2> dominates [v1-v2]^2 / ([v1]^p + [v2]^p)^((2-p)/p)
    for 1 < p < 2 and [v1-v2]^p for p >= 2, with a positive constant fitted
    as the smallest observed ratio.
    """
    p = kernel.params.p
    ratios = []
    witness = None
    for t in range(trials):
        v1 = trial_field(kernel.grid, seed, 2 * t)
        v2 = trial_field(kernel.grid, seed, 2 * t + 1)
        d = v1 - v2
        sn_d = seminorm_p(d, kernel)
        if sn_d == 0.0:
            continue
        num = pairing(v1, d, kernel) - pairing(v2, d, kernel)
        if p >= 2.0:
            den = sn_d
        else:
            den = sn_d ** (2.0 / p) / (
                seminorm_p(v1, kernel) + seminorm_p(v2, kernel)
            ) ** ((2.0 - p) / p)
        r = num / den
        if not ratios or r < min(ratios):
            witness = {"trial": t, "ratio": float(r)}
        ratios.append(float(r))
    c = min(ratios)
    return LemmaReport(
        lemma="strong-monotonicity",
        trials=trials,
        worst_slack=float(c),
        witness=witness or {},
        constants={"C": float(c)},
    )


def _power_kernel_integral(a: float, b: float, p: float) -> float:
    """Quadrature of t -> |a + t(b - a)|^(p-2) over [0, 1].

    For p < 2 the integrand has an integrable singularity at the zero of
    a + t(b - a); the quadrature splits there.
    """
    if a == b:
        return abs(a) ** (p - 2.0) if a != 0.0 else 0.0
    t_zero = a / (a - b)
    points = [t_zero] if 0.0 < t_zero < 1.0 else None
    value, err = quad(lambda t: abs(a + t * (b - a)) ** (p - 2.0), 0.0, 1.0,
                      points=points, epsabs=1e-12, epsrel=1e-12, limit=200)
    if err > 1e-10 * (1.0 + abs(value)):
        raise FssError(
            f"quadrature failed for a={a}, b={b}, p={p}: error {err:.3e}"
        )
    return value


def check_q_identity(p: float, trials: int = 1000, seed: int = 0,
                     kernel: Kernel | None = None,
                     field_trials: int = 100) -> LemmaReport:
    """Integral form of the difference of odd powers, plus its field-level
    consequence.

    Scalars: |b|^(p-2)b - |a|^(p-2)a = (p-1)(b-a) * int_0^1 |a+t(b-a)|^(p-2) dt,
    with the integral evaluated by adaptive quadrature (tolerance 1e-10).
    Fields: <A v1 - A v2, (v1 - v2)_+> >= 0 up to 1e-10, checked on random
    pairs over ``kernel`` (a small default grid is built when omitted).
    """
    if p <= 1.0:
        raise ValueError(f"p must exceed 1, got {p}")
    rng = np.random.default_rng(seed)
    tol = 1e-10
    worst = math.inf
    witness = None
    for _ in range(trials):
        a, b = rng.uniform(-2.0, 2.0, size=2)
        lhs = float(phi_p(np.array(b), p) - phi_p(np.array(a), p))
        rhs = (p - 1.0) * (b - a) * _power_kernel_integral(a, b, p)
        slack = tol * (1.0 + abs(lhs)) - abs(lhs - rhs)
        if slack < worst:
            worst = slack
            witness = {"a": float(a), "b": float(b), "gap": abs(lhs - rhs)}
    if kernel is None:
        kernel = _default_kernel(p)
    field_worst = math.inf
    for t in range(field_trials):
        v1 = trial_field(kernel.grid, seed + 1, 2 * t)
        v2 = trial_field(kernel.grid, seed + 1, 2 * t + 1)
        d = v1 - v2
        pos = Field(np.maximum(d.values, 0.0), kernel.grid)
        val = pairing(v1, pos, kernel) - pairing(v2, pos, kernel)
        field_worst = min(field_worst, val + 1e-10)
    return LemmaReport(
        lemma="odd-power-integral-identity",
        trials=trials,
        worst_slack=float(min(worst, field_worst)),
        witness=witness or {},
        constants={"quadrature_tol": tol},
    )


def _default_kernel(p: float) -> Kernel:
    from .grid import FracParams, build_grid, build_kernel

    grid = build_grid([(0.0, 1.0)], 1.0 / 9.0, 0.5)
    return build_kernel(grid, FracParams(s=0.5, p=p, n_dim=1), True)


def level_set_sizes(u: Field, thresholds) -> np.ndarray:
    """Measure of the super-level sets {u > k} for each threshold."""
    m = u.grid.measure
    ks = np.asarray(list(thresholds), dtype=float)
    return np.array([m * float((u.values > k).sum()) for k in ks])


def check_stampacchia(g_samples, k0: float, C: float, theta: float,
                      b: float) -> LemmaReport:
    """Level-set decay lemma: a nonincreasing g with
    g(h) <= C g(k)^b / (h-k)^theta for k0 <= k < h vanishes beyond
    k0 + d, where d^theta = C g(k0)^(b-1) 2^(theta b/(b-1)).

    ``g_samples`` is a pair (ks, gs) of sample abscissae (>= k0, increasing)
    and values.  The hypothesis is verified on all sampled pairs (raising
    ``FssError`` when violated), the vanishing conclusion is asserted on
    every sample past k0 + d, and the geometric refinement sequence
    k_n = k0 + d - d/2^n is replayed against the sampled values (at
    sampled abscissae) with the induction bound g(k_n) <= g(k0) 2^(-n
    theta/(b-1)).
    """
    if b <= 1.0 or theta <= 0.0 or C <= 0.0:
        raise ValueError("need b > 1, theta > 0, C > 0")
    ks = np.asarray(g_samples[0], dtype=float)
    gs = np.asarray(g_samples[1], dtype=float)
    if ks.shape != gs.shape or ks.ndim != 1 or ks.size == 0:
        raise ValueError("g_samples must be two equal-length 1D arrays")
    if np.any(np.diff(ks) <= 0.0):
        raise ValueError("sample abscissae must be strictly increasing")
    if np.any(gs < 0.0) or np.any(np.diff(gs) > 1e-12):
        raise FssError("not a Stampacchia family: g is not nonnegative "
                       "and nonincreasing")
    if ks[0] < k0 - 1e-12:
        raise ValueError("samples must start at or after k0")

    rel = 1e-9
    gaps = ks[None, :] - ks[:, None]
    with np.errstate(divide="ignore"):
        bounds = np.where(
            gaps > 0.0,
            C * gs[:, None] ** b / np.where(gaps > 0.0, gaps, 1.0) ** theta,
            np.inf,
        )
    bad = gs[None, :] > bounds * (1.0 + rel) + 1e-300
    if bad.any():
        i, j = map(int, np.argwhere(bad)[0])
        raise FssError(
            f"not a Stampacchia family: g({ks[j]}) = {gs[j]} exceeds "
            f"C g({ks[i]})^b/(h-k)^theta = {bounds[i, j]}"
        )

    g0 = float(np.interp(k0, ks, gs))
    d = (C * g0 ** (b - 1.0) * 2.0 ** (theta * b / (b - 1.0))) ** (1.0 / theta)
    beyond = gs[ks >= k0 + d - 1e-12]
    worst = -float(beyond.max()) if beyond.size else 0.0

    replay = []
    n = 1
    while True:
        k_n = k0 + d - d / 2.0**n
        if k_n > ks[-1] + 1e-12:
            break
        matches = np.nonzero(np.abs(ks - k_n) <= 1e-9 * (1.0 + abs(k_n)))[0]
        if matches.size:
            bound_n = g0 * 2.0 ** (-n * theta / (b - 1.0))
            gap = bound_n - float(gs[matches[0]])
            replay.append({"n": n, "k_n": float(k_n), "bound": bound_n,
                           "g": float(gs[matches[0]])})
            worst = min(worst, gap + 1e-12 * (1.0 + g0))
        n += 1
        if n > 60:
            break
    return LemmaReport(
        lemma="level-set-decay",
        trials=int(ks.size),
        worst_slack=float(worst),
        witness={"d": float(d), "k0": float(k0), "replay": replay},
        constants={"C": float(C), "theta": float(theta), "b": float(b),
                   "d": float(d)},
    )
