"""Monotone approximation chain for the singular nonlocal problem.

The singular problem asks for a positive field u, vanishing outside the
domain, with

    (nonlocal p-operator) u = omega / u**alpha .

Its energy is not differentiable, so u is reached through regularized
levels indexed by n: truncate the weight at height n and shift the
denominator by 1/n,

    (nonlocal p-operator) u_n = min(omega, n) / (u_n + 1/n)**alpha .

Each level is solved as a fixed point of the map T that sends w to the
solution of the nonsingular problem with frozen datum
min(omega, n) / (|w| + 1/n)**alpha.  T is order-reversing, so the plain
Picard iteration oscillates (with rate approaching 1 for alpha = 1 and
large n); the implementation therefore iterates the half-averaged map
w -> (w + T(w)) / 2, whose local contraction rate stays at most ~1/2.

Levels are walked along a geometric schedule with warm starts.  The level
solutions increase in n, their energies increase, and they dominate the
barrier m_alpha * psi built from the capped weight.  After the schedule
converges, the limit is polished by the same averaged iteration applied
to the unregularized datum omega / w**alpha, which removes the residual
O(1/n) regularization error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .exceptions import FssError, SolverError, StagnationError
from .grid import Kernel, r_alpha
from .operators import (
    Field,
    WeightField,
    apply_operator,
    norm_r,
    pairing,
    seminorm_p,
)
from .sampling import trial_fields
from .solver import (
    EmbeddingConstant,
    SolveOptions,
    embedding_for_existence_bound,
    solve_barrier,
    solve_nonsingular,
)


@dataclass(frozen=True)
class RegularizedProblem:
    """One level of the approximation chain."""

    level: int
    alpha: float
    omega_n: WeightField

    def __post_init__(self):
        if self.level < 1:
            raise ValueError(f"level must be at least 1, got {self.level}")
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def shift(self) -> float:
        return 1.0 / self.level


def truncate_weight(omega: WeightField, n: int) -> WeightField:
    """Nodewise min(omega, n) with norms recomputed."""
    if n < 1:
        raise ValueError(f"truncation level must be at least 1, got {n}")
    return WeightField(np.minimum(omega.values, float(n)), omega.grid, omega.r)


def make_level(omega: WeightField, n: int, alpha: float) -> RegularizedProblem:
    return RegularizedProblem(level=int(n), alpha=float(alpha),
                              omega_n=truncate_weight(omega, n))


@dataclass(frozen=True)
class ChainOptions:
    """Tolerances for the fixed-point sweeps, the n-schedule, and polish."""

    solve: SolveOptions = dc_field(default_factory=SolveOptions)
    fixed_point_tol: float = 1e-9
    max_fixed_point_sweeps: int = 500
    chain_tol: float = 1e-7
    max_levels: int = 40
    polish: bool = True
    polish_tol: float = 1e-13
    max_polish_sweeps: int = 400
    residual_trials: int = 100
    residual_seed: int = 7


def fixed_point_step(problem: RegularizedProblem, kernel: Kernel, w: Field,
                     opts: SolveOptions | None = None) -> Field:
    """One application of T: solve with datum omega_n / (|w| + 1/n)^alpha."""
    datum = problem.omega_n.values / (
        np.abs(w.values) + problem.shift
    ) ** problem.alpha
    return solve_nonsingular(datum, kernel, opts, x0=w)


def solve_level(problem: RegularizedProblem, kernel: Kernel, init: Field,
                opts: ChainOptions | None = None) -> tuple[Field, int]:
    """Iterate the averaged fixed-point map until the sweep difference
    drops below the fixed-point tolerance.

    Returns the level solution (strictly positive at every interior node)
    and the number of sweeps used.  Raises ``StagnationError`` when the
    sweep budget runs out.
    """
    opts = opts or ChainOptions()
    if init.values.min() < 0.0:
        raise ValueError("initial field must be nonnegative")
    w = init
    history: list[float] = []
    for sweep in range(1, opts.max_fixed_point_sweeps + 1):
        image = fixed_point_step(problem, kernel, w, opts.solve)
        new = 0.5 * (w + image)
        delta = (new - w).max_norm()
        history.append(delta)
        w = new
        if delta <= opts.fixed_point_tol:
            break
    else:
        raise StagnationError(
            f"fixed-point sweeps stagnated at level {problem.level} "
            f"(last difference {history[-1]:.3e})",
            iterate=w,
            history=history,
        )
    if w.values.min() <= 0.0:
        raise SolverError("level solution is not strictly positive",
                          iterate=w.values)
    return w, sweep


@dataclass(frozen=True)
class LevelRecord:
    """Diagnostics stored per chain level."""

    n: int
    u: Field
    seminorm: float  # [u_n]^p
    fp_sweeps: int
    residual: float
    min_value: float
    max_value: float
    apriori_bound: float | None
    apriori_ok: bool | None

    def to_json_record(self) -> dict:
        return {
            "n": self.n,
            "seminorm_p": self.seminorm,
            "min_u": self.min_value,
            "max_u": self.max_value,
            "fp_iters": self.fp_sweeps,
            "residual": self.residual,
        }


@dataclass(frozen=True)
class ChainResult:
    """Chain levels, their diagnostics, and the polished limit field."""

    alpha: float
    omega: WeightField
    kernel: Kernel
    levels: tuple[LevelRecord, ...]
    u_alpha: Field
    converged: bool
    final_increment: float
    psi: Field
    m_alpha: float
    barrier: Field
    polish_sweeps: int
    polish_delta: float
    energy_identity_gap: float
    power_seminorms: tuple[float, ...] | None

    @property
    def seminorms(self) -> list[float]:
        return [rec.seminorm for rec in self.levels]

    def monotone_gap(self) -> float:
        """Largest nodewise violation of u_n <= u_{n+1} over stored levels."""
        worst = 0.0
        for prev, cur in zip(self.levels, self.levels[1:]):
            worst = max(worst, float((prev.u.values - cur.u.values).max()))
        return worst

    def barrier_gap(self) -> float:
        """Largest nodewise violation of m_alpha * psi <= u_n."""
        worst = 0.0
        for rec in self.levels:
            worst = max(worst, float((self.barrier.values - rec.u.values).max()))
        return worst


def _level_residual(u: Field, problem: RegularizedProblem, kernel: Kernel,
                    trials: int, seed: int) -> float:
    """Weak residual of the level equation against seeded test fields.

    Uses the exact identity pairing(u, v) = grad . v, so the cost per
    trial is linear in the node count.
    """
    grad = apply_operator(u, kernel)
    m = kernel.grid.measure
    source = m * problem.omega_n.values / (
        u.values + problem.shift
    ) ** problem.alpha
    p = kernel.params.p
    worst = 0.0
    for phi in trial_fields(kernel.grid, trials, seed):
        lhs = float(grad @ phi.values)
        rhs = float(source @ phi.values)
        scale = 1.0 + seminorm_p(phi, kernel) ** (1.0 / p)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def _existence_bound(omega: WeightField, alpha: float, kernel: Kernel,
                     embedding: EmbeddingConstant | None) -> float | None:
    """A-priori ceiling for [u_n]^p along the chain, when available.

    alpha = 1 gives the plain mass bound; alpha < 1 combines the weight
    norm at the threshold exponent with the embedding constant; alpha > 1
    has no such bound (handled by the compact-support diagnostic instead).
    """
    p = kernel.params.p
    if alpha == 1.0:
        return omega.norm_1
    if alpha > 1.0:
        return None
    r_min = r_alpha(alpha, kernel.params)
    weight_norm = norm_r(omega, r_min)
    s_value = embedding.value if embedding is not None else None
    if s_value is None:
        return None
    # [u]^(p-(1-a)) <= |w|_{r_a} S^((1-a)/p), stated for the seminorm itself.
    rhs = weight_norm * s_value ** ((1.0 - alpha) / p)
    return rhs ** (p / (p - (1.0 - alpha)))


def _validate_alpha(omega: WeightField, alpha: float, kernel: Kernel):
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if alpha > 1.0:
        dist = kernel.grid.boundary_distance()
        near = dist <= kernel.grid.h * (1.0 + 1e-9)
        if np.any(omega.values[near] != 0.0):
            raise FssError(
                "alpha > 1 requires a weight vanishing within one cell of "
                "the domain boundary; general weights may admit no solution"
            )


def default_schedule(max_levels: int, base: int = 2):
    return [base**k for k in range(max_levels)]


def _polish(u: Field, omega: WeightField, alpha: float, kernel: Kernel,
            opts: ChainOptions) -> tuple[Field, int, float]:
    """Averaged fixed-point sweeps on the unregularized datum.

    Starting from the converged chain limit (strictly positive), this
    removes the remaining O(1/n) regularization error.  Stops at the
    polish tolerance or when the sweep differences stop shrinking (double
    precision floor).
    """
    tight = replace(opts.solve, grad_tol=min(opts.solve.grad_tol, 1e-12),
                    max_iter=max(opts.solve.max_iter, 20000))
    w = u
    best = w
    best_delta = math.inf
    stale = 0
    sweeps = 0
    for sweeps in range(1, opts.max_polish_sweeps + 1):
        datum = omega.values / w.values**alpha
        try:
            image = solve_nonsingular(datum, kernel, tight, x0=w)
        except SolverError as err:
            if err.iterate is None:
                raise
            # Solve hit the floating-point floor; its iterate is still the
            # best available refinement.
            image = Field(err.iterate, kernel.grid)
        new = 0.5 * (w + image)
        delta = (new - w).max_norm()
        w = new
        if delta < best_delta:
            best, best_delta = w, delta
            stale = 0
        else:
            stale += 1
        if delta <= opts.polish_tol or stale >= 6:
            break
    return best, sweeps, best_delta


def run_chain(omega: WeightField, alpha: float, kernel: Kernel,
              schedule=None, opts: ChainOptions | None = None,
              embedding: EmbeddingConstant | None = None,
              init: Field | None = None) -> ChainResult:
    """Walk the approximation levels and extract the singular limit.

    ``schedule`` is an increasing sequence of levels (default: powers of
    two).  Levels are warm-started from their predecessor and the walk
    stops once consecutive level solutions differ by at most the chain
    tolerance in the max norm; exhausting the schedule yields a result
    flagged as non-converged.  For alpha <= 1 the a-priori energy ceiling
    is recorded per level; alpha > 1 requires a compactly supported
    weight and records the auxiliary power seminorms instead.
    """
    opts = opts or ChainOptions()
    _validate_alpha(omega, alpha, kernel)
    if schedule is None:
        schedule = default_schedule(opts.max_levels)
    schedule = [int(n) for n in schedule]
    if not schedule:
        raise ValueError("schedule must contain at least one level")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("schedule must be strictly increasing")

    params = kernel.params
    psi = solve_barrier(omega, kernel, opts.solve)
    if alpha < 1.0 and embedding is None:
        embedding = embedding_for_existence_bound(kernel, opts.solve)
    bound = _existence_bound(omega, alpha, kernel, embedding)

    levels: list[LevelRecord] = []
    power_seminorms: list[float] = []
    prev: Field | None = None
    m_alpha = math.nan
    barrier: Field | None = None
    converged = False
    final_increment = math.inf
    for n in schedule:
        problem = make_level(omega, n, alpha)
        start = prev if prev is not None else (init or Field.zero(kernel.grid))
        u_n, sweeps = solve_level(problem, kernel, start, opts)
        sn = seminorm_p(u_n, kernel)
        residual = _level_residual(u_n, problem, kernel,
                                   opts.residual_trials, opts.residual_seed)
        levels.append(LevelRecord(
            n=n,
            u=u_n,
            seminorm=sn,
            fp_sweeps=sweeps,
            residual=residual,
            min_value=float(u_n.values.min()),
            max_value=float(u_n.values.max()),
            apriori_bound=bound,
            apriori_ok=None if bound is None else bool(sn <= bound * (1.0 + 1e-8)),
        ))
        if alpha > 1.0:
            exponent = (alpha - 1.0 + params.p) / params.p
            power_seminorms.append(
                seminorm_p(Field(u_n.values**exponent, kernel.grid), kernel)
            )
        if barrier is None:
            m_alpha = (u_n.values.max() + 1.0) ** (-alpha / (params.p - 1.0))
            barrier = m_alpha * psi
        if prev is not None:
            final_increment = (u_n - prev).max_norm()
            if final_increment <= opts.chain_tol:
                converged = True
                prev = u_n
                break
        prev = u_n

    u_final = prev if prev is not None else levels[-1].u
    polish_sweeps = 0
    polish_delta = math.inf
    if opts.polish and converged:
        u_final, polish_sweeps, polish_delta = _polish(
            u_final, omega, alpha, kernel, opts
        )

    sn_final = seminorm_p(u_final, kernel)
    mass = float(kernel.grid.measure
                 * (omega.values * u_final.values ** (1.0 - alpha)).sum())
    gap = abs(sn_final - mass) / sn_final if sn_final > 0.0 else math.inf

    return ChainResult(
        alpha=float(alpha),
        omega=omega,
        kernel=kernel,
        levels=tuple(levels),
        u_alpha=u_final,
        converged=converged,
        final_increment=final_increment,
        psi=psi,
        m_alpha=float(m_alpha),
        barrier=barrier,
        polish_sweeps=polish_sweeps,
        polish_delta=polish_delta,
        energy_identity_gap=float(gap),
        power_seminorms=tuple(power_seminorms) if power_seminorms else None,
    )


@dataclass(frozen=True)
class ResidualReport:
    """Weak-form residual certificate for a candidate singular solution."""

    max_residual: float
    aux_min_slack: float  # slack of |int w v / u^a| <= [u]^(p-1) [v]
    trials: int


def weak_residual(u: Field, omega: WeightField, alpha: float, kernel: Kernel,
                  trials: int = 100, seed: int = 0) -> ResidualReport:
    """Certify the weak form of the singular equation against test fields.

    For each trial field v this measures
    |pairing(u, v) - sum m w v / u^alpha| / (1 + [v]), and also the slack
    of the duality estimate |sum m w v / u^alpha| <= [u]^(p-1) [v].
    Requires u strictly positive at every interior node.
    """
    if u.values.min() <= 0.0:
        raise FssError("not an interior-positive field")
    m = kernel.grid.measure
    p = kernel.params.p
    source = m * omega.values / u.values**alpha
    sn_u = seminorm_p(u, kernel)
    worst = 0.0
    aux_slack = math.inf
    for phi in trial_fields(kernel.grid, trials, seed):
        lhs = pairing(u, phi, kernel)
        rhs = float(source @ phi.values)
        sn_phi = seminorm_p(phi, kernel)
        worst = max(worst, abs(lhs - rhs) / (1.0 + sn_phi ** (1.0 / p)))
        bound = sn_u ** ((p - 1.0) / p) * sn_phi ** (1.0 / p)
        aux_slack = min(aux_slack, bound - abs(rhs))
    return ResidualReport(max_residual=worst, aux_min_slack=aux_slack,
                          trials=trials)


@dataclass(frozen=True)
class BoundReport:
    """Sup-norm ceiling from the level-set (Stampacchia) machinery."""

    c_alpha: float
    b: float
    bound: float
    sup_u: float
    passed: bool
    theta: float
    s_theta: float


def linfty_bound_report(u: Field, omega: WeightField, kernel: Kernel,
                        theta: float, s_theta: float,
                        alpha: float) -> BoundReport:
    """Evaluate the closed-form sup-norm bound and compare it to max(u).

    ``s_theta`` is the embedding constant in the convention
    ||v||_theta^p <= s_theta * [v]^p; the level-set argument needs its
    reciprocal, which is substituted internally.  Requires
    p * conj(r) < theta (<= p_star when finite); the induced exponent
    b = (theta/conj(r) - 1)/(p - 1) must exceed 1.
    """
    params = kernel.params
    p = params.p
    r = omega.r
    r_conj = math.inf if r == 1.0 else r / (r - 1.0)
    b = (theta / r_conj - 1.0) / (p - 1.0) if math.isfinite(r_conj) else -1.0
    if b <= 1.0:
        raise FssError(
            f"theta too small: need theta > p * r' (b = {b:.4g} <= 1)"
        )
    if math.isfinite(params.p_star) and theta > params.p_star + 1e-12:
        raise FssError(
            f"theta {theta} exceeds the critical exponent {params.p_star}"
        )
    pma = p - 1.0 + alpha
    c_alpha = (alpha / (p - 1.0)) ** ((p - 1.0) / pma) * (1.0 + (p - 1.0) / alpha)
    weight_norm = norm_r(omega, r)
    volume = kernel.grid.domain_measure
    bound = (
        c_alpha
        * (weight_norm * s_theta) ** (1.0 / pma)
        * 2.0 ** (b * (p - 1.0) / ((b - 1.0) * pma))
        * volume ** ((b - 1.0) * (p - 1.0) / (theta * pma))
    )
    sup_u = float(np.abs(u.values).max())
    return BoundReport(
        c_alpha=float(c_alpha),
        b=float(b),
        bound=float(bound),
        sup_u=sup_u,
        passed=bool(sup_u <= bound),
        theta=float(theta),
        s_theta=float(s_theta),
    )
