"""Nonlocal energy, duality pairing, and weighted integral functionals.

All integrals use the midpoint rule with the uniform cell measure
``m = h**N``.  A field ``u`` lives on the interior nodes and is zero on
the collar, so the double sum defining the energy splits into

    [u]^p = sum_{i != j} w_ij |u_i - u_j|^p  +  2 * sum_i B_i |u_i|^p

where the first sum runs over ordered interior pairs and ``B_i`` collects
all coupling of node i to the zero exterior (collar pairs plus analytic
tail).  The duality pairing and the operator application are the exact
differential of (1/p)[u]^p, so discrete duality holds to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .exceptions import FieldMismatchError
from .grid import Grid, Kernel

NEG_INF = float("-inf")


def phi_p(t: np.ndarray, p: float) -> np.ndarray:
    """Odd power |t|^(p-2) t, extended by 0 at t = 0.

    For p < 2 the raw expression is singular at 0; the continuous
    extension sign(t)|t|^(p-1) is used instead (p > 1 keeps the exponent
    positive, so no division occurs).
    """
    return np.sign(t) * np.abs(t) ** (p - 1.0)


@dataclass(frozen=True)
class Field:
    """One value per interior node; implicitly zero on the collar."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (self.grid.interior_count,):
            raise FieldMismatchError(
                f"field has {values.shape} values for "
                f"{self.grid.interior_count} interior nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")

    @classmethod
    def zero(cls, grid: Grid) -> "Field":
        return cls(np.zeros(grid.interior_count), grid)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "Field":
        return cls(np.full(grid.interior_count, float(c)), grid)

    def with_values(self, values: np.ndarray) -> "Field":
        return Field(values, self.grid)

    def max_norm(self) -> float:
        return float(np.abs(self.values).max())

    def __add__(self, other: "Field") -> "Field":
        _check_same_grid(self.grid, other.grid)
        return Field(self.values + other.values, self.grid)

    def __sub__(self, other: "Field") -> "Field":
        _check_same_grid(self.grid, other.grid)
        return Field(self.values - other.values, self.grid)

    def __mul__(self, scalar: float) -> "Field":
        return Field(self.values * float(scalar), self.grid)

    __rmul__ = __mul__


@dataclass(frozen=True)
class WeightField:
    """Nonnegative weight on interior nodes with cached L^1 and L^r norms."""

    values: np.ndarray
    grid: Grid
    r: float = 1.0
    norm_1: float = dc_field(init=False, default=0.0)
    norm_r_value: float = dc_field(init=False, default=0.0)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != (self.grid.interior_count,):
            raise FieldMismatchError(
                f"weight has {values.shape} values for "
                f"{self.grid.interior_count} interior nodes"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("weight values must be finite")
        if np.any(values < 0.0):
            raise ValueError("weight values must be nonnegative")
        if self.r < 1.0:
            raise ValueError(f"integrability exponent r must be >= 1, got {self.r}")
        m = self.grid.measure
        n1 = float(m * values.sum())
        if n1 <= 0.0:
            raise ValueError("weight must not vanish identically")
        object.__setattr__(self, "norm_1", n1)
        object.__setattr__(self, "norm_r_value", _lr_norm(values, m, self.r))


def _lr_norm(values: np.ndarray, measure: float, r: float) -> float:
    if math.isinf(r):
        return float(np.abs(values).max())
    return float((measure * (np.abs(values) ** r).sum()) ** (1.0 / r))


def _check_same_grid(a: Grid, b: Grid):
    if a is not b and (
        a.n_dim != b.n_dim
        or a.box != b.box
        or a.h != b.h
        or a.interior_count != b.interior_count
    ):
        raise FieldMismatchError("fields live on different grids")


def _field_on_kernel(u: Field, kernel: Kernel):
    _check_same_grid(u.grid, kernel.grid)
    return u.values


def seminorm_p(u: Field, kernel: Kernel) -> float:
    """p-th power of the nonlocal energy seminorm, [u]^p.

    Nonnegative, and zero only for the zero field (every node couples to
    the zero collar with positive weight).
    """
    uv = _field_on_kernel(u, kernel)
    p = kernel.params.p
    diff = uv[:, None] - uv[None, :]
    pair_sum = float((kernel.w_interior * np.abs(diff) ** p).sum())
    boundary = 2.0 * float(kernel.boundary_weight @ np.abs(uv) ** p)
    return pair_sum + boundary


def pairing(u: Field, v: Field, kernel: Kernel) -> float:
    """Duality pairing of the nonlocal p-operator at u against v."""
    uv = _field_on_kernel(u, kernel)
    vv = _field_on_kernel(v, kernel)
    p = kernel.params.p
    du = uv[:, None] - uv[None, :]
    dv = vv[:, None] - vv[None, :]
    pair_sum = float((kernel.w_interior * phi_p(du, p) * dv).sum())
    boundary = 2.0 * float(kernel.boundary_weight @ (phi_p(uv, p) * vv))
    return pair_sum + boundary


def apply_operator(u: Field, kernel: Kernel) -> np.ndarray:
    """Nodal gradient of the energy (1/p)[u]^p.

    The returned dual vector g satisfies sum_i g_i v_i = pairing(u, v)
    for every field v.
    """
    uv = _field_on_kernel(u, kernel)
    p = kernel.params.p
    du = uv[:, None] - uv[None, :]
    g = 2.0 * (kernel.w_interior * phi_p(du, p)).sum(axis=1)
    g += 2.0 * kernel.boundary_weight * phi_p(uv, p)
    return g


def energy_and_gradient(values: np.ndarray, kernel: Kernel,
                        rhs: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """Value and gradient of (1/p)[u]^p - rhs . u in one pairwise pass.

    ``rhs`` is a dual vector (already carrying cell measures); ``None``
    means the plain energy.  Internal fast path for the solvers, operating
    on bare arrays.
    """
    p = kernel.params.p
    diff = values[:, None] - values[None, :]
    absd = np.abs(diff)
    core = kernel.w_interior * absd ** (p - 1.0)
    energy = float((core * absd).sum()) / p
    grad = 2.0 * (core * np.sign(diff)).sum(axis=1)
    absu = np.abs(values)
    energy += 2.0 / p * float(kernel.boundary_weight @ absu**p)
    grad += 2.0 * kernel.boundary_weight * phi_p(values, p)
    if rhs is not None:
        energy -= float(rhs @ values)
        grad = grad - rhs
    return energy, grad


def weighted_qmean(v: Field, omega: WeightField, q: float) -> float:
    """Weighted power mean ((1/|w|_1) sum m w |v|^q)^(1/q).

    Nondecreasing in q; tends to the geometric mean exp(<log|v|>_w) as
    q -> 0+.
    """
    if q <= 0.0:
        raise ValueError(f"exponent q must be positive, got {q}")
    _check_same_grid(v.grid, omega.grid)
    m = v.grid.measure
    total = float(m * (omega.values * np.abs(v.values) ** q).sum())
    return (total / omega.norm_1) ** (1.0 / q)


def log_functional(v: Field, omega: WeightField) -> float:
    """Weighted log integral sum_i m w_i log|v_i|.

    Returns -inf (a sentinel, not an error) when v vanishes at a node
    carrying positive weight.
    """
    _check_same_grid(v.grid, omega.grid)
    av = np.abs(v.values)
    active = omega.values > 0.0
    if np.any(av[active] == 0.0):
        return NEG_INF
    m = v.grid.measure
    return float(m * (omega.values[active] * np.log(av[active])).sum())


def norm_r(x: Field | WeightField, r: float) -> float:
    """Discrete L^r norm with cell measures; r = inf gives the max norm."""
    if r < 1.0:
        raise ValueError(f"norm exponent must be >= 1, got {r}")
    return _lr_norm(x.values, x.grid.measure, r)


def poincare_constant(kernel: Kernel) -> float:
    """Grid constant C_h with ||u||_p^p <= C_h [u]^p for every field.

    Evaluated on the canonical basis fields: the energy of e_i contains
    the exterior-coupling term 2 B_i, and dropping the nonnegative pair
    terms gives [u]^p >= 2 min_i B_i * sum |u_i|^p for arbitrary u.  The
    resulting constant max_i ||e_i||_p^p / (2 B_i) is therefore valid for
    the whole discrete space, not just the basis.
    """
    m = kernel.grid.measure
    return float(m / (2.0 * kernel.boundary_weight.min()))
