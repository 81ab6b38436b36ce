"""Evolution operators on R^n and the composition-law checker.

An evolution operator maps a time pair ``t >= t0 >= 0`` and a state ``x`` to
``E(t, t0) x`` and must satisfy ``E(t, s) E(s, t0) = E(t, t0)``. Nothing here
assumes linearity; the catalog kinds just happen to be linear.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy import integrate, linalg

from .errors import DimensionError, EvaluationError, SemigroupLawError
from .grid import SampleGrid, TimePair
from .norms import NormKind
from .report import EQUALITY, Accumulator, ComplianceReport, equality_outcome, sweep

SIMPSON_STEP = 1e-3


def as_state(x, dimension: int | None = None, batch: bool = False) -> np.ndarray:
    """Float copy-free view of a state vector; with ``batch`` an ``(n, k)``
    array of ``k`` column states is accepted as well."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 and not (batch and v.ndim == 2):
        raise DimensionError(f"state must be a vector, got shape {v.shape}")
    if dimension is not None and v.shape[0] != dimension:
        raise DimensionError(f"state has length {v.shape[0]}, operator expects {dimension}")
    if not all_finite(v):
        raise EvaluationError("state vector has non-finite coordinates")
    return v


def columnwise(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    """Apply a single-vector callable to a vector or to each column of a batch."""
    if x.ndim == 1:
        return np.asarray(fn(x), dtype=float)
    cols = [np.asarray(fn(x[:, j]), dtype=float) for j in range(x.shape[1])]
    return np.stack(cols, axis=1) if cols else np.empty_like(x)


def all_finite(v: np.ndarray) -> bool:
    # one reduction on the fast path; a finite sum can only come from finite entries
    with np.errstate(invalid="ignore", over="ignore"):
        total = float(np.add.reduce(v, axis=None))
    if math.isfinite(total):
        return True
    return bool(np.isfinite(v).all())


def _check_finite(y: np.ndarray, what: str) -> np.ndarray:
    if not all_finite(y):
        raise EvaluationError(f"{what} produced a non-finite value")
    return y


class EvolutionOperator(ABC):
    """Base class. ``dimension`` is None for operators that act coordinatewise
    on any length (the scalar quotient kind)."""

    dimension: int | None = None
    linear: bool = True
    exact: bool = True
    name: str = "operator"
    # whether _apply handles an (n, k) batch of column states directly
    batched: bool = True

    def evaluate(self, t: float, t0: float, x) -> np.ndarray:
        """``E(t, t0) x``; ``x`` may also be an ``(n, k)`` batch of columns."""
        TimePair(t, t0).validate()
        v = as_state(x, self.dimension, batch=True)
        t, t0 = float(t), float(t0)
        if v.ndim == 2 and not self.batched:
            y = columnwise(lambda col: self._apply(t, t0, col), v)
        else:
            y = np.asarray(self._apply(t, t0, v), dtype=float)
        if y.shape != v.shape:
            raise DimensionError(f"{self.name} returned shape {y.shape} for input {v.shape}")
        return _check_finite(y, self.name)

    __call__ = evaluate

    @abstractmethod
    def _apply(self, t: float, t0: float, x: np.ndarray) -> np.ndarray: ...

    def at_equal_times(self, tau: float, x: np.ndarray) -> np.ndarray:
        """What ``E(tau, tau) x`` must equal: ``x`` for a full evolution operator."""
        return x

    def spec(self) -> dict | None:
        """Scenario-file form of this operator, if it has one."""
        return None

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"


def evaluate(op: EvolutionOperator, pair: TimePair | tuple[float, float], x) -> np.ndarray:
    t, t0 = pair
    return op.evaluate(t, t0, x)


# -- scalar functions --------------------------------------------------------


@dataclass(frozen=True)
class ScalarFunction:
    """A nowhere-zero scalar function ``f``. ``log_abs`` (when known) lets the
    quotient ``f(t)/f(t0)`` be formed as ``exp(log|f(t)| - log|f(t0)|)`` without
    overflow in the intermediate values. ``positive`` skips the sign probe,
    which would evaluate ``f`` itself."""

    name: str
    f: Callable[[float], float]
    log_abs: Callable[[float], float] | None = None
    params: dict[str, float] = field(default_factory=dict)
    positive: bool = False

    def __call__(self, t: float) -> float:
        return self.f(t)


def scalar_one() -> ScalarFunction:
    return ScalarFunction("one", lambda t: 1.0, lambda t: 0.0, positive=True)


def scalar_exp(rate: float) -> ScalarFunction:
    rate = float(rate)
    return ScalarFunction(
        "exp", lambda t: math.exp(rate * t), lambda t: rate * t, {"rate": rate}, positive=True
    )


def scalar_exp_square(coefficient: float = 1.0) -> ScalarFunction:
    c = float(coefficient)
    return ScalarFunction(
        "exp_square",
        lambda t: math.exp(c * t * t),
        lambda t: c * t * t,
        {"coefficient": c},
        positive=True,
    )


class ScalarQuotient(EvolutionOperator):
    def __init__(self, f: ScalarFunction | Callable[[float], float], dimension: int | None = None):
        if not isinstance(f, ScalarFunction):
            f = ScalarFunction(getattr(f, "__name__", "user"), f)
        self.f = f
        self.dimension = dimension
        self.name = f"quotient[{f.name}]"

    def factor(self, t: float, t0: float) -> float:
        if self.f.log_abs is not None:
            sign = 1.0
            if not self.f.positive:
                sign = math.copysign(1.0, self.f(t)) * math.copysign(1.0, self.f(t0))
            e = self.f.log_abs(t) - self.f.log_abs(t0)
            if e > 709.0:
                raise EvaluationError(f"f(t)/f(t0) overflows at t={t}, t0={t0}")
            return sign * math.exp(e)
        den = self.f(t0)
        if den == 0:
            raise EvaluationError(f"f vanishes at t0={t0}")
        return self.f(t) / den

    def _apply(self, t, t0, x):
        return self.factor(t, t0) * x

    def spec(self):
        if self.f.name in _SCALAR_CATALOG:
            return {"kind": "ScalarQuotient", "f": {"name": self.f.name, **self.f.params}}
        return None


def make_scalar_quotient(
    f: ScalarFunction | Callable[[float], float],
    times: Sequence[float] | None = None,
    dimension: int | None = None,
) -> ScalarQuotient:
    """``E(t, t0) x = f(t) / f(t0) * x``; refuses ``f`` with a zero among ``times``."""
    op = ScalarQuotient(f, dimension)
    for t in () if op.f.positive else times or ():
        if op.f(t) == 0:
            raise EvaluationError(f"f vanishes at sampled time t={t}")
    return op


_SCALAR_CATALOG: dict[str, Callable[..., ScalarFunction]] = {
    "one": scalar_one,
    "exp": scalar_exp,
    "exp_square": scalar_exp_square,
}


# -- semigroups ---------------------------------------------------------------


@dataclass(frozen=True)
class Semigroup:
    name: str
    apply: Callable[[float, np.ndarray], np.ndarray]
    params: dict[str, Any] = field(default_factory=dict)
    dimension: int | None = None
    linear: bool = True

    def __call__(self, tau: float, x: np.ndarray) -> np.ndarray:
        return self.apply(tau, x)


def scalar_exp_semigroup(rate: float) -> Semigroup:
    rate = float(rate)
    return Semigroup("scalar_exp", lambda tau, x: math.exp(rate * tau) * x, {"rate": rate})


def identity_semigroup() -> Semigroup:
    return Semigroup("identity", lambda tau, x: np.array(x, dtype=float))


def matrix_exp_semigroup(generator) -> Semigroup:
    """``S(tau) = expm(tau * A)`` for a constant generator ``A``."""
    a = np.array(generator, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"generator must be square, got shape {a.shape}")
    return Semigroup(
        "matrix_exp",
        lambda tau, x: linalg.expm(tau * a) @ x,
        {"generator": a.tolist()},
        dimension=a.shape[0],
    )


class SemigroupInduced(EvolutionOperator):
    def __init__(self, semigroup: Semigroup | Callable[[float, np.ndarray], np.ndarray], dimension: int | None = None, linear: bool = True):
        if not isinstance(semigroup, Semigroup):
            semigroup = Semigroup("user", semigroup, dimension=dimension, linear=linear)
        self.semigroup = semigroup
        self.dimension = semigroup.dimension if dimension is None else dimension
        self.linear = semigroup.linear
        self.exact = semigroup.name in _SEMIGROUP_CATALOG
        self.batched = self.exact
        self.name = f"semigroup[{semigroup.name}]"

    def _apply(self, t, t0, x):
        return self.semigroup(t - t0, x)

    def spec(self):
        if self.semigroup.name in _SEMIGROUP_CATALOG:
            return {"kind": "SemigroupInduced", "S": {"name": self.semigroup.name, **self.semigroup.params}}
        return None


_SEMIGROUP_CATALOG = {
    "scalar_exp": scalar_exp_semigroup,
    "identity": identity_semigroup,
    "matrix_exp": matrix_exp_semigroup,
}


def make_semigroup_induced(
    semigroup: Semigroup | Callable[[float, np.ndarray], np.ndarray],
    grid: SampleGrid | None = None,
    tol: float = 1e-9,
    dimension: int | None = None,
    norm: NormKind = NormKind.L2,
) -> SemigroupInduced:
    """Build ``E(t, s) = S(t - s)`` after checking ``S(0) = I`` and
    ``S(a + b) = S(a) S(b)`` on the grid offsets and vectors."""
    op = SemigroupInduced(semigroup, dimension=dimension)
    grid = grid or SampleGrid()
    n = op.dimension or 1
    taus = sorted(set(grid.s_offsets) | set(grid.t_offsets))
    for vid, x in grid.vectors(n):
        y = np.asarray(op.semigroup(0.0, x), dtype=float)
        r = norm(y - x) / (1 + norm(x))
        if r > tol:
            raise SemigroupLawError("S(0) is not the identity", {"vector": vid, "residual": r})
        for a in taus:
            for b in taus:
                lhs = np.asarray(op.semigroup(a + b, x), dtype=float)
                rhs = np.asarray(op.semigroup(a, op.semigroup(b, x)), dtype=float)
                r = norm(lhs - rhs) / (1 + norm(lhs))
                if not r <= tol:
                    raise SemigroupLawError(
                        "semigroup law S(a+b) = S(a)S(b) violated",
                        {"a": a, "b": b, "vector": vid, "residual": r},
                    )
    return op


# -- diagonal operators ---------------------------------------------------------


@dataclass(frozen=True)
class PhiFunction:
    """Positive nonincreasing rate function with limit ``limit`` at infinity.

    ``antiderivative`` is any primitive of ``phi``; without it the integral is
    taken by composite Simpson with step ``SIMPSON_STEP``.
    """

    name: str
    phi: Callable[[float], float]
    antiderivative: Callable[[float], float] | None
    limit: float
    params: dict[str, float] = field(default_factory=dict)

    def __call__(self, t: float) -> float:
        return self.phi(t)

    def integral(self, t0: float, t: float) -> float:
        if self.antiderivative is not None:
            return self.antiderivative(t) - self.antiderivative(t0)
        if t == t0:
            return 0.0
        m = max(2, math.ceil((t - t0) / SIMPSON_STEP))
        m += m % 2
        xs = np.linspace(t0, t, m + 1)
        ys = np.array([self.phi(float(v)) for v in xs])
        return float(integrate.simpson(ys, x=xs))

    def validate(self, times: Sequence[float], fd_step: float = 1e-5, rtol: float = 1e-6) -> list[str]:
        """Problems found at ``times``; empty when ``phi`` behaves."""
        problems = []
        ts = sorted(set(float(t) for t in times))
        if not self.limit > 0:
            problems.append(f"limit must be positive, got {self.limit}")
        vals = [self.phi(t) for t in ts]
        for t, v in zip(ts, vals):
            if v < self.limit * (1 - 1e-12):
                problems.append(f"phi({t}) = {v} is below the limit {self.limit}")
        for (ta, va), (tb, vb) in zip(zip(ts, vals), zip(ts[1:], vals[1:])):
            if vb > va * (1 + 1e-12):
                problems.append(f"phi increases between t={ta} and t={tb}")
        if self.antiderivative is not None:
            for t, v in zip(ts, vals):
                fd = (self.antiderivative(t + fd_step) - self.antiderivative(t - fd_step)) / (2 * fd_step)
                if abs(fd - v) > rtol * max(1.0, abs(v)):
                    problems.append(f"antiderivative slope {fd} != phi({t}) = {v}")
        return problems


def phi_shifted_exp(limit: float = 1.0, amplitude: float = 1.0, decay: float = 1.0) -> PhiFunction:
    """``phi(t) = limit + amplitude * exp(-decay * t)``."""
    l, a, k = float(limit), float(amplitude), float(decay)
    return PhiFunction(
        "shifted_exp",
        lambda t: l + a * math.exp(-k * t),
        lambda t: l * t - (a / k) * math.exp(-k * t),
        l,
        {"limit": l, "amplitude": a, "decay": k},
    )


def phi_constant(value: float) -> PhiFunction:
    c = float(value)
    return PhiFunction("constant", lambda t: c, lambda t: c * t, c, {"value": c})


_PHI_CATALOG = {"shifted_exp": phi_shifted_exp, "constant": phi_constant}


@dataclass(frozen=True)
class IntegralOfPhi:
    """Coordinate factor ``exp(sign * integral_{t0}^{t} phi)``."""

    sign: int
    phi: PhiFunction

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def exponent(self, t: float, t0: float) -> float:
        return self.sign * self.phi.integral(t0, t)

    def spec(self) -> dict:
        return {
            "rule": "IntegralOfPhi",
            "sign": "+" if self.sign > 0 else "-",
            "phi": {"name": self.phi.name, **self.phi.params},
        }


@dataclass(frozen=True)
class LinearRate:
    """Coordinate factor ``exp(rate * (t - t0))``."""

    rate: float

    def exponent(self, t: float, t0: float) -> float:
        return self.rate * (t - t0)

    def spec(self) -> dict:
        return {"rule": "LinearRate", "rate": self.rate}


DiagonalExponentRule = IntegralOfPhi | LinearRate


class DiagonalIntegrand(EvolutionOperator):
    def __init__(self, rules: Sequence[DiagonalExponentRule]):
        if not rules:
            raise ValueError("at least one coordinate rule is required")
        self.rules = tuple(rules)
        self.dimension = len(self.rules)
        self.exact = all(
            not isinstance(r, IntegralOfPhi) or r.phi.antiderivative is not None for r in self.rules
        )
        self.name = "diagonal"

    def exponents(self, t: float, t0: float) -> np.ndarray:
        return np.array([r.exponent(t, t0) for r in self.rules])

    def _apply(self, t, t0, x):
        g = np.exp(self.exponents(t, t0))
        return g * x if x.ndim == 1 else g[:, None] * x

    def spec(self):
        if all(not isinstance(r, IntegralOfPhi) or r.phi.name in _PHI_CATALOG for r in self.rules):
            return {"kind": "DiagonalIntegrand", "rules": [r.spec() for r in self.rules]}
        return None


def make_diagonal_integrand(
    rules: Sequence[DiagonalExponentRule], validate_on: Sequence[float] | None = None
) -> DiagonalIntegrand:
    if validate_on is not None:
        for i, r in enumerate(rules):
            if isinstance(r, IntegralOfPhi):
                problems = r.phi.validate(validate_on)
                if problems:
                    raise ValueError(f"coordinate {i + 1}: " + "; ".join(problems))
    return DiagonalIntegrand(rules)


def diagonal_example_operator(phi: PhiFunction | None = None) -> DiagonalIntegrand:
    """Three-coordinate operator: decay by ``int phi``, growth by ``int phi``,
    and a center coordinate decaying at the constant rate ``phi(0)``."""
    phi = phi or phi_shifted_exp(1.0, 1.0, 1.0)
    return DiagonalIntegrand(
        [IntegralOfPhi(-1, phi), IntegralOfPhi(+1, phi), LinearRate(-phi(0.0))]
    )


# -- user and derived operators -------------------------------------------------


class UserSupplied(EvolutionOperator):
    exact = False
    batched = False

    def __init__(self, fn: Callable[[float, float, np.ndarray], np.ndarray], dimension: int | None = None, linear: bool = False, name: str = "user"):
        self.fn = fn
        self.dimension = dimension
        self.linear = linear
        self.name = name

    def _apply(self, t, t0, x):
        return self.fn(t, t0, x)


class Restricted(EvolutionOperator):
    """``(t, t0, x) -> E(t, t0) P(t0) x``; built by :func:`projections.restrict`."""

    def __init__(self, op: EvolutionOperator, family):
        self.op = op
        self.family = family
        self.dimension = op.dimension
        self.linear = op.linear and family.linear
        self.exact = op.exact
        self.name = f"{op.name}*{family.name}"

    def _apply(self, t, t0, x):
        return self.op.evaluate(t, t0, self.family.apply(t0, x))

    def at_equal_times(self, tau, x):
        return self.family.apply(tau, x)


def operator_dimension(op: EvolutionOperator, dimension: int | None) -> int:
    if dimension is not None:
        if op.dimension is not None and op.dimension != dimension:
            raise DimensionError(f"operator has dimension {op.dimension}, scenario declares {dimension}")
        return dimension
    return op.dimension or 1


def default_tol(op: EvolutionOperator) -> float:
    return 1e-9 if op.exact else 1e-6


def check_evolution_property(
    op: EvolutionOperator,
    grid: SampleGrid | None = None,
    tol: float | None = None,
    norm: NormKind = NormKind.L2,
    dimension: int | None = None,
    workers: int = 1,
) -> ComplianceReport:
    """Composition residual ``|E(t,s)E(s,t0)x - E(t,t0)x| / (1 + |E(t,t0)x|)``
    on every sampled triple and vector, plus the identity case ``E(tau,tau)x = x``
    (``P(tau)x`` for a restricted operator)."""
    grid = grid or SampleGrid()
    tol = default_tol(op) if tol is None else tol
    n = operator_dimension(op, dimension)
    ids, x = grid.vector_batch(n)
    triples = grid.triples()

    def locate(fn, witness):
        try:
            return fn(x)
        except EvaluationError:
            for j, vid in enumerate(ids):
                try:
                    fn(x[:, j])
                except EvaluationError as exc:
                    raise EvaluationError(str(exc), {**witness, "vector": vid}) from exc
            raise

    def one(tr):
        direct, composed = locate(
            lambda xs: (op.evaluate(tr.t, tr.t0, xs), op.evaluate(tr.t, tr.s, op.evaluate(tr.s, tr.t0, xs))),
            {"t": tr.t, "s": tr.s, "t0": tr.t0},
        )
        nd = norm.columns(direct)
        return norm.columns(composed), nd, norm.columns(composed - direct) / (1.0 + nd)

    comp = Accumulator("evolution", EQUALITY)
    for tr, (lhs, rhs, r) in zip(triples, sweep(one, triples, workers)):
        for j, vid in enumerate(ids):
            margin, ok = equality_outcome(float(r[j]), tol)
            comp.add(margin, ok, {"t": tr.t, "s": tr.s, "t0": tr.t0, "vector": vid}, lhs[j], rhs[j], r[j])

    ident = Accumulator("identity", EQUALITY)
    for tau in grid.times():
        y = locate(lambda xs: op.evaluate(tau, tau, xs), {"t": tau, "t0": tau})
        ref = op.at_equal_times(tau, x)
        nref = norm.columns(ref)
        r = norm.columns(y - ref) / (1.0 + nref)
        ny = norm.columns(y)
        for j, vid in enumerate(ids):
            margin, ok = equality_outcome(float(r[j]), tol)
            ident.add(margin, ok, {"t": tau, "t0": tau, "vector": vid}, ny[j], nref[j], r[j])

    return ComplianceReport(
        kind="evolution",
        entries=[comp.result(), ident.result()],
        norm=norm.value,
        tol=tol,
        grid=grid.to_dict(),
        notes={"operator": op.name, "exact": op.exact},
    )
