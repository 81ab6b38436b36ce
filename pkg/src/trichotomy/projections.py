"""Projection families and the compatibility checkers for families of
three, two and four projections.

Sums, differences and products of families are evaluated pointwise on
vectors, so nonlinear user families compose the same way as matrices.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import CommutationError, DimensionError, EvaluationError
from .grid import SampleGrid
from .norms import NormKind
from .operators import (
    EvolutionOperator,
    Restricted,
    all_finite,
    as_state,
    columnwise,
    default_tol,
    operator_dimension,
)
from .report import EQUALITY, Accumulator, ComplianceReport, equality_outcome, sweep


class ProjectionFamily(ABC):
    name: str = "P"
    linear: bool = True
    constant: bool = True
    batched: bool = True

    def apply(self, t: float, x) -> np.ndarray:
        """``P(t) x``; ``x`` may also be an ``(n, k)`` batch of columns."""
        if t < 0:
            raise ValueError(f"projection time must be >= 0, got {t}")
        v = as_state(x, batch=True)
        t = float(t)
        if v.ndim == 2 and not self.batched:
            y = columnwise(lambda col: self._apply(t, col), v)
        else:
            y = np.asarray(self._apply(t, v), dtype=float)
        if y.shape != v.shape:
            raise DimensionError(f"{self.name} returned shape {y.shape} for input {v.shape}")
        if not all_finite(y):
            raise EvaluationError(f"{self.name} produced a non-finite value")
        return y

    __call__ = apply

    @abstractmethod
    def _apply(self, t: float, x: np.ndarray) -> np.ndarray: ...

    def matrix(self, n: int) -> np.ndarray | None:
        """Constant matrix of this family in R^n, or None if it has none."""
        return None

    def spec(self) -> dict | None:
        return None

    def __add__(self, other: "ProjectionFamily") -> "Combination":
        return Combination(0.0, ((1.0, self), (1.0, other)))

    def __sub__(self, other: "ProjectionFamily") -> "Combination":
        return Combination(0.0, ((1.0, self), (-1.0, other)))

    def __rsub__(self, other):
        if isinstance(other, Identity):
            return complement(self)
        return NotImplemented

    def __matmul__(self, other: "ProjectionFamily") -> "Composition":
        return Composition((self, other))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"


class Zero(ProjectionFamily):
    name = "0"

    def _apply(self, t, x):
        return np.zeros_like(x)

    def matrix(self, n):
        return np.zeros((n, n))

    def spec(self):
        return {"kind": "Zero"}


class Identity(ProjectionFamily):
    name = "I"

    def _apply(self, t, x):
        return x.copy()

    def matrix(self, n):
        return np.eye(n)

    def spec(self):
        return {"kind": "Identity"}


class ConstantCoordinate(ProjectionFamily):
    """Keeps the coordinates in ``indices`` (1-based) and zeroes the rest."""

    def __init__(self, indices: Sequence[int]):
        idx = sorted(set(int(i) for i in indices))
        if any(i < 1 for i in idx):
            raise ValueError("coordinate indices are 1-based")
        self.indices = tuple(idx)
        self.name = "coord{" + ",".join(map(str, idx)) + "}"

    def _apply(self, t, x):
        if self.indices and self.indices[-1] > x.shape[0]:
            raise DimensionError(f"{self.name} needs dimension >= {self.indices[-1]}")
        y = np.zeros_like(x)
        sel = [i - 1 for i in self.indices]
        y[sel] = x[sel]
        return y

    def matrix(self, n):
        m = np.zeros((n, n))
        for i in self.indices:
            if i > n:
                raise DimensionError(f"{self.name} needs dimension >= {i}")
            m[i - 1, i - 1] = 1.0
        return m

    def spec(self):
        return {"kind": "ConstantCoordinate", "indices": list(self.indices)}


class ConstantMatrix(ProjectionFamily):
    def __init__(self, matrix):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"projection matrix must be square, got shape {m.shape}")
        m.setflags(write=False)
        self.m = m
        self.name = "matrix" + str(m.tolist())

    def _apply(self, t, x):
        if x.shape[0] != self.m.shape[0]:
            raise DimensionError(f"matrix is {self.m.shape[0]}x{self.m.shape[0]}, vector has length {x.shape[0]}")
        return self.m @ x

    def matrix(self, n):
        if n != self.m.shape[0]:
            raise DimensionError(f"matrix is {self.m.shape[0]}x{self.m.shape[0]}, dimension is {n}")
        return self.m.copy()

    def spec(self):
        return {"kind": "ConstantMatrix", "matrix": self.m.tolist()}


class UserProjection(ProjectionFamily):
    """Arbitrary ``(t, x) -> P(t) x``; idempotency is checked, never assumed."""

    batched = False

    def __init__(self, fn: Callable[[float, np.ndarray], np.ndarray], name: str = "user", linear: bool = False, constant: bool = False):
        self.fn = fn
        self.name = name
        self.linear = linear
        self.constant = constant

    def _apply(self, t, x):
        return self.fn(t, x)


class Combination(ProjectionFamily):
    """``identity_coef * I + sum(c * P)`` evaluated pointwise."""

    def __init__(self, identity_coef: float, terms: Sequence[tuple[float, ProjectionFamily]]):
        self.identity_coef = float(identity_coef)
        self.terms = tuple((float(c), p) for c, p in terms)
        self.linear = all(p.linear for _, p in self.terms)
        self.constant = all(p.constant for _, p in self.terms)
        parts = [] if self.identity_coef == 0 else [_coef(self.identity_coef, "I", first=True)]
        for c, p in self.terms:
            parts.append(_coef(c, p.name, first=not parts))
        self.name = "(" + "".join(parts) + ")"

    def _apply(self, t, x):
        y = self.identity_coef * x
        for c, p in self.terms:
            y = y + c * p.apply(t, x)
        return y

    def matrix(self, n):
        acc = self.identity_coef * np.eye(n)
        for c, p in self.terms:
            m = p.matrix(n)
            if m is None:
                return None
            acc = acc + c * m
        return acc


def _coef(c: float, name: str, first: bool) -> str:
    sign = "-" if c < 0 else ("" if first else "+")
    mag = abs(c)
    return f"{sign}{name}" if mag == 1 else f"{sign}{mag:g}{name}"


class Composition(ProjectionFamily):
    """``factors[0] factors[1] ... factors[-1]``: the last factor acts first."""

    def __init__(self, factors: Sequence[ProjectionFamily]):
        self.factors = tuple(factors)
        self.linear = all(p.linear for p in self.factors)
        self.constant = all(p.constant for p in self.factors)
        self.name = "".join(p.name for p in self.factors)

    def _apply(self, t, x):
        y = x
        for p in reversed(self.factors):
            y = p.apply(t, y)
        return y

    def matrix(self, n):
        acc = np.eye(n)
        for p in self.factors:
            m = p.matrix(n)
            if m is None:
                return None
            acc = acc @ m
        return acc


def complement(p: ProjectionFamily) -> Combination:
    """``I - P``."""
    return Combination(1.0, ((-1.0, p),))


def materialize(p: ProjectionFamily, n: int) -> ProjectionFamily:
    """Replace a constant linear family by its simplest catalog equivalent
    (Zero, Identity, ConstantCoordinate, ConstantMatrix); others pass through."""
    if not (p.linear and p.constant):
        return p
    m = p.matrix(n)
    if m is None:
        return p
    if np.array_equal(m, np.zeros((n, n))):
        return Zero()
    if np.array_equal(m, np.eye(n)):
        return Identity()
    diag = np.diag(m)
    if np.array_equal(m, np.diag(diag)) and np.all((diag == 0) | (diag == 1)):
        return ConstantCoordinate([i + 1 for i in np.flatnonzero(diag)])
    return ConstantMatrix(m)


# -- family tuples ----------------------------------------------------------


@dataclass
class FamilyTriple:
    """Center ``P0``, stable ``P1`` and unstable ``P2`` families."""

    P0: ProjectionFamily
    P1: ProjectionFamily
    P2: ProjectionFamily
    provenance: Any = field(default=None, compare=False)
    arity = "triple"

    def members(self) -> list[tuple[str, ProjectionFamily]]:
        return [("P0", self.P0), ("P1", self.P1), ("P2", self.P2)]


@dataclass
class FamilyPair:
    Q1: ProjectionFamily
    Q2: ProjectionFamily
    provenance: Any = field(default=None, compare=False)
    arity = "pair"

    def members(self) -> list[tuple[str, ProjectionFamily]]:
        return [("Q1", self.Q1), ("Q2", self.Q2)]


@dataclass
class FamilyQuad:
    R1: ProjectionFamily
    R2: ProjectionFamily
    R3: ProjectionFamily
    R4: ProjectionFamily
    provenance: Any = field(default=None, compare=False)
    arity = "quad"

    def members(self) -> list[tuple[str, ProjectionFamily]]:
        return [("R1", self.R1), ("R2", self.R2), ("R3", self.R3), ("R4", self.R4)]


Family = FamilyTriple | FamilyPair | FamilyQuad


def apply(p: ProjectionFamily, t: float, x) -> np.ndarray:
    return p.apply(t, x)


# -- checkers ---------------------------------------------------------------


@dataclass
class _Context:
    grid: SampleGrid
    norm: NormKind
    tol: float
    n: int
    workers: int

    def batch(self) -> tuple[tuple[str, ...], np.ndarray]:
        return self.grid.vector_batch(self.n)

    def col(self, v: np.ndarray) -> np.ndarray:
        return self.norm.columns(v)


def _guard(fn: Callable[[np.ndarray], Any], x: np.ndarray, ids: Sequence[str], witness: dict):
    """Run ``fn`` on the whole batch; on failure rerun column by column to
    name the offending vector in the error."""
    try:
        return fn(x)
    except EvaluationError as exc:
        for j, vid in enumerate(ids):
            try:
                fn(x[:, j : j + 1])
            except EvaluationError as inner:
                raise EvaluationError(str(inner), {**witness, "vector": vid}) from inner
        raise EvaluationError(str(exc), witness) from exc


def _collect(acc: Accumulator, ctx: _Context, keys, results, ids, witness_of) -> None:
    for key, (na, nb, r) in zip(keys, results):
        for j, vid in enumerate(ids):
            margin, ok = equality_outcome(float(r[j]), ctx.tol)
            acc.add(margin, ok, {**witness_of(key), "vector": vid}, na[j], nb[j], r[j])


def _vector_identity(ctx: _Context, condition: str, sides: Callable[[float, np.ndarray], tuple[np.ndarray, np.ndarray]]):
    """Pointwise ``lhs(t, x) = rhs(t, x)`` as vectors, scaled by ``1 + |x|``."""
    ids, x = ctx.batch()
    scale = 1.0 + ctx.col(x)
    times = ctx.grid.times()

    def one(t):
        a, b = _guard(lambda xs: sides(t, xs), x, ids, {"t": t})
        return ctx.col(a), ctx.col(b), ctx.col(a - b) / scale

    acc = Accumulator(condition, EQUALITY)
    _collect(acc, ctx, times, sweep(one, times, ctx.workers), ids, lambda t: {"t": t})
    return acc.result()


def _norm_identity(ctx: _Context, condition: str, sides: Callable[[float, np.ndarray], tuple[np.ndarray, np.ndarray]]):
    """Pointwise identity between squared norms, scaled by ``1 + |x|^2``."""
    ids, x = ctx.batch()
    scale = 1.0 + ctx.col(x) ** 2
    times = ctx.grid.times()

    def one(t):
        a, b = _guard(lambda xs: sides(t, xs), x, ids, {"t": t})
        return a, b, np.abs(a - b) / scale

    acc = Accumulator(condition, EQUALITY)
    _collect(acc, ctx, times, sweep(one, times, ctx.workers), ids, lambda t: {"t": t})
    return acc.result()


def _commutation(ctx: _Context, condition: str, op: EvolutionOperator, p: ProjectionFamily):
    """``E(t, t0) P(t0) x = P(t) E(t, t0) x`` on sampled time pairs."""
    ids, x = ctx.batch()
    pairs = ctx.grid.pairs()

    def one(pr):
        t, t0 = pr

        def sides(xs):
            return op.evaluate(t, t0, p.apply(t0, xs)), p.apply(t, op.evaluate(t, t0, xs))

        a, b = _guard(sides, x, ids, {"t": t, "t0": t0})
        na, nb = ctx.col(a), ctx.col(b)
        return na, nb, ctx.col(a - b) / (1.0 + np.maximum(na, nb))

    acc = Accumulator(condition, EQUALITY)
    _collect(acc, ctx, pairs, sweep(one, pairs, ctx.workers), ids, lambda pr: {"t": pr.t, "t0": pr.t0})
    return acc.result()


def _idempotent_entry(ctx: _Context, label: str, p: ProjectionFamily):
    ids, x = ctx.batch()
    times = ctx.grid.times()

    def one(t):
        def sides(xs):
            y = p.apply(t, xs)
            return p.apply(t, y), y

        a, b = _guard(sides, x, ids, {"t": t})
        nb = ctx.col(b)
        return ctx.col(a), nb, ctx.col(a - b) / (1.0 + nb)

    acc = Accumulator(f"idem[{label}]", EQUALITY)
    _collect(acc, ctx, times, sweep(one, times, ctx.workers), ids, lambda t: {"t": t})
    return acc.result()


def _context(grid, norm, tol, dimension, op=None, workers=1) -> _Context:
    grid = grid or SampleGrid()
    norm = NormKind.parse(norm)
    if tol is None:
        tol = default_tol(op) if op is not None else 1e-9
    n = operator_dimension(op, dimension) if op is not None else (dimension or 1)
    return _Context(grid, norm, tol, n, workers)


def _report(kind: str, ctx: _Context, entries, **notes) -> ComplianceReport:
    return ComplianceReport(
        kind=kind,
        entries=list(entries),
        norm=ctx.norm.value,
        tol=ctx.tol,
        grid=ctx.grid.to_dict(),
        notes=notes,
    )


def check_idempotent(
    p: ProjectionFamily,
    grid: SampleGrid | None = None,
    tol: float | None = None,
    norm: NormKind | str = NormKind.L2,
    dimension: int | None = None,
    label: str | None = None,
    workers: int = 1,
) -> ComplianceReport:
    """``|P(t)P(t)x - P(t)x| <= tol * (1 + |P(t)x|)`` at every sampled ``(t, x)``."""
    if dimension is None and isinstance(p, ConstantMatrix):
        dimension = p.m.shape[0]
    ctx = _context(grid, norm, tol, dimension, workers=workers)
    return _report("idempotent", ctx, [_idempotent_entry(ctx, label or p.name, p)], family=p.name)


def _sq(ctx: _Context, v: np.ndarray) -> np.ndarray:
    return ctx.col(v) ** 2


def check_compat3(
    fam: FamilyTriple,
    op: EvolutionOperator,
    norm: NormKind | str = NormKind.L2,
    grid: SampleGrid | None = None,
    tol: float | None = None,
    dimension: int | None = None,
    workers: int = 1,
) -> ComplianceReport:
    """Idempotency of each member, then (c1) ``P0+P1+P2 = I``, (c2)
    ``Pi Pj = 0`` for ``i != j``, (c3) the Pythagorean identity for each
    unordered pair, and (c4) commutation with ``op``."""
    ctx = _context(grid, norm, tol, dimension, op, workers)
    members = fam.members()
    entries = [_idempotent_entry(ctx, lab, p) for lab, p in members]
    entries.append(
        _vector_identity(ctx, "c1", lambda t, x: (sum(p.apply(t, x) for _, p in members), x))
    )
    for (li, pi) in members:
        for (lj, pj) in members:
            if li != lj:
                entries.append(
                    _vector_identity(
                        ctx, f"c2[{li}{lj}]",
                        lambda t, x, pi=pi, pj=pj: (pi.apply(t, pj.apply(t, x)), np.zeros_like(x)),
                    )
                )
    for a in range(3):
        for b in range(a + 1, 3):
            (li, pi), (lj, pj) = members[a], members[b]

            def sides(t, x, pi=pi, pj=pj):
                u, v = pi.apply(t, x), pj.apply(t, x)
                return _sq(ctx, u + v), _sq(ctx, u) + _sq(ctx, v)

            entries.append(_norm_identity(ctx, f"c3[{li},{lj}]", sides))
    for lab, p in members:
        entries.append(_commutation(ctx, f"c4[{lab}]", op, p))
    return _report("compat3", ctx, entries, operator=op.name)


def check_compat2(
    fam: FamilyPair,
    op: EvolutionOperator,
    norm: NormKind | str = NormKind.L2,
    grid: SampleGrid | None = None,
    tol: float | None = None,
    dimension: int | None = None,
    workers: int = 1,
) -> ComplianceReport:
    """(c1') ``Q1Q2 = Q2Q1 = 0``, the three squared-norm identities
    (c2')-(c4'), and (c5') commutation, after idempotency of both members."""
    ctx = _context(grid, norm, tol, dimension, op, workers)
    q1, q2 = fam.Q1, fam.Q2
    zero = lambda x: np.zeros_like(x)  # noqa: E731
    entries = [_idempotent_entry(ctx, lab, p) for lab, p in fam.members()]
    entries.append(_vector_identity(ctx, "c1'[Q1Q2]", lambda t, x: (q1.apply(t, q2.apply(t, x)), zero(x))))
    entries.append(_vector_identity(ctx, "c1'[Q2Q1]", lambda t, x: (q2.apply(t, q1.apply(t, x)), zero(x))))

    def c2(t, x):
        u, v = q1.apply(t, x), q2.apply(t, x)
        return _sq(ctx, u + v), _sq(ctx, u) + _sq(ctx, v)

    def c3(t, x):
        u, v = q1.apply(t, x), q2.apply(t, x)
        return _sq(ctx, x - u), _sq(ctx, x - u - v) + _sq(ctx, v)

    def c4(t, x):
        u, v = q1.apply(t, x), q2.apply(t, x)
        return _sq(ctx, x - v), _sq(ctx, x - u - v) + _sq(ctx, u)

    entries.append(_norm_identity(ctx, "c2'", c2))
    entries.append(_norm_identity(ctx, "c3'", c3))
    entries.append(_norm_identity(ctx, "c4'", c4))
    for lab, p in fam.members():
        entries.append(_commutation(ctx, f"c5'[{lab}]", op, p))
    return _report("compat2", ctx, entries, operator=op.name)


def check_compat4(
    fam: FamilyQuad,
    op: EvolutionOperator,
    norm: NormKind | str = NormKind.L2,
    grid: SampleGrid | None = None,
    tol: float | None = None,
    dimension: int | None = None,
    workers: int = 1,
) -> ComplianceReport:
    """(c1'') ``R1+R3 = R2+R4 = I``; (c2'') ``R1R2 = R2R1 = 0`` and
    ``R3R4 = R4R3`` (commutation only); (c3'')-(c5'') squared-norm identities
    involving ``R3R4``; (c6'') commutation of every member with ``op``."""
    ctx = _context(grid, norm, tol, dimension, op, workers)
    r1, r2, r3, r4 = fam.R1, fam.R2, fam.R3, fam.R4
    zero = lambda x: np.zeros_like(x)  # noqa: E731
    r34 = lambda t, x: r3.apply(t, r4.apply(t, x))  # noqa: E731
    entries = [_idempotent_entry(ctx, lab, p) for lab, p in fam.members()]
    entries.append(_vector_identity(ctx, "c1''[R1+R3]", lambda t, x: (r1.apply(t, x) + r3.apply(t, x), x)))
    entries.append(_vector_identity(ctx, "c1''[R2+R4]", lambda t, x: (r2.apply(t, x) + r4.apply(t, x), x)))
    entries.append(_vector_identity(ctx, "c2''[R1R2]", lambda t, x: (r1.apply(t, r2.apply(t, x)), zero(x))))
    entries.append(_vector_identity(ctx, "c2''[R2R1]", lambda t, x: (r2.apply(t, r1.apply(t, x)), zero(x))))
    entries.append(_vector_identity(ctx, "c2''[R3R4=R4R3]", lambda t, x: (r34(t, x), r4.apply(t, r3.apply(t, x)))))

    def pyth(first, second):
        def sides(t, x):
            u, v = first(t, x), second(t, x)
            return _sq(ctx, u + v), _sq(ctx, u) + _sq(ctx, v)

        return sides

    entries.append(_norm_identity(ctx, "c3''", pyth(r1.apply, r2.apply)))
    entries.append(_norm_identity(ctx, "c4''", pyth(r1.apply, r34)))
    entries.append(_norm_identity(ctx, "c5''", pyth(r2.apply, r34)))
    for lab, p in fam.members():
        entries.append(_commutation(ctx, f"c6''[{lab}]", op, p))
    return _report("compat4", ctx, entries, operator=op.name)


def check_compat(fam: Family, op: EvolutionOperator, **kwargs) -> ComplianceReport:
    if isinstance(fam, FamilyTriple):
        return check_compat3(fam, op, **kwargs)
    if isinstance(fam, FamilyPair):
        return check_compat2(fam, op, **kwargs)
    return check_compat4(fam, op, **kwargs)


def restrict(
    op: EvolutionOperator,
    p: ProjectionFamily,
    grid: SampleGrid | None = None,
    tol: float | None = None,
    norm: NormKind | str = NormKind.L2,
    dimension: int | None = None,
    check: bool = True,
) -> Restricted:
    """``(t, t0, x) -> E(t, t0) P(t0) x``.

    With ``check`` the commutation ``E(t,t0)P(t0) = P(t)E(t,t0)`` is verified
    on the grid first, since otherwise the two ways of writing the restricted
    operator disagree and the result need not compose.
    """
    if check:
        ctx = _context(grid, norm, tol, dimension, op)
        rep = _report("commutation", ctx, [_commutation(ctx, f"c4[{p.name}]", op, p)])
        if not rep.passed:
            raise CommutationError(f"{p.name} does not commute with {op.name}", rep)
    return Restricted(op, p)



def infer_dimension(families) -> int:
    """Smallest state dimension every family in ``families`` can act on."""
    n = 1
    for p in families:
        if isinstance(p, ConstantMatrix):
            n = max(n, p.m.shape[0])
        elif isinstance(p, ConstantCoordinate) and p.indices:
            n = max(n, p.indices[-1])
        elif isinstance(p, Combination):
            n = max(n, infer_dimension(q for _, q in p.terms))
        elif isinstance(p, Composition):
            n = max(n, infer_dimension(p.factors))
    return n


def max_pointwise_difference(
    a: "Family", b: "Family", grid: SampleGrid | None = None, dimension: int | None = None, norm: NormKind | str = NormKind.LInf
) -> float:
    """Largest ``|A_k(t)x - B_k(t)x|`` over members, sampled times and vectors."""
    grid = grid or SampleGrid()
    norm = NormKind.parse(norm)
    ma, mb = a.members(), b.members()
    if [lab for lab, _ in ma] != [lab for lab, _ in mb]:
        raise ValueError("families have different arity")
    n = dimension or infer_dimension([p for _, p in ma + mb])
    _, x = grid.vector_batch(n)
    worst = 0.0
    for t in grid.times():
        for (_, p), (_, q) in zip(ma, mb):
            worst = max(worst, float(np.max(norm.columns(p.apply(t, x) - q.apply(t, x)), initial=0.0)))
    return worst
