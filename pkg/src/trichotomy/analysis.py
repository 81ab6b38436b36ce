"""Trichotomy inequality verification and feasible-constant envelopes.

Every inequality handled here has the shape::

    e^{rate d} |E_P(lhs time, t0) x|  <=  N e^{rate' d} |E_P(rhs time, t0) x|

with ``d = t - s``, so it is checked and fitted in log form. For a fixed
restricted operator ``E_P`` and sample ``i`` put ``a_i = log|E_P(t,t0)x| -
log|E_P(s,t0)x|``. The smallest admissible ``log N`` at rate ``nu`` is then
``max_i(base_i + sign * nu * d_i)``, a maximum of affine functions of ``nu``,
which is what :class:`ParetoCurve` stores and queries exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import EvaluationError, IncompatibleFamilyError
from .grid import SampleGrid, TimeTriple
from .norms import NormKind
from .operators import EvolutionOperator, default_tol, operator_dimension
from .projections import (
    FamilyPair,
    FamilyQuad,
    FamilyTriple,
    ProjectionFamily,
    check_compat2,
    check_compat3,
    check_compat4,
    complement,
)
from .report import INEQUALITY, Accumulator, ComplianceReport, inequality_outcome, sweep

ZERO_FLOOR = 1e-300
N_FLOOR = 1.0 + 1e-12
DEFAULT_N_CEILING = 1e6
T2_READING = "rhs of (t2) read as N2*|E2(t,t0)x|"

# direction -> (side on the left of the inequality, sign of the rate term in
# the required log N); decay is (t1), growth (t2), center-lower (t3),
# center-upper (t4).
DIRECTIONS: dict[str, tuple[str, int]] = {
    "decay": ("t", +1),
    "growth": ("s", +1),
    "center-upper": ("t", -1),
    "center-lower": ("s", -1),
}


ROUND_RATES = (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 8.0)


def default_nu_grid() -> tuple[float, ...]:
    """Log-spaced rates on ``[1e-3, 8]`` plus a few round values."""
    logs = {float(f"{v:.12g}") for v in np.logspace(-3, math.log10(8.0), 33)}
    return tuple(sorted(logs | set(ROUND_RATES)))


@dataclass(frozen=True)
class TrichotomyConstants:
    N0: float
    N1: float
    N2: float
    nu0: float
    nu1: float
    nu2: float

    def __post_init__(self):
        for name in ("N0", "N1", "N2"):
            if not getattr(self, name) > 1:
                raise ValueError(f"{name} must be > 1")
        for name in ("nu0", "nu1", "nu2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("N0", "N1", "N2", "nu0", "nu1", "nu2")}


@dataclass(frozen=True)
class NormalizedConstants:
    N: float
    nu: float
    nu0: float

    def __post_init__(self):
        if not self.N > 1:
            raise ValueError("N must be > 1")
        if not (self.nu > 0 and self.nu0 > 0):
            raise ValueError("nu and nu0 must be > 0")

    def expand(self) -> TrichotomyConstants:
        return TrichotomyConstants(self.N, self.N, self.N, self.nu0, self.nu, self.nu)

    def to_dict(self) -> dict:
        return {"N": self.N, "nu": self.nu, "nu0": self.nu0}


def normalize_constants(c: TrichotomyConstants) -> NormalizedConstants:
    """One constant and one rate for both hyperbolic parts:
    ``N = max(N0, N1, N2)``, ``nu = min(nu1, nu2)``; ``nu0`` is kept."""
    return NormalizedConstants(max(c.N0, c.N1, c.N2), min(c.nu1, c.nu2), c.nu0)


# -- sampled restricted norms ---------------------------------------------------


@dataclass
class _Samples:
    triples: list[TimeTriple]
    vector_ids: list[str]
    norm_t: np.ndarray
    norm_s: np.ndarray
    spread: np.ndarray

    def witness(self, i: int) -> dict:
        tr = self.triples[i]
        return {"t": tr.t, "s": tr.s, "t0": tr.t0, "vector": self.vector_ids[i]}


def _restricted_samples(
    op: EvolutionOperator,
    p: ProjectionFamily,
    grid: SampleGrid,
    norm: NormKind,
    n: int,
    workers: int,
    vector_scale: float = 1.0,
    null_tol: float | None = None,
) -> _Samples:
    # Projections are only pinned down to the compatibility tolerance, so a
    # projected state with |P(t0)x| <= null_tol*|x| is taken to be zero.
    null_tol = default_tol(op) if null_tol is None else null_tol
    ids, x = grid.vector_batch(n)
    x = vector_scale * x
    cut = null_tol * norm.columns(x)
    triples = grid.triples()
    keys = sorted({(tm, tr.t0) for tr in triples for tm in (tr.t, tr.s)})
    projected = {}
    for t0 in sorted({tr.t0 for tr in triples}):
        px = p.apply(t0, x)
        projected[t0] = np.where(norm.columns(px) <= cut, 0.0, px)

    def one(key):
        tm, t0 = key
        try:
            return norm.columns(op.evaluate(tm, t0, projected[t0]))
        except EvaluationError:
            for j, vid in enumerate(ids):
                try:
                    op.evaluate(tm, t0, projected[t0][:, j])
                except EvaluationError as exc:
                    raise EvaluationError(str(exc), {"t": tm, "t0": t0, "vector": vid}) from exc
            raise

    table = dict(zip(keys, sweep(one, keys, workers)))
    k = len(ids)
    nt = np.concatenate([table[(tr.t, tr.t0)] for tr in triples]) if triples else np.zeros(0)
    ns = np.concatenate([table[(tr.s, tr.t0)] for tr in triples]) if triples else np.zeros(0)
    d = np.repeat([tr.t - tr.s for tr in triples], k)
    trs = [tr for tr in triples for _ in range(k)]
    vids = [vid for _ in triples for vid in ids]
    return _Samples(trs, vids, nt, ns, d)


def _log(v: float, floor: float) -> float:
    return -math.inf if v < floor else math.log(v)


def _inequality_entry(
    condition: str,
    samples: _Samples,
    direction: str,
    log_n: float,
    rate: float,
    tol: float,
    floor: float,
) -> Any:
    lhs_side, sign = DIRECTIONS[direction]
    acc = Accumulator(condition, INEQUALITY)
    for i in range(len(samples.triples)):
        nt, ns, d = samples.norm_t[i], samples.norm_s[i], samples.spread[i]
        l_t, l_s = _log(nt, floor), _log(ns, floor)
        if l_t == -math.inf and l_s == -math.inf:
            acc.add_vacuous()
            continue
        l_lhs, l_rhs = (l_t, l_s) if lhs_side == "t" else (l_s, l_t)
        if sign > 0:
            l_lhs += rate * d
            l_rhs += log_n
        else:
            l_rhs += log_n + rate * d
        margin, ok = inequality_outcome(l_lhs, l_rhs, tol)
        acc.add(margin, ok, samples.witness(i), _exp(l_lhs), _exp(l_rhs))
    return acc.result()


def _exp(v: float) -> float:
    if v == -math.inf:
        return 0.0
    return math.exp(v) if v < 709.0 else math.inf


def _verify(
    kind: str,
    op: EvolutionOperator,
    conditions: Sequence[tuple[str, ProjectionFamily, str, float, float]],
    norm: NormKind,
    grid: SampleGrid,
    tol: float,
    n: int,
    workers: int,
    floor: float,
    notes: dict,
) -> ComplianceReport:
    cache: dict[int, _Samples] = {}
    entries = []
    for condition, p, direction, big_n, rate in conditions:
        if id(p) not in cache:
            cache[id(p)] = _restricted_samples(op, p, grid, norm, n, workers, null_tol=tol)
        entries.append(
            _inequality_entry(condition, cache[id(p)], direction, math.log(big_n), rate, tol, floor)
        )
    return ComplianceReport(
        kind=kind, entries=entries, norm=norm.value, tol=tol, grid=grid.to_dict(), notes=notes
    )


def _setup(op, grid, norm, tol, dimension):
    grid = grid or SampleGrid()
    norm = NormKind.parse(norm)
    tol = default_tol(op) if tol is None else tol
    return grid, norm, tol, operator_dimension(op, dimension)


def verify_trichotomy(
    op: EvolutionOperator,
    fam: FamilyTriple,
    c: TrichotomyConstants | NormalizedConstants,
    norm: NormKind | str = NormKind.L2,
    grid: SampleGrid | None = None,
    tol: float | None = None,
    dimension: int | None = None,
    workers: int = 1,
    floor: float = ZERO_FLOOR,
    check: bool = True,
) -> ComplianceReport:
    """Check (t1)-(t4) on every sampled triple and vector.

    Refuses families that fail :func:`check_compat3`. Samples where both
    restricted norms vanish are counted as vacuous.
    """
    if isinstance(c, NormalizedConstants):
        c = c.expand()
    grid, norm, tol, n = _setup(op, grid, norm, tol, dimension)
    if check:
        compat = check_compat3(fam, op, norm=norm, grid=grid, tol=tol, dimension=n, workers=workers)
        if not compat.passed:
            raise IncompatibleFamilyError("families are not compatible with the operator", compat)
    conditions = [
        ("t1", fam.P1, "decay", c.N1, c.nu1),
        ("t2", fam.P2, "growth", c.N2, c.nu2),
        ("t3", fam.P0, "center-lower", c.N0, c.nu0),
        ("t4", fam.P0, "center-upper", c.N0, c.nu0),
    ]
    notes = {"constants": c.to_dict(), "readings": {"t2": T2_READING}, "operator": op.name}
    return _verify("trichotomy", op, conditions, norm, grid, tol, n, workers, floor, notes)


def verify_pair_conditions(
    op: EvolutionOperator,
    fam: FamilyPair,
    c: NormalizedConstants,
    norm: NormKind | str = NormKind.L2,
    grid: SampleGrid | None = None,
    tol: float | None = None,
    dimension: int | None = None,
    workers: int = 1,
    floor: float = ZERO_FLOOR,
    check: bool = True,
) -> ComplianceReport:
    """(t1')-(t4'): decay on ``Q1``, growth on ``Q2``, and the two-sided
    center bounds on ``I - Q1`` (lower) and ``I - Q2`` (upper)."""
    grid, norm, tol, n = _setup(op, grid, norm, tol, dimension)
    if check:
        compat = check_compat2(fam, op, norm=norm, grid=grid, tol=tol, dimension=n, workers=workers)
        if not compat.passed:
            raise IncompatibleFamilyError("families are not compatible with the operator", compat)
    conditions = [
        ("t1'", fam.Q1, "decay", c.N, c.nu),
        ("t2'", fam.Q2, "growth", c.N, c.nu),
        ("t3'", complement(fam.Q1), "center-lower", c.N, c.nu0),
        ("t4'", complement(fam.Q2), "center-upper", c.N, c.nu0),
    ]
    notes = {"constants": c.to_dict(), "operator": op.name}
    return _verify("pair", op, conditions, norm, grid, tol, n, workers, floor, notes)


def verify_quad_conditions(
    op: EvolutionOperator,
    fam: FamilyQuad,
    c: NormalizedConstants,
    norm: NormKind | str = NormKind.L2,
    grid: SampleGrid | None = None,
    tol: float | None = None,
    dimension: int | None = None,
    workers: int = 1,
    floor: float = ZERO_FLOOR,
    check: bool = True,
) -> ComplianceReport:
    """(t1'')-(t4''): decay on ``R1``, growth on ``R2``, center lower bound on
    ``R3`` and center upper bound on ``R4``."""
    grid, norm, tol, n = _setup(op, grid, norm, tol, dimension)
    if check:
        compat = check_compat4(fam, op, norm=norm, grid=grid, tol=tol, dimension=n, workers=workers)
        if not compat.passed:
            raise IncompatibleFamilyError("families are not compatible with the operator", compat)
    conditions = [
        ("t1''", fam.R1, "decay", c.N, c.nu),
        ("t2''", fam.R2, "growth", c.N, c.nu),
        ("t3''", fam.R3, "center-lower", c.N, c.nu0),
        ("t4''", fam.R4, "center-upper", c.N, c.nu0),
    ]
    notes = {"constants": c.to_dict(), "operator": op.name}
    return _verify("quad", op, conditions, norm, grid, tol, n, workers, floor, notes)


# -- envelopes ------------------------------------------------------------------


@dataclass(frozen=True)
class EnvelopePoint:
    nu: float
    log_n: float
    witness: dict | None

    @property
    def certified_n(self) -> float:
        """Constant reported as certified; never below ``1 + 1e-12``."""
        return max(_exp(self.log_n), N_FLOOR)

    def to_dict(self) -> dict:
        return {"nu": self.nu, "logN": self.log_n, "certified_N": self.certified_n, "witness": self.witness}


@dataclass
class ParetoCurve:
    """Smallest grid-supported ``log N`` as a function of the rate.

    ``base`` and ``spread`` hold the effective samples, so :meth:`log_n` and
    the rate queries are exact rather than interpolated from ``points``.
    """

    condition: str
    direction: str
    points: list[EnvelopePoint]
    base: np.ndarray = field(repr=False, compare=False)
    spread: np.ndarray = field(repr=False, compare=False)
    witnesses: list[dict] = field(repr=False, compare=False)
    vacuous = False

    @property
    def sign(self) -> int:
        return DIRECTIONS[self.direction][1]

    def _argmax(self, nu: float) -> tuple[float, int | None]:
        if self.base.size == 0:
            return -math.inf, None
        with np.errstate(invalid="ignore"):
            vals = self.base + self.sign * nu * self.spread
        vals = np.where(np.isposinf(self.base), math.inf, vals)
        i = int(np.argmax(vals))
        return float(vals[i]), i

    def log_n(self, nu: float) -> float:
        return self._argmax(nu)[0]

    def point(self, nu: float) -> EnvelopePoint:
        v, i = self._argmax(nu)
        return EnvelopePoint(float(nu), v, None if i is None else self.witnesses[i])

    def feasible_rate(self, log_n: float, lo: float, hi: float) -> float | None:
        """Best rate in ``[lo, hi]`` whose envelope stays at or below ``log_n``:
        the largest for decay/growth, the smallest for the center directions."""
        if np.any(np.isposinf(self.base)):
            return None
        flat = self.spread == 0
        if np.any(self.base[flat] > log_n):
            return None
        moving = ~flat
        if self.sign > 0:
            bound = np.min((log_n - self.base[moving]) / self.spread[moving]) if moving.any() else math.inf
            nu = min(float(bound), hi)
            return nu if nu >= lo else None
        bound = np.max((self.base[moving] - log_n) / self.spread[moving]) if moving.any() else -math.inf
        nu = max(float(bound), lo)
        return nu if nu <= hi else None

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "direction": self.direction,
            "vacuous": False,
            "points": [p.to_dict() for p in self.points],
        }

    def csv_rows(self) -> list[list]:
        rows = []
        for p in self.points:
            w = p.witness or {}
            rows.append([self.direction, p.nu, p.log_n, w.get("t"), w.get("s"), w.get("t0"), w.get("vector")])
        return rows


@dataclass
class VacuousEnvelope:
    """Every sample lies in the kernel of the projection: no constraint at all."""

    condition: str
    direction: str
    samples: int
    vacuous = True
    points: tuple = ()

    def log_n(self, nu: float) -> float:
        return -math.inf

    def feasible_rate(self, log_n: float, lo: float, hi: float) -> float:
        return hi if DIRECTIONS[self.direction][1] > 0 else lo

    def to_dict(self) -> dict:
        return {"condition": self.condition, "direction": self.direction, "vacuous": True, "samples": self.samples}

    def csv_rows(self) -> list[list]:
        return []


_CONDITION_OF = {"decay": "t1", "growth": "t2", "center-lower": "t3", "center-upper": "t4"}


def _curve_from_samples(
    samples: _Samples, direction: str, nu_grid: Sequence[float], floor: float, condition: str
) -> ParetoCurve | VacuousEnvelope:
    lhs_side, sign = DIRECTIONS[direction]
    base, spread, wits = [], [], []
    vacuous = 0
    for i in range(len(samples.triples)):
        l_t, l_s = _log(samples.norm_t[i], floor), _log(samples.norm_s[i], floor)
        if l_t == -math.inf and l_s == -math.inf:
            vacuous += 1
            continue
        l_lhs, l_rhs = (l_t, l_s) if lhs_side == "t" else (l_s, l_t)
        if l_lhs == -math.inf:
            continue  # holds for every N
        base.append(math.inf if l_rhs == -math.inf else l_lhs - l_rhs)
        spread.append(samples.spread[i])
        wits.append(samples.witness(i))
    if vacuous == len(samples.triples):
        return VacuousEnvelope(condition, direction, vacuous)
    curve = ParetoCurve(condition, direction, [], np.array(base, dtype=float), np.array(spread, dtype=float), wits)
    curve.points = [curve.point(float(nu)) for nu in nu_grid]
    return curve


def estimate_envelope(
    op: EvolutionOperator,
    p: ProjectionFamily,
    direction: str,
    norm: NormKind | str = NormKind.L2,
    grid: SampleGrid | None = None,
    nu_grid: Sequence[float] | None = None,
    dimension: int | None = None,
    workers: int = 1,
    floor: float = ZERO_FLOOR,
    condition: str | None = None,
    vector_scale: float = 1.0,
) -> ParetoCurve | VacuousEnvelope:
    """Tight ``log N`` for each rate in ``nu_grid`` on the restricted operator
    ``E P``. Each returned point holds with zero slack at its witness."""
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}")
    grid = grid or SampleGrid()
    norm = NormKind.parse(norm)
    nu_grid = default_nu_grid() if nu_grid is None else tuple(nu_grid)
    n = operator_dimension(op, dimension)
    samples = _restricted_samples(op, p, grid, norm, n, workers, vector_scale)
    return _curve_from_samples(samples, direction, nu_grid, floor, condition or _CONDITION_OF[direction])


# -- classification ---------------------------------------------------------------

_N_LADDER = (N_FLOOR, 1.01, 1.1, 2.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6)


@dataclass
class Classification:
    verdict: str
    constants: NormalizedConstants | None = None
    witness: dict | None = None
    blocking: str | None = None
    required_log_n: float | None = None
    envelopes: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "constants": None if self.constants is None else self.constants.to_dict(),
            "witness": self.witness,
            "blocking_direction": self.blocking,
            "required_logN": self.required_log_n,
            "note": "grid-supported evidence, not a proof",
        }


def triple_envelopes(
    op: EvolutionOperator,
    fam: FamilyTriple,
    norm: NormKind | str = NormKind.L2,
    grid: SampleGrid | None = None,
    nu_grid: Sequence[float] | None = None,
    dimension: int | None = None,
    workers: int = 1,
    floor: float = ZERO_FLOOR,
) -> list[ParetoCurve | VacuousEnvelope]:
    """Envelopes for (t1) decay on P1, (t2) growth on P2, (t3)/(t4) on P0."""
    grid = grid or SampleGrid()
    norm = NormKind.parse(norm)
    nu_grid = default_nu_grid() if nu_grid is None else tuple(nu_grid)
    n = operator_dimension(op, dimension)
    s0 = _restricted_samples(op, fam.P0, grid, norm, n, workers)
    s1 = _restricted_samples(op, fam.P1, grid, norm, n, workers)
    s2 = _restricted_samples(op, fam.P2, grid, norm, n, workers)
    return [
        _curve_from_samples(s1, "decay", nu_grid, floor, "t1"),
        _curve_from_samples(s2, "growth", nu_grid, floor, "t2"),
        _curve_from_samples(s0, "center-lower", nu_grid, floor, "t3"),
        _curve_from_samples(s0, "center-upper", nu_grid, floor, "t4"),
    ]


def classify(
    op: EvolutionOperator,
    fam: FamilyTriple,
    norm: NormKind | str = NormKind.L2,
    grid: SampleGrid | None = None,
    nu_grid: Sequence[float] | None = None,
    n_ceiling: float = DEFAULT_N_CEILING,
    dimension: int | None = None,
    workers: int = 1,
    floor: float = ZERO_FLOOR,
    check: bool = True,
    tol: float | None = None,
    envelopes: list | None = None,
) -> Classification:
    """Grid-supported evidence of trichotomy or dichotomy.

    Walks a ladder of constants ``N`` up to ``n_ceiling``; at the first level
    where every envelope admits a rate inside the span of ``nu_grid`` it
    reports the largest hyperbolic rate and the smallest center rate, with
    ``N`` recomputed exactly at those rates. Precomputed ``envelopes`` from
    :func:`triple_envelopes` on the same grid may be passed in.
    """
    grid = grid or SampleGrid()
    norm = NormKind.parse(norm)
    nu_grid = default_nu_grid() if nu_grid is None else tuple(nu_grid)
    if check:
        compat = check_compat3(fam, op, norm=norm, grid=grid, tol=tol, dimension=dimension, workers=workers)
        if not compat.passed:
            raise IncompatibleFamilyError("families are not compatible with the operator", compat)
    envs = envelopes if envelopes is not None else triple_envelopes(op, fam, norm, grid, nu_grid, dimension, workers, floor)
    if all(e.vacuous for e in envs):
        return Classification("vacuous", envelopes=envs)
    lo, hi = min(nu_grid), max(nu_grid)
    decay, growth, lower, upper = envs
    dichotomy = lower.vacuous and upper.vacuous
    levels = [v for v in _N_LADDER if v <= n_ceiling]
    if not levels or levels[-1] < n_ceiling:
        levels.append(n_ceiling)
    for level in levels:
        target = math.log(level)
        rates = [e.feasible_rate(target, lo, hi) for e in envs]
        if any(r is None for r in rates):
            continue
        nu = min(rates[0], rates[1])
        nu0 = max(rates[2], rates[3])
        log_n = max(decay.log_n(nu), growth.log_n(nu), lower.log_n(nu0), upper.log_n(nu0))
        constants = NormalizedConstants(max(_exp(log_n), N_FLOOR), nu, nu0)
        verdict = "dichotomic-evidence" if dichotomy else "trichotomic-evidence"
        return Classification(verdict, constants, envelopes=envs)

    target = math.log(n_ceiling)
    for env in envs:
        if env.feasible_rate(target, lo, hi) is None:
            extreme = lo if env.sign > 0 else hi
            pt = env.point(extreme)
            return Classification(
                "no-evidence",
                witness=pt.witness,
                blocking=env.direction,
                required_log_n=pt.log_n,
                envelopes=envs,
            )
    raise AssertionError("unreachable: ceiling level admitted every envelope")
