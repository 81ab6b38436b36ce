"""Scenario files: parsing, validation and the echo of resolved defaults.

A scenario is a JSON object. Unknown fields are errors, and every error names
the offending field path (or the line and column for JSON syntax errors).
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .analysis import (
    DEFAULT_N_CEILING,
    ZERO_FLOOR,
    NormalizedConstants,
    TrichotomyConstants,
    default_nu_grid,
)
from .errors import ScenarioError, SemigroupLawError
from .grid import (
    DEFAULT_OFFSETS,
    DEFAULT_RANDOM_VECTORS,
    DEFAULT_SEED,
    DEFAULT_T0,
    DEFAULT_T_MAX,
    SampleGrid,
)
from .norms import NormKind
from .operators import (
    DiagonalIntegrand,
    EvolutionOperator,
    IntegralOfPhi,
    LinearRate,
    ScalarQuotient,
    default_tol,
    make_semigroup_induced,
    matrix_exp_semigroup,
    identity_semigroup,
    phi_constant,
    phi_shifted_exp,
    scalar_exp,
    scalar_exp_semigroup,
    scalar_exp_square,
    scalar_one,
)
from .projections import (
    ConstantCoordinate,
    ConstantMatrix,
    Family,
    FamilyPair,
    FamilyQuad,
    FamilyTriple,
    Identity,
    ProjectionFamily,
    Zero,
)

TOP_LEVEL = ("dimension", "operator", "family", "norm", "grid", "constants", "tolerances", "nu_grid")

# name -> (factory, {param: default or REQUIRED})
REQUIRED = object()
SCALAR_FUNCTIONS = {
    "one": (scalar_one, {}),
    "exp": (scalar_exp, {"rate": REQUIRED}),
    "exp_square": (scalar_exp_square, {"coefficient": 1.0}),
}
SEMIGROUPS = {
    "identity": (identity_semigroup, {}),
    "scalar_exp": (scalar_exp_semigroup, {"rate": REQUIRED}),
    "matrix_exp": (matrix_exp_semigroup, {"generator": REQUIRED}),
}
PHI_FUNCTIONS = {
    "shifted_exp": (phi_shifted_exp, {"limit": 1.0, "amplitude": 1.0, "decay": 1.0}),
    "constant": (phi_constant, {"value": REQUIRED}),
}
FAMILY_MEMBERS = {"triple": ("P0", "P1", "P2"), "pair": ("Q1", "Q2"), "quad": ("R1", "R2", "R3", "R4")}


@dataclass
class Scenario:
    dimension: int
    operator: EvolutionOperator
    family: Family
    norm: NormKind
    grid: SampleGrid
    constants: TrichotomyConstants | NormalizedConstants | None
    tol: float
    zero_floor: float
    n_ceiling: float
    nu_grid: tuple[float, ...]
    echo: dict

    def normalized_constants(self) -> NormalizedConstants | None:
        from .analysis import normalize_constants

        if self.constants is None or isinstance(self.constants, NormalizedConstants):
            return self.constants
        return normalize_constants(self.constants)


# -- field helpers ------------------------------------------------------------


def _join(path: str, key: str | int) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else key


def _obj(value: Any, path: str, required: tuple = (), optional: tuple = ()) -> dict:
    if not isinstance(value, dict):
        raise ScenarioError(path, f"expected an object, got {type(value).__name__}")
    allowed = set(required) | set(optional)
    for key in value:
        if key not in allowed:
            raise ScenarioError(_join(path, key), f"unknown field (allowed: {', '.join(sorted(allowed))})")
    for key in required:
        if key not in value:
            raise ScenarioError(_join(path, key), "missing required field")
    return value


def _num(value: Any, path: str, *, positive: bool = False, nonneg: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(path, f"expected a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise ScenarioError(path, "must be finite")
    if positive and not v > 0:
        raise ScenarioError(path, "must be > 0")
    if nonneg and v < 0:
        raise ScenarioError(path, "must be >= 0")
    return v


def _int(value: Any, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ScenarioError(path, f"must be >= {minimum}")
    return value


def _bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ScenarioError(path, f"expected true or false, got {value!r}")
    return value


def _num_list(value: Any, path: str, **kw) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ScenarioError(path, "expected a nonempty list of numbers")
    return [_num(v, _join(path, i), **kw) for i, v in enumerate(value)]


def _matrix(value: Any, path: str) -> list[list[float]]:
    if not isinstance(value, list) or not value:
        raise ScenarioError(path, "expected a square matrix (list of rows)")
    rows = [_num_list(r, _join(path, i)) for i, r in enumerate(value)]
    if any(len(r) != len(rows) for r in rows):
        raise ScenarioError(path, "matrix must be square")
    return rows


def _named(value: Any, path: str, catalog: dict) -> tuple[Any, dict]:
    """Resolve ``{"name": ..., params...}`` against a catalog; returns the
    built object and the echo with defaults filled in."""
    if not isinstance(value, dict):
        raise ScenarioError(path, "expected an object with a 'name' field")
    name = value.get("name")
    if name not in catalog:
        raise ScenarioError(_join(path, "name"), f"unknown catalog entry {name!r} (known: {', '.join(catalog)})")
    factory, params = catalog[name]
    _obj(value, path, ("name",) + tuple(k for k, d in params.items() if d is REQUIRED), tuple(params))
    kwargs = {}
    for key, default in params.items():
        raw = value.get(key, default)
        if key == "generator":
            kwargs[key] = _matrix(raw, _join(path, key))
        else:
            kwargs[key] = _num(raw, _join(path, key))
    try:
        built = factory(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(path, str(exc)) from exc
    return built, {"name": name, **kwargs}


# -- sections -------------------------------------------------------------------


def _parse_grid(value: Any) -> tuple[SampleGrid, dict]:
    path = "grid"
    v = _obj(value if value is not None else {}, path, (), ("t0", "s_offsets", "t_offsets", "t_max", "vectors", "seed", "pair_sums", "horizon"))
    try:
        grid = SampleGrid(
            t0s=tuple(_num_list(v.get("t0", list(DEFAULT_T0)), "grid.t0", nonneg=True)),
            s_offsets=tuple(_num_list(v.get("s_offsets", list(DEFAULT_OFFSETS)), "grid.s_offsets", nonneg=True)),
            t_offsets=tuple(_num_list(v.get("t_offsets", list(DEFAULT_OFFSETS)), "grid.t_offsets", nonneg=True)),
            t_max=_num(v.get("t_max", DEFAULT_T_MAX), "grid.t_max", nonneg=True),
            random_vectors=_int(v.get("vectors", DEFAULT_RANDOM_VECTORS), "grid.vectors", 0),
            seed=_int(v.get("seed", DEFAULT_SEED), "grid.seed", 0),
            pair_sums=_bool(v.get("pair_sums", True), "grid.pair_sums"),
            horizon=_bool(v.get("horizon", False), "grid.horizon"),
        )
        grid.triples()
    except ValueError as exc:
        raise ScenarioError(path, str(exc)) from exc
    return grid, grid.to_dict()


def _parse_operator(value: Any, grid: SampleGrid, dimension: int | None) -> tuple[EvolutionOperator, dict]:
    path = "operator"
    if not isinstance(value, dict):
        raise ScenarioError(path, "expected an object with a 'kind' field")
    kind = value.get("kind")
    if kind == "ScalarQuotient":
        _obj(value, path, ("kind", "f"))
        f, echo = _named(value["f"], "operator.f", SCALAR_FUNCTIONS)
        for t in () if f.positive else grid.times():
            if f(t) == 0:
                raise ScenarioError("operator.f", f"f vanishes at sampled time {t}")
        return ScalarQuotient(f, dimension), {"kind": kind, "f": echo}
    if kind == "SemigroupInduced":
        _obj(value, path, ("kind", "S"))
        s, echo = _named(value["S"], "operator.S", SEMIGROUPS)
        if s.dimension is not None and dimension is not None and s.dimension != dimension:
            raise ScenarioError("operator.S.generator", f"generator is {s.dimension}x{s.dimension}, dimension is {dimension}")
        try:
            op = make_semigroup_induced(s, grid=grid, dimension=dimension or s.dimension)
        except SemigroupLawError as exc:
            raise ScenarioError("operator.S", str(exc)) from exc
        return op, {"kind": kind, "S": echo}
    if kind == "DiagonalIntegrand":
        _obj(value, path, ("kind", "rules"))
        rules_raw = value["rules"]
        if not isinstance(rules_raw, list) or not rules_raw:
            raise ScenarioError("operator.rules", "expected a nonempty list of coordinate rules")
        rules, echoes = [], []
        for i, r in enumerate(rules_raw):
            rp = _join("operator.rules", i)
            rule = r.get("rule") if isinstance(r, dict) else None
            if rule == "IntegralOfPhi":
                _obj(r, rp, ("rule", "sign", "phi"))
                if r["sign"] not in ("+", "-"):
                    raise ScenarioError(_join(rp, "sign"), "expected '+' or '-'")
                phi, phi_echo = _named(r["phi"], _join(rp, "phi"), PHI_FUNCTIONS)
                problems = phi.validate(grid.times())
                if problems:
                    raise ScenarioError(_join(rp, "phi"), "; ".join(problems))
                rules.append(IntegralOfPhi(1 if r["sign"] == "+" else -1, phi))
                echoes.append({"rule": rule, "sign": r["sign"], "phi": phi_echo})
            elif rule == "LinearRate":
                _obj(r, rp, ("rule", "rate"))
                rate = _num(r["rate"], _join(rp, "rate"))
                rules.append(LinearRate(rate))
                echoes.append({"rule": rule, "rate": rate})
            else:
                raise ScenarioError(_join(rp, "rule"), f"unknown rule {rule!r} (known: IntegralOfPhi, LinearRate)")
        if dimension is not None and len(rules) != dimension:
            raise ScenarioError("operator.rules", f"{len(rules)} rules for dimension {dimension}")
        return DiagonalIntegrand(rules), {"kind": kind, "rules": echoes}
    raise ScenarioError(
        "operator.kind",
        f"unknown operator kind {kind!r} (known: ScalarQuotient, SemigroupInduced, DiagonalIntegrand)",
    )


def _parse_projection(value: Any, path: str, n: int) -> tuple[ProjectionFamily, dict]:
    if not isinstance(value, dict):
        raise ScenarioError(path, "expected an object with a 'kind' field")
    kind = value.get("kind")
    if kind == "Zero":
        _obj(value, path, ("kind",))
        return Zero(), {"kind": kind}
    if kind == "Identity":
        _obj(value, path, ("kind",))
        return Identity(), {"kind": kind}
    if kind == "ConstantCoordinate":
        _obj(value, path, ("kind", "indices"))
        raw = value["indices"]
        if not isinstance(raw, list):
            raise ScenarioError(_join(path, "indices"), "expected a list of 1-based coordinate indices")
        idx = [_int(v, _join(_join(path, "indices"), i), 1) for i, v in enumerate(raw)]
        if any(i > n for i in idx):
            raise ScenarioError(_join(path, "indices"), f"index exceeds dimension {n}")
        p = ConstantCoordinate(idx)
        return p, p.spec()
    if kind == "ConstantMatrix":
        _obj(value, path, ("kind", "matrix"))
        m = _matrix(value["matrix"], _join(path, "matrix"))
        if len(m) != n:
            raise ScenarioError(_join(path, "matrix"), f"matrix is {len(m)}x{len(m)}, dimension is {n}")
        return ConstantMatrix(m), {"kind": kind, "matrix": m}
    raise ScenarioError(
        _join(path, "kind"),
        f"unknown projection kind {kind!r} (known: Zero, Identity, ConstantCoordinate, ConstantMatrix)",
    )


def _parse_family(value: Any, n: int) -> tuple[Family, dict]:
    path = "family"
    if not isinstance(value, dict):
        raise ScenarioError(path, "expected an object with a 'type' field")
    ftype = value.get("type")
    if ftype not in FAMILY_MEMBERS:
        raise ScenarioError("family.type", f"unknown family type {ftype!r} (known: triple, pair, quad)")
    labels = FAMILY_MEMBERS[ftype]
    _obj(value, path, ("type",) + labels)
    built, echo = {}, {"type": ftype}
    for lab in labels:
        built[lab], echo[lab] = _parse_projection(value[lab], _join(path, lab), n)
    cls = {"triple": FamilyTriple, "pair": FamilyPair, "quad": FamilyQuad}[ftype]
    return cls(**built), echo


def _parse_constants(value: Any) -> tuple[TrichotomyConstants | NormalizedConstants | None, dict | None]:
    if value is None:
        return None, None
    path = "constants"
    if not isinstance(value, dict):
        raise ScenarioError(path, "expected an object")
    try:
        if "N" in value:
            _obj(value, path, ("N", "nu", "nu0"))
            c = NormalizedConstants(*(_num(value[k], _join(path, k)) for k in ("N", "nu", "nu0")))
        else:
            keys = ("N0", "N1", "N2", "nu0", "nu1", "nu2")
            _obj(value, path, keys)
            c = TrichotomyConstants(*(_num(value[k], _join(path, k)) for k in keys))
    except ValueError as exc:
        raise ScenarioError(path, str(exc)) from exc
    return c, c.to_dict()


def parse_scenario(raw: Any, overrides: dict | None = None) -> Scenario:
    """Build a :class:`Scenario` from its JSON object.

    ``overrides`` maps CLI flags onto fields before validation: ``norm``,
    ``t_max``, ``seed`` and ``tol``.
    """
    raw = copy.deepcopy(raw)
    if not isinstance(raw, dict):
        raise ScenarioError("", "scenario must be a JSON object")
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key == "norm":
            raw["norm"] = val
        elif key in ("t_max", "seed"):
            raw.setdefault("grid", {})
            if not isinstance(raw["grid"], dict):
                raise ScenarioError("grid", "expected an object")
            raw["grid"][key] = val
        elif key == "tol":
            raw.setdefault("tolerances", {})
            if not isinstance(raw["tolerances"], dict):
                raise ScenarioError("tolerances", "expected an object")
            raw["tolerances"]["tol"] = val
        else:
            raise ValueError(f"unknown override {key!r}")
    _obj(raw, "", ("operator", "family"), TOP_LEVEL)

    dimension = None if raw.get("dimension") is None else _int(raw["dimension"], "dimension", 1)
    try:
        norm = NormKind.parse(raw.get("norm", "L2"))
    except ValueError as exc:
        raise ScenarioError("norm", str(exc)) from exc
    grid, grid_echo = _parse_grid(raw.get("grid"))
    op, op_echo = _parse_operator(raw["operator"], grid, dimension)
    n = dimension or op.dimension or 1
    family, fam_echo = _parse_family(raw["family"], n)
    constants, const_echo = _parse_constants(raw.get("constants"))

    tv = _obj(raw.get("tolerances") or {}, "tolerances", (), ("tol", "zero_floor", "n_ceiling"))
    tol = default_tol(op) if tv.get("tol") is None else _num(tv["tol"], "tolerances.tol", nonneg=True)
    zero_floor = _num(tv.get("zero_floor", ZERO_FLOOR), "tolerances.zero_floor", positive=True)
    n_ceiling = _num(tv.get("n_ceiling", DEFAULT_N_CEILING), "tolerances.n_ceiling", positive=True)
    if not n_ceiling > 1:
        raise ScenarioError("tolerances.n_ceiling", "must be > 1")

    if raw.get("nu_grid") is None:
        nu_grid = default_nu_grid()
    else:
        nu_grid = tuple(_num_list(raw["nu_grid"], "nu_grid", positive=True))

    echo = {
        "dimension": n,
        "operator": op_echo,
        "family": fam_echo,
        "norm": norm.value,
        "grid": grid_echo,
        "constants": const_echo,
        "tolerances": {"tol": tol, "zero_floor": zero_floor, "n_ceiling": n_ceiling},
        "nu_grid": list(nu_grid),
    }
    return Scenario(n, op, family, norm, grid, constants, tol, zero_floor, n_ceiling, nu_grid, echo)


def load_scenario(path: str | Path, overrides: dict | None = None) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError("", f"cannot read scenario {path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno} column {exc.colno}", exc.msg) from exc
    return parse_scenario(raw, overrides)
