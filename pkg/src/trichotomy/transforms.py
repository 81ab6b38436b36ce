"""The four family constructions linking the three-, two- and four-projection
characterizations of trichotomy.

Each transform returns the target family tuple with a :class:`TransformRecord`
attached as ``provenance``. The record holds the sampled check of the
algebraic identity the construction relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    NormalizedConstants,
    verify_pair_conditions,
    verify_quad_conditions,
    verify_trichotomy,
)
from .errors import IncompatibleFamilyError
from .grid import SampleGrid
from .norms import NormKind
from .operators import EvolutionOperator
from .projections import (
    Combination,
    Composition,
    Family,
    FamilyPair,
    FamilyQuad,
    FamilyTriple,
    _context,
    _report,
    _vector_identity,
    check_compat,
    complement,
    infer_dimension,
    materialize,
)
from .report import ComplianceReport

CONSTRUCTIONS = ("triple->pair", "pair->triple", "triple->quad", "quad->triple")

_CONSTANT_NOTES = {
    "triple->pair": "(N, nu, nu0) carry over unchanged; (t3')/(t4') follow from (c3), (c4), (t2)-(t4)",
    "pair->triple": "(N, nu, nu0) carry over unchanged; (t3)/(t4) use P0 = (I-Q1)(I-Q2) = (I-Q2)(I-Q1)",
    "triple->quad": "(N, nu, nu0) carry over unchanged; R3 = P0+P2 and R4 = P0+P1",
    "quad->triple": "(N, nu, nu0) carry over unchanged; P0 = R3R4",
}


@dataclass
class TransformRecord:
    construction: str
    source: dict
    target: dict
    constant_note: str
    checks: ComplianceReport | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "construction": self.construction,
            "source": self.source,
            "target": self.target,
            "constant_note": self.constant_note,
            "checks": None if self.checks is None else self.checks.to_dict(),
        }


def family_spec(fam: Family, dimension: int | None = None) -> dict:
    """Scenario-file form of a family tuple. With a known dimension, lazy
    members that are constant and linear are materialized first; anything
    left without a scenario form is recorded by name only."""
    out: dict = {"type": fam.arity}
    for label, p in fam.members():
        q = p if dimension is None else materialize(p, dimension)
        out[label] = q.spec() or {"kind": "Unserializable", "name": q.name}
    return out


def _refuse_if_incompatible(fam, op, norm, grid, tol, dimension):
    if op is None:
        return dimension
    dimension = dimension or op.dimension
    rep = check_compat(fam, op, norm=norm, grid=grid, tol=tol, dimension=dimension)
    if not rep.passed:
        raise IncompatibleFamilyError(f"source {fam.arity} is not compatible with the operator", rep)
    return dimension


def _finish(construction, source, target, identities, grid, tol, dimension, materialize_output):
    members = source.members() + target.members()
    n = dimension or infer_dimension([p for _, p in members])
    if materialize_output and dimension is None:
        raise ValueError("materializing a transform needs the state dimension (pass op or dimension)")
    ctx = _context(grid, NormKind.L2, 1e-12 if tol is None else tol, n)
    checks = _report(
        f"identities[{construction}]",
        ctx,
        [_vector_identity(ctx, name, sides) for name, sides in identities],
    )
    if not checks.passed:
        raise IncompatibleFamilyError(f"{construction}: construction identities fail on the grid", checks)
    if materialize_output:
        kw = {lab: materialize(p, n) for lab, p in target.members()}
        target = type(target)(**kw)
    target.provenance = TransformRecord(
        construction,
        family_spec(source, dimension),
        family_spec(target, dimension),
        _CONSTANT_NOTES[construction],
        checks,
    )
    return target


def triple_to_pair(
    fam: FamilyTriple,
    op: EvolutionOperator | None = None,
    norm: NormKind | str = NormKind.L2,
    grid: SampleGrid | None = None,
    tol: float | None = None,
    dimension: int | None = None,
    materialize_output: bool = False,
) -> FamilyPair:
    """``(Q1, Q2) = (P1, P2)``. With ``op`` the source is checked first."""
    dimension = _refuse_if_incompatible(fam, op, norm, grid, tol, dimension)
    target = FamilyPair(fam.P1, fam.P2)
    identities = [
        # the center part the pair leaves implicit must be P0
        ("I-Q1-Q2=P0", lambda t, x: (x - fam.P1.apply(t, x) - fam.P2.apply(t, x), fam.P0.apply(t, x))),
    ]
    return _finish("triple->pair", fam, target, identities, grid, tol, dimension, materialize_output)


def pair_to_triple(
    fam: FamilyPair,
    op: EvolutionOperator | None = None,
    norm: NormKind | str = NormKind.L2,
    grid: SampleGrid | None = None,
    tol: float | None = None,
    dimension: int | None = None,
    materialize_output: bool = False,
) -> FamilyTriple:
    """``(I - Q1 - Q2, Q1, Q2)``, after confirming that ``I - Q1 - Q2``
    agrees with both products ``(I-Q1)(I-Q2)`` and ``(I-Q2)(I-Q1)``."""
    dimension = _refuse_if_incompatible(fam, op, norm, grid, tol, dimension)
    q1, q2 = fam.Q1, fam.Q2
    p0 = Combination(1.0, ((-1.0, q1), (-1.0, q2)))
    target = FamilyTriple(p0, q1, q2)
    c1, c2 = complement(q1), complement(q2)
    identities = [
        ("P0=(I-Q1)(I-Q2)", lambda t, x: (p0.apply(t, x), c1.apply(t, c2.apply(t, x)))),
        ("P0=(I-Q2)(I-Q1)", lambda t, x: (p0.apply(t, x), c2.apply(t, c1.apply(t, x)))),
    ]
    return _finish("pair->triple", fam, target, identities, grid, tol, dimension, materialize_output)


def triple_to_quad(
    fam: FamilyTriple,
    op: EvolutionOperator | None = None,
    norm: NormKind | str = NormKind.L2,
    grid: SampleGrid | None = None,
    tol: float | None = None,
    dimension: int | None = None,
    materialize_output: bool = False,
) -> FamilyQuad:
    """``(P1, P2, I - P1, I - P2)``; checks ``R3R4 = R4R3 = P0``."""
    dimension = _refuse_if_incompatible(fam, op, norm, grid, tol, dimension)
    r3, r4 = complement(fam.P1), complement(fam.P2)
    target = FamilyQuad(fam.P1, fam.P2, r3, r4)
    identities = [
        ("R3R4=P0", lambda t, x: (r3.apply(t, r4.apply(t, x)), fam.P0.apply(t, x))),
        ("R4R3=P0", lambda t, x: (r4.apply(t, r3.apply(t, x)), fam.P0.apply(t, x))),
    ]
    return _finish("triple->quad", fam, target, identities, grid, tol, dimension, materialize_output)


def quad_to_triple(
    fam: FamilyQuad,
    op: EvolutionOperator | None = None,
    norm: NormKind | str = NormKind.L2,
    grid: SampleGrid | None = None,
    tol: float | None = None,
    dimension: int | None = None,
    materialize_output: bool = False,
) -> FamilyTriple:
    """``(R3R4, R1, R2)``; checks the orthogonality ``P0P1 = P0P2 = P1P2 = 0``
    the construction produces."""
    dimension = _refuse_if_incompatible(fam, op, norm, grid, tol, dimension)
    p0 = Composition((fam.R3, fam.R4))
    target = FamilyTriple(p0, fam.R1, fam.R2)
    zero = np.zeros_like
    identities = [
        ("P0P1=0", lambda t, x: (p0.apply(t, fam.R1.apply(t, x)), zero(x))),
        ("P0P2=0", lambda t, x: (p0.apply(t, fam.R2.apply(t, x)), zero(x))),
        ("P1P2=0", lambda t, x: (fam.R1.apply(t, fam.R2.apply(t, x)), zero(x))),
    ]
    return _finish("quad->triple", fam, target, identities, grid, tol, dimension, materialize_output)


TRANSFORMS = {
    "triple->pair": (FamilyTriple, triple_to_pair),
    "pair->triple": (FamilyPair, pair_to_triple),
    "triple->quad": (FamilyTriple, triple_to_quad),
    "quad->triple": (FamilyQuad, quad_to_triple),
}


def convert(construction: str, fam: Family, **kwargs) -> Family:
    if construction not in TRANSFORMS:
        raise ValueError(f"unknown construction {construction!r}; expected one of {', '.join(CONSTRUCTIONS)}")
    source_type, fn = TRANSFORMS[construction]
    if not isinstance(fam, source_type):
        raise TypeError(f"{construction} needs a {source_type.arity} family, got a {fam.arity}")
    return fn(fam, **kwargs)


def verify_family(op: EvolutionOperator, fam: Family, c: NormalizedConstants, **kwargs) -> ComplianceReport:
    """The inequality system matching the arity of ``fam``."""
    if isinstance(fam, FamilyTriple):
        return verify_trichotomy(op, fam, c, **kwargs)
    if isinstance(fam, FamilyPair):
        return verify_pair_conditions(op, fam, c, **kwargs)
    return verify_quad_conditions(op, fam, c, **kwargs)


@dataclass
class TransportResult:
    construction: str
    constants: NormalizedConstants
    source: ComplianceReport
    target: ComplianceReport
    family: Family | None = field(default=None, compare=False, repr=False)

    @property
    def consistent(self) -> bool:
        """Certification of the source carries over to the target."""
        return (not self.source.passed) or self.target.passed

    def to_dict(self) -> dict:
        return {
            "construction": self.construction,
            "constants": self.constants.to_dict(),
            "source_passed": self.source.passed,
            "target_passed": self.target.passed,
            "consistent": self.consistent,
        }


def verify_transport(
    op: EvolutionOperator,
    fam: Family,
    construction: str,
    c: NormalizedConstants,
    **kwargs,
) -> TransportResult:
    """Verify ``fam`` and its image under ``construction`` with identical constants.

    The source is checked for compatibility by the transform itself; the
    image is checked again by its own verifier.
    """
    kwargs.pop("check", None)
    target = convert(construction, fam, op=op, **{k: v for k, v in kwargs.items() if k in ("norm", "grid", "tol", "dimension")})
    return TransportResult(
        construction,
        c,
        verify_family(op, fam, c, check=False, **kwargs),
        verify_family(op, target, c, **kwargs),
        target,
    )
