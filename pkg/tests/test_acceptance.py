"""Acceptance criteria. Each test prints one PASS/FAIL line (visible even
without ``-s``) and enforces its runtime budget."""

import contextlib
import math
import time

import pytest

from trichotomy.analysis import (
    NormalizedConstants,
    estimate_envelope,
    verify_pair_conditions,
    verify_trichotomy,
)
from trichotomy.catalog import NEGATIVE_CONTROL, certified_fixtures, fixture
from trichotomy.cli import cmd_demo
from trichotomy.grid import SampleGrid
from trichotomy.operators import (
    UserSupplied,
    check_evolution_property,
    diagonal_example_operator,
    make_scalar_quotient,
    scalar_exp,
)
from trichotomy.projections import (
    ConstantCoordinate,
    FamilyPair,
    FamilyTriple,
    Identity,
    Zero,
    check_compat3,
    max_pointwise_difference,
)
from trichotomy.scenario import parse_scenario
from trichotomy.transforms import convert, verify_family

DIAG = FamilyTriple(ConstantCoordinate([3]), ConstantCoordinate([1]), ConstantCoordinate([2]))


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def run(number, title, budget=None):
        start = time.perf_counter()
        status = "FAIL"
        try:
            yield
            elapsed = time.perf_counter() - start
            if budget is not None:
                assert elapsed < budget, f"took {elapsed:.2f}s, budget {budget}s"
            status = "PASS"
        finally:
            elapsed = time.perf_counter() - start
            with capsys.disabled():
                print(f"\n[criterion {number}] {status}  {title}  ({elapsed:.2f}s)")

    return run


def test_criterion_1_evolution_property(criterion):
    with criterion(1, "catalog operators satisfy the composition law; non-example rejected", budget=2.0):
        names = sorted(certified_fixtures()) + ["negative_control"]
        for name in names:
            sc = parse_scenario(fixture(name))
            rep = check_evolution_property(sc.operator, sc.grid, sc.tol, sc.norm, sc.dimension)
            assert rep.passed, name
            assert rep.entry("evolution").residual <= 1e-10, name
        bad = UserSupplied(lambda t, t0, x: x * math.exp(t * t0), dimension=1, linear=True)
        rep = check_evolution_property(bad)
        ev = rep.entry("evolution")
        assert not rep.passed and ev.residual > 0 and ev.witness is not None


def test_criterion_2_compatibility_detection(criterion):
    with criterion(2, "coordinate triple compatible under L2, c3 fails under L1 (4 vs 2)", budget=1.0):
        op = diagonal_example_operator()
        l2 = check_compat3(DIAG, op, norm="L2")
        assert l2.passed and max(e.residual for e in l2.entries) <= 1e-12
        l1 = check_compat3(DIAG, op, norm="L1")
        e = l1.entry("c3[P1,P2]")
        assert not e.passed
        assert e.witness["vector"] == "e1+e2"  # the vector (1, 1, 0)
        assert (e.lhs, e.rhs) == (4.0, 2.0)


def test_criterion_3_fixture_verification(criterion):
    with criterion(3, "diagonal fixture verifies with N=1.01, nu=1, nu0=2", budget=2.0):
        rep = verify_trichotomy(diagonal_example_operator(), DIAG, NormalizedConstants(1.01, 1.0, 2.0))
        assert rep.passed
        assert all(e.worst_margin >= 0 for e in rep.entries if not e.vacuous)


def test_criterion_4_envelope_exactness(criterion):
    with criterion(4, "scalar decay envelope: logN(1)=0, logN(1.5)=0.5*d_max, monotone"):
        op = make_scalar_quotient(scalar_exp(-1.0))
        grid = SampleGrid()
        env = estimate_envelope(op, Identity(), "decay", grid=grid)
        d_max = grid.max_spread()
        assert abs(env.log_n(1.0)) <= 1e-9
        assert abs(env.log_n(1.5) - 0.5 * d_max) <= 1e-9
        vals = [p.log_n for p in env.points]
        assert all(b >= a for a, b in zip(vals, vals[1:]))


ROUTES = [("triple->pair", "pair->triple"), ("triple->quad", "quad->triple")]


def test_criterion_5_equivalence_suite(criterion):
    with criterion(5, "pair and quad constructions transport certification both ways", budget=5.0):
        for name, raw in sorted(certified_fixtures().items()):
            sc = parse_scenario(raw)
            c = sc.normalized_constants()
            kw = {"norm": sc.norm, "grid": sc.grid, "tol": sc.tol, "dimension": sc.dimension}
            assert verify_trichotomy(sc.operator, sc.family, c, **kw).passed, name
            for there, back in ROUTES:
                mid = convert(there, sc.family, op=sc.operator, materialize_output=True, **kw)
                assert verify_family(sc.operator, mid, c, **kw).passed, (name, there)
                out = convert(back, mid, op=sc.operator, materialize_output=True, **kw)
                assert verify_family(sc.operator, out, c, **kw).passed, (name, back)
                assert max_pointwise_difference(sc.family, out, sc.grid, sc.dimension) <= 1e-12, (name, there)


# Closed form: log of the center ratio is (t - s)(t + s - nu0). The grid corner
# maximizing it is t = t_max, s = 1 (s = 0 gives t_max * (t_max - nu0)).
def test_criterion_6_negative_control(criterion):
    with criterion(6, "e^{t^2} center fails for all nu0 <= 8, N <= 1e6; logN(2) >= 80 / >= 360"):
        sc = parse_scenario(NEGATIVE_CONTROL)
        p0 = sc.family.P0
        env = estimate_envelope(sc.operator, p0, "center-upper", grid=sc.grid, nu_grid=[2.0, 8.0])
        assert env.log_n(2.0) >= 80
        # the envelope is nonincreasing in nu0, so this covers every nu0 <= 8
        assert env.log_n(8.0) > math.log(1e6)
        for nu0 in (0.5, 1.0, 2.0, 4.0, 8.0):
            for n in (1.01, 10.0, 1e3, 1e6):
                rep = verify_trichotomy(sc.operator, sc.family, NormalizedConstants(n, 1.0, nu0), grid=sc.grid)
                assert not rep.passed and not rep.entry("t4").passed
        long = parse_scenario(NEGATIVE_CONTROL, {"t_max": 20})
        env20 = estimate_envelope(long.operator, p0, "center-upper", grid=long.grid, nu_grid=[2.0])
        assert env20.log_n(2.0) >= 360


DICHOTOMY_CASES = [
    ("decay", make_scalar_quotient(scalar_exp(-1.0)), FamilyTriple(Zero(), Identity(), Zero())),
    ("growth", make_scalar_quotient(scalar_exp(1.0)), FamilyTriple(Zero(), Zero(), Identity())),
    ("split", parse_scenario(fixture("dichotomy")).operator, parse_scenario(fixture("dichotomy")).family),
]


def test_criterion_7_dichotomy_reduction(criterion):
    with criterion(7, "P0 = 0: t3/t4 vacuous, t1/t2 match the pair-only run"):
        for label, op, fam in DICHOTOMY_CASES:
            assert isinstance(fam.P0, Zero)
            for c in (NormalizedConstants(1.01, 1.0, 1.0), NormalizedConstants(1.01, 1.5, 1.0), NormalizedConstants(2.0, 0.5, 1.0)):
                tri = verify_trichotomy(op, fam, c)
                pair = verify_pair_conditions(op, FamilyPair(fam.P1, fam.P2), c)
                assert tri.entry("t3").vacuous and tri.entry("t4").vacuous, label
                for a, b in (("t1", "t1'"), ("t2", "t2'")):
                    assert tri.entry(a).passed == pair.entry(b).passed, (label, c, a)
                    assert tri.entry(a).vacuous == pair.entry(b).vacuous, (label, c, a)


def _stable(doc):
    doc.duration_s = 0.0
    return doc.to_json()


def test_criterion_8_determinism(criterion):
    with criterion(8, "demo reports identical across runs and across 1 vs 8 workers"):
        first = _stable(cmd_demo(workers=1))
        assert _stable(cmd_demo(workers=1)) == first
        assert _stable(cmd_demo(workers=8)) == first
