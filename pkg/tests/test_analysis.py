import math

import numpy as np
import pytest

from trichotomy.analysis import (
    N_FLOOR,
    NormalizedConstants,
    TrichotomyConstants,
    classify,
    default_nu_grid,
    estimate_envelope,
    normalize_constants,
    triple_envelopes,
    verify_pair_conditions,
    verify_quad_conditions,
    verify_trichotomy,
)
from trichotomy.errors import IncompatibleFamilyError
from trichotomy.grid import SampleGrid
from trichotomy.operators import (
    DiagonalIntegrand,
    LinearRate,
    diagonal_example_operator,
    make_scalar_quotient,
    scalar_exp,
    scalar_exp_square,
)
from trichotomy.projections import ConstantCoordinate as C
from trichotomy.projections import FamilyPair, FamilyQuad, FamilyTriple, Identity, Zero
from trichotomy.transforms import triple_to_pair, triple_to_quad

DIAG = FamilyTriple(C([3]), C([1]), C([2]))
DIAG_C = NormalizedConstants(1.01, 1.0, 2.0)
DECAY = make_scalar_quotient(scalar_exp(-1.0))
SQUARE = make_scalar_quotient(scalar_exp_square())
HORIZON = SampleGrid(horizon=True)

# Closed-form corner values of (t - s)(t + s - nu0) on the horizon grids; the
# grid maximum sits at s = 1 (see the ledger for why it is 81, not 80).
CENTER_LOGN_T10 = 81.0
CENTER_LOGN_T20 = 361.0


class TestConstants:
    def test_normalize(self):
        c = normalize_constants(TrichotomyConstants(2, 3, 1.5, 1.0, 0.5, 0.7))
        assert (c.N, c.nu, c.nu0) == (3, 0.5, 1.0)

    def test_normalize_equal(self):
        c = normalize_constants(TrichotomyConstants(4, 4, 4, 0.3, 0.2, 0.2))
        assert (c.N, c.nu) == (4, 0.2)

    def test_normalize_mixed_rates(self):
        c = normalize_constants(TrichotomyConstants(1.01, 1.01, 1.01, 2, 1, 2))
        assert (c.N, c.nu) == (1.01, 1)

    @pytest.mark.parametrize("args", [(1.0, 1, 1), (2, 0, 1), (2, 1, 0), (2, -1, 1)])
    def test_invalid_normalized(self, args):
        with pytest.raises(ValueError):
            NormalizedConstants(*args)

    def test_invalid_full(self):
        with pytest.raises(ValueError):
            TrichotomyConstants(1.0, 2, 2, 1, 1, 1)

    def test_expand(self):
        c = DIAG_C.expand()
        assert (c.N0, c.N1, c.N2, c.nu0, c.nu1, c.nu2) == (1.01, 1.01, 1.01, 2.0, 1.0, 1.0)


class TestVerifyTrichotomy:
    def test_diagonal(self):
        rep = verify_trichotomy(diagonal_example_operator(), DIAG, DIAG_C)
        assert rep.passed
        for e in rep.entries:
            assert not e.vacuous and e.worst_margin >= 0
        # tight at d = 0: the margin is exactly log N
        assert rep.entry("t1").worst_margin == pytest.approx(math.log(1.01), abs=1e-12)

    def test_reading_and_constants_recorded(self):
        rep = verify_trichotomy(diagonal_example_operator(), DIAG, DIAG_C)
        assert "t2" in rep.notes["readings"]
        assert rep.notes["constants"]["nu0"] == 2.0

    def test_dichotomy_reduction(self):
        fam = FamilyTriple(Zero(), Identity(), Zero())
        rep = verify_trichotomy(DECAY, fam, TrichotomyConstants(1.01, 1.01, 1.01, 1, 1, 1))
        assert rep.passed
        assert [e.vacuous for e in rep.entries] == [False, True, True, True]

    def test_negative_control_fails_t4(self):
        rep = verify_trichotomy(SQUARE, FamilyTriple(Identity(), Zero(), Zero()), NormalizedConstants(1e6, 1, 2), grid=HORIZON)
        e = rep.entry("t4")
        assert not e.passed
        assert e.witness == {"t": 10.0, "s": 1.0, "t0": 0.0, "vector": "e1"}
        assert math.log(e.lhs) - math.log(e.rhs) == pytest.approx(CENTER_LOGN_T10 - math.log(1e6), rel=1e-12)

    def test_incompatible_refused(self):
        with pytest.raises(IncompatibleFamilyError) as info:
            verify_trichotomy(diagonal_example_operator(), DIAG, DIAG_C, norm="L1")
        assert not info.value.report.passed

    def test_check_can_be_skipped(self):
        rep = verify_trichotomy(diagonal_example_operator(), DIAG, DIAG_C, norm="L1", check=False)
        assert rep.passed  # the inequalities themselves hold coordinatewise

    def test_rate_too_fast_fails(self):
        rep = verify_trichotomy(diagonal_example_operator(), DIAG, NormalizedConstants(1.01, 1.5, 2.0))
        assert not rep.entry("t1").passed and not rep.entry("t2").passed
        assert rep.entry("t3").passed and rep.entry("t4").passed


class TestVerifyPair:
    def test_from_diagonal(self):
        rep = verify_pair_conditions(diagonal_example_operator(), triple_to_pair(DIAG), DIAG_C)
        assert rep.passed and [e.condition for e in rep.entries] == ["t1'", "t2'", "t3'", "t4'"]

    def test_stable_identity(self):
        rep = verify_pair_conditions(DECAY, FamilyPair(Identity(), Zero()), NormalizedConstants(1.01, 1, 0.3))
        assert rep.passed
        assert rep.entry("t3'").vacuous

    def test_rate_violation(self):
        rep = verify_pair_conditions(DECAY, FamilyPair(Identity(), Zero()), NormalizedConstants(1.01, 1.5, 1))
        e = rep.entry("t1'")
        assert not e.passed
        assert e.lhs / e.rhs == pytest.approx(math.exp(0.5 * 5) / 1.01, rel=1e-12)


class TestVerifyQuad:
    def test_from_diagonal(self):
        assert verify_quad_conditions(diagonal_example_operator(), triple_to_quad(DIAG), DIAG_C).passed

    def test_stable_identity(self):
        fam = FamilyQuad(Identity(), Zero(), Zero(), Identity())
        rep = verify_quad_conditions(DECAY, fam, NormalizedConstants(1.01, 1, 1))
        assert rep.passed and rep.entry("t3''").vacuous

    def test_growing_center(self):
        fam = FamilyQuad(Zero(), Zero(), Identity(), Identity())
        rep = verify_quad_conditions(SQUARE, fam, NormalizedConstants(1e6, 1, 2), grid=HORIZON)
        e = rep.entry("t4''")
        assert not e.passed and e.witness == {"t": 10.0, "s": 1.0, "t0": 0.0, "vector": "e1"}


class TestEnvelope:
    def test_decay_exact(self):
        env = estimate_envelope(DECAY, Identity(), "decay", nu_grid=[0.5, 1.0, 1.5])
        d_max = SampleGrid().max_spread()
        assert d_max == 5.0
        assert abs(env.log_n(1.0)) <= 1e-9
        assert env.log_n(1.5) == pytest.approx(0.5 * d_max, abs=1e-9)
        assert env.log_n(0.5) == 0.0  # attained at d = 0

    def test_monotone_on_default_nu_grid(self):
        env = estimate_envelope(DECAY, Identity(), "decay")
        vals = [p.log_n for p in env.points]
        assert len(vals) == len(default_nu_grid())
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_diagonal_stable_coordinate(self):
        env = estimate_envelope(diagonal_example_operator(), C([1]), "decay", nu_grid=[1.0])
        assert env.log_n(1.0) == 0.0
        assert env.points[0].certified_n == N_FLOOR

    def test_center_upper_for_square(self):
        env = estimate_envelope(SQUARE, Identity(), "center-upper", grid=HORIZON, nu_grid=[2.0, 8.0])
        assert env.log_n(2.0) == pytest.approx(CENTER_LOGN_T10, rel=1e-12)
        assert env.log_n(8.0) > math.log(1e6)
        assert env.point(2.0).witness["t"] == 10.0

    def test_feasible_rate(self):
        env = estimate_envelope(DECAY, Identity(), "decay")
        assert env.feasible_rate(0.0, 1e-3, 8) == pytest.approx(1.0, abs=1e-12)
        assert env.feasible_rate(2.5, 1e-3, 8) == pytest.approx(1.5, abs=1e-12)

    def test_unknown_direction(self):
        with pytest.raises(ValueError):
            estimate_envelope(DECAY, Identity(), "sideways")

    def test_vacuous(self):
        envs = triple_envelopes(DECAY, FamilyTriple(Zero(), Zero(), Zero()))
        assert all(e.vacuous for e in envs)
        assert envs[0].csv_rows() == []

    def test_csv_rows(self):
        env = estimate_envelope(DECAY, Identity(), "decay", nu_grid=[1.0])
        assert env.csv_rows() == [["decay", 1.0, 0.0, 0.0, 0.0, 0.0, "e1"]]

    def test_rhs_zero_blocks_every_rate(self):
        # nonlinear "collapse" makes the rhs vanish while the lhs does not
        from trichotomy.operators import UserSupplied

        op = UserSupplied(lambda t, t0, x: x * (1.0 if t != t0 + 1.0 else 0.0), dimension=1)
        env = estimate_envelope(op, Identity(), "growth", nu_grid=[1.0])
        assert env.log_n(1.0) == math.inf
        assert env.feasible_rate(10.0, 1e-3, 8) is None


class TestClassify:
    def test_diagonal(self):
        cl = classify(diagonal_example_operator(), DIAG)
        assert cl.verdict == "trichotomic-evidence"
        assert cl.constants.nu == pytest.approx(1.0, abs=1e-3)
        assert cl.constants.nu0 == pytest.approx(2.0, abs=1e-12)
        assert cl.constants.N == N_FLOOR

    def test_dichotomy(self):
        cl = classify(DECAY, FamilyTriple(Zero(), Identity(), Zero()))
        assert cl.verdict == "dichotomic-evidence"
        assert cl.constants.nu == pytest.approx(1.0, abs=1e-12)

    def test_negative_control(self):
        cl = classify(SQUARE, FamilyTriple(Identity(), Zero(), Zero()), grid=HORIZON)
        assert cl.verdict == "no-evidence"
        assert cl.blocking == "center-upper"
        assert cl.witness["t"] == 10.0 and cl.required_log_n > math.log(1e6)

    def test_vacuous(self):
        assert classify(DECAY, FamilyTriple(Zero(), Zero(), Zero()), check=False).verdict == "vacuous"

    def test_refuses_incompatible(self):
        with pytest.raises(IncompatibleFamilyError):
            classify(diagonal_example_operator(), DIAG, norm="L1")

    def test_certified_constants_verify(self):
        op = DiagonalIntegrand([LinearRate(-0.7), LinearRate(0.4), LinearRate(0.1)])
        fam = DIAG
        cl = classify(op, fam)
        assert cl.verdict == "trichotomic-evidence"
        assert cl.constants.nu == pytest.approx(0.4, abs=1e-12)
        assert cl.constants.nu0 == pytest.approx(0.1, abs=1e-12)
        assert verify_trichotomy(op, fam, cl.constants).passed

    def test_to_dict(self):
        d = classify(DECAY, FamilyTriple(Zero(), Identity(), Zero())).to_dict()
        assert d["verdict"] == "dichotomic-evidence" and "not a proof" in d["note"]


def test_workers_give_identical_reports():
    a = verify_trichotomy(diagonal_example_operator(), DIAG, DIAG_C, workers=1)
    b = verify_trichotomy(diagonal_example_operator(), DIAG, DIAG_C, workers=8)
    assert a.to_dict() == b.to_dict()


def test_default_nu_grid_contains_round_rates():
    g = default_nu_grid()
    assert g[0] == 1e-3 and g[-1] == 8.0
    assert {0.5, 1.0, 1.5, 2.0} <= set(g)
    assert list(g) == sorted(set(g))
    assert np.all(np.diff(g) > 0)
