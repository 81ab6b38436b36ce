import json
from pathlib import Path

import pytest

from trichotomy.analysis import DEFAULT_N_CEILING, ZERO_FLOOR, NormalizedConstants, TrichotomyConstants, default_nu_grid
from trichotomy.catalog import certified_fixtures, fixture
from trichotomy.errors import ScenarioError
from trichotomy.grid import DEFAULT_SEED
from trichotomy.norms import NormKind
from trichotomy.operators import default_tol
from trichotomy.projections import FamilyPair, FamilyQuad
from trichotomy.scenario import load_scenario, parse_scenario

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def with_(base, path, value):
    """Copy of ``base`` with the dotted ``path`` set (``None`` deletes)."""
    raw = json.loads(json.dumps(base))
    keys = path.split(".")
    node = raw
    for k in keys[:-1]:
        node = node[int(k)] if isinstance(node, list) else node[k]
    last = keys[-1]
    if isinstance(node, list):
        node[int(last)] = value
    elif value is None:
        del node[last]
    else:
        node[last] = value
    return raw


def error_path(raw, overrides=None):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(raw, overrides)
    return info.value.path


class TestErrors:
    base = fixture("diagonal")

    @pytest.mark.parametrize(
        "path, value, expected",
        [
            ("colour", "red", "colour"),
            ("operator.extra", 1, "operator.extra"),
            ("operator.kind", "Mystery", "operator.kind"),
            ("operator.rules.0.rule", "Cubic", "operator.rules[0].rule"),
            ("operator.rules.0.sign", "*", "operator.rules[0].sign"),
            ("operator.rules.2.rate", "fast", "operator.rules[2].rate"),
            ("operator.rules.1.phi.name", "nope", "operator.rules[1].phi.name"),
            ("operator.rules.1.phi.decay", -1.0, "operator.rules[1].phi"),
            ("family.type", "quint", "family.type"),
            ("family.P1.kind", "Shear", "family.P1.kind"),
            ("family.P1.indices", [4], "family.P1.indices"),
            ("family.P2.indices", [0], "family.P2.indices[0]"),
            ("family.P0", None, "family.P0"),
            ("norm", "L7", "norm"),
            ("grid", {"t_max": -1}, "grid.t_max"),
            ("grid", {"vectors": 1.5}, "grid.vectors"),
            ("grid", {"horizon": "yes"}, "grid.horizon"),
            ("grid", {"t0": []}, "grid.t0"),
            ("constants", {"N": 1.0, "nu": 1, "nu0": 1}, "constants"),
            ("constants", {"N": 2, "nu": 1}, "constants.nu0"),
            ("constants", {"N": 2, "nu": 1, "nu0": 1, "N0": 3}, "constants.N0"),
            ("tolerances", {"tol": -1}, "tolerances.tol"),
            ("tolerances", {"n_ceiling": 0.5}, "tolerances.n_ceiling"),
            ("tolerances", {"eps": 1}, "tolerances.eps"),
            ("nu_grid", [1, 0], "nu_grid[1]"),
            ("dimension", 2, "operator.rules"),
            ("dimension", True, "dimension"),
        ],
    )
    def test_field_path(self, path, value, expected):
        assert error_path(with_(self.base, path, value)) == expected

    def test_missing_operator(self):
        assert error_path(with_(self.base, "operator", None)) == "operator"

    def test_not_an_object(self):
        assert error_path([1, 2]) == ""

    def test_vanishing_f(self):
        raw = {"dimension": 1, "operator": {"kind": "ScalarQuotient", "f": {"name": "exp", "rate": -1.0}}, "family": {"type": "pair", "Q1": {"kind": "Zero"}, "Q2": {"kind": "Zero"}}}
        parse_scenario(raw)
        raw["operator"]["f"] = {"name": "exp"}
        assert error_path(raw) == "operator.f.rate"

    def test_semigroup_law(self):
        raw = fixture("rotated")
        raw["operator"]["S"]["generator"] = [[0.0, 1.0], [0.0, 0.0]]
        assert error_path(raw) == "operator.S.generator"

    def test_matrix_not_square(self):
        raw = fixture("rotated")
        raw["family"]["P0"]["matrix"] = [[1.0, 0.0], [0.0]]
        assert error_path(raw) == "family.P0.matrix"

    def test_json_syntax_reports_line_and_column(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{\n  "dimension": 1,\n  "operator": oops\n}\n')
        with pytest.raises(ScenarioError) as info:
            load_scenario(p)
        assert info.value.path == "line 3 column 15"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="cannot read"):
            load_scenario(tmp_path / "absent.json")


class TestEcho:
    def test_defaults_resolved(self):
        sc = parse_scenario(fixture("f1"))
        e = sc.echo
        assert set(e) == {"dimension", "operator", "family", "norm", "grid", "constants", "tolerances", "nu_grid"}
        assert e["norm"] == "L2"
        assert e["grid"]["t_max"] == 10.0 and e["grid"]["seed"] == DEFAULT_SEED
        assert e["tolerances"] == {"tol": default_tol(sc.operator), "zero_floor": ZERO_FLOOR, "n_ceiling": DEFAULT_N_CEILING}
        assert e["nu_grid"] == list(default_nu_grid())
        assert e["operator"]["f"] == {"name": "exp", "rate": -1.0}

    @pytest.mark.parametrize("name", sorted(certified_fixtures()) + ["negative_control"])
    def test_echo_is_a_fixed_point(self, name):
        echo = parse_scenario(fixture(name)).echo
        again = parse_scenario(json.loads(json.dumps(echo))).echo
        assert again == echo

    def test_phi_defaults_filled(self):
        raw = fixture("diagonal")
        raw["operator"]["rules"][0]["phi"] = {"name": "shifted_exp"}
        phi = parse_scenario(raw).echo["operator"]["rules"][0]["phi"]
        assert phi == {"name": "shifted_exp", "limit": 1.0, "amplitude": 1.0, "decay": 1.0}

    def test_full_constants(self):
        raw = with_(fixture("f1"), "constants", {"N0": 2, "N1": 3, "N2": 1.5, "nu0": 1, "nu1": 0.5, "nu2": 0.7})
        sc = parse_scenario(raw)
        assert isinstance(sc.constants, TrichotomyConstants)
        assert sc.normalized_constants() == NormalizedConstants(3, 0.5, 1)

    def test_no_constants(self):
        sc = parse_scenario(with_(fixture("f1"), "constants", None))
        assert sc.constants is None and sc.echo["constants"] is None and sc.normalized_constants() is None


class TestOverrides:
    def test_applied(self):
        sc = parse_scenario(fixture("diagonal"), {"norm": "L1", "t_max": 20, "seed": 7, "tol": 1e-6})
        assert sc.norm is NormKind.L1 and sc.grid.t_max == 20 and sc.grid.seed == 7 and sc.tol == 1e-6

    def test_none_ignored(self):
        assert parse_scenario(fixture("diagonal"), {"norm": None}).norm is NormKind.L2

    def test_unknown(self):
        with pytest.raises(ValueError):
            parse_scenario(fixture("diagonal"), {"colour": "red"})

    def test_invalid_value_named(self):
        assert error_path(fixture("diagonal"), {"t_max": -3}) == "grid.t_max"

    def test_input_not_mutated(self):
        raw = fixture("diagonal")
        parse_scenario(raw, {"t_max": 20})
        assert "grid" not in raw


class TestShippedScenarios:
    @pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.stem)
    def test_loads(self, path):
        assert load_scenario(path).dimension >= 1

    def test_pair_and_quad_files(self):
        assert isinstance(load_scenario(SCENARIOS / "diagonal_pair.json").family, FamilyPair)
        assert isinstance(load_scenario(SCENARIOS / "diagonal_quad.json").family, FamilyQuad)

    def test_catalog_files_match(self):
        for name in ("diagonal", "negative_control", "dichotomy", "rotated"):
            assert json.loads((SCENARIOS / f"{name}.json").read_text()) == fixture(name)
