"""Built-in scenarios.

``DEMO_FIXTURES`` are the scalar quotients for ``f = 1``, ``e^{-t}``, ``e^{t}``
and the three-coordinate diagonal operator with ``phi(t) = 1 + e^{-t}``; each
is expected to certify with the constants it carries. ``NEGATIVE_CONTROL`` has
a center part growing like ``e^{t^2}`` and must be rejected.
``EXTRA_FIXTURES`` widen the test catalog beyond the demo.
"""

from __future__ import annotations

import copy

import numpy as np

_COORD = lambda *idx: {"kind": "ConstantCoordinate", "indices": list(idx)}  # noqa: E731
_ZERO = {"kind": "Zero"}
_IDENTITY = {"kind": "Identity"}
_NORMALIZED = lambda n, nu, nu0: {"N": n, "nu": nu, "nu0": nu0}  # noqa: E731


def _triple(p0, p1, p2):
    return {"type": "triple", "P0": p0, "P1": p1, "P2": p2}


DEMO_FIXTURES: dict[str, dict] = {
    "f0": {
        "dimension": 1,
        "operator": {"kind": "ScalarQuotient", "f": {"name": "one"}},
        "family": _triple(_IDENTITY, _ZERO, _ZERO),
        "constants": _NORMALIZED(1.01, 1.0, 1.0),
    },
    "f1": {
        "dimension": 1,
        "operator": {"kind": "ScalarQuotient", "f": {"name": "exp", "rate": -1.0}},
        "family": _triple(_ZERO, _IDENTITY, _ZERO),
        "constants": _NORMALIZED(1.01, 1.0, 1.0),
    },
    "f2": {
        "dimension": 1,
        "operator": {"kind": "ScalarQuotient", "f": {"name": "exp", "rate": 1.0}},
        "family": _triple(_ZERO, _ZERO, _IDENTITY),
        "constants": _NORMALIZED(1.01, 1.0, 1.0),
    },
    "diagonal": {
        "dimension": 3,
        "operator": {
            "kind": "DiagonalIntegrand",
            "rules": [
                {"rule": "IntegralOfPhi", "sign": "-", "phi": {"name": "shifted_exp", "limit": 1.0, "amplitude": 1.0, "decay": 1.0}},
                {"rule": "IntegralOfPhi", "sign": "+", "phi": {"name": "shifted_exp", "limit": 1.0, "amplitude": 1.0, "decay": 1.0}},
                {"rule": "LinearRate", "rate": -2.0},
            ],
        },
        # center = third coordinate, stable = first, unstable = second
        "family": _triple(_COORD(3), _COORD(1), _COORD(2)),
        "constants": _NORMALIZED(1.01, 1.0, 2.0),
    },
}

NEGATIVE_CONTROL: dict = {
    "dimension": 1,
    "operator": {"kind": "ScalarQuotient", "f": {"name": "exp_square", "coefficient": 1.0}},
    "family": _triple(_IDENTITY, _ZERO, _ZERO),
    "grid": {"horizon": True},
    "constants": _NORMALIZED(1e6, 1.0, 2.0),
}


def _rotated_generator() -> list[list[float]]:
    theta = 0.3
    c, s = np.cos(theta), np.sin(theta)
    q = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    return (q @ np.diag([-1.5, 0.75, 0.25]) @ q.T).tolist()


def _rotated_projection(i: int) -> dict:
    theta = 0.3
    c, s = np.cos(theta), np.sin(theta)
    q = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    v = q[:, i]
    return {"kind": "ConstantMatrix", "matrix": np.outer(v, v).tolist()}


EXTRA_FIXTURES: dict[str, dict] = {
    "dichotomy": {
        "dimension": 2,
        "operator": {"kind": "DiagonalIntegrand", "rules": [{"rule": "LinearRate", "rate": -1.0}, {"rule": "LinearRate", "rate": 1.0}]},
        "family": _triple(_ZERO, _COORD(1), _COORD(2)),
        "constants": _NORMALIZED(1.01, 1.0, 1.0),
    },
    "rotated": {
        "dimension": 3,
        "operator": {"kind": "SemigroupInduced", "S": {"name": "matrix_exp", "generator": _rotated_generator()}},
        "family": _triple(_rotated_projection(2), _rotated_projection(0), _rotated_projection(1)),
        "constants": _NORMALIZED(1.01, 0.75, 0.25),
    },
    "semigroup_decay": {
        "dimension": 1,
        "operator": {"kind": "SemigroupInduced", "S": {"name": "scalar_exp", "rate": -1.0}},
        "family": _triple(_ZERO, _IDENTITY, _ZERO),
        "constants": _NORMALIZED(1.01, 1.0, 1.0),
    },
}


def fixture(name: str) -> dict:
    """Deep copy of a built-in scenario by name."""
    for table in (DEMO_FIXTURES, EXTRA_FIXTURES, {"negative_control": NEGATIVE_CONTROL}):
        if name in table:
            return copy.deepcopy(table[name])
    raise KeyError(name)


def certified_fixtures() -> dict[str, dict]:
    return {k: copy.deepcopy(v) for k, v in {**DEMO_FIXTURES, **EXTRA_FIXTURES}.items()}
