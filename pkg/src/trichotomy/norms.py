from __future__ import annotations

import enum
import math

import numpy as np


class NormKind(str, enum.Enum):
    L1 = "L1"
    L2 = "L2"
    LInf = "LInf"

    def __call__(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float).reshape(-1)
        if self is NormKind.L1:
            return float(np.abs(x).sum())
        if self is NormKind.L2:
            with np.errstate(over="ignore", under="ignore"):
                sq = float(x @ x)
            if 1e-290 < sq < math.inf:
                return math.sqrt(sq)
            # tiny or huge entries: rescale so the squares stay representable
            m = float(np.abs(x).max()) if x.size else 0.0
            if m == 0.0 or not math.isfinite(m):
                return m
            return m * math.sqrt(float((x / m) @ (x / m)))
        return float(np.abs(x).max()) if x.size else 0.0

    def columns(self, x: np.ndarray) -> np.ndarray:
        """Norm of every column of an ``(n, k)`` array."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return np.array([self(x)])
        a = np.abs(x)
        if self is NormKind.L1:
            return a.sum(axis=0)
        if x.shape[0] == 0:
            return np.zeros(x.shape[1])
        m = a.max(axis=0)
        if self is NormKind.LInf:
            return m
        # scale by the largest entry so squares cannot overflow or underflow
        safe = np.where(m > 0, m, 1.0)
        return m * np.sqrt(((a / safe) ** 2).sum(axis=0))

    @classmethod
    def parse(cls, value: "str | NormKind") -> "NormKind":
        if isinstance(value, NormKind):
            return value
        for kind in cls:
            if kind.value.lower() == str(value).lower():
                return kind
        raise ValueError(f"unknown norm {value!r}; expected one of L1, L2, LInf")
