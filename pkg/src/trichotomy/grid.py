"""Time samples and test vectors used to discretize "for all t >= s >= t0 >= 0"."""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

DEFAULT_T0 = (0.0, 1.0, 2.5, 5.0)
DEFAULT_OFFSETS = (0.0, 0.25, 1.0, 2.5, 5.0)
DEFAULT_T_MAX = 10.0
DEFAULT_RANDOM_VECTORS = 8
DEFAULT_SEED = 1729


class TimePair(NamedTuple):
    t: float
    t0: float

    def validate(self) -> "TimePair":
        if not (self.t >= self.t0 >= 0.0):
            raise ValueError(f"time pair must satisfy t >= t0 >= 0, got {self}")
        return self


class TimeTriple(NamedTuple):
    t: float
    s: float
    t0: float

    @property
    def spread(self) -> float:
        return self.t - self.s

    def validate(self) -> "TimeTriple":
        if not (self.t >= self.s >= self.t0 >= 0.0):
            raise ValueError(f"time triple must satisfy t >= s >= t0 >= 0, got {self}")
        return self


@dataclass(frozen=True)
class SampleGrid:
    """Finite sample of time triples and test vectors.

    Triples are every ``(t0 + a + b, t0 + a, t0)`` with ``a`` from
    ``s_offsets`` and ``b`` from ``t_offsets`` that stays within ``t_max``.
    ``horizon=True`` additionally samples ``t = t_max`` for every ``(s, t0)``
    already present, which is what exposes super-exponential growth.

    Vectors are the standard basis, the pairwise sums ``e_i + e_j`` (when
    ``pair_sums``), and ``random_vectors`` L2-unit vectors drawn from
    ``seed``. ``custom_vectors`` replaces all of these.
    """

    t0s: tuple[float, ...] = DEFAULT_T0
    s_offsets: tuple[float, ...] = DEFAULT_OFFSETS
    t_offsets: tuple[float, ...] = DEFAULT_OFFSETS
    t_max: float = DEFAULT_T_MAX
    random_vectors: int = DEFAULT_RANDOM_VECTORS
    seed: int = DEFAULT_SEED
    pair_sums: bool = True
    horizon: bool = False
    custom_vectors: tuple[tuple[str, tuple[float, ...]], ...] | None = field(
        default=None, compare=True
    )

    def __post_init__(self):
        for name in ("t0s", "s_offsets", "t_offsets"):
            vals = tuple(float(v) for v in getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must be nonempty")
            if any(v < 0 or not np.isfinite(v) for v in vals):
                raise ValueError(f"{name} must hold finite nonnegative reals")
            object.__setattr__(self, name, vals)
        if not (np.isfinite(self.t_max) and self.t_max >= 0):
            raise ValueError("t_max must be a finite nonnegative real")
        if self.random_vectors < 0:
            raise ValueError("random_vectors must be >= 0")

    def with_(self, **changes) -> "SampleGrid":
        return replace(self, **changes)

    def triples(self) -> tuple[TimeTriple, ...]:
        return _triples(self)

    def times(self) -> tuple[float, ...]:
        return tuple(sorted({v for tr in self.triples() for v in tr}))

    def pairs(self) -> tuple[TimePair, ...]:
        """Every (t, t0) pair that some sampled triple produces, sorted."""
        found = set()
        for tr in self.triples():
            found.update({(tr.t, tr.t0), (tr.s, tr.t0), (tr.t, tr.s)})
        return tuple(TimePair(*p) for p in sorted(found))

    def max_spread(self) -> float:
        return max(tr.spread for tr in self.triples())

    def vectors(self, n: int) -> tuple[tuple[str, np.ndarray], ...]:
        return _vectors(self, n)

    def vector_batch(self, n: int) -> tuple[tuple[str, ...], np.ndarray]:
        """Vector ids and the ``(n, k)`` matrix holding the vectors as columns."""
        return _vector_batch(self, n)

    def to_dict(self) -> dict:
        d = {
            "t0": list(self.t0s),
            "s_offsets": list(self.s_offsets),
            "t_offsets": list(self.t_offsets),
            "t_max": self.t_max,
            "vectors": self.random_vectors,
            "seed": self.seed,
            "pair_sums": self.pair_sums,
            "horizon": self.horizon,
        }
        if self.custom_vectors is not None:
            d["custom_vectors"] = {k: list(v) for k, v in self.custom_vectors}
        return d


@functools.lru_cache(maxsize=64)
def _triples(grid: SampleGrid) -> tuple[TimeTriple, ...]:
    out: list[TimeTriple] = []
    seen: set[TimeTriple] = set()

    def add(tr: TimeTriple) -> None:
        if tr not in seen:
            seen.add(tr)
            out.append(tr)

    for t0 in grid.t0s:
        for a in grid.s_offsets:
            s = t0 + a
            if s > grid.t_max:
                continue
            for b in grid.t_offsets:
                t = s + b
                if t <= grid.t_max:
                    add(TimeTriple(t, s, t0))
            if grid.horizon:
                add(TimeTriple(grid.t_max, s, t0))
    if not out:
        raise ValueError("sample grid produced no time triples within t_max")
    return tuple(out)


@functools.lru_cache(maxsize=64)
def _vectors(grid: SampleGrid, n: int) -> tuple[tuple[str, np.ndarray], ...]:
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if grid.custom_vectors is not None:
        out = []
        for name, coords in grid.custom_vectors:
            v = np.array(coords, dtype=float)
            if v.shape != (n,):
                raise ValueError(f"custom vector {name!r} has length {v.size}, expected {n}")
            v.setflags(write=False)
            out.append((name, v))
        return tuple(out)

    out = []
    eye = np.eye(n)
    for i in range(n):
        out.append((f"e{i + 1}", eye[i].copy()))
    if grid.pair_sums:
        for i, j in itertools.combinations(range(n), 2):
            out.append((f"e{i + 1}+e{j + 1}", eye[i] + eye[j]))
    rng = np.random.default_rng(grid.seed)
    for k in range(grid.random_vectors):
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        out.append((f"r{k + 1}", v))
    for _, v in out:
        v.setflags(write=False)
    return tuple(out)


@functools.lru_cache(maxsize=64)
def _vector_batch(grid: SampleGrid, n: int) -> tuple[tuple[str, ...], np.ndarray]:
    vecs = _vectors(grid, n)
    x = np.stack([v for _, v in vecs], axis=1) if vecs else np.zeros((n, 0))
    x.setflags(write=False)
    return tuple(vid for vid, _ in vecs), x
