"""Normally ordered moments of truncated states.

A :class:`MultiIndex` holds one ``(n, m)`` pair per point: ``n`` powers of the
negative-frequency field (creator) and ``m`` of the positive-frequency field
(annihilator). For prepared states each point is a mode and the field at a
point is that mode's annihilator with unit prefactor.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Iterable, Sequence

import numpy as np

from .states import TruncatedState, TruncationRiskError


@dataclass(frozen=True)
class MultiIndex:
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pairs = tuple((int(n), int(m)) for n, m in self.pairs)
        if not pairs:
            raise ValueError("a multi-index needs at least one point")
        if any(n < 0 or m < 0 for n, m in pairs):
            raise ValueError(f"exponents must be nonnegative, got {pairs}")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def of(cls, *pairs: tuple[int, int]) -> "MultiIndex":
        return cls(tuple(pairs))

    @classmethod
    def zero(cls, k: int) -> "MultiIndex":
        return cls(((0, 0),) * k)

    @property
    def k(self) -> int:
        return len(self.pairs)

    @property
    def degree(self) -> int:
        return sum(n + m for n, m in self.pairs)

    def swapped(self) -> "MultiIndex":
        """Index of the Hermitian conjugate correlation."""
        return MultiIndex(tuple((m, n) for n, m in self.pairs))

    def is_zero(self) -> bool:
        return all(n == 0 and m == 0 for n, m in self.pairs)

    def flat(self) -> tuple[int, ...]:
        return tuple(e for pair in self.pairs for e in pair)

    def sort_key(self) -> tuple:
        """Graded-lexicographic key: lower degree first, then larger leading exponents."""
        return (self.degree, tuple(-e for e in self.flat()))

    def __str__(self):
        return "(" + ",".join(f"{n}{m}" for n, m in self.pairs) + ")"

    def to_list(self) -> list[list[int]]:
        return [[n, m] for n, m in self.pairs]


def all_indices(k: int, max_degree: int) -> list[MultiIndex]:
    """Every k-point index with total degree <= max_degree, graded-lex ordered."""
    out = []
    for flat in itertools.product(range(max_degree + 1), repeat=2 * k):
        if sum(flat) <= max_degree:
            out.append(MultiIndex(tuple(zip(flat[0::2], flat[1::2]))))
    return sorted(out, key=MultiIndex.sort_key)


@lru_cache(maxsize=None)
def annihilator(dim: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def normal_monomial(dim: int, n: int, m: int) -> np.ndarray:
    """Truncated matrix of ``adag^n a^m``."""
    a = annihilator(dim)
    op = np.linalg.matrix_power(a.T, n) @ np.linalg.matrix_power(a, m)
    op.setflags(write=False)
    return op


def _check_bounds(dims: Sequence[int], idx: MultiIndex) -> None:
    if idx.k != len(dims):
        raise ValueError(f"index has {idx.k} points but the state has {len(dims)} modes")
    for mode, ((n, m), dim) in enumerate(zip(idx.pairs, dims)):
        if 2 * (n + m) > dim:
            raise TruncationRiskError(
                f"exponents ({n},{m}) on mode {mode} need dim >= {2 * (n + m)}, got {dim}"
            )


def _raw_moment(state: TruncatedState, idx: MultiIndex) -> complex:
    op = reduce(np.kron, (normal_monomial(d, n, m) for d, (n, m) in zip(state.dims, idx.pairs)))
    # tr(rho op) without forming the product
    return complex(np.sum(state.rho * op.T))


def normally_ordered_moment(state: TruncatedState, idx: MultiIndex) -> complex:
    """``tr(rho prod_i adag_i^n_i prod_i a_i^m_i)``.

    Conjugate indices share one computation, so swapping all pairs returns
    the exact complex conjugate.
    """
    _check_bounds(state.dims, idx)
    swapped = idx.swapped()
    if swapped == idx:
        return complex(_raw_moment(state, idx).real)
    if swapped.flat() < idx.flat():
        return _raw_moment(state, swapped).conjugate()
    return _raw_moment(state, idx)


def moment_table(state: TruncatedState, max_degree: int) -> dict[MultiIndex, complex]:
    """All moments of total degree <= 2*max_degree, as needed by a witness matrix."""
    if max_degree < 1:
        raise ValueError("max_degree must be positive")
    table: dict[MultiIndex, complex] = {}
    for idx in all_indices(state.mode_count, 2 * max_degree):
        if idx in table:
            continue
        value = normally_ordered_moment(state, idx)
        table[idx] = value
        table[idx.swapped()] = value.conjugate()
    return table


class StateProvider:
    """Correlation provider over a prepared state.

    ``point_modes[i]`` is the mode observed at point ``i``; several points
    may share a mode, in which case their exponents add (operators on one
    mode commute among creators and among annihilators).
    """

    thread_safe = True

    def __init__(self, state: TruncatedState, point_modes: Iterable[int] | None = None):
        self.state = state
        modes = tuple(range(state.mode_count)) if point_modes is None else tuple(point_modes)
        if not modes:
            raise ValueError("provider needs at least one point")
        for mode in modes:
            if not 0 <= mode < state.mode_count:
                raise ValueError(f"point mapped to mode {mode}, state has {state.mode_count} modes")
        self.point_modes = modes

    @property
    def k(self) -> int:
        return len(self.point_modes)

    def mode_index(self, idx: MultiIndex) -> MultiIndex:
        if idx.k != self.k:
            raise ValueError(f"index has {idx.k} points, provider has {self.k}")
        acc = [[0, 0] for _ in range(self.state.mode_count)]
        for mode, (n, m) in zip(self.point_modes, idx.pairs):
            acc[mode][0] += n
            acc[mode][1] += m
        return MultiIndex(tuple(map(tuple, acc)))

    def evaluate(self, idx: MultiIndex) -> complex:
        return normally_ordered_moment(self.state, self.mode_index(idx))

    def coincident(self, labels: Iterable[int]) -> bool:
        return False
