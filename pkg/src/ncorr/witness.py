"""Moment-matrix witnesses and the named inequality criteria.

For an operator ``f = sum_c c_{n,m} E-^n E+^m`` over a finite basis of
multi-indices, the ordered expectation of ``f^dag f`` is the quadratic form
``c^dag W c`` with

    W[row (p, q), col (n, m)] = < E-^(n + q) E+^(m + p) >

(exponents added point by point). Any negative principal minor or
eigenvalue of ``W`` certifies nonclassical correlations at the provider's
points. A finite basis only gives a sufficient test, so a clean result is
reported as "no violation found up to degree d".
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .moments import MultiIndex, all_indices

NONCLASSICAL = "nonclassical"
CLASSICAL_CONSISTENT = "classical-consistent"

FLAG_DOMAIN = "domain: negative quantity under square root"
FLAG_TRIVIAL = "trivial: coincident retarded times"

DEFAULT_SUBSET_LIMIT = 200_000


class CorrelationProvider(Protocol):
    k: int
    thread_safe: bool

    def evaluate(self, idx: MultiIndex) -> complex: ...


class ProviderError(RuntimeError):
    def __init__(self, index: MultiIndex, cause: Exception):
        super().__init__(f"provider failed at index {index}: {cause}")
        self.index = index
        self.cause = cause


class CriterionError(ValueError):
    """Exponents or points violate a criterion's constraints."""


@dataclass(frozen=True)
class Tolerances:
    eps_rel: float = 1e-9   # minors and eigenvalues, relative to matrix scale
    eps_abs: float = 1e-9   # inequalities, times max(1, |lhs|, |rhs|)

    def inequality_threshold(self, *values: float) -> float:
        return self.eps_abs * max([1.0] + [abs(v) for v in values if np.isfinite(v)])


DEFAULT_TOLERANCES = Tolerances()


def _evaluate(provider: CorrelationProvider, idx: MultiIndex) -> complex:
    try:
        return complex(provider.evaluate(idx))
    except Exception as exc:  # noqa: BLE001 - re-raised with the index attached
        raise ProviderError(idx, exc) from exc


def index_at(k: int, exps: Mapping[int, tuple[int, int]] | Iterable[tuple[int, tuple[int, int]]]) -> MultiIndex:
    """Build a k-point index from ``{point: (n, m)}``; repeated points add up."""
    items = exps.items() if isinstance(exps, Mapping) else exps
    acc = [[0, 0] for _ in range(k)]
    for point, (n, m) in items:
        if not 0 <= point < k:
            raise CriterionError(f"point label {point} out of range for {k} points")
        acc[point][0] += n
        acc[point][1] += m
    return MultiIndex(tuple(map(tuple, acc)))


# ---------------------------------------------------------------- basis and matrix


@dataclass(frozen=True)
class OperatorBasis:
    entries: tuple[MultiIndex, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise ValueError("basis must not be empty")
        if len(set(entries)) != len(entries):
            raise ValueError("basis entries must be distinct")
        if len({e.k for e in entries}) != 1:
            raise ValueError("basis entries must share the number of points")
        if not entries[0].is_zero():
            raise ValueError("the first basis entry must be the all-zero index")
        object.__setattr__(self, "entries", entries)

    @property
    def k(self) -> int:
        return self.entries[0].k

    def __len__(self):
        return len(self.entries)

    def labels(self) -> list[str]:
        return [str(e) for e in self.entries]


def enumerate_basis(k: int, max_degree: int) -> OperatorBasis:
    if k < 1 or max_degree < 1:
        raise ValueError("k and max_degree must be positive")
    return OperatorBasis(tuple(all_indices(k, max_degree)))


def combine(row: MultiIndex, col: MultiIndex) -> MultiIndex:
    """Index of the matrix entry: creators n+q, annihilators m+p."""
    return MultiIndex(tuple((n + q, m + p) for (p, q), (n, m) in zip(row.pairs, col.pairs)))


@dataclass(frozen=True, eq=False)
class WitnessMatrix:
    basis: OperatorBasis
    entries: np.ndarray = field(repr=False)
    hermiticity_deviation: float = 0.0

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.entries)), initial=0.0))


def build_witness_matrix(provider: CorrelationProvider, basis: OperatorBasis) -> WitnessMatrix:
    if provider.k != basis.k:
        raise ValueError(f"provider has {provider.k} points, basis has {basis.k}")
    cache: dict[MultiIndex, complex] = {}
    size = len(basis)
    raw = np.empty((size, size), dtype=complex)
    for i, row in enumerate(basis.entries):
        for j, col in enumerate(basis.entries):
            idx = combine(row, col)
            if idx not in cache:
                cache[idx] = _evaluate(provider, idx)
            raw[i, j] = cache[idx]
    return _symmetrized(basis, raw)


def _symmetrized(basis: OperatorBasis, raw: np.ndarray) -> WitnessMatrix:
    scale = max(float(np.max(np.abs(raw), initial=0.0)), 1e-300)
    deviation = float(np.max(np.abs(raw - raw.conj().T), initial=0.0)) / scale
    entries = 0.5 * (raw + raw.conj().T)
    entries.setflags(write=False)
    return WitnessMatrix(basis, entries, deviation)


def min_eigenvalue(w: WitnessMatrix | np.ndarray) -> float:
    m = w.entries if isinstance(w, WitnessMatrix) else np.asarray(w)
    m = 0.5 * (m + m.conj().T)
    return float(np.linalg.eigvalsh(m)[0])


def witness_coefficients(w: WitnessMatrix) -> np.ndarray:
    """Eigenvector of the smallest eigenvalue, phase-fixed so its largest entry is real positive."""
    _, vecs = np.linalg.eigh(w.entries)
    v = vecs[:, 0]
    lead = v[np.argmax(np.abs(v))]
    return v * (abs(lead) / lead)


# ---------------------------------------------------------------- minors


@dataclass(frozen=True)
class Minor:
    subset: tuple[int, ...]
    determinant: float
    scale: float

    @property
    def order(self) -> int:
        return len(self.subset)

    @property
    def normalized(self) -> float:
        return self.determinant / self.scale if self.scale > 0 else 0.0


@dataclass(frozen=True)
class MinorReport:
    minors: tuple[Minor, ...]
    min_eigenvalue: float
    norm: float
    eps_rel: float
    max_order: int

    @property
    def negative_minors(self) -> list[Minor]:
        return [mn for mn in self.minors if mn.determinant < -self.eps_rel * mn.scale]

    @property
    def eigenvalue_negative(self) -> bool:
        return self.min_eigenvalue < -self.eps_rel * self.norm

    @property
    def verdict(self) -> str:
        return NONCLASSICAL if self.negative_minors or self.eigenvalue_negative else CLASSICAL_CONSISTENT

    @property
    def margin(self) -> float:
        values = [mn.normalized for mn in self.minors]
        if self.norm > 0:
            values.append(self.min_eigenvalue / self.norm)
        return min(values, default=0.0)


def hermitian_determinant(sub: np.ndarray, scale: float) -> float:
    det = np.linalg.det(sub)
    if abs(det.imag) > 1e-10 * max(scale, 1.0):
        raise ArithmeticError(f"determinant of a Hermitian block has imaginary part {det.imag:.3e}")
    return float(det.real)


def principal_minors(
    w: WitnessMatrix | np.ndarray,
    max_order: int,
    eps_rel: float = DEFAULT_TOLERANCES.eps_rel,
    subset_limit: int = DEFAULT_SUBSET_LIMIT,
) -> MinorReport:
    """Determinants of every principal submatrix of order <= max_order."""
    m = w.entries if isinstance(w, WitnessMatrix) else np.asarray(w, dtype=complex)
    m = 0.5 * (m + m.conj().T)
    side = m.shape[0]
    if not 1 <= max_order <= side:
        raise ValueError(f"max_order must lie in [1, {side}], got {max_order}")
    count = sum(math.comb(side, r) for r in range(1, max_order + 1))
    if count > subset_limit:
        raise ValueError(f"{count} principal minors exceed the limit of {subset_limit}")
    minors = []
    for r in range(1, max_order + 1):
        for subset in itertools.combinations(range(side), r):
            sub = m[np.ix_(subset, subset)]
            scale = float(np.linalg.norm(sub)) ** r
            minors.append(Minor(subset, hermitian_determinant(sub, scale), scale))
    evals = np.linalg.eigvalsh(m)
    norm = float(np.max(np.abs(evals), initial=0.0))
    return MinorReport(tuple(minors), float(evals[0]), norm, eps_rel, max_order)


# ---------------------------------------------------------------- criteria


@dataclass(frozen=True)
class CriterionResult:
    """One evaluated inequality.

    ``relation`` is ``">"`` (violated when lhs > rhs + threshold) or ``"<"``
    (violated when lhs < rhs - threshold). When a factor under a square root
    is negative, ``rhs`` is ``None`` and ``radicand_factors`` carries the
    values that triggered the domain flag.
    """

    criterion: str
    lhs: float
    rhs: float | None
    relation: str
    threshold: float
    violated: bool
    inputs: dict
    flags: tuple[str, ...] = ()
    radicand_factors: tuple[float, ...] = ()

    @property
    def verdict(self) -> str:
        return NONCLASSICAL if self.violated else CLASSICAL_CONSISTENT


def _real(value: complex) -> float:
    return float(value.real)


def _flags(provider, labels: Iterable[int]) -> tuple[str, ...]:
    coincident = getattr(provider, "coincident", None)
    if coincident is not None and coincident(labels):
        return (FLAG_TRIVIAL,)
    return ()


def _sqrt_criterion(name, lhs, factors, inputs, flags, tol) -> CriterionResult:
    """``lhs > sqrt(prod(factors))`` with the negative-radicand short circuit."""
    factors = tuple(float(f) for f in factors)
    negative = [f for f in factors if f < -tol.inequality_threshold(f)]
    if negative:
        return CriterionResult(
            name, lhs, None, ">", tol.inequality_threshold(lhs), True, inputs,
            flags + (FLAG_DOMAIN,), factors,
        )
    rhs = math.sqrt(max(math.prod(factors), 0.0))
    threshold = tol.inequality_threshold(lhs, rhs)
    return CriterionResult(name, lhs, rhs, ">", threshold, lhs > rhs + threshold, inputs, flags, factors)


def recompute_violation(result: Mapping) -> bool:
    """Re-derive ``violated`` from a serialised result's lhs/rhs/threshold fields."""
    flags = result.get("flags", ())
    if FLAG_DOMAIN in flags:
        factors = result["radicand_factors"]
        return any(f < -result["eps_abs"] * max(1.0, abs(f)) for f in factors)
    if result["relation"] == ">":
        return result["lhs"] > result["rhs"] + result["threshold"]
    return result["lhs"] < result["rhs"] - result["threshold"]


def check_second_order(
    provider: CorrelationProvider,
    idx_a: MultiIndex,
    idx_b: MultiIndex,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> CriterionResult:
    """2x2 minor over basis elements A = (n, m) and B = (p, q).

    lhs = |<E-^(n+q) E+^(m+p)>|^2, rhs = <I^(n+m)> <I^(p+q)>.
    """
    if idx_a.k != provider.k or idx_b.k != provider.k:
        raise CriterionError("indices must have one pair per provider point")
    cross = _evaluate(provider, combine(idx_b, idx_a))
    diag_a = _real(_evaluate(provider, combine(idx_a, idx_a)))
    diag_b = _real(_evaluate(provider, combine(idx_b, idx_b)))
    lhs = abs(cross) ** 2
    rhs = diag_a * diag_b
    threshold = tol.inequality_threshold(lhs, rhs)
    labels = [i for i, (x, y) in enumerate(zip(idx_a.pairs, idx_b.pairs)) if x != (0, 0) or y != (0, 0)]
    inputs = {"a": idx_a.to_list(), "b": idx_b.to_list()}
    return CriterionResult(
        "second_order", lhs, rhs, ">", threshold, lhs > rhs + threshold, inputs,
        _flags(provider, labels), (diag_a, diag_b),
    )


def third_order_matrix(provider: CorrelationProvider, m: int, n: int, p: int, points: Sequence[int]) -> np.ndarray:
    """The 3x3 block for ``f = c1 E+(1)^m + c2 E-(2)^n + c3 :I(3)^p:``, row by row."""
    a, b, c = points
    k = provider.k

    def ev(*terms):
        return _evaluate(provider, index_at(k, terms))

    return np.array([
        [ev((a, (m, m))), ev((a, (m, 0)), (b, (n, 0))), ev((a, (m, 0)), (c, (p, p)))],
        [ev((a, (0, m)), (b, (0, n))), ev((b, (n, n))), ev((c, (p, p)), (b, (0, n)))],
        [ev((a, (0, m)), (c, (p, p))), ev((c, (p, p)), (b, (n, 0))), ev((c, (2 * p, 2 * p)))],
    ])


def check_third_order_minor(
    provider: CorrelationProvider,
    m: int,
    n: int,
    p: int,
    points: Sequence[int] = (0, 1, 2),
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> CriterionResult:
    if min(m, n, p) < 1:
        raise CriterionError("exponents m, n, p must be positive")
    if len(points) != 3:
        raise CriterionError("third-order minor needs exactly three point labels")
    block = third_order_matrix(provider, m, n, p, points)
    scale = float(np.linalg.norm(block)) ** 3
    det = hermitian_determinant(block, scale)
    threshold = tol.eps_rel * scale
    inputs = {"m": m, "n": n, "p": p, "points": list(points)}
    return CriterionResult(
        "third_order_minor", det, 0.0, "<", threshold, det < -threshold, inputs,
        _flags(provider, points),
    )


def check_higher_order_intensity(
    provider: CorrelationProvider,
    N: int,
    M: int,
    n: int,
    m: int,
    point1: int = 0,
    point2: int = 1,
    tol: Tolerances = DEFAULT_TOLERANCES,
    name: str = "higher_order_intensity",
) -> CriterionResult:
    """<I1^N I2^M> > sqrt(<I1^2(N-n) I2^2(M-m)> <I1^2n I2^2m>)."""
    if not (N >= n >= 0 and M >= m >= 0):
        raise CriterionError(f"need N >= n >= 0 and M >= m >= 0, got N={N} n={n} M={M} m={m}")
    if N + M < 1:
        raise CriterionError("need N + M >= 1")
    if point1 == point2:
        raise CriterionError("the two points must be distinct labels")
    k = provider.k

    def intensity(e1, e2):
        return _evaluate(provider, index_at(k, {point1: (e1, e1), point2: (e2, e2)}))

    lhs = abs(intensity(N, M))
    factors = (_real(intensity(2 * (N - n), 2 * (M - m))), _real(intensity(2 * n, 2 * m)))
    inputs = {"N": N, "M": M, "n": n, "m": m, "points": [point1, point2]}
    return _sqrt_criterion(name, lhs, factors, inputs, _flags(provider, (point1, point2)), tol)


def check_antibunching(
    provider: CorrelationProvider,
    point1: int = 0,
    point2: int = 1,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> CriterionResult:
    """<I1 I2> > sqrt(<:I1^2:> <:I2^2:>)."""
    return check_higher_order_intensity(provider, 1, 1, 0, 1, point1, point2, tol, name="antibunching")


# ---------------------------------------------------------------- field strength


class PhaseShifted:
    """Provider with ``E+(i) -> exp(i theta_i) E+(i)`` at selected points."""

    thread_safe = True

    def __init__(self, provider: CorrelationProvider, phases: Mapping[int, float]):
        self.inner = provider
        self.phases = dict(phases)
        self.thread_safe = getattr(provider, "thread_safe", False)

    @property
    def k(self) -> int:
        return self.inner.k

    def evaluate(self, idx: MultiIndex) -> complex:
        angle = sum(theta * (idx.pairs[i][1] - idx.pairs[i][0]) for i, theta in self.phases.items())
        return self.inner.evaluate(idx) * np.exp(1j * angle)

    def coincident(self, labels) -> bool:
        inner = getattr(self.inner, "coincident", None)
        return bool(inner and inner(labels))


def full_field_moment(
    provider: CorrelationProvider,
    point: int,
    power: int,
    others: Mapping[int, tuple[int, int]] | None = None,
) -> complex:
    """Ordered moment of ``E(point)^power`` times other factors, ``E = E- + E+``."""
    total = 0j
    for j in range(power + 1):
        terms = list((others or {}).items()) + [(point, (j, power - j))]
        total += math.comb(power, j) * _evaluate(provider, index_at(provider.k, terms))
    return total


def field_variance(provider: CorrelationProvider, point: int = 0) -> float:
    """Normally ordered variance ``<:E^2:> - <E>^2`` of the full field at one point."""
    mean = full_field_moment(provider, point, 1)
    return float((full_field_moment(provider, point, 2) - mean**2).real)


def optimal_phase(provider: CorrelationProvider, point: int = 0) -> float:
    """Phase of ``E+`` that minimises :func:`field_variance` at ``point``."""
    k = provider.k
    mean = _evaluate(provider, index_at(k, {point: (0, 1)}))
    c = _evaluate(provider, index_at(k, {point: (0, 2)})) - mean**2
    if abs(c) == 0:
        return 0.0
    return float((np.pi - np.angle(c)) / 2)


FIELD_INTENSITY_VARIANTS = ("general", "lowest", "alternate", "full_field", "multipoint")


def check_field_intensity(
    provider: CorrelationProvider,
    variant: str,
    points: Sequence[int] = (0, 1),
    exponents: Sequence[tuple[int, int]] | None = None,
    l: int | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> CriterionResult:
    """Field-strength / intensity correlation criteria.

    ``general``: ``exponents[i] = (p_i, m_i)`` per listed point,
    |<prod E-(i)^p_i I(i)^m_i>| > sqrt(<prod I(i)^(2 m_i + p_i)>).
    ``lowest``: |<E-(1) I(2)>| > sqrt(<I(1) I(2)^2>).
    ``alternate``: |<E-(1) I(2)>| > sqrt(<I(1)> <:I(2)^2:>).
    ``full_field``: |<E(1) I(2)>| > sqrt(<:E(1)^2:> <:I(2)^2:>).
    ``multipoint``: with ``l`` of the k listed points carrying E-, the rest I,
    |<E-(1)..E-(l) I(l+1)..I(k)>| > sqrt(<I(1)..I(l) I(l+1)^2..I(k)^2>), 1 < l < k.
    """
    k = provider.k
    points = list(points)
    if variant == "general":
        if exponents is None or len(exponents) != len(points):
            raise CriterionError("general variant needs one (p, m) pair per point")
        exps = [tuple(map(int, e)) for e in exponents]
        if any(p < 0 or m < 0 for p, m in exps):
            raise CriterionError("general variant needs p_i >= 0 and m_i >= 0 (so n_i = m_i + p_i)")
        return _general(provider, "field_intensity/general", points, exps, tol)
    if variant == "lowest":
        _two_points(points)
        return _general(provider, "field_intensity/lowest", points, [(1, 0), (0, 1)], tol)
    if variant == "multipoint":
        if l is None or not 1 < l < len(points):
            raise CriterionError(f"multipoint variant needs 1 < l < k, got l={l}, k={len(points)}")
        exps = [(1, 0)] * l + [(0, 1)] * (len(points) - l)
        result = _general(provider, "field_intensity/multipoint", points, exps, tol)
        result.inputs["l"] = l
        return result
    if variant == "alternate":
        a, b = _two_points(points)
        lhs = abs(_evaluate(provider, index_at(k, {a: (1, 0), b: (1, 1)})))
        factors = (
            _real(_evaluate(provider, index_at(k, {a: (1, 1)}))),
            _real(_evaluate(provider, index_at(k, {b: (2, 2)}))),
        )
        return _sqrt_criterion("field_intensity/alternate", lhs, factors, {"points": points},
                               _flags(provider, points), tol)
    if variant == "full_field":
        a, b = _two_points(points)
        lhs = abs(full_field_moment(provider, a, 1, {b: (1, 1)}))
        factors = (
            _real(full_field_moment(provider, a, 2)),
            _real(_evaluate(provider, index_at(k, {b: (2, 2)}))),
        )
        return _sqrt_criterion("field_intensity/full_field", lhs, factors, {"points": points},
                               _flags(provider, points), tol)
    raise CriterionError(f"unknown variant {variant!r}; expected one of {FIELD_INTENSITY_VARIANTS}")


def _two_points(points) -> tuple[int, int]:
    if len(points) != 2 or points[0] == points[1]:
        raise CriterionError("this variant needs two distinct point labels")
    return points[0], points[1]


def _general(provider, name, points, exps, tol) -> CriterionResult:
    k = provider.k
    cross = index_at(k, [(pt, (p + m, m)) for pt, (p, m) in zip(points, exps)])
    diag = index_at(k, [(pt, (2 * m + p, 2 * m + p)) for pt, (p, m) in zip(points, exps)])
    lhs = abs(_evaluate(provider, cross))
    factors = (_real(_evaluate(provider, diag)),)
    inputs = {"points": points, "exponents": [list(e) for e in exps]}
    return _sqrt_criterion(name, lhs, factors, inputs, _flags(provider, points), tol)
