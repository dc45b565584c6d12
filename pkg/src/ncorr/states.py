"""Truncated Fock-space states used as static correlation providers.

Modes are stored in a tensor-product number basis. The first mode in a
product is the most significant index (``np.kron`` ordering), so the basis
state ``|n_0, n_1>`` sits at flat index ``n_0 * dim_1 + n_1``.

Squeezing convention: ``S(xi) = exp[(conj(xi) a^2 - xi a^dag^2) / 2]`` with
``xi = r exp(i phi)``, giving ``<a^2> = -exp(i phi) sinh(r) cosh(r)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

SQUEEZING_CONVENTION = "S(xi) = exp[(conj(xi) a^2 - xi adag^2)/2], xi = r exp(i phi)"

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-9
EIGENVALUE_TOL = 1e-9


class StateError(ValueError):
    """Invalid state parameters."""


class CutoffExceededError(StateError):
    pass


class TruncationRiskError(StateError):
    """The requested state or moment would be distorted by the Fock cutoff."""


@dataclass(frozen=True)
class ModeCutoff:
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise StateError(f"cutoff dim must be an integer >= 2, got {self.dim!r}")


def _cutoff(c: ModeCutoff | int) -> ModeCutoff:
    return c if isinstance(c, ModeCutoff) else ModeCutoff(int(c))


@dataclass(frozen=True, eq=False)
class TruncatedState:
    """Density matrix of ``mode_count`` modes in a truncated number basis.

    No invariants are enforced here; use :func:`validate`.
    """

    cutoffs: tuple[ModeCutoff, ...]
    rho: np.ndarray = field(repr=False)

    def __post_init__(self):
        cutoffs = tuple(_cutoff(c) for c in self.cutoffs)
        if not cutoffs:
            raise StateError("a state needs at least one mode")
        rho = np.array(self.rho, dtype=complex)
        side = int(np.prod([c.dim for c in cutoffs]))
        if rho.shape != (side, side):
            raise StateError(f"rho has shape {rho.shape}, expected {(side, side)}")
        rho.setflags(write=False)
        object.__setattr__(self, "cutoffs", cutoffs)
        object.__setattr__(self, "rho", rho)

    @property
    def mode_count(self) -> int:
        return len(self.cutoffs)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.dim for c in self.cutoffs)


@dataclass(frozen=True)
class ValidationReport:
    hermiticity_deviation: float
    trace_deviation: float
    min_eigenvalue: float

    @property
    def passed(self) -> bool:
        return (
            self.hermiticity_deviation <= HERMITICITY_TOL
            and self.trace_deviation <= TRACE_TOL
            and self.min_eigenvalue >= -EIGENVALUE_TOL
        )


def validate(state: TruncatedState) -> ValidationReport:
    rho = state.rho
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    trace_dev = float(abs(np.trace(rho) - 1.0))
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    return ValidationReport(herm, trace_dev, min_eig)


def _pure(amplitudes: np.ndarray, cutoff: ModeCutoff) -> TruncatedState:
    psi = amplitudes / np.linalg.norm(amplitudes)
    return TruncatedState((cutoff,), np.outer(psi, psi.conj()))


def make_fock(n: int, cutoff: ModeCutoff | int) -> TruncatedState:
    cutoff = _cutoff(cutoff)
    if n < 0:
        raise StateError(f"photon number must be >= 0, got {n}")
    if n >= cutoff.dim:
        raise CutoffExceededError(f"Fock state |{n}> needs dim > {n}, got dim={cutoff.dim}")
    rho = np.zeros((cutoff.dim, cutoff.dim), dtype=complex)
    rho[n, n] = 1.0
    return TruncatedState((cutoff,), rho)


def make_vacuum(cutoff: ModeCutoff | int) -> TruncatedState:
    return make_fock(0, cutoff)


def make_coherent(alpha: complex, cutoff: ModeCutoff | int) -> TruncatedState:
    cutoff = _cutoff(cutoff)
    alpha = complex(alpha)
    if abs(alpha) ** 2 > cutoff.dim / 4:
        need = int(np.ceil(4 * abs(alpha) ** 2))
        raise TruncationRiskError(
            f"|alpha|^2 = {abs(alpha) ** 2:.4g} is unsafe at dim={cutoff.dim}; need dim >= {need}"
        )
    # c_n = alpha^n / sqrt(n!) by recursion; overall factor fixed by normalisation
    amp = np.empty(cutoff.dim, dtype=complex)
    amp[0] = 1.0
    for n in range(1, cutoff.dim):
        amp[n] = amp[n - 1] * alpha / np.sqrt(n)
    return _pure(amp, cutoff)


def make_thermal(nbar: float, cutoff: ModeCutoff | int) -> TruncatedState:
    cutoff = _cutoff(cutoff)
    if not nbar >= 0:
        raise StateError(f"mean occupation must be >= 0, got {nbar}")
    ratio = nbar / (1.0 + nbar)
    p = ratio ** np.arange(cutoff.dim, dtype=float)
    p /= p.sum()
    return TruncatedState((cutoff,), np.diag(p).astype(complex))


def make_squeezed(r: float, phi: float, cutoff: ModeCutoff | int) -> TruncatedState:
    cutoff = _cutoff(cutoff)
    if not r >= 0:
        raise StateError(f"squeeze magnitude must be >= 0, got {r}")
    if np.sinh(r) ** 2 > cutoff.dim / 8:
        need = int(np.ceil(8 * np.sinh(r) ** 2))
        raise TruncationRiskError(
            f"sinh(r)^2 = {np.sinh(r) ** 2:.4g} is unsafe at dim={cutoff.dim}; need dim >= {need}"
        )
    step = -np.exp(1j * phi) * np.tanh(r)
    amp = np.zeros(cutoff.dim, dtype=complex)
    amp[0] = 1.0
    for k in range(2, cutoff.dim, 2):
        amp[k] = amp[k - 2] * step * np.sqrt(k * (k - 1)) / k
    return _pure(amp, cutoff)


def tensor(states: Sequence[TruncatedState]) -> TruncatedState:
    states = list(states)
    if not states:
        raise ValueError("tensor needs at least one state")
    if len(states) == 1:
        return states[0]
    rho = reduce(np.kron, (s.rho for s in states))
    cutoffs = tuple(c for s in states for c in s.cutoffs)
    return TruncatedState(cutoffs, rho)


def mix(states: Sequence[TruncatedState], weights: Sequence[float]) -> TruncatedState:
    """Classical mixture of states sharing the same cutoffs."""
    states = list(states)
    w = np.asarray(weights, dtype=float)
    if not states or len(states) != len(w):
        raise StateError("mixture needs one weight per state")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise StateError(f"mixture weights must be >= 0 and sum to 1, got {list(w)}")
    dims = states[0].dims
    if any(s.dims != dims for s in states):
        raise StateError("all mixture components must share the same cutoffs")
    rho = sum(wi * s.rho for wi, s in zip(w, states))
    return TruncatedState(states[0].cutoffs, rho)


# ---------------------------------------------------------------- specs

MODE_KINDS = ("vacuum", "fock", "coherent", "thermal", "squeezed")


@dataclass(frozen=True)
class ModeSpec:
    kind: str
    cutoff: int
    alpha: complex = 0j
    n: int = 0
    nbar: float = 0.0
    r: float = 0.0
    phi: float = 0.0

    def build(self) -> TruncatedState:
        if self.kind == "vacuum":
            return make_vacuum(self.cutoff)
        if self.kind == "fock":
            return make_fock(self.n, self.cutoff)
        if self.kind == "coherent":
            return make_coherent(self.alpha, self.cutoff)
        if self.kind == "thermal":
            return make_thermal(self.nbar, self.cutoff)
        if self.kind == "squeezed":
            return make_squeezed(self.r, self.phi, self.cutoff)
        raise StateError(f"unknown mode kind {self.kind!r}")


@dataclass(frozen=True)
class StateSpec:
    """Classical mixture of product states, one ``ModeSpec`` per mode."""

    components: tuple[tuple[float, tuple[ModeSpec, ...]], ...]

    def __post_init__(self):
        if not self.components:
            raise StateError("state spec needs at least one component")
        w = np.array([c[0] for c in self.components], dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise StateError(f"mixture weights must be >= 0 and sum to 1, got {list(w)}")
        counts = {len(modes) for _, modes in self.components}
        if len(counts) != 1 or 0 in counts:
            raise StateError("every mixture component must list the same nonzero number of modes")

    @classmethod
    def product(cls, *modes: ModeSpec) -> "StateSpec":
        return cls(((1.0, tuple(modes)),))

    @property
    def mode_count(self) -> int:
        return len(self.components[0][1])

    def build(self) -> TruncatedState:
        products = [tensor([m.build() for m in modes]) for _, modes in self.components]
        if len(products) == 1:
            return products[0]
        return mix(products, [w for w, _ in self.components])
