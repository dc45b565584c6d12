"""Resonance fluorescence of a driven two-level atom.

Conventions (time unit 1/gamma):

* basis ``[|g>, |e>]``, ``sigma_minus = |g><e|``;
* ``H = -(rabi/2)(sigma_plus + sigma_minus) + detuning * sigma_plus sigma_minus``;
* single collapse operator ``sqrt(gamma) sigma_minus``;
* column-stacking vectorisation, ``vec(A X B) = (B^T kron A) vec(X)``;
* source field ``E+(r, t) -> sigma_minus(t - r)`` with unit prefactor.

Multi-time correlations follow the quantum regression theorem: events are
swept in ascending retarded time starting from the steady state, each
positive-frequency factor multiplies ``sigma_minus`` from the left and each
negative-frequency factor multiplies ``sigma_plus`` from the right, so later
times end up innermost.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .moments import MultiIndex

HAMILTONIAN_CONVENTION = "H = -(rabi/2)(sp + sm) + detuning sp sm; collapse sqrt(gamma) sm; E+(r,t) -> sm(t - r)"

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.T.copy()
EXCITED = np.array([[0, 0], [0, 1]], dtype=complex)
GROUND = np.array([[1, 0], [0, 0]], dtype=complex)

for _m in (SIGMA_MINUS, SIGMA_PLUS, EXCITED, GROUND):
    _m.setflags(write=False)

# times closer than this are treated as coincident
TIME_RESOLUTION = 1e-12
# fall back to expm when the eigenbasis is this ill-conditioned (near exceptional points)
MAX_EIGENBASIS_CONDITION = 1e8


@dataclass(frozen=True)
class AtomParams:
    rabi: float = 1.0
    detuning: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not self.rabi >= 0:
            raise ValueError(f"rabi must be >= 0, got {self.rabi}")
        if not np.isfinite(self.detuning):
            raise ValueError("detuning must be finite")


@dataclass(frozen=True)
class SpaceTimePoint:
    t: float
    r: float = 0.0

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError(f"distance must be >= 0, got {self.r}")
        if not np.isfinite(self.t - self.r):
            raise ValueError("retarded time must be finite")

    def retarded(self) -> float:
        return self.t - self.r


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    return np.asarray(v).reshape(2, 2, order="F")


def hamiltonian(params: AtomParams) -> np.ndarray:
    return -0.5 * params.rabi * (SIGMA_PLUS + SIGMA_MINUS) + params.detuning * EXCITED


def liouvillian(params: AtomParams) -> np.ndarray:
    h = hamiltonian(params)
    c = np.sqrt(params.gamma) * SIGMA_MINUS
    eye = np.eye(2)
    cdc = c.conj().T @ c
    lv = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    lv += np.kron(c.conj(), c) - 0.5 * np.kron(eye, cdc) - 0.5 * np.kron(cdc.T, eye)
    return lv


class Propagator:
    """``exp(L dt)`` from a one-off eigendecomposition of the 4x4 generator."""

    def __init__(self, params: AtomParams):
        self.params = params
        self.generator = liouvillian(params)
        evals, evecs = np.linalg.eig(self.generator)
        self.uses_eigenbasis = np.linalg.cond(evecs) < MAX_EIGENBASIS_CONDITION
        self.eigenvalues = evals
        if self.uses_eigenbasis:
            self._v = evecs
            self._vinv = np.linalg.inv(evecs)

    def matrix(self, dt: float) -> np.ndarray:
        if dt < 0:
            raise ValueError(f"dt must be >= 0, got {dt}")
        if dt == 0:
            return np.eye(4, dtype=complex)
        if self.uses_eigenbasis:
            return (self._v * np.exp(self.eigenvalues * dt)) @ self._vinv
        return scipy.linalg.expm(self.generator * dt)

    def __call__(self, rho: np.ndarray, dt: float) -> np.ndarray:
        if dt == 0:
            return np.array(rho, dtype=complex)
        return unvec(self.matrix(dt) @ vec(rho))


@lru_cache(maxsize=64)
def propagator(params: AtomParams) -> Propagator:
    return Propagator(params)


def propagate(params: AtomParams, rho: np.ndarray, dt: float) -> np.ndarray:
    """Evolve any 2x2 operator (not necessarily a state) by ``dt``."""
    return propagator(params)(rho, dt)


@lru_cache(maxsize=64)
def _steady_state(params: AtomParams) -> np.ndarray:
    lv = liouvillian(params)
    _, s, vh = np.linalg.svd(lv)
    if s[-2] < 1e-10 * max(1.0, s[0]):
        raise RuntimeError("Liouvillian has a degenerate null space")
    rho = unvec(vh[-1].conj())
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    rho.setflags(write=False)
    return rho


def steady_state(params: AtomParams) -> np.ndarray:
    return _steady_state(params).copy()


def excited_population(params: AtomParams) -> float:
    return float(steady_state(params)[1, 1].real)


@dataclass(frozen=True)
class Event:
    time: float
    left: bool   # sigma_minus applied from the left (an E+ factor)
    right: bool  # sigma_plus applied from the right (an E- factor)


def event_list(idx: MultiIndex, points: Sequence[SpaceTimePoint]) -> list[Event] | None:
    """Ascending events for ``idx``; ``None`` when the correlator is identically zero."""
    if idx.k != len(points):
        raise ValueError(f"index has {idx.k} points but {len(points)} points were given")
    if any(n > 1 or m > 1 for n, m in idx.pairs):
        return None
    by_time: list[list] = []
    for (n, m), point in sorted(zip(idx.pairs, points), key=lambda pp: pp[1].retarded()):
        if n == 0 and m == 0:
            continue
        t = point.retarded()
        if by_time and abs(t - by_time[-1][0]) <= TIME_RESOLUTION:
            slot = by_time[-1]
            # a second factor on the same side at the same time squares sigma
            if (m and slot[1]) or (n and slot[2]):
                return None
            slot[1] = slot[1] or bool(m)
            slot[2] = slot[2] or bool(n)
        else:
            by_time.append([t, bool(m), bool(n)])
    return [Event(t, left, right) for t, left, right in by_time]


def ordered_correlator(params: AtomParams, idx: MultiIndex, points: Sequence[SpaceTimePoint]) -> complex:
    """Normally and time-ordered source-field correlation at the given points."""
    events = event_list(idx, points)
    if events is None:
        return 0j
    prop = propagator(params)
    x = steady_state(params)
    now = events[0].time if events else 0.0
    for ev in events:
        x = prop(x, ev.time - now)
        now = ev.time
        if ev.left:
            x = SIGMA_MINUS @ x
        if ev.right:
            x = x @ SIGMA_PLUS
    return complex(np.trace(x))


def intensity_correlation(params: AtomParams, taus: Iterable[float]) -> np.ndarray:
    """Stationary ``G2(tau)`` for each delay."""
    points = [SpaceTimePoint(0.0), None]
    idx = MultiIndex.of((1, 1), (1, 1))
    out = []
    for tau in taus:
        points[1] = SpaceTimePoint(float(tau))
        out.append(ordered_correlator(params, idx, points))
    return np.array(out)


def g2(params: AtomParams, taus: Iterable[float]) -> np.ndarray:
    """Normalised stationary intensity correlation ``G2(tau) / rho_ee^2``."""
    pop = excited_population(params)
    if pop <= 0:
        raise ValueError("g2 is undefined without excitation (rabi = 0)")
    return intensity_correlation(params, taus) / pop**2


def g2_resonant_closed_form(rabi: float, taus, gamma: float = 1.0) -> np.ndarray:
    """On-resonance g2 in closed form, for either sign of ``rabi^2 - gamma^2/16``."""
    taus = np.asarray(taus, dtype=float)
    mu = np.sqrt(complex(rabi**2 - gamma**2 / 16))
    # sin(mu tau)/mu, continuous through mu = 0
    sin_over_mu = taus * np.sinc(mu * taus / np.pi)
    val = 1 - np.exp(-0.75 * gamma * taus) * (np.cos(mu * taus) + 0.75 * gamma * sin_over_mu)
    return val.real


class AtomProvider:
    """Correlation provider over fixed space-time points of the fluorescent field."""

    thread_safe = True

    def __init__(self, params: AtomParams, points: Sequence[SpaceTimePoint]):
        if not points:
            raise ValueError("provider needs at least one point")
        self.params = params
        self.points = tuple(points)

    @property
    def k(self) -> int:
        return len(self.points)

    def evaluate(self, idx: MultiIndex) -> complex:
        return ordered_correlator(self.params, idx, self.points)

    def coincident(self, labels: Iterable[int]) -> bool:
        times = sorted(self.points[i].retarded() for i in set(labels))
        return any(b - a <= TIME_RESOLUTION for a, b in zip(times, times[1:]))


def as_provider(params: AtomParams, points: Sequence[SpaceTimePoint]) -> AtomProvider:
    return AtomProvider(params, points)
